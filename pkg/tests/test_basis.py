from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mixbasis import (
    BasisSpec,
    ConfigError,
    DataError,
    bernstein_eval,
    gamma_eval,
    gaussian_eval,
    parse_basis_spec,
    precompute_phi,
    tophat_eval,
    trig_eval,
)

unit_x = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


# ---------------------------------------------------------------- bernstein


def test_bernstein_pinned_values():
    assert bernstein_eval(6, 0, 0.0) == pytest.approx(7.0, abs=1e-12)
    assert bernstein_eval(3, 1, 0.5) == pytest.approx(1.5, abs=1e-12)


def test_bernstein_phi_row_at_zero():
    spec = BasisSpec.bernstein(1)
    row = spec.eval_matrix(np.array([0.0]))[0]
    np.testing.assert_allclose(row, [2.0, 0.0], atol=1e-14)


@given(
    d=st.integers(min_value=1, max_value=8),
    x=st.floats(min_value=1e-6, max_value=1 - 1e-6),
)
def test_bernstein_sum_identity(d, x):
    # sum_t Phi_t(x) = d + 1 everywhere on (0, 1)
    total = sum(bernstein_eval(d, t, x) for t in range(d + 1))
    assert total == pytest.approx(d + 1, rel=1e-12)


@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=6))
@settings(max_examples=30, deadline=None)
def test_bernstein_normalization(d, t):
    if t > d:
        return
    val, _ = quad(lambda x: bernstein_eval(d, t, x), 0.0, 1.0)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_bernstein_rejects_bad_index():
    with pytest.raises(DataError):
        bernstein_eval(3, 4, 0.5)
    with pytest.raises(ConfigError):
        BasisSpec.bernstein(-1)


# ------------------------------------------------------------------- gamma


def test_gamma_pinned_values():
    assert gamma_eval(5, 0, 0.0) == pytest.approx(5.0, abs=1e-12)
    assert gamma_eval(5, 2, 0.4) == pytest.approx(1.35335, abs=1e-5)


@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=5))
@settings(max_examples=30, deadline=None)
def test_gamma_normalization(big_t, t):
    if t >= big_t:
        return
    # the tail beyond 40/T carries < 1e-7 of the mass for t < T
    val, _ = quad(lambda x: gamma_eval(big_t, t, x), 0.0, 40.0 / big_t)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_gamma_rejects_negative_x():
    with pytest.raises(DataError):
        gamma_eval(5, 1, -0.2)


# ------------------------------------------------------------------ tophat


def test_tophat_pinned_values():
    assert tophat_eval(4, 2, 2.5) == 1.0
    assert tophat_eval(4, 2, 3.0) == 0.0  # bins are right-open
    assert tophat_eval(4, 0, -0.1) == 0.0


def test_tophat_last_bin_closed():
    assert tophat_eval(4, 3, 4.0) == 1.0
    assert tophat_eval(4, 3, 3.0) == 1.0


@given(st.integers(min_value=1, max_value=6), st.floats(min_value=0, max_value=1))
def test_tophat_exactly_one_bin_covers(big_t, u):
    # interior points land in exactly one bin
    x = u * big_t
    hits = sum(tophat_eval(big_t, t, x) for t in range(big_t))
    assert hits == 1.0


# ---------------------------------------------------------------- gaussian


def test_gaussian_pinned_values():
    # t is the signed slot index; t=0 is the unit normal at the origin
    assert gaussian_eval(7, 0, 0.0) == pytest.approx(0.398942, abs=1e-6)
    assert gaussian_eval(7, 3, 3.0) == pytest.approx(0.199471, abs=1e-6)


@given(
    t=st.integers(min_value=-3, max_value=3),
    x=st.floats(min_value=-8, max_value=8, allow_nan=False),
)
def test_gaussian_reflection(t, x):
    assert gaussian_eval(7, -t, -x) == pytest.approx(gaussian_eval(7, t, x), rel=1e-12)


@given(st.integers(min_value=-2, max_value=2))
@settings(max_examples=10, deadline=None)
def test_gaussian_normalization(t):
    sd = np.sqrt(abs(t) + 1.0)
    val, _ = quad(lambda x: gaussian_eval(5, t, x), t - 12 * sd, t + 12 * sd)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_gaussian_even_count_rejected():
    with pytest.raises(ConfigError):
        BasisSpec.gaussian(6)


# -------------------------------------------------------------------- trig


def test_trig_pinned_values():
    assert trig_eval(5, 0, 0.0) == pytest.approx(2.66667, abs=1e-5)
    assert abs(trig_eval(5, 0, 0.5)) < 1e-9


def test_trig_period_one():
    for x in (0.12, 0.4, 0.77):
        assert trig_eval(5, 2, x + 1.0) == pytest.approx(trig_eval(5, 2, x), rel=1e-12)
        assert trig_eval(5, 2, x - 1.0) == pytest.approx(trig_eval(5, 2, x), rel=1e-12)


@given(x=unit_x, big_t=st.sampled_from([3, 5, 7]))
def test_trig_completeness(x, big_t):
    # sum_t Phi_t(x) / T is constant in x (equals 1 by normalization)
    total = sum(trig_eval(big_t, t, x) for t in range(big_t)) / big_t
    assert total == pytest.approx(1.0, abs=1e-9)


@given(st.sampled_from([3, 5, 7]), st.integers(min_value=0, max_value=6))
@settings(max_examples=20, deadline=None)
def test_trig_normalization(big_t, t):
    if t >= big_t:
        return
    val, _ = quad(lambda x: trig_eval(big_t, t, x), 0.0, 1.0)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_trig_even_count_rejected():
    with pytest.raises(ConfigError):
        BasisSpec.trig(4)


# ----------------------------------------------------------- file tabulated


def test_file_basis_round_trip(tmp_path):
    grid = np.linspace(0.0, 1.0, 101)
    f0 = 2.0 * (1.0 - grid)
    f1 = 2.0 * grid
    path = tmp_path / "tab.csv"
    np.savetxt(path, np.column_stack([grid, f0, f1]), delimiter=",")
    spec = BasisSpec.from_file(path)
    assert spec.family == "file"
    assert spec.size == 2
    assert spec.evaluate(0, np.array([0.25]))[0] == pytest.approx(1.5, rel=1e-9)
    assert spec.evaluate(1, np.array([0.5]))[0] == pytest.approx(1.0, rel=1e-9)


def test_file_basis_rejects_negative(tmp_path):
    grid = np.linspace(0.0, 1.0, 11)
    bad = np.column_stack([grid, grid - 0.5])
    path = tmp_path / "bad.csv"
    np.savetxt(path, bad, delimiter=",")
    with pytest.raises((ConfigError, DataError)):
        BasisSpec.from_file(path)


# ------------------------------------------------------------------ parsing


@pytest.mark.parametrize(
    "text, family, size",
    [
        ("bernstein:d=3", "bernstein", 4),
        ("gamma:T=5", "gamma", 5),
        ("tophat:T=4", "tophat", 4),
        ("gauss:T=7", "gaussian", 7),
        ("trig:T=5", "trig", 5),
    ],
)
def test_parse_basis_spec(text, family, size):
    spec = parse_basis_spec(text)
    assert spec.family == family
    assert spec.size == size


def test_parse_basis_spec_rejects_garbage():
    for bad in ("bernstein", "bernstein:k=3", "warp:T=5", "gamma:T=0"):
        with pytest.raises(ConfigError):
            parse_basis_spec(bad)


# ----------------------------------------------------------- precompute_phi


def test_precompute_phi_shapes_and_names():
    x = np.array([[0.2, 0.8], [0.5, 0.1]])
    phi = precompute_phi(x, [BasisSpec.bernstein(2), BasisSpec.bernstein(1)])
    assert phi.N == 2 and phi.M == 2
    assert list(phi.sizes) == [3, 2]
    flat, off = phi.flattened()
    assert flat.shape == (2, 5)
    assert list(off) == [0, 3, 5]


def test_precompute_phi_domain_error_names_datum():
    x = np.array([[0.2], [1.4]])
    with pytest.raises(DataError, match=r"x\[1,0\]"):
        precompute_phi(x, [BasisSpec.bernstein(2)])


def test_phi_tensor_rejects_negative_entries():
    with pytest.raises(DataError):
        from mixbasis import PhiTensor

        PhiTensor([np.array([[1.0, -0.1]])])
