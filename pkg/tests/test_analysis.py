from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixbasis import (
    BasisSpec,
    DataError,
    SampleSet,
    best_label_mapping,
    consensus_matrix,
    consensus_select,
    density_curve,
    k_histogram,
    map_k,
    mutual_information,
    mutual_information_all,
    permuted_accuracy,
    theta_map_from_g,
    theta_map_from_gh,
)
from mixbasis.analysis import stream_consensus, stream_select
from mixbasis.oracle import grid_simplex_optimum

from conftest import make_phi


def sample_set(k_list, g_list, h_list, sizes) -> SampleSet:
    g = np.asarray(g_list, dtype=np.int16)
    h = np.asarray(h_list, dtype=np.int8)
    return SampleSet(
        k=np.asarray(k_list, dtype=np.int64),
        g=g,
        h=h,
        sweeps=np.arange(len(k_list), dtype=np.int64),
        sizes=np.asarray(sizes, dtype=np.int64),
        seed=0,
        burn_in=0,
        stride=1,
        prior="uniform:%d" % g.shape[1],
    )


# ------------------------------------------------------------------ k stats


def test_k_histogram_pinned():
    ss = sample_set([3, 3, 2], [[1]] * 3, [[[0]]] * 3, [2])
    assert k_histogram(ss) == {3: pytest.approx(2 / 3), 2: pytest.approx(1 / 3)}
    assert map_k(ss) == 3


def test_map_k_tie_takes_smaller():
    ss = sample_set([2, 3], [[1]] * 2, [[[0]]] * 2, [2])
    assert map_k(ss) == 2


# ---------------------------------------------------------------- consensus


def test_consensus_single_sample_binary():
    ss = sample_set([2], [[1, 1, 2]], [[[0], [0], [0]]], [2])
    cm = consensus_matrix(ss)
    assert set(np.unique(cm.C)) <= {0.0, 1.0}
    assert cm.C[0, 1] == 1.0 and cm.C[0, 2] == 0.0
    np.testing.assert_allclose(np.diag(cm.C), 1.0)


def test_consensus_two_samples_half():
    ss = sample_set(
        [1, 2],
        [[1, 1], [1, 2]],
        [[[0], [0]], [[0], [0]]],
        [2],
    )
    cm = consensus_matrix(ss)
    assert cm.C[0, 1] == pytest.approx(0.5)
    assert cm.n_samples == 2


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_consensus_invariant_under_relabeling(seed):
    rng = np.random.default_rng(seed)
    n, s = 7, 12
    g = rng.integers(1, 4, size=(s, n))
    g = np.maximum(g, 1)
    # force label contiguity per sample
    for row in range(s):
        _, g[row] = np.unique(g[row], return_inverse=True)
        g[row] += 1
    h = np.zeros((s, n, 1), dtype=np.int8)
    ss = sample_set(g.max(axis=1), g, h, [2])
    base = consensus_matrix(ss).C
    # permute labels independently in every sample
    g2 = g.copy()
    for row in range(s):
        k = g2[row].max()
        perm = rng.permutation(k) + 1
        g2[row] = perm[g2[row] - 1]
    ss2 = sample_set(g2.max(axis=1), g2, h, [2])
    np.testing.assert_allclose(consensus_matrix(ss2).C, base, atol=1e-12)


def test_consensus_select_picks_concordant_sample():
    # two identical partitions and one outlier: the repeated one wins
    ss = sample_set(
        [2, 2, 2],
        [[1, 1, 2, 2], [2, 2, 1, 1], [1, 2, 1, 2]],
        np.zeros((3, 4, 1), dtype=np.int8),
        [2],
    )
    cm = consensus_matrix(ss)
    assert consensus_select(ss, cm) == 0  # earliest of the two equivalent wins


def test_stream_paths_match_batch(tmp_path):
    rng = np.random.default_rng(44)
    from mixbasis import run_sampler

    phi = make_phi(rng.random((6, 2)))
    ss = run_sampler(phi, burn_in_sweeps=10, sample_sweeps=40, seed=1)
    cm = consensus_matrix(ss)
    cm2 = stream_consensus((ss.g[s] for s in range(len(ss))), ss.N)
    np.testing.assert_allclose(cm2.C, cm.C, atol=1e-15)
    assert stream_select(
        (ss.g[s] for s in range(len(ss))), cm
    ) == consensus_select(ss, cm)


# -------------------------------------------------------------------- theta


def test_theta_map_from_gh_pinned():
    th = theta_map_from_gh(np.array([1, 1, 1, 1]), np.array([[0], [0], [0], [1]]), [2])
    np.testing.assert_allclose(th[0], [[0.75, 0.25]])


def test_theta_map_from_gh_rejects_empty_component():
    with pytest.raises(DataError):
        theta_map_from_gh(np.array([1, 3]), np.zeros((2, 1), dtype=int), [2])


def test_theta_map_from_g_matches_grid_oracle():
    rng = np.random.default_rng(10)
    phi = make_phi(rng.random((8, 1)), d=2)
    g = np.array([1, 1, 1, 1, 2, 2, 2, 2])
    theta = theta_map_from_g(g, phi)
    for r, rows in ((1, range(0, 4)), (2, range(4, 8))):
        block = phi.mats[0][list(rows)]
        ref = grid_simplex_optimum(block)
        got = float(np.prod(block @ theta[0][r - 1]))
        assert got == pytest.approx(ref.objective, rel=1e-6)


# ------------------------------------------------------------------ density


def test_density_curve_uniform_theta_is_flat():
    spec = BasisSpec.bernstein(1)
    dc = density_curve(np.array([0.5, 0.5]), spec, np.linspace(0, 1, 9))
    np.testing.assert_allclose(dc.values, np.ones(9), atol=1e-12)
    assert dc.integral() == pytest.approx(1.0, abs=1e-9)


def test_density_curve_is_linear_in_theta():
    spec = BasisSpec.bernstein(3)
    grid = np.linspace(0, 1, 33)
    t1 = np.array([0.7, 0.1, 0.1, 0.1])
    t2 = np.array([0.1, 0.2, 0.3, 0.4])
    a = 0.35
    mix = density_curve(a * t1 + (1 - a) * t2, spec, grid)
    np.testing.assert_allclose(
        mix.values,
        a * density_curve(t1, spec, grid).values
        + (1 - a) * density_curve(t2, spec, grid).values,
        atol=1e-12,
    )


def test_density_curve_validates_simplex_and_domain():
    spec = BasisSpec.bernstein(1)
    with pytest.raises(DataError):
        density_curve(np.array([0.7, 0.7]), spec, np.linspace(0, 1, 5))
    with pytest.raises(DataError):
        density_curve(np.array([0.5, 0.5]), spec, np.array([-0.2, 0.5]))


# --------------------------------------------------------------------- m.i.


def test_mi_pinned_cases():
    # independent counts: zero
    ind = sample_set([2], [[1, 1, 2, 2]], [[[0], [1], [0], [1]]], [2])
    assert mutual_information(ind, 0) == 0.0
    # diagonal k=T=2: one full bit
    diag = sample_set([2], [[1, 2]], [[[0], [1]]], [2])
    assert mutual_information(diag, 0) == 1.0
    # m = [[2,0],[1,1]]
    mixed = sample_set([2], [[1, 1, 2, 2]], [[[0], [0], [0], [1]]], [2])
    assert mutual_information(mixed, 0) == pytest.approx(0.311278, abs=1e-3)


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_mi_bounded_by_log_alphabet(seed):
    rng = np.random.default_rng(seed)
    n = 10
    g = rng.integers(1, 4, size=n)
    _, g = np.unique(g, return_inverse=True)
    g = g + 1
    h = rng.integers(0, 3, size=(n, 1))
    ss = sample_set([g.max()], [g], [h], [3])
    mi = mutual_information(ss, 0)
    assert -1e-12 <= mi <= min(np.log2(g.max()), np.log2(3)) + 1e-12


def test_mi_invariant_under_relabeling():
    rng = np.random.default_rng(5)
    g = np.array([1, 2, 2, 3, 1, 3, 2, 1])
    h = rng.integers(0, 2, size=(8, 1))
    a = sample_set([3], [g], [h], [2])
    perm = np.array([3, 1, 2])
    b = sample_set([3], [perm[g - 1]], [h], [2])
    assert mutual_information(a, 0) == pytest.approx(mutual_information(b, 0), abs=1e-12)


def test_mi_ranking_orders_items():
    # item 0 fully informative, item 1 independent
    g = [1, 1, 2, 2]
    h = [[[0, 0], [0, 1], [1, 0], [1, 1]]]
    ss = sample_set([2], [g], h, [2, 2])
    rank = mutual_information_all(ss)
    assert rank.bits[0] == pytest.approx(1.0)
    assert rank.bits[1] == pytest.approx(0.0, abs=1e-12)
    assert rank.per_sample.shape == (1, 2)


# ----------------------------------------------------------------- accuracy


def test_permuted_accuracy_pinned():
    assert permuted_accuracy(
        np.array([1, 1, 2, 2]), np.array([2, 2, 2, 1])
    ) == pytest.approx(0.75)


def test_permuted_accuracy_perfect_after_relabel():
    pred = np.array([2, 2, 1, 1, 3])
    truth = np.array([1, 1, 2, 2, 3])
    assert permuted_accuracy(pred, truth) == 1.0
    mapping = best_label_mapping(pred, truth)
    assert mapping[2] == 1 and mapping[1] == 2 and mapping[3] == 3


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_permuted_accuracy_invariant_under_pred_relabel(seed):
    rng = np.random.default_rng(seed)
    n = 12
    truth = rng.integers(1, 4, size=n)
    pred = rng.integers(1, 4, size=n)
    base = permuted_accuracy(pred, truth)
    perm = rng.permutation(3) + 1
    assert permuted_accuracy(perm[pred - 1], truth) == pytest.approx(base, abs=1e-12)


def test_permuted_accuracy_mismatched_k():
    # more predicted labels than true groups still scores
    pred = np.array([1, 2, 3, 4])
    truth = np.array([1, 1, 2, 2])
    acc = permuted_accuracy(pred, truth)
    assert acc == pytest.approx(0.5)
