"""Batch command line front door.

Subcommands: ``transform`` (column-wise preprocessing), ``fit-em``
(fixed-k fit), ``fit-gibbs`` (sample k and the clustering), ``analyze``
(recompute summaries from stored samples), ``synth`` (benchmark data),
plus a hidden ``oracle`` for exact tiny-instance posteriors.

Every output file embeds the seed, a hash of the resolved configuration,
and the package version, so any artifact can be traced back to the exact
run that produced it.  Exit codes: 0 success, 1 usage or configuration
error, 2 data error, 3 runtime guard.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from ._errors import ConfigError, DataError, GuardError
from . import analysis
from .analysis import (
    consensus_matrix,
    consensus_select,
    density_curve,
    k_histogram,
    map_k,
    stream_consensus,
    stream_select,
    theta_map_from_gh,
)
from .basis import parse_basis_spec, precompute_phi
from .data import apply_transforms, load_csv, parse_transform_spec
from .em import fit_em, hard_assign
from .oracle import exact_posterior
from .sampler import KPrior, iter_jsonl_samples, read_jsonl_header, run_sampler
from .synth import generate, small_spec, synth1_spec, synth2_spec

# Over this many N x samples cells the consensus pass must be requested
# explicitly in streaming mode.
CONSENSUS_BUDGET_CELLS = 50_000_000


@dataclass(frozen=True)
class RunConfig:
    """Resolved invocation: command plus every option that affects the
    output, hashed so reruns are attributable."""

    command: str
    options: tuple

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        # output_dir only relocates files; identical runs must hash alike
        opts = {
            k: v for k, v in vars(args).items() if k not in ("command", "output_dir")
        }
        return cls(command=args.command, options=tuple(sorted(opts.items())))

    @property
    def hash_hex(self) -> str:
        blob = json.dumps([self.command, self.options], sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def meta(self, seed: int) -> dict:
        return {"seed": seed, "config_hash": self.hash_hex, "version": __version__}


class _Parser(argparse.ArgumentParser):
    # argparse exits on its own; route usage problems through ConfigError
    # so main() can map them to exit code 1 uniformly.
    def error(self, message):
        raise ConfigError(message)


def _add_common(sp, *, seed=True, output=True):
    if output:
        sp.add_argument("--output-dir", default=".", help="directory for output files")
    if seed:
        sp.add_argument("--seed", type=int, default=0, help="random seed, recorded in outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixbasis", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mixbasis {__version__}")
    subs = parser.add_subparsers(
        dest="command", metavar="{transform,fit-em,fit-gibbs,analyze,synth}"
    )

    sp = subs.add_parser("transform", help="apply column-wise transforms to a CSV")
    sp.add_argument("--input", required=True)
    sp.add_argument("--transform", required=True, help='e.g. "cdf" or "x1=cdf,x2=likert:L=5"')
    _add_common(sp)

    sp = subs.add_parser("fit-em", help="fixed-k maximum a posteriori fit")
    sp.add_argument("--input", required=True)
    sp.add_argument("--basis", required=True, help='e.g. "bernstein:d=3" or per-item pairs')
    sp.add_argument("--transform", default=None)
    sp.add_argument("--k", required=True, type=int, help="number of components")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--restarts", type=int, default=1)
    _add_common(sp)

    sp = subs.add_parser("fit-gibbs", help="sample the posterior over (k, clustering)")
    sp.add_argument("--input", required=True)
    sp.add_argument("--basis", required=True)
    sp.add_argument("--transform", default=None)
    sp.add_argument("--burn-in", type=int, default=2500, help="burn-in sweeps")
    sp.add_argument("--sweeps", type=int, default=25000, help="sampling sweeps")
    sp.add_argument("--stride", type=int, default=1, help="sweeps between snapshots")
    sp.add_argument("--prior", default="uniform", help="uniform | table:<path>")
    sp.add_argument(
        "--stream-consensus",
        action="store_true",
        help="two-pass consensus from the samples file instead of in memory",
    )
    _add_common(sp)

    sp = subs.add_parser("analyze", help="recompute summaries from a samples JSONL file")
    sp.add_argument("--input", required=True, help="samples JSONL from fit-gibbs")
    sp.add_argument("--stream-consensus", action="store_true", help=argparse.SUPPRESS)
    _add_common(sp, seed=False)

    sp = subs.add_parser("synth", help="generate a benchmark dataset plus truth labels")
    sp.add_argument("--spec", choices=("synth1", "synth2", "small"), default="synth1")
    sp.add_argument("--n", type=int, default=None, help="override the sample size")
    _add_common(sp)

    sp = subs.add_parser("oracle")  # hidden: exact tiny-instance posterior
    sp.add_argument("--input", required=True)
    sp.add_argument("--basis", required=True)
    sp.add_argument("--transform", default=None)
    sp.add_argument("--prior", default="uniform")
    _add_common(sp, seed=True, output=False)

    return parser


def _comment_lines(meta: dict) -> list[str]:
    return [f"# {key}: {meta[key]}" for key in ("seed", "config_hash", "version")]


def _write_csv(path: Path, names, rows, meta: dict) -> None:
    with open(path, "w", newline="") as fh:
        for line in _comment_lines(meta):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(names)
        writer.writerows(rows)


def _write_json(path: Path, payload: dict, meta: dict) -> None:
    with open(path, "w") as fh:
        json.dump({**meta, **payload}, fh, indent=1)
        fh.write("\n")


def _outdir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def parse_basis_flag(arg: str, item_names) -> list:
    """One global spec, or comma-separated item=spec pairs covering every
    item.  A chunk is a pair when the text before its first '=' has no ':'
    (so "bernstein:d=3" parses as a global spec, "x1=bernstein:d=3" as a
    pair for item x1)."""
    head = arg.split("=", 1)[0]
    if "," not in arg and (("=" not in arg) or (":" in head)):
        spec = parse_basis_spec(arg)
        return [spec] * len(item_names)
    by_name = {}
    for chunk in arg.split(","):
        name, sep, text = chunk.partition("=")
        if not sep:
            raise ConfigError(f"expected item=spec, got {chunk!r}")
        by_name[name.strip()] = parse_basis_spec(text.strip())
    unknown = set(by_name) - set(item_names)
    if unknown:
        raise ConfigError(f"basis given for unknown items: {sorted(unknown)}")
    missing = [nm for nm in item_names if nm not in by_name]
    if missing:
        raise ConfigError(f"no basis for items: {missing}")
    return [by_name[nm] for nm in item_names]


def _parse_prior(arg: str, n_obs: int) -> KPrior:
    if arg == "uniform":
        return KPrior.uniform(n_obs)
    head, sep, path = arg.partition(":")
    if head == "table" and sep:
        probs = load_csv(path.strip(), has_header=None).x[:, 0]
        return KPrior.from_table(probs)
    raise ConfigError(f"prior must be 'uniform' or 'table:<path>', got {arg!r}")


def _load_dataset(args):
    data = load_csv(args.input)
    if getattr(args, "transform", None):
        tspec = parse_transform_spec(args.transform, data.item_names)
        data = apply_transforms(data, tspec)
    return data


def _curve_grid(spec, col: np.ndarray, points: int = 201) -> np.ndarray:
    """Plot grid: the full domain when bounded, else the data range padded
    by 5 percent and clipped to the domain."""
    lo, hi = spec.domain
    if np.isfinite(lo) and np.isfinite(hi):
        return np.linspace(lo, hi, points)
    dlo, dhi = float(np.min(col)), float(np.max(col))
    pad = 0.05 * (dhi - dlo) or 1.0
    glo = dlo - pad if not np.isfinite(lo) else max(lo, dlo - pad)
    ghi = dhi + pad if not np.isfinite(hi) else min(hi, dhi + pad)
    return np.linspace(glo, ghi, points)


def _write_density_curves(out: Path, theta, specs, data, meta) -> None:
    k = theta[0].shape[0]
    for j, (spec, name) in enumerate(zip(specs, data.item_names)):
        grid = _curve_grid(spec, data.x[:, j])
        for r in range(1, k + 1):
            curve = density_curve(theta[j][r - 1], spec, grid)
            _write_csv(
                out / f"density_c{r}_{name}.csv",
                ("x", "density"),
                zip(curve.grid, curve.values),
                meta,
            )


def cmd_transform(args) -> int:
    cfg = RunConfig.from_args(args)
    data = load_csv(args.input)
    tspec = parse_transform_spec(args.transform, data.item_names)
    out = apply_transforms(data, tspec)
    _write_csv(
        _outdir(args) / "transformed.csv",
        out.item_names,
        out.x,
        cfg.meta(args.seed),
    )
    return 0


def cmd_fit_em(args) -> int:
    cfg = RunConfig.from_args(args)
    meta = cfg.meta(args.seed)
    data = _load_dataset(args)
    specs = parse_basis_flag(args.basis, data.item_names)
    phi = precompute_phi(data, specs)
    fit = fit_em(phi, args.k, tol=args.tol, restarts=args.restarts, seed=args.seed)
    out = _outdir(args)
    _write_json(out / "fit.json", json.loads(fit.to_json()), meta)
    labels = hard_assign(fit.resp)
    _write_csv(
        out / "assignments.csv",
        ("index", "component"),
        enumerate(labels.tolist()),
        meta,
    )
    _write_density_curves(out, fit.params.theta, specs, data, meta)
    return 0


def cmd_fit_gibbs(args) -> int:
    cfg = RunConfig.from_args(args)
    meta = cfg.meta(args.seed)
    data = _load_dataset(args)
    specs = parse_basis_flag(args.basis, data.item_names)
    phi = precompute_phi(data, specs)
    prior = _parse_prior(args.prior, phi.N)
    samples = run_sampler(
        phi,
        prior,
        burn_in_sweeps=args.burn_in,
        sample_sweeps=args.sweeps,
        stride=args.stride,
        seed=args.seed,
        init="one",
    )
    out = _outdir(args)
    samples_path = out / "samples.jsonl"
    samples.save_jsonl(samples_path, extra_header=meta)

    hist = k_histogram(samples)
    _write_csv(
        out / "k_histogram.csv",
        ("k", "probability"),
        sorted(hist.items()),
        meta,
    )

    cells = samples.N * len(samples)
    if args.stream_consensus:
        cm = stream_consensus(
            (g for _, _, g, _ in iter_jsonl_samples(samples_path)), samples.N
        )
        sel = stream_select(
            (g for _, _, g, _ in iter_jsonl_samples(samples_path)), cm
        )
    elif cells > CONSENSUS_BUDGET_CELLS:
        raise GuardError(
            f"consensus pass over N x samples = {cells} cells exceeds the "
            f"in-memory budget ({CONSENSUS_BUDGET_CELLS}); rerun with --stream-consensus"
        )
    else:
        cm = consensus_matrix(samples)
        sel = consensus_select(samples, cm)
    _write_consensus(out / "consensus.csv", cm.C, meta)

    k_sel, g_sel, h_sel = samples.snapshot(sel)
    _write_csv(
        out / "representative_assignments.csv",
        ("index", "component"),
        enumerate(g_sel.tolist()),
        meta,
    )
    theta = theta_map_from_gh(g_sel, h_sel, samples.sizes)
    _write_density_curves(out, theta, specs, data, meta)
    _write_json(
        out / "gibbs_summary.json",
        {
            "map_k": map_k(samples),
            "k_histogram": {str(k): v for k, v in sorted(hist.items())},
            "selected_sample": sel,
            "selected_sweep": int(samples.sweeps[sel]),
            "selected_k": k_sel,
            "steps_per_sec": samples.steps_per_sec,
            "prior": samples.prior,
        },
        meta,
    )
    return 0


def _write_consensus(path: Path, c: np.ndarray, meta: dict) -> None:
    with open(path, "w", newline="") as fh:
        for line in _comment_lines(meta):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        for row in c:
            writer.writerow([f"{v:.6g}" for v in row])


def cmd_analyze(args) -> int:
    cfg = RunConfig.from_args(args)
    header = read_jsonl_header(args.input)
    meta = cfg.meta(int(header.get("seed", 0)))
    sizes = np.asarray(header["T"], dtype=np.int64)
    n_obs, n_items = int(header["N"]), int(header["M"])
    out = _outdir(args)

    # one streaming pass for the k histogram and the per-item MI averages
    k_counts: dict[int, int] = {}
    mi_sums = np.zeros(n_items)
    count = 0
    for _, k, g, h in iter_jsonl_samples(args.input):
        k_counts[k] = k_counts.get(k, 0) + 1
        for j in range(n_items):
            m = np.zeros((k, sizes[j]))
            np.add.at(m, (g - 1, h[:, j]), 1.0)
            mi_sums[j] += analysis._mi_bits(m)
        count += 1
    if count == 0:
        raise DataError(f"{args.input}: no sample records")
    _write_csv(
        out / "k_histogram.csv",
        ("k", "probability"),
        sorted((k, c / count) for k, c in k_counts.items()),
        meta,
    )
    names = header.get("item_names") or [f"item_{j + 1}" for j in range(n_items)]
    ranking = sorted(zip(names, mi_sums / count), key=lambda p: -p[1])
    _write_csv(out / "mi_ranking.csv", ("item", "bits"), ranking, meta)

    cm = stream_consensus((g for _, _, g, _ in iter_jsonl_samples(args.input)), n_obs)
    sel = stream_select((g for _, _, g, _ in iter_jsonl_samples(args.input)), cm)
    _write_consensus(out / "consensus.csv", cm.C, meta)
    for idx, (_, _, g, _) in enumerate(iter_jsonl_samples(args.input)):
        if idx == sel:
            _write_csv(
                out / "representative_assignments.csv",
                ("index", "component"),
                enumerate(g.tolist()),
                meta,
            )
            break
    return 0


def cmd_synth(args) -> int:
    cfg = RunConfig.from_args(args)
    meta = cfg.meta(args.seed)
    maker = {"synth1": synth1_spec, "synth2": synth2_spec, "small": small_spec}[args.spec]
    spec = maker(args.n) if args.n else maker()
    data, g, _h = generate(spec, seed=args.seed)
    out = _outdir(args)
    _write_csv(out / "data.csv", data.item_names, data.x, meta)
    _write_csv(out / "truth.csv", ("index", "group"), enumerate(g.tolist()), meta)
    return 0


def cmd_oracle(args) -> int:
    cfg = RunConfig.from_args(args)
    data = _load_dataset(args)
    specs = parse_basis_flag(args.basis, data.item_names)
    phi = precompute_phi(data, specs)
    prior = _parse_prior(args.prior, phi.N)
    post = exact_posterior(phi, prior)
    payload = {
        **cfg.meta(args.seed),
        "k_marginal": {str(k): float(p) for k, p in enumerate(post.k_marginal) if p > 0},
        "coassign": post.coassign.tolist(),
        "log_evidence": post.log_evidence,
    }
    json.dump(payload, sys.stdout, indent=1)
    sys.stdout.write("\n")
    return 0


_DISPATCH = {
    "transform": cmd_transform,
    "fit-em": cmd_fit_em,
    "fit-gibbs": cmd_fit_gibbs,
    "analyze": cmd_analyze,
    "synth": cmd_synth,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        return _DISPATCH[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
