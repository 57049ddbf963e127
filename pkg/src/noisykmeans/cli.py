"""Command-line interface: replicated experiments, density export, single fits.

Exit codes: 0 on success, 2 on invalid arguments or malformed input
files, 1 on runtime failure.  All file output is deterministic for a
fixed command line: floats are rendered with 17 significant digits (CSV)
or ``repr`` fidelity (JSON), and rows follow a fixed order.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .cluster import Codebook, FitResult, assign_points, lloyd_kmeans_fit, noisy_kmeans_fit
from .density import DensityEstimate, estimate_density_fft
from .experiments import ReplicationSummary, ScenarioConfig, run_replications
from .grid import Grid2D
from .spectral import Bandwidth, NoiseModel

__all__ = [
    "UsageError",
    "experiment_csv_text",
    "experiment_json_text",
    "fit_csv_text",
    "fit_json_text",
    "grid_csv_text",
    "grid_json_text",
    "main",
    "parse_grid_json",
]


class UsageError(Exception):
    """Invalid command-line input; maps to exit code 2."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _is_pow2(m: int) -> bool:
    return m >= 4 and (m & (m - 1)) == 0


# ---------------------------------------------------------------------------
# serialization


def grid_csv_text(est: DensityEstimate) -> str:
    """Density grid as ``x,y,value`` rows (row-major), with a leading
    comment carrying the pre-clip minimum."""
    x1, x2 = est.grid.axes()
    vals = est.grid.values
    lines = [f"# raw_min={_fmt(est.raw_min)}", "x,y,value"]
    for a in range(len(x1)):
        xa = _fmt(x1[a])
        row = vals[a]
        for b in range(len(x2)):
            lines.append(f"{xa},{_fmt(x2[b])},{_fmt(row[b])}")
    return "\n".join(lines) + "\n"


def grid_json_text(est: DensityEstimate) -> str:
    obj = {
        "origin": list(est.grid.origin),
        "spacing": list(est.grid.spacing),
        "counts": list(est.grid.counts),
        "raw_min": est.raw_min,
        "clipped": est.clipped,
        "values": est.grid.values.tolist(),
    }
    return json.dumps(obj, indent=2) + "\n"


def parse_grid_json(text: str) -> DensityEstimate:
    """Inverse of ``grid_json_text``: re-emitting the parsed estimate
    reproduces the input bytes."""
    obj = json.loads(text)
    grid = Grid2D(
        (obj["origin"][0], obj["origin"][1]),
        (obj["spacing"][0], obj["spacing"][1]),
        np.asarray(obj["values"], dtype=float),
    )
    if list(grid.counts) != list(obj["counts"]):
        raise ValueError(f"counts {obj['counts']} do not match values shape {grid.counts}")
    return DensityEstimate(grid, float(obj["raw_min"]), bool(obj["clipped"]))


def experiment_csv_text(summary: ReplicationSummary) -> str:
    """Per-replication risk rows for both algorithms, then summary rows."""
    u = summary.config.u
    lines = ["replication,algorithm,u,risk,failed"]
    for alg in ("lloyd", "noisy"):
        for rec in summary.records:
            risk = rec.risk_lloyd if alg == "lloyd" else rec.risk_noisy
            failed = int(risk > 0.2)
            lines.append(f"{rec.replication},{alg},{u},{_fmt(risk)},{failed}")
    lines.append("")
    lines.append("u,algorithm,mean,sd,ci_lo,ci_hi,failures")
    for alg, stats in (("lloyd", summary.lloyd), ("noisy", summary.noisy)):
        lines.append(
            f"{u},{alg},{_fmt(stats.mean)},{_fmt(stats.sd)},"
            f"{_fmt(stats.ci_lo)},{_fmt(stats.ci_hi)},{stats.failures}"
        )
    return "\n".join(lines) + "\n"


def experiment_json_text(summary: ReplicationSummary) -> str:
    cfg = summary.config
    risks = []
    for alg in ("lloyd", "noisy"):
        for rec in summary.records:
            risk = rec.risk_lloyd if alg == "lloyd" else rec.risk_noisy
            risks.append(
                {
                    "replication": rec.replication,
                    "algorithm": alg,
                    "u": cfg.u,
                    "risk": risk,
                    "failed": bool(risk > 0.2),
                    "bandwidth": [rec.bandwidth.lam1, rec.bandwidth.lam2],
                }
            )
    stats = []
    for alg, st in (("lloyd", summary.lloyd), ("noisy", summary.noisy)):
        stats.append(
            {
                "u": cfg.u,
                "algorithm": alg,
                "mean": st.mean,
                "sd": st.sd,
                "ci_lo": st.ci_lo,
                "ci_hi": st.ci_hi,
                "failures": st.failures,
            }
        )
    obj = {
        "family": cfg.family,
        "u": cfg.u,
        "n": cfg.n,
        "R": summary.R,
        "seed": cfg.seed,
        "risks": risks,
        "summary": stats,
    }
    return json.dumps(obj, indent=2) + "\n"


def fit_csv_text(fit: FitResult, assignments: np.ndarray) -> str:
    lines = [
        f"# iterations={fit.iterations} converged={int(fit.converged)}"
        f" reseed_events={fit.reseed_events}",
        "index,center_x,center_y",
    ]
    for j, (cx, cy) in enumerate(fit.codebook.centers):
        lines.append(f"{j},{_fmt(cx)},{_fmt(cy)}")
    lines.append("")
    lines.append("index,cluster")
    for i, lab in enumerate(assignments):
        lines.append(f"{i},{int(lab)}")
    lines.append("")
    lines.append("iteration,distortion")
    for t, v in enumerate(fit.distortion_trace, start=1):
        lines.append(f"{t},{_fmt(v)}")
    return "\n".join(lines) + "\n"


def fit_json_text(fit: FitResult, assignments: np.ndarray) -> str:
    obj = {
        "k": fit.codebook.k,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "reseed_events": fit.reseed_events,
        "centers": fit.codebook.centers.tolist(),
        "assignments": [int(a) for a in assignments],
        "distortion_trace": list(fit.distortion_trace),
    }
    return json.dumps(obj, indent=2) + "\n"


def _write_text(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# argument handling


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisykmeans",
        description="Clustering of noisy observations via kernel deconvolution.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_input: bool) -> None:
        p.add_argument("--family", choices=("mod1", "mod2"), help="simulation family")
        p.add_argument("--u", type=int, help="separation / noise level, 1..10")
        p.add_argument("--n", type=int, default=None, help="sample size (family default)")
        p.add_argument("--seed", type=int, default=0, help="base seed")
        p.add_argument("--grid", type=int, default=128, help="nodes per axis (power of two)")
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if with_input:
            p.add_argument("--in", dest="infile", default=None,
                           help="headerless x,y CSV of observed points")
            p.add_argument("--noise", default=None,
                           help="noise model, e.g. none, gaussian:0,3, laplace:1,1")

    pe = sub.add_parser("experiment", help="replicated two-algorithm comparison")
    add_common(pe, with_input=False)
    pe.add_argument("--R", type=int, default=100, help="number of replications")
    pe.add_argument("--bandwidth", default="tuned",
                    help="per-axis bandwidth 'F,F' or 'tuned'")
    pe.add_argument("--threads", type=int, default=1, help="replication parallelism")

    pd = sub.add_parser("density", help="export a deconvolution density grid")
    add_common(pd, with_input=True)
    pd.add_argument("--bandwidth", required=True, help="per-axis bandwidth 'F,F'")

    pf = sub.add_parser("fit", help="single noisy k-means fit")
    add_common(pf, with_input=True)
    pf.add_argument("--bandwidth", required=True, help="per-axis bandwidth 'F,F'")
    pf.add_argument("--k", type=int, default=None, help="number of centers")

    return parser


def _parse_bandwidth(text: str, allow_tuned: bool) -> Bandwidth | str:
    if text == "tuned":
        if allow_tuned:
            return "tuned"
        raise UsageError("'tuned' bandwidth is only valid for the experiment command")
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"bandwidth must be 'F,F', got {text!r}")
    try:
        lam1, lam2 = float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"bandwidth must be 'F,F', got {text!r}") from None
    try:
        return Bandwidth(lam1, lam2)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _parse_noise(text: str) -> NoiseModel:
    kind, sep, rest = text.partition(":")
    if kind == "none":
        if sep:
            raise UsageError(f"noise 'none' takes no scales, got {text!r}")
        return NoiseModel.none()
    if kind not in ("gaussian", "laplace"):
        raise UsageError(f"noise kind must be none, gaussian or laplace, got {text!r}")
    parts = rest.split(",")
    if len(parts) != 2:
        raise UsageError(f"noise must be '{kind}:F,F', got {text!r}")
    try:
        s1, s2 = float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"noise must be '{kind}:F,F', got {text!r}") from None
    try:
        if kind == "gaussian":
            return NoiseModel.gaussian(s1, s2)
        return NoiseModel.laplace(s1, s2)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _parse_counts(grid: int) -> tuple[int, int]:
    if not _is_pow2(grid):
        raise UsageError(f"--grid must be a power of two >= 4, got {grid}")
    return (grid, grid)


def _scenario(args: argparse.Namespace) -> ScenarioConfig:
    if args.family is None or args.u is None:
        raise UsageError("--family and --u are required unless --in is given")
    try:
        return ScenarioConfig(family=args.family, u=args.u, n=args.n, seed=args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _load_points(path: str) -> np.ndarray:
    try:
        pts = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from None
    except ValueError as e:
        raise UsageError(f"malformed input file {path}: {e}") from None
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0 or not np.isfinite(pts).all():
        raise UsageError(f"input file {path} must hold finite x,y rows")
    return pts


def _resolve_input(args: argparse.Namespace) -> tuple[np.ndarray, NoiseModel, int]:
    """Observed points, noise model and default k for density/fit commands."""
    if args.infile is not None:
        if args.family is not None or args.u is not None:
            raise UsageError("give either --in or --family/--u, not both")
        points = _load_points(args.infile)
        model = NoiseModel.none()
        default_k = 2
    else:
        config = _scenario(args)
        points = config.sample(config.seed).z
        model = config.noise_model()
        default_k = config.k
    if args.noise is not None:
        model = _parse_noise(args.noise)
    return points, model, default_k


# ---------------------------------------------------------------------------
# commands


def _cmd_experiment(args: argparse.Namespace) -> int:
    config = _scenario(args)
    counts = _parse_counts(args.grid)
    bw = _parse_bandwidth(args.bandwidth, allow_tuned=True)
    if args.R < 1:
        raise UsageError(f"--R must be >= 1, got {args.R}")
    if args.threads < 1:
        raise UsageError(f"--threads must be >= 1, got {args.threads}")
    summary = run_replications(
        config, args.R, bw, counts=counts, threads=args.threads
    )
    text = experiment_csv_text(summary) if args.format == "csv" else experiment_json_text(summary)
    _write_text(args.out, text)
    return 0


def _cmd_density(args: argparse.Namespace) -> int:
    points, model, _ = _resolve_input(args)
    counts = _parse_counts(args.grid)
    bw = _parse_bandwidth(args.bandwidth, allow_tuned=False)
    est = estimate_density_fft(points, model, bw, counts)
    text = grid_csv_text(est) if args.format == "csv" else grid_json_text(est)
    _write_text(args.out, text)
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    points, model, default_k = _resolve_input(args)
    counts = _parse_counts(args.grid)
    bw = _parse_bandwidth(args.bandwidth, allow_tuned=False)
    if args.seed < 0:
        raise UsageError(f"--seed must be >= 0, got {args.seed}")
    k = args.k if args.k is not None else default_k
    if k < 1 or k > len(points):
        raise UsageError(f"--k must be in 1..{len(points)}, got {k}")
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 0]))
    idx = rng.choice(len(points), size=k, replace=False)
    init = Codebook(points[idx])
    fit = noisy_kmeans_fit(points, model, bw, k, init, counts=counts)
    assignments = assign_points(points, fit.codebook)
    text = fit_csv_text(fit, assignments) if args.format == "csv" else fit_json_text(fit, assignments)
    _write_text(args.out, text)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    handler = {
        "experiment": _cmd_experiment,
        "density": _cmd_density,
        "fit": _cmd_fit,
    }[args.command]
    try:
        return handler(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"failure: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
