"""Command-line interface.

Subcommands: spm (equilibrium inundation), scenarios (rainfall corpus
generation), train (fit the generative model), sample (generate a flood
map), eval (score prediction directories). Global flags --seed and --quiet
apply to every subcommand; any module error exits nonzero with a one-line
diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from . import flowmatch, grid, metrics, rainfall, spm
from .odesolve import METHODS, OdeSpec


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _load_series_auto(path: str | os.PathLike) -> rainfall.RainfallSeries:
    """Load a scenario CSV, re-tagging the category from a uniform_/nonuniform_ filename prefix."""
    series = rainfall.load_event_csv(path)
    kind = Path(path).stem.split("_")[0]
    if kind in ("uniform", "nonuniform"):
        series = rainfall.RainfallSeries(hourly=series.hourly, category=kind, label=series.label)
    return series


def _rain_depth_m(args) -> float:
    """Rainfall depth in meters from either --total-mm or --rainfall/--hour."""
    if (args.total_mm is None) == (args.rainfall is None):
        raise ValueError("provide exactly one of --total-mm or --rainfall")
    if args.total_mm is not None:
        if args.total_mm < 0:
            raise ValueError(f"--total-mm must be non-negative, got {args.total_mm}")
        return args.total_mm / 1000.0
    series = _load_series_auto(args.rainfall)
    return rainfall.cumulative(series, args.hour) / 1000.0


def cmd_spm(args) -> int:
    dem = grid.load_ascii_grid(args.dem)
    cfg = spm.SpmConfig(phi=args.phi, tol_level=args.tol_level,
                        tol_mass=args.tol_mass, max_iters=args.max_iters)
    result = spm.spm_simulate(dem, _rain_depth_m(args), cfg, workers=args.workers)
    grid.save_ascii_grid(result.flood, args.out)
    if args.render:
        grid.save_pgm(grid.render_depth(result.flood), args.render)
    _say(args, f"spm: iterations={result.iterations} residual={result.residual:.3e} "
               f"mass_error={result.mass_error:.3e} converged={result.converged}")
    if not result.converged:
        print(f"error: solver did not converge within {cfg.max_iters} iterations "
              f"(residual {result.residual:.3e}, mass_error {result.mass_error:.3e})", file=sys.stderr)
        return 1
    return 0


def cmd_scenarios(args) -> int:
    if args.count < 1:
        raise ValueError(f"--count must be at least 1, got {args.count}")
    if not 0 <= args.total_min <= args.total_max:
        raise ValueError(f"need 0 <= --total-min <= --total-max, got {args.total_min}, {args.total_max}")
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    totals = rng.uniform(args.total_min, args.total_max, size=args.count)
    shuffle_seeds = rng.integers(0, 2**31, size=args.count)
    for i in range(args.count):
        if args.kind == "uniform":
            series = rainfall.gen_uniform(totals[i])
        else:
            series = rainfall.gen_nonuniform(totals[i], seed=int(shuffle_seeds[i]),
                                             peak_hour_mean=args.peak_mean, spread=args.spread)
        rainfall.save_event_csv(series, outdir / f"{args.kind}_{i:03d}.csv")
    _say(args, f"scenarios: wrote {args.count} {args.kind} files to {outdir}")
    return 0


def _build_dataset(args, dems: list[grid.DemGrid], series_list: list[rainfall.RainfallSeries],
                   ) -> list[flowmatch.TrainingScenario]:
    prior_cfg = spm.SpmConfig(tol_level=args.prior_tol)
    truth_cfg = spm.SpmConfig(tol_level=args.truth_tol)
    dataset = []
    for dem in dems:
        for series in series_list:
            priors = spm.spm_prior_sequence(dem, series, prior_cfg, workers=args.workers)
            if args.truth == "spm":
                truths = spm.spm_prior_sequence(dem, series, truth_cfg, workers=args.workers)
            else:
                truths = [spm.hydrostatic_fill(dem, rainfall.cumulative(series, h) / 1000.0)
                          for h in range(1, rainfall.HOURS + 1)]
            dataset.append(flowmatch.TrainingScenario(dem=dem, series=series,
                                                      priors=tuple(priors), truths=tuple(truths)))
    return dataset


def cmd_train(args) -> int:
    paths = sorted(Path(args.corpus).glob("*.csv"))
    if not paths:
        raise ValueError(f"no scenario CSVs found in {args.corpus}")
    series_list = [_load_series_auto(p) for p in paths]
    dems = [grid.load_ascii_grid(p) for p in args.dem]
    t0 = time.perf_counter()
    dataset = _build_dataset(args, dems, series_list)
    t1 = time.perf_counter()
    cfg = flowmatch.CfmConfig(sigma=args.sigma, batch=args.batch, lr=args.lr,
                              iters=args.iters, lr_decay=args.lr_decay,
                              decay_every=args.decay_every, seed=args.seed,
                              embed_dim=args.embed_dim, hidden=_parse_hidden(args.hidden))
    model, history = flowmatch.train(dataset, cfg)
    t2 = time.perf_counter()
    ckpt.save_checkpoint(model, args.out)
    loss_csv = args.loss_csv or (os.fspath(args.out) + ".loss.csv")
    with open(loss_csv, "w", encoding="ascii") as fh:
        for i, loss in enumerate(history):
            fh.write(f"{i},{loss!r}\n")
    last = f"{history[-1]:.6f}" if history else "n/a"
    _say(args, f"train: {len(dataset)} scenarios (truth={args.truth}), "
               f"priors+truths {t1 - t0:.1f}s, {cfg.iters} iterations {t2 - t1:.1f}s, "
               f"final loss {last}, wrote {args.out}")
    return 0


def _parse_hidden(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(w) for w in text.split(","))
    except ValueError:
        raise ValueError(f"--hidden must be comma-separated integers, got {text!r}") from None


def cmd_sample(args) -> int:
    model = ckpt.load_checkpoint(args.checkpoint)
    dem = grid.load_ascii_grid(args.dem)
    series = _load_series_auto(args.rainfall)
    depth_m = rainfall.cumulative(series, args.hour) / 1000.0
    prior = spm.spm_simulate(dem, depth_m, spm.SpmConfig(tol_level=args.prior_tol),
                             workers=args.workers).flood
    spec = OdeSpec(method=args.sampler, steps=args.steps)
    t0 = time.perf_counter()
    flood = flowmatch.sample_flood(model, dem, series, args.hour, prior, spec)
    dt = time.perf_counter() - t0
    grid.save_ascii_grid(flood, args.out)
    if args.render:
        grid.save_pgm(grid.render_depth(flood), args.render)
    _say(args, f"sample: hour={args.hour} sampler={args.sampler} steps={args.steps} "
               f"generated in {dt:.3f}s, wrote {args.out}")
    return 0


def _score_pair(truth_path: Path, pred_path: Path, threshold: float) -> metrics.ScoreReport:
    truth = grid.load_flood_map(truth_path)
    pred = grid.load_flood_map(pred_path)
    if truth.shape != pred.shape:
        raise ValueError(f"pair {truth_path.name}: truth shape {truth.shape} "
                         f"does not match prediction shape {pred.shape}")
    return metrics.score_report(truth, pred, threshold)


def cmd_eval(args) -> int:
    truth_dir, pred_dir = Path(args.truth), Path(args.pred)
    truth_files = sorted(truth_dir.glob("*.asc"))
    if not truth_files:
        raise ValueError(f"no .asc grids found in {truth_dir}")
    pairs = []
    for tf in truth_files:
        pf = pred_dir / tf.name
        if not pf.exists():
            raise ValueError(f"prediction missing for {tf.name}")
        pairs.append((tf, pf))
    threshold = args.threshold_cm / 100.0

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            reports = list(pool.map(lambda p: _score_pair(*p, threshold), pairs))
    else:
        reports = [_score_pair(tf, pf, threshold) for tf, pf in pairs]

    def category(path: Path) -> str:
        kind = path.stem.split("_")[0]
        return kind if kind in rainfall.CATEGORIES else "other"

    lines: list[str] = [f"# flood verification, threshold {threshold} m, {len(pairs)} pairs"]
    for (tf, _), report in zip(pairs, reports):
        lines.append("")
        lines.extend(metrics.report_lines(report, header=f"pair {tf.name} category={category(tf)}"))

    groups: dict[str, list[metrics.ScoreReport]] = {}
    for (tf, _), report in zip(pairs, reports):
        groups.setdefault(category(tf), []).append(report)
    for name in (*sorted(groups), "overall"):
        member = reports if name == "overall" else groups[name]
        agg = metrics.aggregate_scores(member)
        lines.append("")
        lines.append(f"# aggregate category={name} pairs={len(member)}")
        for score in metrics.SCORE_FIELDS:
            value = agg[score]
            lines.append(f"{score}=" + ("undefined" if value is None else repr(value)))
    with open(args.report, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")

    if args.csv:
        rows = ["pair,category," + ",".join(metrics.SCORE_FIELDS)]
        for (tf, _), report in zip(pairs, reports):
            cells = [tf.name, category(tf)]
            for score in metrics.SCORE_FIELDS:
                value = getattr(report, score)
                cells.append("undefined" if value is None else repr(value))
            rows.append(",".join(cells))
        with open(args.csv, "w", encoding="ascii") as fh:
            fh.write("\n".join(rows) + "\n")

    overall = metrics.aggregate_scores(reports)
    summary = " ".join(f"{k}={'undefined' if v is None else f'{v:.4f}'}" for k, v in overall.items())
    _say(args, f"eval: {len(pairs)} pairs, {summary}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floodflow",
                                     description="Inundation solver, generative flood model, and verification scores.")
    parser.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spm", help="relax uniform rainfall over a DEM to equilibrium")
    p.add_argument("--dem", required=True)
    p.add_argument("--total-mm", type=float, default=None, help="24-hour rainfall total in mm")
    p.add_argument("--rainfall", default=None, help="scenario CSV; rainfall is accumulated through --hour")
    p.add_argument("--hour", type=int, default=24)
    p.add_argument("--out", required=True, help="output depth grid (.asc)")
    p.add_argument("--render", default=None, help="optional grayscale PGM")
    p.add_argument("--phi", type=float, default=0.25)
    p.add_argument("--tol-level", type=float, default=1e-6)
    p.add_argument("--tol-mass", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_spm)

    p = sub.add_parser("scenarios", help="generate rainfall scenario CSVs")
    p.add_argument("--kind", choices=("uniform", "nonuniform"), required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--total-min", type=float, default=24.0, help="min 24-hour total in mm (default 24)")
    p.add_argument("--total-max", type=float, default=720.0, help="max 24-hour total in mm (default 720)")
    p.add_argument("--peak-mean", type=float, default=12.0)
    p.add_argument("--spread", type=float, default=4.0)
    p.set_defaults(func=cmd_scenarios)

    p = sub.add_parser("train", help="fit the flow-matching model on a scenario corpus")
    p.add_argument("--corpus", required=True, help="directory of scenario CSVs")
    p.add_argument("--dem", required=True, nargs="+", help="DEM grid path(s)")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--loss-csv", default=None, help="loss history path (default <out>.loss.csv)")
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--lr", type=float, default=5e-4)
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--lr-decay", type=float, default=0.99)
    p.add_argument("--decay-every", type=int, default=1000)
    p.add_argument("--embed-dim", type=int, default=8)
    p.add_argument("--hidden", default="32,32", help="comma-separated MLP widths (default 32,32)")
    p.add_argument("--truth", choices=("spm", "fill"), default="spm",
                   help="training target generator (default spm at --truth-tol)")
    p.add_argument("--prior-tol", type=float, default=1e-6)
    p.add_argument("--truth-tol", type=float, default=1e-8)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="generate a flood map from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dem", required=True)
    p.add_argument("--rainfall", required=True, help="scenario CSV")
    p.add_argument("--hour", type=int, default=24)
    p.add_argument("--sampler", choices=METHODS, default="euler")
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--out", required=True, help="output depth grid (.asc)")
    p.add_argument("--render", default=None, help="optional grayscale PGM")
    p.add_argument("--prior-tol", type=float, default=1e-6)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="score prediction grids against truth grids")
    p.add_argument("--truth", required=True, help="directory of truth .asc grids")
    p.add_argument("--pred", required=True, help="directory of prediction .asc grids")
    p.add_argument("--report", required=True, help="output report path")
    p.add_argument("--csv", default=None, help="optional per-pair CSV")
    p.add_argument("--threshold-cm", type=float, default=30.0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
