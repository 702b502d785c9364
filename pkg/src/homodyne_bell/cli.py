"""Command-line entry point: ``homodyne-bell {run,sweep,curves,scan,hist}``.

Exit codes: 0 success, 2 configuration or usage error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import statistics as st
from .config import ConfigError, RunConfig, _angle, apply_overrides, dump_config, load_config
from .decomposition import two_curve_decomposition
from .experiment import Selection, run_experiment, scan_phase
from .output import write_csv, write_json

PAIR_LABELS = ("ab", "ab'", "a'b", "a'b'")
TALLY_HEADER = (
    "setting_pair", "n_trials", "n_ready", "n_pp", "n_pm", "n_mp", "n_mm",
    "e_fair", "e_fair_err", "e_post", "e_post_err",
)
SWEEP_HEADER = ("value", "s_fair", "s_fair_err", "s_post", "s_post_err", "accepted_fraction")
SWEEP_PARAMS = ("discriminator_threshold", "noise_sigma", "sigma_omega", "path_delay")


def _safe(fn, *args):
    try:
        return fn(*args)
    except st.EmptyDenominator:
        return float("nan")


def _chsh_or_none(t, estimator, minus):
    try:
        return st.chsh_from_tally(t, estimator, minus)
    except st.EmptyDenominator:
        return None


def tally_rows(t: st.CoincidenceTally):
    for k, label in enumerate(PAIR_LABELS):
        row = t.row(k // 2, k % 2)
        yield (
            label, row.n_trials, row.n_ready, row.n_pp, row.n_pm, row.n_mp, row.n_mm,
            _safe(st.correlation_fair, row), _safe(st.correlation_fair_error, row),
            _safe(st.correlation_postselected, row), _safe(st.correlation_postselected_error, row),
        )


def _chsh_summary(res):
    if res is None:
        return None
    return {"e": res.e_values, "e_err": res.e_errors, "s": res.s, "s_err": res.s_error}


def cmd_run(cfg: RunConfig, out_dir: Path | None = None, write_trials: bool = False) -> dict:
    """Simulate, tally and write ``tally.csv`` + ``summary.json``."""
    out = Path(out_dir or cfg.out_dir)
    trials = run_experiment(cfg.experiment, cfg.n_trials, cfg.seed)
    t = st.tally(trials)
    fair = _chsh_or_none(t, st.Estimator.FAIR, cfg.chsh_minus)
    post = _chsh_or_none(t, st.Estimator.POSTSELECTED, cfg.chsh_minus)
    write_csv(out / "tally.csv", TALLY_HEADER, tally_rows(t))
    if write_trials:
        write_trials_csv(out / "trials.csv", trials)
    summary = {
        "seed": cfg.seed,
        "n_trials": cfg.n_trials,
        "chsh_fair": _chsh_summary(fair),
        "chsh_postselected": _chsh_summary(post),
        "config": dump_config(cfg),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    write_json(out / "summary.json", summary)
    return {"tally": t, "fair": fair, "postselected": post, "trials": trials}


TRIALS_HEADER = (
    "trial_id", "setting_a_index", "setting_b_index", "ready_a", "ready_b",
    "v_r_a", "v_t_a", "v_r_b", "v_t_b", "outcome_a", "outcome_b", "alpha", "omega",
)


def write_trials_csv(path, trials):
    cols = [trials.columns[k] for k in TRIALS_HEADER]
    rows = ([c[i].item() for c in cols] for i in range(len(trials)))
    return write_csv(path, TRIALS_HEADER, rows)


def with_parameter(cfg: RunConfig, param: str, value: float) -> RunConfig:
    """Copy of ``cfg`` with one physics parameter set.

    ``path_delay`` is applied to both B-side settings (a differential delay
    between the arms); the two detector parameters are set on both arms.
    """
    exp = cfg.experiment
    try:
        if param == "discriminator_threshold":
            exp = replace(exp, detector_a=replace(exp.detector_a, discriminator_threshold=value),
                          detector_b=replace(exp.detector_b, discriminator_threshold=value))
        elif param == "noise_sigma":
            exp = replace(exp, detector_a=replace(exp.detector_a, noise_sigma=value),
                          detector_b=replace(exp.detector_b, noise_sigma=value))
        elif param == "sigma_omega":
            exp = replace(exp, source=replace(exp.source, sigma_omega=value))
        elif param == "path_delay":
            s = exp.settings
            exp = replace(exp, settings=replace(
                s, b=replace(s.b, path_delay=value), b_prime=replace(s.b_prime, path_delay=value)))
        else:
            raise ConfigError(f"cannot sweep {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    except ValueError as exc:
        raise ConfigError(f"{param}={value!r}: {exc}") from None
    return replace(cfg, experiment=exp)


def sweep_rows(cfg: RunConfig, param: str, grid):
    grid = list(grid)
    if not grid:
        raise ConfigError("empty sweep grid")
    rows = []
    for value in grid:
        point = with_parameter(cfg, param, float(value))
        t = st.tally(run_experiment(point.experiment, point.n_trials, point.seed))
        fair = _chsh_or_none(t, st.Estimator.FAIR, cfg.chsh_minus)
        post = _chsh_or_none(t, st.Estimator.POSTSELECTED, cfg.chsh_minus)
        n_ready = int(t.n_ready.sum())
        observed = int((t.n_pp + t.n_pm + t.n_mp + t.n_mm).sum())
        rows.append((
            float(value),
            fair.s if fair else float("nan"), fair.s_error if fair else float("nan"),
            post.s if post else float("nan"), post.s_error if post else float("nan"),
            observed / n_ready if n_ready else float("nan"),
        ))
    return rows


def cmd_sweep(cfg: RunConfig, param: str, grid, out_dir: Path | None = None):
    rows = sweep_rows(cfg, param, grid)
    write_csv(Path(out_dir or cfg.out_dir) / "sweep.csv", SWEEP_HEADER, rows)
    return rows


CURVES_HEADER = ("theta_b", "n_ready", "p_pp", "p_pm", "p_mp", "p_mm", "p_pp_analytic")


def curve_rows(cfg: RunConfig, theta_a: float, theta_b_grid):
    rows = []
    s = cfg.experiment.settings
    for theta_b in theta_b_grid:
        sched = replace(s, a=replace(s.a, theta_set=theta_a), b=replace(s.b, theta_set=theta_b),
                        selection=Selection.FIXED, fixed_pair=(0, 0))
        t = st.tally(run_experiment(replace(cfg.experiment, settings=sched), cfg.n_trials, cfg.seed))
        row = t.row(0, 0)
        n = row.n_ready
        probs = [c / n if n else float("nan") for c in (row.n_pp, row.n_pm, row.n_mp, row.n_mm)]
        try:
            analytic = st.analytic_coincidence(theta_a, theta_b)[0]
        except st.UndefinedAngle:
            analytic = float("nan")
        rows.append((float(theta_b), n, *probs, analytic))
    return rows


def cmd_curves(cfg: RunConfig, theta_a: float, theta_b_grid, out_dir: Path | None = None):
    out = Path(out_dir or cfg.out_dir)
    rows = curve_rows(cfg, theta_a, theta_b_grid)
    write_csv(out / "curves.csv", CURVES_HEADER, rows)
    arr = np.array([r[2:6] for r in rows], dtype=float)
    vis = []
    for k, name in enumerate(("p_pp", "p_pm", "p_mp", "p_mm")):
        col = arr[:, k][np.isfinite(arr[:, k])]
        vis.append((name, _safe(st.visibility, col) if col.size else float("nan")))
    write_csv(out / "visibility.csv", ("curve", "visibility"), vis)
    return rows, dict(vis)


def cmd_scan(cfg: RunConfig, channel: str, start: float, end: float, n_steps: int, out_dir: Path | None = None):
    scan = scan_phase(cfg.experiment, channel, start, end, n_steps, cfg.seed)
    dec = two_curve_decomposition(scan.theta, scan.v_diff, alpha=scan.alpha)
    rows = zip(scan.theta, scan.v_diff, dec.labels, dec.residuals, scan.alpha)
    write_csv(Path(out_dir or cfg.out_dir) / "scan.csv", ("theta", "v_diff", "label", "residual", "alpha"), rows)
    return scan, dec


def cmd_hist(cfg: RunConfig, n_bins: int = 50, channel: str = "A", out_dir: Path | None = None):
    out = Path(out_dir or cfg.out_dir)
    trials = run_experiment(cfg.experiment, cfg.n_trials, cfg.seed)
    name = channel.lower()
    if name not in ("a", "b"):
        raise ConfigError("channel must be A or B")
    values = getattr(trials, f"v_diff_{name}")[trials.columns[f"ready_{name}"]]
    h = st.diff_histogram(values, n_bins)
    write_csv(out / "hist.csv", ("bin_lo", "bin_hi", "count"), zip(h.edges[:-1], h.edges[1:], h.counts))
    write_csv(out / "hist_stats.csv", ("statistic", "value"),
              [("n", h.total), ("x_max", h.x_max), ("tail_fraction", h.tail_fraction)])
    return h


def _grid(args) -> list[float]:
    if args.grid is not None:
        return [_angle(v.strip(), "grid") for v in args.grid.split(",") if v.strip()]
    if args.linspace is not None:
        start, stop, n = args.linspace
        return list(np.linspace(_angle(start, "start"), _angle(stop, "stop"), int(n)))
    return []


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="homodyne-bell", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path)
    common.add_argument("--seed", type=str, default=None, help="overrides the file (u64)")
    common.add_argument("--out", type=Path, default=None)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="simulate and write tally + summary")
    r.add_argument("--trials", action="store_true", help="also write every trial to trials.csv")

    s = sub.add_parser("sweep", parents=[common], help="CHSH values over a parameter grid")
    s.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--grid", help="comma-separated values")
    g.add_argument("--linspace", nargs=3, metavar=("START", "STOP", "N"))

    c = sub.add_parser("curves", parents=[common], help="coincidence rates against theta_B")
    c.add_argument("--theta-a", default="pi/2")
    c.add_argument("--theta-b-start", default="-pi")
    c.add_argument("--theta-b-end", default="pi")
    c.add_argument("--n", type=int, default=64)

    sc = sub.add_parser("scan", parents=[common], help="raw difference voltage against swept phase")
    sc.add_argument("--channel", default="A", choices=("A", "B", "a", "b"))
    sc.add_argument("--start", default="0")
    sc.add_argument("--end", default="4pi")
    sc.add_argument("--n-steps", type=int, default=1000)

    h = sub.add_parser("hist", parents=[common], help="histogram of difference voltages")
    h.add_argument("--bins", type=int, default=50)
    h.add_argument("--channel", default="A", choices=("A", "B", "a", "b"))
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, require_seed=args.seed is None)
        cfg = apply_overrides(cfg, seed=args.seed, out_dir=args.out)
        if args.command == "run":
            res = cmd_run(cfg, write_trials=args.trials)
            for label, r in (("fair", res["fair"]), ("postselected", res["postselected"])):
                if r is not None:
                    print(f"S_{label} = {r.s:.6f} +- {r.s_error:.6f}")
        elif args.command == "sweep":
            grid = _grid(args)
            if not grid:
                parser.error("sweep needs a non-empty --grid or --linspace")
            cmd_sweep(cfg, args.param, grid)
        elif args.command == "curves":
            if args.n < 2:
                parser.error("--n must be >= 2")
            grid = np.linspace(_angle(args.theta_b_start, "theta-b-start"), _angle(args.theta_b_end, "theta-b-end"), args.n)
            cmd_curves(cfg, _angle(args.theta_a, "theta-a"), grid)
        elif args.command == "scan":
            if args.n_steps < 2:
                parser.error("--n-steps must be >= 2")
            cmd_scan(cfg, args.channel.upper(), _angle(args.start, "start"), _angle(args.end, "end"), args.n_steps)
        elif args.command == "hist":
            cmd_hist(cfg, args.bins, args.channel.upper())
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if exc.filename == str(args.config) else 3
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
