"""Command-line front end.

Exit codes: 0 success, 1 report verification mismatch, 2 configuration
error, 3 I/O error, 4 malformed timestamp file, 5 fit failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, svgplot, tsfile
from .emitter import detected_rate
from .errors import ScenarioError, SingularGeometryError, TimestampFormatError, DomainError
from .fitting import SaturationDataset, extract_rho_curve, fit_saturation
from .scenario import Scenario, load, serialize
from .simulator import SimConfig, hbt_split, simulate_stream
from .statistics import (bin_trace, expected_noise_ratio, g2_histogram, mean_and_se,
                         noise_ratio_measured)

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_IO, EXIT_FORMAT, EXIT_FIT = 0, 1, 2, 3, 4, 5
SEED_ENV = "PHOTONGUN_SEED"
STREAM_FILE = "stream.pgun"


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_kv(path, items: dict) -> None:
    with open(path, "w") as fh:
        for key, value in items.items():
            fh.write(f"{key} = {_num(value)}\n")


def read_kv(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line and not line.lstrip().startswith("#"):
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def resolve_seed(cli_seed, scenario_seed: int) -> int:
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env, 0)
        except ValueError:
            raise CliError(f"{SEED_ENV}={env!r} is not an integer", EXIT_CONFIG) from None
    return scenario_seed


def load_scenario(path) -> Scenario:
    try:
        return load(path)
    except ScenarioError as exc:
        raise CliError(f"{path}: {exc}", EXIT_CONFIG) from None
    except OSError as exc:
        raise CliError(f"cannot read scenario {path}: {exc}", EXIT_IO) from None


def make_outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}", EXIT_IO) from None
    return out


def analyze_stream(stream, bin_width, duration=None, f_rep=None, g2=False, g2_mode="pulsed",
                   tau_max=None, g2_bins=4101, split_ratio=0.5, seed=0):
    """Noise report and (optionally) g2 for one stream; shared by simulate and analyze."""
    trace = bin_trace(stream, bin_width, duration=duration)
    noise = noise_ratio_measured(trace, f_rep=f_rep)
    hist = None
    if g2:
        channels = np.unique(stream["channel"])
        if set(channels.tolist()) >= {0, 1}:
            a, b = stream[stream["channel"] == 0], stream[stream["channel"] == 1]
        else:
            a, b = hbt_split(stream, split_ratio, seed)
        if tau_max is None:
            if not f_rep:
                raise CliError("g2 needs --tau-max-us or a repetition rate", EXIT_CONFIG)
            tau_max = 20.5 / f_rep
        period = 1.0 / f_rep if f_rep else None
        if g2_mode == "pulsed" and period is None:
            raise CliError("pulsed g2 needs the repetition rate (--rep-rate-kHz)", EXIT_CONFIG)
        hist = g2_histogram(a, b, tau_max, g2_bins, mode=g2_mode, period=period,
                            duration=trace.duration if duration is not None else None)
    return trace, noise, hist


def noise_items(noise, hist) -> dict:
    items = {
        "noise.n_bins": noise.n_bins,
        "noise.mean_counts_per_bin": noise.mean_counts,
        "noise.mean_rate_cps": noise.mean_rate,
        "noise.sigma_sps": noise.sigma_sps,
        "noise.sigma_sn": noise.sigma_sn,
        "noise.ratio": noise.ratio,
        "noise.reduction": noise.noise_reduction,
        "noise.mandel_q": noise.mandel_q,
        "noise.M_per_pulse": noise.M if noise.M is not None else "none",
        "squeezing_db.amplitude": noise.squeezing_db,
        "squeezing_db.variance": noise.squeezing_db_variance,
    }
    if hist is not None:
        items.update({
            "g2.mode": hist.mode,
            "g2.zero": hist.g2_zero,
            "g2.zero_err": hist.g2_zero_err,
            "g2.events_a": hist.n_a,
            "g2.events_b": hist.n_b,
        })
    return items


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin", "t_start_s", "counts"])
        for i, c in enumerate(trace.counts.tolist()):
            w.writerow([i, repr(trace.start + i * trace.bin_width), c])


def write_g2_csv(path, hist) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau_s", "coincidences", "g2"])
        for tau, c, g in zip(hist.tau.tolist(), hist.coincidences.tolist(), hist.g2.tolist()):
            w.writerow([repr(tau), c, repr(g)])


def human_report(items: dict) -> str:
    width = max(len(k) for k in items) if items else 0
    return "\n".join(f"{k.ljust(width)}  {_num(v)}" for k, v in items.items()) + "\n"


def _model_ratio(cfg: SimConfig, bin_width: float) -> float:
    return expected_noise_ratio(cfg.detection_probability, cfg.excitation.f_rep * bin_width,
                                cfg.background_rate * bin_width)


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    seed = resolve_seed(args.seed, scenario.seed)
    scenario = scenario.with_values(seed=seed)
    cfg = scenario.sim_config()
    out = make_outdir(args.out or scenario.output_dir)
    try:
        stream, summary = simulate_stream(cfg)
    except OverflowError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None

    files = {}
    try:
        tsfile.write_binary(out / STREAM_FILE, stream)
        files[STREAM_FILE] = out / STREAM_FILE
        if args.csv or scenario.write_csv:
            tsfile.write_csv(out / "stream.csv", stream)
            files["stream.csv"] = out / "stream.csv"
        (out / "scenario.resolved").write_text(serialize(scenario))
        files["scenario.resolved"] = out / "scenario.resolved"
        trace, noise, hist = analyze_stream(
            stream, scenario.bin_width, duration=cfg.excitation.duration, f_rep=cfg.excitation.f_rep,
            g2=scenario.g2, g2_mode=scenario.g2_mode, tau_max=scenario.tau_max,
            g2_bins=scenario.g2_bins, split_ratio=scenario.split_ratio, seed=seed)
        write_trace_csv(out / "trace.csv", trace)
        files["trace.csv"] = out / "trace.csv"
        if hist is not None:
            write_g2_csv(out / "g2.csv", hist)
            files["g2.csv"] = out / "g2.csv"
    except OSError as exc:
        raise CliError(f"write failed: {exc}", EXIT_IO) from None

    items = {
        "scenario.name": scenario.name,
        "scenario.hash": scenario.config_hash(),
        "seed": seed,
        "version": __version__,
        "duration_s": cfg.excitation.duration,
        "bin_width_s": scenario.bin_width,
        "rep_rate_hz": cfg.excitation.f_rep,
        "rho": summary.rho,
        "zeta": summary.zeta,
        "background_rate_cps": cfg.background_rate,
    }
    items.update({f"summary.{k}": v for k, v in asdict(summary).items()
                  if k not in ("duration", "rho", "zeta")})
    items["summary.triplet_loss_fraction"] = summary.triplet_loss_fraction
    items.update(noise_items(noise, hist))
    items["model.ratio"] = _model_ratio(cfg, scenario.bin_width)
    if hist is not None:
        items.update({"analysis.g2_mode": scenario.g2_mode, "analysis.tau_max_s": scenario.tau_max,
                      "analysis.g2_bins": scenario.g2_bins, "analysis.split_ratio": scenario.split_ratio})
    for name, path in files.items():
        items[f"manifest.{name}"] = sha256_file(path)
    try:
        write_kv(out / "report.kv", items)
        (out / "report.txt").write_text(human_report(items))
    except OSError as exc:
        raise CliError(f"write failed: {exc}", EXIT_IO) from None
    print(human_report(items), end="")
    return EXIT_OK


def read_stream(path):
    try:
        return tsfile.read_any(path)
    except TimestampFormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_FORMAT) from None
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None


def cmd_analyze(args) -> int:
    stream = read_stream(args.file)
    f_rep = args.rep_rate_kHz * 1e3 if args.rep_rate_kHz else None
    tau_max = args.tau_max_us * 1e-6 if args.tau_max_us else None
    bin_width = args.bin_width_ms * 1e-3
    if not bin_width > 0:
        raise CliError("--bin-width-ms must be positive", EXIT_CONFIG)
    try:
        trace, noise, hist = analyze_stream(
            stream, bin_width, duration=args.duration_s, f_rep=f_rep, g2=args.g2,
            g2_mode=args.g2_mode, tau_max=tau_max, g2_bins=args.g2_bins, split_ratio=args.split_ratio,
            seed=args.seed)
    except (DomainError, ValueError) as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    out = make_outdir(args.out)
    items = {"source": str(args.file), "bin_width_s": bin_width, "duration_s": trace.duration,
             "records": int(stream.size)}
    items.update(noise_items(noise, hist))
    try:
        write_trace_csv(out / "trace.csv", trace)
        if hist is not None:
            write_g2_csv(out / "g2.csv", hist)
        write_kv(out / "analysis.kv", items)
    except OSError as exc:
        raise CliError(f"write failed: {exc}", EXIT_IO) from None
    print(human_report(items), end="")
    return EXIT_OK


def _replica_seed(root: int, index: int) -> int:
    return int(np.random.SeedSequence([root & (2**64 - 1), index]).generate_state(1, np.uint64)[0])


def _sweep_config(scenario: Scenario, axis: str, value: float) -> Scenario:
    if axis == "rho":
        return scenario.with_values(rho_override=value)
    if axis == "zeta":
        return scenario.with_values(objective_T=value, optics_T=1.0, detector_qe=1.0, extra_T=1.0)
    return scenario.with_values(pulse_energy_pJ=value, rho_override=None)


def _sweep_point(task):
    scenario, seed = task
    cfg = scenario.sim_config(seed=seed)
    stream, _ = simulate_stream(cfg)
    trace = bin_trace(stream, scenario.bin_width, duration=cfg.excitation.duration)
    noise = noise_ratio_measured(trace, f_rep=cfg.excitation.f_rep)
    return noise.ratio, noise.mean_rate, noise.mandel_q


def run_sweep(scenario: Scenario, axis: str, grid, n_seeds: int, jobs: int = 1):
    """Measured and model noise ratio at each grid value; rows keyed by grid index."""
    points = []
    tasks = []
    for i, value in enumerate(grid):
        sc = _sweep_config(scenario, axis, value)
        try:
            sc.validate()
        except ScenarioError as exc:
            raise CliError(f"grid value {value}: {exc}", EXIT_CONFIG) from None
        points.append(sc)
        tasks += [((i, s), (sc, _replica_seed(scenario.seed, i * 1_000_003 + s))) for s in range(n_seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(zip([k for k, _ in tasks], pool.map(_sweep_point, [t for _, t in tasks])))
    else:
        results = {k: _sweep_point(t) for k, t in tasks}
    rows = []
    for i, (value, sc) in enumerate(zip(grid, points)):
        reps = np.array([results[(i, s)] for s in range(n_seeds)])
        if n_seeds > 1:
            ratio, se = mean_and_se(reps[:, 0])
        else:
            ratio, se = float(reps[0, 0]), math.nan
        rows.append({
            "axis": axis, "value": value, "n_seeds": n_seeds,
            "ratio_mean": ratio, "ratio_se": se,
            "model_ratio": _model_ratio(sc.sim_config(), sc.bin_width),
            "rate_mean_cps": float(reps[:, 1].mean()), "mandel_q_mean": float(reps[:, 2].mean()),
        })
    return rows


def cmd_sweep(args) -> int:
    scenario = load_scenario(args.scenario)
    scenario = scenario.with_values(seed=resolve_seed(args.seed, scenario.seed))
    axis = args.axis or scenario.sweep_axis
    if args.grid is not None:
        try:
            grid = tuple(float(v) for v in args.grid.split(",") if v.strip())
        except ValueError:
            raise CliError(f"--grid must be a comma-separated list of numbers, got {args.grid!r}",
                           EXIT_CONFIG) from None
    else:
        grid = scenario.sweep_grid
    if not grid or not all(math.isfinite(v) for v in grid):
        raise CliError("sweep grid must be nonempty and finite", EXIT_CONFIG)
    n_seeds = args.seeds or scenario.sweep_seeds
    if n_seeds < 1:
        raise CliError("--seeds must be >= 1", EXIT_CONFIG)
    rows = run_sweep(scenario, axis, grid, n_seeds, jobs=max(1, args.jobs))
    out = make_outdir(args.out or scenario.output_dir)

    # dense model curve; for the energy axis this shows the background-driven rise
    lo, hi = min(grid), max(grid)
    if axis == "E_p" and lo > 0 and hi > lo:
        dense = np.geomspace(lo, hi, 200)
    elif hi > lo:
        dense = np.linspace(lo, hi, 200)
    else:
        dense = np.array([lo])
    model = [_model_ratio(_sweep_config(scenario, axis, v).sim_config(), scenario.bin_width) for v in dense]
    try:
        with open(out / "sweep.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            for row in rows:
                w.writerow({k: _num(v) for k, v in row.items()})
        svgplot.write(out / "sweep.svg", [
            svgplot.Series(dense, np.array(model), "model", "line"),
            svgplot.Series(np.array(grid), np.array([r["ratio_mean"] for r in rows]), "Monte Carlo",
                           "markers", yerr=np.array([r["ratio_se"] for r in rows])),
        ], title=f"{scenario.name}: noise ratio vs {axis}", xlabel={"E_p": "pulse energy (pJ)",
              "rho": "excited-state population", "zeta": "detection efficiency"}[axis],
            ylabel="sigma_sps / sigma_sn", logx=(axis == "E_p" and lo > 0))
    except OSError as exc:
        raise CliError(f"write failed: {exc}", EXIT_IO) from None
    print("value,ratio_mean,ratio_se,model_ratio")
    for r in rows:
        print(f"{_num(r['value'])},{r['ratio_mean']:.5f},{r['ratio_se']:.5f},{r['model_ratio']:.5f}")
    return EXIT_OK


_FIX_UNITS = {
    "tau_p": ("tau_p", 1.0), "tau_p_s": ("tau_p", 1.0), "tau_p_ps": ("tau_p", 1e-12),
    "tau_r": ("tau_r", 1.0), "tau_r_s": ("tau_r", 1.0), "tau_r_ns": ("tau_r", 1e-9),
    "alpha": ("alpha", 1.0), "alpha_cps_per_pJ": ("alpha", 1.0),
}


def parse_fix(text: str) -> dict:
    fixed = {}
    for part in filter(None, (p.strip() for p in (text or "").split(","))):
        if "=" not in part:
            raise CliError(f"--fix entry {part!r} must be key=value", EXIT_CONFIG)
        key, value = (s.strip() for s in part.split("=", 1))
        if key not in _FIX_UNITS:
            raise CliError(f"--fix key {key!r} not one of {', '.join(_FIX_UNITS)}", EXIT_CONFIG)
        name, factor = _FIX_UNITS[key]
        try:
            fixed[name] = float(value) * factor
        except ValueError:
            raise CliError(f"--fix {key}: {value!r} is not a number", EXIT_CONFIG) from None
    return fixed


def read_saturation_csv(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None
    if not rows or [h.strip() for h in rows[0][:2]] != ["E_p_pJ", "rate_cps"]:
        raise CliError(f"{path}: header must start with E_p_pJ,rate_cps[,weight]", EXIT_CONFIG)
    has_w = len(rows[0]) > 2 and rows[0][2].strip() == "weight"
    points = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not "".join(row).strip():
            continue
        try:
            points.append(tuple(float(v) for v in row[: 3 if has_w else 2]))
        except ValueError:
            raise CliError(f"{path}: line {lineno}: not numeric: {row}", EXIT_CONFIG) from None
    return points


def cmd_fit(args) -> int:
    fixed = parse_fix(args.fix)
    for needed in ("tau_p", "tau_r"):
        if needed not in fixed:
            raise CliError(f"--fix must give {needed} (pulse width and excited-state lifetime)", EXIT_CONFIG)
    points = read_saturation_csv(args.data)
    try:
        data = SaturationDataset.from_points(points, fixed["tau_p"], fixed["tau_r"],
                                             integration_time=args.integration_time_s)
        fit = fit_saturation(data, fix_alpha=fixed.get("alpha"))
    except SingularGeometryError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        raise CliError(f"singular geometry ({len(points)} points)", EXIT_FIT) from None
    except DomainError as exc:
        raise CliError(f"{args.data}: {exc}", EXIT_CONFIG) from None
    p = fit.params
    items = {
        "fit.converged": fit.converged,
        "fit.iterations": fit.iterations,
        "fit.message": fit.message,
        "fit.residual_norm": fit.residual_norm,
        "params.R_0_cps": p.R_0, "params.R_0_se": fit.stderr["R_0"],
        "params.E_s_pJ": p.E_s, "params.E_s_se": fit.stderr["E_s"],
        "params.alpha_cps_per_pJ": p.alpha, "params.alpha_se": fit.stderr["alpha"],
        "fixed.tau_p_s": p.tau_p, "fixed.tau_r_s": p.tau_r,
        "init.R_0_cps": fit.init.R_0, "init.E_s_pJ": fit.init.E_s, "init.alpha_cps_per_pJ": fit.init.alpha,
    }
    if not fit.converged:
        print(human_report(items), end="", file=sys.stderr)
        raise CliError(f"fit did not converge: {fit.message}", EXIT_FIT)
    out = make_outdir(args.out)
    E = data.E_p
    top = args.rho_at_pJ if args.rho_at_pJ is not None else float(E.max())
    grid = np.unique(np.concatenate([np.geomspace(max(E[E > 0].min(), 1e-6), max(E.max(), top), 200),
                                     E[E > 0], [top]]))
    rho_curve = extract_rho_curve(fit, grid)
    items[f"rho_at.{_num(top)}_pJ"] = float(extract_rho_curve(fit, [top])[0, 1])
    try:
        with open(out / "rho_curve.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["E_p_pJ", "rho"])
            for e, r in rho_curve.tolist():
                w.writerow([repr(e), repr(r)])
        with open(out / "fit_curve.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["E_p_pJ", "rate_cps"])
            for e in grid.tolist():
                w.writerow([repr(e), repr(float(detected_rate(e, p)))])
        svgplot.write(out / "fit_overlay.svg", [
            svgplot.Series(grid, detected_rate(grid, p), "fit", "line"),
            svgplot.Series(grid, p.alpha * grid, "background alpha*E_p", "line"),
            svgplot.Series(E, data.rate, "data", "markers"),
        ], title="Saturation fit", xlabel="pulse energy (pJ)", ylabel="count rate (counts/s)",
            logx=bool(np.all(E > 0)))
        write_kv(out / "fit.kv", items)
    except OSError as exc:
        raise CliError(f"write failed: {exc}", EXIT_IO) from None
    print(human_report(items), end="")
    return EXIT_OK


def _float_or_none(text):
    return None if text in (None, "none") else float(text)


def cmd_report(args) -> int:
    path = Path(args.path)
    kv_path = path / "report.kv" if path.is_dir() else path
    try:
        items = read_kv(kv_path)
    except OSError as exc:
        raise CliError(f"cannot read {kv_path}: {exc}", EXIT_IO) from None
    print(human_report(items), end="")
    if not args.verify:
        return EXIT_OK
    run_dir = kv_path.parent
    problems = []
    for key, digest in items.items():
        if key.startswith("manifest."):
            name = key[len("manifest."):]
            try:
                if sha256_file(run_dir / name) != digest:
                    problems.append(f"{name}: checksum mismatch")
            except OSError:
                problems.append(f"{name}: missing")
    if (run_dir / STREAM_FILE).exists() and not problems:
        stream = read_stream(run_dir / STREAM_FILE)
        g2 = "g2.zero" in items
        _, noise, hist = analyze_stream(
            stream, float(items["bin_width_s"]), duration=float(items["duration_s"]),
            f_rep=float(items["rep_rate_hz"]), g2=g2, g2_mode=items.get("analysis.g2_mode", "pulsed"),
            tau_max=_float_or_none(items.get("analysis.tau_max_s")),
            g2_bins=int(items.get("analysis.g2_bins", 4101)),
            split_ratio=float(items.get("analysis.split_ratio", 0.5)), seed=int(items["seed"]))
        for key, value in noise_items(noise, hist).items():
            if key in items and _num(value) != items[key]:
                problems.append(f"{key}: recomputed {_num(value)} != reported {items[key]}")
    if problems:
        for p in problems:
            print(f"verify: {p}", file=sys.stderr)
        return EXIT_MISMATCH
    print("verify: ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photongun", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"photongun {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write timestamps plus a run report")
    p.add_argument("scenario")
    p.add_argument("--seed", type=lambda s: int(s, 0), help=f"overrides {SEED_ENV} and the scenario seed")
    p.add_argument("--out", help="output directory (default: scenario output.dir)")
    p.add_argument("--csv", action="store_true", help="also write stream.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="noise report and g2 of a timestamp file")
    p.add_argument("file")
    p.add_argument("--bin-width-ms", type=float, default=1.0)
    p.add_argument("--duration-s", type=float, help="trace length (default: through the last record's bin)")
    p.add_argument("--rep-rate-kHz", type=float, help="excitation repetition rate")
    p.add_argument("--g2", action="store_true", help="compute the g2 histogram")
    p.add_argument("--g2-mode", choices=("pulsed", "continuous"), default="pulsed")
    p.add_argument("--tau-max-us", type=float)
    p.add_argument("--g2-bins", type=int, default=4101)
    p.add_argument("--split-ratio", type=float, default=0.5)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=0, help="seed for splitting single-channel files")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="noise ratio over a parameter grid, measured vs model")
    p.add_argument("scenario")
    p.add_argument("--axis", choices=("E_p", "rho", "zeta"))
    p.add_argument("--grid", help="comma-separated values (default: scenario sweep.grid)")
    p.add_argument("--seeds", type=int, help="replicas per grid point")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=lambda s: int(s, 0))
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit a saturation curve E_p_pJ,rate_cps[,weight]")
    p.add_argument("data")
    p.add_argument("--fix", default="", help="e.g. tau_p_ps=13,tau_r_ns=10 (bare tau_p/tau_r in s); alpha=0 fixes the background")
    p.add_argument("--integration-time-s", type=float, help="per-point integration time; enables Poisson weights")
    p.add_argument("--rho-at-pJ", type=float, help="report rho at this pulse energy (default: largest E_p)")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="print a run report; --verify recomputes it from the manifest")
    p.add_argument("path", help="run directory or report.kv")
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
