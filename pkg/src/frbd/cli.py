"""Command-line front-end: ``frbd <experiment> --config <path> [--out <dir>] [--seed <n>]``.

Each experiment writes its CSV files, a ``run.log`` echoing the resolved
configuration, and a ``manifest.json`` (configuration, versions, seed, wall
time, outputs). Exit status: 0 success, 2 configuration error, 3 numerical
failure, 1 anything unexpected. ``FRBD_THREADS`` caps the number of concurrent simulation jobs.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np

from . import calibration as cal
from . import distributed as dist
from .checks import run_checks
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config
from .integrators import IntegrationError
from .lumped import integrate
from .quadrature import QuadratureError
from .systems import (
    MassSpringParams,
    ValveParams,
    simulate_friction_lag,
    simulate_presliding,
    simulate_stickslip,
    simulate_valve,
)
from .trace import atomic_write_text, format_csv

__all__ = ["main", "run", "worker_count"]

log = logging.getLogger("frbd")
_stream = None

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


class NumericalFailure(RuntimeError):
    """A run completed but produced invalid results."""


def worker_count() -> int:
    """Concurrency cap from ``FRBD_THREADS`` (default 1)."""
    raw = os.environ.get("FRBD_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"FRBD_THREADS: expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"FRBD_THREADS: expected a positive integer, got {raw!r}")
    return n


def _t_eval(cfg: ExperimentConfig):
    n = cfg["output.samples"]
    if n == 0:
        return None
    return np.linspace(0.0, cfg.integrator.t_end, max(n, 2))


def _geometry(cfg: ExperimentConfig, shape=None):
    shape = shape or cfg["geometry.pressure"]
    a = cfg["geometry.a"] if shape == "exponential" else 0.0
    try:
        pressure = dist.PressureProfile(shape, cfg["geometry.p0"], a)
        return dist.ContactGeometry(cfg["geometry.L"], pressure, V=cfg["geometry.V"])
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from None


def _require_frbd(cfg):
    if cfg["model"] != "frbd":
        raise ConfigError(f"model: the {cfg.experiment} experiment supports model = frbd only")


def _check_failed(trace):
    failed = trace.meta.get("failed")
    if failed is not None and np.any(failed):
        raise NumericalFailure("integration failed")


def _write_trace(trace, out: Path, name: str):
    _check_failed(trace)
    path = out / name
    trace.to_csv(path)
    return [name]


def _run_lumped(cfg, out, seed, workers):
    tr = integrate(cfg["lumped.z0"], cfg.input, cfg.integrator, cfg.friction, cfg["model"], cfg["lumped.p"], _t_eval(cfg))
    return _write_trace(tr, out, "lumped.csv")


def _run_distributed(cfg, out, seed, workers):
    _require_frbd(cfg)
    geo = _geometry(cfg)
    v = cfg.input
    mode = cfg["distributed.z0"]
    if mode == "zero":
        z0 = None
    elif mode == "stationary":
        z0 = dist.stationary_profile(float(v(0.0)), geo, cfg.friction, cfg["distributed.N"]).z
    else:
        raise ConfigError(f"distributed.z0: expected 'zero' or 'stationary', got {mode!r}")
    if cfg["distributed.scheme"] not in ("semi_lagrangian", "upwind"):
        raise ConfigError(f"distributed.scheme: expected semi_lagrangian or upwind, got {cfg['distributed.scheme']!r}")
    try:
        field, tr = dist.simulate_pde(
            v, geo, cfg.friction, cfg["distributed.t_end"], z0=z0, N=cfg["distributed.N"],
            scheme=cfg["distributed.scheme"], cfl=cfg["distributed.cfl"],
        )
    except dist.CFLError:
        raise
    except ValueError as exc:
        raise ConfigError(f"distributed: {exc}") from None
    tr.to_csv(out / "distributed_force.csv")
    table = dist.field_table(field, float(v(field.t)), geo, cfg.friction)
    atomic_write_text(out / "distributed_field.csv", format_csv(dist.FIELD_SCHEMA, [table[c] for c in dist.FIELD_SCHEMA]))
    return ["distributed_force.csv", "distributed_field.csv"]


def _run_sweep(cfg, out, seed, workers):
    _require_frbd(cfg)
    if not 0 < cfg["sweep.slip_min"] < cfg["sweep.slip_max"]:
        raise ConfigError("sweep.slip_min: need 0 < slip_min < slip_max")
    if cfg["sweep.count"] < 2:
        raise ConfigError("sweep.count: need at least 2 slip values")
    if cfg["sweep.method"] not in ("closed_form", "quadrature"):
        raise ConfigError(f"sweep.method: expected closed_form or quadrature, got {cfg['sweep.method']!r}")
    slips = np.logspace(np.log10(cfg["sweep.slip_min"]), np.log10(cfg["sweep.slip_max"]), cfg["sweep.count"])
    shapes = cfg["sweep.pressures"]
    geos = [_geometry(cfg, shape) for shape in shapes]

    def job(geo):
        return dist.slip_sweep(slips, geo, cfg.friction, method=cfg["sweep.method"], N=cfg["distributed.N"])

    with ThreadPoolExecutor(max_workers=min(workers, len(geos))) as pool:
        results = list(pool.map(job, geos))
    names = []
    for shape, (s, F) in zip(shapes, results):
        if not np.all(np.isfinite(F)):
            raise NumericalFailure(f"non-finite steady force for {shape} pressure")
        name = f"steady_sweep_{shape}.csv"
        atomic_write_text(out / name, format_csv(dist.SWEEP_SCHEMA, (s, F)))
        names.append(name)
    return names


def _run_presliding(cfg, out, seed, workers):
    tr = simulate_presliding(
        cfg.input, cfg["mass.m"], cfg.friction, cfg.integrator, cfg["model"], p=cfg["mass.p"], t_eval=_t_eval(cfg)
    )
    return _write_trace(tr, out, "presliding.csv")


def _run_friclag(cfg, out, seed, workers):
    tr = simulate_friction_lag(cfg.input, cfg.friction, cfg.integrator, cfg["model"], z0=cfg["lumped.z0"], t_eval=_t_eval(cfg))
    return _write_trace(tr, out, "friclag.csv")


def _spring(cfg):
    try:
        return MassSpringParams(cfg["spring.m"], cfg["spring.k"], cfg["spring.v_ref"], cfg["spring.p"])
    except ValueError as exc:
        raise ConfigError(f"spring.{exc}") from None


def _valve(cfg):
    names = ("m", "S_a", "k", "F0", "K_P", "P_min", "tau", "p")
    try:
        return ValveParams(**{n: cfg[f"valve.{n}"] for n in names})
    except ValueError as exc:
        raise ConfigError(f"valve.{exc}") from None


def _run_stickslip(cfg, out, seed, workers):
    tr = simulate_stickslip(_spring(cfg), cfg.friction, cfg.integrator, cfg["model"], v_ref=cfg.input, t_eval=_t_eval(cfg))
    return _write_trace(tr, out, "stickslip.csv")


def _run_valve(cfg, out, seed, workers):
    tr = simulate_valve(cfg.input, _valve(cfg), cfg.friction, cfg.integrator, cfg["model"], t_eval=_t_eval(cfg))
    return _write_trace(tr, out, "valve.csv")


def _run_calibrate(cfg, out, seed, workers):
    kind = cfg["calibrate.plant"]
    if kind == "valve":
        plant = _valve(cfg)
    elif kind == "spring":
        plant = _spring(cfg)
    else:
        raise ConfigError(f"calibrate.plant: expected valve or spring, got {kind!r}")
    free = {n: (lo, hi) for n, lo, hi in zip(cfg["calibrate.free"], cfg["calibrate.lower"], cfg["calibrate.upper"])}
    outputs = []
    try:
        if cfg["calibrate.reference"] is not None:
            ref_path = Path(cfg["calibrate.reference"])
            if not ref_path.is_absolute():
                ref_path = Path(cfg.path).parent / ref_path
            t_ref, x_ref = cal.load_reference(ref_path)
        else:
            t_ref = np.linspace(0.0, cfg.integrator.t_end, cfg["calibrate.samples"])
            draft = cal.CalibrationProblem(plant, cfg.input, t_ref, np.zeros_like(t_ref), free, cfg.friction, cfg["model"], cfg.integrator)
            x_ref = cal.synthetic_reference(draft, cfg.friction, cfg["calibrate.noise"], seed)
            cal.write_reference(out / "reference.csv", t_ref, x_ref)
            outputs.append("reference.csv")
        problem = cal.CalibrationProblem(plant, cfg.input, t_ref, x_ref, free, cfg.friction, cfg["model"], cfg.integrator)
        ga = cal.GAConfig(population=cfg["calibrate.population"], patience=cfg["calibrate.patience"] or None)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"calibrate: {exc}") from None
    result = cal.fit(problem, budget=cfg["calibrate.budget"], seed=seed, ga=ga)
    if not np.isfinite(result.rmse):
        raise NumericalFailure("no candidate produced a finite objective")
    cal.write_report(result, problem, out / "calibration_report.txt", out / "calibration_residuals.csv")
    for name, value in result.best_values.items():
        log.info("fitted %s = %r", name, value)
    log.info("RMSE %.6g m after %d evaluations", result.rmse, result.evaluations)
    return outputs + ["calibration_report.txt", "calibration_residuals.csv"]


def _run_check(cfg, out, seed, workers):
    results = run_checks(seed=seed, workers=workers)
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  seconds  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.seconds:7.2f}  {r.detail}")
    table = "\n".join(lines) + "\n"
    print(table, end="")
    atomic_write_text(out / "check.txt", table)
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise NumericalFailure("failed checks: " + ", ".join(failed))
    return ["check.txt"]


RUNNERS = {
    "lumped": _run_lumped,
    "distributed": _run_distributed,
    "steady-sweep": _run_sweep,
    "presliding": _run_presliding,
    "friclag": _run_friclag,
    "stickslip": _run_stickslip,
    "valve": _run_valve,
    "calibrate": _run_calibrate,
    "check": _run_check,
}


def _versions():
    try:
        own = metadata.version("frbd")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"frbd": own, "numpy": np.__version__, "python": platform.python_version()}


def _jsonable(value):
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def run(cfg: ExperimentConfig, out, seed: int | None = None) -> int:
    """Run one experiment, writing its artifacts to ``out``; returns the exit status."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg["seed"] if seed is None else int(seed)
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    start = time.perf_counter()
    status, error, outputs = EXIT_OK, None, []
    try:
        workers = worker_count()
        log.info("experiment %s, seed %d, workers %d", cfg.experiment, seed, workers)
        for line in cfg.echo():
            log.info("config: %s", line)
        for key in cfg.unused():
            log.warning("config: %s is not used by the %s experiment", key, cfg.experiment)
        outputs = RUNNERS[cfg.experiment](cfg, out, seed, workers)
    except ConfigError as exc:
        status, error = EXIT_CONFIG, f"configuration error: {exc}"
    except (IntegrationError, QuadratureError, FloatingPointError, NumericalFailure, dist.CFLError) as exc:
        status, error = EXIT_NUMERICAL, f"numerical failure: {exc}"
    except ValueError as exc:
        status, error = EXIT_CONFIG, f"invalid input: {exc}"
    except Exception as exc:  # reported in the manifest rather than as a traceback
        log.debug("unexpected failure", exc_info=True)
        status, error = EXIT_INTERNAL, f"internal error: {type(exc).__name__}: {exc}"
    wall = time.perf_counter() - start
    if error:
        log.error("%s", error)
    manifest = {
        "experiment": cfg.experiment,
        "config_path": cfg.path,
        "config": {k: _jsonable(v) for k, v in cfg.resolved().items()},
        "defaults": sorted(k for k in cfg.resolved() if k not in cfg.explicit),
        "seed": seed,
        "versions": _versions(),
        "wall_time_s": wall,
        "outputs": outputs,
        "exit_status": status,
        "error": error,
    }
    atomic_write_text(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    log.info("finished in %.3f s with status %d", wall, status)
    log.removeHandler(handler)
    handler.close()
    return status


def _parser():
    ap = argparse.ArgumentParser(prog="frbd", description="Bristle friction model experiments.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="key = value configuration file (optional for 'check')")
    ap.add_argument("--out", default=None, help="output directory (default ./frbd-out/<experiment>)")
    ap.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    ap.add_argument("-q", "--quiet", action="store_true", help="show only warnings on the console (run.log keeps everything)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    global _stream
    if _stream is None:
        _stream = logging.StreamHandler(sys.stderr)
        _stream.setFormatter(logging.Formatter("frbd: %(message)s"))
        log.addHandler(_stream)
    # run.log always gets the full record; --quiet only trims the console
    _stream.setLevel(logging.WARNING if args.quiet else logging.INFO)
    log.setLevel(logging.INFO)
    try:
        if args.config is None:
            if args.experiment != "check":
                raise ConfigError("--config is required")
            cfg = load_config(text="", experiment="check")
        else:
            cfg = load_config(args.config, experiment=args.experiment)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    out = args.out or os.path.join("frbd-out", args.experiment)
    return run(cfg, out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
