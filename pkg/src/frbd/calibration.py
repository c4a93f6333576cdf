"""Derivative-free fitting of friction parameters to displacement records.

The search is a real-coded genetic algorithm: tournament selection, blend
(BLX-alpha) crossover, Gaussian mutation and elitism of one. A whole
generation is simulated as one batch by giving the friction parameters
array-valued fields. Every random draw for candidate ``i`` of generation
``g`` comes from its own stream seeded with ``(seed, g, i)``, so a run is
reproducible for a fixed seed regardless of evaluation order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .friction import FrictionParams, ParameterError
from .integrators import IntegrationError, IntegratorConfig
from .lumped import ModelKind, _kind
from .systems import MassSpringParams, ValveParams, simulate_stickslip, simulate_valve
from .trace import atomic_write_text, format_csv

__all__ = [
    "CalibrationProblem",
    "FitResult",
    "GAConfig",
    "indicators",
    "simulate_displacement",
    "objective",
    "batch_objective",
    "fit",
    "synthetic_reference",
    "load_reference",
    "write_reference",
    "write_report",
]

log = logging.getLogger(__name__)


@dataclass
class CalibrationProblem:
    """What to fit, against which record.

    Parameters
    ----------
    plant : ValveParams or MassSpringParams
    input : callable
        Valve opening ``OP(t)`` [%] or drive velocity ``v_ref(t)``.
    t_ref, x_ref : array_like
        Reference displacement record (strictly increasing times).
    free : dict
        ``{name: (lower, upper)}`` for the fitted friction fields.
    fixed : FrictionParams
        Values of all other fields (free ones are overwritten).
    kind : ModelKind
    cfg : IntegratorConfig, optional
        ``t_end`` defaults to the last reference time.
    """

    plant: object
    input: object
    t_ref: np.ndarray
    x_ref: np.ndarray
    free: dict
    fixed: FrictionParams
    kind: ModelKind = ModelKind.FRBD
    cfg: IntegratorConfig | None = None

    def __post_init__(self):
        self.kind = _kind(self.kind)
        self.t_ref = np.asarray(self.t_ref, dtype=float)
        self.x_ref = np.asarray(self.x_ref, dtype=float)
        if self.t_ref.ndim != 1 or self.t_ref.shape != self.x_ref.shape or self.t_ref.size < 2:
            raise ValueError("reference must be two 1-D arrays of equal length >= 2")
        if np.any(np.diff(self.t_ref) <= 0) or self.t_ref[0] < 0:
            raise ValueError("reference times must be >= 0 and strictly increasing")
        if not self.free:
            raise ValueError("no free parameters to fit")
        names = FrictionParams.field_names()
        for name, (lo, hi) in self.free.items():
            if name not in names:
                raise ValueError(f"unknown friction parameter {name!r}")
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"{name}: bounds must be finite with lower < upper")
        if not isinstance(self.plant, (ValveParams, MassSpringParams)):
            raise TypeError("plant must be ValveParams or MassSpringParams")
        if self.cfg is None:
            self.cfg = IntegratorConfig(t_end=float(self.t_ref[-1]))
        elif self.t_ref[-1] > self.cfg.t_end:
            raise ValueError("reference extends beyond the simulation horizon")

    @property
    def names(self):
        return tuple(self.free)

    @property
    def lower(self):
        return np.array([self.free[n][0] for n in self.names], dtype=float)

    @property
    def upper(self):
        return np.array([self.free[n][1] for n in self.names], dtype=float)

    def params_for(self, values) -> FrictionParams:
        """Friction parameters with the free fields set from ``values``.

        ``values`` of shape ``(d,)`` gives scalar fields, ``(B, d)`` a batch.
        """
        values = np.asarray(values, dtype=float)
        return self.fixed.replace(**{n: values[..., i] for i, n in enumerate(self.names)})


@dataclass
class FitResult:
    best_params: FrictionParams
    best_values: dict
    rmse: float
    mean_err: float
    std_err: float
    max_err: float
    evaluations: int
    seed: int
    generations: int
    history: list = field(default_factory=list)  # best objective per generation
    residuals: np.ndarray | None = None


@dataclass(frozen=True)
class GAConfig:
    """Genetic algorithm settings.

    ``mutation_scale`` is the standard deviation of the Gaussian mutation as
    a fraction of the box width; ``patience`` stops the search after that
    many generations without improvement (``None`` runs the full budget).
    """

    population: int = 40
    crossover_rate: float = 0.9
    mutation_rate: float = 0.2
    mutation_scale: float = 0.05
    blend_alpha: float = 0.5
    tournament: int = 3
    patience: int | None = 12


def indicators(residuals):
    """``(rmse, mean, std, max |r|)`` of a residual vector."""
    r = np.asarray(residuals, dtype=float)
    return float(np.sqrt(np.mean(r * r))), float(np.mean(r)), float(np.std(r)), float(np.max(np.abs(r)))


def simulate_displacement(params: FrictionParams, problem: CalibrationProblem):
    """Plant displacement at the reference times; shape ``(n,)`` or ``(n, B)``."""
    cfg = problem.cfg
    if isinstance(problem.plant, ValveParams):
        tr = simulate_valve(problem.input, problem.plant, params, cfg, kind=problem.kind, t_eval=problem.t_ref)
    else:
        tr = simulate_stickslip(problem.plant, params, cfg, kind=problem.kind, v_ref=problem.input, t_eval=problem.t_ref)
    return tr["x"], tr.meta.get("failed")


def objective(candidate: FrictionParams, problem: CalibrationProblem) -> float:
    """Root-mean-square displacement residual; ``inf`` if the simulation fails."""
    try:
        x, _ = simulate_displacement(candidate, problem)
    except (IntegrationError, FloatingPointError, ValueError) as exc:
        log.debug("candidate rejected: %s", exc)
        return np.inf
    r = x - problem.x_ref
    value = float(np.sqrt(np.mean(r * r)))
    return value if np.isfinite(value) else np.inf


def batch_objective(values, problem: CalibrationProblem):
    """Objective of every row of ``values`` (shape ``(B, d)``), in one batched run."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    out = np.full(values.shape[0], np.inf)
    valid = np.zeros(values.shape[0], dtype=bool)
    for i, row in enumerate(values):
        try:
            problem.params_for(row)
            valid[i] = True
        except ParameterError:
            pass
    if not np.any(valid):
        return out
    try:
        x, failed = simulate_displacement(problem.params_for(values[valid]), problem)
    except (IntegrationError, FloatingPointError) as exc:
        log.debug("batch failed (%s); evaluating candidates one by one", exc)
        out[valid] = [objective(problem.params_for(row), problem) for row in values[valid]]
        return out
    r = x - problem.x_ref[:, None]
    rmse = np.sqrt(np.mean(r * r, axis=0))
    if failed is not None:
        rmse = np.where(failed, np.inf, rmse)
    out[valid] = np.where(np.isfinite(rmse), rmse, np.inf)
    return out


def _tournament(rng, fitness, size):
    picks = rng.integers(0, fitness.size, size=size)
    return picks[np.argmin(fitness[picks])]


def fit(problem: CalibrationProblem, budget: int = 2000, seed: int = 0, ga: GAConfig | None = None) -> FitResult:
    """Minimize :func:`objective` over the free-parameter box.

    Parameters
    ----------
    budget : int
        Maximum number of objective evaluations (at least one population).
    seed : int
    ga : GAConfig, optional
    """
    ga = ga or GAConfig()
    if budget < ga.population:
        raise ValueError(f"budget {budget} is smaller than the population size {ga.population}")
    lo, hi = problem.lower, problem.upper
    width = hi - lo
    d = lo.size

    def stream(gen, idx):
        return np.random.default_rng(np.random.SeedSequence([seed, gen, idx]))

    pop = np.array([lo + width * stream(0, i).random(d) for i in range(ga.population)])
    fit_vals = batch_objective(pop, problem)
    evaluations = ga.population
    history = [float(np.min(fit_vals))]
    stale = 0
    gen = 0
    while evaluations + ga.population - 1 <= budget:
        gen += 1
        children = np.empty((ga.population - 1, d))
        for i in range(ga.population - 1):
            rng = stream(gen, i)
            p1 = pop[_tournament(rng, fit_vals, ga.tournament)]
            p2 = pop[_tournament(rng, fit_vals, ga.tournament)]
            if rng.random() < ga.crossover_rate:
                low, high = np.minimum(p1, p2), np.maximum(p1, p2)
                spread = ga.blend_alpha * (high - low)
                child = rng.uniform(low - spread, high + spread)
            else:
                child = p1.copy()
            mutate = rng.random(d) < ga.mutation_rate
            child = child + mutate * rng.normal(0.0, ga.mutation_scale * width)
            children[i] = np.clip(child, lo, hi)
        child_vals = batch_objective(children, problem)
        evaluations += children.shape[0]
        elite = int(np.argmin(fit_vals))
        pop = np.vstack([pop[elite], children])
        fit_vals = np.concatenate([[fit_vals[elite]], child_vals])
        best = float(np.min(fit_vals))
        stale = stale + 1 if best >= history[-1] else 0
        history.append(best)
        log.info("generation %d: best rmse %.6g after %d evaluations", gen, best, evaluations)
        if ga.patience is not None and stale >= ga.patience:
            break
    best_values = pop[int(np.argmin(fit_vals))]
    best_params = problem.params_for(best_values)
    x, _ = simulate_displacement(best_params, problem)
    residuals = x - problem.x_ref
    rmse, mean, std, mx = indicators(residuals)
    return FitResult(
        best_params=best_params,
        best_values={n: float(v) for n, v in zip(problem.names, best_values)},
        rmse=rmse,
        mean_err=mean,
        std_err=std,
        max_err=mx,
        evaluations=evaluations,
        seed=seed,
        generations=gen,
        history=history,
        residuals=residuals,
    )


def synthetic_reference(problem_like: CalibrationProblem, truth: FrictionParams, noise_std=0.0, seed=0):
    """Displacement record generated by ``truth``, optionally with white noise."""
    x, _ = simulate_displacement(truth, problem_like)
    if noise_std > 0:
        x = x + np.random.default_rng(seed).normal(0.0, noise_std, size=x.shape)
    return x


def load_reference(path):
    """Read a two-column ``t,x`` CSV."""
    with open(path) as fh:
        header = [h.strip() for h in fh.readline().strip().split(",")]
    if header != ["t", "x"]:
        raise ValueError(f"{path}: expected header 't,x', found {','.join(header)!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def write_reference(path, t, x):
    atomic_write_text(path, format_csv(("t", "x"), (t, x)))


def write_report(result: FitResult, problem: CalibrationProblem, report_path, residuals_path=None):
    """Text summary of a fit and, optionally, the residual series as CSV."""
    lines = [
        "friction parameter fit",
        f"model: {problem.kind.value}",
        f"seed: {result.seed}",
        f"evaluations: {result.evaluations}",
        f"generations: {result.generations}",
        "",
        "fitted parameters:",
    ]
    for name, value in result.best_values.items():
        lo, hi = problem.free[name]
        lines.append(f"  {name} = {value!r}   (bounds [{lo!r}, {hi!r}])")
    lines += [
        "",
        "indicators [m]:",
        f"  RMSE = {result.rmse!r}",
        f"  Mean = {result.mean_err!r}",
        f"  Std  = {result.std_err!r}",
        f"  Max  = {result.max_err!r}",
        "",
    ]
    atomic_write_text(report_path, "\n".join(lines))
    if residuals_path is not None:
        x_sim = problem.x_ref + result.residuals
        atomic_write_text(
            residuals_path,
            format_csv(("t", "x_ref", "x_sim", "residual"), (problem.t_ref, problem.x_ref, x_sim, result.residuals)),
        )
