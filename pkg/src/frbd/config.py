"""Flat ``key = value`` experiment configuration.

Keys are dotted (``friction.sigma0 = 1e4``); ``#`` starts a comment. Values
are parsed according to the schema below, unknown keys are rejected and
every missing key takes its default. ``friction.preset`` loads a published
parameter set that individual ``friction.*`` keys may then override.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .friction import FrictionParams, ParameterError
from .integrators import IntegratorConfig
from .presets import PRESETS
from .signals import InputSignal, signal_from_dict

__all__ = ["ConfigError", "ExperimentConfig", "EXPERIMENTS", "SCHEMA", "parse_config", "load_config"]

EXPERIMENTS = ("lumped", "distributed", "steady-sweep", "presliding", "friclag", "stickslip", "valve", "calibrate", "check")


class ConfigError(ValueError):
    """Malformed or invalid configuration; names the line or key at fault."""


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _str_list(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def _float(text):
    value = float(text)
    if math.isnan(value):
        raise ValueError("NaN is not allowed")
    return value


# key -> (parser, default); None means "absent unless given"
SCHEMA = {
    "experiment": (str, None),
    "model": (str, "frbd"),
    "seed": (int, 0),
    "friction.preset": (str, None),
    "friction.mu_d": (_float, None),
    "friction.mu_s": (_float, None),
    "friction.v_S": (_float, None),
    "friction.delta": (_float, None),
    "friction.sigma2": (_float, None),
    "friction.eps": (_float, None),
    "friction.sigma0": (_float, None),
    "friction.sigma1": (_float, None),
    "integrator.method": (str, "rk45_adaptive"),
    "integrator.dt": (_float, 1e-4),
    "integrator.rtol": (_float, 1e-8),
    "integrator.atol": (_float, 1e-10),
    "integrator.t_end": (_float, None),
    "integrator.max_step": (_float, math.inf),
    "output.samples": (int, 1001),
    "input.kind": (str, None),
    "input.value": (_float, None),
    "input.amplitude": (_float, None),
    "input.freq_hz": (_float, None),
    "input.phase": (_float, None),
    "input.offset": (_float, None),
    "input.rate": (_float, None),
    "input.start": (_float, None),
    "input.hold": (_float, None),
    "input.times": (_float_list, None),
    "input.values": (_float_list, None),
    "lumped.z0": (_float, 0.0),
    "lumped.p": (_float, 1.0),
    "geometry.L": (_float, None),
    "geometry.V": (_float, None),
    "geometry.pressure": (str, "constant"),
    "geometry.p0": (_float, 1.0),
    "geometry.a": (_float, 0.1),
    "distributed.N": (int, 400),
    "distributed.scheme": (str, "semi_lagrangian"),
    "distributed.t_end": (_float, None),
    "distributed.cfl": (_float, 0.8),
    "distributed.z0": (str, "zero"),
    "sweep.slip_min": (_float, 1e-3),
    "sweep.slip_max": (_float, 1.0),
    "sweep.count": (int, 50),
    "sweep.pressures": (_str_list, ["constant", "exponential"]),
    "sweep.method": (str, "closed_form"),
    "mass.m": (_float, 1.0),
    "mass.p": (_float, 1.0),
    "spring.m": (_float, 1.0),
    "spring.k": (_float, 2.0),
    "spring.v_ref": (_float, 0.1),
    "spring.p": (_float, 1.0),
    "valve.m": (_float, 1.6),
    "valve.S_a": (_float, 445e-4),
    "valve.k": (_float, 203495.8),
    "valve.F0": (_float, 2578.3),
    "valve.K_P": (_float, 1666.49),
    "valve.P_min": (_float, 41276.40),
    "valve.tau": (_float, 0.933),
    "valve.p": (_float, 1.0),
    "calibrate.plant": (str, "valve"),
    "calibrate.reference": (str, None),
    "calibrate.free": (_str_list, ["sigma1"]),
    "calibrate.lower": (_float_list, [1.0]),
    "calibrate.upper": (_float_list, [5000.0]),
    "calibrate.budget": (int, 2000),
    "calibrate.samples": (int, 201),
    "calibrate.noise": (_float, 0.0),
    "calibrate.population": (int, 40),
    "calibrate.patience": (int, 12),
}

_COMMON = ("experiment", "model", "seed", "friction.")
_SECTIONS = {
    "lumped": ("integrator.", "output.", "input.", "lumped."),
    "distributed": ("geometry.", "distributed.", "input."),
    "steady-sweep": ("geometry.", "sweep.", "distributed.N"),
    "presliding": ("integrator.", "output.", "input.", "mass."),
    "friclag": ("integrator.", "output.", "input.", "lumped.z0"),
    "stickslip": ("integrator.", "output.", "input.", "spring."),
    "valve": ("integrator.", "output.", "input.", "valve."),
    "calibrate": ("integrator.", "input.", "valve.", "spring.", "calibrate."),
    "check": (),
}

_NEEDS_FRICTION = {e for e in EXPERIMENTS if e != "check"}
_NEEDS_INPUT = {"lumped", "distributed", "presliding", "friclag", "valve", "calibrate"}
_NEEDS_T_END = {"lumped", "presliding", "friclag", "stickslip", "valve", "calibrate"}
_NEEDS_GEOMETRY = {"distributed", "steady-sweep"}


@dataclass
class ExperimentConfig:
    """Validated configuration of one run."""

    experiment: str
    values: dict  # every schema key, defaults filled in
    explicit: frozenset  # keys given in the file
    friction: FrictionParams | None
    integrator: IntegratorConfig | None
    input: InputSignal | None
    path: str = "<string>"

    def __getitem__(self, key):
        return self.values[key]

    def relevant(self, key) -> bool:
        """Whether ``key`` affects this experiment."""
        return key.startswith(_COMMON + _SECTIONS[self.experiment])

    def resolved(self) -> dict:
        """Relevant keys with their effective values (preset fields expanded)."""
        out = {k: v for k, v in self.values.items() if v is not None and self.relevant(k)}
        if self.friction is not None:
            for name, value in self.friction.as_dict().items():
                out[f"friction.{name}"] = value
        return out

    def echo(self):
        """Lines ``key = value`` marking defaults and preset values, for the run log."""
        lines = []
        for key, value in self.resolved().items():
            if key in self.explicit:
                mark = ""
            elif key.startswith("friction.") and key != "friction.preset":
                mark = "   # preset" if self.values["friction.preset"] else "   # default"
            else:
                mark = "   # default"
            lines.append(f"{key} = {value}{mark}")
        return lines

    def unused(self):
        """Keys set in the file that this experiment ignores."""
        return sorted(k for k in self.explicit if not self.relevant(k))


def parse_config(text: str, path: str = "<string>") -> dict:
    """Raw parse: ``{key: (value_text, line_number)}``."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key not in SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r} (first set on line {entries[key][1]})")
        entries[key] = (value, lineno)
    return entries


def _friction(values, experiment):
    preset = values["friction.preset"]
    base = {}
    if preset is not None:
        try:
            base = PRESETS[preset.lower()].as_dict()
        except KeyError:
            raise ConfigError(f"friction.preset: unknown preset {preset!r}; expected one of {sorted(PRESETS)}") from None
    for name in FrictionParams.field_names():
        given = values[f"friction.{name}"]
        if given is not None:
            base[name] = given
    base.setdefault("eps", 0.0)
    if experiment not in _NEEDS_FRICTION and len(base) == 1:
        return None
    for name in FrictionParams.field_names():
        if name not in base:
            raise ConfigError(f"friction.{name}: required (or set friction.preset)")
    try:
        return FrictionParams(**base)
    except ParameterError as exc:
        raise ConfigError(f"friction.{exc.name}: {str(exc).split(': ', 1)[1]}") from None


def _input(values):
    kind = values["input.kind"]
    if kind is None:
        return None
    fields = {
        "constant": {"value": "input.value"},
        "sinusoid": {"amplitude": "input.amplitude", "freq_hz": "input.freq_hz", "phase": "input.phase", "offset": "input.offset"},
        "ramp": {"rate": "input.rate", "start": "input.start", "hold": "input.hold", "offset": "input.offset"},
        "table": {"times": "input.times", "values": "input.values"},
    }
    if kind not in fields:
        raise ConfigError(f"input.kind: unknown input kind {kind!r}; expected one of {sorted(fields)}")
    required = {"constant": ("value",), "sinusoid": ("amplitude", "freq_hz"), "ramp": ("rate",), "table": ("times", "values")}
    kwargs = {"kind": kind}
    for arg, key in fields[kind].items():
        if values[key] is not None:
            kwargs[arg] = values[key]
        elif arg in required[kind]:
            raise ConfigError(f"{key}: required for input.kind = {kind}")
    allowed = set(fields[kind].values())
    for key in SCHEMA:
        if key.startswith("input.") and key != "input.kind" and values[key] is not None and key not in allowed:
            raise ConfigError(f"{key}: not used by input.kind = {kind}")
    try:
        return signal_from_dict(kwargs)
    except ValueError as exc:
        raise ConfigError(f"input: {exc}") from None


def load_config(path=None, text=None, experiment=None) -> ExperimentConfig:
    """Parse and validate a configuration file (or ``text``).

    ``experiment`` overrides the file's ``experiment`` key.
    """
    if text is None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    where = str(path) if path is not None else "<string>"
    entries = parse_config(text, where)
    values = {}
    for key, (parser, default) in SCHEMA.items():
        if key in entries:
            raw, lineno = entries[key]
            try:
                values[key] = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"{where}:{lineno}: {key}: cannot parse {raw!r} ({exc})") from None
        else:
            values[key] = default
    if experiment and values["experiment"] and experiment != values["experiment"]:
        line = entries["experiment"][1]
        raise ConfigError(f"{where}:{line}: experiment: file is for {values['experiment']!r}, run requested {experiment!r}")
    experiment = experiment or values["experiment"]
    if experiment is None:
        raise ConfigError("experiment: required")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown experiment {experiment!r}; expected one of {list(EXPERIMENTS)}")
    values["experiment"] = experiment
    if values["model"] not in ("frbd", "lugre", "dahl"):
        raise ConfigError(f"model: unknown model {values['model']!r}; expected frbd, lugre or dahl")

    friction = _friction(values, experiment)
    if experiment in _NEEDS_FRICTION and friction is None:
        raise ConfigError("friction: section required")
    if values["model"] == "dahl" and friction is not None and friction.sigma1 != 0:
        raise ConfigError("friction.sigma1: must be 0 for model = dahl")

    signal = _input(values)
    if experiment in _NEEDS_INPUT and signal is None:
        raise ConfigError("input.kind: required for this experiment")

    integrator = None
    if experiment in _NEEDS_T_END and values["integrator.t_end"] is None:
        raise ConfigError("integrator.t_end: required for this experiment")
    if values["integrator.t_end"] is not None:
        try:
            integrator = IntegratorConfig(
                method=values["integrator.method"],
                dt=values["integrator.dt"],
                rtol=values["integrator.rtol"],
                atol=values["integrator.atol"],
                t_end=values["integrator.t_end"],
                max_step=values["integrator.max_step"],
            )
        except ValueError as exc:
            raise ConfigError(f"integrator: {exc}") from None

    if experiment in _NEEDS_GEOMETRY:
        for key in ("geometry.L", "geometry.V"):
            if values[key] is None:
                raise ConfigError(f"{key}: required for this experiment")
    if experiment == "distributed" and values["distributed.t_end"] is None:
        raise ConfigError("distributed.t_end: required for this experiment")
    if experiment == "calibrate":
        n = len(values["calibrate.free"])
        if not (len(values["calibrate.lower"]) == len(values["calibrate.upper"]) == n):
            raise ConfigError("calibrate.lower/upper: need one bound per entry of calibrate.free")
    if values["output.samples"] < 0:
        raise ConfigError("output.samples: must be >= 0")

    return ExperimentConfig(experiment, values, frozenset(entries), friction, integrator, signal, where)
