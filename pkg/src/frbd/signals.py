"""Time-domain input signals.

Signals are callables ``s(t)`` that broadcast over ``t`` and over array-valued
fields, so a single signal object can drive a batch of simulations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["InputSignal", "Constant", "Sinusoid", "Ramp", "Table", "signal_from_dict"]


class InputSignal:
    kind = "abstract"

    def __call__(self, t):
        raise NotImplementedError

    def as_dict(self) -> dict:
        d = {"kind": self.kind}
        d.update(self.__dict__)
        return d


@dataclass
class Constant(InputSignal):
    value: float
    kind = "constant"

    def __call__(self, t):
        return np.asarray(self.value, dtype=float) + 0.0 * np.asarray(t, dtype=float)


@dataclass
class Sinusoid(InputSignal):
    """``offset + amplitude * sin(2 pi freq_hz t + phase)``."""

    amplitude: float
    freq_hz: float
    phase: float = 0.0
    offset: float = 0.0
    kind = "sinusoid"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.offset + self.amplitude * np.sin(2.0 * np.pi * self.freq_hz * t + self.phase)


@dataclass
class Ramp(InputSignal):
    """Holds ``offset`` until ``start``, rises at ``rate`` until ``hold``, then stays."""

    rate: float
    start: float = 0.0
    hold: float = np.inf
    offset: float = 0.0
    kind = "ramp"

    def __post_init__(self):
        if self.hold < self.start:
            raise ValueError("ramp hold time must not precede its start")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.offset + self.rate * (np.clip(t, self.start, self.hold) - self.start)


@dataclass
class Table(InputSignal):
    """Piecewise-linear interpolation of time-value pairs, held constant outside."""

    times: np.ndarray
    values: np.ndarray
    kind = "table"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.times.shape != self.values.shape:
            raise ValueError("table times and values must be 1-D and of equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("table times must be strictly increasing")

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "times": self.times.tolist(), "values": self.values.tolist()}


_KINDS = {cls.kind: cls for cls in (Constant, Sinusoid, Ramp, Table)}


def signal_from_dict(d: dict) -> InputSignal:
    d = dict(d)
    kind = d.pop("kind")
    try:
        cls = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown input kind {kind!r}; expected one of {sorted(_KINDS)}") from None
    return cls(**d)
