"""Time-indexed simulation records and their CSV form."""

from __future__ import annotations

import io
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

__all__ = ["LumpedState", "SimTrace", "atomic_write_text", "format_csv"]


@dataclass(frozen=True)
class LumpedState:
    """Bristle state and derived outputs at one instant."""

    t: float
    z: float
    zdot: float
    mu_b: float
    F_b: float
    W: float
    residual: float


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_csv(header, columns) -> str:
    """CSV text with ``repr``-exact floats, so reruns are byte-identical."""
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    n = {c.size for c in cols}
    if len(n) > 1:
        raise ValueError("CSV columns differ in length")
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in zip(*cols):
        buf.write(",".join(repr(float(x)) for x in row) + "\n")
    return buf.getvalue()


@dataclass
class SimTrace:
    """Named time series of equal length.

    ``schema`` lists the columns written by :meth:`to_csv`; ``data`` may hold
    extra diagnostics. Columns of a batched run have shape ``(len(t), batch)``.
    """

    data: dict
    schema: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [c for c in self.schema if c not in self.data]
        if missing:
            raise ValueError(f"schema columns missing from data: {missing}")

    def __getitem__(self, name):
        return self.data[name]

    def __contains__(self, name):
        return name in self.data

    def __len__(self):
        return len(self.data["t"])

    @property
    def t(self):
        return self.data["t"]

    def row(self, index, batch=None):
        """Batch member ``batch`` of a batched trace, as an unbatched trace."""
        if batch is None:
            return {k: v[index] for k, v in self.data.items()}
        return {k: (v[index] if v.ndim == 1 else v[index, batch]) for k, v in self.data.items()}

    def member(self, batch) -> "SimTrace":
        data = {k: (v if v.ndim == 1 else v[:, batch]) for k, v in self.data.items()}
        return SimTrace(data, self.schema, dict(self.meta))

    def state_at(self, index) -> LumpedState:
        names = ("t", "z", "zdot", "mu_b", "F_b", "W", "residual")
        return LumpedState(*(float(self.data[n][index]) for n in names))

    def to_csv(self, path, columns=None) -> None:
        columns = tuple(columns or self.schema)
        for c in columns:
            if np.ndim(self.data[c]) != 1:
                raise ValueError(f"column {c!r} is batched; select a member first")
        atomic_write_text(path, format_csv(columns, [self.data[c] for c in columns]))

    @classmethod
    def from_csv(cls, path) -> "SimTrace":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if arr.shape[1] != len(header):
            raise ValueError(f"{path}: header has {len(header)} columns, rows have {arr.shape[1]}")
        return cls({h: arr[:, i] for i, h in enumerate(header)}, tuple(header))
