"""Fit the snowball model ``installs = omega1 * rating ** omega2``.

Two log-log least-squares fits are chained: ``reviews = a * rating ** n`` and
``installs = reviews ** b`` (no intercept), giving ``omega1 = a ** b`` and
``omega2 = n * b``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import BriberyError


class RankDeficientError(BriberyError):
    """The regression design has no spread to fit a slope from."""


@dataclass(frozen=True)
class Observation:
    rating: float | None = None
    reviews: float | None = None
    installs: float | None = None


@dataclass
class ObservationSet:
    rows: list[Observation] = field(default_factory=list)

    def __post_init__(self):
        for n, row in enumerate(self.rows):
            for name in ("rating", "reviews", "installs"):
                v = getattr(row, name)
                if v is not None and not v > 0:
                    raise BriberyError(f"row {n}: {name} must be > 0, got {v!r}")
            if row.rating is not None and row.rating > 1:
                raise BriberyError(f"row {n}: rating {row.rating} outside (0, 1]")

    @classmethod
    def read_csv(cls, fh) -> "ObservationSet":
        """Read ``rating,reviews,installs`` rows; blank cells are missing."""
        reader = csv.DictReader(fh)
        missing = {"rating", "reviews", "installs"} - set(reader.fieldnames or ())
        if missing:
            raise BriberyError(f"CSV header lacks {sorted(missing)}")
        rows = []
        for line, rec in enumerate(reader, start=2):
            try:
                vals = {k: float(rec[k]) if rec[k] and rec[k].strip() else None
                        for k in ("rating", "reviews", "installs")}
            except ValueError as exc:
                raise BriberyError(f"line {line}: {exc}") from None
            rows.append(Observation(**vals))
        return cls(rows)

    def pairs(self, x: str, y: str) -> tuple[list[tuple[float, float]], int]:
        """Complete (x, y) pairs and the number of rows dropped."""
        kept = [(getattr(r, x), getattr(r, y)) for r in self.rows
                if getattr(r, x) is not None and getattr(r, y) is not None]
        return kept, len(self.rows) - len(kept)


@dataclass(frozen=True)
class PowerLawFit:
    a: float
    n: float
    residual: float
    points: int = 0
    dropped: int = 0


@dataclass(frozen=True)
class LogLogFit:
    b: float
    residual: float
    points: int = 0
    dropped: int = 0


@dataclass(frozen=True)
class SnowballFit:
    a: float
    n: float
    b: float
    omega1: float
    omega2: float
    residual_reviews: float
    residual_installs: float


def _logs(pairs: Iterable[Sequence[float]]) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
    if (arr <= 0).any():
        raise BriberyError("power-law fits need strictly positive data")
    return np.log(arr[:, 0]), np.log(arr[:, 1])


def fit_power_law(pairs: Iterable[Sequence[float]]) -> PowerLawFit:
    """Least squares of ``log reviews = log a + n log rating``."""
    x, y = _logs(pairs)
    if len(np.unique(x)) < 2:
        raise RankDeficientError("need at least two distinct ratings")
    design = np.column_stack([np.ones_like(x), x])
    (log_a, n), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ (log_a, n)
    return PowerLawFit(math.exp(log_a), float(n), float(np.sqrt(np.mean(resid ** 2))), len(x))


def fit_loglog(pairs: Iterable[Sequence[float]]) -> LogLogFit:
    """Least squares of ``log installs = b log reviews`` through the origin."""
    x, y = _logs(pairs)
    sxx = float(x @ x)
    if sxx == 0:
        raise RankDeficientError("all review counts equal 1; slope is undetermined")
    b = float(x @ y) / sxx
    resid = y - b * x
    return LogLogFit(b, float(np.sqrt(np.mean(resid ** 2))), len(x))


def compose_snowball(power: PowerLawFit, loglog: LogLogFit) -> SnowballFit:
    return SnowballFit(power.a, power.n, loglog.b, power.a ** loglog.b, power.n * loglog.b,
                       power.residual, loglog.residual)


def calibrate(obs: ObservationSet) -> tuple[SnowballFit, PowerLawFit, LogLogFit]:
    """Run both fits on an observation set, dropping incomplete rows per fit."""
    rr, dropped_rr = obs.pairs("rating", "reviews")
    ri, dropped_ri = obs.pairs("reviews", "installs")
    power = fit_power_law(rr)
    loglog = fit_loglog(ri)
    power = PowerLawFit(power.a, power.n, power.residual, power.points, dropped_rr)
    loglog = LogLogFit(loglog.b, loglog.residual, loglog.points, dropped_ri)
    return compose_snowball(power, loglog), power, loglog
