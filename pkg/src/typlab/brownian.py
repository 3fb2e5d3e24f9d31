"""Rescaled random walks as piecewise-linear paths on [0, 1].

R_N(sigma) joins the points (k/N, (sigma_1 + ... + sigma_k)/sqrt(N)). The
crossing construction reads a sign string back off any such path: starting
from 0 it records each time the path has moved 1/sqrt(M) away from the last
recorded level, and the direction it moved.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import RngStream
from .entropy_ldp import OutOfRange

__all__ = [
    "PiecewiseLinearPath",
    "SignString",
    "Crossings",
    "DonskerResult",
    "RegularityStats",
    "random_walk_path",
    "sample_path",
    "crossing_signs",
    "reconstruct",
    "donsker_distance",
    "modulus_ratio",
    "holder_constant",
    "divided_difference_floor",
    "regularity_stats",
    "path_csv",
    "ratio_csv",
]

_TOL = 1e-9


@dataclass(frozen=True)
class SignString:
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.int8)
        if v.ndim != 1 or not np.all((v == 1) | (v == -1)):
            raise ValueError("sign strings hold only -1 and +1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        return isinstance(other, SignString) and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    @classmethod
    def from_bits(cls, bits) -> "SignString":
        return cls(2 * np.asarray(bits, dtype=np.int8) - 1)

    def to_bits(self) -> np.ndarray:
        return ((self.values + 1) // 2).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class PiecewiseLinearPath:
    """Values at t = k/N for k = 0..N; linear in between."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a path needs at least two grid values")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        if v[0] != 0:
            raise ValueError("paths start at 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __eq__(self, other) -> bool:
        return isinstance(other, PiecewiseLinearPath) and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    @property
    def N(self) -> int:
        return int(self.values.size - 1)

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.N + 1) / self.N

    def __call__(self, t):
        return np.interp(t, self.grid, self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def random_walk_path(signs: SignString | Sequence[int]) -> PiecewiseLinearPath:
    s = signs.values if isinstance(signs, SignString) else SignString(np.asarray(signs)).values
    if s.size == 0:
        raise ValueError("need at least one sign")
    values = np.concatenate(([0.0], np.cumsum(s, dtype=np.int64))) / math.sqrt(s.size)
    return PiecewiseLinearPath(values)


def sample_path(N: int, rng: RngStream) -> PiecewiseLinearPath:
    """R_N over N fair signs drawn from ``rng``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    return random_walk_path(SignString(rng.signs(N)))


@dataclass(frozen=True)
class Crossings:
    signs: SignString
    times: np.ndarray
    exhausted: bool

    def __len__(self) -> int:
        return len(self.signs)


def crossing_signs(path: PiecewiseLinearPath, M: int) -> Crossings:
    """Up to M crossing signs of ``path`` at spacing 1/sqrt(M).

    Each recorded level is exactly the previous one plus or minus 1/sqrt(M),
    so rounding cannot drift. A crossing inside a segment is placed by one
    linear solve. ``exhausted`` is set when t = 1 arrives first.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    v = path.values
    N = path.N
    delta = 1.0 / math.sqrt(M)
    reach = delta * (1 - _TOL)
    signs: list[int] = []
    times: list[float] = []
    ref = 0.0
    j = 1  # next grid index to inspect
    chunk = max(16, 4 * N // M)
    while len(signs) < M and j <= N:
        window = v[j : j + chunk]
        hits = np.flatnonzero(np.abs(window - ref) >= reach)
        if hits.size == 0:
            j += window.size
            chunk *= 2
            continue
        j += int(hits[0])
        a, b = v[j - 1], v[j]
        # the segment (j-1, j) may carry several crossings when it is steeper than delta
        while len(signs) < M and abs(b - ref) >= reach:
            sign = 1 if b > ref else -1
            target = ref + sign * delta
            frac = 1.0 if b == a else min(1.0, max(0.0, (target - a) / (b - a)))
            signs.append(sign)
            times.append((j - 1 + frac) / N)
            ref = target
        j += 1
        chunk = max(16, 4 * N // M)
    out = SignString(np.asarray(signs, dtype=np.int8))
    return Crossings(out, np.asarray(times), len(signs) < M)


def reconstruct(signs: SignString, M: int) -> PiecewiseLinearPath:
    """R_M of the first len(signs) <= M signs, held flat after they run out."""
    steps = np.zeros(M)
    steps[: len(signs)] = signs.values
    return PiecewiseLinearPath(np.concatenate(([0.0], np.cumsum(steps))) / math.sqrt(M))


@dataclass(frozen=True)
class DonskerResult:
    distance: float
    M: int
    exhausted: bool


def donsker_distance(fine: PiecewiseLinearPath, M: int) -> DonskerResult:
    """sup |fine - R_M(crossing_signs(fine, M))| over the union of both grids."""
    crossings = crossing_signs(fine, M)
    coarse = reconstruct(crossings.signs, M)
    # both paths are linear between points of the merged grid
    t = np.union1d(fine.grid, coarse.grid)
    d = float(np.max(np.abs(fine(t) - coarse(t))))
    return DonskerResult(d, M, crossings.exhausted)


def _check_h(h: float) -> None:
    if not 0 < h < 1:
        raise OutOfRange(f"h = {h} must lie in (0, 1)")


def _lag(path: PiecewiseLinearPath, h: float) -> int:
    return max(1, int(round(h * path.N)))


def _max_increment(v: np.ndarray, lag: int) -> float:
    return float(np.max(np.abs(v[lag:] - v[:-lag])))


def modulus_ratio(path: PiecewiseLinearPath, h: float) -> float:
    """max_t |B(t+h) - B(t)| / sqrt(2 h log(1/h)) on the grid.

    h is rounded to a whole number of grid steps and that effective h is the
    one used in the normalisation.
    """
    _check_h(h)
    lag = _lag(path, h)
    he = lag / path.N
    if he >= 1:
        raise OutOfRange(f"h = {h} is a whole path length at N = {path.N}")
    return _max_increment(path.values, lag) / math.sqrt(2 * he * math.log(1 / he))


def violation_fraction(path: PiecewiseLinearPath, h: float) -> float:
    """Share of grid times t with |B(t+h) - B(t)| above sqrt(2 h log(1/h))."""
    _check_h(h)
    lag = _lag(path, h)
    he = lag / path.N
    inc = np.abs(path.values[lag:] - path.values[:-lag])
    return float(np.mean(inc > math.sqrt(2 * he * math.log(1 / he))))


def _geometric_lags(N: int, lo: int = 1, hi: int | None = None, count: int = 40) -> np.ndarray:
    hi = hi if hi is not None else max(1, N // 2)
    lags = np.unique(np.round(np.geomspace(lo, hi, count)).astype(np.int64))
    return lags[(lags >= 1) & (lags <= N - 1)] if N > 1 else lags


def holder_constant(path: PiecewiseLinearPath, alpha: float) -> float:
    """max |B(s) - B(t)| / |s - t|^alpha over grid pairs at geometrically spaced lags."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    v, N = path.values, path.N
    return max(_max_increment(v, int(k)) / (k / N) ** alpha for k in _geometric_lags(N))


def divided_difference_floor(path: PiecewiseLinearPath, h0: float) -> float:
    """min over t of max over h in [h0/2, h0] of |B(t+h) - B(t)| / h.

    A non-differentiability proxy: for a Brownian path this grows like
    h0^(-1/2) as h0 shrinks, for a smooth path it stays bounded.
    """
    _check_h(h0)
    v, N = path.values, path.N
    hi = _lag(path, h0)
    lo = max(1, hi // 2)
    lags = _geometric_lags(N, lo, hi, count=12)
    T = N - int(lags.max())
    if T < 1:
        raise OutOfRange(f"h0 = {h0} leaves no room on a grid of size {N}")
    best = np.zeros(T)
    for k in lags:
        np.maximum(best, np.abs(v[k : k + T] - v[:T]) / (k / N), out=best)
    return float(best.min())


@dataclass
class RegularityStats:
    modulus: dict[float, float] = field(default_factory=dict)
    violations: dict[float, float] = field(default_factory=dict)
    holder: dict[float, float] = field(default_factory=dict)
    divided_difference: dict[float, float] = field(default_factory=dict)


def regularity_stats(path: PiecewiseLinearPath, h_list: Sequence[float], alpha: float | Sequence[float],
                     h0_list: Sequence[float] = ()) -> RegularityStats:
    """Modulus ratios per h, Hölder constants per alpha and the divided-difference
    floor per h0 (reported for the values given, typically decreasing)."""
    alphas = [alpha] if np.isscalar(alpha) else list(alpha)
    out = RegularityStats()
    for h in h_list:
        out.modulus[h] = modulus_ratio(path, h)
        out.violations[h] = violation_fraction(path, h)
    for a in alphas:
        out.holder[a] = holder_constant(path, a)
    for h0 in h0_list:
        out.divided_difference[h0] = divided_difference_floor(path, h0)
    return out


def path_csv(path: PiecewiseLinearPath, fh=None, stride: int = 1) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "value"])
    for k in range(0, path.N + 1, stride):
        w.writerow([repr(k / path.N), repr(float(path.values[k]))])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def ratio_csv(ratios: dict[float, float], fh=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "ratio"])
    for h, r in sorted(ratios.items(), reverse=True):
        w.writerow([repr(float(h)), repr(float(r))])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


__all__.append("violation_fraction")
