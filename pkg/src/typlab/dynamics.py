"""Symbolic dynamics on a few exactly coded systems.

States are exact wherever that matters: shift points are lazy symbol
streams, the doubling map runs on rationals or on a lazily drawn binary
expansion, and the Baker's map on a bilateral expansion. Float orbits of
x -> 2x mod 1 collapse to 0 after about 53 steps, so they are never used.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    Alphabet,
    DiscreteDistribution,
    RngStream,
    SymbolStream,
    SymbolString,
    TyplabError,
)
from .entropy_ldp import _compositions, _multinomial
from .randomness import all_strings, lz78_complexity

__all__ = [
    "OracleUnavailable",
    "NotFound",
    "NOT_FOUND",
    "ShiftPoint",
    "BakerPoint",
    "Interval",
    "SymbolicSystem",
    "BernoulliShift",
    "DoublingMap",
    "BakersMap",
    "Rotation",
    "BlockEntropy",
    "EntropyRate",
    "BirkhoffReport",
    "coarse_grain",
    "block_entropy",
    "entropy_rate",
    "smb_estimate",
    "birkhoff",
    "brudno_rate",
    "first_return_time",
    "bilateral_code",
    "reconstruct_baker",
    "curve_csv",
]

EXACT_WORD_LIMIT = 2**24


class OracleUnavailable(TyplabError, LookupError):
    pass


class NotFound:
    """Result of a first-return search that exhausted its horizon."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __bool__(self) -> bool:
        return False

    def __repr__(self) -> str:
        return "NOT_FOUND"


NOT_FOUND = NotFound()


@dataclass(frozen=True)
class ShiftPoint:
    """A point of A^ω seen from position ``offset``."""

    source: SymbolStream | SymbolString
    offset: int = 0

    def symbols(self, start: int, n: int) -> np.ndarray:
        i = self.offset + start
        if isinstance(self.source, SymbolString):
            if i + n > len(self.source):
                raise ValueError("finite point is too short for this orbit length")
            return self.source.symbols[i : i + n]
        return self.source.window(i, n)

    def shifted(self, k: int = 1) -> "ShiftPoint":
        return ShiftPoint(self.source, self.offset + k)


@dataclass(frozen=True)
class BakerPoint:
    """(x, y) in [0,1)^2 as a bilateral binary sequence.

    Absolute index i >= 0 reads ``forward[i]``, i < 0 reads ``backward[-i-1]``.
    At offset k, x = 0.s_k s_{k+1} ... and y = 0.s_{k-1} s_{k-2} ...
    """

    forward: SymbolStream
    backward: SymbolStream
    offset: int = 0

    def symbols(self, start: int, n: int) -> np.ndarray:
        lo = self.offset + start
        hi = lo + n
        parts = []
        if lo < 0:
            stop = min(hi, 0)
            # indices lo..stop-1 map to backward[-lo-1] down to backward[-stop]
            parts.append(self.backward.window(-stop, stop - lo)[::-1])
        if hi > 0:
            first = max(lo, 0)
            parts.append(self.forward.window(first, hi - first))
        return np.concatenate(parts) if len(parts) > 1 else parts[0].copy()

    def shifted(self, k: int = 1) -> "BakerPoint":
        return BakerPoint(self.forward, self.backward, self.offset + k)

    def coordinates(self, digits: int = 64) -> tuple[Fraction, Fraction]:
        """Exact dyadic truncations of (x, y) to ``digits`` binary places."""
        xs = self.symbols(0, digits)
        ys = self.symbols(-digits, digits)[::-1]
        return _dyadic(xs), _dyadic(ys)


def _dyadic(bits: Sequence[int]) -> Fraction:
    value = 0
    for b in bits:
        value = 2 * value + int(b)
    return Fraction(value, 2 ** len(bits))


@dataclass(frozen=True)
class Interval:
    """Indicator observable of [lo, hi) on the circle coordinate."""

    lo: float
    hi: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return ((x >= self.lo) & (x < self.hi)).astype(float)

    @property
    def length(self) -> float:
        return float(self.hi - self.lo)


class SymbolicSystem:
    """A measure-preserving map with a finite partition.

    Subclasses implement ``step``, ``cell`` and ``sample``; systems with an
    exact cylinder oracle override ``cylinder_probability`` and usually
    ``cylinder_masses`` (which returns distinct nonempty masses and their
    multiplicities for all cylinders of length N).
    """

    name = "system"
    q = 2
    has_oracle = False

    def step(self, x):
        raise NotImplementedError

    def cell(self, x) -> int:
        raise NotImplementedError

    def sample(self, rng: RngStream):
        raise NotImplementedError

    def orbit_symbols(self, x, N: int) -> np.ndarray:
        out = np.empty(N, dtype=np.uint8)
        for n in range(N):
            out[n] = self.cell(x)
            x = self.step(x)
        return out

    def iterate(self, x, n: int):
        for _ in range(n):
            x = self.step(x)
        return x

    def cylinder_probability(self, word: Sequence[int]) -> float:
        raise OracleUnavailable(f"{self.name} has no exact cylinder oracle")

    def log2_cylinder(self, word: Sequence[int]) -> float:
        p = self.cylinder_probability(word)
        return math.log2(p) if p > 0 else -math.inf

    def orbit_log2_cylinder(self, x, N: int) -> float:
        return self.log2_cylinder(self.orbit_symbols(x, N))

    def cylinder_masses(self, N: int) -> tuple[np.ndarray, np.ndarray]:
        if not self.has_oracle:
            raise OracleUnavailable(f"{self.name} has no exact cylinder oracle")
        if self.q**N > EXACT_WORD_LIMIT:
            raise ValueError(f"{self.q}^{N} cylinders exceed the exact enumeration limit")
        masses = np.array([self.cylinder_probability(w) for w in all_strings(N, self.q)])
        masses = masses[masses > 0]
        return masses, np.ones(masses.size, dtype=object)

    def cell_probability(self, a: int) -> float:
        return self.cylinder_probability([a])


class BernoulliShift(SymbolicSystem):
    """Unilateral shift on A^ω with the product measure P_p."""

    has_oracle = True

    def __init__(self, p: DiscreteDistribution):
        self.p = p
        self.q = p.q
        self.name = f"BERNOULLI_SHIFT{tuple(round(float(w), 6) for w in p.weights)}"

    def step(self, x: ShiftPoint) -> ShiftPoint:
        return x.shifted()

    def cell(self, x: ShiftPoint) -> int:
        return int(x.symbols(0, 1)[0])

    def sample(self, rng: RngStream) -> ShiftPoint:
        return ShiftPoint(SymbolStream.bernoulli(self.p, rng))

    def point(self, s) -> ShiftPoint:
        return s if isinstance(s, ShiftPoint) else ShiftPoint(s)

    def orbit_symbols(self, x, N):
        return np.asarray(self.point(x).symbols(0, N), dtype=np.uint8).copy()

    def iterate(self, x, n):
        return self.point(x).shifted(n)

    def cylinder_probability(self, word):
        return float(np.prod(self.p.weights[np.asarray(word, dtype=np.intp)]))

    def log2_cylinder(self, word):
        with np.errstate(divide="ignore"):
            logs = np.log2(self.p.weights)
        return float(np.sum(logs[np.asarray(word, dtype=np.intp)]))

    def cylinder_masses(self, N):
        # all words of one type share a mass
        w = self.p.weights
        masses, counts = [], []
        for c in _compositions(N, self.q):
            m = float(np.prod(w ** np.asarray(c)))
            if m > 0:
                masses.append(m)
                counts.append(_multinomial(c))
        return np.asarray(masses), np.asarray(counts, dtype=object)


class DoublingMap(SymbolicSystem):
    """x -> 2x mod 1 with cells [0, 1/2), [1/2, 1) and Lebesgue measure.

    A state is a ``Fraction`` (floats are converted exactly) or a
    ``ShiftPoint`` over binary digits, which is how sampled points are held.
    """

    name = "DOUBLING_MAP"
    has_oracle = True

    def point(self, x):
        if isinstance(x, ShiftPoint):
            return x
        if isinstance(x, SymbolStream):
            return ShiftPoint(x)
        return Fraction(x) % 1

    def step(self, x):
        x = self.point(x)
        if isinstance(x, ShiftPoint):
            return x.shifted()
        return (2 * x) % 1

    def cell(self, x) -> int:
        x = self.point(x)
        if isinstance(x, ShiftPoint):
            return int(x.symbols(0, 1)[0])
        return int(x >= Fraction(1, 2))

    def sample(self, rng: RngStream) -> ShiftPoint:
        return ShiftPoint(SymbolStream.bernoulli(DiscreteDistribution.flat(2), rng))

    def orbit_symbols(self, x, N):
        x = self.point(x)
        if isinstance(x, ShiftPoint):
            return np.asarray(x.symbols(0, N), dtype=np.uint8).copy()
        num, den = x.numerator, x.denominator
        out = np.empty(N, dtype=np.uint8)
        for n in range(N):
            num *= 2
            if num >= den:
                out[n] = 1
                num -= den
            else:
                out[n] = 0
        return out

    def iterate(self, x, n):
        x = self.point(x)
        if isinstance(x, ShiftPoint):
            return x.shifted(n)
        return Fraction(x.numerator * pow(2, n, x.denominator) % x.denominator, x.denominator)

    def value(self, x, digits: int = 64) -> Fraction:
        x = self.point(x)
        return _dyadic(x.symbols(0, digits)) if isinstance(x, ShiftPoint) else x

    def cylinder_probability(self, word):
        return 2.0 ** -len(word)

    def log2_cylinder(self, word):
        return -float(len(word))

    def cylinder_masses(self, N):
        return np.array([2.0**-N]), np.array([2**N], dtype=object)


class BakersMap(SymbolicSystem):
    """(x, y) -> (2x mod 1, (y + floor(2x)) / 2), cells x < 1/2 and x >= 1/2."""

    name = "BAKERS_MAP"
    has_oracle = True

    def step(self, x: BakerPoint) -> BakerPoint:
        return x.shifted(1)

    def inverse(self, x: BakerPoint) -> BakerPoint:
        return x.shifted(-1)

    def cell(self, x: BakerPoint) -> int:
        return int(x.symbols(0, 1)[0])

    def sample(self, rng: RngStream) -> BakerPoint:
        fair = DiscreteDistribution.flat(2)
        # the past half gets its own key drawn from this stream
        past = RngStream(int(rng.generator.integers(2**63)), rng.stream_id)
        return BakerPoint(SymbolStream.bernoulli(fair, rng), SymbolStream.bernoulli(fair, past))

    def orbit_symbols(self, x, N):
        return np.asarray(x.symbols(0, N), dtype=np.uint8).copy()

    def iterate(self, x, n):
        return x.shifted(n)

    def cylinder_probability(self, word):
        return 2.0 ** -len(word)

    def log2_cylinder(self, word):
        return -float(len(word))

    def cylinder_masses(self, N):
        return np.array([2.0**-N]), np.array([2**N], dtype=object)


def bilateral_code(x: BakerPoint, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Cells of T^n x for n = 0..N-1 and of T^-n x for n = 1..N."""
    forward = x.symbols(0, N)
    backward = x.symbols(-N, N)[::-1]
    return np.asarray(forward).copy(), np.asarray(backward).copy()


def reconstruct_baker(forward: Sequence[int], backward: Sequence[int]) -> tuple[Fraction, Fraction]:
    """Centre of the bilateral cylinder; within 2^-(N+1) of the true point in each coordinate."""
    half_x = Fraction(1, 2 ** (len(forward) + 1))
    half_y = Fraction(1, 2 ** (len(backward) + 1))
    return _dyadic(forward) + half_x, _dyadic(backward) + half_y


class Rotation(SymbolicSystem):
    """x -> x + alpha mod 1 with cells [0, 1/2), [1/2, 1).

    A rational ``alpha`` given as a ``Fraction`` keeps the orbit exact;
    otherwise states are floats. Cylinders are arcs between the points
    -k alpha and 1/2 - k alpha, which gives the exact oracle.
    """

    has_oracle = True

    def __init__(self, alpha):
        self.exact = isinstance(alpha, Fraction)
        self.alpha = alpha % 1 if self.exact else float(alpha) % 1.0
        self.name = f"ROTATION({alpha})"

    def _coerce(self, x):
        return Fraction(x) % 1 if self.exact else float(x) % 1.0

    def step(self, x):
        return (self._coerce(x) + self.alpha) % 1

    def cell(self, x) -> int:
        return int(self._coerce(x) >= (Fraction(1, 2) if self.exact else 0.5))

    def sample(self, rng: RngStream):
        return float(rng.random())

    def orbit_array(self, x, N: int) -> np.ndarray:
        """frac(x + n alpha) for n < N as floats (exact numerators when rational)."""
        x = self._coerce(x)
        n = np.arange(N, dtype=np.int64)
        if self.exact:
            den = math.lcm(self.alpha.denominator, Fraction(x).denominator)
            a = self.alpha.numerator * (den // self.alpha.denominator)
            b = Fraction(x).numerator * (den // Fraction(x).denominator)
            return ((b + n * a) % den) / den
        return np.mod(x + n * self.alpha, 1.0)

    def orbit_symbols(self, x, N):
        x = self._coerce(x)
        if self.exact:
            den = math.lcm(self.alpha.denominator, x.denominator)
            a = self.alpha.numerator * (den // self.alpha.denominator)
            b = x.numerator * (den // x.denominator)
            nums = (b + np.arange(N, dtype=np.int64) * a) % den
            return (2 * nums >= den).astype(np.uint8)
        return (self.orbit_array(x, N) >= 0.5).astype(np.uint8)

    def iterate(self, x, n):
        return (self._coerce(x) + n * self.alpha) % 1

    def arcs(self, N: int) -> list[tuple[object, object, tuple[int, ...]]]:
        """(start, length, word) for the arcs on which the length-N word is constant."""
        half = Fraction(1, 2) if self.exact else 0.5
        pts = set()
        for k in range(N):
            pts.add((-k * self.alpha) % 1)
            pts.add((half - k * self.alpha) % 1)
        pts = sorted(pts)
        out = []
        for i, s in enumerate(pts):
            e = pts[i + 1] if i + 1 < len(pts) else pts[0] + 1
            length = e - s
            if length <= 0:
                continue
            mid = (s + e) / 2 % 1
            out.append((s, length, tuple(int(v) for v in self.orbit_symbols(mid, N))))
        return out

    def cylinder_masses(self, N):
        grouped: dict[tuple[int, ...], float] = {}
        for _, length, word in self.arcs(N):
            grouped[word] = grouped.get(word, 0) + length
        masses = np.array([float(m) for m in grouped.values()])
        return masses, np.ones(masses.size, dtype=object)

    def cylinder_probability(self, word):
        word = tuple(int(a) for a in word)
        return float(sum(l for _, l, w in self.arcs(len(word)) if w == word))

    def orbit_log2_cylinder(self, x, N):
        # the cylinder of x is the interval of points whose orbit stays in the
        # same cells; its extent is bounded by each orbit point's distance to
        # the edges of its own cell
        ys = self.orbit_array(x, N)
        c = (ys >= 0.5).astype(float)
        left = np.min(ys - c / 2)
        right = np.min((c + 1) / 2 - ys)
        return math.log2(left + right)


def coarse_grain(system: SymbolicSystem, x, N: int) -> SymbolString:
    """xi_N(x): the cells visited by x, Tx, ..., T^{N-1}x."""
    if N < 1:
        raise ValueError("N must be at least 1")
    return SymbolString(Alphabet.of_size(system.q), system.orbit_symbols(x, N))


@dataclass(frozen=True)
class BlockEntropy:
    bits: float
    N: int
    mode: str
    cells: int
    samples: int | None = None
    note: str = ""

    def __float__(self) -> float:
        return self.bits


def block_entropy(system: SymbolicSystem, N: int, mode: str = "exact", samples: int = 10_000,
                  rng: RngStream | None = None) -> BlockEntropy:
    """H(pi^N) in bits, exactly from the cylinder oracle or by plug-in Monte Carlo."""
    if mode == "exact":
        if not system.has_oracle:
            raise OracleUnavailable(f"{system.name} has no exact cylinder oracle")
        if system.q**N > EXACT_WORD_LIMIT:
            raise ValueError(f"exact mode requires q^N <= 2^24, got {system.q}^{N}")
        masses, counts = system.cylinder_masses(N)
        total = sum(float(c) * m for c, m in zip(counts, masses))
        assert abs(total - 1.0) <= 1e-9, f"cylinder masses sum to {total}"
        h = -sum(float(c) * m * math.log2(m) for c, m in zip(counts, masses))
        return BlockEntropy(max(h, 0.0), N, "exact", int(sum(counts)))
    if mode == "monte_carlo":
        if rng is None:
            raise ValueError("monte_carlo mode needs an rng")
        words: dict[bytes, int] = {}
        for _ in range(samples):
            x = system.sample(rng)
            key = system.orbit_symbols(x, N).tobytes()
            words[key] = words.get(key, 0) + 1
        freqs = np.array(list(words.values()), dtype=float) / samples
        h = float(-np.sum(freqs * np.log2(freqs)))
        note = "plug-in estimator; biased low by roughly (cells - 1) / (2 n ln 2) bits"
        return BlockEntropy(h, N, "monte_carlo", len(words), samples, note)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class EntropyRate:
    estimate: float
    curve: tuple[float, ...]  # H(pi^N) / N for N = 1..N_max
    block: tuple[float, ...]  # H(pi^N) for N = 1..N_max

    def rows(self, target: float | None = None):
        for n, v in enumerate(self.curve, 1):
            yield n, v, target, None


def entropy_rate(system: SymbolicSystem, N_max: int, mode: str = "exact", **kwargs) -> EntropyRate:
    """Slope H(pi^N_max) - H(pi^(N_max - 1)) with the ratio curve.

    Subadditivity H(pi^(M+N)) <= H(pi^M) + H(pi^N) is asserted on the curve.
    """
    if N_max < 4:
        raise ValueError("N_max must be at least 4")
    H = [block_entropy(system, n, mode, **kwargs).bits for n in range(1, N_max + 1)]
    if mode == "exact":
        for m in range(1, N_max):
            for n in range(1, N_max - m + 1):
                assert H[m + n - 1] <= H[m - 1] + H[n - 1] + 1e-9, (m, n)
    curve = tuple(h / n for n, h in enumerate(H, 1))
    return EntropyRate(H[-1] - H[-2], curve, tuple(H))


def smb_estimate(system: SymbolicSystem, x, N: int) -> float:
    """-(1/N) log2 P(cylinder of xi_N(x)); +inf for a null cylinder."""
    lp = system.orbit_log2_cylinder(x, N)
    return math.inf if math.isinf(lp) else -lp / N


@dataclass(frozen=True)
class BirkhoffReport:
    average: float
    N: int
    target: float | None
    curve: tuple[tuple[int, float], ...] = ()


def birkhoff(system: SymbolicSystem, x, N: int, observable: Callable | None = None,
             cell: int | None = None, checkpoints: Iterable[int] = ()) -> BirkhoffReport:
    """(1/N) sum_{n<N} f(T^n x), or the visit frequency of a partition cell.

    An ``Interval`` observable on a circle system reports its length as the
    target; a cell reports its oracle mass.
    """
    if (observable is None) == (cell is None):
        raise ValueError("give exactly one of observable or cell")
    target = None
    if cell is not None:
        values = (system.orbit_symbols(x, N) == cell).astype(float)
        if system.has_oracle:
            target = system.cell_probability(cell)
    else:
        if hasattr(system, "orbit_array"):
            values = np.asarray(observable(system.orbit_array(x, N)), dtype=float)
        else:
            values = np.empty(N)
            for n in range(N):
                values[n] = float(observable(x))
                x = system.step(x)
        if isinstance(observable, Interval) and isinstance(system, (Rotation, DoublingMap)):
            target = observable.length
    running = np.cumsum(values)
    curve = tuple((int(n), float(running[n - 1] / n)) for n in checkpoints if 1 <= n <= N)
    return BirkhoffReport(float(running[-1] / N), N, target, curve)


def brudno_rate(system: SymbolicSystem, x, N: int) -> float:
    """LZ78 bits per symbol of the coarse-grained orbit."""
    if N < 64:
        raise ValueError("N must be at least 64")
    return lz78_complexity(coarse_grain(system, x, N)).rate


def first_return_time(system: SymbolicSystem, x, target, horizon: int):
    """Least n in [1, horizon] with T^n x in ``target``, else NOT_FOUND.

    ``target`` is a cell index, an ``Interval`` or a predicate on states.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if isinstance(target, (int, np.integer)):
        hit = lambda y: system.cell(y) == target
    elif isinstance(target, Interval):
        hit = lambda y: target.lo <= y < target.hi
    else:
        hit = target
    y = x
    for n in range(1, horizon + 1):
        y = system.step(y)
        if hit(y):
            return n
    return NOT_FOUND


def curve_csv(rows: Iterable[tuple], fh=None) -> str:
    """CSV with columns N, value, target, band (empty cells for missing values)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "value", "target", "band"])
    for n, value, target, band in rows:
        w.writerow([n, repr(float(value)), "" if target is None else repr(float(target)),
                    "" if band is None else repr(float(band))])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
