"""Finite-alphabet probability primitives, strings, streams and seeded RNG streams.

Symbols are always dense integer indices ``0..q-1``; labels are cosmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "TyplabError",
    "InvalidDistribution",
    "EmptyInput",
    "AlphabetMismatch",
    "Alphabet",
    "DiscreteDistribution",
    "SymbolString",
    "SymbolStream",
    "RngStream",
    "make_distribution",
    "sample_string",
    "empirical_measure",
    "string_probability",
    "log_in_base",
]

NORMALIZATION_TOL = 1e-12


class TyplabError(Exception):
    """Base class for all library errors."""


class InvalidDistribution(TyplabError, ValueError):
    pass


class EmptyInput(TyplabError, ValueError):
    pass


class AlphabetMismatch(TyplabError, ValueError):
    pass


def log_in_base(x, base: float = math.e):
    """Logarithm of ``x`` in ``base``; base 2 and e use the exact numpy routines."""
    with np.errstate(divide="ignore"):
        if base == 2:
            return np.log2(x)
        if base == math.e:
            return np.log(x)
        return np.log(x) / math.log(base)


@dataclass(frozen=True)
class Alphabet:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(a) for a in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise ValueError("an alphabet needs at least two symbols")
        if len(set(labels)) != len(labels):
            raise ValueError(f"alphabet labels must be unique, got {labels}")

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def of_size(cls, q: int) -> "Alphabet":
        return cls(tuple(str(i) for i in range(q)))

    @classmethod
    def binary(cls) -> "Alphabet":
        return cls(("0", "1"))

    def index(self, label: str) -> int:
        return self.labels.index(str(label))


def _as_alphabet(alphabet: Alphabet | int) -> Alphabet:
    if isinstance(alphabet, Alphabet):
        return alphabet
    return Alphabet.of_size(int(alphabet))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """A probability vector on a finite alphabet.

    ``normalizer`` records the factor the raw weights were divided by.
    """

    alphabet: Alphabet
    weights: np.ndarray
    normalizer: float = 1.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size != self.alphabet.size:
            raise InvalidDistribution(
                f"expected {self.alphabet.size} weights, got shape {w.shape}"
            )
        if np.any(~np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
            raise InvalidDistribution(f"weights must lie in [0, 1], got {w}")
        if abs(w.sum() - 1.0) > NORMALIZATION_TOL:
            raise InvalidDistribution(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def flat(cls, alphabet: Alphabet | int) -> "DiscreteDistribution":
        alphabet = _as_alphabet(alphabet)
        q = alphabet.size
        return cls(alphabet, np.full(q, 1.0 / q))

    @classmethod
    def point_mass(cls, alphabet: Alphabet | int, symbol: int) -> "DiscreteDistribution":
        alphabet = _as_alphabet(alphabet)
        w = np.zeros(alphabet.size)
        w[symbol] = 1.0
        return cls(alphabet, w)

    @classmethod
    def bernoulli(cls, p_one: float) -> "DiscreteDistribution":
        """Binary distribution with P(1) = p_one."""
        return cls(Alphabet.binary(), np.array([1.0 - p_one, p_one]))

    @property
    def q(self) -> int:
        return self.alphabet.size

    def __len__(self) -> int:
        return self.q

    def __getitem__(self, a: int) -> float:
        return float(self.weights[a])

    def __iter__(self):
        return iter(self.weights.tolist())

    def __repr__(self) -> str:
        ws = ", ".join(f"{w:.6g}" for w in self.weights)
        return f"DiscreteDistribution(q={self.q}, weights=({ws}))"

    def allclose(self, other: "DiscreteDistribution", atol: float = 1e-12) -> bool:
        return self.alphabet == other.alphabet and bool(
            np.allclose(self.weights, other.weights, rtol=0.0, atol=atol)
        )

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def mean(self, values: Sequence[float]) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))


def make_distribution(alphabet: Alphabet | int, raw_weights: Iterable[float]) -> DiscreteDistribution:
    alphabet = _as_alphabet(alphabet)
    w = np.asarray(list(raw_weights), dtype=float)
    if w.size != alphabet.size:
        raise InvalidDistribution(f"expected {alphabet.size} weights, got {w.size}")
    if np.any(~np.isfinite(w)):
        raise InvalidDistribution("weights must be finite")
    if np.any(w < 0):
        raise InvalidDistribution(f"negative weight in {w.tolist()}")
    total = float(w.sum())
    if total <= 0:
        raise InvalidDistribution("at least one weight must be positive")
    normed = w / total
    # absorb the last ulp of rounding so the sum invariant holds exactly enough
    normed[np.argmax(normed)] += 1.0 - normed.sum()
    return DiscreteDistribution(alphabet, normed, normalizer=total)


@dataclass(frozen=True, eq=False)
class SymbolString:
    """A finite string over an alphabet, stored as a read-only uint8 index array."""

    alphabet: Alphabet
    symbols: np.ndarray

    def __post_init__(self):
        s = np.ascontiguousarray(self.symbols, dtype=np.uint8)
        if s.ndim != 1:
            raise ValueError("symbols must be one-dimensional")
        if s.size and int(s.max()) >= self.alphabet.size:
            raise ValueError(f"symbol index {int(s.max())} outside alphabet of size {self.alphabet.size}")
        object.__setattr__(self, "symbols", _frozen(s))

    @classmethod
    def from_text(cls, text: str, alphabet: Alphabet | int = 2) -> "SymbolString":
        """Parse a string of digit symbols, e.g. ``"01101"``."""
        alphabet = _as_alphabet(alphabet)
        return cls(alphabet, np.array([int(c) for c in text], dtype=np.uint8))

    @classmethod
    def of(cls, symbols: Sequence[int], alphabet: Alphabet | int = 2) -> "SymbolString":
        return cls(_as_alphabet(alphabet), np.asarray(symbols, dtype=np.uint8))

    @property
    def q(self) -> int:
        return self.alphabet.size

    def __len__(self) -> int:
        return int(self.symbols.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymbolString):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.symbols, other.symbols)

    def __hash__(self) -> int:
        return hash((self.alphabet, self.symbols.tobytes()))

    def __getitem__(self, item):
        if isinstance(item, slice):
            return SymbolString(self.alphabet, self.symbols[item])
        return int(self.symbols[item])

    def __str__(self) -> str:
        if self.q <= 10:
            return "".join(map(str, self.symbols.tolist()))
        return " ".join(self.alphabet.labels[i] for i in self.symbols)

    def __repr__(self) -> str:
        body = str(self) if len(self) <= 32 else str(self[:32]) + "..."
        return f"SymbolString(q={self.q}, N={len(self)}, {body!r})"

    def tobytes(self) -> bytes:
        return self.symbols.tobytes()

    def prefix(self, n: int) -> "SymbolString":
        return self[:n]

    def is_prefix_of(self, other: "SymbolString") -> bool:
        n = len(self)
        return len(other) >= n and np.array_equal(other.symbols[:n], self.symbols)

    def __add__(self, other: "SymbolString") -> "SymbolString":
        if self.alphabet != other.alphabet:
            raise AlphabetMismatch("cannot concatenate strings over different alphabets")
        return SymbolString(self.alphabet, np.concatenate([self.symbols, other.symbols]))


class RngStream:
    """Counter-based random stream keyed by (seed, stream_id).

    Backed by numpy's Philox-4x64 generator with the 128-bit key set to
    ``(seed, stream_id)``; the output is a pure function of the key and the
    position in the stream.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = int(stream_id) & 0xFFFFFFFFFFFFFFFF
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, counter={self.counter})"

    @property
    def counter(self) -> int:
        state = self.generator.bit_generator.state["state"]["counter"]
        return int(state[0])

    def substream(self, stream_id: int) -> "RngStream":
        """A fresh stream with the same seed and a different id."""
        return RngStream(self.seed, stream_id)

    def random(self, size=None):
        return self.generator.random(size)

    def bits(self, n: int) -> np.ndarray:
        """``n`` fair bits as uint8 values in {0, 1}."""
        nbytes = (n + 7) // 8
        raw = self.generator.integers(0, 256, size=nbytes, dtype=np.uint8)
        return np.unpackbits(raw)[:n]

    def signs(self, n: int) -> np.ndarray:
        """``n`` fair signs in {-1, +1} as int8."""
        return (self.bits(n).astype(np.int8) << 1) - 1


def _draw(dist: DiscreteDistribution, n: int, rng: RngStream) -> np.ndarray:
    w = dist.weights
    if dist.q == 2 and w[0] == 0.5:
        return rng.bits(n)
    cum = np.cumsum(w)
    cum[-1] = 1.0
    u = rng.random(n)
    idx = np.searchsorted(cum, u, side="right")
    np.minimum(idx, dist.q - 1, out=idx)
    return idx.astype(np.uint8)


def sample_string(dist: DiscreteDistribution, N: int, rng: RngStream) -> SymbolString:
    """N i.i.d. draws from ``dist``."""
    if N < 0:
        raise ValueError("N must be non-negative")
    return SymbolString(dist.alphabet, _draw(dist, N, rng))


def empirical_measure(sigma: SymbolString) -> DiscreteDistribution:
    n = len(sigma)
    if n == 0:
        raise EmptyInput("empirical measure of the empty string is undefined")
    counts = np.bincount(sigma.symbols, minlength=sigma.q)
    return DiscreteDistribution(sigma.alphabet, counts / n)


def string_probability(dist: DiscreteDistribution, sigma: SymbolString, log_base: float = 2) -> float:
    """log P^N(sigma) in ``log_base``; ``-inf`` on a zero-probability cylinder."""
    if dist.alphabet != sigma.alphabet:
        raise AlphabetMismatch("string and distribution live on different alphabets")
    if len(sigma) == 0:
        return 0.0
    counts = np.bincount(sigma.symbols, minlength=dist.q)
    logs = log_in_base(dist.weights, log_base)
    used = counts > 0
    if np.any(np.isneginf(logs[used])):
        return -math.inf
    return float(np.dot(counts[used], logs[used]))


@dataclass
class SymbolStream:
    """A prefix-extendable sequence; only the materialized prefix is stored.

    ``generate(start, count)`` must return the next ``count`` symbols. It is
    called with consecutive, non-overlapping ranges, so RNG-backed sources can
    simply draw from their stream.
    """

    alphabet: Alphabet
    generate: Callable[[int, int], np.ndarray]
    _prefix: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8), repr=False)

    @classmethod
    def bernoulli(cls, dist: DiscreteDistribution, rng: RngStream) -> "SymbolStream":
        return cls(dist.alphabet, lambda start, count: _draw(dist, count, rng))

    @classmethod
    def from_function(cls, alphabet: Alphabet | int, fn: Callable[[np.ndarray], np.ndarray]) -> "SymbolStream":
        """Deterministic stream with symbol ``fn(n)`` at index ``n`` (vectorized)."""
        alphabet = _as_alphabet(alphabet)
        return cls(alphabet, lambda start, count: np.asarray(fn(np.arange(start, start + count)), dtype=np.uint8))

    @classmethod
    def constant(cls, alphabet: Alphabet | int, symbol: int = 0) -> "SymbolStream":
        return cls.from_function(alphabet, lambda n: np.full(n.shape, symbol, dtype=np.uint8))

    @property
    def materialized(self) -> int:
        return int(self._prefix.size)

    def _ensure(self, n: int) -> None:
        have = self._prefix.size
        if n <= have:
            return
        # geometric growth in whole 1024-symbol blocks: the materialized values
        # then do not depend on the history of prefix requests
        want = max(n, 2 * have, 1024)
        want = -(-want // 1024) * 1024
        more = np.asarray(self.generate(have, want - have), dtype=np.uint8)
        if more.size != want - have:
            raise RuntimeError("stream generator returned the wrong number of symbols")
        self._prefix = np.concatenate([self._prefix, more])

    def prefix(self, n: int) -> SymbolString:
        """s_{|n}: the first n symbols."""
        self._ensure(n)
        return SymbolString(self.alphabet, self._prefix[:n].copy())

    def window(self, start: int, n: int) -> np.ndarray:
        self._ensure(start + n)
        return self._prefix[start : start + n]

    def __getitem__(self, n: int) -> int:
        self._ensure(n + 1)
        return int(self._prefix[n])
