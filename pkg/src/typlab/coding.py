"""Prefix codes, the noiseless coding bounds, and AEP typical sets."""

from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .core import (
    Alphabet,
    DiscreteDistribution,
    RngStream,
    SymbolString,
    TyplabError,
    sample_string,
)
from .entropy_ldp import _compositions, _multinomial, log_multinomial, shannon_entropy

__all__ = [
    "InvalidCode",
    "ZeroProbabilitySymbol",
    "TooLargeForExact",
    "PrefixCode",
    "CodeCheck",
    "TypicalSet",
    "validate_code",
    "canonical_code",
    "huffman_lengths",
    "build_code",
    "expected_length",
    "per_symbol_length",
    "typical_set",
]

EXACT_STATE_LIMIT = 2**30


class InvalidCode(TyplabError, ValueError):
    pass


class ZeroProbabilitySymbol(TyplabError, ValueError):
    pass


class TooLargeForExact(TyplabError, ValueError):
    pass


@dataclass(frozen=True)
class PrefixCode:
    """Binary codewords indexed by symbol: ``codewords[a]`` encodes symbol ``a``."""

    codewords: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "codewords", tuple(self.codewords))
        for w in self.codewords:
            if w == "":
                raise InvalidCode("empty codeword")
            if set(w) - {"0", "1"}:
                raise InvalidCode(f"codeword {w!r} is not binary")

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, str]) -> "PrefixCode":
        keys = sorted(mapping)
        if keys != list(range(len(keys))):
            raise InvalidCode(f"codeword map must cover symbols 0..q-1, got {keys}")
        return cls(tuple(mapping[k] for k in keys))

    @property
    def q(self) -> int:
        return len(self.codewords)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(w) for w in self.codewords)

    def encode(self, sigma: SymbolString) -> str:
        table = self.codewords
        return "".join(table[a] for a in sigma.symbols.tolist())

    def decode(self, bits: str, alphabet: Alphabet | None = None) -> SymbolString:
        lookup = {w: a for a, w in enumerate(self.codewords)}
        out: list[int] = []
        start = 0
        for end in range(1, len(bits) + 1):
            a = lookup.get(bits[start:end])
            if a is not None:
                out.append(a)
                start = end
        if start != len(bits):
            raise InvalidCode("trailing bits do not form a codeword")
        return SymbolString(alphabet or Alphabet.of_size(max(self.q, 2)), np.asarray(out, dtype=np.uint8))

    def to_csv(self, p=None, fh=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["symbol", "probability", "codeword", "length"])
        for a, w in enumerate(self.codewords):
            prob = "" if p is None else repr(float(_weights(p)[a]))
            writer.writerow([a, prob, w, len(w)])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


@dataclass(frozen=True)
class CodeCheck:
    prefix_free: bool
    kraft_sum: Fraction

    @property
    def kraft_ok(self) -> bool:
        return self.kraft_sum <= 1


def _weights(p) -> np.ndarray:
    if isinstance(p, DiscreteDistribution):
        return p.weights
    return np.asarray(p, dtype=float)


def validate_code(code: PrefixCode | Mapping[int, str] | Sequence[str]) -> CodeCheck:
    """Exact prefix-freeness (sorted-neighbour check) and the Kraft sum as a rational."""
    if isinstance(code, Mapping):
        words = list(code.values())
    elif isinstance(code, PrefixCode):
        words = list(code.codewords)
    else:
        words = list(code)
    if not words:
        raise InvalidCode("empty code")
    if any(w == "" for w in words):
        raise InvalidCode("empty codeword")
    # in lexicographic order a word that prefixes another is immediately followed by an extension of itself
    ordered = sorted(words)
    prefix_free = len(set(words)) == len(words) and not any(
        b.startswith(a) for a, b in zip(ordered, ordered[1:])
    )
    kraft = sum((Fraction(1, 2 ** len(w)) for w in words), Fraction(0))
    return CodeCheck(prefix_free, kraft)


def canonical_code(lengths: Sequence[int]) -> PrefixCode:
    """Kraft construction: assign codewords in (length, symbol index) order."""
    if any(l < 1 for l in lengths):
        raise InvalidCode("codeword lengths must be positive")
    if sum(Fraction(1, 2**l) for l in lengths) > 1:
        raise InvalidCode(f"lengths {tuple(lengths)} violate the Kraft inequality")
    order = sorted(range(len(lengths)), key=lambda a: (lengths[a], a))
    words = [""] * len(lengths)
    value = 0
    prev = lengths[order[0]]
    for a in order:
        value <<= lengths[a] - prev
        prev = lengths[a]
        words[a] = format(value, f"0{prev}b")
        value += 1
    return PrefixCode(tuple(words))


def huffman_lengths(p) -> tuple[int, ...]:
    """Optimal codeword lengths; ties merge the node with the smaller symbol index first."""
    w = _weights(p)
    q = w.size
    if q == 1:
        return (1,)
    # heap entries: (probability, smallest symbol index in the subtree, members)
    heap = [(float(w[a]), a, (a,)) for a in range(q)]
    heapq.heapify(heap)
    depth = [0] * q
    while len(heap) > 1:
        p1, i1, m1 = heapq.heappop(heap)
        p2, i2, m2 = heapq.heappop(heap)
        for a in m1 + m2:
            depth[a] += 1
        heapq.heappush(heap, (p1 + p2, min(i1, i2), m1 + m2))
    return tuple(depth)


def build_code(p, method: str = "optimal") -> PrefixCode:
    """Shannon code (lengths ceil(-log2 p)) or an optimal (Huffman) code."""
    w = _weights(p)
    if np.any(w <= 0):
        raise ZeroProbabilitySymbol("every symbol needs positive probability")
    if method == "shannon":
        lengths = [max(1, _ceil_log2_inv(x)) for x in w]
    elif method == "optimal":
        lengths = list(huffman_lengths(w))
    else:
        raise ValueError(f"unknown method {method!r}")
    return canonical_code(lengths)


def _ceil_log2_inv(x: float) -> int:
    """ceil(-log2 x), exact for dyadic x."""
    mant, exp = math.frexp(x)
    if mant == 0.5:
        return 1 - exp
    return math.ceil(-math.log2(x))


def expected_length(code: PrefixCode, p) -> float:
    """L(C, p) = sum p(a) len(C(a))."""
    w = _weights(p)
    if code.q != w.size:
        raise InvalidCode(f"code covers {code.q} symbols, distribution has {w.size}")
    return float(np.dot(w, code.lengths))


def per_symbol_length(code: PrefixCode, p, N: int) -> float:
    """L(C^N, P^N_p) / N for the concatenated word code.

    Evaluated by exact expectation over type classes (the codeword length of
    a word depends only on its symbol counts), then checked against L(C, p).
    """
    w = _weights(p)
    if code.q != w.size:
        raise InvalidCode(f"code covers {code.q} symbols, distribution has {w.size}")
    lengths = np.asarray(code.lengths, dtype=float)
    if w.size ** N <= 2**16:
        total = 0.0
        for counts in _compositions(N, w.size):
            c = np.asarray(counts)
            used = c > 0
            if np.any(w[used] == 0):
                continue
            logp = log_multinomial(counts) + float(np.dot(c[used], np.log(w[used])))
            total += math.exp(logp) * float(np.dot(c, lengths))
        value = total / N
    else:
        value = float(np.dot(w, lengths))
    single = expected_length(code, w)
    assert math.isclose(value, single, rel_tol=1e-9, abs_tol=1e-12), (value, single)
    return value


@dataclass(frozen=True)
class TypicalSet:
    """The weak-AEP set {sigma : P(sigma) in [2^-N(h+eps), 2^-N(h-eps)]}.

    ``probability`` is exact in "exact" mode (capped at 2^30 strings) and in
    "types" mode (no cap; same type-class sum), and a Monte Carlo estimate
    with a 95% Wilson interval in "monte_carlo" mode. The cardinality bound
    |T| <= 2^{N(h+eps)} is stored as a base-2 log.
    """

    N: int
    eps: float
    entropy_bits: float
    probability: float
    mode: str
    cardinality: int | None
    log2_cardinality_bound: float
    interval: tuple[float, float] | None = None
    weights: tuple[float, ...] = ()

    def contains(self, sigma: SymbolString) -> bool:
        w = np.asarray(self.weights)
        counts = np.bincount(sigma.symbols, minlength=w.size)
        return _in_band(counts, w, self.N, self.entropy_bits, self.eps)


def _log2_prob(counts: np.ndarray, w: np.ndarray) -> float:
    used = counts > 0
    if np.any(w[used] == 0):
        return -math.inf
    return float(np.dot(counts[used], np.log2(w[used])))


def _in_band(counts, w, N, h, eps) -> bool:
    if math.isinf(eps):
        return True
    lp = _log2_prob(np.asarray(counts), w)
    # relative slack absorbs rounding when a bound is hit exactly (flat measures)
    slack = 1e-9 * max(1.0, abs(lp))
    return -N * (h + eps) - slack <= lp <= -N * (h - eps) + slack


def typical_set(p, N: int, eps: float, mode: str = "exact", samples: int = 100_000,
                rng: RngStream | None = None) -> TypicalSet:
    w = _weights(p)
    q = w.size
    h = shannon_entropy(w, 2)
    log2_bound = N * (h + eps) if not math.isinf(eps) else N * math.log2(q)
    log2_bound = min(log2_bound, N * math.log2(q))
    if mode in ("exact", "types"):
        # "types" is the same exact type-class sum without the state cap
        if mode == "exact" and q**N > EXACT_STATE_LIMIT:
            raise TooLargeForExact(f"{q}^{N} states exceed the exact-mode cap of 2^30")
        prob = 0.0
        card = 0
        # membership depends only on the type, so sum over type classes
        for counts in _compositions(N, q):
            c = np.asarray(counts)
            if _in_band(c, w, N, h, eps):
                lm = log_multinomial(counts)
                card += _multinomial(counts)
                lp = _log2_prob(c, w)
                if lp > -math.inf:
                    prob += math.exp(lm + lp * math.log(2))
        return TypicalSet(N, eps, h, min(prob, 1.0), mode, card, log2_bound, None, tuple(w.tolist()))
    if mode == "monte_carlo":
        if rng is None:
            raise ValueError("monte_carlo mode needs an rng")
        dist = p if isinstance(p, DiscreteDistribution) else DiscreteDistribution(Alphabet.of_size(q), w)
        hits = 0
        for _ in range(samples):
            s = sample_string(dist, N, rng)
            hits += _in_band(np.bincount(s.symbols, minlength=q), w, N, h, eps)
        est = hits / samples
        return TypicalSet(N, eps, h, est, "monte_carlo", None, log2_bound, _wilson(hits, samples),
                          tuple(w.tolist()))
    raise ValueError(f"unknown mode {mode!r}")


def _wilson(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    phat = k / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))
