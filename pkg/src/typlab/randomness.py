"""Finite sequential randomness tests and an LZ78 complexity surrogate.

Every built-in test is a family of prefix events ``E_M`` (a property of the
first M symbols) with a certified bound ``P_f(E_M) <= b_M`` under the flat
measure and a weight ``w_M`` with ``sum_M w_M <= 1``. The level certified by
the event at prefix length M is::

    score_M = log_q(w_M / b_M) - log_q(q - 1)

and ``member(n, sigma)`` holds iff some prefix of sigma has ``score_M >= n``.
Then ``P_f(V_n) <= sum_M b_M <= q^-n / (q - 1)``, which is the counting bound
``|V_n ∩ A^N| <= q^(N-n) / (q - 1)``. Nesting and closure under extension hold
by construction because levels only look at prefixes.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (
    DiscreteDistribution,
    RngStream,
    SymbolStream,
    SymbolString,
    TyplabError,
    sample_string,
    string_probability,
)

__all__ = [
    "TooShort",
    "SequentialTest",
    "RunsOfOnes",
    "LLNDeviation",
    "BorelBlock",
    "SubstringCoverage",
    "TestReport",
    "ComplexityReport",
    "AxiomCheck",
    "battery_tests",
    "builtin_battery",
    "test_level",
    "verify_sequential_test",
    "all_strings",
    "lz78_phrase_ends",
    "lz78_complexity",
    "lz78_bits",
    "randomness_deficiency",
    "complexity_rate_curve",
    "calibrate_deficiency",
    "battery_csv",
]

BATTERY_MIN_LENGTH = 64
DEFAULT_THRESHOLD = 20


class TooShort(TyplabError, ValueError):
    pass


def _as_batch(sigma) -> tuple[np.ndarray, int]:
    if isinstance(sigma, SymbolString):
        return sigma.symbols[None, :], sigma.q
    arr = np.asarray(sigma, dtype=np.uint8)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr, int(arr.max()) + 1 if arr.size else 2


class SequentialTest:
    """Base class: subclasses provide ``event_scores``.

    ``event_scores(batch)`` maps an (S, N) array of symbol indices to an
    (S, N) float array whose column M-1 is the level certified by the event
    at prefix length M (``-inf`` where the event does not occur).
    """

    test_id = "abstract"
    certificate = ""

    def __init__(self, q: int = 2):
        if q < 2:
            raise ValueError("alphabet size must be at least 2")
        self.q = q

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.test_id!r}, q={self.q})"

    def event_scores(self, batch: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _log_q(self, x):
        return np.log(x) / math.log(self.q)

    def _score(self, log_bound, log_weight):
        """Level from natural-log bound and weight arrays."""
        return (log_weight - log_bound - math.log(self.q - 1)) / math.log(self.q)

    def level_curve(self, batch: np.ndarray) -> np.ndarray:
        """m(sigma_{|M}) for every prefix length M = 1..N, shape (S, N)."""
        batch = np.atleast_2d(batch)
        if batch.shape[1] == 0:
            return np.zeros((batch.shape[0], 0), dtype=np.int64)
        scores = self.event_scores(batch)
        best = np.maximum.accumulate(scores, axis=1)
        with np.errstate(invalid="ignore"):
            levels = np.floor(np.where(np.isneginf(best), 0.0, best))
        levels = np.maximum(levels, 0).astype(np.int64)
        lengths = np.arange(1, batch.shape[1] + 1)
        return np.minimum(levels, lengths)

    def levels(self, batch: np.ndarray) -> np.ndarray:
        batch = np.atleast_2d(batch)
        if batch.shape[1] == 0:
            return np.zeros(batch.shape[0], dtype=np.int64)
        return self.level_curve(batch)[:, -1]

    def member(self, n: int, sigma) -> np.ndarray | bool:
        """Direct membership predicate sigma in V_n."""
        batch, _ = _as_batch(sigma)
        if batch.shape[1] == 0:
            out = np.zeros(batch.shape[0], dtype=bool)
        else:
            out = np.any(self.event_scores(batch) >= n, axis=1)
        return bool(out[0]) if isinstance(sigma, SymbolString) else out


class RunsOfOnes(SequentialTest):
    """Strings that start with a long run of the top symbol.

    For q = 2 this is V_n = {sigma : 1^n is a prefix of sigma}; for q > 2 the
    run must have length n + 1 so the counting bound keeps its 1/(q-1) factor.
    """

    test_id = "RUNS_OF_ONES"
    certificate = "|V_n ∩ A^N| = q^(N-n-s) with s = 0 for q = 2, else 1"

    def event_scores(self, batch):
        top = self.q - 1
        shift = 0 if self.q == 2 else 1
        run = np.logical_and.accumulate(batch == top, axis=1)
        M = np.arange(1, batch.shape[1] + 1, dtype=float)
        return np.where(run, M - shift, -np.inf)


class LLNDeviation(SequentialTest):
    """Deviation of running symbol frequencies from 1/q.

    Event at prefix M >= min_prefix: max_a |k_a/M - 1/q| >= d, bounded by
    Hoeffding as c * exp(-2 M d^2) (c = 2 for q = 2, 2q otherwise) with
    weight min_prefix / (M (M + 1)).
    """

    test_id = "LLN_DEVIATION"
    certificate = "Hoeffding + union bound over prefix lengths"

    def __init__(self, q: int = 2, min_prefix: int = BATTERY_MIN_LENGTH):
        super().__init__(q)
        self.min_prefix = max(1, int(min_prefix))

    def event_scores(self, batch):
        S, N = batch.shape
        M = np.arange(1, N + 1, dtype=float)
        dev = np.zeros((S, N))
        for a in range(self.q if self.q > 2 else 1):
            freq = np.cumsum(batch == a, axis=1) / M
            np.maximum(dev, np.abs(freq - 1.0 / self.q), out=dev)
        c = 2.0 if self.q == 2 else 2.0 * self.q
        log_bound = np.minimum(0.0, math.log(c) - 2.0 * M * dev**2)
        log_weight = math.log(self.min_prefix) - np.log(M) - np.log(M + 1)
        scores = self._score(log_bound, log_weight)
        scores[:, : self.min_prefix - 1] = -np.inf
        return scores


class BorelBlock(SequentialTest):
    """Frequencies of non-overlapping k-blocks against the flat value q^-k.

    Event after B complete blocks: max_w |n_w/B - q^-k| >= d, bounded by
    2 q^k exp(-2 B d^2) (2 when q^k = 2), weight 1 / (B (B + 1)).
    """

    certificate = "Hoeffding per block word + union bound over words and block counts"

    def __init__(self, k: int, q: int = 2):
        super().__init__(q)
        if k < 1:
            raise ValueError("block length must be positive")
        self.k = k
        self.test_id = f"BOREL_BLOCK({k})"

    def block_codes(self, batch: np.ndarray) -> np.ndarray:
        S, N = batch.shape
        B = N // self.k
        blocks = batch[:, : B * self.k].reshape(S, B, self.k).astype(np.int64)
        weights = self.q ** np.arange(self.k - 1, -1, -1)
        return blocks @ weights

    def event_scores(self, batch):
        S, N = batch.shape
        out = np.full((S, N), -np.inf)
        B = N // self.k
        if B == 0:
            return out
        codes = self.block_codes(batch)
        nwords = self.q**self.k
        nb = np.arange(1, B + 1, dtype=float)
        dev = np.zeros((S, B))
        for w in range(nwords):
            freq = np.cumsum(codes == w, axis=1) / nb
            np.maximum(dev, np.abs(freq - 1.0 / nwords), out=dev)
        c = 2.0 if nwords == 2 else 2.0 * nwords
        log_bound = np.minimum(0.0, math.log(c) - 2.0 * nb * dev**2)
        log_weight = -np.log(nb) - np.log(nb + 1)
        out[:, self.k - 1 : B * self.k : self.k] = self._score(log_bound, log_weight)
        return out

    def frequencies(self, sigma: SymbolString) -> dict[str, float]:
        codes = self.block_codes(sigma.symbols[None, :])[0]
        counts = np.bincount(codes, minlength=self.q**self.k)
        total = max(1, codes.size)
        return {_word(w, self.k, self.q): float(counts[w] / total) for w in range(self.q**self.k)}


def _word(code: int, k: int, q: int) -> str:
    digits = []
    for _ in range(k):
        digits.append(str(code % q))
        code //= q
    return "".join(reversed(digits))


class SubstringCoverage(SequentialTest):
    """Some word of length L has not yet occurred (overlapping windows).

    Event at prefix M: a length-L word is absent from sigma_{|M}. Absence
    anywhere implies absence among the floor(M/L) disjoint blocks, so
    P_f <= q^L (1 - q^-L)^floor(M/L); weight 1 / (M (M + 1)). This is a
    heuristic finite stand-in for the infinitely-often property of random
    sequences, and only has power once M is well beyond L q^L.
    """

    certificate = "disjoint-block absence bound + union over words and prefix lengths"

    def __init__(self, L: int, q: int = 2):
        super().__init__(q)
        if L < 1:
            raise ValueError("word length must be positive")
        self.L = L
        self.test_id = f"SUBSTRING_COVERAGE({L})"

    def completion_time(self, batch: np.ndarray) -> np.ndarray:
        """Smallest M by which every L-word has occurred (N + 1 if never)."""
        S, N = batch.shape
        L, q = self.L, self.q
        windows = N - L + 1
        nwords = q**L
        if windows < nwords:
            # too few windows to hold every word
            return np.full(S, N + 1)
        codes = np.zeros((S, windows), dtype=np.int64)
        for j in range(L):
            codes = codes * q + batch[:, j : j + windows]
        out = np.empty(S, dtype=np.int64)
        if S == 1:
            uniq, first = np.unique(codes[0], return_index=True)
            out[0] = N + 1 if uniq.size < nwords else int(first.max()) + L
            return out
        # first completion index of every word, filled from the right so the earliest wins
        first = np.full((S, nwords), N + 1, dtype=np.int64)
        rows = np.arange(S)
        for j in range(windows - 1, -1, -1):
            first[rows, codes[:, j]] = j + L
        return first.max(axis=1)

    def event_scores(self, batch):
        S, N = batch.shape
        M = np.arange(1, N + 1, dtype=float)
        nwords = float(self.q**self.L)
        blocks = np.floor(M / self.L)
        log_bound = np.minimum(0.0, math.log(nwords) + blocks * math.log1p(-1.0 / nwords))
        log_weight = -np.log(M) - np.log(M + 1)
        base = self._score(log_bound, log_weight)
        done = self.completion_time(batch)
        return np.where(M[None, :] < done[:, None], base[None, :], -np.inf)


def battery_tests(N: int, q: int = 2, min_prefix: int = BATTERY_MIN_LENGTH) -> list[SequentialTest]:
    """The fixed battery for strings of length N."""
    tests: list[SequentialTest] = [RunsOfOnes(q), LLNDeviation(q, min_prefix)]
    tests += [BorelBlock(k, q) for k in (1, 2, 3)]
    L_max = int(math.floor(math.log(N) / math.log(q) + 1e-12)) - 2
    tests += [SubstringCoverage(L, q) for L in range(1, L_max + 1)]
    return tests


@dataclass
class TestReport:
    __test__ = False  # not a pytest class

    test_id: str
    N: int
    m: int
    threshold: int
    flagged: bool
    verdict: str
    curve: list[tuple[int, int]] = field(default_factory=list)
    detail: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _checkpoints(N: int) -> list[int]:
    pts = []
    n = 64
    while n < N:
        pts.append(n)
        n *= 2
    pts.append(N)
    return [p for p in pts if p <= N]


def test_level(test: SequentialTest, sigma: SymbolString, checkpoints: Sequence[int] | None = None,
               threshold: int = DEFAULT_THRESHOLD) -> TestReport:
    """Level m = max{n : sigma in V_n} (0 if none) plus its prefix curve.

    ``verdict`` is "unbounded" when the level is at or above ``threshold``
    and still rose over the last checkpoint interval.
    """
    N = len(sigma)
    if N == 0:
        raise ValueError("test_level needs a nonempty string")
    curve_all = test.level_curve(sigma.symbols[None, :])[0]
    m = int(curve_all[-1])
    assert m <= N
    pts = list(checkpoints) if checkpoints is not None else _checkpoints(N)
    pts = [p for p in pts if 1 <= p <= N]
    curve = [(int(p), int(curve_all[p - 1])) for p in pts]
    rising = len(curve) >= 2 and curve[-1][1] > curve[-2][1]
    verdict = "unbounded" if m >= threshold and rising else "bounded"
    detail = {}
    if isinstance(test, BorelBlock):
        detail["block_frequencies"] = test.frequencies(sigma)
    return TestReport(test.test_id, N, m, threshold, m >= threshold, verdict, curve, detail)


def builtin_battery(sigma: SymbolString, threshold: int = DEFAULT_THRESHOLD,
                    checkpoints: Sequence[int] | None = None) -> list[TestReport]:
    if len(sigma) < BATTERY_MIN_LENGTH:
        raise TooShort(f"battery needs at least {BATTERY_MIN_LENGTH} symbols, got {len(sigma)}")
    tests = battery_tests(len(sigma), sigma.q)
    with ThreadPoolExecutor() as pool:
        return list(pool.map(lambda t: test_level(t, sigma, checkpoints, threshold), tests))


def battery_csv(reports: Iterable[TestReport]) -> str:
    lines = ["test_id,N,m,threshold,verdict"]
    for r in reports:
        verdict = "reject" if r.flagged else "pass"
        lines.append(f"{r.test_id},{r.N},{r.m},{r.threshold},{verdict}")
    return "\n".join(lines) + "\n"


def all_strings(N: int, q: int = 2) -> np.ndarray:
    """Every string of length N in lexicographic order, shape (q^N, N)."""
    idx = np.arange(q**N, dtype=np.int64)
    powers = q ** np.arange(N - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] // powers[None, :]) % q).astype(np.uint8)


@dataclass(frozen=True)
class AxiomCheck:
    test_id: str
    max_N: int
    nesting: bool
    extension_closed: bool
    counting_bound: bool
    worst_ratio: float

    @property
    def ok(self) -> bool:
        return self.nesting and self.extension_closed and self.counting_bound


def verify_sequential_test(test: SequentialTest, max_N: int = 16) -> AxiomCheck:
    """Exhaustive check of the three sequential-test axioms for all N <= max_N.

    worst_ratio is max over (N, n) of |V_n ∩ A^N| / (q^(N-n) / (q-1)).
    """
    q = test.q
    nesting = extension = counting = True
    worst = 0.0
    prev_levels = None
    for N in range(1, max_N + 1):
        batch = all_strings(N, q)
        scores = test.event_scores(batch)
        best = scores.max(axis=1)
        members = [best >= n for n in range(1, N + 2)]
        for n in range(1, N + 1):
            if np.any(members[n] & ~members[n - 1]):
                nesting = False
        for n in range(1, N + 2):
            count = int(members[n - 1].sum())
            cap = q ** (N - n) / (q - 1) if n <= N else q ** (N - n) / (q - 1)
            if count > cap + 1e-9:
                counting = False
            if count:
                worst = max(worst, count / cap)
        levels = test.levels(batch)
        if prev_levels is not None:
            parent = np.arange(q**N) // q
            if np.any(levels < prev_levels[parent]):
                extension = False
            # direct predicate form: every member's one-symbol extensions are members
            for n in range(1, N):
                parent_member = test.member(n, all_strings(N - 1, q))
                if np.any(parent_member[parent] & ~members[n - 1]):
                    extension = False
        prev_levels = levels
    return AxiomCheck(test.test_id, max_N, nesting, extension, counting, worst)


def lz78_phrase_ends(symbols: np.ndarray | SymbolString, q: int | None = None) -> list[int]:
    """End positions (exclusive, 1-based lengths) of the LZ78 phrases.

    Each phrase is the shortest prefix of the remaining input not yet in the
    dictionary; a final phrase may repeat an earlier one.
    """
    if isinstance(symbols, SymbolString):
        q = symbols.q
        symbols = symbols.symbols
    if q is None:
        q = int(np.max(symbols)) + 1 if len(symbols) else 2
    seq = np.asarray(symbols).tolist()
    trie: dict[int, int] = {}
    ends: list[int] = []
    node = 0
    nodes = 1
    for pos, s in enumerate(seq, 1):
        key = node * q + s
        child = trie.get(key)
        if child is None:
            trie[key] = nodes
            nodes += 1
            ends.append(pos)
            node = 0
        else:
            node = child
    if node != 0:
        ends.append(len(seq))
    return ends


def _pointer_bits(c: int) -> int:
    """sum_{i=1..c} ceil(log2 i)."""
    total = 0
    k = 1
    lo = 2  # i in [2^(k-1)+1, 2^k] has ceil(log2 i) = k
    while lo <= c:
        hi = min(c, 2**k)
        total += k * (hi - lo + 1)
        k += 1
        lo = 2 ** (k - 1) + 1
    return total


def lz78_bits(phrases: int, q: int) -> int:
    """C = sum_{i=1..c} (ceil(log2 i) + ceil(log2 q)) bits."""
    return _pointer_bits(phrases) + phrases * math.ceil(math.log2(q))


@dataclass(frozen=True)
class ComplexityReport:
    N: int
    phrases: int
    bits: int
    q: int
    deficiency: float | None = None

    @property
    def rate(self) -> float:
        return self.bits / self.N if self.N else 0.0

    def to_json(self) -> str:
        return json.dumps({**asdict(self), "rate": self.rate})


def lz78_complexity(sigma: SymbolString, p: DiscreteDistribution | None = None) -> ComplexityReport:
    """LZ78 code length: the fixed computable stand-in for prefix complexity.

    With a measure ``p`` the report also carries the deficiency against it.
    """
    if len(sigma) == 0:
        raise ValueError("complexity of the empty string is not defined here")
    c = len(lz78_phrase_ends(sigma))
    bits = lz78_bits(c, sigma.q)
    deficiency = None
    if p is not None:
        lp = string_probability(p, sigma, 2)
        deficiency = math.inf if math.isinf(lp) else -lp - bits
    return ComplexityReport(len(sigma), c, bits, sigma.q, deficiency)


def randomness_deficiency(sigma: SymbolString, p: DiscreteDistribution) -> float:
    """-log2 P^N_p(sigma) - C(sigma) in bits; positive means atypically compressible."""
    lp = string_probability(p, sigma, 2)
    if math.isinf(lp):
        return math.inf
    return -lp - lz78_complexity(sigma).bits


def complexity_rate_curve(stream: SymbolStream | SymbolString, checkpoints: Sequence[int]) -> list[tuple[int, float]]:
    """(N, C(s_{|N}) / N) at each checkpoint, from a single LZ78 pass."""
    pts = list(checkpoints)
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise ValueError("checkpoints must be strictly increasing")
    top = pts[-1]
    sigma = stream.prefix(top) if isinstance(stream, SymbolStream) else stream[:top]
    ends = np.asarray(lz78_phrase_ends(sigma))
    out = []
    for n in pts:
        done = int(np.searchsorted(ends, n, side="right"))
        c = done if done and ends[done - 1] == n else done + 1
        out.append((n, lz78_bits(c, sigma.q) / n))
    return out


@dataclass(frozen=True)
class DeficiencyCalibration:
    N: int
    samples: int
    quantile: float
    threshold: float
    values: np.ndarray

    def inside(self, deficiency: float) -> bool:
        return deficiency <= self.threshold


def calibrate_deficiency(N: int, samples: int, seed: int, p: DiscreteDistribution | None = None,
                         quantile: float = 0.99, first_stream: int = 0) -> DeficiencyCalibration:
    """Upper deficiency band from PRNG samples on streams first_stream.. first_stream+samples-1."""
    p = p or DiscreteDistribution.flat(2)
    vals = np.empty(samples)
    for i in range(samples):
        s = sample_string(p, N, RngStream(seed, first_stream + i))
        vals[i] = randomness_deficiency(s, p)
    thr = float(np.quantile(vals, quantile, method="higher"))
    return DeficiencyCalibration(N, samples, quantile, thr, vals)


__all__.append("DeficiencyCalibration")
