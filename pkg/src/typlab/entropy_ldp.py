"""Entropy functionals, Boltzmann state counting and large-deviation rates.

Conventions: ``I`` (relative entropy, the rate) is positive and convex and is
minimized; the Boltzmann entropy ``s_B = -I`` is negative and concave and is
maximized. Every function takes an explicit log base; large-deviation
quantities default to nats.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import logsumexp

from .core import (
    AlphabetMismatch,
    DiscreteDistribution,
    EmptyInput,
    SymbolString,
    TyplabError,
    empirical_measure,
    log_in_base,
)

__all__ = [
    "OutOfRange",
    "TypeVector",
    "BoltzmannCount",
    "SanovResult",
    "CramerResult",
    "RateProfile",
    "HoeffdingResult",
    "shannon_entropy",
    "kl_divergence",
    "nearest_type",
    "log_multinomial",
    "boltzmann_counting",
    "simplex_grid",
    "sanov_rate",
    "type_class_log_probability",
    "log_partition",
    "cramer_primal",
    "cramer_dual",
    "cramer_profile",
    "cramer_rate_profile",
    "hoeffding_test",
]

EXACT_FACTORIAL_MAX_N = 2000


class OutOfRange(TyplabError, ValueError):
    pass


def _weights(mu) -> np.ndarray:
    if isinstance(mu, DiscreteDistribution):
        return mu.weights
    return np.asarray(mu, dtype=float)


def shannon_entropy(mu, base: float = math.e) -> float:
    """-sum mu log mu with 0 log 0 = 0."""
    w = _weights(mu)
    w = w[w > 0]
    return float(-np.sum(w * log_in_base(w, base)))


def kl_divergence(mu, p, base: float = math.e) -> float:
    """Relative entropy I(mu|p); ``inf`` unless mu is absolutely continuous w.r.t. p."""
    if isinstance(mu, DiscreteDistribution) and isinstance(p, DiscreteDistribution):
        if mu.alphabet != p.alphabet:
            raise AlphabetMismatch("kl_divergence needs measures on the same alphabet")
    m, w = _weights(mu), _weights(p)
    if m.shape != w.shape:
        raise AlphabetMismatch(f"shape mismatch {m.shape} vs {w.shape}")
    used = m > 0
    if np.any(w[used] == 0):
        return math.inf
    val = float(np.sum(m[used] * (log_in_base(m[used], base) - log_in_base(w[used], base))))
    # rounding can push I(mu|mu) a hair below zero
    return max(val, 0.0)


@dataclass(frozen=True)
class TypeVector:
    """Integer symbol counts of a string of length N (a point of Prob_N(A))."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValueError(f"counts must be non-negative, got {counts}")
        if len(counts) < 2:
            raise ValueError("need at least two symbols")
        object.__setattr__(self, "counts", counts)

    @property
    def N(self) -> int:
        return sum(self.counts)

    @property
    def q(self) -> int:
        return len(self.counts)

    def measure(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.N

    @classmethod
    def of_string(cls, sigma: SymbolString) -> "TypeVector":
        return cls(tuple(np.bincount(sigma.symbols, minlength=sigma.q).tolist()))


def nearest_type(mu, N: int) -> TypeVector:
    """Largest-remainder rounding of N*mu to integer counts summing to N."""
    w = _weights(mu)
    raw = w * N
    counts = np.floor(raw).astype(int)
    short = N - int(counts.sum())
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return TypeVector(tuple(counts.tolist()))


def log_multinomial(counts: Sequence[int]) -> float:
    """ln(N! / prod c!), exact big-integer arithmetic up to N = 2000, lgamma beyond."""
    N = sum(counts)
    if N <= EXACT_FACTORIAL_MAX_N:
        return math.log(_multinomial(counts))
    return math.lgamma(N + 1) - sum(math.lgamma(c + 1) for c in counts)


def _multinomial(counts: Sequence[int]) -> int:
    out = math.factorial(sum(counts))
    for c in counts:
        out //= math.factorial(c)
    return out


@dataclass(frozen=True)
class BoltzmannCount:
    """Counting data for a type class; logs are in nats.

    ``multiplicity`` is the exact integer N(mu) when N <= 2000, else None.
    """

    N: int
    multiplicity: int | None
    log_multiplicity: float
    log_probability: float
    finite_rate: float
    limit_rate: float

    @property
    def probability(self) -> float:
        return math.exp(self.log_probability)


def boltzmann_counting(mu_counts: TypeVector, p) -> BoltzmannCount:
    """Multiplicity N(mu) and probability W = P^N_p(L_N = mu) of a type class.

    ``limit_rate`` is the Boltzmann entropy s_B(mu|p) = -I(mu|p); the finite
    rate (1/N) ln W approaches it at O(log N / N).
    """
    counts = mu_counts.counts
    w = _weights(p)
    if len(counts) != w.size:
        raise AlphabetMismatch("type vector and measure have different alphabet sizes")
    N = mu_counts.N
    mult = _multinomial(counts) if N <= EXACT_FACTORIAL_MAX_N else None
    log_mult = math.log(mult) if mult is not None else log_multinomial(counts)
    c = np.asarray(counts)
    used = c > 0
    if np.any(w[used] == 0):
        log_w = -math.inf
        limit = -math.inf
    else:
        log_w = log_mult + float(np.dot(c[used], np.log(w[used])))
        limit = -kl_divergence(mu_counts.measure(), w)
    finite = log_w / N if N > 0 else 0.0
    return BoltzmannCount(N, mult, log_mult, log_w, finite, limit)


def simplex_grid(q: int, step: float = 1e-3) -> np.ndarray:
    """All measures on q symbols whose weights are multiples of ``step``.

    Rows of the returned (M, q) array; barycentric order (lexicographic in the
    leading coordinates).
    """
    k = int(round(1.0 / step))
    if not math.isclose(k * step, 1.0, rel_tol=1e-9):
        raise ValueError("step must divide 1")
    rows = list(_compositions(k, q))
    return np.asarray(rows, dtype=float) / k


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


@dataclass(frozen=True)
class SanovResult:
    rate: float
    argmin_index: int
    argmin: np.ndarray


def sanov_rate(grid, p, base: float = math.e) -> SanovResult:
    """I(Gamma|p) = min over a finite measure grid of I(mu|p); ties go to the first index.

    A finite grid is an inner approximation of Gamma; no tightness is claimed.
    """
    rows = [_weights(mu) for mu in grid] if not isinstance(grid, np.ndarray) else list(grid)
    if not rows:
        raise EmptyInput("Sanov rate of an empty set")
    rates = np.array([kl_divergence(r, p, base) for r in rows])
    i = int(np.argmin(rates))
    return SanovResult(float(rates[i]), i, np.asarray(rows[i]))


def type_class_log_probability(p, N: int, predicate: Callable[[np.ndarray], bool]) -> float:
    """ln P^N_p(L_N in Gamma) summed exactly over the type classes in Gamma.

    ``predicate`` receives the empirical measure (counts / N) of each type.
    """
    w = _weights(p)
    logs = []
    for counts in _compositions(N, w.size):
        tv = TypeVector(counts)
        if predicate(tv.measure()):
            logs.append(boltzmann_counting(tv, w).log_probability)
    if not logs:
        return -math.inf
    return float(logsumexp(logs))


def log_partition(beta: float, p, energies: Sequence[float]) -> float:
    """Free energy f(beta|p) = ln sum_a p(a) exp(-beta * e_a)."""
    w = _weights(p)
    e = np.asarray(energies, dtype=float)
    used = w > 0
    return float(logsumexp(-beta * e[used], b=w[used]))


def _gibbs(beta: float, p, energies) -> np.ndarray:
    w = _weights(p)
    e = np.asarray(energies, dtype=float)
    out = np.zeros_like(w)
    used = w > 0
    logits = np.log(w[used]) - beta * e[used]
    logits -= logits.max()
    g = np.exp(logits)
    out[used] = g / g.sum()
    return out


def _energy_hull(p, energies) -> tuple[float, float]:
    w = _weights(p)
    e = np.asarray(energies, dtype=float)[w > 0]
    return float(e.min()), float(e.max())


def _boundary_entropy(u: float, p, energies) -> float | None:
    lo, hi = _energy_hull(p, energies)
    if u != lo and u != hi:
        return None
    w = _weights(p)
    e = np.asarray(energies, dtype=float)
    return float(math.log(w[(e == u) & (w > 0)].sum()))


def cramer_dual(u: float, p, energies, bracket: float = 50.0, tol: float = 1e-10) -> tuple[float, float]:
    """inf over beta of beta*u + f(beta|p) by bounded scalar minimization.

    Returns (value, beta). The bracket [-bracket, bracket] is doubled while the
    minimizer sits on its edge, so near-boundary u values still converge.
    """
    def g(beta: float) -> float:
        return beta * u + log_partition(beta, p, energies)

    width = bracket
    while True:
        beta = float(minimize_scalar(g, bounds=(-width, width), method="bounded",
                                     options={"xatol": tol}).x)
        if abs(beta) < width * (1 - 1e-6) or width >= 1e6:
            return g(beta), beta
        width *= 2


def cramer_primal(u: float, p, energies) -> tuple[float, np.ndarray]:
    """sup of s_B(mu|p) over the simplex subject to sum mu(a) e_a = u.

    Solved directly as a constrained program (closed form for two symbols,
    SLSQP otherwise). Returns (value in nats, maximizing measure).
    """
    w = _weights(p)
    e = np.asarray(energies, dtype=float)
    lo, hi = _energy_hull(w, e)
    if not (lo <= u <= hi):
        raise OutOfRange(f"u={u} outside the energy hull [{lo}, {hi}]")
    used = np.flatnonzero(w > 0)
    ws, es = w[used], e[used]
    full = np.zeros_like(w)
    if ws.size == 1 or lo == hi:
        full[used] = ws / ws.sum()
        return float(np.log(ws.sum())) if lo == hi else 0.0, full
    if ws.size == 2:
        t = (u - es[0]) / (es[1] - es[0])
        mu = np.clip(np.array([1 - t, t]), 0.0, 1.0)
        full[used] = mu
        return -kl_divergence(mu, ws), full

    def obj(m):
        m = np.clip(m, 1e-300, None)
        return float(np.sum(m * (np.log(m) - np.log(ws))))

    def jac(m):
        m = np.clip(m, 1e-300, None)
        return np.log(m) - np.log(ws) + 1.0

    # feasible start: pull p toward the extreme level on u's side of the mean
    ubar = float(np.dot(ws, es))
    ext = np.zeros_like(ws)
    ext[np.argmin(es) if u < ubar else np.argmax(es)] = 1.0
    e_ext = float(np.dot(ext, es))
    lam = 1.0 if e_ext == ubar else (u - e_ext) / (ubar - e_ext)
    x0 = lam * ws + (1 - lam) * ext
    cons = [
        {"type": "eq", "fun": lambda m: np.sum(m) - 1.0, "jac": lambda m: np.ones_like(m)},
        {"type": "eq", "fun": lambda m: np.dot(m, es) - u, "jac": lambda m: es},
    ]
    best = None
    for start in (x0, 0.5 * x0 + 0.5 * _feasible_interior(ws, es, u)):
        res = minimize(obj, start, jac=jac, method="SLSQP", bounds=[(0.0, 1.0)] * ws.size,
                       constraints=cons, options={"ftol": 1e-15, "maxiter": 1000})
        m = np.clip(res.x, 0.0, 1.0)
        m = m / m.sum()
        val = obj(m)
        if best is None or val < best[0]:
            best = (val, m)
    full[used] = best[1]
    return -best[0], full


def _feasible_interior(ws: np.ndarray, es: np.ndarray, u: float) -> np.ndarray:
    """A feasible measure mixing the uniform measure with one extreme level."""
    q = ws.size
    flat = np.full(q, 1.0 / q)
    mean = float(flat @ es)
    ext = np.zeros(q)
    ext[np.argmin(es) if u < mean else np.argmax(es)] = 1.0
    e_ext = float(ext @ es)
    lam = 1.0 if e_ext == mean else (u - e_ext) / (mean - e_ext)
    return lam * flat + (1 - lam) * ext


@dataclass(frozen=True)
class CramerResult:
    """Constrained entropy s_C(u|p) computed two ways (nats)."""

    u: float
    entropy: float
    dual_entropy: float
    duality_gap: float
    beta: float
    witness: np.ndarray
    primal_measure: np.ndarray

    @property
    def rate(self) -> float:
        return -self.entropy


def cramer_profile(u: float, p, energies: Sequence[float]) -> CramerResult:
    """s_C(u|p) by constrained maximization, checked against its Legendre dual.

    ``witness`` is the Gibbs measure p(a) e^{-beta e_a} / Z at the dual optimum.
    At a hull endpoint both routes return ln p(energy == u).
    """
    lo, hi = _energy_hull(p, energies)
    if not (lo <= u <= hi):
        raise OutOfRange(f"u={u} outside the energy hull [{lo}, {hi}]")
    boundary = _boundary_entropy(u, p, energies)
    if boundary is not None:
        w = _weights(p)
        e = np.asarray(energies, dtype=float)
        m = np.where(e == u, w, 0.0)
        m = m / m.sum()
        beta = math.inf if u == lo else -math.inf
        return CramerResult(u, boundary, boundary, 0.0, beta, m, m)
    primal, mu = cramer_primal(u, p, energies)
    dual, beta = cramer_dual(u, p, energies)
    return CramerResult(u, primal, dual, abs(primal - dual), beta, _gibbs(beta, p, energies), mu)


@dataclass
class RateProfile:
    """Rates (nats, >= 0) over a grid of measures or energies, with witnesses."""

    points: list
    rates: np.ndarray
    witnesses: list
    label: str = "u"

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        width = max((len(np.atleast_1d(w)) for w in self.witnesses), default=0)
        writer.writerow([self.label, "rate"] + [f"witness_{i}" for i in range(width)])
        for pt, r, wit in zip(self.points, self.rates, self.witnesses):
            writer.writerow([_fmt(pt), _fmt(r)] + [_fmt(x) for x in np.atleast_1d(wit)])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def cramer_rate_profile(u_grid: Iterable[float], p, energies) -> RateProfile:
    results = [cramer_profile(float(u), p, energies) for u in u_grid]
    return RateProfile(
        points=[r.u for r in results],
        rates=np.array([r.rate for r in results]),
        witnesses=[r.witness for r in results],
        label="u",
    )


@dataclass(frozen=True)
class HoeffdingResult:
    statistic: float
    threshold: float
    accept: bool


def hoeffding_test(sigma: SymbolString, mu0, eta: float) -> HoeffdingResult:
    """Accept H0: mu = mu0 iff I(L_N(sigma)|mu0) < eta (strict)."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    stat = kl_divergence(empirical_measure(sigma), mu0)
    return HoeffdingResult(stat, eta, stat < eta)
