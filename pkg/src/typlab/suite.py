"""Acceptance battery: ten finite-N checks with pass/fail lines.

Each ``criterion_k(seed, quick)`` returns a ``CriterionResult``. ``quick``
shrinks sample counts for smoke runs; the tolerances never change.
Criterion k draws from streams ``k * 10**6 + i`` of the given seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable

import numpy as np
from scipy import stats

from . import brownian as bm
from . import coding, dynamics, entropy_ldp as el, kacring as kr, randomness as rnd
from .core import DiscreteDistribution, RngStream, SymbolString, make_distribution

DEFAULT_SEED = 20240601


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{tag}] {self.number:2d}. {self.title} ({self.seconds:.1f}s): {parts}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + " ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _stream(k: int, i: int, seed: int) -> RngStream:
    return RngStream(seed, k * 10**6 + i)


def _random_measure(rng: RngStream, q: int) -> np.ndarray:
    w = rng.generator.dirichlet(np.ones(q))
    w = np.maximum(w, 1e-3)
    return w / w.sum()


def criterion_1(seed: int, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    trials = 20 if quick else 100
    table = kr.typicality_experiment(0.9, 0.2, 100_001, 30, trials, _stream(1, 0, seed))
    elapsed = time.perf_counter() - t0
    mean_dev = table.max_mean_deviation
    trial_dev = max(r.m_max_abs_dev for r in table.rows)
    ok = mean_dev <= 0.005 and trial_dev <= 0.01 and elapsed <= 60
    return CriterionResult(1, "Kac ring typicality", ok,
                           {"max_mean_dev": mean_dev, "max_trial_dev": trial_dev, "trials": trials,
                            "runtime_s": elapsed}, elapsed)


def _kac_recurrence_exhaustive(R: int) -> bool:
    X, Y = kr.all_microstates(R)
    x = X
    for _ in range(2 * R):
        x = np.roll(x ^ Y, 1, axis=-1)
    return bool(np.array_equal(x, X))


def _kac_reversal_exhaustive(R: int) -> bool:
    X, Y = kr.all_microstates(R)
    n = np.arange(R)
    tx, ty = (-n) % R, (-n - 1) % R
    # tau(T(s)) versus T^{-1}(tau(s))
    Tx = np.roll(X ^ Y, 1, axis=-1)
    lhs_x, lhs_y = Tx[:, tx], Y[:, ty]
    rx, ry = X[:, tx], Y[:, ty]
    rhs_x = np.roll(rx, -1, axis=-1) ^ ry
    return bool(np.array_equal(lhs_x, rhs_x) and np.array_equal(lhs_y, ry))


def criterion_2(seed: int, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    small = all(_kac_recurrence_exhaustive(R) for R in (3, 5, 7))
    big = True
    rng = _stream(2, 0, seed)
    for i in range(100):
        m, s = rng.random(), rng.random()
        st = kr.sample_microstate(m, s, 1001, rng)
        big &= kr.evolve(st, 2 * 1001) == st
        big &= kr.evolve(st, 1001).x.tolist() == (st.x ^ (int(st.y.sum()) % 2)).tolist()
    reversal = _kac_reversal_exhaustive(9)
    ok = small and big and reversal
    return CriterionResult(2, "Kac recurrence and reversal", ok,
                           {"recurrence_3_5_7": small, "recurrence_1001": big, "reversal_ring9": reversal},
                           time.perf_counter() - t0)


def criterion_3(seed: int, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    rng = _stream(3, 0, seed)
    worst = 0.0
    ok = True
    for i in range(20):
        q = 2 + i % 5
        mu, p = _random_measure(rng, q), _random_measure(rng, q)
        for N in (100, 1000, 10_000):
            tv = el.nearest_type(mu, N)
            bc = el.boltzmann_counting(tv, p)
            err = abs(bc.finite_rate + el.kl_divergence(tv.measure(), p))
            bound = 2 * q * math.log(N + 1) / N
            worst = max(worst, err / bound)
            ok &= err <= bound
    return CriterionResult(3, "Boltzmann/Stirling counting", ok, {"worst_err_over_bound": worst},
                           time.perf_counter() - t0)


def criterion_4(seed: int, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    N = 1000
    f = DiscreteDistribution.flat(2)
    lp = el.type_class_log_probability(f, N, lambda m: m[1] >= 0.8)
    oracle = float(stats.binom.logsf(799, N, 0.5))
    err = abs(lp / N + 0.192745)
    bound = (math.log(N + 1) + math.log(2)) / N
    ok = err <= bound and abs(lp - oracle) <= 1e-9 * abs(oracle)
    return CriterionResult(4, "Sanov desk check", ok,
                           {"rate_N": -lp / N, "err": err, "bound": bound, "binomial_oracle_diff": lp - oracle},
                           time.perf_counter() - t0)


def criterion_5(seed: int, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    rng = _stream(5, 0, seed)
    instances = 3 if quick else 10
    worst = 0.0
    for _ in range(instances):
        q = int(rng.generator.integers(2, 7))
        p = _random_measure(rng, q)
        e = rng.generator.uniform(-2, 2, q)
        lo, hi = e.min(), e.max()
        grid = np.linspace(lo, hi, 52)[1:-1]
        for u in grid:
            worst = max(worst, el.cramer_profile(float(u), p, e).duality_gap)
    return CriterionResult(5, "Fenchel duality", worst <= 1e-6, {"worst_gap_nats": worst, "instances": instances},
                           time.perf_counter() - t0)


def _optimal_length_exhaustive(p: np.ndarray) -> Fraction:
    """Minimum expected length over all length vectors up to q obeying Kraft."""
    q = p.size
    if q == 1:
        return Fraction(1)
    fp = [Fraction(float(x)) for x in p]
    best = None
    for lengths in product(range(1, q + 1), repeat=q):
        if sum(Fraction(1, 2**l) for l in lengths) <= 1:
            val = sum(a * l for a, l in zip(fp, lengths))
            best = val if best is None or val < best else best
    return best


def criterion_6(seed: int, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    rng = _stream(6, 0, seed)
    n = 200 if quick else 1000
    sandwich = exhaustive = True
    checked = 0
    for i in range(n):
        q = int(rng.generator.integers(2, 9))
        p = rng.generator.dirichlet(np.ones(q))
        p = make_distribution(q, np.maximum(p, 1e-12)).weights
        h = el.shannon_entropy(p, 2)
        opt = coding.build_code(p, "optimal")
        sh = coding.build_code(p, "shannon")
        Lo = sum(Fraction(float(a)) * l for a, l in zip(p, opt.lengths))
        Ls = sum(Fraction(float(a)) * l for a, l in zip(p, sh.lengths))
        # exact rational comparison; entropy bounds with a float h
        sandwich &= h <= float(Lo) + 1e-12 and Lo <= Ls and float(Ls) <= h + 1 + 1e-12
        sandwich &= coding.validate_code(opt).prefix_free and coding.validate_code(sh).prefix_free
        if q <= 4:
            checked += 1
            exhaustive &= Lo == _optimal_length_exhaustive(p)
    return CriterionResult(6, "Coding sandwich", sandwich and exhaustive,
                           {"sandwich": sandwich, "exhaustive_optimal": exhaustive, "exhaustive_cases": checked,
                            "distributions": n}, time.perf_counter() - t0)


def criterion_7(seed: int, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    N = 10**5 if quick else 10**6
    fair = dynamics.BernoulliShift(DiscreteDistribution.flat(2))
    biased = dynamics.BernoulliShift(DiscreteDistribution.bernoulli(0.1))
    r_fair = dynamics.brudno_rate(fair, fair.sample(_stream(7, 0, seed)), N)
    r_biased = dynamics.brudno_rate(biased, biased.sample(_stream(7, 1, seed)), N)
    rot = dynamics.Rotation(math.sqrt(2) - 1)
    r_rot = dynamics.brudno_rate(rot, 0.0, N)
    dbl = dynamics.DoublingMap()
    r_dbl = dynamics.brudno_rate(dbl, dbl.sample(_stream(7, 2, seed)), N)
    elapsed = time.perf_counter() - t0
    ok = (0.9 <= r_fair <= 1.1 and 0.40 <= r_biased <= 0.54 and r_rot <= 0.02
          and 0.9 <= r_dbl <= 1.1 and elapsed <= 120)
    return CriterionResult(7, "LZ78 complexity rates", ok,
                           {"N": N, "fair": r_fair, "bernoulli_0.9": r_biased, "rotation": r_rot,
                            "doubling": r_dbl, "runtime_s": elapsed}, elapsed)


def criterion_8(seed: int, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    N = 10**5
    ok = True
    measured = {}
    for i, p1 in enumerate((0.5, 0.1, 0.3)):
        p = DiscreteDistribution.bernoulli(p1)
        sysm = dynamics.BernoulliShift(p)
        est = dynamics.smb_estimate(sysm, sysm.sample(_stream(8, i, seed)), N)
        lw = np.log2(p.weights)
        h = float(-np.dot(p.weights, lw))
        var = float(np.dot(p.weights, lw**2)) - h * h
        band = 3 * math.sqrt(max(var, 0.0) / N)
        err = abs(est - h)
        ok &= err <= band + 1e-12
        measured[f"err/band[{1 - p1:g}]"] = err / band if band > 0 else err
    return CriterionResult(8, "SMB per-orbit rate", ok, measured, time.perf_counter() - t0)


def _battery_axiom_tests() -> list[rnd.SequentialTest]:
    tests = rnd.battery_tests(10_000, 2)
    tests += [rnd.LLNDeviation(2, 1), rnd.RunsOfOnes(3), rnd.LLNDeviation(3, 1), rnd.BorelBlock(2, 3)]
    return tests


def criterion_9(seed: int, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    N = 10_000
    samples = 200 if quick else 1000
    f = DiscreteDistribution.flat(2)
    cal = rnd.calibrate_deficiency(N, samples, seed, f, 0.99, first_stream=9 * 10**6)
    inside = float(np.mean(cal.values <= cal.threshold))
    held = rnd.calibrate_deficiency(N, samples, seed, f, 0.99, first_stream=9 * 10**6 + samples)
    held_inside = float(np.mean(held.values <= cal.threshold))
    specials = {
        "zeros": SymbolString.of(np.zeros(N, dtype=np.uint8)),
        "alternating": SymbolString.of(np.tile([0, 1], N // 2)),
        "one_third": dynamics.coarse_grain(dynamics.DoublingMap(), Fraction(1, 3), N),
    }
    rejected = {k: rnd.randomness_deficiency(s, f) > cal.threshold for k, s in specials.items()}
    axioms = True
    max_N = 10 if quick else 16
    for t in _battery_axiom_tests():
        axioms &= rnd.verify_sequential_test(t, max_N if t.q == 2 else 10).ok
    ok = inside >= 0.99 and all(rejected.values()) and axioms
    return CriterionResult(9, "Randomness battery discrimination", ok,
                           {"band_bits": cal.threshold, "inside": inside, "held_out_inside": held_inside,
                            **{f"rejects_{k}": v for k, v in rejected.items()}, "axioms": axioms},
                           time.perf_counter() - t0)


def criterion_10(seed: int, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    trials = 2000 if quick else 10_000
    ends = np.array([bm.sample_path(10_000, _stream(10, i, seed)).values[-1] for i in range(trials)])
    var = float(np.var(ends, ddof=1))
    paths = 20 if quick else 100
    ratios = []
    for i in range(paths):
        ratios.append(bm.modulus_ratio(bm.sample_path(10**6, _stream(10, 100_000 + i, seed)), 1e-3))
    good = sum(r <= 1.2 for r in ratios)
    need = math.ceil(0.99 * paths)
    holder = {}
    reps = 5 if quick else 20
    for N in (10**4, 10**6):
        h4, h6 = [], []
        for i in range(reps):
            path = bm.sample_path(N, _stream(10, 200_000 + N % 997 * 1000 + i, seed))
            h4.append(bm.holder_constant(path, 0.4))
            h6.append(bm.holder_constant(path, 0.6))
        holder[N] = (float(np.median(h4)), float(np.median(h6)))
    g4 = holder[10**6][0] / holder[10**4][0]
    g6 = holder[10**6][1] / holder[10**4][1]
    holder_ok = 2 / 3 <= g4 <= 1.5 and g6 >= 1.25
    rng = _stream(10, 300_000, seed)
    roundtrip = True
    for _ in range(200 if quick else 1000):
        n = int(rng.generator.integers(1, 1001))
        s = bm.SignString(rng.signs(n))
        c = bm.crossing_signs(bm.random_walk_path(s), n)
        roundtrip &= c.signs == s and not c.exhausted
    ok = 0.94 <= var <= 1.06 and good >= need and holder_ok and roundtrip
    return CriterionResult(10, "Brownian path statistics", ok,
                           {"endpoint_var": var, "modulus_ok": f"{good}/{paths}", "modulus_max": max(ratios),
                            "holder_0.4_growth": g4, "holder_0.6_growth": g6, "roundtrip": roundtrip},
                           time.perf_counter() - t0)


CRITERIA: dict[int, Callable[[int, bool], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def run_suite(seed: int = DEFAULT_SEED, quick: bool = False, only=None) -> list[CriterionResult]:
    keys = sorted(CRITERIA) if not only else sorted(only)
    return [CRITERIA[k](seed, quick) for k in keys]
