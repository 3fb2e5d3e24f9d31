import io
import math
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from typlab import coding
from typlab.core import DiscreteDistribution, RngStream, SymbolString, sample_string
from typlab.entropy_ldp import shannon_entropy


def test_validate_examples():
    c = coding.validate_code(["0", "10", "11"])
    assert c.prefix_free and c.kraft_sum == 1
    assert not coding.validate_code(["0", "01"]).prefix_free
    c = coding.validate_code(["00", "01", "10", "11", "110"])
    assert c.kraft_sum == Fraction(9, 8) and not c.kraft_ok and not c.prefix_free
    with pytest.raises(coding.InvalidCode):
        coding.validate_code(["0", ""])


def _prefix_free_bruteforce(words):
    return len(set(words)) == len(words) and not any(
        a != b and b.startswith(a) for a in words for b in words
    )


@given(st.lists(st.text(alphabet="01", min_size=1, max_size=5), min_size=1, max_size=7))
def test_prefix_check_matches_pairwise(words):
    assert coding.validate_code(words).prefix_free == _prefix_free_bruteforce(words)


def test_build_code_examples():
    code = coding.build_code([0.5, 0.25, 0.25], "optimal")
    assert code.codewords == ("0", "10", "11")
    assert coding.expected_length(code, [0.5, 0.25, 0.25]) == 1.5
    sh = coding.build_code([0.9, 0.1], "shannon")
    assert sh.lengths == (1, 4)
    assert coding.expected_length(sh, [0.9, 0.1]) == pytest.approx(1.3)
    flat = coding.build_code(DiscreteDistribution.flat(8), "optimal")
    assert set(flat.lengths) == {3}
    with pytest.raises(coding.ZeroProbabilitySymbol):
        coding.build_code([1.0, 0.0], "optimal")


def test_expected_length_missing_symbol():
    with pytest.raises(coding.InvalidCode):
        coding.expected_length(coding.PrefixCode(("0", "1")), [0.2, 0.3, 0.5])


@lru_cache(maxsize=None)
def _achievable_lengths(q: int) -> frozenset:
    """Length vectors of every prefix-free q-tuple of binary words of length <= q."""
    words = ["".join(b) for n in range(1, q + 1) for b in product("01", repeat=n)]
    found = set()

    def extend(chosen):
        if len(chosen) == q:
            found.add(tuple(len(w) for w in chosen))
            return
        for w in words:
            if all(not w.startswith(c) and not c.startswith(w) for c in chosen):
                extend(chosen + [w])

    extend([])
    return frozenset(found)


def _exhaustive_min(p):
    fp = [Fraction(float(x)) for x in p]
    return min(sum(a * l for a, l in zip(fp, ls)) for ls in _achievable_lengths(len(p)))


def test_equality_case_by_exhaustive_search():
    p = [0.5, 0.25, 0.25]
    assert _exhaustive_min(p) == Fraction(3, 2) == Fraction(shannon_entropy(p, 2))


@pytest.mark.parametrize("q", [2, 3, 4])
def test_optimal_matches_exhaustive_search(q):
    rng = np.random.default_rng(100 + q)
    for _ in range(60):
        p = rng.dirichlet(np.ones(q) * rng.uniform(0.2, 3))
        p = np.maximum(p, 1e-9)
        p = p / p.sum()
        code = coding.build_code(p, "optimal")
        L = sum(Fraction(float(a)) * l for a, l in zip(p, code.lengths))
        assert L == _exhaustive_min(p)


def test_sandwich_on_random_distributions():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        q = int(rng.integers(2, 9))
        p = rng.dirichlet(np.ones(q))
        p = np.maximum(p, 1e-12)
        p /= p.sum()
        h = shannon_entropy(p, 2)
        Lo = coding.expected_length(coding.build_code(p, "optimal"), p)
        Ls = coding.expected_length(coding.build_code(p, "shannon"), p)
        assert h <= Lo + 1e-12 and Lo <= Ls + 1e-12 and Ls <= h + 1 + 1e-12


@given(st.integers(1, 5).flatmap(lambda k: st.permutations([2.0**-i for i in range(1, k + 1)] + [2.0**-k])))
def test_dyadic_optimal_codes_are_complete(p):
    code = coding.build_code(list(p), "optimal")
    check = coding.validate_code(code)
    assert check.prefix_free and check.kraft_sum == 1
    assert coding.expected_length(code, list(p)) == pytest.approx(shannon_entropy(list(p), 2))


@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=10), st.sampled_from(["optimal", "shannon"]))
def test_built_codes_validate(raw, method):
    p = np.asarray(raw) / np.sum(raw)
    check = coding.validate_code(coding.build_code(p, method))
    assert check.prefix_free and check.kraft_ok


def test_encode_decode_roundtrip():
    p = DiscreteDistribution.bernoulli(0.3)
    p5 = coding.build_code(np.array([0.4, 0.2, 0.2, 0.1, 0.1]), "optimal")
    from typlab.core import make_distribution
    dist = make_distribution(5, [0.4, 0.2, 0.2, 0.1, 0.1])
    s = sample_string(dist, 10_000, RngStream(4, 4))
    assert p5.decode(p5.encode(s), s.alphabet) == s
    c2 = coding.build_code(p, "shannon")
    s2 = sample_string(p, 10_000, RngStream(4, 5))
    assert c2.decode(c2.encode(s2)) == s2


def test_per_symbol_length():
    p = [0.5, 0.25, 0.25]
    code = coding.build_code(p, "optimal")
    for N in (1, 2, 5, 9):
        assert coding.per_symbol_length(code, p, N) == pytest.approx(1.5, abs=1e-12)
    flat = coding.build_code(DiscreteDistribution.flat(4), "optimal")
    assert coding.per_symbol_length(flat, DiscreteDistribution.flat(4), 6) == pytest.approx(2.0)


def test_code_table_csv():
    text = coding.build_code([0.5, 0.25, 0.25]).to_csv([0.5, 0.25, 0.25], io.StringIO())
    assert text.splitlines() == ["symbol,probability,codeword,length", "0,0.5,0,1", "1,0.25,10,2", "2,0.25,11,2"]


def test_typical_set_flat_is_everything():
    for N in (1, 5, 12):
        ts = coding.typical_set(DiscreteDistribution.flat(2), N, 0.01)
        assert ts.probability == pytest.approx(1.0, abs=1e-12) and ts.cardinality == 2**N


def test_typical_set_infinite_eps():
    ts = coding.typical_set([0.9, 0.1], 15, math.inf)
    assert ts.probability == pytest.approx(1.0, abs=1e-12)


def _enumerated_typical_probability(N, p1=0.1, eps=0.1):
    ones = np.array([bin(i).count("1") for i in range(2**N)])
    logp = ones * math.log2(p1) + (N - ones) * math.log2(1 - p1)
    h = shannon_entropy([1 - p1, p1], 2)
    inside = (logp >= -N * (h + eps)) & (logp <= -N * (h - eps))
    return float(np.sum(np.exp2(logp[inside])))


# exact probabilities of the eps = 0.1 typical set for p = (0.9, 0.1)
FROZEN = {10: 0.387420489, 20: 0.2851798070}


@pytest.mark.parametrize("N", [10, 20])
def test_typical_probability_matches_enumeration(N):
    ts = coding.typical_set([0.9, 0.1], N, 0.1, mode="exact")
    assert ts.probability == pytest.approx(_enumerated_typical_probability(N), rel=1e-9)
    assert ts.probability == pytest.approx(FROZEN[N], rel=1e-8)


def test_typical_probability_small_n_is_not_monotone_but_tends_to_one():
    # the mass dips from N = 10 to N = 30 before the AEP takes over
    probs = {N: coding.typical_set([0.9, 0.1], N, 0.1, mode="types").probability for N in (10, 20, 30, 50, 100, 200, 400, 1000)}
    assert probs[20] < probs[10]
    seq = [probs[N] for N in (50, 100, 200, 400, 1000)]
    assert all(a < b for a, b in zip(seq, seq[1:])) and seq[-1] > 0.99


def test_typical_cardinality_bound():
    ts = coding.typical_set([0.9, 0.1], 20, 0.1)
    assert math.log2(ts.cardinality) <= ts.log2_cardinality_bound


def test_typical_exact_mode_cap():
    with pytest.raises(coding.TooLargeForExact):
        coding.typical_set([0.5, 0.5], 31, 0.1, mode="exact")


def test_typical_monte_carlo_interval_covers_exact():
    exact = coding.typical_set([0.9, 0.1], 20, 0.1).probability
    mc = coding.typical_set([0.9, 0.1], 20, 0.1, mode="monte_carlo", samples=4000, rng=RngStream(8, 0))
    lo, hi = mc.interval
    assert lo <= exact <= hi


def test_typical_set_membership():
    ts = coding.typical_set([0.9, 0.1], 10, 0.1)
    assert ts.contains(SymbolString.from_text("0000000001"))
    assert not ts.contains(SymbolString.from_text("0000000000"))
