import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from typlab.core import (
    Alphabet,
    DiscreteDistribution,
    EmptyInput,
    InvalidDistribution,
    RngStream,
    SymbolStream,
    SymbolString,
    empirical_measure,
    make_distribution,
    sample_string,
    string_probability,
)

weights = st.lists(st.floats(0.01, 10.0), min_size=2, max_size=6)


def test_alphabet_labels_unique_and_sized():
    a = Alphabet.of_size(3)
    assert a.size == 3 and a.labels == ("0", "1", "2")
    with pytest.raises(ValueError):
        Alphabet(("a", "a"))


def test_make_distribution_normalizes():
    assert make_distribution(2, [1, 1]).weights.tolist() == [0.5, 0.5]
    d = make_distribution(3, [2, 1, 1])
    assert d.weights.tolist() == [0.5, 0.25, 0.25]
    assert d.normalizer == 4


@pytest.mark.parametrize("raw", [[0, 0], [1, -1], [float("nan"), 1], [float("inf"), 1]])
def test_make_distribution_rejects(raw):
    with pytest.raises(InvalidDistribution):
        make_distribution(2, raw)


def test_distribution_must_sum_to_one():
    with pytest.raises(InvalidDistribution):
        DiscreteDistribution(Alphabet.of_size(2), np.array([0.5, 0.6]))


@given(weights)
def test_normalized_weights_sum_to_one(raw):
    d = make_distribution(len(raw), raw)
    assert abs(d.weights.sum() - 1) <= 1e-12
    assert np.all(d.weights >= 0) and np.all(d.weights <= 1)


def test_flat_and_point_mass():
    assert DiscreteDistribution.flat(4).weights.tolist() == [0.25] * 4
    pm = DiscreteDistribution.point_mass(3, 0)
    s = sample_string(pm, 5, RngStream(1, 2))
    assert str(s) == "00000"


def test_sample_fair_frequency_large_n():
    s = sample_string(DiscreteDistribution.flat(2), 10**6, RngStream(11, 0))
    assert abs(s.symbols.mean() - 0.5) <= 0.002


def test_sample_biased_frequency():
    s = sample_string(DiscreteDistribution.bernoulli(0.1), 10**4, RngStream(12, 0))
    assert abs(s.symbols.mean() - 0.1) <= 0.012


def test_sampling_is_reproducible_and_streams_differ():
    p = make_distribution(3, [1, 2, 3])
    a = sample_string(p, 1000, RngStream(5, 7))
    b = sample_string(p, 1000, RngStream(5, 7))
    c = sample_string(p, 1000, RngStream(5, 8))
    assert a.tobytes() == b.tobytes()
    assert a != c


def test_rng_counter_advances():
    r = RngStream(1, 1)
    start = r.counter
    r.random(100)
    assert r.counter > start


def test_empirical_measure_examples():
    assert empirical_measure(SymbolString.from_text("0101")).weights.tolist() == [0.5, 0.5]
    assert empirical_measure(SymbolString.from_text("000")).weights.tolist() == [1.0, 0.0]
    assert empirical_measure(SymbolString.from_text("01101")).weights.tolist() == [0.4, 0.6]
    with pytest.raises(EmptyInput):
        empirical_measure(SymbolString.from_text(""))


def test_empirical_measure_concentration():
    # TV distance bound 2 sqrt(q ln(2/delta) / (2N)) at N = 1e5, delta = 1e-6
    p = make_distribution(4, [1, 2, 3, 4])
    N = 10**5
    mu = empirical_measure(sample_string(p, N, RngStream(3, 3)))
    tv = 0.5 * np.abs(mu.weights - p.weights).sum()
    assert tv <= 2 * math.sqrt(4 * math.log(2 / 1e-6) / (2 * N))


def test_string_probability_examples():
    f = DiscreteDistribution.flat(2)
    assert string_probability(f, SymbolString.from_text("0110"), 2) == -4
    p = DiscreteDistribution.bernoulli(0.1)
    assert string_probability(p, SymbolString.from_text("1"), math.e) == pytest.approx(-2.302585, abs=1e-6)
    pm = DiscreteDistribution.point_mass(2, 0)
    assert string_probability(pm, SymbolString.from_text("1"), 2) == -math.inf


@given(st.text(alphabet="01", max_size=200))
def test_flat_probability_is_minus_length(text):
    f = DiscreteDistribution.flat(2)
    assert string_probability(f, SymbolString.from_text(text), 2) == -len(text)


@given(st.text(alphabet="012", max_size=60), st.text(alphabet="012", max_size=60), weights.filter(lambda w: len(w) == 3))
def test_log_probability_is_additive(a, b, raw):
    p = make_distribution(3, raw)
    sa, sb = SymbolString.from_text(a, 3), SymbolString.from_text(b, 3)
    lhs = string_probability(p, sa + sb, 2)
    assert lhs == pytest.approx(string_probability(p, sa, 2) + string_probability(p, sb, 2), abs=1e-9)


@given(st.lists(st.integers(1, 5000), min_size=1, max_size=8))
def test_stream_prefix_does_not_depend_on_request_order(requests):
    p = DiscreteDistribution.bernoulli(0.3)
    a = SymbolStream.bernoulli(p, RngStream(9, 1))
    b = SymbolStream.bernoulli(p, RngStream(9, 1))
    for n in requests:
        a.prefix(n)
    top = max(requests)
    assert a.prefix(top) == b.prefix(top)
    for n in requests:
        assert a.prefix(n).is_prefix_of(a.prefix(top))


def test_symbol_string_validation_and_slicing():
    s = SymbolString.from_text("0120", 3)
    assert len(s) == 4 and s[1:3] == SymbolString.from_text("12", 3)
    with pytest.raises(ValueError):
        SymbolString.from_text("2", 2)
    with pytest.raises(ValueError):
        s.symbols[0] = 1
