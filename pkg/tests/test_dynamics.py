import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from typlab import dynamics as dy
from typlab.core import DiscreteDistribution, RngStream, SymbolString
from typlab.entropy_ldp import shannon_entropy


def test_not_found_is_falsy_singleton():
    assert not dy.NOT_FOUND and dy.NotFound() is dy.NOT_FOUND and repr(dy.NOT_FOUND) == "NOT_FOUND"


@given(st.integers(1, 10**6), st.integers(2, 10**6))
def test_doubling_digits_are_binary_expansion(num, den):
    x = Fraction(num % den, den)
    N = 40
    bits = dy.DoublingMap().orbit_symbols(x, N)
    assert dy._dyadic(bits) == Fraction(math.floor(x * 2**N), 2**N)


def test_doubling_iterate_matches_steps():
    T = dy.DoublingMap()
    x = Fraction(3, 7)
    y = x
    for _ in range(10):
        y = T.step(y)
    assert T.iterate(x, 10) == y
    assert T.cell(Fraction(1, 2)) == 1 and T.cell(Fraction(1, 3)) == 0


def test_doubling_sampled_point_shifts():
    T = dy.DoublingMap()
    x = T.sample(RngStream(3, 0))
    digits = T.orbit_symbols(x, 20)
    assert np.array_equal(T.orbit_symbols(T.iterate(x, 5), 15), digits[5:])
    assert T.value(x, 20) == dy._dyadic(digits)


def test_bernoulli_block_entropy_is_additive():
    sys = dy.BernoulliShift(DiscreteDistribution.bernoulli(0.9))
    h = shannon_entropy([0.1, 0.9], 2)
    for N in (1, 5, 16):
        assert dy.block_entropy(sys, N).bits == pytest.approx(N * h, rel=1e-10)
    rate = dy.entropy_rate(sys, 12)
    assert rate.estimate == pytest.approx(h)


def test_monte_carlo_block_entropy_close_to_exact():
    sys = dy.BernoulliShift(DiscreteDistribution.flat(2))
    mc = dy.block_entropy(sys, 4, "monte_carlo", samples=20_000, rng=RngStream(1, 0))
    assert mc.bits == pytest.approx(4.0, abs=0.02) and "biased" in mc.note


def test_exact_mode_limit():
    with pytest.raises(ValueError):
        dy.block_entropy(dy.BernoulliShift(DiscreteDistribution.flat(2)), 25)


def _brute_rotation_masses(alpha: float, N: int, grid: int = 200_000):
    xs = (np.arange(grid) + 0.5) / grid
    words = np.stack([(np.mod(xs + n * alpha, 1.0) >= 0.5) for n in range(N)], axis=1)
    _, counts = np.unique(words, axis=0, return_counts=True)
    return np.sort(counts / grid)


@pytest.mark.parametrize("alpha", [math.sqrt(2) - 1, 0.3, (math.sqrt(5) - 1) / 2])
@pytest.mark.parametrize("N", [1, 3, 6])
def test_rotation_arcs_match_fine_grid(alpha, N):
    masses, _ = dy.Rotation(alpha).cylinder_masses(N)
    brute = _brute_rotation_masses(alpha, N)
    assert masses.size == brute.size <= 2 * N
    assert np.allclose(np.sort(masses), brute, atol=2e-5)


def test_rotation_rational_is_exact():
    R = dy.Rotation(Fraction(1, 8))
    assert dy.block_entropy(R, 8).bits == pytest.approx(3.0)
    assert dy.entropy_rate(R, 12).estimate == pytest.approx(0.0, abs=1e-12)
    assert R.iterate(Fraction(1, 16), 8) == Fraction(1, 16)


def test_rotation_block_entropy_grows_slowly():
    H = [dy.block_entropy(dy.Rotation(math.sqrt(2) - 1), n).bits for n in (8, 16, 24)]
    assert H[2] <= math.log2(48) + 1e-9
    assert H[2] - H[1] < 1.0


@given(st.floats(0, 0.999), st.integers(1, 30))
def test_rotation_orbit_cylinder_contains_point(x, N):
    R = dy.Rotation(math.sqrt(2) - 1)
    word = tuple(R.orbit_symbols(x, N))
    lp = R.orbit_log2_cylinder(x, N)
    assert lp == pytest.approx(math.log2(R.cylinder_probability(word)), abs=1e-6)


def test_baker_round_trip():
    B = dy.BakersMap()
    x = B.sample(RngStream(9, 0))
    assert B.inverse(B.step(x)).coordinates(32) == x.coordinates(32)
    fwd, bwd = dy.bilateral_code(x, 20)
    rx, ry = dy.reconstruct_baker(fwd, bwd)
    X, Y = x.coordinates(80)
    assert abs(rx - X) <= Fraction(1, 2**21) and abs(ry - Y) <= Fraction(1, 2**21)


def test_baker_step_formula():
    B = dy.BakersMap()
    x = B.sample(RngStream(10, 0))
    X, Y = x.coordinates(60)
    X1, Y1 = B.step(x).coordinates(59)
    assert X1 == (2 * X) % 1 - ((2 * X) % 1) % Fraction(1, 2**59)
    assert abs(Y1 - (Y + math.floor(2 * X)) / 2) < Fraction(1, 2**58)


def test_birkhoff_targets():
    R = dy.Rotation(math.sqrt(2) - 1)
    rep = dy.birkhoff(R, 0.1, 100_000, observable=dy.Interval(0.2, 0.5), checkpoints=[10, 1000, 100_000])
    assert rep.target == pytest.approx(0.3) and abs(rep.average - 0.3) < 1e-3
    assert rep.curve[-1] == (100_000, rep.average)
    shift = dy.BernoulliShift(DiscreteDistribution.bernoulli(0.3))
    rep = dy.birkhoff(shift, shift.sample(RngStream(2, 0)), 100_000, cell=1)
    assert rep.target == pytest.approx(0.3) and abs(rep.average - 0.3) < 0.01
    with pytest.raises(ValueError):
        dy.birkhoff(R, 0.1, 10)


def test_smb_and_brudno_for_fair_shift():
    sys = dy.BernoulliShift(DiscreteDistribution.bernoulli(0.2))
    x = sys.sample(RngStream(4, 0))
    h = shannon_entropy([0.8, 0.2], 2)
    assert dy.smb_estimate(sys, x, 100_000) == pytest.approx(h, abs=0.01)
    assert dy.brudno_rate(sys, x, 100_000) == pytest.approx(h, abs=0.25)
    with pytest.raises(ValueError):
        dy.brudno_rate(sys, x, 10)


def test_first_return_time():
    R = dy.Rotation(Fraction(1, 5))
    assert dy.first_return_time(R, Fraction(0), dy.Interval(0.55, 0.65), 10) == 3
    assert dy.first_return_time(R, Fraction(0), lambda y: y == 0, 10) == 5
    assert dy.first_return_time(R, Fraction(0), dy.Interval(0.1, 0.15), 10) is dy.NOT_FOUND
    assert dy.first_return_time(dy.DoublingMap(), Fraction(1, 3), 1, 5) == 1


def test_coarse_grain_and_csv():
    s = dy.coarse_grain(dy.DoublingMap(), Fraction(5, 8), 3)
    assert isinstance(s, SymbolString) and s.symbols.tolist() == [1, 0, 1]
    text = dy.curve_csv([(1, 0.5, 1.0, None), (2, 0.25, None, 0.1)])
    assert text.splitlines() == ["N,value,target,band", "1,0.5,1.0,", "2,0.25,,0.1"]
