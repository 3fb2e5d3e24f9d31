import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from typlab import brownian as bm
from typlab.core import RngStream
from typlab.entropy_ldp import OutOfRange

signs = st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=300)


def test_path_values():
    p = bm.random_walk_path([1, 1, -1, 1])
    assert p.values.tolist() == [0, 0.5, 1.0, 0.5, 1.0]
    assert p(0.125) == pytest.approx(0.25)
    assert p.sup_norm() == 1.0


def test_sign_string_validation():
    with pytest.raises(ValueError):
        bm.SignString(np.array([1, 0, -1]))
    s = bm.SignString.from_bits([1, 0, 1])
    assert s.values.tolist() == [1, -1, 1] and s.to_bits().tolist() == [1, 0, 1]


@given(signs)
def test_crossings_recover_walk_exactly(vals):
    s = bm.SignString(np.array(vals))
    path = bm.random_walk_path(s)
    c = bm.crossing_signs(path, len(vals))
    assert c.signs == s and not c.exhausted
    assert np.allclose(c.times, np.arange(1, len(vals) + 1) / len(vals))
    assert bm.reconstruct(c.signs, len(vals)) == path


@given(signs, st.integers(1, 50))
def test_crossings_alternate_levels(vals, M):
    path = bm.random_walk_path(vals)
    c = bm.crossing_signs(path, M)
    levels = np.cumsum(c.signs.values) / math.sqrt(M)
    assert np.allclose(path(c.times), levels, atol=1e-9)
    assert np.all(np.diff(c.times) >= 0)


def test_steep_segment_yields_several_crossings():
    path = bm.random_walk_path([1, 1, 1, 1])  # slope 2 per unit time
    c = bm.crossing_signs(path, 64)
    assert len(c) == 16 and c.exhausted


def test_reconstruct_holds_flat():
    p = bm.reconstruct(bm.SignString(np.array([1, 1])), 4)
    assert p.values.tolist() == [0, 0.5, 1.0, 1.0, 1.0]


def test_donsker_distance_zero_on_own_walk():
    path = bm.sample_path(5000, RngStream(1, 1))
    res = bm.donsker_distance(path, 5000)
    assert res.distance == pytest.approx(0.0, abs=1e-12) and not res.exhausted


def test_donsker_distance_magnitude():
    fine = bm.sample_path(10**6, RngStream(1, 0))
    for M in (100, 10_000):
        res = bm.donsker_distance(fine, M)
        assert 0 < res.distance <= fine.sup_norm() + bm.reconstruct(bm.crossing_signs(fine, M).signs, M).sup_norm()


def test_endpoint_variance():
    ends = np.array([bm.sample_path(1000, RngStream(3, i)).values[-1] for i in range(2000)])
    assert ends.var(ddof=1) == pytest.approx(1.0, abs=0.1)


def test_modulus_ratio_oracle():
    p = bm.random_walk_path([1, -1] * 500)
    # a zig-zag moves 1/sqrt(N) over any odd lag and 0 over even ones
    assert bm.modulus_ratio(p, 0.01) == 0.0
    h = 0.011
    assert bm.modulus_ratio(p, h) == pytest.approx(1 / math.sqrt(1000) / math.sqrt(2 * h * math.log(1 / h)))
    with pytest.raises(OutOfRange):
        bm.modulus_ratio(p, 1.5)


def test_linear_path_regularity():
    N = 4096
    line = bm.PiecewiseLinearPath(np.arange(N + 1) / N)
    assert bm.divided_difference_floor(line, 0.01) == pytest.approx(1.0)
    # the largest lag scanned is N/2, where |t - s|^(1 - alpha) peaks
    assert bm.holder_constant(line, 0.5) == pytest.approx(math.sqrt(0.5), rel=1e-9)


def test_brownian_regularity_shape():
    path = bm.sample_path(2**18, RngStream(6, 0))
    stats = bm.regularity_stats(path, [0.1, 0.01, 0.001], [0.4, 0.6], [0.01, 0.001])
    assert all(0.3 < r < 1.6 for r in stats.modulus.values())
    assert stats.divided_difference[0.001] > stats.divided_difference[0.01]
    assert stats.holder[0.6] > stats.holder[0.4]


def test_csv_writers():
    p = bm.random_walk_path([1, -1, 1, 1])
    assert bm.path_csv(p, stride=2).splitlines() == ["t,value", "0.0,0.0", "0.5,0.0", "1.0,1.0"]
    assert bm.ratio_csv({0.01: 1.0, 0.1: 0.9}).splitlines() == ["h,ratio", "0.1,0.9", "0.01,1.0"]
