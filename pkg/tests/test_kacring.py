import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from typlab import kacring as kr
from typlab.core import RngStream


def _step_by_hand(x, y):
    R = len(x)
    out = [0] * R
    for n in range(R):
        out[(n + 1) % R] = x[n] ^ y[n]
    return out


rings = st.integers(1, 7).map(lambda k: 2 * k + 1)
states = rings.flatmap(lambda R: st.tuples(st.lists(st.integers(0, 1), min_size=R, max_size=R),
                                           st.lists(st.integers(0, 1), min_size=R, max_size=R)))


@given(states)
def test_step_matches_site_rule(xy):
    x, y = xy
    assert kr.micro_step(kr.KacMicrostate.of(x, y)).x.tolist() == _step_by_hand(x, y)


@given(states, st.integers(-40, 40))
def test_inverse_and_period(xy, t):
    s = kr.KacMicrostate.of(*xy)
    assert kr.inverse_step(kr.micro_step(s)) == s
    assert kr.evolve(s, 2 * s.ring_size) == s
    assert kr.evolve(kr.evolve(s, t), -t) == s


@given(states, st.integers(0, 20))
def test_time_reversal_conjugates(xy, t):
    s = kr.KacMicrostate.of(*xy)
    tau = kr.time_reverse
    assert tau(tau(s)) == s
    assert tau(kr.evolve(tau(kr.evolve(s, t)), t)) == s


def test_exhaustive_small_ring_bijection():
    X, Y = kr.all_microstates(5)
    nxt = kr._step(X, Y)
    keys = {a.tobytes() + b.tobytes() for a, b in zip(nxt, Y)}
    assert len(keys) == 4**5
    assert np.array_equal(kr._unstep(nxt, Y), X)


def test_invalid_states():
    with pytest.raises(kr.InvalidMicrostate):
        kr.KacMicrostate.of([0, 1, 0, 1], [0, 0, 0, 0])
    with pytest.raises(kr.InvalidMicrostate):
        kr.KacMicrostate.of([0, 2, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        kr.KacMacrostate(1.2, 0.1)


def test_macro_evolution():
    assert kr.macro_step(1.0, 0.1).m == pytest.approx(0.9)
    assert kr.macro_evolve(1.0, 0.1, 10).m == pytest.approx(0.5 + 0.8**10 / 2)
    assert kr.macro_evolve(0.7, 0.0, 50).m == 0.7
    assert kr.macro_evolve(0.7, 0.5, 1).m == 0.5
    # s = 1 flips every spin on every tick
    assert kr.macro_evolve(0.9, 1.0, 3).m == pytest.approx(0.1)


def test_stosszahl_residual_exact_for_uniform_scatterers():
    x = np.array([1, 0, 1, 1, 0, 0, 1])
    r = kr.stosszahl_residual(kr.KacMicrostate.of(x, np.ones(7, dtype=int)))
    assert r.predicted == 3 and r.actual == 3 and r.residual == 0


def test_entropies():
    e = kr.entropies(0.5, 0.5)
    assert e["fine"] == pytest.approx(2.0) and e["coarse"] == pytest.approx(0.0)
    assert kr.entropies(0.5, 0.5, base=math.e)["fine"] == pytest.approx(2 * math.log(2))


def test_sampling_density():
    s = kr.sample_microstate(0.8, 0.1, 100_001, RngStream(1, 0))
    mac = kr.macro_of_micro(s)
    assert abs(mac.m - 0.8) < 0.01 and abs(mac.s - 0.1) < 0.01


def test_typicality_experiment_tracks_prediction():
    table = kr.typicality_experiment(1.0, 0.1, 10_001, 30, 20, RngStream(5, 0))
    assert len(table.rows) == 31
    assert table.max_mean_deviation < 0.01
    assert all(abs(r.szansatz_resid_mean) < 0.01 for r in table.rows)


def test_typicality_is_worker_independent():
    a = kr.typicality_experiment(0.9, 0.2, 1001, 10, 8, RngStream(5, 0), workers=1)
    b = kr.typicality_experiment(0.9, 0.2, 1001, 10, 8, RngStream(5, 0), workers=4)
    assert a.to_csv() == b.to_csv()
    lines = a.to_csv().splitlines()
    assert lines[0].startswith("# ") and lines[1] == ",".join(kr.TypicalityTable.COLUMNS)
    assert len(lines) == 2 + 11


def test_single_trial_reproducible():
    table = kr.typicality_experiment(0.9, 0.2, 1001, 5, 3, RngStream(5, 0))
    traj, _ = kr._run_trial(0.9, 0.2, 1001, 5, RngStream(5, 3))
    assert np.array_equal(table.trajectories[2], traj)


def test_recurrence_returns_to_initial_macrostate():
    s = kr.sample_microstate(1.0, 0.1, 1001, RngStream(2, 0))
    assert kr.macro_of_micro(kr.evolve(s, 2 * 1001)).m == 1.0
