"""The Kac ring: spins on an odd ring hop one site right per tick and flip
when they leave a site carrying a scatterer. Scatterers stay put.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import RngStream, TyplabError

__all__ = [
    "InvalidMicrostate",
    "KacMicrostate",
    "KacMacrostate",
    "StosszahlResidual",
    "TypicalityRow",
    "TypicalityTable",
    "macro_of_micro",
    "micro_step",
    "inverse_step",
    "evolve",
    "macro_step",
    "macro_evolve",
    "stosszahl_residual",
    "time_reverse",
    "sample_microstate",
    "entropies",
    "typicality_experiment",
    "all_microstates",
]


class InvalidMicrostate(TyplabError, ValueError):
    pass


def _bits(a) -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.uint8)
    if arr.ndim != 1:
        raise InvalidMicrostate("spin and scatterer arrays must be one-dimensional")
    if arr.size and arr.max() > 1:
        raise InvalidMicrostate("entries must be 0 or 1")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class KacMicrostate:
    """Spins ``x`` (1 = up) and scatterers ``y`` (1 = present) on sites 0..2N."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x, y = _bits(self.x), _bits(self.y)
        if x.size != y.size:
            raise InvalidMicrostate(f"x has {x.size} sites but y has {y.size}")
        if x.size < 3 or x.size % 2 == 0:
            raise InvalidMicrostate(f"ring size must be odd and at least 3, got {x.size}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def of(cls, x, y) -> "KacMicrostate":
        return cls(np.asarray(x), np.asarray(y))

    @property
    def ring_size(self) -> int:
        return int(self.x.size)

    def __eq__(self, other) -> bool:
        return (isinstance(other, KacMicrostate) and np.array_equal(self.x, other.x)
                and np.array_equal(self.y, other.y))

    def __hash__(self) -> int:
        return hash((self.x.tobytes(), self.y.tobytes()))

    def tobytes(self) -> bytes:
        return self.x.tobytes() + self.y.tobytes()

    def display(self) -> str:
        """Sites labelled -N..N, as they are usually drawn."""
        N = self.ring_size // 2
        order = [(i % self.ring_size) for i in range(-N, N + 1)]
        xs = "".join(str(int(self.x[i])) for i in order)
        ys = "".join(str(int(self.y[i])) for i in order)
        return f"x[-{N}..{N}]={xs} y[-{N}..{N}]={ys}"


@dataclass(frozen=True)
class KacMacrostate:
    m: float
    s: float

    def __post_init__(self):
        for name, v in (("m", self.m), ("s", self.s)):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} is outside [0, 1]")


def macro_of_micro(state: KacMicrostate) -> KacMacrostate:
    R = state.ring_size
    return KacMacrostate(int(state.x.sum()) / R, int(state.y.sum()) / R)


def _step(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """x'_{n+1} = x_n xor y_n along the last axis."""
    return np.roll(x ^ y, 1, axis=-1)


def _unstep(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.roll(x, -1, axis=-1) ^ y


def micro_step(state: KacMicrostate) -> KacMicrostate:
    return KacMicrostate(_step(state.x, state.y), state.y)


def inverse_step(state: KacMicrostate) -> KacMicrostate:
    """T^-1: move every spin one site left and undo the flip at its old site."""
    return KacMicrostate(_unstep(state.x, state.y), state.y)


def evolve(state: KacMicrostate, t: int) -> KacMicrostate:
    """T^t for any integer t; negative t runs backwards. Uses T^(2R) = id."""
    t %= 2 * state.ring_size
    x = state.x
    for _ in range(t):
        x = _step(x, state.y)
    return KacMicrostate(x, state.y)


def macro_step(m: float, s: float) -> KacMacrostate:
    """Phi(m, s) = ((1 - 2s)(m - 1/2) + 1/2, s)."""
    return macro_evolve(m, s, 1)


def macro_evolve(m: float, s: float, t: int) -> KacMacrostate:
    """Phi^t(m, s) = ((1 - 2s)^t (m - 1/2) + 1/2, s)."""
    KacMacrostate(m, s)
    if t < 0:
        raise ValueError("t must be non-negative")
    if s == 0 or t == 0:
        return KacMacrostate(m, s)
    value = 0.5 + (1.0 - 2.0 * s) ** t * (m - 0.5)
    return KacMacrostate(min(1.0, max(0.0, value)), s)


@dataclass(frozen=True)
class StosszahlResidual:
    predicted: float
    actual: int
    residual: float


def stosszahl_residual(state: KacMicrostate) -> StosszahlResidual:
    """Compare the next up-count with the molecular-chaos prediction.

    predicted = (1 - s) #up + s #down, where s is the scatterer density.
    """
    R = state.ring_size
    up = int(state.x.sum())
    s = int(state.y.sum()) / R
    predicted = (1 - s) * up + s * (R - up)
    actual = int(_step(state.x, state.y).sum())
    return StosszahlResidual(predicted, actual, actual - predicted)


def time_reverse(state: KacMicrostate) -> KacMicrostate:
    """tau(x, y)_n = (x_{-n}, y_{-n-1}), indices mod the ring size."""
    R = state.ring_size
    n = np.arange(R)
    return KacMicrostate(state.x[(-n) % R], state.y[(-n - 1) % R])


def _bernoulli_bits(p: float, n: int, rng: RngStream) -> np.ndarray:
    return (rng.random(n) < p).astype(np.uint8)


def sample_microstate(m: float, s: float, ring_size: int, rng: RngStream) -> KacMicrostate:
    """i.i.d. Bernoulli(m) spins, then i.i.d. Bernoulli(s) scatterers, from one stream."""
    KacMacrostate(m, s)
    if ring_size < 3 or ring_size % 2 == 0:
        raise InvalidMicrostate(f"ring size must be odd and at least 3, got {ring_size}")
    x = _bernoulli_bits(m, ring_size, rng)
    y = _bernoulli_bits(s, ring_size, rng)
    return KacMicrostate(x, y)


def _h(p: float) -> float:
    return -sum(v * math.log(v) for v in (p, 1.0 - p) if v > 0)


def entropies(m: float, s: float, base: float = 2) -> dict[str, float]:
    """Fine entropy h(m) + h(s) and coarse entropy fine - 2 log 2, in one base."""
    KacMacrostate(m, s)
    scale = math.log(base)
    fine = (_h(m) + _h(s)) / scale
    return {"fine": fine, "coarse": fine - 2 * math.log(2) / scale}


@dataclass(frozen=True)
class TypicalityRow:
    t: int
    m_pred: float
    m_mean: float
    m_std: float
    m_max_abs_dev: float
    szansatz_resid_mean: float
    szansatz_resid_std: float


@dataclass
class TypicalityTable:
    """Per-time statistics over trials; residuals are per site (count / ring size)."""

    header: dict
    rows: list[TypicalityRow]
    trajectories: np.ndarray  # (trials, t_max + 1) spin-up densities

    COLUMNS = ("t", "m_pred", "m_mean", "m_std", "m_max_abs_dev",
               "szansatz_resid_mean", "szansatz_resid_std")

    @property
    def max_mean_deviation(self) -> float:
        return max(abs(r.m_mean - r.m_pred) for r in self.rows)

    def to_csv(self, fh=None, header_line: bool = True) -> str:
        buf = io.StringIO()
        if header_line:
            buf.write("# " + json.dumps(self.header, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([r.t] + [repr(float(getattr(r, c))) for c in self.COLUMNS[1:]])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def _run_trial(m: float, s: float, R: int, t_max: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    state = sample_microstate(m, s, R, rng)
    x, y = state.x, state.y
    sd = int(y.sum()) / R
    up = int(x.sum())
    traj = np.empty(t_max + 1)
    resid = np.empty(t_max + 1)
    for t in range(t_max + 1):
        traj[t] = up / R
        nxt = _step(x, y)
        up_next = int(nxt.sum())
        resid[t] = (up_next - ((1 - sd) * up + sd * (R - up))) / R
        x, up = nxt, up_next
    return traj, resid


def typicality_experiment(m: float, s: float, ring_size: int, t_max: int, trials: int,
                          rng: RngStream, workers: int = 1) -> TypicalityTable:
    """Sample ``trials`` microstates at (m, s), evolve each for t_max ticks and
    compare the spin-up density with Phi^t.

    Trial i draws from its own stream (same seed, stream id ``rng.stream_id +
    1 + i``), so results do not depend on ``workers`` and any single trial
    can be reproduced in isolation.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if ring_size < 3 or ring_size % 2 == 0:
        raise InvalidMicrostate(f"ring size must be odd and at least 3, got {ring_size}")
    R = ring_size
    streams = [rng.substream(rng.stream_id + 1 + i) for i in range(trials)]
    run = lambda r: _run_trial(m, s, R, t_max, r)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, streams))
    else:
        results = [run(r) for r in streams]
    traj = np.stack([a for a, _ in results])
    resid = np.stack([b for _, b in results])
    rows = []
    for t in range(t_max + 1):
        pred = macro_evolve(m, s, t).m
        col = traj[:, t]
        rows.append(TypicalityRow(
            t, pred, float(col.mean()), float(col.std(ddof=1)) if trials > 1 else 0.0,
            float(np.max(np.abs(col - pred))), float(resid[:, t].mean()),
            float(resid[:, t].std(ddof=1)) if trials > 1 else 0.0))
    header = {"seed": rng.seed, "stream_id": rng.stream_id, "ring_size": R, "m": m, "s": s,
              "trials": trials, "t_max": t_max}
    return TypicalityTable(header, rows, traj)


def all_microstates(ring_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Every (x, y) pair on a small ring as two (4^R, R) arrays."""
    R = ring_size
    idx = np.arange(2**R)
    bits = ((idx[:, None] >> np.arange(R - 1, -1, -1)) & 1).astype(np.uint8)
    X = np.repeat(bits, 2**R, axis=0)
    Y = np.tile(bits, (2**R, 1))
    return X, Y
