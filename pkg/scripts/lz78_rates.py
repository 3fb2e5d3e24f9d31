"""LZ78 bits per symbol along growing prefixes of several sources, next to their entropy rates."""

import argparse
import math
import sys
from fractions import Fraction

from typlab import dynamics
from typlab.core import DiscreteDistribution, RngStream
from typlab.entropy_ldp import shannon_entropy
from typlab.randomness import complexity_rate_curve


def sources(seed: int, N: int):
    for p1 in (0.5, 0.1):
        s = dynamics.BernoulliShift(DiscreteDistribution.bernoulli(p1))
        yield f"bernoulli({p1})", s.sample(RngStream(seed, len(str(p1)))), s, shannon_entropy([1 - p1, p1], 2)
    yield "rotation(sqrt2-1)", 0.1, dynamics.Rotation(math.sqrt(2) - 1), 0.0
    yield "rotation(1/8)", Fraction(1, 16), dynamics.Rotation(Fraction(1, 8)), 0.0
    d = dynamics.DoublingMap()
    yield "doubling", d.sample(RngStream(seed, 9)), d, 1.0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=7)
    a = ap.parse_args()
    pts = [10**k for k in range(3, 7) if 10**k < a.n] + [a.n]
    print("source,N,rate,entropy_rate")
    for name, x, system, h in sources(a.seed, a.n):
        orbit = dynamics.coarse_grain(system, x, a.n)
        for n, rate in complexity_rate_curve(orbit, pts):
            print(f"{name},{n},{rate:.6f},{h:.6f}")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
