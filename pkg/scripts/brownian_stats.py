"""Endpoint variance, Levy modulus ratios and Holder constants of rescaled walks."""

import argparse

import numpy as np

from typlab import brownian as bm
from typlab.core import RngStream


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10**6)
    ap.add_argument("--paths", type=int, default=50)
    ap.add_argument("--seed", type=int, default=3)
    a = ap.parse_args()
    hs = [1e-2, 1e-3, 1e-4]
    print("path,h,modulus_ratio")
    ratios = {h: [] for h in hs}
    holder = {0.4: [], 0.6: []}
    ends = []
    for i in range(a.paths):
        path = bm.sample_path(a.n, RngStream(a.seed, i))
        ends.append(path.values[-1])
        stats = bm.regularity_stats(path, hs, list(holder))
        for h, r in stats.modulus.items():
            ratios[h].append(r)
            print(f"{i},{h},{r:.5f}")
        for al, c in stats.holder.items():
            holder[al].append(c)
    print(f"# endpoint variance {np.var(ends, ddof=1):.4f}")
    for h, r in ratios.items():
        r = np.asarray(r)
        print(f"# h={h}: median ratio {np.median(r):.3f}, share <= 1.2: {np.mean(r <= 1.2):.2f}")
    for al, c in holder.items():
        print(f"# alpha={al}: median Holder constant {np.median(c):.3f}")


if __name__ == "__main__":
    main()
