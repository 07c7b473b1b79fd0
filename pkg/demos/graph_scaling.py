"""Optimal covariance norm against network size for the named graph families.

The optimum is proportional to (sum of degrees / N^2) / lambda_2^2. Dense
graphs therefore improve with N, and rings and lines degrade like N^3. The
circulant cubic graph (a ring plus antipodal chords) has lambda_2 of order
N^-2, so it behaves like the ring, not like an expander.

Run:  python demos/graph_scaling.py
"""

import numpy as np

from robust_consensus import (NoiseModel, ReceiveMap, TransmitMap, build_named, functionals,
                              optimal_gain, spectrum)


def main():
    fn = functionals(NoiseModel.cauchy(0.413), ReceiveMap.rational(1.5), with_sup_var=False)
    ns = np.array([8, 16, 32, 64])
    print(f"{'family':<12}" + "".join(f"{'N=' + str(n):>12}" for n in ns) + f"{'slope':>9}")
    for family in ("complete", "star", "tree", "cubic", "ring", "line"):
        norms = []
        for n in ns:
            g = build_named(family, int(n))
            norms.append(optimal_gain(g, fn, TransmitMap.identity(), 0.0).c_star_norm)
        slope = np.polyfit(np.log(ns), np.log(norms), 1)[0]
        print(f"{family:<12}" + "".join(f"{v:12.4g}" for v in norms) + f"{slope:9.2f}")
    print("\nlambda_2 of the cubic graph:",
          ", ".join(f"{spectrum(build_named('cubic', int(n))).lambda2:.4f}" for n in ns))


if __name__ == "__main__":
    main()
