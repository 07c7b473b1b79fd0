"""How the receive map trades robustness against efficiency.

For each noise law and receive map this prints E[f^2(n)], g'(0) = E[f'(n)], and
their ratio. The ratio can never drop below 1/J, the inverse Fisher information
of the noise. It then prints the optimal gain and the optimal covariance norm
on a 20-node graph. A smaller ratio means faster consensus. The identity map
is optimal for gaussian noise but is unusable under Cauchy noise.

Run:  python demos/fisher_and_gain.py
"""

import math

from robust_consensus import (NoiseModel, ReceiveMap, TransmitMap, build_random, functionals,
                              optimal_gain, validated_optimal_gain)

NOISES = [NoiseModel.gaussian(1.0), NoiseModel.laplacian(1.0), NoiseModel.cauchy(0.413)]
MAPS = [ReceiveMap.identity(), ReceiveMap.tanh(1.0), ReceiveMap.tanh(2.0),
        ReceiveMap.rational(1.5), ReceiveMap.atan(3.0, 0.05)]


def main():
    g = build_random("erdos_renyi", 20, 1, p=0.3)
    h = TransmitMap.identity()
    print(f"graph {g!r}\n")
    print(f"{'noise':<22}{'f':<26}{'E[f^2]':>10}{'g1(0)':>9}{'ratio':>9}{'1/J':>8}"
          f"{'a*':>8}{'||C*||':>9}{'a*(val)':>9}{'||C||':>9}")
    for noise in NOISES:
        for f in MAPS:
            if not math.isfinite(f.bound) and noise.kind == "cauchy":
                print(f"{noise.describe():<22}{f.formula():<26}{'infinite second moment':>40}")
                continue
            fn = functionals(noise, f, with_sup_var=False)
            paper = optimal_gain(g, fn, h, 0.0)
            val = validated_optimal_gain(g, fn, h, 0.0)
            print(f"{noise.describe():<22}{f.formula():<26}{fn.e_f_squared:10.4f}"
                  f"{fn.e_f_prime:9.4f}{fn.ratio:9.4f}{fn.one_over_j:8.3f}"
                  f"{paper.a_star:8.3f}{paper.c_star_norm:9.4f}"
                  f"{val.a_star:9.3f}{val.c_star_norm:9.4f}")
        print()


if __name__ == "__main__":
    main()
