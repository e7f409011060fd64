"""Singleton decision versus brute-force vertex enumeration as networks grow.

The layered-graph decision is polynomial; the brute-force oracle is
exponential in the number of zero activations.  Prints timings for both
on random ternary networks evaluated at the origin.

    python scripts/enumeration_scaling.py --nets 20
"""
import argparse
import random
import time
from fractions import Fraction

from nsad import brute_force_vertices, decide_singleton
from nsad.errors import BudgetExceeded
from nsad.generators import random_net


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nets", type=int, default=20)
    ap.add_argument("--budget", type=int, default=16, help="largest variable count for the brute-force oracle")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    print(f"{'width':>5} {'layers':>6} {'vars':>5} {'singleton':>9} {'decide ms':>10} {'brute ms':>9} {'agree':>6}")
    for width, layers in ((2, 2), (3, 3), (4, 3), (4, 4), (8, 4), (16, 6), (32, 8)):
        dec_t = brute_t = 0.0
        singles = agree = checked = 0
        for _ in range(args.nets):
            net = random_net(rng, 3, [width] * layers, relu_prob=1.0)
            x = [Fraction(0)] * net.p
            t = time.perf_counter()
            v = decide_singleton(net, x)
            dec_t += time.perf_counter() - t
            singles += v.singleton
            t = time.perf_counter()
            try:
                verts = brute_force_vertices(net, x, budget=args.budget)
            except BudgetExceeded:
                continue
            brute_t += time.perf_counter() - t
            checked += 1
            agree += v.singleton == (len(verts) == 1)
        brute = f"{1000 * brute_t / checked:>9.1f}" if checked else f"{'skipped':>9}"
        print(f"{width:>5} {layers:>6} {width * layers:>5} {singles:>9} {1000 * dec_t / args.nets:>10.2f} "
              f"{brute} {f'{agree}/{checked}':>6}")


if __name__ == "__main__":
    main()
