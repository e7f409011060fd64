"""3-SAT gadget networks: size, depth and agreement with truth tables.

For each (variables, clauses) cell, encodes random formulas, checks the
sign-vector sweep against a truth-table solve, and reports the network
shape and timing.

    python scripts/sat_gadget_sweep.py --formulas 50 --jobs 2
"""
import argparse
import random
import time

from nsad import encode_3sat, sign_vector_search, truth_table_sat
from nsad.generators import random_cnf


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--formulas", type=int, default=50)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    print(f"{'p':>3} {'n':>4} {'sat':>5} {'agree':>6} {'depth':>6} {'max width':>10} {'size':>7} {'seconds':>8}")
    for p in (4, 8, 12, 16):
        for n in (4, 16, 64):
            start = time.perf_counter()
            sat = agree = 0
            for _ in range(args.formulas):
                cnf = random_cnf(rng, p, n)
                net = encode_3sat(cnf)
                truth = truth_table_sat(cnf) is not None
                found = sign_vector_search(net, jobs=args.jobs) is not None
                sat += truth
                agree += truth == found
            dt = time.perf_counter() - start
            print(f"{p:>3} {n:>4} {sat:>5} {agree:>6} {net.relu_depth:>6} {max(net.widths[1:-1]):>10} "
                  f"{net.size:>7} {dt:>8.2f}")


if __name__ == "__main__":
    main()
