"""Backprop and forward-mode overhead ratios over random ReLU-dictionary programs.

Prints one row per size bucket: the worst ratio_b and ratio_f seen, against
the per-op constants omega_b and omega_f of the audited programs.

    python scripts/cost_ratio_sweep.py --programs 2000 --scheme unit
"""
import argparse
import random
import time

from nsad import audit, parse_scheme
from nsad.generators import RELU_DICT, random_program


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--programs", type=int, default=2000)
    ap.add_argument("--scheme", default="unit")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    scheme = parse_scheme(args.scheme)
    buckets = [(5, 20), (21, 100), (101, 500)]
    print(f"scheme {args.scheme}, {args.programs} programs per bucket")
    print(f"{'nodes':>10} {'max ratio_b':>12} {'max omega_b':>12} {'max ratio_f':>12} {'seconds':>8}")
    for lo, hi in buckets:
        start = time.perf_counter()
        rb = rf = ob = 0
        for _ in range(args.programs):
            prog = random_program(rng, rng.randint(lo, hi), rng.randint(1, 8), RELU_DICT, tame=False)
            r = audit(prog, scheme)
            rb, rf, ob = max(rb, r.ratio_b), max(rf, r.ratio_f), max(ob, r.omega_b)
        dt = time.perf_counter() - start
        print(f"{lo:>4}-{hi:<5} {float(rb):>12.4f} {float(ob):>12.4f} {float(rf):>12.4f} {dt:>8.1f}")


if __name__ == "__main__":
    main()
