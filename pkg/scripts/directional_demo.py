"""Directional-derivative construction for several sizes.

Builds the Hadamard instance for each p, runs the three identity checks and
prints the report, including the engine's forward-mode value at 0, which
follows the ReLU selection rather than the one-sided derivative.

    python scripts/directional_demo.py --p 2 4 8 16 --seed 7
"""
import argparse
import json
import time

from nsad.directional import build_directional_instance, directional_check


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, nargs="+", default=[2, 4, 8])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="print full reports as JSON lines")
    args = ap.parse_args()

    for p in args.p:
        start = time.perf_counter()
        rep = directional_check(build_directional_instance(p, seed=args.seed))
        dt = time.perf_counter() - start
        if args.json:
            print(json.dumps(rep.to_dict(), sort_keys=True))
            continue
        failed = [k for k, v in rep.checks.items() if not v]
        print(f"p={p:<3} cost={rep.cost} (6p^2+2p={6 * p * p + 2 * p}) fd_err={rep.fd_error:.1e} "
              f"grad_err={rep.grad_error:.1e} trace={rep.trace} forward@0={rep.forward_mode_at_zero[:3]} "
              f"{'ok' if rep.ok else 'FAILED ' + ','.join(failed)} ({dt:.1f}s)")


if __name__ == "__main__":
    main()
