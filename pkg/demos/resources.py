"""Lowered gate counts and depths of the Hadamard-test circuits for two instance families."""
from __future__ import annotations

from vqlslab import analysis, problems


def main() -> None:
    print("family        n  den_total den_depth num_total num_depth")
    for n in (2, 3, 4, 5, 6):
        for family, inst in (("ising", problems.make_ising(n)), ("random-pauli", problems.make_random_pauli(n, seed=0))):
            den, num = analysis.resource_report(inst, "global", 1)
            print(f"{family:12s} {n:2d} {den.total:10.1f} {den.depth:9.1f} {num.total:9.1f} {num.depth:9.1f}")


if __name__ == "__main__":
    main()
