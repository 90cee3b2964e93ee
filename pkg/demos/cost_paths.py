"""Evaluate one cost by direct matrix algebra, exact Hadamard tests and sampled Hadamard tests."""
from __future__ import annotations

import numpy as np

from vqlslab import cost, problems
from vqlslab.circuit import n_params
from vqlslab.hadamard import enumerate_tests


def main() -> None:
    inst = problems.make_random_pauli(3, seed=42)
    theta = np.random.default_rng(0).uniform(0, 2 * np.pi, n_params(inst.n, 1))
    for kind in ("global", "local"):
        plan = enumerate_tests(inst.L, inst.n, kind)
        print(f"{kind}: {len(plan)} Hadamard tests for L={inst.L}")
        for path in (cost.DIRECT, cost.HADAMARD, cost.sampled(10_000, seed=1), cost.sampled(1_000_000, seed=1)):
            print(f"  {str(path):18s} C = {cost.cost(inst, theta, kind, path).value:.6f}")


if __name__ == "__main__":
    main()
