"""Solve a transverse-field Ising system with both cost functions and report the alignment."""
from __future__ import annotations

from vqlslab import problems
from vqlslab.optimizer import OptimizerConfig, solve


def main() -> None:
    for n in (2, 4):
        inst = problems.make_ising(n)
        print(f"ising n={n} L={inst.L} kappa={inst.metadata['condition_number']:.4f}")
        for kind in ("global", "local"):
            rep = solve(inst, layers=1, kind=kind, config=OptimizerConfig(max_evaluations=20_000, seed=0))
            print(f"  {kind:6s} cost={rep.best_cost:.2e} |cos|={rep.cosine:.6f} evals={rep.evaluations} ({rep.reason})")


if __name__ == "__main__":
    main()
