"""Gradient variance against qubit count for the global and local costs."""
from __future__ import annotations

from vqlslab import analysis, problems


def main() -> None:
    for kind in ("global", "local"):
        pts = []
        for n in (2, 3, 4, 5):
            st = analysis.estimate_gradient_variance(problems.make_random_pauli(n, seed=0), kind, 1, 0, 4096, seed=n)
            pts.append((n, st.variance))
            print(f"{kind:6s} n={n} mean={st.mean:+.2e} (se {st.se_mean:.1e}) var={st.variance:.3e}")
        slope, _, r2 = analysis.fit_variance_decay(pts)
        print(f"{kind:6s} slope of ln Var against n: {slope:.3f} (r2 {r2:.3f})")


if __name__ == "__main__":
    main()
