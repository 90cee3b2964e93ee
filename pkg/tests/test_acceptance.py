"""Acceptance criteria, one test each, at their stated tolerances.

Long-running; the terminal summary prints one PASS/FAIL line per criterion.
"""
from __future__ import annotations

import time

import numpy as np
import pytest

from vqlslab import analysis, cli, cost, problems
from vqlslab.circuit import n_params
from vqlslab.cost import HADAMARD, CostKind
from vqlslab.hadamard import enumerate_tests
from vqlslab.numerics import is_hermitian
from vqlslab.optimizer import OptimizerConfig, cobyla_minimize, solve
from vqlslab.pauli import coefficients_real, decompose, reconstruct

KINDS = (CostKind.GLOBAL, CostKind.LOCAL)


def random_square(rng, n, hermitian):
    m = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    return (m + m.conj().T) / 2 if hermitian else m


@pytest.mark.criterion(1, "LCU round trip and real coefficients iff Hermitian")
def test_lcu_round_trip():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    a = random_square(rng, 4, True)
    assert np.max(np.abs(a - reconstruct(decompose(a)))) < 1e-10
    for k in range(100):
        hermitian = k % 2 == 0
        m = random_square(rng, int(rng.integers(1, 5)), hermitian)
        t = decompose(m)
        assert coefficients_real(t) == hermitian == is_hermitian(reconstruct(t), 1e-10)
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(2, "direct and exact Hadamard cost paths agree")
def test_cost_path_equivalence():
    worst = 0.0
    for family in ("ising", "random-pauli"):
        for n in (2, 3, 4):
            inst = problems.make_ising(n) if family == "ising" else problems.make_random_pauli(n, seed=0)
            thetas = np.random.default_rng(n).uniform(0, 2 * np.pi, (50, n_params(n, 1)))
            for kind in KINDS:
                direct = cost.cost_values(inst, thetas, kind)
                for th, d in zip(thetas, direct):
                    worst = max(worst, abs(cost.cost(inst, th, kind, HADAMARD).value - d))
    assert worst < 1e-9


@pytest.mark.criterion(3, "global Hadamard budget (L^2 + 3L) / 2")
def test_hadamard_budget():
    for L in range(1, 21):
        assert len(enumerate_tests(L, 2, "global")) == (L * L + 3 * L) // 2
    assert len(enumerate_tests(4, 2, "global")) == 14


@pytest.mark.criterion(4, "ising condition numbers within 1%")
def test_ising_condition_numbers():
    for n, kappa in ((2, 2.34), (4, 9.08), (6, 13.62), (8, 20.16), (10, 30.38)):
        got = problems.make_ising(n).metadata["condition_number"]
        assert abs(got - kappa) <= 0.01 * kappa, (n, got)


@pytest.mark.criterion(5, "ising solves reach |cos| >= 0.99 and cost < 1e-3")
def test_ising_solve():
    for n in (2, 4, 6):
        inst = problems.make_ising(n)
        for kind in KINDS:
            runs = [solve(inst, 1, kind, OptimizerConfig(max_evaluations=20_000, seed=s)) for s in range(10)]
            assert np.mean([r.cosine for r in runs]) >= 0.99, (n, kind)
            assert np.mean([r.best_cost for r in runs]) < 1e-3, (n, kind)
    # larger chains: smoke runs only
    for n in (8, 10):
        inst = problems.make_ising(n)
        for kind in KINDS:
            r = solve(inst, 1, kind, OptimizerConfig(max_evaluations=5_000, seed=0))
            best = [cost.objective(inst, kind)(x) for _, x in r.incumbents]
            assert len(best) > 1 and all(b < a for a, b in zip(best, best[1:]))
            assert r.best_cost < r.trajectory[0][1]


@pytest.mark.criterion(6, "random-pauli solves and depth helps at n=6")
def test_random_pauli_solve():
    cfg = OptimizerConfig(max_evaluations=50_000)
    inst = problems.make_random_pauli(2, seed=0)
    assert np.mean([solve(inst, 1, "global", cfg.with_seed(s)).cosine for s in range(10)]) >= 0.99
    inst = problems.make_random_pauli(4, seed=0)
    assert np.median([solve(inst, 4, "global", cfg.with_seed(s)).cosine for s in range(10)]) >= 0.99
    inst = problems.make_random_pauli(6, seed=0)
    shallow = np.mean([solve(inst, 1, "global", cfg.with_seed(s)).cosine for s in range(3)])
    deep = np.mean([solve(inst, 5, "global", cfg.with_seed(s)).cosine for s in range(3)])
    assert deep > shallow


@pytest.mark.criterion(7, "constructed optimum is found for every family")
def test_constructed_optimum():
    for n in range(2, 7):
        bases = (
            problems.make_ising(n),
            problems.make_random_pauli(n, seed=3),
            problems.make_banded_synthetic(2**n - 2 if n > 2 else 3, 2, seed=5),
        )
        for base in bases:
            # independent stream from the optimizer's start point (which is seeded by n)
            theta_hat = np.random.default_rng(1000 + n).uniform(0, 2 * np.pi, n_params(n, 1))
            inst = problems.constructed_instance(base, 1, theta_hat)
            for kind in KINDS:
                r = solve(inst, 1, kind, OptimizerConfig(seed=n))
                assert r.evaluations > n_params(n, 1) + 1
                assert r.best_cost < 1e-6, (base.metadata["family"], n, kind, r.best_cost)
                assert r.cosine > 1 - 1e-6


@pytest.mark.criterion(8, "parameter-shift gradient matches finite differences")
def test_gradient_correctness():
    rng = np.random.default_rng(8)
    h = 1e-5
    worst = 0.0
    for k in range(20):
        n = int(rng.integers(2, 5))
        layers = int(rng.integers(1, 4))
        inst = (
            problems.make_ising(n),
            problems.make_random_pauli(n, seed=k),
            problems.make_banded_synthetic(2**n - 1, 1, seed=k),
        )[k % 3]
        kind = KINDS[k % 2]
        theta = rng.uniform(0, 2 * np.pi, n_params(n, layers))
        f = cost.objective(inst, kind)
        fd = np.array([(f(theta + h * e) - f(theta - h * e)) / (2 * h) for e in np.eye(theta.size)])
        worst = max(worst, np.max(np.abs(cost.gradient(inst, theta, kind) - fd)))
    assert worst < 1e-6


@pytest.mark.criterion(9, "zero-mean gradients and faster variance decay for the global cost")
def test_barren_plateaus():
    slopes = {}
    for kind in KINDS:
        pts = []
        for n in (2, 3, 4, 5):
            inst = problems.make_random_pauli(n, seed=0)
            for comp in range(n_params(n, 1)):
                st = analysis.estimate_gradient_variance(inst, kind, 1, comp, 4096, seed=n)
                assert abs(st.mean) <= 3 * st.se_mean, (kind, n, comp)
                if comp == 0:
                    pts.append((n, st.variance))
        slopes[kind] = analysis.fit_variance_decay(pts)[0]
    assert slopes[CostKind.GLOBAL] < 0 and slopes[CostKind.LOCAL] < 0
    assert slopes[CostKind.GLOBAL] < slopes[CostKind.LOCAL]


@pytest.mark.criterion(10, "Hadamard-test resource trends")
def test_resource_trends():
    ns = np.arange(2, 11)
    den_counts = []
    for n in ns:
        den, num = analysis.resource_report(problems.make_ising(int(n)), "global", 1)
        den_counts.append(den.total)
        assert num.total > den.total
        if n == 4:
            ising_depth = num.depth
    slope, icpt = np.polyfit(ns, den_counts, 1)
    y = np.array(den_counts)
    r2 = 1 - np.sum((y - (slope * ns + icpt)) ** 2) / np.sum((y - y.mean()) ** 2)
    assert r2 > 0.99
    _, rp_num = analysis.resource_report(problems.make_random_pauli(4, seed=0), "global", 1)
    assert rp_num.depth >= 10 * ising_depth, (rp_num.depth, ising_depth)


@pytest.mark.criterion(11, "termination policy")
def test_termination_policy():
    m, window = 20, 100
    res = cobyla_minimize(lambda x: 1.0, np.zeros(m), OptimizerConfig(no_improve_window=window))
    assert res.reason == "no_improvement" and res.evaluations == m + 1 + window
    for cap in (1, 5, 37, 400):
        calls = []

        def f(x):
            calls.append(0)
            return float(np.sum((x - 0.3) ** 2) + np.sin(5 * x[0]))

        res = cobyla_minimize(f, np.zeros(6), OptimizerConfig(max_evaluations=cap))
        assert len(calls) == res.evaluations <= cap


@pytest.mark.criterion(12, "manifest re-runs reproduce CSV outputs byte for byte")
def test_determinism(tmp_path):
    commands = {
        "gen": ["gen", "--family", "banded", "--size", "12", "--bandwidth", "3", "--seed", "7"],
        "solve": ["solve", "--family", "random-pauli", "--n", "3", "--layers", "2", "--repeats", "3",
                  "--max-evaluations", "3000", "--trajectory", "--kind", "local"],
        "sweep": ["sweep", "--family", "ising", "--n", "3", "--layers", "1,2", "--repeats", "2", "--max-evaluations", "2000"],
        "barren": ["barren", "--family", "random-pauli", "--ns", "2,3,4", "--samples", "512", "--norm-scan", "20"],
        "resources": ["resources", "--family", "random-pauli", "--ns", "2,3", "--print-budget"],
    }  # fmt: skip
    for name, argv in commands.items():
        first, second = tmp_path / name, tmp_path / f"{name}-rerun"
        assert cli.main(argv + ["--out-dir", str(first)]) == 0
        assert cli.main(["rerun", str(first / "manifest.json"), "--out-dir", str(second)]) == 0
        csvs = sorted(p.name for p in first.glob("*.csv"))
        assert csvs or name == "gen"
        for fname in csvs + ["matrix.mtx", "rhs.txt"] * (name == "gen"):
            assert (first / fname).read_bytes() == (second / fname).read_bytes(), (name, fname)
