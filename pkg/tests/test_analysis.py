from __future__ import annotations

import math

import numpy as np
import pytest

from vqlslab import analysis, problems
from vqlslab.optimizer import OptimizerConfig, solve
from vqlslab.problems import ProblemInstance


def toy():
    # C(theta) = sin^2(theta / 2), so dC/dtheta = sin(theta) / 2 with variance 1/8 over full periods
    return ProblemInstance.from_matrix(np.eye(2), [1.0, 0.0])


def test_exponential_fit_recovers_rate():
    slope, intercept, r2 = analysis.fit_variance_decay([(n, 3 * math.exp(-n)) for n in range(2, 7)])
    assert slope == pytest.approx(-1.0)
    assert intercept == pytest.approx(math.log(3))
    assert r2 == pytest.approx(1.0)


def test_fit_on_constant_data():
    slope, _, r2 = analysis.fit_variance_decay([(2, 0.5), (3, 0.5), (4, 0.5)])
    assert slope == pytest.approx(0.0, abs=1e-15)
    assert r2 == 1.0


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        analysis.fit_variance_decay([(2, 1.0), (3, 0.5)])
    with pytest.raises(ValueError):
        analysis.fit_variance_decay([(2, 1.0), (3, 0.0), (4, 0.1)])
    with pytest.raises(ValueError):
        analysis.fit_variance_decay([(2, 1.0), (2, 0.5), (2, 0.1)])


def test_sample_stats_oracle():
    v = np.array([1.0, 2.0, 3.0, 4.0])
    mean, var, se, se_var = analysis.sample_stats(v)
    assert (mean, var) == (2.5, pytest.approx(np.var(v, ddof=1)))
    assert se == pytest.approx(math.sqrt(var / 4))
    assert se_var == pytest.approx(var * math.sqrt(2 / 3))


@pytest.mark.parametrize("kind", ["global", "local"])
def test_toy_gradient_variance(kind):
    st = analysis.estimate_gradient_variance(toy(), kind, layers=0, samples=4096, seed=1)
    assert abs(st.mean) < 3 * st.se_mean
    assert abs(st.variance - 0.125) < 4 * st.se_variance


def test_variance_decays_for_global_cost():
    pts = []
    for n in (2, 3, 4):
        inst = problems.make_random_pauli(n, seed=0)
        st = analysis.estimate_gradient_variance(inst, "global", 1, 0, 2048, seed=n)
        assert abs(st.mean) < 4 * st.se_mean
        pts.append((n, st.variance))
    assert analysis.fit_variance_decay(pts)[0] < 0


def test_gradient_norm_scan_and_trajectory():
    inst = problems.make_ising(2)
    norms = analysis.gradient_norm_scan(inst, count=200, seed=0)
    assert norms.shape == (200,) and np.all(np.diff(norms) >= 0)
    rep = solve(inst, 1, "global", OptimizerConfig(max_evaluations=4000, seed=0))
    traj = analysis.trajectory_gradient_norms(rep, inst)
    assert [k for k, _ in traj] == [k for k, _ in rep.incumbents]
    assert traj[-1][1] < 1e-3 < np.median(norms)


def test_resource_report_for_ising():
    den, num = analysis.resource_report(problems.make_ising(3), "global", 1)
    assert den.circuits == 15 and num.circuits == 12
    assert num.total > den.total
    assert num.depth > den.depth
    rows = analysis.resource_rows("ising", 3, [den, num])
    assert len(rows) == 2 * 5
    assert set(rows[0]) == set(analysis.RESOURCE_FIELDS)
