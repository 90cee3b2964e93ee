"""Gradient statistics (barren plateaus) and Hadamard-test resource accounting."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import hadamard
from .circuit import BASIS, lower, n_params, resources
from .cost import CostKind, gradient

VARIANCE_FIELDS = ("n", "layers", "kind", "component", "samples", "mean", "variance", "se", "se_variance")
FIT_FIELDS = ("kind", "layers", "slope", "intercept", "r2")
RESOURCE_FIELDS = ("family", "n", "circuit", "gate_kind", "mean_count", "mean_depth")
VARIANCE_DOMAIN = (0.0, 4 * math.pi)


@dataclass
class GradientStats:
    """Monte Carlo statistics of one gradient component over ``theta ~ U[0, 4 pi]^m``.

    ``se_variance`` uses the normal approximation ``var * sqrt(2 / (N - 1))``,
    which understates the error for heavy-tailed gradient distributions.
    """

    component: int
    mean: float
    variance: float
    se_mean: float
    se_variance: float
    samples: int
    n: int = 0
    layers: int = 1
    kind: str = "global"

    def row(self) -> dict:
        return {
            "n": self.n,
            "layers": self.layers,
            "kind": self.kind,
            "component": self.component,
            "samples": self.samples,
            "mean": repr(self.mean),
            "variance": repr(self.variance),
            "se": repr(self.se_mean),
            "se_variance": repr(self.se_variance),
        }


def sample_stats(values) -> tuple[float, float, float, float]:
    """``(mean, unbiased variance, SE of mean, SE of variance)`` with exactly rounded sums."""
    v = np.asarray(values, dtype=float).ravel()
    N = v.size
    if N < 2:
        raise ValueError("need at least 2 samples")
    mean = math.fsum(v) / N
    var = math.fsum((v - mean) ** 2) / (N - 1)
    return mean, var, math.sqrt(var / N), var * math.sqrt(2.0 / (N - 1))


def estimate_gradient_variance(
    inst, kind=CostKind.GLOBAL, layers: int = 1, component: int = 0, samples: int = 4096, seed: int = 0
) -> GradientStats:
    """Sample ``dC/dtheta_component`` at ``samples`` uniform points of ``[0, 4 pi]^m``."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    m = n_params(inst.n, layers)
    if not 0 <= component < m:
        raise ValueError(f"component {component} out of range for {m} parameters")
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(*VARIANCE_DOMAIN, size=(samples, m))
    g = gradient(inst, thetas, kind, components=[component])[:, 0]
    mean, var, se, se_var = sample_stats(g)
    return GradientStats(component, mean, var, se, se_var, samples, inst.n, layers, str(CostKind(kind)))


def fit_variance_decay(points) -> tuple[float, float, float]:
    """Least-squares line through ``(n, ln variance)``; returns ``(slope, intercept, r^2)``."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    if any(v <= 0 for _, v in pts):
        raise ValueError("variances must be positive")
    x = np.array([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        raise ValueError("need at least two distinct n values")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def gradient_norm_scan(inst, layers: int = 1, kind=CostKind.GLOBAL, count: int = 10_000, seed: int = 0) -> np.ndarray:
    """Sorted gradient norms at ``count`` points drawn uniformly from ``[0, 2 pi)^m``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(0.0, 2 * math.pi, size=(count, n_params(inst.n, layers)))
    return np.sort(np.linalg.norm(gradient(inst, thetas, kind), axis=1))


def trajectory_gradient_norms(report, inst) -> list[tuple[int, float]]:
    """Gradient norm at each incumbent (new best point) of a solve, by evaluation index."""
    if not report.incumbents:
        return []
    idx = [k for k, _ in report.incumbents]
    thetas = np.array([t for _, t in report.incumbents])
    norms = np.linalg.norm(gradient(inst, thetas, report.kind), axis=1)
    return [(int(k), float(v)) for k, v in zip(idx, norms)]


# -- resources ----------------------------------------------------------------------


@dataclass
class AveragedResources:
    """Mean lowered gate counts and depth over one family of test circuits."""

    circuit: str
    counts: dict[str, float]
    total: float
    depth: float
    circuits: int


def _average(name: str, reports) -> AveragedResources:
    if not reports:
        return AveragedResources(name, {k: 0.0 for k in BASIS}, 0.0, 0.0, 0)
    counts = {k: float(np.mean([r.counts[k] for r in reports])) for k in BASIS}
    return AveragedResources(
        name, counts, float(np.mean([r.total for r in reports])), float(np.mean([r.depth for r in reports])), len(reports)
    )


def resource_report(inst, kind=CostKind.GLOBAL, layers: int = 1) -> tuple[AveragedResources, AveragedResources]:
    """Build, lower and count every Hadamard test of one cost.

    Returns the averages over the denominator tests and over the numerator
    tests (both real and imaginary parts where both are measured).
    """
    plan = hadamard.enumerate_tests(inst.L, inst.n, kind, inst, layers)
    den, num = [], []
    for spec in plan:
        rep = resources(lower(hadamard.build_circuit(spec)))
        (den if spec.family == hadamard.DENOMINATOR else num).append(rep)
    return _average("denominator", den), _average("numerator", num)


def resource_rows(family: str, n: int, reports) -> list[dict]:
    rows = []
    for r in reports:
        for gk in BASIS + ("total",):
            cnt = r.total if gk == "total" else r.counts[gk]
            rows.append(
                {
                    "family": family,
                    "n": n,
                    "circuit": r.circuit,
                    "gate_kind": gk,
                    "mean_count": repr(float(cnt)),
                    "mean_depth": repr(float(r.depth)),
                }
            )
    return rows


def write_rows_csv(path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
