"""Derivative-free minimisation (COBYLA scheme, unconstrained) and the VQLS solve loop."""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import cost as cost_mod
from .circuit import ansatz_states, n_params
from .cost import CostKind
from .numerics import cosine_alignment

# Powell's constants: acceptability thresholds, geometry step, far-vertex factor
ALPHA = 0.25
BETA = 2.1
GAMMA = 0.5
DELTA = 1.1
IMPROVE_TOL = 1e-12


class OptimizationError(ArithmeticError):
    """The objective returned a non-finite value."""


@dataclass(frozen=True)
class OptimizerConfig:
    initial_trust_radius: float = 0.5
    final_trust_radius: float = 1e-6
    no_improve_window: int = 100
    max_evaluations: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.final_trust_radius < self.initial_trust_radius:
            raise ValueError("need 0 < final_trust_radius < initial_trust_radius")
        if self.no_improve_window < 1:
            raise ValueError("no_improve_window must be >= 1")
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be >= 1")

    def with_seed(self, seed: int) -> OptimizerConfig:
        return OptimizerConfig(**{**asdict(self), "seed": int(seed)})


class MinimizeResult(NamedTuple):
    x: np.ndarray
    fun: float
    evaluations: int
    trajectory: list[tuple[int, float]]
    incumbents: list[tuple[int, np.ndarray]]
    reason: str


class _Stop(Exception):
    def __init__(self, reason: str):
        self.reason = reason


class _Tracker:
    """Counts evaluations, records the trajectory and enforces the stopping rules.

    The no-improvement counter only runs once the initial simplex is built,
    so a constant objective stops after exactly ``m + 1 + window`` calls.
    """

    def __init__(self, f, config: OptimizerConfig):
        self.f = f
        self.cfg = config
        self.count = 0
        self.best = math.inf
        self.best_x = None
        self.stale = 0
        self.counting = False
        self.trajectory: list[tuple[int, float]] = []
        self.incumbents: list[tuple[int, np.ndarray]] = []

    def __call__(self, x: np.ndarray) -> float:
        if self.count >= self.cfg.max_evaluations:
            raise _Stop("max_evaluations")
        v = float(self.f(x))
        self.count += 1
        if not math.isfinite(v):
            raise OptimizationError(f"objective returned {v} at evaluation {self.count}")
        self.trajectory.append((self.count, v))
        if v < self.best - IMPROVE_TOL or self.best_x is None:
            self.best, self.best_x = v, x.copy()
            self.incumbents.append((self.count, x.copy()))
            self.stale = 0
        else:
            if v < self.best:  # tiny gain: keep the point, the window keeps running
                self.best, self.best_x = v, x.copy()
            if self.counting:
                self.stale += 1
        if self.counting and self.stale >= self.cfg.no_improve_window:
            raise _Stop("no_improvement")
        return v


def _geometry(sim: np.ndarray, simi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vsig = 1.0 / np.linalg.norm(simi, axis=1)
    veta = np.linalg.norm(sim, axis=0)
    return vsig, veta


def cobyla_minimize(f: Callable[[np.ndarray], float], x0, config: OptimizerConfig | None = None) -> MinimizeResult:
    """Minimise ``f`` with linear interpolation models on an ``m+1`` point simplex.

    Each iteration fits the linear model through the simplex, steps to the
    trust-region boundary along its negative gradient, and replaces a vertex.
    When a step fails to achieve a tenth of the predicted reduction the
    simplex geometry is repaired or the radius halved. The radius never grows.

    Stops when the best value has not improved by more than ``1e-12`` for
    ``no_improve_window`` evaluations, at ``max_evaluations``, or when the
    radius has reached ``final_trust_radius`` without progress.

    Raises:
        OptimizationError: on a non-finite objective value.
    """
    cfg = config or OptimizerConfig()
    x0 = np.array(x0, dtype=float).ravel()
    m = x0.size
    track = _Tracker(f, cfg)
    rho = cfg.initial_trust_radius
    rho_end = cfg.final_trust_radius
    reason = "final_trust_radius"
    try:
        # points[0] is the best vertex; the others are stored as absolute points
        pts = np.empty((m + 1, m))
        fv = np.empty(m + 1)
        pts[0] = x0
        fv[0] = track(x0)
        for j in range(m):
            pts[j + 1] = pts[0]
            pts[j + 1, j] += rho
            fv[j + 1] = track(pts[j + 1])
            if fv[j + 1] < fv[0]:
                pts[[0, j + 1]] = pts[[j + 1, 0]]
                fv[[0, j + 1]] = fv[[j + 1, 0]]
        track.counting = True

        while True:
            best = int(np.argmin(fv))
            if best != 0:
                pts[[0, best]] = pts[[best, 0]]
                fv[[0, best]] = fv[[best, 0]]
            sim = (pts[1:] - pts[0]).T  # column j: offset of vertex j+1
            try:
                simi = np.linalg.inv(sim)
            except np.linalg.LinAlgError:
                simi = np.linalg.pinv(sim)
            vsig, veta = _geometry(sim, simi)
            acceptable = bool(np.all(vsig >= ALPHA * rho) and np.all(veta <= BETA * rho))

            g = simi.T @ (fv[1:] - fv[0])
            gnorm = float(np.linalg.norm(g))
            improved = False
            if gnorm > 0:
                d = -rho * g / gnorm
                prerem = rho * gnorm
                xn = pts[0] + d
                fn = track(xn)
                actrem = fv[0] - fn
                lam = np.abs(simi @ d)
                jdrop = -1
                ratio = 1.0 if actrem <= 0 else 0.0
                for j in range(m):
                    if lam[j] > ratio:
                        jdrop, ratio = j, lam[j]
                sigbar = lam * vsig
                edgmax = DELTA * rho
                far = -1
                for j in range(m):
                    if sigbar[j] >= ALPHA * rho or sigbar[j] >= vsig[j]:
                        dist = veta[j] if actrem <= 0 else float(np.linalg.norm(d - sim[:, j]))
                        if dist > edgmax:
                            far, edgmax = j, dist
                if far >= 0:
                    jdrop = far
                if jdrop >= 0:
                    pts[jdrop + 1] = xn
                    fv[jdrop + 1] = fn
                elif actrem > 0:
                    # keep the better point even if no vertex qualified for removal
                    j = int(np.argmax(lam))
                    pts[j + 1], fv[j + 1] = xn, fn
                improved = actrem >= 0.1 * prerem
            if improved:
                continue
            if not acceptable:
                # geometry step: move the worst-placed vertex
                if np.any(veta > BETA * rho):
                    j = int(np.argmax(veta))
                else:
                    j = int(np.argmin(vsig))
                step = GAMMA * rho * vsig[j] * simi[j]
                if g @ step > 0:
                    step = -step
                pts[j + 1] = pts[0] + step
                fv[j + 1] = track(pts[j + 1])
                continue
            if rho <= rho_end:
                break
            rho *= 0.5
            if rho <= 1.5 * rho_end:
                rho = rho_end
    except _Stop as stop:
        reason = stop.reason
    return MinimizeResult(track.best_x, track.best, track.count, track.trajectory, track.incumbents, reason)


# -- solve loop ------------------------------------------------------------------------


@dataclass
class SolveReport:
    best_cost: float
    best_theta: np.ndarray
    cosine: float
    evaluations: int
    trajectory: list[tuple[int, float]] = field(repr=False)
    wall_time: float
    layers: int = 1
    kind: str = "global"
    seed: int = 0
    n: int = 0
    family: str = ""
    reason: str = ""
    incumbents: list[tuple[int, np.ndarray]] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        """Deterministic fields only (no wall time, no trajectory)."""
        return {
            "family": self.family,
            "n": self.n,
            "layers": self.layers,
            "kind": self.kind,
            "seed": self.seed,
            "best_cost": repr(float(self.best_cost)),
            "cosine": repr(float(self.cosine)),
            "evaluations": self.evaluations,
            "reason": self.reason,
        }

    def to_json(self, include_trajectory: bool = True) -> str:
        d = {
            **self.summary(),
            "best_cost": float(self.best_cost),
            "cosine": float(self.cosine),
            "best_theta": [float(t) for t in self.best_theta],
            "wall_time": self.wall_time,
        }
        if include_trajectory:
            d["trajectory"] = [[int(k), float(v)] for k, v in self.trajectory]
        return json.dumps(d, indent=2)


SOLVE_FIELDS = ("family", "n", "layers", "kind", "seed", "best_cost", "cosine", "evaluations", "reason")


def write_trajectory_csv(path, report: SolveReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("evaluation", "cost"))
        for k, v in report.trajectory:
            w.writerow((k, repr(float(v))))


def solution_cosine(inst, layers: int, theta) -> float:
    """``|cos|`` of the angle between ``A x`` and ``b`` for ``x = V(theta)|0>``."""
    x = ansatz_states(inst.n, layers, theta)
    return abs(cosine_alignment(inst.dense() @ x, inst.b))


def initial_theta(n: int, layers: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 2 * np.pi, size=n_params(n, layers))


def solve(inst, layers: int = 1, kind=CostKind.GLOBAL, config: OptimizerConfig | None = None) -> SolveReport:
    """Run VQLS on ``inst`` from ``theta_0 ~ U[0, 2 pi)`` (seeded by ``config.seed``).

    The direct-path cost is minimised; the parameters with the lowest cost
    encountered are reported, with the cosine recomputed from them.
    """
    cfg = config or OptimizerConfig()
    kind = CostKind(kind)
    theta0 = initial_theta(inst.n, layers, cfg.seed)
    f = cost_mod.objective(inst, kind)
    t0 = time.perf_counter()
    res = cobyla_minimize(f, theta0, cfg)
    wall = time.perf_counter() - t0
    return SolveReport(
        best_cost=res.fun,
        best_theta=res.x,
        cosine=solution_cosine(inst, layers, res.x),
        evaluations=res.evaluations,
        trajectory=res.trajectory,
        wall_time=wall,
        layers=layers,
        kind=str(kind),
        seed=cfg.seed,
        n=inst.n,
        family=str(inst.metadata.get("family", "")),
        reason=res.reason,
        incumbents=res.incumbents,
    )


def _solve_job(args):
    inst, layers, kind, cfg = args
    return solve(inst, layers, kind, cfg)


SWEEP_FIELDS = (
    "family", "n", "layers", "kind", "repeats",
    "cosine_mean", "cosine_std", "cost_mean", "cost_std", "evaluations_mean", "evaluations_std",
)  # fmt: skip


@dataclass
class SweepTable:
    rows: list[dict]
    runs: list[SolveReport]


def aggregate(reports: list[SolveReport]) -> dict:
    """Mean and (population) standard deviation of cosine, best cost and evaluations."""
    cos = np.array([r.cosine for r in reports])
    cst = np.array([r.best_cost for r in reports])
    ev = np.array([r.evaluations for r in reports], dtype=float)
    r0 = reports[0]
    return {
        "family": r0.family,
        "n": r0.n,
        "layers": r0.layers,
        "kind": r0.kind,
        "repeats": len(reports),
        "cosine_mean": repr(float(cos.mean())),
        "cosine_std": repr(float(cos.std())),
        "cost_mean": repr(float(cst.mean())),
        "cost_std": repr(float(cst.std())),
        "evaluations_mean": repr(float(ev.mean())),
        "evaluations_std": repr(float(ev.std())),
    }


def sweep_layers(
    inst,
    layers_list,
    kind=CostKind.GLOBAL,
    config: OptimizerConfig | None = None,
    repeats: int = 10,
    workers: int = 1,
) -> SweepTable:
    """Solve for each depth in ``layers_list`` with seeds ``config.seed + r``, ``r < repeats``."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    cfg = config or OptimizerConfig()
    jobs = [(inst, int(l), CostKind(kind), cfg.with_seed(cfg.seed + r)) for l in layers_list for r in range(repeats)]
    runs = run_jobs(jobs, workers)
    runs.sort(key=lambda r: (r.seed, r.n, r.layers))
    rows = []
    for l in layers_list:
        rows.append(aggregate([r for r in runs if r.layers == l]))
    return SweepTable(rows, runs)


def run_jobs(jobs, workers: int = 1) -> list[SolveReport]:
    if workers <= 1 or len(jobs) <= 1:
        return [_solve_job(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_solve_job, jobs))
