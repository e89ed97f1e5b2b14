"""Independent ground truth: Hankel criteria in one dimension, generated feasible instances,
and a discretized nonnegative least-squares feasibility residual."""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .core import IndexSet, MomentSpec, monomials, ProblemInstance, ReferenceWeight, SupportRegion, Tolerances
from .densities import AtomicMeasure, GammaMixture, GaussianMixture, UniformMixture
from .quadrature import density_moments

INTERIOR, BOUNDARY, EXTERIOR = "interior", "boundary", "exterior"
FAMILIES = ("gaussian", "gamma", "uniform")
DECISIVE_MARGIN = 0.05  # Hankel margin above which the solver must agree with the oracle


@dataclass
class HankelVerdict:
    matrices: list[np.ndarray]
    min_eigenvalues: list[float]
    verdict: str
    eps: float

    @property
    def margin(self) -> float:
        """Distance of the normalized spectrum from the singular band."""
        return abs(min(self.min_eigenvalues))


def hankel_matrix(g: np.ndarray, size: int, offset: int = 0) -> np.ndarray:
    return np.array([[g[i + j + offset] for j in range(size)] for i in range(size)], dtype=float)


def _normalized_min_eig(H: np.ndarray, k: int) -> float:
    # positive rescale preserves the sign pattern even when the trace is not positive
    s = np.sum(np.abs(np.diag(H)))
    if s == 0:
        return 0.0
    return float(np.linalg.eigvalsh(H * (k + 1) / s)[0])


def hankel_check(g: MomentSpec, support_kind: str = "real") -> HankelVerdict:
    """Classify a 1-D moment vector on I = {0..2k} against the moment cone of R or [0, inf)."""
    idx = g.index_set
    k = idx.k
    if idx.n != 1 or len(idx) != 2 * k + 1:
        raise ValueError("hankel_check needs a one-dimensional full index set {0, ..., 2k}")
    if support_kind not in ("real", "halfline"):
        raise ValueError("support_kind must be 'real' or 'halfline'")
    vals = g.values
    mats = [hankel_matrix(vals, k + 1)]
    if support_kind == "halfline":
        mats.append(hankel_matrix(vals, k, offset=1))
    eps = 1e-10 * (k + 1)
    mins = [_normalized_min_eig(H, k) for H in mats]
    if all(m > eps for m in mins):
        verdict = INTERIOR
    elif any(m < -eps for m in mins):
        verdict = EXTERIOR
    else:
        verdict = BOUNDARY
    return HankelVerdict(mats, mins, verdict, eps)


def support_kind_of(instance: ProblemInstance) -> str:
    T = instance.support
    if T.n != 1:
        raise ValueError("Hankel oracle is one-dimensional")
    if T.kind == "full":
        return "real"
    if T.kind == "orthant":
        return "halfline"
    raise ValueError(f"no Hankel oracle for support kind {T.kind!r}")


# --------------------------------------------------------------------------- instance generation


def _weights(rng, c: int) -> np.ndarray:
    while True:
        w = rng.dirichlet(np.ones(c))
        if np.all(w >= 0.1):
            return w


def random_density(seed: int, family: str, n: int = 1, components: int | None = None):
    rng = np.random.default_rng(seed)
    c = int(rng.integers(1, 5)) if components is None else components
    if not 1 <= c <= 4:
        raise ValueError("between 1 and 4 components")
    w = _weights(rng, c)
    if family == "gaussian":
        return GaussianMixture(w, rng.uniform(-2, 2, (c, n)), rng.uniform(0.3, 2, (c, n)))
    if family == "gamma":
        return GammaMixture(w, rng.uniform(1.0, 3.0, (c, n)), rng.uniform(0.3, 2, (c, n)))
    if family == "uniform":
        centers = rng.uniform(-2, 2, (c, n))
        half = rng.uniform(0.3, 2, (c, n))
        return UniformMixture(w, np.maximum(centers - half, -4.0), np.minimum(centers + half, 4.0))
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def family_setting(family: str, n: int) -> tuple[SupportRegion, ReferenceWeight]:
    if family == "gaussian":
        return SupportRegion.full(n), ReferenceWeight.norm_power()
    if family == "gamma":
        return SupportRegion.orthant(n), ReferenceWeight.norm_power()
    return SupportRegion.box([-4.0] * n, [4.0] * n), ReferenceWeight.constant()


def mixture_instance(density, family: str, k: int, tol: Tolerances = Tolerances(),
                     method: str = "auto") -> ProblemInstance:
    n = density.n
    idx = IndexSet.full(n, k)
    support, weight = family_setting(family, n)
    placeholder = np.zeros(len(idx))
    placeholder[idx.zero] = 1.0
    inst = ProblemInstance(idx, MomentSpec(idx, placeholder), support, weight, tol)
    return inst.with_moments(density_moments(density, inst, method=method).values)


def generate_instance(seed: int, family: str, k: int, n: int = 1, components: int | None = None,
                      tol: Tolerances = Tolerances()):
    """A known-feasible instance from a seeded mixture; returns (instance, density)."""
    if not 1 <= k <= 4:
        raise ValueError("k must be between 1 and 4")
    density = random_density(seed, family, n, components)
    return mixture_instance(density, family, k, tol), density


def atomic_instance(seed: int, k: int, support_kind: str = "real", tol: Tolerances = Tolerances()):
    """Moments of at most k atoms: a point of the cone boundary (measures exist, densities do not)."""
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, k + 1))
    atoms = rng.uniform(-2, 2, (r, 1)) if support_kind == "real" else rng.uniform(0, 3, (r, 1))
    measure = AtomicMeasure(_weights(rng, r), atoms)
    idx = IndexSet.full(1, k)
    support = SupportRegion.full(1) if support_kind == "real" else SupportRegion.orthant(1)
    g = measure.moments(idx.exponents)
    g[idx.zero] = 1.0  # the weights sum to 1 only up to rounding
    return ProblemInstance(idx, MomentSpec(idx, g), support, ReferenceWeight.norm_power(), tol), measure


def exterior_instance(seed: int, k: int, family: str = "gaussian", tol: Tolerances = Tolerances()):
    """A feasible mixture with g_{2k} pushed below the Hankel Schur bound (no representing measure)."""
    rng = np.random.default_rng(seed)
    inst, _ = generate_instance(seed, family, k, tol=tol)
    g = inst.g.copy()
    H = hankel_matrix(g, k + 1)
    b = H[:k, k]
    schur = g[2 * k] - b @ np.linalg.solve(H[:k, :k], b)
    g[2 * k] -= schur * (1.0 + rng.uniform(0.05, 1.0))
    return inst.with_moments(g)


# --------------------------------------------------------------------------- brute force


@dataclass
class BruteForceResult:
    residual: float
    weights: np.ndarray
    nodes: np.ndarray
    ill_conditioned: bool


def _nnls(A: np.ndarray, b: np.ndarray, orders: np.ndarray) -> np.ndarray:
    """Active-set NNLS; the best of a few row scalings, judged by the unscaled residual.

    Monomial rows span many orders of magnitude and no single scaling suits every grid.
    """
    rmax = np.max(np.abs(A), axis=1)
    scalings = [np.ones(A.shape[0]), 1.0 / np.where(rmax > 0, rmax, 1.0), 2.0 ** -orders.astype(float)]
    best, best_res = None, math.inf
    for r in scalings:
        try:
            w, _ = nnls(A * r[:, None], b * r, maxiter=50 * A.shape[1])
        except RuntimeError:
            continue
        res = float(np.linalg.norm(A @ w - b))
        if res < best_res:
            best, best_res = w, res
    return best if best is not None else np.zeros(A.shape[1])


def brute_force_feasible(instance: ProblemInstance, grid_radius: float, grid_points: int) -> BruteForceResult:
    """Residual of the best nonnegative combination of point masses on a grid of T within [-R, R]^n.

    ``grid_points`` is the total number of grid nodes (per axis: its n-th root).
    """
    n = instance.n
    if n > 2:
        raise ValueError("brute force is limited to n <= 2")
    if not 1 <= grid_points <= 10 ** 4:
        raise ValueError("grid_points must be between 1 and 10^4")
    per_axis = max(2, int(round(grid_points ** (1.0 / n))))
    axes = []
    T = instance.support
    box = T.bounding_box()
    for d in range(n):
        lo, hi = -grid_radius, grid_radius
        if box is not None:
            lo, hi = max(lo, box[0][d]), min(hi, box[1][d])
        if T.kind == "orthant":
            lo = max(lo, 0.0)
        axes.append(np.linspace(lo, hi, per_axis))
    nodes = np.stack([g.reshape(-1) for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    nodes = nodes[T.contains(nodes)]
    A = monomials(instance.index_set.exponents, nodes).T
    scaled = A / np.linalg.norm(A, axis=1, keepdims=True)
    cond = np.linalg.cond(scaled)
    w = _nnls(A, instance.g, instance.index_set.orders)
    res = float(np.linalg.norm(A @ w - instance.g))
    return BruteForceResult(residual=res, weights=w, nodes=nodes, ill_conditioned=bool(cond > 1e12))


# --------------------------------------------------------------------------- cross-validation

XVAL_COLUMNS = ["seed", "kind", "k", "support", "verdict_oracle", "margin", "verdict_solver", "agreement",
                "lambda_norm", "bf_residual", "grad_residual", "certificate_ok", "wall_time"]


def xval_case(seed: int, k: int | None = None) -> tuple[str, ProblemInstance]:
    """The seed-th instance of the agreement batch: mixes feasibles, exteriors and atomics."""
    kinds = ("feasible", "feasible", "exterior", "atomic")
    kind = kinds[seed % 4]
    if k is None:
        k = 1 + (seed // 4) % 3
    halfline = (seed // 12) % 3 == 2
    if kind == "feasible":
        inst, _ = generate_instance(seed, "gamma" if halfline else "gaussian", k)
    elif kind == "exterior":
        inst = exterior_instance(seed, k, "gamma" if halfline else "gaussian")
    else:
        inst, _ = atomic_instance(seed, k, "halfline" if halfline else "real")
    return kind, inst


def agreement(verdict_oracle: str, margin: float, status: str) -> str:
    """'agree', 'allowed' (inconclusive near the boundary) or 'contradiction'."""
    from .solver import FEASIBLE_BOUNDARY, FEASIBLE_INTERIOR, INCONCLUSIVE, INFEASIBLE

    feasible = status in (FEASIBLE_INTERIOR, FEASIBLE_BOUNDARY)
    if verdict_oracle == INTERIOR:
        if feasible:
            return "agree"
        if status == INFEASIBLE:
            return "contradiction"
    else:
        if status == INFEASIBLE:
            return "agree"
        if feasible:
            return "contradiction"
    return "allowed" if margin < DECISIVE_MARGIN and status == INCONCLUSIVE else "contradiction"


def run_xval_row(seed: int, k: int | None = None) -> dict:
    return solve_xval_case(seed, k)[0]


def solve_xval_case(seed: int, k: int | None = None):
    """One batch row plus the instance and full solver outcome behind it."""
    from .solver import maximize, verify_certificate

    t0 = time.perf_counter()
    kind, inst = xval_case(seed, k)
    hv = hankel_check(inst.moments, support_kind_of(inst))
    out = maximize(inst)
    bf = brute_force_feasible(inst, 8.0, 801)
    cert_ok = ""
    if out.certificate is not None:
        cert_ok = verify_certificate(out.certificate, inst)[0]
    grad_res = ""
    if out.achieved_moments is not None:
        grad_res = float(np.max(np.abs(out.achieved_moments.values - inst.g)))
    row = {
        "seed": seed, "kind": kind, "k": inst.k, "support": inst.support.kind,
        "verdict_oracle": hv.verdict, "margin": hv.margin, "verdict_solver": out.status,
        "agreement": agreement(hv.verdict, hv.margin, out.status),
        "lambda_norm": "" if out.lam_star is None else float(np.linalg.norm(out.lam_star)),
        "bf_residual": bf.residual, "grad_residual": grad_res, "certificate_ok": cert_ok,
        "wall_time": time.perf_counter() - t0,
    }
    return row, inst, out


def cross_validate(seeds, k: int | None = None, workers: int | None = None) -> list[dict]:
    seeds = list(seeds)
    workers = workers or os.cpu_count() or 1
    if workers == 1:
        return [run_xval_row(s, k) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_xval_row, seeds, [k] * len(seeds)))


def write_xval_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=XVAL_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow(r)


def xval_summary(rows: list[dict]) -> dict:
    """Counts per agreement class; decisive rows are those with Hankel margin >= DECISIVE_MARGIN."""
    out = {"agree": 0, "allowed": 0, "contradiction": 0}
    for r in rows:
        out[r["agreement"]] += 1
    decisive = [r for r in rows if r["margin"] >= DECISIVE_MARGIN]
    out["decisive"] = len(decisive)
    out["decisive_agreement"] = (sum(r["agreement"] == "agree" for r in decisive) / len(decisive)
                                 if decisive else 1.0)
    out["wall_time"] = float(sum(r["wall_time"] for r in rows))
    return out
