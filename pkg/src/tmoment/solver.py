"""Feasibility decision by maximizing the dual function, with density reconstruction and certificates."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .core import MomentSpec, Polynomial, ProblemInstance, SupportRegion, monomials, order, riesz_apply, unit
from .lagrangian import LagrangianState, derivatives, eval_L
from .quadrature import CONVERGED, DIVERGENT, LEADING_MARGIN, PRECISION_LIMITED, integrate_exp_poly

log = logging.getLogger(__name__)

FEASIBLE_INTERIOR = "FeasibleInterior"
FEASIBLE_BOUNDARY = "FeasibleBoundary"
INFEASIBLE = "Infeasible"
INCONCLUSIVE = "Inconclusive"

ARMIJO_C = 1e-4
TAU_MIN = 1e-10
TAU_MAX = 1e8
UNBOUNDED_VALUE = 1e6
NORM_GUARD = 1e4
NORM_GIVE_UP = 1e12
STALL_WINDOW = 10
STALL_REL = 1e-10
RECON_TOL = 1e-5
DEFICIT_TOL = 1e-6
MAX_HALVINGS = 60
MAX_EVAL_FAILURES = 5
CONT_TOL = 1e-6
CONT_MIN_STEP = 1.0 / 64
CONT_INNER_ITER = 15
DIRECT_ITER = 30
LP_STRICTNESS = (1e-3, 1e-5, 1e-7)
START_TOP_SLACK = 0.02
LF_OUTSIDE = 1e-12
ROUNDOFF_SLOPE = 1e-11
ROUNDOFF_DROP = 1e-13


class DegeneratePolynomial(ValueError):
    pass


@dataclass
class Certificate:
    """A nonzero p in P_I with p <= 0 on T and phi_g(p) >= 0."""

    p: Polynomial
    sign_check: float = math.nan
    riesz_value: float = math.nan
    argmax: tuple[float, ...] | None = None
    source: str = ""

    def to_json(self, index_set) -> dict:
        return {
            "coefficients": self.p.to_vector(index_set).tolist(),
            "indices": [list(i) for i in index_set.indices],
            "sign_check": self.sign_check,
            "riesz_value": self.riesz_value,
            "argmax": None if self.argmax is None else list(self.argmax),
            "source": self.source,
        }


@dataclass
class IterationRecord:
    iteration: int
    value: float
    grad_norm: float
    step: float
    tau: float
    leading_form: float
    in_band: bool
    kind: str


@dataclass
class SolveOutcome:
    status: str
    lam_star: np.ndarray | None = None
    value: float | None = None
    achieved_moments: MomentSpec | None = None
    deficits: np.ndarray | None = None
    certificate: Certificate | None = None
    trace: list[IterationRecord] = field(default_factory=list)
    message: str = ""
    continuation: float = 0.0  # fraction of the moment path followed before the final ascent

    @property
    def feasible(self) -> bool:
        return self.status in (FEASIBLE_INTERIOR, FEASIBLE_BOUNDARY)

    def to_json(self, instance: ProblemInstance) -> dict:
        idx = instance.index_set
        return {
            "status": self.status,
            "message": self.message,
            "indices": [list(i) for i in idx.indices],
            "lambda_star": None if self.lam_star is None else self.lam_star.tolist(),
            "max_L": self.value,
            "achieved_moments": None if self.achieved_moments is None else self.achieved_moments.values.tolist(),
            "top_deficits": None if self.deficits is None else self.deficits.tolist(),
            "certificate": None if self.certificate is None else self.certificate.to_json(idx),
            "iterations": [vars(r) for r in self.trace],
        }


# --------------------------------------------------------------------------- sampling of T


def support_samples(T: SupportRegion, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy points of T, denser near the origin and along the axes."""
    from scipy.stats import qmc

    n = T.n
    pts = []
    halton = qmc.Halton(d=n + 1, scramble=True, seed=seed).random(count)
    eye = np.eye(n)
    if T.bounded:
        lo, hi = T.bounding_box()
        span = hi - lo
        pts.append(lo + span * halton[:, :n])
        corners = np.array([[lo[d] if (c >> d) & 1 == 0 else hi[d] for d in range(n)] for c in range(2 ** min(n, 10))])
        pts.append(corners)
        pts.append(0.5 * (lo + hi)[None, :])
        for d in range(n):
            line = np.repeat(0.5 * (lo + hi)[None, :], 201, axis=0)
            line[:, d] = np.linspace(lo[d], hi[d], 201)
            pts.append(line)
    else:
        radii = 10.0 ** (8.0 * halton[:, 0] - 4.0)
        if n == 1:
            dirs = np.where(halton[:, 1:] < 0.5, -1.0, 1.0)
        else:
            from scipy.stats import norm

            z = norm.ppf(np.clip(halton[:, 1:], 1e-12, 1 - 1e-12))
            dirs = z / np.linalg.norm(z, axis=1, keepdims=True)
        if T.kind == "orthant":
            dirs = np.abs(dirs)
        pts.append(radii[:, None] * dirs)
        axis_r = np.concatenate([10.0 ** np.linspace(-5, 4, 181), np.linspace(0, 10, 201)])
        for d in range(n):
            for sgn in (1.0, -1.0):
                pts.append(sgn * axis_r[:, None] * eye[d][None, :])
        pts.append(np.zeros((1, n)))
        pts.append(np.linspace(-10, 10, 2001)[:, None] * np.ones((1, n)) if n == 1 else np.zeros((0, n)))
    allpts = np.vstack(pts)
    return allpts[T.contains(allpts)]


def polynomial_sup(coeffs: np.ndarray, instance: ProblemInstance) -> tuple[float, np.ndarray]:
    """Supremum of the polynomial over T and a maximizer; +inf when unbounded above.

    One dimension uses the real critical points and the interval ends; higher
    dimensions polish the best low-discrepancy samples with a bounded local search.
    """
    idx, T = instance.index_set, instance.support
    coeffs = np.asarray(coeffs, dtype=float)
    top = coeffs[idx.top_block]
    if instance.n == 1:
        lo, hi = (-math.inf, math.inf)
        box = T.bounding_box()
        if box is not None:
            lo, hi = float(box[0][0]), float(box[1][0])
        elif T.kind == "orthant":
            lo = 0.0
        deg = int(idx.exponents[:, 0].max())
        poly = np.zeros(deg + 1)
        for c, e in zip(coeffs, idx.exponents[:, 0]):
            poly[e] += c
        lead = poly[deg]
        if (math.isinf(hi) and lead > 0) or (math.isinf(lo) and lead * (-1) ** deg > 0):
            return math.inf, np.array([math.nan])
        crit = np.roots(np.polynomial.polynomial.polyder(poly)[::-1]) if deg > 1 else np.array([])
        cand = [r.real for r in crit if abs(r.imag) <= 1e-9 * max(1.0, abs(r))]
        cand += [x for x in (lo, hi) if math.isfinite(x)]
        cand = np.array([x for x in cand if lo <= x <= hi] or [0.0 if lo <= 0.0 <= hi else lo])
        vals = np.polynomial.polynomial.polyval(cand, poly)
        j = int(np.argmax(vals))
        return float(vals[j]), np.array([cand[j]])
    if not T.bounded and np.max(monomials(idx.exponents[idx.top_block], _unit_directions(instance.n)) @ top) > 0:
        return math.inf, np.full(instance.n, math.nan)
    from scipy.optimize import minimize

    pts = support_samples(T, 4000, seed=3)
    vals = monomials(idx.exponents, pts) @ coeffs
    best_v, best_t = float(np.max(vals)), pts[int(np.argmax(vals))]
    box = T.bounding_box()
    bounds = None if box is None else list(zip(box[0], box[1]))
    for j in np.argsort(-vals)[:10]:
        res = minimize(lambda t: -float(monomials(idx.exponents, t[None, :]) @ coeffs), pts[j],
                       method="L-BFGS-B", bounds=bounds)
        if res.success and bool(T.contains(res.x[None, :])[0]) and -res.fun > best_v:
            best_v, best_t = float(-res.fun), res.x
    return best_v, best_t


def _unit_directions(n: int) -> np.ndarray:
    from scipy.stats import norm, qmc

    z = norm.ppf(np.clip(qmc.Halton(d=n, scramble=False).random(2001)[1:], 1e-12, 1 - 1e-12))
    return np.vstack([z / np.linalg.norm(z, axis=1, keepdims=True), np.eye(n), -np.eye(n)])


def verify_certificate(c: Certificate, instance: ProblemInstance, samples: int = 20000) -> tuple[bool, dict]:
    """Sampled check that p <= 0 on T together with phi_g(p) >= 0.

    Acceptance means g is not the moment vector of any density on T.
    """
    p = c.p
    norm = p.max_norm()
    if norm == 0.0:
        raise DegeneratePolynomial("certificate polynomial is zero")
    pts = support_samples(instance.support, samples)
    vals = p(pts)
    j = int(np.argmax(vals))
    sign_check = float(vals[j])
    riesz = riesz_apply(instance.moments, p)
    ok = sign_check <= 1e-9 * norm and riesz >= -1e-9
    c.sign_check, c.riesz_value, c.argmax = sign_check, riesz, tuple(pts[j].tolist())
    return ok, {"accepted": ok, "sign_check": sign_check, "argmax": c.argmax, "riesz_value": riesz,
                "samples": int(pts.shape[0]), "norm": norm}


def _lp_certificate(instance: ProblemInstance, anchor: np.ndarray | None, strict: float) -> np.ndarray | None:
    idx = instance.index_set
    N = len(idx)
    pts = support_samples(instance.support, 6000, seed=1)
    A = monomials(idx.exponents, pts)
    w = 1.0 + np.sum(pts ** (2 * idx.k), axis=1)
    A = A / w[:, None]
    b = np.full(pts.shape[0], -strict)
    kw = {}
    if anchor is not None:
        kw = {"A_eq": anchor[None, :], "b_eq": [1.0]}
    res = linprog(-instance.g, A_ub=A, b_ub=b, bounds=[(-1.0, 1.0)] * N, method="highs", **kw)
    if res.status != 0:
        return None
    return res.x


def _certificate_candidates(instance: ProblemInstance, lam: np.ndarray):
    idx = instance.index_set
    direction = np.array(lam, dtype=float)
    direction[idx.zero] = 0.0
    scale = np.max(np.abs(direction))
    if scale > 0:
        d = direction / scale
        yield d, "iterate"
        sup, _ = polynomial_sup(d, instance)
        if math.isfinite(sup) and sup > 0:
            shifted = d.copy()
            shifted[idx.zero] -= sup
            yield shifted, "iterate-shifted"
    # a strict margin on the samples keeps p nonpositive between them; try the safest first
    for strict in LP_STRICTNESS:
        lp = _lp_certificate(instance, None, strict)
        if lp is not None and instance.g @ lp > 0:
            yield lp, "lp-strict"
    if scale > 0:
        lp = _lp_certificate(instance, direction / np.linalg.norm(direction), 0.0)
        if lp is not None:
            yield lp, "lp-anchored"


def extract_certificate(instance: ProblemInstance, lam: np.ndarray) -> Certificate | None:
    """Try certificate candidates built from an escaping iterate; return the first that verifies."""
    idx = instance.index_set
    for coeffs, source in _certificate_candidates(instance, lam):
        m = np.max(np.abs(coeffs))
        if m == 0:
            continue
        cert = Certificate(Polynomial.from_vector(idx, coeffs / m), source=source)
        ok, _ = verify_certificate(cert, instance)
        if ok:
            return cert
    return None


# --------------------------------------------------------------------------- reconstruction


def reconstruct_density(lam_star, instance: ProblemInstance, eval_points=None):
    """f*(t) = exp(sum lam*_i t^i) rho(t) at the points, and its moment vector over I."""
    lam_star = np.asarray(lam_star, dtype=float)
    samples = []
    if eval_points is not None and len(eval_points):
        pts = np.asarray(eval_points, dtype=float).reshape(-1, instance.n)
        vals = np.exp(monomials(instance.index_set.exponents, pts) @ lam_star
                      + instance.weight.log_density(pts, instance.k))
        vals = np.where(instance.support.contains(pts), vals, 0.0)
        samples = list(zip(map(tuple, pts.tolist()), vals.tolist()))
    res = integrate_exp_poly(lam_star, instance, instance.index_set.exponents)
    if res.status == DIVERGENT:
        raise ValueError("lam_star lies outside dom L")
    return samples, MomentSpec(instance.index_set, res.values)


# --------------------------------------------------------------------------- Newton ascent


def _newton_direction(state: LagrangianState, tau: float, free: np.ndarray | None = None) -> np.ndarray:
    H = -state.hessian
    g = state.gradient
    sel = np.arange(len(g)) if free is None else free
    Hs = H[np.ix_(sel, sel)]
    D = np.sqrt(np.maximum(np.diag(Hs), 1e-300))
    Hn = Hs / D[:, None] / D[None, :]
    rhs = g[sel] / D
    shift = tau
    for _ in range(40):
        try:
            L = np.linalg.cholesky(Hn + shift * np.eye(len(sel)))
            break
        except np.linalg.LinAlgError:
            shift = max(10 * shift, 1e-12)
    else:  # pragma: no cover
        L = np.eye(len(sel))
    ds = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
    d = np.zeros_like(g)
    d[sel] = ds / D
    return d


def _line_search(lam, state: LagrangianState, d: np.ndarray, instance: ProblemInstance):
    slope = float(state.gradient @ d)
    if not slope > 0:
        return None, 0, 0
    alpha = 1.0
    rejections = domain_hits = 0
    for _ in range(MAX_HALVINGS):
        trial = lam + alpha * d
        st = eval_L(trial, instance)
        lf = st.leading_form if st.leading_form is not None else -math.inf
        # a positive leading form is provably outside dom L even when the truncated integral looks finite
        if st.status == DIVERGENT or lf > LF_OUTSIDE:
            domain_hits += 1
        elif st.status == CONVERGED and st.value >= state.value + ARMIJO_C * alpha * slope:
            return (alpha, trial, st), rejections, domain_hits
        rejections += 1
        alpha *= 0.5
    return None, rejections, domain_hits


def _roundoff_step(lam, state: LagrangianState, d: np.ndarray, instance: ProblemInstance, sel: np.ndarray):
    """Full Newton step judged by the gradient when the predicted gain is below the resolution of L."""
    slope = float(state.gradient @ d)
    scale = max(1.0, abs(state.value))
    if not 0 < slope <= ROUNDOFF_SLOPE * scale:
        return None
    trial = lam + d
    st = _derivatives_with_retry(trial, instance)
    lf = st.leading_form if st.leading_form is not None else -math.inf
    if st.status != CONVERGED or lf > LF_OUTSIDE or st.value < state.value - ROUNDOFF_DROP * scale:
        return None
    if np.max(np.abs(st.gradient[sel])) > 0.5 * np.max(np.abs(state.gradient[sel])):
        return None
    return trial, st


def _derivatives_with_retry(lam, instance: ProblemInstance) -> LagrangianState:
    st = derivatives(lam, instance, strict=False)
    if st.status == PRECISION_LIMITED:
        # the Hessian needs moments up to twice the degree; accept a looser estimate there
        loose = instance.with_tol(quad_rel=instance.tol.quad_rel * 100)
        st = derivatives(lam, loose, strict=False)
    return st


def _boundary_ok(state: LagrangianState, instance: ProblemInstance) -> bool:
    idx = instance.index_set
    lower = idx.orders < 2 * idx.k
    g = state.gradient
    return bool(np.max(np.abs(g[lower])) <= RECON_TOL and np.min(g[list(idx.top_diagonal)]) >= -DEFICIT_TOL)


def _newton_step(lam, state: LagrangianState, instance: ProblemInstance, tau: float, free: np.ndarray):
    """One safeguarded Newton step; returns (accepted, tau, kind) with accepted=(alpha, lam, state) or None/"fail"."""
    d = _newton_direction(state, tau)
    lf = state.leading_form if state.leading_form is not None else -math.inf
    in_band = lf >= -LEADING_MARGIN
    if not in_band:
        quick = _roundoff_step(lam, state, d, instance, np.arange(len(d)))
        if quick is not None:
            return (1.0, *quick), max(tau * 0.3, TAU_MIN), "roundoff"
    found, rejections, domain_hits = _line_search(lam, state, d, instance)
    kind = "newton"
    if (domain_hits or in_band) and len(free):
        # with the top block frozen the problem is strictly concave and well posed; the shift
        # inflated by full-space steps bumping into the edge of dom L does not apply to it
        d_sub = _newton_direction(state, TAU_MIN, free)
        quick = _roundoff_step(lam, state, d_sub, instance, free)
        if quick is not None:
            return (1.0, *quick), tau, "roundoff"
        alt, sub_rejections, _ = _line_search(lam, state, d_sub, instance)
        if alt is not None and (found is None or alt[2].value > found[2].value):
            found, kind, rejections = alt, "subspace", sub_rejections
    if found is None:
        return None, min(tau * 2.0 ** max(rejections, 1), TAU_MAX), kind
    if kind == "subspace":
        pass  # keep the full-space shift; it still describes how far full steps can go
    elif rejections == 0:
        tau = max(tau * 0.3, TAU_MIN)
    else:
        tau = min(tau * 2.0 ** rejections, TAU_MAX)
    alpha, trial, _ = found
    new_state = _derivatives_with_retry(trial, instance)
    if new_state.status != CONVERGED:
        return "fail", min(tau * 16.0, TAU_MAX), kind
    return (alpha, trial, new_state), tau, kind


def _solve_inner(lam, state, instance, free, tol, max_iter):
    tau = TAU_MIN
    for _ in range(max_iter):
        if float(np.max(np.abs(state.gradient))) <= tol:
            return lam, state, True
        step, tau, _ = _newton_step(lam, state, instance, tau, free)
        if step == "fail" or (step is None and tau >= TAU_MAX):
            break
        if step is not None:
            _, lam, state = step
    return lam, state, bool(float(np.max(np.abs(state.gradient))) <= tol)


def matched_start(instance: ProblemInstance) -> np.ndarray | None:
    """A point whose density has roughly the first two moments of g and a nearly cancelled weight tail.

    Gaussian on the full space, exponential on the orthant; None when the weight's top-degree
    part cannot be cancelled inside the index set or the support is of another kind.
    """
    idx, n, k, g = instance.index_set, instance.n, instance.k, instance.g
    kind = instance.support.kind
    if kind not in ("full", "orthant") or instance.weight.power(k) != 2 * k:
        return None
    poly = instance.weight.polynomial_log(n, k)
    if poly is None:
        return None
    lam = np.zeros(len(idx))
    for i, c in poly.items():
        if order(i) == 2 * k:
            if i not in idx.position:
                return None
            lam[idx.position[i]] = -c * (1.0 - START_TOP_SLACK)
    for d in range(n):
        mean = g[idx.position[unit(n, d)]]
        if kind == "full":
            var = g[idx.position[unit(n, d, 2)]] - mean * mean
            if not var > 0:
                return None
            lam[idx.position[unit(n, d)]] += mean / var
            lam[idx.position[unit(n, d, 2)]] -= 0.5 / var
        else:
            if not mean > 0:
                return None
            lam[idx.position[unit(n, d)]] -= 1.0 / mean
    return lam


def _continuation(lam, state, instance: ProblemInstance, free):
    """Follow the maximizer while the moments move from those of the start point to g.

    A cold Newton start can crawl along a curved valley near the edge of dom L for
    hundreds of iterations; the path stays in the basin where Newton converges quickly.
    Returns the last point on the path, its state for the target instance and the
    fraction of the path covered.
    """
    zero = instance.index_set.zero
    g_ref = state.moments / state.moments[zero]
    lam = lam.copy()
    lam[zero] -= math.log(state.moments[zero])  # now exactly optimal for g_ref
    s, ds = 0.0, 1.0
    tol = max(instance.tol.grad, CONT_TOL)
    while s < 1.0 and ds >= CONT_MIN_STEP:
        s_new = min(1.0, s + ds)
        sub = instance.with_moments((1 - s_new) * g_ref + s_new * instance.g)
        sub_state = derivatives(lam, sub, strict=False)
        if sub_state.status != CONVERGED:
            break
        lam_new, sub_state, ok = _solve_inner(lam, sub_state, sub, free, tol, CONT_INNER_ITER)
        log.debug("continuation s=%.6g ok=%s grad=%.3g", s_new, ok, float(np.max(np.abs(sub_state.gradient))))
        if ok:
            lam, s, ds = lam_new, s_new, ds * 2.0
        else:
            ds *= 0.25
    target = derivatives(lam, instance, strict=False)
    return lam, target, s


def _matched_path_point(instance: ProblemInstance, free):
    start = matched_start(instance)
    if start is None:
        return None
    st = derivatives(start, instance, strict=False)
    if st.status != CONVERGED:
        return None
    lam, st, s = _continuation(start, st, instance, free)
    return (lam, st, s) if st.status == CONVERGED else None


def maximize(instance: ProblemInstance, start=None) -> SolveOutcome:
    """Decide feasibility: damped Newton ascent on L with Levenberg safeguarding."""
    idx = instance.index_set
    tol_grad = instance.tol.grad
    lam = instance.initial_point() if start is None else np.asarray(start, dtype=float).copy()
    nonconst = np.ones(len(idx), dtype=bool)
    nonconst[idx.zero] = False
    top = set(idx.top_block.tolist())
    free = np.array([j for j in range(len(idx)) if j not in top])
    trace: list[IterationRecord] = []
    tau = TAU_MIN
    next_cert_norm = NORM_GUARD
    failures = 0

    state = derivatives(lam, instance, strict=False)
    if state.status != CONVERGED:
        return SolveOutcome(INCONCLUSIVE, message=f"start point not evaluable ({state.status})")
    reached = 0.0

    def record(kind, step):
        lf = state.leading_form if state.leading_form is not None else -math.inf
        trace.append(IterationRecord(len(trace), state.value, float(np.max(np.abs(state.gradient))), step, tau,
                                     lf, bool(lf >= -LEADING_MARGIN), kind))

    def feasible(status, msg):
        mom = MomentSpec(idx, state.moments)
        deficits = instance.g[list(idx.top_diagonal)] - state.moments[list(idx.top_diagonal)]
        return SolveOutcome(status, lam_star=lam.copy(), value=state.value, achieved_moments=mom,
                            deficits=deficits, trace=trace, message=msg, continuation=reached)

    def try_certificate(msg):
        cert = extract_certificate(instance, lam)
        if cert is not None:
            return SolveOutcome(INFEASIBLE, certificate=cert, trace=trace, value=state.value, message=msg,
                                continuation=reached)
        return None

    record("start", 0.0)
    for _ in range(instance.tol.max_iter):
        gnorm = trace[-1].grad_norm
        lf = trace[-1].leading_form
        in_band = lf >= -LEADING_MARGIN
        if gnorm <= tol_grad:
            if lf < 0:
                return feasible(FEASIBLE_INTERIOR, "stationary point strictly inside dom L")
            return feasible(FEASIBLE_BOUNDARY, "stationary point on the boundary of dom L")
        nc_norm = float(np.max(np.abs(lam[nonconst])))
        growing = len(trace) > 5 and all(b.value > a.value for a, b in zip(trace[-6:], trace[-5:]))
        if state.value > UNBOUNDED_VALUE or (nc_norm > next_cert_norm and growing):
            out = try_certificate("L unbounded above along the iterates")
            if out is not None:
                return out
            next_cert_norm = max(next_cert_norm, nc_norm) * 10
        if nc_norm > NORM_GIVE_UP:
            break
        if len(trace) > STALL_WINDOW:
            old = trace[-1 - STALL_WINDOW].value
            stalled = abs(state.value - old) <= STALL_REL * max(1.0, abs(state.value))
            if stalled and in_band and _boundary_ok(state, instance):
                return feasible(FEASIBLE_BOUNDARY, "supremum attained on the boundary of dom L")
            if stalled and not in_band:
                break

        if len(trace) == DIRECT_ITER + 1 and state.value <= UNBOUNDED_VALUE and nc_norm <= NORM_GUARD:
            # slow direct ascent: follow the moment path from a matched start instead
            jump = _matched_path_point(instance, free)
            if jump is not None and jump[1].value >= state.value:
                lam, state, reached = jump
                tau = TAU_MIN
                record("continuation", 1.0)
                continue

        step, tau, kind = _newton_step(lam, state, instance, tau, free)
        if step is None:
            if tau >= TAU_MAX:
                break
            continue
        if step == "fail":
            failures += 1
            if failures > MAX_EVAL_FAILURES:
                out = try_certificate("quadrature failed while L kept increasing") if nc_norm > NORM_GUARD else None
                return out or SolveOutcome(INCONCLUSIVE, lam_star=lam.copy(), value=state.value, trace=trace,
                                           message="quadrature precision-limited at iterate", continuation=reached)
            continue
        alpha, lam, state = step
        record(kind, alpha)

    if trace[-1].leading_form >= -LEADING_MARGIN and _boundary_ok(state, instance):
        vals = [r.value for r in trace[-STALL_WINDOW:]]
        if len(vals) == STALL_WINDOW and max(vals) - min(vals) <= STALL_REL * max(1.0, abs(vals[-1])):
            return feasible(FEASIBLE_BOUNDARY, "supremum attained on the boundary of dom L")
    if float(np.max(np.abs(lam[nonconst]))) > NORM_GUARD or state.value > UNBOUNDED_VALUE:
        out = try_certificate("iterates diverge")
        if out is not None:
            return out
    return SolveOutcome(INCONCLUSIVE, lam_star=lam.copy(), value=state.value, trace=trace,
                        message="no verdict within the iteration budget", continuation=reached)
