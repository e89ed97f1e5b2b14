"""Adaptive tensor Gauss-Legendre quadrature on compactified, possibly unbounded supports.

Integrands are passed in log-magnitude/sign form so that exponentials of large polynomials
never overflow: each cell factors out its own maximum exponent before summation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage, optimize

from .core import IndexSet, MomentSpec, ProblemInstance, ReferenceWeight, SupportRegion, monomials

LEADING_MARGIN = 1e-3
GROWTH_RADII = tuple(8.0 * 2 ** j for j in range(8))  # 8 .. 1024
GROWTH_FACTOR = 10.0
GROWTH_TAIL_REL = 1e-6
ROUNDOFF_FLOOR = 1e-13
EXACT_SIGN_FLOOR = 1e-12
# a log-integrand this large at one sample overflows double precision for any realistic peak width
OVERFLOW_LOG = 745.0

CONVERGED = "converged"
DIVERGENT = "divergent"
PRECISION_LIMITED = "precision-limited"


@dataclass
class IntegralResult:
    """Outcome of one adaptive integration.

    ``value`` is the integral of the first requested component (order 0 for the
    exponential integral); ``values`` holds every requested component.
    """

    value: float
    rel_error_estimate: float
    status: str
    values: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    abs_values: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    errors: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    log_scale: float = 0.0
    cells: int = 0
    leading_form: float | None = None

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


# --------------------------------------------------------------------------- rules


def _gauss_legendre_unit(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _tensor_rule(order: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gauss_legendre_unit(order)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    wgrids = np.meshgrid(*([w] * d), indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=1)
    weights = np.prod(np.stack([g.reshape(-1) for g in wgrids], axis=1), axis=1)
    return nodes, weights


_RULES: dict[int, tuple] = {}


def _rules(d: int):
    if d not in _RULES:
        x16, w16 = _tensor_rule(16, d)
        x8, w8 = _tensor_rule(8, d)
        _RULES[d] = (np.vstack([x16, x8]), w16, w8)
    return _RULES[d]


# --------------------------------------------------------------------------- domains


class Domain:
    """A compact box in u-space with a smooth map u -> t onto (part of) the support."""

    def __init__(self, lo, hi, axes: Sequence[str] | None = None, polar_center=None, indicator=None):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.axes = list(axes) if axes is not None else None
        self.polar_center = None if polar_center is None else np.asarray(polar_center, dtype=float)
        self.offsets = np.zeros(len(self.lo))
        self.indicator = indicator

    @property
    def dim(self) -> int:
        return len(self.lo)

    def to_t(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.polar_center is not None:
            r, phi = u[:, 0], u[:, 1]
            t = self.polar_center + np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)
            with np.errstate(divide="ignore"):
                return t, np.log(r)
        t = np.empty_like(u)
        logj = np.zeros(u.shape[0])
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            for d, kind in enumerate(self.axes):
                x = u[:, d]
                a = self.offsets[d]
                if kind == "interval":
                    t[:, d] = x
                elif kind == "line":
                    q = 1.0 - x * x
                    t[:, d] = a + x / q
                    logj += np.log1p(x * x) - 2.0 * np.log(q)
                elif kind == "upper":
                    q = 1.0 - x
                    t[:, d] = a + x / q
                    logj += -2.0 * np.log(q)
                elif kind == "lower":
                    q = 1.0 - x
                    t[:, d] = a - x / q
                    logj += -2.0 * np.log(q)
                else:  # pragma: no cover
                    raise ValueError(kind)
        return t, logj


def _axis_from_interval(a: float, b: float) -> tuple[str, float, float, float]:
    if math.isinf(a) and math.isinf(b):
        return "line", -1.0, 1.0, 0.0
    if math.isinf(b):
        return "upper", 0.0, 1.0, a
    if math.isinf(a):
        return "lower", 0.0, 1.0, b
    return "interval", a, b, 0.0


def _product_domain(intervals, indicator=None) -> Domain:
    axes, lo, hi, off = [], [], [], []
    for a, b in intervals:
        kind, l, h, o = _axis_from_interval(a, b)
        axes.append(kind)
        lo.append(l)
        hi.append(h)
        off.append(o)
    dom = Domain(lo, hi, axes, indicator=indicator)
    dom.offsets = np.asarray(off)
    return dom


def _halfspace_interval_1d(T: SupportRegion) -> tuple[float, float]:
    a_lo, a_hi = -math.inf, math.inf
    for (a,), b in zip(T.normals, T.offsets):
        if a > 0:
            a_hi = min(a_hi, b / a)
        else:
            a_lo = max(a_lo, b / a)
    return a_lo, a_hi


def support_domain(T: SupportRegion, radius: float | None = None) -> Domain:
    """Compactified domain for T, or for T intersected with [-radius, radius]^n."""
    n = T.n
    R = math.inf if radius is None else float(radius)
    if T.kind == "full":
        return _product_domain([(-R, R)] * n)
    if T.kind == "orthant":
        return _product_domain([(0.0, R)] * n)
    if T.kind == "box":
        return _product_domain([(max(l, -R), min(h, R)) for l, h in zip(T.lo, T.hi)])
    if T.kind == "ball":
        c = np.array(T.center)
        if n == 1:
            return _product_domain([(c[0] - T.radius, c[0] + T.radius)])
        if n == 2:
            return Domain([0.0, 0.0], [T.radius, 2.0 * math.pi], polar_center=c)
        lo, hi = T.bounding_box()
        return _product_domain(list(zip(lo, hi)), indicator=T.contains)
    # half-space intersection
    if n == 1:
        a, b = _halfspace_interval_1d(T)
        return _product_domain([(max(a, -R), min(b, R))])
    box = T.bounding_box()
    if box is not None:
        return _product_domain(list(zip(*box)), indicator=T.contains)
    return _product_domain([(-R, R)] * n, indicator=T.contains)


# --------------------------------------------------------------------------- adaptive core

Integrand = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass
class _Cells:
    lo: np.ndarray
    hi: np.ndarray
    q: np.ndarray  # (m, M) mantissas
    qabs: np.ndarray
    err: np.ndarray
    shift: np.ndarray  # (m, M)


def _evaluate_cells(domain: Domain, fn: Integrand, lo, hi, M: int) -> _Cells:
    X, w16, w8 = _rules(domain.dim)
    n16 = w16.shape[0]
    m = lo.shape[0]
    q = np.zeros((m, M))
    qabs = np.zeros((m, M))
    err = np.zeros((m, M))
    shift = np.full((m, M), -np.inf)
    chunk = max(1, 200000 // (X.shape[0] * max(M, 1)))
    for s in range(0, m, chunk):
        l, h = lo[s:s + chunk], hi[s:s + chunk]
        c = l.shape[0]
        width = h - l
        u = (l[:, None, :] + width[:, None, :] * X[None, :, :]).reshape(-1, domain.dim)
        t, logj = domain.to_t(u)
        with np.errstate(all="ignore"):
            logmag, sign = fn(t)
            logmag = logmag + logj[:, None]
        if domain.indicator is not None:
            logmag[~domain.indicator(t)] = -np.inf
        logmag = np.where(np.isnan(logmag), -np.inf, logmag).reshape(c, X.shape[0], M)
        sign = sign.reshape(c, X.shape[0], M)
        sh = logmag.max(axis=1)
        safe = np.where(np.isfinite(sh), sh, 0.0)
        with np.errstate(all="ignore"):
            vals = np.exp(logmag - safe[:, None, :])
        vals = np.where(np.isfinite(vals), vals, 0.0)
        vol = np.prod(width, axis=1)[:, None]
        a16 = np.einsum("q,cqm->cm", w16, vals[:, :n16]) * vol
        s16 = np.einsum("q,cqm->cm", w16, sign[:, :n16] * vals[:, :n16]) * vol
        s8 = np.einsum("q,cqm->cm", w8, sign[:, n16:] * vals[:, n16:]) * vol
        q[s:s + chunk] = s16
        qabs[s:s + chunk] = a16
        err[s:s + chunk] = np.abs(s16 - s8)
        shift[s:s + chunk] = sh
    return _Cells(lo.copy(), hi.copy(), q, qabs, err, shift)


def _concat(a: _Cells, b: _Cells) -> _Cells:
    return _Cells(*(np.concatenate([getattr(a, f), getattr(b, f)]) for f in ("lo", "hi", "q", "qabs", "err", "shift")))


def _select(a: _Cells, mask) -> _Cells:
    return _Cells(a.lo[mask], a.hi[mask], a.q[mask], a.qabs[mask], a.err[mask], a.shift[mask])


def _find_breakpoints(domain: Domain, logpeak: Callable[[np.ndarray], np.ndarray],
                      overflow_log: float | None = None) -> list[np.ndarray] | None:
    """Per-axis u-coordinates bracketing the local maxima of the log-integrand.

    Returns None when a sampled log-integrand exceeds ``overflow_log``.
    """
    d = domain.dim
    per_axis = {1: 4001, 2: 161, 3: 31}.get(d)
    if per_axis is None:
        return [np.array([]) for _ in range(d)]
    axes = [np.linspace(l, h, per_axis + 2)[1:-1] for l, h in zip(domain.lo, domain.hi)]
    grid = np.stack([g.reshape(-1) for g in np.meshgrid(*axes, indexing="ij")], axis=1)

    def s_of_u(u):
        u = np.atleast_2d(u)
        t, logj = domain.to_t(u)
        with np.errstate(all="ignore"):
            v = logpeak(t) + logj
        if domain.indicator is not None:
            v = np.where(domain.indicator(t), v, -np.inf)
        return np.where(np.isnan(v), -np.inf, v)

    vals = s_of_u(grid)
    if not np.any(np.isfinite(vals)):
        return [np.array([]) for _ in range(d)]
    shaped = vals.reshape((per_axis,) * d)
    filled = np.where(np.isfinite(shaped), shaped, -1e300)
    peaks = (ndimage.maximum_filter(filled, size=3, mode="nearest") == filled) & np.isfinite(shaped)
    idx = np.argwhere(peaks)
    top = float(np.max(vals))
    if overflow_log is not None and top > overflow_log:
        return None
    cand = sorted(((shaped[tuple(i)], tuple(i)) for i in idx if shaped[tuple(i)] >= top - 60.0), reverse=True)[:8]
    steps = np.array([(h - l) / (per_axis + 1) for l, h in zip(domain.lo, domain.hi)])
    breaks: list[list[float]] = [[] for _ in range(d)]
    for _, pos in cand:
        u0 = np.array([axes[a][pos[a]] for a in range(d)])
        blo = np.maximum(u0 - steps, domain.lo)
        bhi = np.minimum(u0 + steps, domain.hi)
        if d == 1:
            res = optimize.minimize_scalar(lambda x: -float(s_of_u(np.array([[x]]))[0]),
                                           bounds=(blo[0], bhi[0]), method="bounded",
                                           options={"xatol": 1e-15 * max(1.0, abs(u0[0]))})
            ustar = np.array([res.x])
        else:
            res = optimize.minimize(lambda x: -float(s_of_u(x)[0]), u0, method="Nelder-Mead",
                                    options={"xatol": 1e-13, "fatol": 1e-12, "maxiter": 400})
            ustar = np.clip(res.x, domain.lo, domain.hi)
        s0 = float(s_of_u(ustar)[0])
        if not np.isfinite(s0):
            continue
        deltas = np.logspace(-15, 0, 61)
        for a in range(d):
            span = domain.hi[a] - domain.lo[a]
            width = span
            for sgn in (1.0, -1.0):
                pts = np.repeat(ustar[None, :], deltas.size, axis=0)
                pts[:, a] = ustar[a] + sgn * deltas * span
                inside = (pts[:, a] > domain.lo[a]) & (pts[:, a] < domain.hi[a])
                drop = np.full(deltas.size, np.inf)
                if inside.any():
                    drop[inside] = s0 - s_of_u(pts[inside])
                hit = np.flatnonzero(drop >= 1.0)
                if hit.size:
                    width = min(width, deltas[hit[0]] * span)
            for c in (0.0, 0.5, 2.0, 6.0, 20.0):
                for sgn in (1.0, -1.0):
                    v = ustar[a] + sgn * c * width
                    if domain.lo[a] < v < domain.hi[a]:
                        breaks[a].append(v)
    return [np.array(sorted(set(b))) for b in breaks]


def adaptive_integrate(domain: Domain, fn: Integrand, M: int, tol: float,
                       logpeak: Callable[[np.ndarray], np.ndarray] | None = None,
                       init: int = 8, max_cells: int | None = None,
                       extra_breaks: Sequence[np.ndarray] | None = None,
                       dump_grid: str | None = None, overflow_log: float | None = None) -> IntegralResult:
    """Integrate the M-component integrand ``sign * exp(logmag)`` over the domain.

    Error control is relative to the integral of the absolute value of each component;
    ``tol`` is one relative tolerance or one per component. With ``overflow_log`` set, an integrand
    whose sampled log exceeds it is reported as an infinite integral without refinement.
    """
    d = domain.dim
    tols = np.broadcast_to(np.asarray(tol, dtype=float), (M,))
    if max_cells is None:
        max_cells = {1: 3000, 2: 3000}.get(d, 2000)
    edges = []
    peaks = _find_breakpoints(domain, logpeak, overflow_log) if logpeak is not None else [np.array([])] * d
    if peaks is None:
        inf = np.full(M, np.inf)
        return IntegralResult(value=math.inf, rel_error_estimate=math.inf, status=DIVERGENT, values=inf,
                              abs_values=inf, errors=inf)
    for a in range(d):
        e = np.linspace(domain.lo[a], domain.hi[a], init + 1)
        pieces = [e, peaks[a]]
        if extra_breaks is not None and len(extra_breaks) > a:
            pieces.append(np.asarray(extra_breaks[a], dtype=float))
        e = np.unique(np.concatenate(pieces))
        e = e[(e >= domain.lo[a]) & (e <= domain.hi[a])]
        keep = np.concatenate([[True], np.diff(e) > 1e-300])
        edges.append(e[keep])
    lows = np.meshgrid(*[e[:-1] for e in edges], indexing="ij")
    highs = np.meshgrid(*[e[1:] for e in edges], indexing="ij")
    lo = np.stack([g.reshape(-1) for g in lows], axis=1)
    hi = np.stack([g.reshape(-1) for g in highs], axis=1)
    cells = _evaluate_cells(domain, fn, lo, hi, M)
    status = PRECISION_LIMITED
    while True:
        S = cells.shift.max(axis=0)
        S = np.where(np.isfinite(S), S, 0.0)
        with np.errstate(all="ignore"):
            scale = np.exp(cells.shift - S[None, :])
        scale = np.where(np.isfinite(scale), scale, 0.0)
        total = (cells.q * scale).sum(axis=0)
        total_abs = (cells.qabs * scale).sum(axis=0)
        err = (cells.err * scale).sum(axis=0)
        m = cells.lo.shape[0]
        # summation roundoff puts a floor under any requested tolerance
        allowed = np.maximum(tols, ROUNDOFF_FLOOR * math.sqrt(m)) * total_abs + 1e-300
        if np.all(err <= allowed):
            status = CONVERGED
            break
        if m >= max_cells:
            break
        e = np.max(cells.err * scale / allowed[None, :], axis=1)
        split = e >= 0.25 * e.max()
        budget = max(1, (max_cells - m) // (2 ** d))
        if split.sum() > budget:
            split = np.zeros(m, dtype=bool)
            split[np.argsort(-e)[:budget]] = True
        parents = _select(cells, split)
        cells = _select(cells, ~split)
        mid = 0.5 * (parents.lo + parents.hi)
        clo, chi = [], []
        for corner in np.ndindex(*([2] * d)):
            c = np.array(corner, dtype=bool)
            clo.append(np.where(c, mid, parents.lo))
            chi.append(np.where(c, parents.hi, mid))
        children = _evaluate_cells(domain, fn, np.vstack(clo), np.vstack(chi), M)
        cells = _concat(cells, children)
    with np.errstate(all="ignore"):
        values = total * np.exp(S)
        abs_values = total_abs * np.exp(S)
        errors = err * np.exp(S)
    if dump_grid:
        _dump_cells(dump_grid, cells, S)
    rel = float(err[0] / total_abs[0]) if total_abs[0] > 0 else 0.0
    return IntegralResult(value=float(values[0]), rel_error_estimate=rel, status=status, values=values,
                          abs_values=abs_values, errors=errors, log_scale=float(S[0]), cells=cells.lo.shape[0])


def _dump_cells(path: str, cells: _Cells, S: np.ndarray):
    d = cells.lo.shape[1]
    order = np.lexsort(cells.lo.T[::-1])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"u{a + 1}_lo" for a in range(d)] + [f"u{a + 1}_hi" for a in range(d)] + ["nodes", "contribution"])
        for i in order:
            contrib = cells.q[i, 0] * math.exp(min(cells.shift[i, 0] - S[0], 0.0)) if np.isfinite(cells.shift[i, 0]) else 0.0
            w.writerow([*cells.lo[i], *cells.hi[i], 16 ** d, contrib * math.exp(S[0])])


# --------------------------------------------------------------------------- exponential integrals


def _log_monomials(exps: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    with np.errstate(divide="ignore"):
        logabs = np.log(np.abs(t))
    neg = t < 0
    logmag = np.zeros((t.shape[0], exps.shape[0]))
    negative = np.zeros((t.shape[0], exps.shape[0]), dtype=bool)
    for d in range(t.shape[1]):
        e = exps[:, d]
        used = e != 0
        with np.errstate(invalid="ignore"):
            logmag[:, used] += logabs[:, d, None] * e[None, used]
        odd = (e % 2) == 1
        if odd.any():
            negative[:, odd] ^= neg[:, d, None]
    return logmag, np.where(negative, -1.0, 1.0)


def exponent(lam: np.ndarray, instance: ProblemInstance, t: np.ndarray) -> np.ndarray:
    """sum_i lam_i t^i + log rho(t)."""
    w = instance.weight_coefficients
    if w is not None:
        # merge first: lam_top t^2k and log rho nearly cancel near the edge of dom L
        return monomials(instance.index_set.exponents, t) @ (lam + w)
    return monomials(instance.index_set.exponents, t) @ lam + instance.weight.log_density(t, instance.k)


def _exp_integrand(lam, instance: ProblemInstance, exps: np.ndarray) -> Integrand:
    def fn(t):
        s = exponent(lam, instance, t)
        logmag, sign = _log_monomials(exps, t)
        return logmag + s[:, None], sign

    return fn


def _sphere_directions(n: int, count: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        phi = 2 * np.pi * (np.arange(count) + 0.5) / count
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    else:
        from scipy.stats import norm, qmc

        pts = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
        z = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
        dirs = z / np.linalg.norm(z, axis=1, keepdims=True)
    eye = np.eye(n)
    return np.vstack([dirs, eye, -eye])


def leading_form_max(lam, index_set: IndexSet, weight: ReferenceWeight,
                     support: SupportRegion | None = None) -> float:
    """Max over unit recession directions of (top-degree part of the exponent) - (weight decay rate).

    Negative predicts a convergent exponential integral, positive a divergent one.
    """
    if support is not None and support.bounded:
        return -math.inf
    n, k = index_set.n, index_set.k
    dirs = _sphere_directions(n, 1000 * n)
    if support is not None:
        dirs = dirs[support.recession_contains(dirs)]
    if dirs.shape[0] == 0:
        return -math.inf
    decay = weight.leading_decay(dirs, k)
    if np.all(np.isinf(decay)):
        return -math.inf
    top = index_set.top_block
    lam = np.asarray(lam, dtype=float)
    form = monomials(index_set.exponents[top], dirs) @ lam[top]
    return float(np.max(form - decay))


def _growth_divergent(lam, instance: ProblemInstance) -> bool:
    """Empirical truncation-growth test used in the inconclusive band."""
    fn = _exp_integrand(lam, instance, np.zeros((1, instance.n), dtype=int))
    peak = lambda t: exponent(lam, instance, t)
    partial = []
    for R in GROWTH_RADII:
        res = adaptive_integrate(support_domain(instance.support, R), fn, 1, 1e-8, logpeak=peak)
        if not np.isfinite(res.value):
            return True
        partial.append(res.value)
    strikes = 0
    for a, b in zip(partial, partial[1:]):
        strikes = strikes + 1 if a > 0 and b / a > GROWTH_FACTOR else 0
        if strikes >= 2:
            return True
    last, prev = partial[-1], partial[-2]
    return last > 0 and (last - prev) / last > GROWTH_TAIL_REL


def integrate_exp_poly(lam, instance: ProblemInstance, orders: Sequence | np.ndarray | None = None,
                       tol: float | None = None, dump_grid: str | None = None) -> IntegralResult:
    """Integral of t^j exp(sum_i lam_i t^i) rho(t) over T for each requested order j (default: j = 0)."""
    lam = np.asarray(lam, dtype=float)
    n = instance.n
    exps = np.zeros((1, n), dtype=int) if orders is None else np.asarray(orders, dtype=int).reshape(-1, n)
    lf = leading_form_max(lam, instance.index_set, instance.weight, instance.support)
    M = exps.shape[0]
    if lf > LEADING_MARGIN:
        return _divergent(M, lf)
    if n == 1 and abs(lf) > EXACT_SIGN_FLOOR:
        # one dimension has only the directions +-1, so the sign of the leading form is decisive
        if lf > 0:
            return _divergent(M, lf)
    elif lf >= -LEADING_MARGIN and _growth_divergent(lam, instance):
        return _divergent(M, lf)
    tol = instance.tol.quad_rel if tol is None else tol
    res = adaptive_integrate(support_domain(instance.support), _exp_integrand(lam, instance, exps), M, tol,
                             logpeak=lambda t: exponent(lam, instance, t), dump_grid=dump_grid,
                             overflow_log=OVERFLOW_LOG)
    res.leading_form = lf
    if not np.all(np.isfinite(res.values)):
        return _divergent(M, lf)
    return res


def _divergent(M: int, lf: float) -> IntegralResult:
    inf = np.full(M, np.inf)
    return IntegralResult(value=math.inf, rel_error_estimate=math.inf, status=DIVERGENT, values=inf,
                          abs_values=inf, errors=inf, leading_form=lf)


def moment_integrals(lam, instance: ProblemInstance, orders: Sequence | None = None,
                     tol: float | None = None) -> dict:
    """M_j(lam) for each order j; defaults to every order of I + I (what the Hessian needs)."""
    idx = instance.index_set
    orders = list(idx.sum_indices) if orders is None else [tuple(o) for o in orders]
    res = integrate_exp_poly(lam, instance, np.array(orders, dtype=int).reshape(-1, instance.n), tol=tol)
    if res.status != CONVERGED:
        raise QuadratureFailure(res)
    return dict(zip(orders, res.values.tolist()))


class QuadratureFailure(RuntimeError):
    def __init__(self, result: IntegralResult):
        self.result = result
        super().__init__(f"integration {result.status}")


# --------------------------------------------------------------------------- densities


def density_moments(density, instance: ProblemInstance, method: str = "auto", tol: float = 1e-12) -> MomentSpec:
    """Moment vector over I of a nonnegative density, normalized so that g_0 = 1.

    ``density`` provides ``log_pdf(t)``; closed-form ``moments(exponents)`` is used when
    available unless ``method="quadrature"``.
    """
    idx = instance.index_set
    if method != "quadrature" and hasattr(density, "moments"):
        vals = np.asarray(density.moments(idx.exponents), dtype=float)
    else:
        if method == "closed":
            raise ValueError("density has no closed-form moments")
        exps = idx.exponents

        def fn(t):
            logmag, sign = _log_monomials(exps, t)
            return logmag + density.log_pdf(t)[:, None], sign

        breaks = density.breakpoints() if hasattr(density, "breakpoints") else None
        domain = support_domain(instance.support)
        if breaks is not None and domain.axes is not None:
            breaks = [_t_to_u(domain, a, np.asarray(b)) for a, b in enumerate(breaks)]
        res = adaptive_integrate(domain, fn, len(idx), tol, logpeak=density.log_pdf, extra_breaks=breaks)
        if res.status != CONVERGED:
            raise QuadratureFailure(res)
        vals = res.values
    vals = vals / vals[idx.zero]
    vals[idx.zero] = 1.0
    return MomentSpec(idx, vals)


def _t_to_u(domain: Domain, a: int, t: np.ndarray) -> np.ndarray:
    kind, off = domain.axes[a], domain.offsets[a]
    y = t - off
    if kind == "interval":
        return t
    if kind == "line":
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(y == 0, 0.0, (-1.0 + np.sqrt(1.0 + 4.0 * y * y)) / (2.0 * np.where(y == 0, 1.0, y)))
        return x
    if kind == "upper":
        return y / (1.0 + y)
    return -y / (1.0 - y)
