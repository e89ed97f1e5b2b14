"""The concave dual function L(lam) = <g, lam> - int_T exp(sum lam_i t^i) rho dt and its derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ProblemInstance, monomials
from .quadrature import (CONVERGED, DIVERGENT, LEADING_MARGIN, IntegralResult, _log_monomials,
                         adaptive_integrate, integrate_exp_poly, leading_form_max, support_domain)


class DomainBoundary(ValueError):
    """Derivatives requested where the leading-form test cannot certify an interior point of dom L."""


@dataclass
class LagrangianState:
    lam: np.ndarray
    value: float
    gradient: np.ndarray | None = None
    hessian: np.ndarray | None = None
    in_domain: bool = True
    status: str = CONVERGED
    error_estimate: float = 0.0
    leading_form: float | None = None
    moments: np.ndarray | None = None  # M_i(lam) for i in I

    @property
    def precision_limited(self) -> bool:
        return self.status not in (CONVERGED, DIVERGENT)


def _state_from(lam, instance: ProblemInstance, res: IntegralResult) -> LagrangianState:
    lam = np.asarray(lam, dtype=float)
    if res.status == DIVERGENT:
        return LagrangianState(lam, -math.inf, in_domain=False, status=DIVERGENT, leading_form=res.leading_form)
    value = float(instance.g @ lam) - res.value
    return LagrangianState(lam, value, status=res.status, error_estimate=float(res.errors[0]),
                           leading_form=res.leading_form)


def eval_L(lam, instance: ProblemInstance) -> LagrangianState:
    res = integrate_exp_poly(lam, instance)
    return _state_from(lam, instance, res)


HESSIAN_TOL_FACTOR = 100.0


def _derivative_tolerances(instance: ProblemInstance) -> np.ndarray:
    """Full accuracy for the orders of I (value and gradient), looser for orders needed only by the Hessian."""
    idx = instance.index_set
    tols = np.full(len(idx.sum_indices), instance.tol.quad_rel * HESSIAN_TOL_FACTOR)
    tols[idx.sum_positions_of_I] = instance.tol.quad_rel
    return tols


def derivatives(lam, instance: ProblemInstance, strict: bool = True) -> LagrangianState:
    """Value, gradient and Hessian from one shared quadrature over the orders I + I.

    With ``strict`` the leading-form margin must certify an interior point; otherwise
    derivatives are served whenever the integrals converge.
    """
    idx = instance.index_set
    lam = np.asarray(lam, dtype=float)
    if strict:
        lf = leading_form_max(lam, idx, instance.weight, instance.support)
        if lf >= -LEADING_MARGIN:
            raise DomainBoundary(f"leading-form margin {lf:.3g} is not below -{LEADING_MARGIN}")
    res = integrate_exp_poly(lam, instance, idx.sum_exponents, tol=_derivative_tolerances(instance))
    state = _state_from(lam, instance, res)
    if res.status != DIVERGENT:
        M = res.values
        mom = M[idx.sum_positions_of_I]
        state.moments = mom
        state.gradient = instance.g - mom
        H = -M[idx.sum_table]
        state.hessian = 0.5 * (H + H.T)
        state.error_estimate = float(res.errors[idx.sum_positions_of_I][0])
    return state


def grad_L(lam, instance: ProblemInstance) -> np.ndarray:
    """g_i - M_i(lam); only strictly inside dom L."""
    st = derivatives(lam, instance)
    if st.gradient is None:
        raise DomainBoundary("integral diverges at lam")
    return st.gradient


def hess_L(lam, instance: ProblemInstance) -> np.ndarray:
    """-M_{i+j}(lam); only strictly inside dom L."""
    st = derivatives(lam, instance)
    if st.hessian is None:
        raise DomainBoundary("integral diverges at lam")
    return st.hessian


@dataclass
class FiniteDifferenceCheck:
    grad_rel_error: float
    hess_rel_error: float
    hess_max_eig: float
    hess_norm: float


def finite_difference_check(lam, instance: ProblemInstance, h: float = 1e-5, quad_rel: float = 1e-13):
    """Central differences of eval_L against the gradient, and of the gradient against the Hessian.

    Errors are relative to the largest magnitude among the terms being differenced
    (|g_i| + |M_i| for the gradient, max |H_ij| for the Hessian) so that near-zero
    entries at a maximizer do not blow up the ratio. A tight quadrature tolerance keeps
    the adaptive integration noise far below h^2.
    """
    tight = instance.with_tol(quad_rel=quad_rel)
    lam = np.asarray(lam, dtype=float)
    base = derivatives(lam, tight)
    N = len(lam)
    fd_grad = np.empty(N)
    fd_hess = np.empty((N, N))
    for i in range(N):
        e = np.zeros(N)
        e[i] = h
        plus = derivatives(lam + e, tight, strict=False)
        minus = derivatives(lam - e, tight, strict=False)
        fd_grad[i] = (plus.value - minus.value) / (2 * h)
        fd_hess[:, i] = (plus.gradient - minus.gradient) / (2 * h)
    fd_hess = 0.5 * (fd_hess + fd_hess.T)
    grad_scale = float(np.max(np.abs(instance.g) + np.abs(base.moments)))
    H = base.hessian
    hnorm = float(np.max(np.abs(H)))
    return FiniteDifferenceCheck(
        grad_rel_error=float(np.max(np.abs(fd_grad - base.gradient))) / grad_scale,
        hess_rel_error=float(np.max(np.abs(fd_hess - H))) / hnorm,
        hess_max_eig=float(np.max(np.linalg.eigvalsh(H))),
        hess_norm=float(np.linalg.norm(H, 2)),
    )


# --------------------------------------------------------------------------- Fenchel diagnostic


def tilted_log_density(instance: ProblemInstance, t: np.ndarray) -> np.ndarray:
    """log of rho(t) exp(-sum_d t_d^{2k})."""
    return instance.weight.log_density(t, instance.k) - np.sum(t ** (2 * instance.k), axis=1)


@dataclass
class FenchelTerms:
    gap: float
    entropy_term: float  # int f ln f - f dmu
    linear_term: float  # sum_i lam_i int t^i f dmu
    exp_term: float  # int exp(lam . t) dmu
    status: str


def fenchel_gap(density_factor, lam, instance: ProblemInstance, tol: float = 1e-12) -> FenchelTerms:
    """Gap in x ln x - x >= x y - e^y integrated against the tilted measure.

    ``density_factor`` maps an (m, n) array of points to nonnegative, bounded values.
    """
    lam = np.asarray(lam, dtype=float)
    idx = instance.index_set
    exps = idx.exponents
    N = len(idx)

    def fn(t):
        base = tilted_log_density(instance, t)
        x = np.asarray(density_factor(t), dtype=float)
        y = monomials(exps, t) @ lam
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)) - x, 0.0)
            logx = np.log(x)
        lm, sg = _log_monomials(exps, t)
        logmag = np.empty((t.shape[0], N + 2))
        sign = np.empty_like(logmag)
        with np.errstate(divide="ignore"):
            logmag[:, 0] = np.log(np.abs(ent)) + base
        sign[:, 0] = np.sign(ent)
        logmag[:, 1:N + 1] = lm + logx[:, None] + base[:, None]
        sign[:, 1:N + 1] = sg
        logmag[:, N + 1] = y + base
        sign[:, N + 1] = 1.0
        return logmag, sign

    res = adaptive_integrate(support_domain(instance.support), fn, N + 2, tol,
                             logpeak=lambda t: tilted_log_density(instance, t) + monomials(exps, t) @ lam)
    v = res.values
    entropy_term = float(v[0])
    linear_term = float(v[1:N + 1] @ lam)
    exp_term = float(v[N + 1])
    gap = entropy_term - (linear_term - exp_term)
    return FenchelTerms(gap, entropy_term, linear_term, exp_term, res.status)


def tilted_mass(instance: ProblemInstance) -> float:
    """mu(T) for the tilted measure."""
    fn = lambda t: (tilted_log_density(instance, t)[:, None], np.ones((t.shape[0], 1)))
    return adaptive_integrate(support_domain(instance.support), fn, 1, 1e-13,
                              logpeak=lambda t: tilted_log_density(instance, t)).value
