"""Closed-form mixture densities used to manufacture known-feasible moment vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln


def normal_moment(m: int, mu: float, sd: float) -> float:
    """E[(mu + sd Z)^m] for standard normal Z."""
    total = 0.0
    for j in range(0, m + 1, 2):
        dfact = math.prod(range(j - 1, 0, -2)) if j else 1
        total += math.comb(m, j) * mu ** (m - j) * sd ** j * dfact
    return total


def _check_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("mixture weights must be nonnegative with positive sum")
    return w / w.sum()


def _mix_moments(weights, per_component_axis_moment, exps: np.ndarray) -> np.ndarray:
    out = np.zeros(exps.shape[0])
    for c, w in enumerate(weights):
        for r, e in enumerate(exps):
            out[r] += w * math.prod(per_component_axis_moment(c, d, int(m)) for d, m in enumerate(e))
    return out


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    top = np.max(a, axis=1)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        return safe + np.log(np.sum(np.exp(a - safe[:, None]), axis=1))


@dataclass(frozen=True)
class GaussianMixture:
    """Mixture of axis-aligned Gaussians on R^n; ``means``/``sds`` have shape (components, n)."""

    weights: np.ndarray
    means: np.ndarray
    sds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_weights(self.weights))
        object.__setattr__(self, "means", np.atleast_2d(np.asarray(self.means, dtype=float)))
        object.__setattr__(self, "sds", np.atleast_2d(np.asarray(self.sds, dtype=float)))

    @property
    def n(self) -> int:
        return self.means.shape[1]

    def log_pdf(self, t: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(t)
        z = (t[:, None, :] - self.means[None]) / self.sds[None]
        comp = (-0.5 * np.sum(z * z, axis=2) - np.sum(np.log(self.sds), axis=1)[None]
                - 0.5 * self.n * math.log(2 * math.pi) + np.log(self.weights)[None])
        return _logsumexp_rows(comp)

    def moments(self, exps: np.ndarray) -> np.ndarray:
        return _mix_moments(self.weights, lambda c, d, m: normal_moment(m, self.means[c, d], self.sds[c, d]), exps)


@dataclass(frozen=True)
class GammaMixture:
    """Mixture of products of gamma densities on the nonnegative orthant."""

    weights: np.ndarray
    shapes: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_weights(self.weights))
        object.__setattr__(self, "shapes", np.atleast_2d(np.asarray(self.shapes, dtype=float)))
        object.__setattr__(self, "scales", np.atleast_2d(np.asarray(self.scales, dtype=float)))

    @property
    def n(self) -> int:
        return self.shapes.shape[1]

    def log_pdf(self, t: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(t)
        a, s = self.shapes[None], self.scales[None]
        x = t[:, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            comp = (a - 1) * np.log(x) - x / s - gammaln(a) - a * np.log(s)
        comp = np.where(x >= 0, comp, -np.inf)
        comp = np.where((x == 0) & (a == 1), -np.log(s) - gammaln(a), comp)
        total = np.sum(comp, axis=2) + np.log(self.weights)[None]
        return _logsumexp_rows(total)

    def moments(self, exps: np.ndarray) -> np.ndarray:
        def mom(c, d, m):
            a, s = self.shapes[c, d], self.scales[c, d]
            return math.exp(m * math.log(s) + gammaln(a + m) - gammaln(a))

        return _mix_moments(self.weights, mom, exps)


@dataclass(frozen=True)
class UniformMixture:
    """Mixture of uniform densities on boxes ``[lo_c, hi_c]``."""

    weights: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_weights(self.weights))
        object.__setattr__(self, "lo", np.atleast_2d(np.asarray(self.lo, dtype=float)))
        object.__setattr__(self, "hi", np.atleast_2d(np.asarray(self.hi, dtype=float)))
        if np.any(self.hi <= self.lo):
            raise ValueError("uniform components need positive side lengths")

    @property
    def n(self) -> int:
        return self.lo.shape[1]

    def log_pdf(self, t: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(t)
        inside = np.all((t[:, None, :] >= self.lo[None]) & (t[:, None, :] <= self.hi[None]), axis=2)
        logvol = np.sum(np.log(self.hi - self.lo), axis=1)
        with np.errstate(divide="ignore"):
            comp = np.where(inside, np.log(self.weights)[None] - logvol[None], -np.inf)
        return _logsumexp_rows(comp)

    def breakpoints(self) -> list[np.ndarray]:
        return [np.unique(np.concatenate([self.lo[:, d], self.hi[:, d]])) for d in range(self.n)]

    def moments(self, exps: np.ndarray) -> np.ndarray:
        def mom(c, d, m):
            a, b = self.lo[c, d], self.hi[c, d]
            return (b ** (m + 1) - a ** (m + 1)) / ((m + 1) * (b - a))

        return _mix_moments(self.weights, mom, exps)


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite sum of point masses (not a density: used for boundary-of-cone instances)."""

    weights: np.ndarray
    atoms: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_weights(self.weights))
        object.__setattr__(self, "atoms", np.atleast_2d(np.asarray(self.atoms, dtype=float)))

    def moments(self, exps: np.ndarray) -> np.ndarray:
        return _mix_moments(self.weights, lambda c, d, m: self.atoms[c, d] ** m, exps)
