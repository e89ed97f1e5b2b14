"""Domain model: multi-indices, regular index sets, moment vectors, supports and weights."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

MultiIndex = tuple[int, ...]


class IndexSetError(ValueError):
    """Base class for index-set validation failures."""


class MissingZeroIndex(IndexSetError):
    pass


class NotRegular(IndexSetError):
    def __init__(self, index: MultiIndex, missing: MultiIndex):
        self.index = index
        self.missing = missing
        super().__init__(f"index set is not regular: sigma({index}) contains {missing}, which is not in I")


class OddMaxDegree(IndexSetError):
    pass


class MissingTopDiagonal(IndexSetError):
    def __init__(self, axis: int, index: MultiIndex):
        self.axis = axis
        self.index = index
        super().__init__(f"top diagonal index {index} (2k e_{axis + 1}) is missing")


class IndexOutOfSpan(ValueError):
    pass


class SupportError(ValueError):
    pass


class WeightError(ValueError):
    pass


def order(i: MultiIndex) -> int:
    return sum(i)


def unit(n: int, axis: int, scale: int = 1) -> MultiIndex:
    return tuple(scale if d == axis else 0 for d in range(n))


def grlex_key(i: MultiIndex):
    """Graded-lexicographic sort key: by total degree, then larger leading exponents first."""
    return (order(i), tuple(-e for e in i))


def sigma(i: Sequence[int]) -> set[MultiIndex]:
    """All multi-indices obtained from ``i`` by zeroing any subset of its entries."""
    choices = [(0, e) if e else (0,) for e in i]
    return set(itertools.product(*choices))


@dataclass(frozen=True)
class IndexSet:
    """A validated finite regular index set, stored in grlex order.

    Build these through :func:`validate_index_set`; the constructor does not re-check.
    """

    n: int
    indices: tuple[MultiIndex, ...]
    k: int

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i) -> bool:
        return tuple(i) in self.position

    @cached_property
    def position(self) -> dict[MultiIndex, int]:
        return {i: p for p, i in enumerate(self.indices)}

    @cached_property
    def exponents(self) -> np.ndarray:
        return np.array(self.indices, dtype=int).reshape(len(self.indices), self.n)

    @cached_property
    def orders(self) -> np.ndarray:
        return self.exponents.sum(axis=1)

    @cached_property
    def zero(self) -> int:
        return self.position[(0,) * self.n]

    @cached_property
    def top_diagonal(self) -> tuple[int, ...]:
        """Positions of 2k e_iota for iota = 1..n."""
        return tuple(self.position[unit(self.n, d, 2 * self.k)] for d in range(self.n))

    @cached_property
    def top_block(self) -> np.ndarray:
        """Positions of all indices with |i| = 2k."""
        return np.flatnonzero(self.orders == 2 * self.k)

    @cached_property
    def sum_indices(self) -> tuple[MultiIndex, ...]:
        """Minkowski sum I + I in grlex order (orders needed by the Hessian)."""
        sums = {tuple(a + b for a, b in zip(i, j)) for i in self.indices for j in self.indices}
        return tuple(sorted(sums, key=grlex_key))

    @cached_property
    def sum_table(self) -> np.ndarray:
        """``sum_table[a, b]`` is the position of ``I[a] + I[b]`` in :attr:`sum_indices`."""
        pos = {i: p for p, i in enumerate(self.sum_indices)}
        N = len(self.indices)
        table = np.empty((N, N), dtype=int)
        for a, i in enumerate(self.indices):
            for b, j in enumerate(self.indices):
                table[a, b] = pos[tuple(x + y for x, y in zip(i, j))]
        return table

    @cached_property
    def sum_exponents(self) -> np.ndarray:
        return np.array(self.sum_indices, dtype=int).reshape(len(self.sum_indices), self.n)

    @cached_property
    def sum_positions_of_I(self) -> np.ndarray:
        pos = {i: p for p, i in enumerate(self.sum_indices)}
        return np.array([pos[i] for i in self.indices], dtype=int)

    @classmethod
    def full(cls, n: int, k: int) -> "IndexSet":
        """The full set {i : |i| <= 2k}."""
        idx = [i for i in itertools.product(range(2 * k + 1), repeat=n) if sum(i) <= 2 * k]
        return validate_index_set(idx)


def validate_index_set(indices: Iterable[Sequence[int]]) -> IndexSet:
    idx = [tuple(int(e) for e in i) for i in indices]
    if not idx:
        raise IndexSetError("index set is empty")
    n = len(idx[0])
    if n < 1:
        raise IndexSetError("dimension must be at least 1")
    for i in idx:
        if len(i) != n:
            raise IndexSetError(f"index {i} has dimension {len(i)}, expected {n}")
        if any(e < 0 for e in i):
            raise IndexSetError(f"index {i} has a negative entry")
    if len(set(idx)) != len(idx):
        raise IndexSetError("index set contains duplicates")
    present = set(idx)
    if (0,) * n not in present:
        raise MissingZeroIndex("index set must contain the zero index")
    for i in sorted(idx, key=grlex_key):
        for j in sorted(sigma(i), key=grlex_key):
            if j not in present:
                raise NotRegular(i, j)
    top = max(order(i) for i in idx)
    if top % 2 or top == 0:
        raise OddMaxDegree(f"maximal order {top} must be even and positive")
    k = top // 2
    for d in range(n):
        diag = unit(n, d, 2 * k)
        if diag not in present:
            raise MissingTopDiagonal(d, diag)
    return IndexSet(n=n, indices=tuple(sorted(idx, key=grlex_key)), k=k)


def monomials(exponents: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate t^i for each row of ``exponents`` at each row of ``t``; shape (len(t), len(exponents))."""
    t = np.atleast_2d(np.asarray(t, dtype=float))
    exponents = np.asarray(exponents, dtype=int)
    out = np.ones((t.shape[0], exponents.shape[0]))
    for d in range(exponents.shape[1]):
        e = exponents[:, d]
        top = int(e.max()) if e.size else 0
        if top == 0:
            continue
        powers = np.empty((t.shape[0], top + 1))
        powers[:, 0] = 1.0
        for j in range(1, top + 1):
            powers[:, j] = powers[:, j - 1] * t[:, d]
        out *= powers[:, e]
    return out


@dataclass(frozen=True)
class Polynomial:
    """A real polynomial given by its monomial coefficients."""

    n: int
    terms: Mapping[MultiIndex, float]

    @classmethod
    def from_vector(cls, index_set: IndexSet, coeffs) -> "Polynomial":
        coeffs = np.asarray(coeffs, dtype=float)
        return cls(index_set.n, {i: float(c) for i, c in zip(index_set.indices, coeffs) if c != 0.0})

    def to_vector(self, index_set: IndexSet) -> np.ndarray:
        out = np.zeros(len(index_set))
        for i, c in self.terms.items():
            if c == 0.0:
                continue
            if i not in index_set.position:
                raise IndexOutOfSpan(f"coefficient of X^{i} lies outside the span P_I")
            out[index_set.position[i]] = c
        return out

    def __call__(self, t) -> np.ndarray | float:
        return polynomial_eval(self, t)

    def max_norm(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        terms = dict(self.terms)
        for i, c in other.terms.items():
            terms[i] = terms.get(i, 0.0) + c
        return Polynomial(self.n, terms)

    def __mul__(self, s: float) -> "Polynomial":
        return Polynomial(self.n, {i: s * c for i, c in self.terms.items()})

    __rmul__ = __mul__

    def __str__(self) -> str:
        parts = []
        for i in sorted(self.terms, key=grlex_key):
            c = self.terms[i]
            if c == 0.0:
                continue
            mono = "*".join(f"X{d + 1}" if e == 1 else f"X{d + 1}^{e}" for d, e in enumerate(i) if e)
            if self.n == 1:
                mono = mono.replace("X1", "X")
            parts.append(f"{c:+.6g}" + (f"*{mono}" if mono else ""))
        return " ".join(parts) if parts else "0"


def polynomial_eval(p: Polynomial, t) -> np.ndarray | float:
    """Evaluate ``p`` at one point (returns float) or at rows of a 2-D array."""
    arr = np.asarray(t, dtype=float)
    single = arr.ndim <= 1
    pts = arr.reshape(1, -1) if single else arr
    if pts.shape[1] != p.n:
        raise ValueError(f"point dimension {pts.shape[1]} does not match polynomial dimension {p.n}")
    if not p.terms:
        vals = np.zeros(pts.shape[0])
    else:
        exps = np.array(list(p.terms.keys()), dtype=int).reshape(len(p.terms), p.n)
        coeffs = np.array(list(p.terms.values()))
        vals = monomials(exps, pts) @ coeffs
    return float(vals[0]) if single else vals


@dataclass(frozen=True)
class MomentSpec:
    """Target moments g over an index set, aligned with its grlex order."""

    index_set: IndexSet
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.shape[0] != len(self.index_set):
            raise ValueError(f"expected {len(self.index_set)} moments, got {v.shape[0]}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_mapping(cls, index_set: IndexSet, values: Mapping[Sequence[int], float], normalized=True) -> "MomentSpec":
        vals = {tuple(i): float(v) for i, v in values.items()}
        if set(vals) != set(index_set.indices):
            raise ValueError("moment keys must equal the index set exactly")
        spec = cls(index_set, np.array([vals[i] for i in index_set.indices]))
        if normalized:
            spec.check_normalized()
        return spec

    def __eq__(self, other) -> bool:
        if not isinstance(other, MomentSpec):
            return NotImplemented
        return self.index_set == other.index_set and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.index_set, self.values.tobytes()))

    def check_normalized(self, tol: float = 0.0):
        g0 = self.values[self.index_set.zero]
        if abs(g0 - 1.0) > tol:
            raise ValueError(f"g_0 must equal 1, got {g0!r}")

    def __getitem__(self, i: Sequence[int]) -> float:
        return float(self.values[self.index_set.position[tuple(i)]])

    def as_dict(self) -> dict[MultiIndex, float]:
        return dict(zip(self.index_set.indices, self.values.tolist()))


def riesz_apply(g: MomentSpec, p: Polynomial) -> float:
    """phi_g(p) = sum_i coeff_i(p) g_i."""
    return float(p.to_vector(g.index_set) @ g.values)


# --------------------------------------------------------------------------- supports

SUPPORT_KINDS = ("full", "orthant", "box", "ball", "halfspaces")


@dataclass(frozen=True)
class SupportRegion:
    """A closed, full-dimensional (hence regular) support region.

    ``halfspaces`` means ``{t : normals @ t <= offsets}``.
    """

    kind: str
    n: int
    lo: tuple[float, ...] | None = None
    hi: tuple[float, ...] | None = None
    radius: float | None = None
    center: tuple[float, ...] | None = None
    normals: tuple[tuple[float, ...], ...] | None = None
    offsets: tuple[float, ...] | None = None

    @classmethod
    def full(cls, n: int) -> "SupportRegion":
        return cls("full", n)

    @classmethod
    def orthant(cls, n: int) -> "SupportRegion":
        return cls("orthant", n)

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "SupportRegion":
        lo, hi = tuple(map(float, lo)), tuple(map(float, hi))
        if len(lo) != len(hi) or not lo:
            raise SupportError("box bounds must be nonempty and of equal length")
        if not all(h > l for l, h in zip(lo, hi)):
            raise SupportError("box side lengths must be strictly positive")
        if not all(math.isfinite(x) for x in lo + hi):
            raise SupportError("box bounds must be finite")
        return cls("box", len(lo), lo=lo, hi=hi)

    @classmethod
    def ball(cls, radius: float, center: Sequence[float]) -> "SupportRegion":
        center = tuple(map(float, center))
        if not radius > 0:
            raise SupportError("ball radius must be strictly positive")
        return cls("ball", len(center), radius=float(radius), center=center)

    @classmethod
    def halfspaces(cls, normals, offsets) -> "SupportRegion":
        A = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.asarray(offsets, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0] or A.shape[0] == 0:
            raise SupportError("need one offset per half-space normal")
        if np.any(np.linalg.norm(A, axis=1) == 0):
            raise SupportError("half-space normals must be nonzero")
        region = cls("halfspaces", A.shape[1], normals=tuple(map(tuple, A.tolist())), offsets=tuple(b.tolist()))
        if region._chebyshev_radius() <= 1e-12:
            raise SupportError("half-space intersection has no interior point")
        return region

    def _chebyshev_radius(self) -> float:
        from scipy.optimize import linprog

        A = np.asarray(self.normals)
        b = np.asarray(self.offsets)
        norms = np.linalg.norm(A, axis=1)
        # maximize r s.t. A x + r |a| <= b, 0 <= r <= 1
        c = np.zeros(self.n + 1)
        c[-1] = -1.0
        res = linprog(c, A_ub=np.hstack([A, norms[:, None]]), b_ub=b,
                      bounds=[(None, None)] * self.n + [(0, 1)], method="highs")
        return float(res.x[-1]) if res.status == 0 else 0.0

    @property
    def bounded(self) -> bool:
        if self.kind in ("box", "ball"):
            return True
        if self.kind == "halfspaces":
            return self.bounding_box() is not None
        return False

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray] | None:
        if self.kind == "box":
            return np.array(self.lo), np.array(self.hi)
        if self.kind == "ball":
            c = np.array(self.center)
            return c - self.radius, c + self.radius
        if self.kind == "halfspaces":
            from scipy.optimize import linprog

            A, b = np.asarray(self.normals), np.asarray(self.offsets)
            lo, hi = np.empty(self.n), np.empty(self.n)
            for d in range(self.n):
                for sgn, out in ((1.0, lo), (-1.0, hi)):
                    c = np.zeros(self.n)
                    c[d] = sgn
                    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * self.n, method="highs")
                    if res.status != 0:
                        return None
                    out[d] = sgn * res.fun
            return lo, hi
        return None

    def contains(self, t) -> np.ndarray | bool:
        """Exact closed-set membership; vectorized over rows of a 2-D array."""
        arr = np.asarray(t, dtype=float)
        single = arr.ndim <= 1
        pts = arr.reshape(1, -1) if single else arr
        if pts.shape[1] != self.n:
            raise ValueError("point dimension mismatch")
        if self.kind == "full":
            out = np.ones(pts.shape[0], dtype=bool)
        elif self.kind == "orthant":
            out = np.all(pts >= 0, axis=1)
        elif self.kind == "box":
            out = np.all((pts >= np.array(self.lo)) & (pts <= np.array(self.hi)), axis=1)
        elif self.kind == "ball":
            out = np.sum((pts - np.array(self.center)) ** 2, axis=1) <= self.radius ** 2
        else:
            out = np.all(pts @ np.asarray(self.normals).T <= np.asarray(self.offsets), axis=1)
        return bool(out[0]) if single else out

    def recession_contains(self, theta: np.ndarray) -> np.ndarray:
        """Which directions (rows) are recession directions, i.e. r*theta stays in T for large r."""
        theta = np.atleast_2d(theta)
        if self.kind == "full":
            return np.ones(theta.shape[0], dtype=bool)
        if self.kind == "orthant":
            return np.all(theta >= 0, axis=1)
        if self.kind in ("box", "ball"):
            return np.zeros(theta.shape[0], dtype=bool)
        if self.bounded:
            return np.zeros(theta.shape[0], dtype=bool)
        return np.all(theta @ np.asarray(self.normals).T <= 1e-12, axis=1)

    def to_json(self) -> dict:
        if self.kind in ("full", "orthant"):
            return {"kind": self.kind}
        if self.kind == "box":
            return {"kind": "box", "lo": list(self.lo), "hi": list(self.hi)}
        if self.kind == "ball":
            return {"kind": "ball", "radius": self.radius, "center": list(self.center)}
        return {"kind": "halfspaces", "normals": [list(a) for a in self.normals], "offsets": list(self.offsets)}

    @classmethod
    def from_json(cls, obj: Mapping, n: int) -> "SupportRegion":
        kind = obj.get("kind")
        if kind == "full":
            return cls.full(n)
        if kind == "orthant":
            return cls.orthant(n)
        if kind == "box":
            region = cls.box(obj["lo"], obj["hi"])
        elif kind == "ball":
            region = cls.ball(obj["radius"], obj.get("center", [0.0] * n))
        elif kind == "halfspaces":
            region = cls.halfspaces(obj["normals"], obj["offsets"])
        else:
            raise SupportError(f"unknown support kind {kind!r}; expected one of {SUPPORT_KINDS}")
        if region.n != n:
            raise SupportError(f"support dimension {region.n} does not match n={n}")
        return region


def support_contains(T: SupportRegion, t) -> np.ndarray | bool:
    return T.contains(t)


# --------------------------------------------------------------------------- weights

WEIGHT_KINDS = ("norm_power", "coord_power", "constant")


@dataclass(frozen=True)
class ReferenceWeight:
    """Reference density rho on T.

    ``norm_power``: exp(-||t||^p); ``coord_power``: exp(-sum |t_d / s_d|^p);
    ``constant``: 1 (bounded supports only). ``p = None`` means "use 2k of the instance".
    """

    kind: str
    p: float | None = None
    scale: tuple[float, ...] | None = None

    @classmethod
    def norm_power(cls, p: float | None = None) -> "ReferenceWeight":
        return cls("norm_power", p=p)

    @classmethod
    def coord_power(cls, p: float, scale: Sequence[float] | None = None) -> "ReferenceWeight":
        if scale is not None and not all(s > 0 for s in scale):
            raise WeightError("coordinate scales must be positive")
        return cls("coord_power", p=float(p), scale=None if scale is None else tuple(map(float, scale)))

    @classmethod
    def constant(cls) -> "ReferenceWeight":
        return cls("constant")

    def power(self, k: int) -> float:
        return float(2 * k if self.p is None else self.p)

    def scales(self, n: int) -> np.ndarray:
        return np.ones(n) if self.scale is None else np.asarray(self.scale)

    def log_density(self, t: np.ndarray, k: int) -> np.ndarray:
        t = np.atleast_2d(t)
        if self.kind == "constant":
            return np.zeros(t.shape[0])
        p = self.power(k)
        if self.kind == "norm_power":
            r2 = np.sum(t * t, axis=1)
            return -(r2 ** (p / 2.0))
        return -np.sum(np.abs(t / self.scales(t.shape[1])) ** p, axis=1)

    def polynomial_log(self, n: int, k: int) -> dict[MultiIndex, float] | None:
        """log rho as polynomial coefficients when it is one (even integer powers), else None."""
        if self.kind == "constant":
            return {}
        p = self.power(k)
        if p != int(p) or int(p) % 2:
            return None
        m = int(p) // 2
        if self.kind == "coord_power":
            s = self.scales(n)
            return {unit(n, d, 2 * m): -float(s[d]) ** (-2 * m) for d in range(n)}
        out: dict[MultiIndex, float] = {}
        for combo in itertools.product(range(m + 1), repeat=n):
            if sum(combo) != m:
                continue
            coef = math.factorial(m)
            for c in combo:
                coef //= math.factorial(c)
            out[tuple(2 * c for c in combo)] = -float(coef)
        return out

    def leading_decay(self, theta: np.ndarray, k: int) -> np.ndarray:
        """Coefficient of r^{2k} in -log rho(r theta) on unit directions; +inf when rho decays faster."""
        theta = np.atleast_2d(theta)
        if self.kind == "constant":
            return np.zeros(theta.shape[0])
        p = self.power(k)
        if p > 2 * k:
            return np.full(theta.shape[0], np.inf)
        if p < 2 * k:
            return np.zeros(theta.shape[0])
        if self.kind == "norm_power":
            return np.ones(theta.shape[0])
        return np.sum(np.abs(theta / self.scales(theta.shape[1])) ** p, axis=1)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.p is not None:
            out["p"] = self.p
        if self.scale is not None:
            out["scale"] = list(self.scale)
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "ReferenceWeight":
        kind = obj.get("kind")
        if kind == "norm_power":
            return cls.norm_power(obj.get("p"))
        if kind == "coord_power":
            return cls.coord_power(obj["p"], obj.get("scale"))
        if kind == "constant":
            return cls.constant()
        raise WeightError(f"unknown weight kind {kind!r}; expected one of {WEIGHT_KINDS}")


# --------------------------------------------------------------------------- instance


@dataclass(frozen=True)
class Tolerances:
    quad_rel: float = 1e-10
    grad: float = 1e-7
    max_iter: int = 300


@dataclass(frozen=True)
class ProblemInstance:
    index_set: IndexSet
    moments: MomentSpec
    support: SupportRegion
    weight: ReferenceWeight
    tol: Tolerances = Tolerances()

    def __post_init__(self):
        n, k = self.index_set.n, self.index_set.k
        if self.moments.index_set != self.index_set:
            raise ValueError("moments are indexed by a different index set")
        self.moments.check_normalized()
        if self.support.n != n:
            raise ValueError(f"support dimension {self.support.n} does not match n={n}")
        if self.weight.scale is not None and len(self.weight.scale) != n:
            raise WeightError("weight scale length does not match n")
        if not self.support.bounded:
            if self.weight.kind == "constant":
                raise WeightError("constant weight requires a bounded support")
            if self.weight.power(k) < 2 * k:
                raise WeightError(f"weight power {self.weight.power(k)} below 2k={2 * k} on an unbounded support")

    @property
    def n(self) -> int:
        return self.index_set.n

    @property
    def k(self) -> int:
        return self.index_set.k

    @property
    def g(self) -> np.ndarray:
        return self.moments.values

    @cached_property
    def weight_coefficients(self) -> np.ndarray | None:
        """log rho as a coefficient vector over I, when it is a polynomial supported in I."""
        poly = self.weight.polynomial_log(self.n, self.k)
        if poly is None or any(i not in self.index_set.position for i in poly):
            return None
        out = np.zeros(len(self.index_set))
        for i, c in poly.items():
            out[self.index_set.position[i]] += c
        return out

    def with_moments(self, values) -> "ProblemInstance":
        return ProblemInstance(self.index_set, MomentSpec(self.index_set, values), self.support, self.weight, self.tol)

    def with_tol(self, **kw) -> "ProblemInstance":
        from dataclasses import replace

        return replace(self, tol=replace(self.tol, **kw))

    def initial_point(self) -> np.ndarray:
        lam = np.zeros(len(self.index_set))
        lam[list(self.index_set.top_diagonal)] = -1.0
        return lam
