"""Instance files, solve reports and density CSV output."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core import (
    IndexSetError,
    MomentSpec,
    ProblemInstance,
    ReferenceWeight,
    SupportError,
    SupportRegion,
    Tolerances,
    WeightError,
    validate_index_set,
)


class InstanceParseError(ValueError):
    """Malformed instance file; ``field`` names the offending entry, ``position`` locates it."""

    def __init__(self, field: str, message: str, position: str | None = None):
        self.field = field
        self.position = position
        where = f" at {position}" if position else ""
        super().__init__(f"field '{field}'{where}: {message}")


def instance_to_json(instance: ProblemInstance) -> dict:
    """Plain-JSON form of an instance; floats survive a dump/load unchanged."""
    idx = instance.index_set
    return {
        "n": idx.n,
        "indices": [list(i) for i in idx.indices],
        "g": [float(v) for v in instance.g],
        "support": instance.support.to_json(),
        "rho": instance.weight.to_json(),
        "tol": {"quad_rel": instance.tol.quad_rel, "grad": instance.tol.grad, "max_iter": instance.tol.max_iter},
    }


def write_instance(instance: ProblemInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_json(instance), indent=2) + "\n", encoding="utf-8")


def _require(obj: dict, key: str):
    if key not in obj:
        raise InstanceParseError(key, "missing")
    return obj[key]


def _real(value, field: str, position: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceParseError(field, f"expected a real number, got {value!r}", position)
    out = float(value)
    if not math.isfinite(out):
        raise InstanceParseError(field, "value must be finite", position)
    return out


def instance_from_json(obj) -> ProblemInstance:
    if not isinstance(obj, dict):
        raise InstanceParseError("<root>", "expected a JSON object")
    n = _require(obj, "n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InstanceParseError("n", f"expected a positive integer, got {n!r}")

    raw_idx = _require(obj, "indices")
    if not isinstance(raw_idx, list) or not raw_idx:
        raise InstanceParseError("indices", "expected a nonempty list of integer lists")
    indices = []
    for pos, entry in enumerate(raw_idx):
        ok = isinstance(entry, list) and len(entry) == n
        ok = ok and all(isinstance(e, int) and not isinstance(e, bool) and e >= 0 for e in entry)
        if not ok:
            raise InstanceParseError("indices", f"expected {n} nonnegative integers, got {entry!r}", f"indices[{pos}]")
        indices.append(tuple(entry))
    if len(set(indices)) != len(indices):
        dup = next(i for i, e in enumerate(indices) if indices.index(e) != i)
        raise InstanceParseError("indices", f"duplicate multi-index {list(indices[dup])}", f"indices[{dup}]")
    try:
        index_set = validate_index_set(indices)
    except IndexSetError as exc:
        raise InstanceParseError("indices", str(exc)) from exc

    raw_g = _require(obj, "g")
    if not isinstance(raw_g, list) or len(raw_g) != len(indices):
        raise InstanceParseError("g", f"expected a list of {len(indices)} reals aligned with indices")
    g = [_real(v, "g", f"g[{pos}]") for pos, v in enumerate(raw_g)]
    try:
        moments = MomentSpec.from_mapping(index_set, dict(zip(indices, g)))
    except ValueError as exc:
        raise InstanceParseError("g", str(exc), f"g[{indices.index(index_set.indices[index_set.zero])}]") from exc

    raw_support = _require(obj, "support")
    if not isinstance(raw_support, dict):
        raise InstanceParseError("support", "expected a tagged object such as {\"kind\": \"full\"}")
    try:
        support = SupportRegion.from_json(raw_support, n)
    except (SupportError, KeyError, TypeError, ValueError) as exc:
        raise InstanceParseError("support", str(exc)) from exc

    raw_rho = obj.get("rho", {"kind": "norm_power"})
    if not isinstance(raw_rho, dict):
        raise InstanceParseError("rho", "expected a tagged object such as {\"kind\": \"norm_power\"}")
    try:
        weight = ReferenceWeight.from_json(raw_rho)
    except (WeightError, KeyError, TypeError, ValueError) as exc:
        raise InstanceParseError("rho", str(exc)) from exc

    raw_tol = obj.get("tol", {})
    if not isinstance(raw_tol, dict):
        raise InstanceParseError("tol", "expected an object with quad_rel, grad, max_iter")
    default = Tolerances()
    quad_rel = _real(raw_tol.get("quad_rel", default.quad_rel), "tol.quad_rel", "tol.quad_rel")
    grad = _real(raw_tol.get("grad", default.grad), "tol.grad", "tol.grad")
    max_iter = raw_tol.get("max_iter", default.max_iter)
    if isinstance(max_iter, bool) or not isinstance(max_iter, int) or max_iter < 1:
        raise InstanceParseError("tol.max_iter", f"expected a positive integer, got {max_iter!r}", "tol.max_iter")
    if quad_rel <= 0 or grad <= 0:
        raise InstanceParseError("tol", "tolerances must be positive")

    try:
        return ProblemInstance(index_set, moments, support, weight, Tolerances(quad_rel, grad, max_iter))
    except ValueError as exc:
        raise InstanceParseError("rho", str(exc)) from exc


def parse_instance(text: str) -> ProblemInstance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError("<json>", exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    return instance_from_json(obj)


def read_instance(path) -> ProblemInstance:
    return parse_instance(Path(path).read_text(encoding="utf-8"))


def write_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, default=_json_default) + "\n", encoding="utf-8")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_density_csv(samples, n: int, path) -> None:
    """Rows of (t_1..t_n, f*) as produced by reconstruct_density."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"t{d + 1}" for d in range(n)] + ["f"])
        for t, f in samples:
            w.writerow([repr(float(x)) for x in t] + [repr(float(f))])


def density_grid(instance: ProblemInstance, count: int, radius: float = 4.0) -> np.ndarray:
    """Tensor grid with ``count`` points per axis over the support, clipped to [-radius, radius] per axis."""
    box = instance.support.bounding_box()
    lo, hi = box if box is not None else (np.full(instance.n, -np.inf), np.full(instance.n, np.inf))
    if instance.support.kind == "orthant":
        lo = np.zeros(instance.n)
    axes = []
    for d in range(instance.n):
        a = max(lo[d], -radius)
        b = min(hi[d], radius)
        axes.append(np.linspace(a, b, count))
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return pts[instance.support.contains(pts)]
