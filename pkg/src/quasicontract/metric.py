"""Points, distances and sampled metric-axiom checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "AxiomReport",
    "AxiomViolation",
    "Metric",
    "as_point",
    "check_metric_axioms",
    "distance",
]


def as_point(coords) -> np.ndarray:
    """Validate ``coords`` and return it as a 1-D float64 array.

    Raises ``ValueError`` for empty input, non-1-D shapes or non-finite entries.
    """
    p = np.asarray(coords, dtype=np.float64)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"point must be a non-empty 1-D sequence, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point has non-finite coordinates: {p!r}")
    return p


@dataclass(frozen=True)
class Metric:
    """A distance on R^n: a p-norm (p in {1, 2, inf}) or a user callable.

    >>> Metric.norm(2)((0, 0), (3, 4))
    5.0
    """

    p: float | None = 2.0
    func: Callable[[np.ndarray, np.ndarray], float] | None = field(default=None, compare=False)
    name: str = ""

    def __post_init__(self):
        if self.func is None:
            if self.p not in (1.0, 2.0, math.inf):
                raise ValueError(f"p-norm metric supports p in {{1, 2, inf}}, got {self.p!r}")
        elif self.p is not None:
            raise ValueError("a user-supplied metric must not also set p")

    @classmethod
    def norm(cls, p: float | str = 2) -> "Metric":
        if isinstance(p, str):
            key = p.strip().lower()
            if key in ("inf", "infinity"):
                p = math.inf
            elif key in ("1", "2"):
                p = float(key)
            else:
                raise ValueError(f"unknown norm {p!r}")
        return cls(p=float(p), name=f"{p}-norm")

    @classmethod
    def custom(cls, func: Callable, name: str = "custom") -> "Metric":
        return cls(p=None, func=func, name=name)

    @property
    def is_norm(self) -> bool:
        return self.func is None

    def __call__(self, p, q) -> float:
        return distance(p, q, self)


EUCLIDEAN = Metric.norm(2)


def distance(p, q, m: Metric = EUCLIDEAN) -> float:
    """Distance between two points under ``m``.

    For p-norms the result is built from ``|p_i - q_i|`` and is therefore
    bitwise symmetric.
    """
    p = as_point(p)
    q = as_point(q)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.size} vs {q.size}")
    if m.func is not None:
        d = float(m.func(p, q))
        if not math.isfinite(d):
            raise ValueError(f"user metric returned non-finite value {d!r}")
        return d
    gaps = np.abs(p - q)
    if m.p == 1.0:
        return float(gaps.sum())
    if m.p == math.inf:
        return float(gaps.max())
    return float(np.sqrt(np.dot(gaps, gaps)))


@dataclass(frozen=True)
class AxiomViolation:
    axiom: str  # "nonnegativity" | "identity" | "symmetry" | "triangle"
    indices: tuple[int, ...]
    excess: float


@dataclass(frozen=True)
class AxiomReport:
    n_points: int
    violations: tuple[AxiomViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def of_kind(self, axiom: str) -> list[AxiomViolation]:
        return [v for v in self.violations if v.axiom == axiom]


def check_metric_axioms(points: Sequence, m: Metric, tol: float = 1e-9) -> AxiomReport:
    """Check the metric axioms of ``m`` over every pair and triple of ``points``.

    Triangle violations are reported for the ordered triple ``(i, j, k)`` when
    ``d(i, k) > d(i, j) + d(j, k) + tol``.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    pts = [as_point(p) for p in points]
    n = len(pts)
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")

    D = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            D[i, j] = distance(pts[i], pts[j], m)

    found: list[AxiomViolation] = []
    for i in range(n):
        if abs(D[i, i]) > tol:
            found.append(AxiomViolation("identity", (i,), abs(D[i, i])))
    for i, j in itertools.combinations(range(n), 2):
        for a, b in ((i, j), (j, i)):
            if D[a, b] < -tol:
                found.append(AxiomViolation("nonnegativity", (a, b), -D[a, b]))
        if abs(D[i, j] - D[j, i]) > tol:
            found.append(AxiomViolation("symmetry", (i, j), abs(D[i, j] - D[j, i])))
    for i, j, k in itertools.permutations(range(n), 3):
        excess = D[i, k] - (D[i, j] + D[j, k])
        if excess > tol:
            found.append(AxiomViolation("triangle", (i, j, k), float(excess)))
    return AxiomReport(n_points=n, violations=tuple(found))
