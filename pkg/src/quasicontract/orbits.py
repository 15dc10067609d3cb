"""Orbit iteration for self-maps, bound-domination checks and fixed-point iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bounds import bound_closed_form
from .constraint import ContractionParams
from .metric import EUCLIDEAN, Metric, as_point, distance

__all__ = [
    "FixedPointResult",
    "NonConvergence",
    "OrbitRecord",
    "SelfMap",
    "Violation",
    "check_bound_domination",
    "empirical_entry_index",
    "fixed_point_iteration",
    "iterate_pair",
    "make_compliant_test_map",
]


@dataclass(frozen=True)
class SelfMap:
    """A map ``(point, step index) -> point``; must be deterministic."""

    apply: Callable[[np.ndarray, int], np.ndarray]
    descriptor: str = ""

    def __call__(self, x, k: int = 0) -> np.ndarray:
        return self.apply(x, k)


@dataclass(frozen=True)
class OrbitRecord:
    x_orbit: tuple[np.ndarray, ...]
    y_orbit: tuple[np.ndarray, ...]
    distances: np.ndarray
    metric: Metric = field(default=EUCLIDEAN)

    def __post_init__(self):
        if not (len(self.x_orbit) == len(self.y_orbit) == len(self.distances)):
            raise ValueError("orbit sequences must share one length")

    def __len__(self) -> int:
        return len(self.distances)

    def step_ratios(self) -> np.ndarray:
        """``d_{j+1} / d_j`` over steps with ``d_j > 0``."""
        ds = self.distances
        keep = ds[:-1] > 0
        return ds[1:][keep] / ds[:-1][keep]

    @classmethod
    def from_distances(cls, distances, metric: Metric = EUCLIDEAN) -> "OrbitRecord":
        """Record carrying distances only (orbits are placeholder zeros)."""
        ds = np.asarray(distances, dtype=float)
        z = tuple(np.zeros(1) for _ in ds)
        return cls(z, z, ds, metric)


def iterate_pair(
    map: SelfMap, x0, y0, n: int, metric: Metric = EUCLIDEAN, y_map: SelfMap | None = None
) -> OrbitRecord:
    """Iterate ``x0`` and ``y0`` for ``n`` steps and record their distances.

    ``y_map`` drives the second orbit when the two should see different
    realisations of a randomised map (defaults to ``map``).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    x = as_point(x0)
    y = as_point(y0)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    xs, ys = [x], [y]
    ds = [distance(x, y, metric)]
    for k in range(n):
        x = np.asarray(map(x, k), dtype=float)
        y = np.asarray((y_map or map)(y, k), dtype=float)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise FloatingPointError(f"map produced a non-finite state at step {k + 1}")
        xs.append(x)
        ys.append(y)
        ds.append(distance(x, y, metric))
    return OrbitRecord(tuple(xs), tuple(ys), np.array(ds), metric)


@dataclass(frozen=True)
class Violation:
    j: int
    observed: float
    bound: float


def check_bound_domination(
    rec: OrbitRecord, params: ContractionParams, tol: float = 1e-9
) -> list[Violation]:
    d0 = float(rec.distances[0])
    out = []
    for j, dj in enumerate(rec.distances):
        bound = bound_closed_form(j, d0, params)
        if dj > bound + tol:
            out.append(Violation(j, float(dj), bound))
    return out


def empirical_entry_index(rec: OrbitRecord, threshold: float) -> int | None:
    """First ``j`` from which every recorded distance stays ``<= threshold``.

    Only certifies up to the record's horizon. ``None`` when the last
    recorded distance is still above ``threshold``.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    ds = np.asarray(rec.distances)
    if ds.size == 0:
        raise ValueError("empty record")
    above = np.nonzero(ds > threshold)[0]
    if above.size == 0:
        return 0
    last = int(above[-1])
    return None if last == ds.size - 1 else last + 1


@dataclass(frozen=True)
class FixedPointResult:
    point: np.ndarray
    iterations: int
    residual: float


class NonConvergence(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"fixed-point iteration did not converge in {iterations} iterations "
            f"(last residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


def fixed_point_iteration(
    map: SelfMap,
    x0,
    metric: Metric = EUCLIDEAN,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> FixedPointResult:
    """Picard iteration ``x <- T x`` until ``d(x, T x) <= tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = as_point(x0)
    residual = math.inf
    for k in range(max_iter + 1):
        tx = np.asarray(map(x, k), dtype=float)
        if not np.all(np.isfinite(tx)):
            raise NonConvergence(k, math.inf)
        residual = distance(x, tx, metric)
        if residual <= tol:
            return FixedPointResult(point=x, iterations=k, residual=residual)
        x = tx
    raise NonConvergence(max_iter, residual)


_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _cell_hash(seed: int, cell: tuple[int, ...]) -> int:
    h = _splitmix64(seed & _MASK64)
    for c in cell:
        h = _splitmix64(h ^ (c & _MASK64))
    return h


def make_compliant_test_map(
    params: ContractionParams, dim: int, seed: int = 0, cell_size: float = 0.25
) -> SelfMap:
    """``T(x) = (1 - K) x + M u(x)`` with ``u`` piecewise constant on a lattice.

    ``u`` takes a seeded pseudo-random value in each lattice cell of width
    ``cell_size`` with ``||u||_1 <= 1/2``, hence ``||u(x) - u(y)|| <= 1`` in
    every p-norm with p >= 1, and ``T`` satisfies the ``(K, M)`` constraint
    under the 1-, 2- and inf-norm distances. ``u`` is deliberately
    discontinuous.
    """
    if not 0.0 < params.K < 1.0:
        raise ValueError(f"K must lie in (0, 1), got {params.K}")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    rho = 1.0 - params.K
    M = params.M
    cache: dict[tuple[int, ...], np.ndarray] = {}

    def u(x: np.ndarray) -> np.ndarray:
        cell = tuple(math.floor(v / cell_size) for v in x)
        val = cache.get(cell)
        if val is None:
            h = _cell_hash(seed, cell)
            raw = []
            for _ in range(dim + 1):
                h = _splitmix64(h)
                raw.append((h >> 11) / float(1 << 53))
            vec = np.array(raw[:dim]) * 2.0 - 1.0
            l1 = np.abs(vec).sum()
            scale = 0.5 * raw[dim] / l1 if l1 > 0 else 0.0
            val = vec * scale
            if len(cache) < 1 << 16:
                cache[cell] = val
        return val

    def apply(x, k=0):
        x = np.asarray(x, dtype=float)
        if M == 0:
            return rho * x
        return rho * x + M * u(x)

    return SelfMap(apply, descriptor=f"compliant(K={params.K}, M={M}, dim={dim}, seed={seed})")
