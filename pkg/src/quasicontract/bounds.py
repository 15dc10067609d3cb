"""Iterate distance bounds for maps obeying the (K, M) constraint.

With ``B_0 = d0`` and ``B_{j+1} = (1 - K) B_j + M`` every orbit pair satisfies
``d(T^j x, T^j y) <= B_j``, and in closed form

    B_j = (1 - K)^j d0 + (M / K) (1 - (1 - K)^j).

``B_j`` contracts towards the ultimate bound ``M / K`` by a factor ``1 - K``
per step, which gives the permanence index: the first step after which every
pair that started within distance ``R`` stays within ``M / K + eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constraint import ContractionParams

__all__ = [
    "BoundTrajectory",
    "PermanenceQuery",
    "bound_closed_form",
    "bound_recurrence",
    "bound_series",
    "permanence_index",
    "ultimate_bound",
    "uniform_iterate_bound",
]

SCAN_CAP = 10**6


def _require_open_unit_K(params: ContractionParams) -> None:
    if not 0.0 < params.K < 1.0:
        raise ValueError(f"K must lie in (0, 1), got {params.K!r}")


def _check_index(j) -> int:
    if int(j) != j or j < 0:
        raise ValueError(f"iterate index must be a non-negative integer, got {j!r}")
    return int(j)


def _decay(j: int, K: float) -> tuple[float, float]:
    """Return ``((1-K)^j, 1-(1-K)^j)``, each to a few ulps."""
    if K >= 0.5:
        q = (1.0 - K) ** j  # 1 - K is exact here
    else:
        q = math.exp(j * math.log1p(-K))
    if q <= 0.5:
        return q, 1.0 - q
    return q, -math.expm1(j * math.log1p(-K))


def bound_closed_form(j: int, d0: float, params: ContractionParams) -> float:
    _require_open_unit_K(params)
    j = _check_index(j)
    if d0 < 0:
        raise ValueError("d0 must be non-negative")
    q, one_minus_q = _decay(j, params.K)
    return q * d0 + (params.M / params.K) * one_minus_q


def bound_recurrence(j: int, d0: float, params: ContractionParams) -> float:
    _require_open_unit_K(params)
    j = _check_index(j)
    if d0 < 0:
        raise ValueError("d0 must be non-negative")
    K, M = params.K, params.M
    b = float(d0)
    for _ in range(j):
        # Written as B - K B + M: forming 1 - K first loses K's low bits when K is small.
        b = b - K * b + M
    return b


@dataclass(frozen=True)
class BoundTrajectory:
    d0: float
    params: ContractionParams
    values: tuple[float, ...]


def bound_series(n: int, d0: float, params: ContractionParams) -> BoundTrajectory:
    """Closed-form bounds ``B_0 .. B_n``."""
    vals = tuple(bound_closed_form(j, d0, params) for j in range(n + 1))
    return BoundTrajectory(d0=float(d0), params=params, values=vals)


def ultimate_bound(params: ContractionParams) -> float:
    """Limit of ``B_j`` as ``j -> inf``, i.e. ``M / K``.

    ``M == 0`` is the Banach case and returns 0.
    """
    if params.K == 0:
        raise ValueError("K = 0: iterate distances are not ultimately bounded by this constraint")
    _require_open_unit_K(params)
    return params.M / params.K


def uniform_iterate_bound(R: float, params: ContractionParams) -> float:
    """``R + M / K`` bounds every iterate distance of pairs starting within ``R``."""
    if params.K == 0:
        raise ValueError("K = 0: no uniform bound")
    _require_open_unit_K(params)
    if R < 0:
        raise ValueError("R must be non-negative")
    return R + params.M / params.K


@dataclass(frozen=True)
class PermanenceQuery:
    R: float
    epsilon: float
    params: ContractionParams

    def __post_init__(self):
        if not (math.isfinite(self.R) and self.R >= 0):
            raise ValueError(f"R must be finite and non-negative, got {self.R!r}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        _require_open_unit_K(self.params)


def permanence_index(q: PermanenceQuery) -> int:
    """Smallest ``j0`` with ``B_j(R) <= M/K + eps`` for all ``j >= j0``.

    Computed from the logarithmic closed form, snapped to the exact boundary
    of ``bound_closed_form`` and cross-checked against a scan of the
    recurrence (capped at ``SCAN_CAP`` steps).
    """
    p = q.params
    target = p.M / p.K + q.epsilon
    if q.R <= target:
        # B_j(R) is monotone towards M/K, so B_0 = R is its maximum here.
        return 0

    gap = q.R - p.M / p.K
    j0 = max(0, math.ceil(math.log(q.epsilon / gap) / math.log1p(-p.K)))
    if j0 > SCAN_CAP:
        raise ValueError(f"permanence index {j0} exceeds scan cap {SCAN_CAP}; epsilon too small")
    while j0 > 0 and bound_closed_form(j0 - 1, q.R, p) <= target:
        j0 -= 1
    while bound_closed_form(j0, q.R, p) > target:
        j0 += 1
        if j0 > SCAN_CAP:
            raise ValueError(f"permanence scan exceeded cap {SCAN_CAP}")

    j_scan = _scan_recurrence(q.R, p, target)
    if abs(j_scan - j0) > 1:
        raise RuntimeError(
            f"permanence index mismatch: closed form {j0}, recurrence scan {j_scan}"
        )
    return j0


def _scan_recurrence(R: float, p: ContractionParams, target: float) -> int:
    b = float(R)
    for j in range(SCAN_CAP + 1):
        if b <= target:
            return j
        b = b - p.K * b + p.M
    raise ValueError(f"permanence scan exceeded cap {SCAN_CAP}")

