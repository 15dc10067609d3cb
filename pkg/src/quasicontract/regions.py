"""Two-sided band constraint

    K1 d(x, y) <= d(Tx, Ty) <= min((1 - K) d(x, y) + M, K2 d(x, y))

Closed-form distance ranges on which the band is consistent, the derived
radii, the classification verdict over (K, K1, K2), and a brute-force
feasibility scan over candidate image distances used to cross-check them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BandParams",
    "BandVerdict",
    "FeasibilityRecord",
    "RegionReport",
    "UnclassifiedBand",
    "band_envelope",
    "corollary_verdict",
    "disjointness_check",
    "feasibility_oracle",
    "feasibility_scan",
    "interval_for_36",
    "interval_for_37",
    "oracle_mismatches",
    "region_report",
    "xei_radius",
    "xhat_threshold",
]


@dataclass(frozen=True)
class BandParams:
    """Band constants. ``relaxed=True`` admits ``K1 <= max(1 - K, 0)``, which is
    only meaningful for :func:`corollary_verdict`."""

    K: float
    M: float
    K1: float
    K2: float
    relaxed: bool = False

    def __post_init__(self):
        for name in ("K", "M", "K1", "K2"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if not 0.0 <= self.K < 1.0:
            raise ValueError(f"K must lie in [0, 1), got {self.K}")
        if self.M <= 0:
            raise ValueError(f"M must be positive, got {self.M}")
        if self.K1 < 0:
            raise ValueError(f"K1 must be non-negative, got {self.K1}")
        if self.K2 < self.K1:
            raise ValueError(f"K2 must be >= K1, got K1={self.K1}, K2={self.K2}")
        if not self.relaxed and not self.K1 > max(1.0 - self.K, 0.0):
            raise ValueError(
                f"K1 must exceed max(1 - K, 0) = {max(1.0 - self.K, 0.0)}, got {self.K1}"
            )


def _den(K: float, slope: float) -> float:
    # K + (slope - 1): exact when slope == 1, so M/K and M/den compare cleanly.
    return K + (slope - 1.0)


def _require_den(b: BandParams, slope: float, label: str) -> float:
    den = _den(b.K, slope)
    if den <= 0:
        raise ValueError(f"band slopes incompatible with K: K + {label} - 1 = {den} <= 0")
    return den


def interval_for_36(b: BandParams) -> tuple[float, float]:
    """Distances where ``K1 d <= dT <= (1-K) d + M <= K2 d`` can hold."""
    d1 = _require_den(b, b.K1, "K1")
    d2 = _require_den(b, b.K2, "K2")
    return (b.M / d2, b.M / d1)


def interval_for_37(b: BandParams) -> tuple[float, float]:
    """Distances where ``K1 d <= dT <= K2 d <= (1-K) d + M`` can hold."""
    d2 = _require_den(b, b.K2, "K2")
    return (0.0, b.M / d2)


def xei_radius(b: BandParams) -> float:
    """Radius ``M / (K + K1 - 1) * min(1, K1)`` of the inner ball around each point."""
    d1 = _require_den(b, b.K1, "K1")
    return (b.M / d1) * min(1.0, b.K1)


def xhat_threshold(b: BandParams) -> float:
    """Distance ``M / K`` beyond which pairs are guaranteed non-expansive."""
    if b.K == 0:
        raise ValueError("K = 0: threshold undefined")
    return b.M / b.K


def disjointness_check(b: BandParams) -> bool:
    """True iff ``M/K >= M/(K + K1 - 1)``, i.e. the non-expansive outer region
    and the inner ball of radius ``M/(K + K1 - 1)`` cannot overlap."""
    thr = xhat_threshold(b)
    d1 = _require_den(b, b.K1, "K1")
    return thr >= b.M / d1


def band_envelope(d: float, b: BandParams) -> tuple[float, float]:
    """``(lower, upper)`` envelope of ``d(Tx, Ty)`` at pair distance ``d``."""
    d1 = _require_den(b, b.K1, "K1")
    if d < 0:
        raise ValueError("d must be non-negative")
    lower = b.K1 * d
    upper = min((1.0 - b.K) * d + b.M, max(b.K2 * d, b.K1 * b.M / d1))
    return lower, upper


class BandVerdict(enum.Enum):
    NonExpansive = "NonExpansive"
    ContractiveWithFixedPoint = "ContractiveWithFixedPoint"
    MixedLocal = "MixedLocal"
    NotContractive = "NotContractive"
    Infeasible = "Infeasible"


class UnclassifiedBand(ValueError):
    """Raised when (K, K1, K2) falls outside every branch of the verdict table."""


def corollary_verdict(b: BandParams) -> BandVerdict:
    if not 0.0 < b.K < 1.0:
        raise ValueError(f"K must lie in (0, 1), got {b.K}")
    floor = max(1.0 - b.K, 0.0)
    if b.K1 > 1.0:
        return BandVerdict.Infeasible
    if b.K1 == 1.0:
        return BandVerdict.NotContractive
    if floor < b.K1 and b.K2 < 1.0:
        return BandVerdict.ContractiveWithFixedPoint
    if floor < b.K1 and b.K2 == 1.0:
        return BandVerdict.NonExpansive
    if b.K2 > 1.0:
        return BandVerdict.MixedLocal
    raise UnclassifiedBand(
        f"Unclassified: K1={b.K1} <= max(1-K, 0)={floor} with K2={b.K2} <= 1"
    )


@dataclass(frozen=True)
class FeasibilityRecord:
    feasible_36: bool
    feasible_37: bool
    feasible_35: bool


def feasibility_scan(ds, b: BandParams, grid_size: int = 1000, chunk: int = 1024):
    """Brute-force feasibility for an array of distances.

    For each ``d`` the candidate image distances ``dT`` run over a uniform grid
    of ``grid_size`` points on ``[0, K2 d + M]``; a chain is feasible when some
    grid point satisfies every inequality in it. Returns three boolean arrays
    ``(feasible_36, feasible_37, feasible_35)``.
    """
    if grid_size < 1000:
        raise ValueError(f"grid_size must be >= 1000, got {grid_size}")
    ds = np.atleast_1d(np.asarray(ds, dtype=float))
    if np.any(ds < 0):
        raise ValueError("distances must be non-negative")
    u = np.linspace(0.0, 1.0, grid_size)
    out36 = np.empty(ds.shape, dtype=bool)
    out37 = np.empty(ds.shape, dtype=bool)
    out35 = np.empty(ds.shape, dtype=bool)
    for start in range(0, ds.size, chunk):
        d = ds[start:start + chunk, None]
        dT = u[None, :] * (b.K2 * d + b.M)
        lo = b.K1 * d
        rhs = (1.0 - b.K) * d + b.M
        up = b.K2 * d
        above = lo <= dT
        c36 = above & (dT <= rhs) & (rhs <= up)
        c37 = above & (dT <= up) & (up <= rhs)
        c35 = above & (dT <= np.minimum(rhs, up))
        sl = slice(start, start + d.shape[0])
        out36[sl] = c36.any(axis=1)
        out37[sl] = c37.any(axis=1)
        out35[sl] = c35.any(axis=1)
    return out36, out37, out35


def feasibility_oracle(d: float, b: BandParams, grid_size: int = 1000) -> FeasibilityRecord:
    f36, f37, f35 = feasibility_scan([d], b, grid_size)
    return FeasibilityRecord(bool(f36[0]), bool(f37[0]), bool(f35[0]))


def _closed_form_membership(ds: np.ndarray, b: BandParams):
    """Exact chain membership, including slopes whose denominator is not positive
    (then the corresponding inequality in ``d`` holds everywhere or nowhere)."""
    d1, d2 = _den(b.K, b.K1), _den(b.K, b.K2)
    below1 = ds <= b.M / d1 if d1 > 0 else np.ones(ds.shape, dtype=bool)
    below2 = ds <= b.M / d2 if d2 > 0 else np.ones(ds.shape, dtype=bool)
    above2 = ds >= b.M / d2 if d2 > 0 else np.zeros(ds.shape, dtype=bool)
    return above2 & below1, below2, below1


def _dT_widths(ds: np.ndarray, b: BandParams):
    """Exact lengths of the feasible ``dT`` sets of each chain (negative when empty)."""
    lo = b.K1 * ds
    rhs = (1.0 - b.K) * ds + b.M
    up = b.K2 * ds
    w36 = np.where(rhs <= up, rhs - lo, -np.inf)
    w37 = np.where(up <= rhs, up - lo, -np.inf)
    w35 = np.minimum(rhs, up) - lo
    return w36, w37, w35


def oracle_mismatches(b: BandParams, ds, grid_size: int = 1000) -> dict[str, np.ndarray]:
    """Distances where the scan and the closed-form intervals disagree by more
    than one ``dT`` grid cell.

    A grid point satisfying a chain certifies feasibility outright, so the scan
    can only err by missing a feasible ``dT`` set shorter than one cell. Every
    other disagreement is returned, keyed by chain name.
    """
    ds = np.asarray(ds, dtype=float)
    scan = feasibility_scan(ds, b, grid_size)
    exact = _closed_form_membership(ds, b)
    cell = (b.K2 * ds + b.M) / (grid_size - 1)
    out = {}
    for name, s, e, w in zip(("36", "37", "35"), scan, exact, _dT_widths(ds, b)):
        bad = (s != e) & ~(e & ~s & (w < cell))
        out[name] = ds[bad]
    return out


@dataclass(frozen=True)
class RegionReport:
    interval_36: tuple[float, float] | None
    interval_37: tuple[float, float] | None
    xei_radius: float | None
    xhat_threshold: float | None
    verdict: BandVerdict | None
    disjoint: bool | None


def _maybe(fn, b):
    try:
        return fn(b)
    except ValueError:
        return None


def region_report(b: BandParams) -> RegionReport:
    """Everything computable for ``b``; entries whose preconditions fail are ``None``.

    ``UnclassifiedBand`` propagates so that gaps in the verdict table stay visible.
    """
    verdict = corollary_verdict(b) if 0.0 < b.K < 1.0 else None
    return RegionReport(
        interval_36=_maybe(interval_for_36, b),
        interval_37=_maybe(interval_for_37, b),
        xei_radius=_maybe(xei_radius, b),
        xhat_threshold=_maybe(xhat_threshold, b),
        verdict=verdict,
        disjoint=_maybe(disjointness_check, b),
    )
