"""The (K, M) distance constraint d(Tx, Ty) <= (1 - K) d(x, y) + M.

Regime taxonomy over (K, M), pair-level verification and classification,
and tightest-offset fitting from observed distance pairs.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ContractionParams",
    "DistanceSample",
    "PairVerdict",
    "Regime",
    "RegimeTag",
    "classify_pair",
    "classify_regime",
    "default_k_grid",
    "fit_frontier",
    "fit_min_M",
    "read_samples_csv",
    "verify_pair",
]

BOUNDARY_RTOL = 1e-12


def _check_nonneg_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class ContractionParams:
    """Certificate ``(K, M)``; ``threshold`` is the distance ``M / K`` above which
    the map is guaranteed non-expansive (``+inf`` when ``K == 0``)."""

    K: float
    M: float

    def __post_init__(self):
        object.__setattr__(self, "K", _check_nonneg_finite("K", self.K))
        object.__setattr__(self, "M", _check_nonneg_finite("M", self.M))

    @property
    def threshold(self) -> float:
        if self.K == 0:
            return math.inf
        return self.M / self.K

    def rhs(self, d_xy):
        """Right-hand side ``(1 - K) d + M`` (vectorised over ``d_xy``)."""
        return (1.0 - self.K) * d_xy + self.M


class RegimeTag(enum.Enum):
    StrictContraction = "StrictContraction"
    NonExpansive = "NonExpansive"
    BoundedImage = "BoundedImage"
    SuperUnit = "SuperUnit"
    MixedThreshold = "MixedThreshold"
    OffsetBounded = "OffsetBounded"


@dataclass(frozen=True)
class Regime:
    """Regime of a parameter pair.

    ``interval`` holds the infeasible distance range for ``SuperUnit``;
    ``value`` holds the image bound (``BoundedImage``) or the threshold
    (``MixedThreshold``, ``OffsetBounded``). ``boundary`` flags ``K == 1, M == 0``,
    where the map is weakly contractive only if the inequality is strict.
    """

    tag: RegimeTag
    interval: tuple[float, float] | None = None
    value: float | None = None
    boundary: bool = False


def classify_regime(params: ContractionParams) -> Regime:
    K, M = params.K, params.M
    if K > 1:
        # (1 - K) d + M < 0 exactly when d > M / (K - 1): no pair can sit there.
        return Regime(RegimeTag.SuperUnit, interval=(M / (K - 1.0), math.inf))
    if M == 0:
        if K == 0:
            return Regime(RegimeTag.NonExpansive)
        return Regime(RegimeTag.StrictContraction, boundary=(K == 1.0))
    if K == 1:
        return Regime(RegimeTag.BoundedImage, value=M)
    if K == 0:
        return Regime(RegimeTag.OffsetBounded, value=math.inf)
    return Regime(RegimeTag.MixedThreshold, value=M / K)


@dataclass(frozen=True)
class DistanceSample:
    d_xy: float
    d_TxTy: float

    def __post_init__(self):
        object.__setattr__(self, "d_xy", _check_nonneg_finite("d_xy", self.d_xy))
        object.__setattr__(self, "d_TxTy", _check_nonneg_finite("d_TxTy", self.d_TxTy))


def verify_pair(s: DistanceSample, params: ContractionParams, tol: float = 0.0) -> bool:
    return s.d_TxTy <= params.rhs(s.d_xy) + tol


class PairVerdict(enum.Enum):
    WeaklyContractiveGuaranteed = "WeaklyContractiveGuaranteed"
    NonExpansiveGuaranteed = "NonExpansiveGuaranteed"
    # Below the threshold expansion is possible but not implied.
    Indeterminate = "Indeterminate"


def classify_pair(d_xy: float, params: ContractionParams) -> PairVerdict:
    if params.K == 0:
        raise ValueError("threshold undefined; use regime OffsetBounded semantics")
    d_xy = _check_nonneg_finite("d_xy", d_xy)
    thr = params.threshold
    if math.isclose(d_xy, thr, rel_tol=BOUNDARY_RTOL, abs_tol=0.0):
        return PairVerdict.NonExpansiveGuaranteed
    if d_xy > thr:
        return PairVerdict.WeaklyContractiveGuaranteed
    return PairVerdict.Indeterminate


def fit_min_M(K: float, samples: Sequence[DistanceSample]) -> float:
    """Smallest ``M >= 0`` such that every sample satisfies the constraint at ``K``."""
    K = float(K)
    if not 0.0 <= K <= 1.0:
        raise ValueError(f"K must lie in [0, 1], got {K!r}")
    if len(samples) == 0:
        raise ValueError("samples must be non-empty")
    # Evaluate exactly as verify_pair does, so the fit round-trips at tol=0.
    m = max(s.d_TxTy - (1.0 - K) * s.d_xy for s in samples)
    m = max(m, 0.0)
    while any(s.d_TxTy > (1.0 - K) * s.d_xy + m for s in samples):
        m = math.nextafter(m, math.inf)
    return m


def default_k_grid(n: int = 64) -> np.ndarray:
    return np.arange(n) / n


def fit_frontier(
    samples: Sequence[DistanceSample], k_grid: Iterable[float] | None = None
) -> list[tuple[float, float]]:
    grid = default_k_grid() if k_grid is None else np.asarray(list(k_grid), dtype=float)
    if grid.size == 0:
        raise ValueError("k_grid must be non-empty")
    if np.any(grid < 0) or np.any(grid >= 1):
        raise ValueError("k_grid values must lie in [0, 1)")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("k_grid must be strictly increasing")
    return [(float(k), fit_min_M(float(k), samples)) for k in grid]


def read_samples_csv(path: str | Path) -> list[DistanceSample]:
    """Read ``d_xy,d_TxTy`` rows; the header is mandatory."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty samples file") from None
        if header != ["d_xy", "d_TxTy"]:
            raise ValueError(f"{path}:1: expected header 'd_xy,d_TxTy', got {','.join(header)!r}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                out.append(DistanceSample(float(row[0]), float(row[1])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not out:
        raise ValueError(f"{path}: no samples")
    return out
