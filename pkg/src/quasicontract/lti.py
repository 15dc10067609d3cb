"""Stable linear system with a bounded perturbation, sampled every ``h``.

``x' = A x + eta(t)`` with ``||eta|| <= M0``. An exponential envelope
``||e^{At}|| <= K0 e^{-alpha0 t}`` turns the sampled map
``T_h x(kh) = x((k+1)h)`` into one obeying

    ||T_h x - T_h y|| <= (1 - K) ||x - y|| + M,
    K = 1 - K0 e^{-alpha0 h},   M = 2 K0 M0 / alpha0,

provided ``h`` is at least ``(1/alpha0) ln(K0 / (1 - K))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from .constraint import ContractionParams
from .metric import EUCLIDEAN, Metric, as_point
from .orbits import SelfMap

__all__ = [
    "EnvelopeFit",
    "LtiSystem",
    "Perturbation",
    "RandomPerturbation",
    "SinusoidalPerturbation",
    "ZeroPerturbation",
    "contraction_params",
    "envelope_fit",
    "envelope_series",
    "integrate_step",
    "matrix_norm",
    "min_sampling_period",
    "sampled_map",
    "spectral_abscissa",
]

MAX_DIM = 16
ALPHA_MARGIN = 1e-3


def _as_matrix(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("A has non-finite entries")
    if A.shape[0] > MAX_DIM:
        raise ValueError(f"systems larger than {MAX_DIM} states are not supported")
    return A


def spectral_abscissa(A) -> float:
    """Largest real part among the eigenvalues of ``A``."""
    A = _as_matrix(A)
    try:
        eig = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"eigenvalue iteration did not converge: {exc}") from exc
    return float(np.max(eig.real))


def matrix_norm(E: np.ndarray, metric: Metric) -> float:
    """Operator norm induced by a p-norm metric."""
    if not metric.is_norm:
        raise ValueError("induced matrix norm needs a p-norm metric")
    return float(np.linalg.norm(E, ord=metric.p))


@dataclass(frozen=True)
class EnvelopeFit:
    K0: float
    alpha0: float

    def __post_init__(self):
        if not (math.isfinite(self.K0) and self.K0 >= 1.0):
            raise ValueError(f"K0 must be >= 1, got {self.K0}")
        if not (math.isfinite(self.alpha0) and self.alpha0 > 0):
            raise ValueError(f"alpha0 must be positive, got {self.alpha0}")

    def __call__(self, t):
        return self.K0 * np.exp(-self.alpha0 * np.asarray(t, dtype=float))


def envelope_fit(
    A, metric: Metric = EUCLIDEAN, horizon: float | None = None, grid: int = 200
) -> EnvelopeFit:
    """Fit ``||e^{At}|| <= K0 e^{-alpha0 t}`` on ``[0, horizon]``.

    ``alpha0`` is the negated spectral abscissa shrunk by a relative margin of
    1e-3; ``K0`` is the largest ``||e^{At}|| e^{alpha0 t}`` over ``grid`` uniform
    times (polished by a bounded 1-D search around the best grid time), then
    checked on a grid ten times finer.
    """
    A = _as_matrix(A)
    if grid < 100:
        raise ValueError(f"grid must be >= 100, got {grid}")
    a = spectral_abscissa(A)
    if a >= 0:
        raise ValueError(f"A is not a stability matrix (spectral abscissa {a})")
    alpha0 = -a * (1.0 - ALPHA_MARGIN)
    if horizon is None:
        horizon = 20.0 / alpha0
    if horizon <= 0:
        raise ValueError("horizon must be positive")

    def gain(t):
        return matrix_norm(expm(A * t), metric) * math.exp(alpha0 * t)

    ts = np.linspace(0.0, horizon, grid)
    gains = np.array([gain(t) for t in ts])
    i = int(np.argmax(gains))
    if i == grid - 1 and gains[-1] > gains[-2]:
        raise ValueError("horizon too short: envelope gain still rising at the horizon")
    # The grid maximum can sit a cell away from the true peak; polish it locally.
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, grid - 1)]
    res = minimize_scalar(lambda t: -gain(t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    K0 = max(1.0, float(gains[i]), -float(res.fun))

    fine = np.linspace(0.0, horizon, 10 * grid)
    norms = np.array([matrix_norm(expm(A * t), metric) for t in fine])
    slack = K0 * np.exp(-alpha0 * fine) - norms
    if np.min(slack) < -1e-9:
        raise ValueError(
            f"horizon too short or grid too coarse: envelope violated by {-np.min(slack):.3e}"
        )
    return EnvelopeFit(K0=K0, alpha0=alpha0)


def envelope_series(A, env: EnvelopeFit, metric: Metric, ts) -> tuple[np.ndarray, np.ndarray]:
    """``(||e^{At}||, K0 e^{-alpha0 t})`` at each time in ``ts``."""
    A = _as_matrix(A)
    ts = np.asarray(ts, dtype=float)
    norms = np.array([matrix_norm(expm(A * t), metric) for t in ts])
    return norms, env(ts)


def min_sampling_period(env: EnvelopeFit, K_target: float) -> float:
    if not 0.0 < K_target < 1.0:
        raise ValueError(f"K_target must lie in (0, 1), got {K_target}")
    return math.log(env.K0 / (1.0 - K_target)) / env.alpha0


def contraction_params(env: EnvelopeFit, M0: float, h: float) -> ContractionParams:
    if h <= 0:
        raise ValueError("h must be positive")
    if M0 < 0:
        raise ValueError("M0 must be non-negative")
    K = -math.expm1(math.log(env.K0) - env.alpha0 * h)
    if K <= 0:
        raise ValueError("sampling period below h0 for any K > 0")
    return ContractionParams(K=K, M=2.0 * env.K0 * M0 / env.alpha0)


# --- perturbations -----------------------------------------------------------


class Perturbation:
    """Bounded disturbance ``eta(t, x)`` with ``||eta|| <= radius`` in the chosen norm."""

    radius: float = 0.0
    p: float = 2.0

    def raw(self, t: float, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        v = self.raw(t, x)
        n = float(np.linalg.norm(v, ord=self.p))
        if n > self.radius:
            v = v * (self.radius / n)
        return v


@dataclass(frozen=True)
class ZeroPerturbation(Perturbation):
    dim: int = 1

    def __call__(self, t, x):
        return np.zeros(self.dim)


@dataclass(frozen=True, eq=False)
class SinusoidalPerturbation(Perturbation):
    amplitude: np.ndarray = field(default_factory=lambda: np.zeros(1))
    frequency: float = 1.0
    radius: float = 0.0
    p: float = 2.0
    phase: float = 0.0

    def raw(self, t, x):
        return np.asarray(self.amplitude, dtype=float) * math.sin(self.frequency * t + self.phase)


class RandomPerturbation(Perturbation):
    """Seeded smooth random signal: a few sinusoids per coordinate, clamped to the ball."""

    def __init__(self, dim: int, radius: float, seed: int = 0, p: float = 2.0, modes: int = 3):
        rng = np.random.default_rng(seed)
        self.dim = dim
        self.radius = float(radius)
        self.p = p
        self.seed = seed
        self._amp = rng.uniform(-1.0, 1.0, size=(modes, dim)) * (self.radius / math.sqrt(modes))
        self._freq = rng.uniform(0.2, 3.0, size=(modes, 1))
        self._phase = rng.uniform(0.0, 2 * math.pi, size=(modes, 1))

    def raw(self, t, x):
        return (self._amp * np.sin(self._freq * t + self._phase)).sum(axis=0)

    def __repr__(self):
        return f"RandomPerturbation(dim={self.dim}, radius={self.radius}, seed={self.seed})"


# --- system ------------------------------------------------------------------


@dataclass(frozen=True)
class LtiSystem:
    A: np.ndarray
    M0: float
    metric: Metric = EUCLIDEAN
    h: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "A", _as_matrix(self.A))
        if not (math.isfinite(self.M0) and self.M0 >= 0):
            raise ValueError(f"M0 must be finite and non-negative, got {self.M0}")
        if not (math.isfinite(self.h) and self.h > 0):
            raise ValueError(f"h must be positive, got {self.h}")
        a = spectral_abscissa(self.A)
        if a >= 0:
            raise ValueError(f"A is not a stability matrix (spectral abscissa {a})")

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def exact_unperturbed(self, x, t: float | None = None) -> np.ndarray:
        """``e^{A t} x`` (``t`` defaults to ``h``)."""
        return expm(self.A * (self.h if t is None else t)) @ as_point(x)


def integrate_step(
    sys: LtiSystem, x, t0: float, pert: Perturbation, substeps: int = 20
) -> np.ndarray:
    """Advance ``x`` from ``t0`` to ``t0 + h`` with ``substeps`` classical RK4 steps."""
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    x = as_point(x)
    if x.size != sys.dim:
        raise ValueError(f"state has dimension {x.size}, system has {sys.dim}")
    A = sys.A
    dt = sys.h / substeps
    half = 0.5 * dt
    for i in range(substeps):
        t = t0 + i * dt
        k1 = A @ x + pert(t, x)
        k2 = A @ (x + half * k1) + pert(t + half, x + half * k1)
        k3 = A @ (x + half * k2) + pert(t + half, x + half * k2)
        k4 = A @ (x + dt * k3) + pert(t + dt, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"non-finite state after integration (substeps={substeps})")
    return x


def sampled_map(sys: LtiSystem, pert: Perturbation, substeps: int = 20) -> SelfMap:
    """``T_h``: state at step ``k`` (time ``k h``) to the state at ``(k + 1) h``."""

    def apply(x, k=0):
        return integrate_step(sys, x, k * sys.h, pert, substeps)

    return SelfMap(apply, descriptor=f"T_h(h={sys.h}, substeps={substeps}, {pert!r})")
