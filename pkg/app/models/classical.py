from dataclasses import dataclass
from typing import Optional
import math

import numpy as np

MAP_VARIANTS = ("coupled", "decoupled", "isolated")
FLOW_METHODS = ("auto", "rk4")

NORM_TOL = 1e-9
DISK_RADIUS_SQ = 4.0
DEFAULT_N_PERIODS = 1000
DEFAULT_TRANSIENT = 100
DEFAULT_H_TOL = 1e-2


def validate_map_variant(variant: str) -> str:
    variant = str(variant).lower()
    if variant not in MAP_VARIANTS:
        raise ValueError(f"Map variant must be one of {MAP_VARIANTS}, got {variant!r}")
    return variant


def validate_periods(n_periods: int, transient: int) -> None:
    if n_periods < 100:
        raise ValueError(f"n_periods must be at least 100, got {n_periods}")
    if transient < 0:
        raise ValueError(f"transient must be non-negative, got {transient}")


@dataclass
class ClassicalParams:
    """Kicked-top parameters for the mean-field dynamics.

    n_steps is the RK4 step count per period, method selects between exact
    inter-kick solutions where they exist ("auto") and RK4 everywhere ("rk4").
    """
    p: float
    k0: float
    k1: float
    gamma: float
    n_steps: int = 100
    method: str = "auto"

    def __post_init__(self):
        for name in ("p", "k0", "k1", "gamma"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
            setattr(self, name, value)
        if self.gamma < 0:
            raise ValueError(f"Dissipation strength must be non-negative, got {self.gamma}")
        if int(self.n_steps) < 1:
            raise ValueError("n_steps must be at least 1")
        self.n_steps = int(self.n_steps)
        if self.method not in FLOW_METHODS:
            raise ValueError(f"method must be one of {FLOW_METHODS}")

    def with_gamma(self, gamma: float) -> "ClassicalParams":
        return ClassicalParams(self.p, self.k0, self.k1, gamma, self.n_steps, self.method)


@dataclass(frozen=True)
class BlochVector:
    jx: float
    jy: float
    jz: float

    def __post_init__(self):
        norm = math.sqrt(self.jx ** 2 + self.jy ** 2 + self.jz ** 2)
        if not math.isfinite(norm):
            raise ValueError("Bloch vector must be finite")
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"Bloch vector must have unit length, got |J|={norm}")

    def as_array(self) -> np.ndarray:
        return np.array([self.jx, self.jy, self.jz], dtype=float)

    @classmethod
    def from_array(cls, values) -> "BlochVector":
        jx, jy, jz = (float(v) for v in np.asarray(values, dtype=float).ravel())
        return cls(jx, jy, jz)


@dataclass(frozen=True)
class PhasePoint:
    q: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.p)):
            raise ValueError("Phase point must be finite")
        if self.q ** 2 + self.p ** 2 > DISK_RADIUS_SQ + 1e-12:
            raise ValueError(f"Phase point ({self.q}, {self.p}) lies outside the disk Q^2 + P^2 <= 4")

    def as_array(self) -> np.ndarray:
        return np.array([self.q, self.p], dtype=float)


@dataclass
class LyapunovSpectrum:
    h1: float
    h2: float
    n_periods: int
    transient: int

    def __post_init__(self):
        if not (math.isfinite(self.h1) and math.isfinite(self.h2)):
            raise ValueError("Lyapunov exponents must be finite")
        if self.h1 < self.h2:
            self.h1, self.h2 = self.h2, self.h1


@dataclass
class AttractorMetrics:
    upsilon: int
    d_lyapunov: float
    d_hausdorff: Optional[float] = None

    def __post_init__(self):
        if self.upsilon not in (0, 1):
            raise ValueError("upsilon must be 0 or 1")
        if not 0.0 <= self.d_lyapunov <= 2.0:
            raise ValueError(f"Lyapunov dimension must lie in [0, 2], got {self.d_lyapunov}")


@dataclass
class GridSpec:
    """Square lattice clipped to the open disk, pitch tuned to about n_target points."""
    n_target: int = 1245

    def __post_init__(self):
        if self.n_target < 1:
            raise ValueError("n_target must be positive")

    @property
    def pitch(self) -> float:
        return math.sqrt(math.pi * DISK_RADIUS_SQ / self.n_target)


@dataclass
class GridMetrics:
    """Per-initial-condition results of a grid scan, in lattice order."""
    points: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    upsilon: np.ndarray
    d_lyapunov: np.ndarray

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def chaotic_fraction(self) -> float:
        return float(np.mean(self.upsilon))

    @property
    def mean_d_lyapunov(self) -> float:
        return float(np.mean(self.d_lyapunov))

    def attractor(self, i: int) -> AttractorMetrics:
        return AttractorMetrics(upsilon=int(self.upsilon[i]), d_lyapunov=float(self.d_lyapunov[i]))


@dataclass
class LyapunovRequest:
    p: float
    k0: float
    k1: float
    gamma: float
    q0: float = 0.3
    p0: float = 0.1
    n_periods: int = DEFAULT_N_PERIODS
    transient: int = DEFAULT_TRANSIENT
    map_variant: str = "coupled"

    def __post_init__(self):
        self.map_variant = validate_map_variant(self.map_variant)
        validate_periods(self.n_periods, self.transient)
        if self.n_periods > 100000:
            raise ValueError("n_periods must be at most 100000")

    def params(self) -> ClassicalParams:
        return ClassicalParams(self.p, self.k0, self.k1, self.gamma)

    def start(self) -> PhasePoint:
        return PhasePoint(self.q0, self.p0)


@dataclass
class ClassifyRequest:
    p: float
    k0: float
    k1: float
    gamma: float
    n_target: int = 200
    n_periods: int = DEFAULT_N_PERIODS
    transient: int = DEFAULT_TRANSIENT
    h_tol: float = DEFAULT_H_TOL
    map_variant: str = "coupled"

    def __post_init__(self):
        self.map_variant = validate_map_variant(self.map_variant)
        validate_periods(self.n_periods, self.transient)
        if not 1 <= self.n_target <= 5000:
            raise ValueError("n_target must be between 1 and 5000")
        if self.h_tol <= 0:
            raise ValueError("h_tol must be positive")

    def params(self) -> ClassicalParams:
        return ClassicalParams(self.p, self.k0, self.k1, self.gamma)
