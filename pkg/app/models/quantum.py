from dataclasses import dataclass
from typing import Optional
import math

import numpy as np

SECTORS = ("positive", "negative", "full")


def validate_spin(j: float) -> float:
    # 2j must be a positive integer; returned as a float with the exact half-integer value
    try:
        twice = float(j) * 2.0
    except (TypeError, ValueError):
        raise ValueError(f"Spin quantum number must be numeric, got {j!r}")
    if not math.isfinite(twice) or abs(twice - round(twice)) > 1e-9:
        raise ValueError(f"2j must be an integer, got j={j}")
    if round(twice) < 1:
        raise ValueError(f"Spin quantum number must be positive, got j={j}")
    return round(twice) / 2.0


def validate_sector(sector: str) -> str:
    sector = str(sector).lower()
    if sector not in SECTORS:
        raise ValueError(f"Sector must be one of {SECTORS}, got {sector!r}")
    return sector


@dataclass(frozen=True)
class SpinQuantumNumber:
    """Spin magnitude j and the ascending-m_z basis it defines.

    Basis index i corresponds to m_z = -j + i for i = 0, ..., 2j. Every operator,
    parity sector and Liouville-space index in the package uses this ordering.
    """
    j: float

    def __post_init__(self):
        object.__setattr__(self, "j", validate_spin(self.j))

    @property
    def dim(self) -> int:
        return int(round(2 * self.j)) + 1

    @property
    def m_values(self) -> np.ndarray:
        return -self.j + np.arange(self.dim, dtype=float)

    @classmethod
    def from_dim(cls, dim: int) -> "SpinQuantumNumber":
        if dim < 2:
            raise ValueError(f"Hilbert dimension must be at least 2, got {dim}")
        return cls((dim - 1) / 2.0)


@dataclass
class ModelParams:
    p: float
    k0: float
    k1: float
    gamma: float
    j: float

    def __post_init__(self):
        for name in ("p", "k0", "k1", "gamma"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
            setattr(self, name, value)
        if self.gamma < 0:
            raise ValueError(f"Dissipation strength must be non-negative, got {self.gamma}")
        self.j = validate_spin(self.j)

    @property
    def spin(self) -> SpinQuantumNumber:
        return SpinQuantumNumber(self.j)

    def as_tuple(self):
        return (self.p, self.k0, self.k1, self.gamma, self.j)


@dataclass
class ComplexSpectrum:
    eigenvalues: np.ndarray
    eigenphases: np.ndarray
    parity_sector: str = "full"
    n_filtered: int = 0
    n_branch_cut: int = 0

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=complex)
        self.eigenphases = np.asarray(self.eigenphases, dtype=complex)
        self.parity_sector = validate_sector(self.parity_sector)
        if self.eigenvalues.shape != self.eigenphases.shape:
            raise ValueError("Eigenvalues and eigenphases must have the same length")

    def __len__(self) -> int:
        return len(self.eigenvalues)


@dataclass
class RatioSample:
    """Moduli and arguments of the complex spacing ratios, one entry per eigenphase."""
    r: np.ndarray
    theta: np.ndarray
    n_merged: int = 0

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.r.shape != self.theta.shape:
            raise ValueError("r and theta must have the same length")

    def __len__(self) -> int:
        return len(self.r)


@dataclass
class RatioStatistics:
    mean_r: float
    mean_neg_cos: float
    n_samples: int
    R_c: Optional[float] = None
    Theta_c: Optional[float] = None


@dataclass
class SpectrumRequest:
    p: float
    k0: float
    k1: float
    gamma: float
    j: float
    sector: str = "positive"
    epsilon: float = 1e-16
    variant: str = "exact"

    def __post_init__(self):
        self.sector = validate_sector(self.sector)
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.variant not in ("exact", "decoupled"):
            raise ValueError("variant must be 'exact' or 'decoupled'")

    def params(self) -> ModelParams:
        return ModelParams(self.p, self.k0, self.k1, self.gamma, self.j)


@dataclass
class OracleRequest:
    ensemble: str = "ginue"
    n: int = 2000
    seed: int = 7
    n_seeds: int = 1

    def __post_init__(self):
        self.ensemble = self.ensemble.lower()
        if self.ensemble not in ("ginue", "poisson2d", "coe", "poisson"):
            raise ValueError(f"Unknown ensemble: {self.ensemble}")
        if self.n < 16:
            raise ValueError("n must be at least 16")
        if not 1 <= self.n_seeds <= 20:
            raise ValueError("n_seeds must be between 1 and 20")


@dataclass
class StatisticsResponse:
    success: bool
    message: str
    result: Optional[dict] = None
    error: Optional[str] = None


@dataclass
class RealRatioStatistics:
    """Consecutive-spacing ratio average of a real (unitary) spectrum and its normalized value r_c."""
    mean_r: float
    r_c: float
    n_samples: int
