from dataclasses import asdict, dataclass, field, fields
from itertools import product
from pathlib import Path
from typing import Dict, List, Optional
import hashlib
import json
import math

from app import __version__
from app.config import check_spin_ceiling, get_settings
from app.models.classical import DEFAULT_H_TOL, validate_map_variant, validate_periods
from app.models.quantum import validate_sector, validate_spin

AXES = ("p", "k0", "k1", "gamma", "j")
CLASSICAL_AXES = ("p", "k0", "k1", "gamma")


def _build(cls, data: Optional[dict], section: str):
    data = data or {}
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"Unknown keys in '{section}': {sorted(unknown)}")
    return cls(**data)


@dataclass
class QuantumOptions:
    run_quantum: bool = True
    sector: str = "positive"
    epsilon_filter: float = 1e-16
    variant: str = "exact"
    allow_large_j: bool = False

    def __post_init__(self):
        self.sector = validate_sector(self.sector)
        if self.epsilon_filter <= 0:
            raise ValueError("epsilon_filter must be positive")
        if self.variant not in ("exact", "decoupled"):
            raise ValueError("variant must be 'exact' or 'decoupled'")


@dataclass
class ClassicalOptions:
    run_classical: bool = True
    n_ic: int = 1245
    n_periods: int = 1000
    transient: int = 100
    h_tol: float = DEFAULT_H_TOL
    map_variant: str = "coupled"
    # random trajectories for the box-counting dimension; 0 skips it
    n_attractor: int = 0

    def __post_init__(self):
        validate_periods(self.n_periods, self.transient)
        self.map_variant = validate_map_variant(self.map_variant)
        if self.n_ic < 1:
            raise ValueError("n_ic must be positive")
        if self.h_tol <= 0:
            raise ValueError("h_tol must be positive")
        if self.n_attractor < 0:
            raise ValueError("n_attractor must be non-negative")


@dataclass
class OutputOptions:
    directory: str = "outputs"
    format: str = "csv"
    name: str = "sweep"

    def __post_init__(self):
        if self.format != "csv":
            raise ValueError("Only the csv output format is supported")
        if not self.name or "/" in self.name:
            raise ValueError("Output name must be a plain file stem")


@dataclass
class SweepConfig:
    """Parameter axes plus the quantum, classical and output options of one sweep.

    The config is plain JSON on disk; to_dict/from_dict round-trip it exactly
    and config_hash() identifies it in every output file. The hash covers
    everything except the worker count and the output directory.
    """
    axes: Dict[str, List[float]]
    quantum: QuantumOptions = field(default_factory=QuantumOptions)
    classical: ClassicalOptions = field(default_factory=ClassicalOptions)
    output: OutputOptions = field(default_factory=OutputOptions)
    seed: int = 0
    workers: Optional[int] = None

    def __post_init__(self):
        unknown = set(self.axes) - set(AXES)
        if unknown:
            raise ValueError(f"Unknown axes: {sorted(unknown)}")
        required = list(CLASSICAL_AXES) + (["j"] if self.quantum.run_quantum else [])
        for name in required:
            values = self.axes.get(name)
            if not values:
                raise ValueError(f"Axis '{name}' must be a non-empty list")
        for name, values in self.axes.items():
            cleaned = [float(v) for v in values]
            if not all(math.isfinite(v) for v in cleaned):
                raise ValueError(f"Axis '{name}' contains non-finite values")
            self.axes[name] = cleaned
        if any(g < 0 for g in self.axes["gamma"]):
            raise ValueError("gamma values must be non-negative")
        if self.quantum.run_quantum:
            self.axes["j"] = [validate_spin(j) for j in self.axes["j"]]
            for j in self.axes["j"]:
                check_spin_ceiling(j, self.quantum.allow_large_j)
        if self.workers is not None and self.workers < 1:
            raise ValueError("workers must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        data = dict(data)
        if "axes" not in data:
            raise ValueError("Sweep config needs an 'axes' section")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"Unknown top-level keys: {sorted(unknown)}")
        return cls(
            axes={k: list(v) for k, v in data["axes"].items()},
            quantum=_build(QuantumOptions, data.get("quantum"), "quantum"),
            classical=_build(ClassicalOptions, data.get("classical"), "classical"),
            output=_build(OutputOptions, data.get("output"), "output"),
            seed=int(data.get("seed", 0)),
            workers=data.get("workers"),
        )

    @classmethod
    def load(cls, path) -> "SweepConfig":
        with open(path) as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path} is not valid JSON: {e}") from e
        return cls.from_dict(data)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def hashed_dict(self) -> dict:
        data = self.to_dict()
        data.pop("workers")
        data["output"].pop("directory")
        return data

    def config_hash(self) -> str:
        canonical = json.dumps(self.hashed_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def points(self) -> List[Dict[str, float]]:
        """Cartesian product of the axes, last axis varying fastest."""
        names = [a for a in AXES if a in self.axes]
        return [dict(zip(names, values)) for values in product(*(self.axes[n] for n in names))]

    def resolve_workers(self, override: Optional[int] = None) -> int:
        return override or self.workers or get_settings().workers or 1

    def output_dir(self) -> Path:
        return Path(self.output.directory)


@dataclass
class SweepRecord:
    index: int
    p: float
    k0: float
    k1: float
    gamma: float
    j: Optional[float] = None
    sector: Optional[str] = None
    status: str = "ok"
    error_type: Optional[str] = None
    error: Optional[str] = None
    n_eigs: Optional[int] = None
    n_filtered: Optional[int] = None
    n_filtered_fraction: Optional[float] = None
    mean_r: Optional[float] = None
    neg_mean_cos: Optional[float] = None
    R_c: Optional[float] = None
    Theta_c: Optional[float] = None
    f_c: Optional[float] = None
    mean_d_lyapunov: Optional[float] = None
    d_hausdorff: Optional[float] = None
    n_ic: Optional[int] = None
    code_version: str = __version__
    wall_time: float = 0.0


@dataclass
class SweepResult:
    config: SweepConfig
    records: List[SweepRecord]
    wall_time: float = 0.0

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.records if r.status != "ok")

    def __len__(self) -> int:
        return len(self.records)
