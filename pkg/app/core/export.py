"""CSV and JSON writers.

Every CSV starts with '#'-prefixed provenance lines (config hash, constants
version, code version) followed by the table; pandas reads them back with
comment="#". Floats are written with 17 significant digits so re-reading is
lossless. Timing never goes into a CSV, only into the JSON summary.
"""
from dataclasses import asdict
from functools import partial
from pathlib import Path
from typing import Dict, Iterable, Optional
import hashlib
import json
import logging

import numpy as np
import pandas as pd

from app import __version__
from app.core.constants import CONSTANTS_VERSION, constants_table
from app.models.classical import GridMetrics
from app.models.quantum import ComplexSpectrum
from app.models.sweep import SweepResult

logger = logging.getLogger(__name__)

to_jsonstr = partial(json.dumps, sort_keys=True, indent=2)

FLOAT_FORMAT = "%.17g"
SWEEP_COLUMNS_EXCLUDED = ("wall_time",)
SPECTRUM_COLUMNS = ("re_lambda", "im_lambda", "re_phi", "im_phi", "sector")


def settings_hash(settings: Dict) -> str:
    """SHA-256 of the canonical JSON of a flat settings dict (used for single-point runs)."""
    canonical = json.dumps(settings, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def provenance(config_hash: str, **extra) -> Dict[str, str]:
    meta = {
        "config_hash": config_hash,
        "constants_version": CONSTANTS_VERSION,
        "code_version": __version__,
    }
    meta.update({k: str(v) for k, v in extra.items()})
    return meta


def write_csv(frame: pd.DataFrame, path, meta: Dict[str, str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        for key in sorted(meta):
            f.write(f"# {key}: {meta[key]}\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def read_provenance(path) -> Dict[str, str]:
    meta = {}
    with open(path) as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
    return meta


def spectrum_frame(spec: ComplexSpectrum) -> pd.DataFrame:
    return pd.DataFrame({
        "re_lambda": spec.eigenvalues.real,
        "im_lambda": spec.eigenvalues.imag,
        "re_phi": spec.eigenphases.real,
        "im_phi": spec.eigenphases.imag,
        "sector": spec.parity_sector,
    }, columns=list(SPECTRUM_COLUMNS))


def read_spectrum_csv(path) -> np.ndarray:
    """Eigenphases from a spectrum CSV written by spectrum_frame."""
    frame = pd.read_csv(path, comment="#")
    missing = set(SPECTRUM_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"{path} is missing columns {sorted(missing)}")
    return frame["re_phi"].to_numpy() + 1j * frame["im_phi"].to_numpy()


def metrics_frame(metrics: GridMetrics) -> pd.DataFrame:
    return pd.DataFrame({
        "ic_index": np.arange(metrics.n_points),
        "q0": metrics.points[:, 0],
        "p0": metrics.points[:, 1],
        "h1": metrics.h1,
        "h2": metrics.h2,
        "upsilon": metrics.upsilon,
        "d_lyapunov": metrics.d_lyapunov,
    })


def section_frame(sections: np.ndarray) -> pd.DataFrame:
    """(N, n_periods, 2) Poincare records as long-format rows."""
    n_ic, n_periods, _ = sections.shape
    ic, period = np.meshgrid(np.arange(n_ic), np.arange(1, n_periods + 1), indexing="ij")
    return pd.DataFrame({
        "ic_index": ic.ravel(),
        "period": period.ravel(),
        "q": sections[..., 0].ravel(),
        "p": sections[..., 1].ravel(),
    })


def bifurcation_frame(slices: Iterable) -> pd.DataFrame:
    rows = [
        {"gamma": s.gamma, "sample_index": i, "jy": float(jy)}
        for s in slices
        for i, jy in enumerate(s.jy)
    ]
    return pd.DataFrame(rows, columns=["gamma", "sample_index", "jy"])


def sweep_frame(result: SweepResult) -> pd.DataFrame:
    frame = pd.DataFrame([asdict(r) for r in result.records])
    return frame.drop(columns=list(SWEEP_COLUMNS_EXCLUDED))


def sweep_summary(result: SweepResult) -> Dict:
    frame = pd.DataFrame([asdict(r) for r in result.records])
    ok = frame[frame["status"] == "ok"]
    aggregates = {}
    for column in ("mean_r", "neg_mean_cos", "R_c", "Theta_c", "f_c", "mean_d_lyapunov", "d_hausdorff"):
        values = pd.to_numeric(ok[column], errors="coerce").dropna()
        if len(values):
            aggregates[column] = {"min": float(values.min()), "max": float(values.max()), "mean": float(values.mean())}
    return {
        "config": result.config.to_dict(),
        "config_hash": result.config.config_hash(),
        "constants": constants_table(),
        "code_version": __version__,
        "n_points": len(result),
        "n_failed": result.n_failed,
        "aggregates": aggregates,
        "timing": {
            "wall_time_total": result.wall_time,
            "wall_time_per_point": [r.wall_time for r in result.records],
        },
    }


def write_sweep(result: SweepResult, directory: Optional[str] = None):
    """Write <name>.csv and <name>.json for a finished sweep; returns both paths."""
    out_dir = Path(directory) if directory else result.config.output_dir()
    name = result.config.output.name
    csv_path = write_csv(sweep_frame(result), out_dir / f"{name}.csv", provenance(result.config.config_hash()))
    json_path = out_dir / f"{name}.json"
    json_path.write_text(to_jsonstr(sweep_summary(result)) + "\n")
    logger.info(f"Wrote sweep summary to {json_path}")
    return csv_path, json_path
