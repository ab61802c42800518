"""Parameter sweeps over the Cartesian product of the config axes.

Each parameter tuple is one task. Quantum work runs per full tuple; classical
work depends only on (p, k0, k1, gamma) and runs once per distinct tuple. Tasks
go through ProcessPoolExecutor.map, which returns results in submission order,
so records come out in grid order for any worker count.
"""
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Tuple
import logging
import time

import numpy as np

from app.core.classical import attractor_points, grid_metrics, hausdorff_dimension
from app.core.errors import NumericalError
from app.core.liouville import floquet_spectrum
from app.core.spectral_stats import complex_spacing_ratios, ratio_statistics
from app.models.classical import ClassicalParams, GridSpec
from app.models.quantum import ModelParams
from app.models.sweep import CLASSICAL_AXES, ClassicalOptions, QuantumOptions, SweepConfig, SweepRecord, SweepResult

logger = logging.getLogger(__name__)

# Failures that belong to one grid point rather than to the whole sweep
POINT_ERRORS = (ValueError, NumericalError, np.linalg.LinAlgError, MemoryError)


def quantum_point(point: Dict[str, float], options: QuantumOptions) -> Dict:
    """dissipative_floquet -> parity block -> spectrum -> filter -> ratios -> statistics."""
    params = ModelParams(point["p"], point["k0"], point["k1"], point["gamma"], point["j"])
    spec, fraction = floquet_spectrum(params, options.sector, options.variant, options.epsilon_filter)
    stats = ratio_statistics(complex_spacing_ratios(spec.eigenphases))
    return {
        "mean_r": stats.mean_r,
        "neg_mean_cos": stats.mean_neg_cos,
        "R_c": stats.R_c,
        "Theta_c": stats.Theta_c,
        "n_eigs": len(spec),
        "n_filtered": spec.n_filtered,
        "n_filtered_fraction": fraction,
    }


def classical_point(point: Dict[str, float], options: ClassicalOptions, seed: int = 0) -> Dict:
    params = ClassicalParams(point["p"], point["k0"], point["k1"], point["gamma"])
    metrics = grid_metrics(
        params,
        GridSpec(options.n_ic),
        n_periods=options.n_periods,
        transient=options.transient,
        h_tol=options.h_tol,
        map_variant=options.map_variant,
    )
    values = {"f_c": metrics.chaotic_fraction, "mean_d_lyapunov": metrics.mean_d_lyapunov, "n_ic": metrics.n_points}
    if options.n_attractor:
        cloud = attractor_points(params, options.n_attractor, options.n_periods, options.transient,
                                 seed=seed, map_variant=options.map_variant)
        values["d_hausdorff"] = hausdorff_dimension(cloud).dimension
    return values


def _guarded(task: Tuple) -> Tuple[Dict, Optional[Tuple[str, str]], float]:
    kind, point, options, seed = task
    start = time.perf_counter()
    try:
        values = quantum_point(point, options) if kind == "quantum" else classical_point(point, options, seed)
        return values, None, time.perf_counter() - start
    except POINT_ERRORS as e:
        logger.error(f"{kind} computation failed at {point}: {e}", exc_info=True)
        return {}, (type(e).__name__, str(e)), time.perf_counter() - start


def _run_tasks(tasks: List[Tuple], workers: int) -> List[Tuple]:
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(_guarded, tasks))
    return [_guarded(task) for task in tasks]


def run_sweep(config: SweepConfig, workers: Optional[int] = None) -> SweepResult:
    """Evaluate every parameter tuple; per-point failures become failed records."""
    workers = config.resolve_workers(workers)
    points = config.points()
    logger.info(f"=== Starting sweep {config.config_hash()[:12]}: {len(points)} points, {workers} workers ===")
    started = time.perf_counter()

    sector = config.quantum.sector if config.quantum.run_quantum else None
    records = [SweepRecord(index=i, sector=sector, **point) for i, point in enumerate(points)]

    if config.quantum.run_quantum:
        outcomes = _run_tasks([("quantum", point, config.quantum, config.seed) for point in points], workers)
        for record, (values, failure, elapsed) in zip(records, outcomes):
            _merge(record, values, failure, elapsed)

    if config.classical.run_classical:
        keys = list(dict.fromkeys(tuple(point[a] for a in CLASSICAL_AXES) for point in points))
        tasks = [("classical", dict(zip(CLASSICAL_AXES, key)), config.classical, config.seed) for key in keys]
        by_key = dict(zip(keys, _run_tasks(tasks, workers)))
        for record, point in zip(records, points):
            values, failure, elapsed = by_key[tuple(point[a] for a in CLASSICAL_AXES)]
            _merge(record, values, failure, elapsed)

    result = SweepResult(config=config, records=records, wall_time=time.perf_counter() - started)
    logger.info(f"=== Sweep complete: {len(result)} records, {result.n_failed} failed, {result.wall_time:.1f}s ===")
    return result


def _merge(record: SweepRecord, values: Dict, failure: Optional[Tuple[str, str]], elapsed: float) -> None:
    record.wall_time += elapsed
    if failure is not None:
        error_type, message = failure
        record.status = "failed"
        # keep the first failure when both pipelines fail
        if record.error_type is None:
            record.error_type, record.error = error_type, message
        return
    for name, value in values.items():
        setattr(record, name, value)
