"""Spacing-ratio statistics and the random-matrix reference ensembles.

Complex spectra are compared through the nearest/next-nearest neighbour ratio,
which needs no unfolding. Real Floquet spectra use the consecutive-spacing ratio.
"""
from functools import lru_cache
from typing import Dict, Optional, Sequence
import logging

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.special
from scipy.spatial import cKDTree
from scipy.stats import unitary_group

from app.core.constants import (
    MIN_EIGS_FOR_NORMALIZED,
    NEG_COS_2DP,
    NEG_COS_GINUE,
    R_2DP,
    R_COE,
    R_GINUE,
    R_POISSON,
)
from app.core.errors import NumericalError
from app.core.liouville import isolated_eigenphases
from app.models.quantum import OracleRequest, RatioSample, RatioStatistics, RealRatioStatistics

logger = logging.getLogger(__name__)

DUPLICATE_TOL = 1e-14
_CHUNK = 512
_TIE_SLACK = 1e-9


def merge_duplicates(points: np.ndarray, tol: float = DUPLICATE_TOL):
    """Keep the lowest-index representative of every cluster closer than tol."""
    points = np.asarray(points, dtype=complex)
    if points.size < 2:
        return points, 0
    tree = cKDTree(np.column_stack([points.real, points.imag]))
    pairs = tree.query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return points, 0
    drop = np.unique(pairs.max(axis=1))
    keep = np.setdiff1d(np.arange(points.size), drop)
    return points[keep], int(drop.size)


def _neighbours_exhaustive(points: np.ndarray):
    n = points.size
    nn = np.empty(n, dtype=int)
    nnn = np.empty(n, dtype=int)
    for start in range(0, n, _CHUNK):
        rows = np.arange(start, min(start + _CHUNK, n))
        dist = np.abs(points[rows, None] - points[None, :])
        dist[np.arange(rows.size), rows] = np.inf
        # argmin returns the first occurrence, so ties go to the lower index
        first = np.argmin(dist, axis=1)
        dist[np.arange(rows.size), first] = np.inf
        nn[rows] = first
        nnn[rows] = np.argmin(dist, axis=1)
    return nn, nnn


def _neighbours_kdtree(points: np.ndarray):
    n = points.size
    xy = np.column_stack([points.real, points.imag])
    tree = cKDTree(xy)
    # self, nearest and next-nearest; duplicates are merged so self comes first
    dist, _ = tree.query(xy, k=3)
    # every point tied with the next-nearest lies inside this ball, so the
    # lowest-index members of a tie are always among the candidates
    radius = dist[:, 2] * (1 + _TIE_SLACK) + np.finfo(float).tiny
    balls = tree.query_ball_point(xy, r=radius)
    nn = np.empty(n, dtype=int)
    nnn = np.empty(n, dtype=int)
    for i in range(n):
        candidates = np.asarray(balls[i], dtype=int)
        candidates = candidates[candidates != i]
        # recompute distances exactly as the exhaustive search does and break ties by index
        order = np.lexsort((candidates, np.abs(points[candidates] - points[i])))
        nn[i], nnn[i] = candidates[order[0]], candidates[order[1]]
    return nn, nnn


def complex_spacing_ratios(phis: Sequence[complex], method: str = "exhaustive") -> RatioSample:
    """Z_k = (phi_NN - phi_k) / (phi_NNN - phi_k) for every eigenphase."""
    points, n_merged = merge_duplicates(np.asarray(phis, dtype=complex).ravel())
    if n_merged:
        logger.info(f"Merged {n_merged} duplicate eigenphases closer than {DUPLICATE_TOL}")
    if points.size < 3:
        raise ValueError(f"At least 3 distinct points are needed, got {points.size}")
    if method == "exhaustive":
        nn, nnn = _neighbours_exhaustive(points)
    elif method == "kdtree":
        nn, nnn = _neighbours_kdtree(points)
    else:
        raise ValueError(f"Unknown neighbour search method: {method}")
    denominator = points[nnn] - points
    if np.any(denominator == 0):
        raise NumericalError("Next-nearest neighbour at zero distance")
    ratio = (points[nn] - points) / denominator
    theta = np.angle(ratio)
    theta = np.where(theta <= -np.pi, np.pi, theta)
    return RatioSample(r=np.abs(ratio), theta=theta, n_merged=n_merged)


def normalized_complex_metrics(mean_r: float, mean_neg_cos: float):
    """(R_c, Theta_c): 0 for 2D Poisson, 1 for GinUE."""
    r_c = (mean_r - R_2DP) / (R_GINUE - R_2DP)
    # both references are stated for -<cos theta>, the sign cancels
    theta_c = (mean_neg_cos - NEG_COS_2DP) / (NEG_COS_GINUE - NEG_COS_2DP)
    return r_c, theta_c


def ratio_statistics(samples: RatioSample, min_count: int = MIN_EIGS_FOR_NORMALIZED) -> RatioStatistics:
    n = len(samples)
    if n == 0:
        raise ValueError("Cannot average an empty ratio sample")
    mean_r = float(np.mean(samples.r))
    mean_neg_cos = float(-np.mean(np.cos(samples.theta)))
    stats = RatioStatistics(mean_r=mean_r, mean_neg_cos=mean_neg_cos, n_samples=n)
    if n >= min_count:
        stats.R_c, stats.Theta_c = normalized_complex_metrics(mean_r, mean_neg_cos)
    else:
        logger.warning(f"Only {n} ratios: normalized metrics R_c and Theta_c are not reported")
    return stats


def pooled_ratio_statistics(samples: Sequence[RatioSample]) -> RatioStatistics:
    r = np.concatenate([s.r for s in samples])
    theta = np.concatenate([s.theta for s in samples])
    merged = sum(s.n_merged for s in samples)
    return ratio_statistics(RatioSample(r=r, theta=theta, n_merged=merged))


def _ginue_truncation(s: float) -> int:
    s2 = s * s
    return int(np.ceil(s2 + 10 * s + 20))


def ginue_pdf(s, kmax: Optional[int] = None):
    """GinUE nearest-neighbour spacing density.

    P(s) = prod_k Q(1+k, s^2) * sum_k 2 s^(2k+1) e^(-s^2) / (k! Q(1+k, s^2)),
    where Q is the regularized upper incomplete gamma function. Both the product
    and the sum run over k = 1..K with K chosen so the omitted factors equal 1
    to double precision.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0):
        raise ValueError("Spacing must be non-negative")
    out = np.zeros_like(s_arr)
    for i, value in enumerate(s_arr):
        if value == 0 or value > 25:
            continue
        k = np.arange(1, (kmax or _ginue_truncation(value)) + 1, dtype=float)
        s2 = value * value
        log_q = np.log(scipy.special.gammaincc(1 + k, s2))
        log_terms = np.log(2.0) + (2 * k + 1) * np.log(value) - s2 - scipy.special.gammaln(k + 1) - log_q
        out[i] = np.exp(np.sum(log_q) + scipy.special.logsumexp(log_terms))
    return out if np.ndim(s) else float(out[0])


@lru_cache(maxsize=None)
def ginue_first_moment() -> float:
    value, _ = scipy.integrate.quad(lambda x: x * ginue_pdf(x), 0, 12, limit=200)
    return value


def ginue_pdf_rescaled(s):
    """s_bar P(s_bar s), the density with unit mean spacing."""
    s_bar = ginue_first_moment()
    scaled = np.asarray(s, dtype=float) * s_bar
    return s_bar * ginue_pdf(scaled)


def poisson2d_pdf(s):
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("Spacing must be non-negative")
    return (np.pi / 2) * s_arr * np.exp(-np.pi * s_arr ** 2 / 4)


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def sample_ginibre_spectrum(n: int, seed: int) -> np.ndarray:
    """Eigenvalues of an n x n matrix with i.i.d. standard complex Gaussian entries."""
    if n < 16:
        raise ValueError("n must be at least 16")
    rng = _rng(seed)
    matrix = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    try:
        return scipy.linalg.eigvals(matrix)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Eigensolver did not converge: {e}") from e


def sample_poisson2d(n: int, seed: int) -> np.ndarray:
    """n i.i.d. uniform points in the unit square."""
    if n < 16:
        raise ValueError("n must be at least 16")
    rng = _rng(seed)
    return rng.random(n) + 1j * rng.random(n)


def sample_uniform_phases(n: int, seed: int) -> np.ndarray:
    """Sorted i.i.d. uniform phases on (-pi, pi], the uncorrelated real oracle."""
    if n < 16:
        raise ValueError("n must be at least 16")
    return np.sort(_rng(seed).uniform(-np.pi, np.pi, n))


def sample_coe_eigenphases(n: int, seed: int) -> np.ndarray:
    """Sorted eigenphases of U U^T for a Haar-random unitary U."""
    if n < 16:
        raise ValueError("n must be at least 16")
    haar = unitary_group.rvs(n, random_state=seed)
    try:
        values = scipy.linalg.eigvals(haar @ haar.T)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Eigensolver did not converge: {e}") from e
    return np.sort(np.angle(values))


def real_spacing_ratios(phis: Sequence[float]) -> np.ndarray:
    """min/max of consecutive spacings of the sorted phases."""
    phases = np.sort(np.asarray(phis, dtype=float).ravel())
    if phases.size < 3:
        raise ValueError(f"At least 3 eigenphases are needed, got {phases.size}")
    delta = np.diff(phases)
    lower = np.minimum(delta[1:], delta[:-1])
    upper = np.maximum(delta[1:], delta[:-1])
    defined = upper > 0
    if not np.all(defined):
        logger.warning(f"Dropped {np.count_nonzero(~defined)} ratios of two degenerate spacings")
    return lower[defined] / upper[defined]


def normalized_real_ratio(mean_r: float) -> float:
    """r_c: 0 for Poisson, 1 for COE."""
    if not 0 <= mean_r <= 1:
        raise ValueError(f"Mean ratio must lie in [0, 1], got {mean_r}")
    return (mean_r - R_POISSON) / (R_COE - R_POISSON)


def oracle_statistics(request: OracleRequest) -> Dict[str, object]:
    """Ratio statistics of a reference ensemble, pooled over n_seeds consecutive seeds."""
    seeds = range(request.seed, request.seed + request.n_seeds)
    if request.ensemble in ("ginue", "poisson2d"):
        sampler = sample_ginibre_spectrum if request.ensemble == "ginue" else sample_poisson2d
        stats = pooled_ratio_statistics([complex_spacing_ratios(sampler(request.n, s)) for s in seeds])
        return {
            "ensemble": request.ensemble,
            "mean_r": stats.mean_r,
            "mean_neg_cos": stats.mean_neg_cos,
            "R_c": stats.R_c,
            "Theta_c": stats.Theta_c,
            "reference_r": R_GINUE if request.ensemble == "ginue" else R_2DP,
            "n_samples": stats.n_samples,
        }
    sampler = sample_coe_eigenphases if request.ensemble == "coe" else sample_uniform_phases
    ratios = np.concatenate([real_spacing_ratios(sampler(request.n, s)) for s in seeds])
    mean_r = float(np.mean(ratios))
    return {
        "ensemble": request.ensemble,
        "mean_r": mean_r,
        "r_c": normalized_real_ratio(mean_r),
        "reference_r": R_COE if request.ensemble == "coe" else R_POISSON,
        "n_samples": int(len(ratios)),
    }


def isolated_ratio_statistics(j: float, p: float, k0: float, k1: float) -> RealRatioStatistics:
    """Spacing ratios of the isolated Floquet operator, pooled over both parity sectors."""
    ratios = np.concatenate([
        real_spacing_ratios(isolated_eigenphases(j, p, k0, k1, sector))
        for sector in ("positive", "negative")
    ])
    mean_r = float(np.mean(ratios))
    return RealRatioStatistics(mean_r=mean_r, r_c=normalized_real_ratio(mean_r), n_samples=len(ratios))
