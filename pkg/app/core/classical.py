"""Mean-field dynamics of the dissipative kicked top on the Bloch sphere.

States are unit vectors J = (J_x, J_y, J_z). Every map works on a batch of
shape (N, 3); tangent vectors ride along as (N, K, 3) arrays. One period is
the inter-kick flow followed by the kick (the coupled description) unless a
different map variant is requested.
"""
from concurrent.futures import ProcessPoolExecutor
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from scipy.spatial import cKDTree

from app.core.errors import NumericalError
from app.models.classical import (
    DEFAULT_H_TOL,
    DEFAULT_N_PERIODS,
    DEFAULT_TRANSIENT,
    NORM_TOL,
    AttractorMetrics,
    BlochVector,
    ClassicalParams,
    GridMetrics,
    GridSpec,
    LyapunovSpectrum,
    PhasePoint,
    validate_map_variant,
    validate_periods,
)

logger = logging.getLogger(__name__)

StateLike = Union[BlochVector, Sequence[float], np.ndarray]

TANGENT_FLOOR = 1e-300
HAUSDORFF_EPS_RANGE = (2 ** -5.05, 2 ** -3)
MIN_BOX_COUNT_POINTS = 100_000
_GRID_CHUNK = 64
_POLE_TOL = 1e-30


class BoxCountFit(NamedTuple):
    dimension: float
    residual: float
    eps: np.ndarray
    counts: np.ndarray


class BifurcationSlice(NamedTuple):
    gamma: float
    jy: np.ndarray
    has_attractor: bool


# ---------------------------------------------------------------- inputs


def _as_states(x: StateLike) -> Tuple[np.ndarray, bool]:
    if isinstance(x, BlochVector):
        arr = x.as_array()
    else:
        arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"Bloch vectors must have shape (3,) or (N, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Bloch vectors must be finite")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(np.abs(norms - 1.0) > NORM_TOL):
        raise ValueError(f"Bloch vectors must have unit length (max deviation {np.max(np.abs(norms - 1.0)):.3e})")
    return arr.copy(), single


def _restore(states: np.ndarray, single: bool) -> np.ndarray:
    return states[0] if single else states


def _renormalize(states: np.ndarray) -> np.ndarray:
    return states / np.linalg.norm(states, axis=1, keepdims=True)


def _check_finite(states: np.ndarray) -> None:
    if not np.all(np.isfinite(states)):
        raise NumericalError("Classical state became non-finite")


# ---------------------------------------------------------------- map pieces


def _propagate(jac: np.ndarray, tangents: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if tangents is None:
        return None
    return np.einsum("nij,nkj->nki", jac, tangents)


def _twist(states, angle, tangents=None, angle_grad=None, grad_source=None):
    """Rotate about z by a per-state angle.

    The angle depends on the z component of grad_source (the tangents the angle
    was computed from), contributing angle_grad * dz along the azimuthal direction.
    """
    c, s = np.cos(angle), np.sin(angle)
    out = np.empty_like(states)
    out[:, 0] = c * states[:, 0] - s * states[:, 1]
    out[:, 1] = s * states[:, 0] + c * states[:, 1]
    out[:, 2] = states[:, 2]
    if tangents is None:
        return out, None
    rotated = np.empty_like(tangents)
    rotated[..., 0] = c[:, None] * tangents[..., 0] - s[:, None] * tangents[..., 1]
    rotated[..., 1] = s[:, None] * tangents[..., 0] + c[:, None] * tangents[..., 1]
    rotated[..., 2] = tangents[..., 2]
    if angle_grad is not None:
        shift = angle_grad[:, None] * grad_source[..., 2]
        rotated[..., 0] -= shift * out[:, None, 1]
        rotated[..., 1] += shift * out[:, None, 0]
    return out, rotated


def _kick(states, k1, tangents=None):
    """Rotation about y by k1 * J_y."""
    angle = k1 * states[:, 1]
    c, s = np.cos(angle), np.sin(angle)
    out = np.empty_like(states)
    out[:, 0] = c * states[:, 0] + s * states[:, 2]
    out[:, 1] = states[:, 1]
    out[:, 2] = -s * states[:, 0] + c * states[:, 2]
    if tangents is None:
        return out, None
    jac = np.zeros((len(states), 3, 3))
    jac[:, 0, 0] = c
    jac[:, 0, 1] = k1 * out[:, 2]
    jac[:, 0, 2] = s
    jac[:, 1, 1] = 1.0
    jac[:, 2, 0] = -s
    jac[:, 2, 1] = -k1 * out[:, 0]
    jac[:, 2, 2] = c
    return out, _propagate(jac, tangents)


def _dissipate(states, gamma, tangents=None):
    """Closed-form solution of the pure dissipation flow over one period (gamma < 0 runs it backwards)."""
    c, s = np.cosh(gamma), np.sinh(gamma)
    den = c - s * states[:, 2]
    out = np.empty_like(states)
    out[:, 0] = states[:, 0] / den
    out[:, 1] = states[:, 1] / den
    out[:, 2] = (c * states[:, 2] - s) / den
    if tangents is None:
        return out, None, den
    jac = np.zeros((len(states), 3, 3))
    jac[:, 0, 0] = 1.0 / den
    jac[:, 0, 2] = states[:, 0] * s / den ** 2
    jac[:, 1, 1] = 1.0 / den
    jac[:, 1, 2] = states[:, 1] * s / den ** 2
    jac[:, 2, 2] = 1.0 / den ** 2
    return out, _propagate(jac, tangents), den


def _flow_exact(states, params: ClassicalParams, tangents=None):
    """Inter-kick flow from its closed form.

    J_z evolves on its own as tanh(artanh(J_z) - gamma t), the dissipation moves
    (J_x, J_y) radially, and the azimuth advances by p + k0 * int J_z dt, which
    equals p - (k0 / gamma) ln(cosh gamma - J_z sinh gamma).
    """
    if params.gamma == 0:
        angle = params.p + params.k0 * states[:, 2]
        grad = np.full(len(states), params.k0)
        return _twist(states, angle, tangents, grad, tangents)
    damped, damped_tangents, den = _dissipate(states, params.gamma, tangents)
    angle = params.p - (params.k0 / params.gamma) * np.log(den)
    grad = params.k0 * np.sinh(params.gamma) / (params.gamma * den)
    return _twist(damped, angle, damped_tangents, grad, tangents)


def _flow_field(states, params: ClassicalParams):
    jx, jy, jz = states[:, 0], states[:, 1], states[:, 2]
    omega = params.p + params.k0 * jz
    g = params.gamma
    return np.stack([-omega * jy + g * jx * jz, omega * jx + g * jy * jz, -g * (jx ** 2 + jy ** 2)], axis=1)


def _flow_jacobian(states, params: ClassicalParams):
    jx, jy, jz = states[:, 0], states[:, 1], states[:, 2]
    omega = params.p + params.k0 * jz
    g, k0 = params.gamma, params.k0
    jac = np.zeros((len(states), 3, 3))
    jac[:, 0, 0] = g * jz
    jac[:, 0, 1] = -omega
    jac[:, 0, 2] = -k0 * jy + g * jx
    jac[:, 1, 0] = omega
    jac[:, 1, 1] = g * jz
    jac[:, 1, 2] = k0 * jx + g * jy
    jac[:, 2, 0] = -2 * g * jx
    jac[:, 2, 1] = -2 * g * jy
    return jac


def _flow_rk4(states, params: ClassicalParams, tangents=None):
    """Fixed-step RK4 over one period, with the variational equations when tangents are given."""
    h = 1.0 / params.n_steps

    def rhs(x, t):
        dx = _flow_field(x, params)
        dt = None if t is None else _propagate(_flow_jacobian(x, params), t)
        return dx, dt

    x, t = states, tangents
    for _ in range(params.n_steps):
        k1x, k1t = rhs(x, t)
        k2x, k2t = rhs(x + 0.5 * h * k1x, None if t is None else t + 0.5 * h * k1t)
        k3x, k3t = rhs(x + 0.5 * h * k2x, None if t is None else t + 0.5 * h * k2t)
        k4x, k4t = rhs(x + h * k3x, None if t is None else t + h * k3t)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        if t is not None:
            t = t + (h / 6.0) * (k1t + 2 * k2t + 2 * k3t + k4t)
    return x, t


def _flow(states, params: ClassicalParams, tangents=None):
    if params.method == "rk4":
        return _flow_rk4(states, params, tangents)
    return _flow_exact(states, params, tangents)


def _isolated(states, p, k0, k1, tangents=None):
    # R(p) and R(k0 J_z) share the z axis and J_z is unchanged by either, so they compose into one twist
    angle = p + k0 * states[:, 2]
    grad = np.full(len(states), float(k0))
    twisted, twisted_tangents = _twist(states, angle, tangents, grad, tangents)
    return _kick(twisted, k1, twisted_tangents)


def _step(states, params: ClassicalParams, variant: str, tangents=None):
    """One period of the chosen map, without renormalization."""
    if variant == "coupled":
        flowed, flowed_tangents = _flow(states, params, tangents)
        return _kick(flowed, params.k1, flowed_tangents)
    kicked, kicked_tangents = _isolated(states, params.p, params.k0, params.k1, tangents)
    if variant == "isolated":
        return kicked, kicked_tangents
    damped, damped_tangents, _ = _dissipate(kicked, params.gamma, kicked_tangents)
    return damped, damped_tangents


def _advance(states, params: ClassicalParams, variant: str, tangents=None):
    states, tangents = _step(states, params, variant, tangents)
    _check_finite(states)
    return _renormalize(states), tangents


# ---------------------------------------------------------------- public maps


def integrate_flow(x: StateLike, params: ClassicalParams, renormalize: bool = True) -> np.ndarray:
    """Inter-kick flow over one period; renormalize=False exposes the integrator's norm drift."""
    states, single = _as_states(x)
    out, _ = _flow(states, params)
    _check_finite(out)
    return _restore(_renormalize(out) if renormalize else out, single)


def flow_period(x: StateLike, params: ClassicalParams) -> np.ndarray:
    return integrate_flow(x, params)


def kick_map(x: StateLike, k1: float) -> np.ndarray:
    states, single = _as_states(x)
    out, _ = _kick(states, float(k1))
    return _restore(out, single)


def stroboscopic_map(x: StateLike, params: ClassicalParams) -> np.ndarray:
    """kick_map after flow_period: the coupled-dissipation map."""
    states, single = _as_states(x)
    out, _ = _advance(states, params, "coupled")
    return _restore(out, single)


def isolated_map(x: StateLike, p: float, k0: float, k1: float) -> np.ndarray:
    """R(Omega_1) R(Omega_0) R(p) x with Omega_0 = k0 J_z and Omega_1 = k1 times the twisted J_y."""
    states, single = _as_states(x)
    out, _ = _isolated(states, float(p), float(k0), float(k1))
    return _restore(out, single)


def dissipation_map(x: StateLike, gamma: float) -> np.ndarray:
    if gamma < 0:
        raise ValueError(f"Dissipation strength must be non-negative, got {gamma}")
    states, single = _as_states(x)
    out, _, _ = _dissipate(states, float(gamma))
    return _restore(out, single)


def inverse_dissipation(x: StateLike, gamma: float) -> np.ndarray:
    """Undo one period of pure dissipation."""
    if gamma < 0:
        raise ValueError(f"Dissipation strength must be non-negative, got {gamma}")
    states, single = _as_states(x)
    out, _, _ = _dissipate(states, -float(gamma))
    return _restore(out, single)


def decoupled_map(x: StateLike, params: ClassicalParams) -> np.ndarray:
    """Isolated kicked-top map followed by one period of pure dissipation."""
    states, single = _as_states(x)
    out, _ = _advance(states, params, "decoupled")
    return _restore(out, single)


def apply_map(x: StateLike, params: ClassicalParams, map_variant: str = "coupled") -> np.ndarray:
    variant = validate_map_variant(map_variant)
    states, single = _as_states(x)
    out, _ = _advance(states, params, variant)
    return _restore(out, single)


# ---------------------------------------------------------------- chart


def to_plane(x) -> np.ndarray:
    """Equal-area chart centred on the south pole: Q^2 + P^2 = 2 (1 + J_z).

    The north pole maps to the boundary point (2, 0).
    """
    arr = x.as_array() if isinstance(x, BlochVector) else np.asarray(x, dtype=float)
    jx, jy, jz = arr[..., 0], arr[..., 1], arr[..., 2]
    rho_sq = jx ** 2 + jy ** 2
    safe = rho_sq > _POLE_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(safe, np.sqrt(2 * np.clip(1 + jz, 0, None) / np.where(safe, rho_sq, 1.0)), 0.0)
    q = np.where(safe, jx * factor, np.where(jz > 0, 2.0, 0.0))
    p = np.where(safe, -jy * factor, 0.0)
    return np.stack([q, p], axis=-1)


def to_sphere(pp) -> np.ndarray:
    arr = pp.as_array() if isinstance(pp, PhasePoint) else np.asarray(pp, dtype=float)
    q, p = arr[..., 0], arr[..., 1]
    r_sq = q ** 2 + p ** 2
    if np.any(r_sq > 4.0 + 1e-12):
        raise ValueError("Phase points must satisfy Q^2 + P^2 <= 4")
    factor = np.sqrt(np.clip(1 - r_sq / 4, 0, None))
    return np.stack([q * factor, -p * factor, r_sq / 2 - 1], axis=-1)


# ---------------------------------------------------------------- Lyapunov spectra


def _tangent_basis(states: np.ndarray) -> np.ndarray:
    """Orthonormal pair spanning the tangent plane at each state."""
    reference = np.zeros_like(states)
    near_pole = np.abs(states[:, 2]) > 0.9
    reference[near_pole, 0] = 1.0
    reference[~near_pole, 2] = 1.0
    e1 = np.cross(states, reference)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(states, e1)
    return np.stack([e1, e2], axis=1)


def _reorthonormalize(states: np.ndarray, tangents: np.ndarray):
    # project onto the tangent plane of the sphere, then Gram-Schmidt via QR
    radial = np.einsum("nkj,nj->nk", tangents, states)
    tangents = tangents - radial[..., None] * states[:, None, :]
    q, r = np.linalg.qr(np.swapaxes(tangents, 1, 2))
    stretch = np.abs(np.diagonal(r, axis1=1, axis2=2))
    if np.any(stretch < TANGENT_FLOOR) or not np.all(np.isfinite(stretch)):
        raise NumericalError("Tangent vectors collapsed during reorthonormalization")
    return np.swapaxes(q, 1, 2), stretch


def lyapunov_spectra(x0, params: ClassicalParams, n_periods: int = DEFAULT_N_PERIODS,
                     transient: int = DEFAULT_TRANSIENT, map_variant: str = "coupled") -> np.ndarray:
    """(h1, h2) for a batch of initial conditions, shape (N, 2), sorted descending per row."""
    validate_periods(n_periods, transient)
    variant = validate_map_variant(map_variant)
    states, _ = _as_states(x0)
    tangents = _tangent_basis(states)
    log_stretch = np.zeros((len(states), 2))
    for period in range(transient + n_periods):
        states, tangents = _advance(states, params, variant, tangents)
        tangents, stretch = _reorthonormalize(states, tangents)
        if period >= transient:
            log_stretch += np.log(stretch)
    exponents = log_stretch / n_periods
    return -np.sort(-exponents, axis=1)


def lyapunov_spectrum(x0: StateLike, params: ClassicalParams, n_periods: int = DEFAULT_N_PERIODS,
                      transient: int = DEFAULT_TRANSIENT, map_variant: str = "coupled") -> LyapunovSpectrum:
    states, _ = _as_states(x0)
    if len(states) != 1:
        raise ValueError("lyapunov_spectrum takes a single initial condition")
    h1, h2 = lyapunov_spectra(states, params, n_periods, transient, map_variant)[0]
    return LyapunovSpectrum(h1=float(h1), h2=float(h2), n_periods=n_periods, transient=transient)


def contraction_rate(x0: StateLike, params: ClassicalParams, n_periods: int = DEFAULT_N_PERIODS,
                     transient: int = DEFAULT_TRANSIENT, map_variant: str = "coupled") -> float:
    """Time-averaged log area change per period along the orbit.

    Rotations and kicks preserve area on the sphere; one period of dissipation
    scales it by den^-2 with den = cosh gamma - J_z sinh gamma at its input.
    Equals h1 + h2 up to finite-time error.
    """
    validate_periods(n_periods, transient)
    variant = validate_map_variant(map_variant)
    states, _ = _as_states(x0)
    if len(states) != 1:
        raise ValueError("contraction_rate takes a single initial condition")
    if variant == "isolated" or params.gamma == 0:
        return 0.0
    total = 0.0
    for period in range(transient + n_periods):
        if variant == "coupled":
            z_in = states[:, 2]
        else:
            z_in = _isolated(states, params.p, params.k0, params.k1)[0][:, 2]
        if period >= transient:
            total += float(-2 * np.log(np.cosh(params.gamma) - np.sinh(params.gamma) * z_in[0]))
        states, _ = _advance(states, params, variant)
    return total / n_periods


def classify(x0: StateLike, params: ClassicalParams, n_periods: int = DEFAULT_N_PERIODS,
             transient: int = DEFAULT_TRANSIENT, h_tol: float = DEFAULT_H_TOL,
             map_variant: str = "coupled") -> int:
    spec = lyapunov_spectrum(x0, params, n_periods, transient, map_variant)
    return int(spec.h1 > h_tol)


def _kaplan_yorke(h1: np.ndarray, h2: np.ndarray, h_tol: float) -> np.ndarray:
    h1 = np.where(np.abs(h1) < h_tol, 0.0, h1)
    h2 = np.where(np.abs(h2) < h_tol, 0.0, h2)
    total = h1 + h2
    total = np.where(np.abs(total) < h_tol, 0.0, total)
    with np.errstate(divide="ignore", invalid="ignore"):
        one = 1.0 + np.where(h2 != 0, h1 / np.abs(h2), 0.0)
    dim = np.where(h1 < 0, 0.0, np.where(total >= 0, 2.0, one))
    return np.clip(dim, 0.0, 2.0)


def lyapunov_dimension(spec: LyapunovSpectrum, h_tol: float = DEFAULT_H_TOL) -> float:
    """Kaplan-Yorke dimension of a two-exponent spectrum, in [0, 2].

    Exponents within h_tol of zero count as zero, so a limit cycle gives 1.
    """
    return float(_kaplan_yorke(np.array([spec.h1]), np.array([spec.h2]), h_tol)[0])


def attractor_metrics(spec: LyapunovSpectrum, h_tol: float = DEFAULT_H_TOL,
                      d_hausdorff: Optional[float] = None) -> AttractorMetrics:
    return AttractorMetrics(
        upsilon=int(spec.h1 > h_tol),
        d_lyapunov=lyapunov_dimension(spec, h_tol),
        d_hausdorff=d_hausdorff,
    )


# ---------------------------------------------------------------- grids


def initial_grid(grid_spec: Optional[GridSpec] = None) -> np.ndarray:
    """Square lattice of (Q, P) points inside the open disk, Q varying fastest."""
    grid_spec = grid_spec or GridSpec()
    pitch = grid_spec.pitch
    half = int(np.floor(2.0 / pitch))
    axis = pitch * np.arange(-half, half + 1)
    q, p = np.meshgrid(axis, axis, indexing="xy")
    points = np.column_stack([q.ravel(), p.ravel()])
    points = points[points[:, 0] ** 2 + points[:, 1] ** 2 < 4.0]
    if len(points) == 0:
        raise ValueError("Initial-condition grid is empty")
    return points


def _grid_chunk(args):
    starts, params, n_periods, transient, variant = args
    return lyapunov_spectra(starts, params, n_periods, transient, variant)


def grid_metrics(params: ClassicalParams, grid_spec: Optional[GridSpec] = None,
                 n_periods: int = DEFAULT_N_PERIODS, transient: int = DEFAULT_TRANSIENT,
                 h_tol: float = DEFAULT_H_TOL, map_variant: str = "coupled",
                 workers: Optional[int] = None) -> GridMetrics:
    """Lyapunov spectra, chaos flags and dimensions for every lattice point.

    The lattice is cut into fixed-size chunks whatever the worker count, so the
    numbers do not depend on how many processes ran them.
    """
    variant = validate_map_variant(map_variant)
    points = initial_grid(grid_spec)
    starts = _renormalize(to_sphere(points))
    tasks = [(starts[i:i + _GRID_CHUNK], params, n_periods, transient, variant)
             for i in range(0, len(starts), _GRID_CHUNK)]
    logger.info(f"=== Starting grid scan: {len(points)} initial conditions, {variant} map, {params} ===")
    if workers is not None and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(_grid_chunk, tasks))
    else:
        chunks = [_grid_chunk(task) for task in tasks]
    spectra = np.concatenate(chunks, axis=0)
    h1, h2 = spectra[:, 0], spectra[:, 1]
    metrics = GridMetrics(
        points=points,
        h1=h1,
        h2=h2,
        upsilon=(h1 > h_tol).astype(int),
        d_lyapunov=_kaplan_yorke(h1, h2, h_tol),
    )
    logger.info(f"Grid scan done: f_c={metrics.chaotic_fraction:.4f}, mean D_L={metrics.mean_d_lyapunov:.4f}")
    return metrics


def chaotic_fraction(params: ClassicalParams, grid_spec: Optional[GridSpec] = None, **kwargs) -> float:
    """Fraction of lattice initial conditions with h1 > h_tol (f_c, or mu_c when gamma = 0)."""
    return grid_metrics(params, grid_spec, **kwargs).chaotic_fraction


# ---------------------------------------------------------------- attractors


def random_states(n: int, seed: int) -> np.ndarray:
    """n points uniform on the sphere (uniform in the (Q, P) disk)."""
    rng = np.random.default_rng(seed)
    jz = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(-np.pi, np.pi, n)
    rho = np.sqrt(1 - jz ** 2)
    return _renormalize(np.column_stack([rho * np.cos(phi), rho * np.sin(phi), jz]))


def trajectory(x0: StateLike, params: ClassicalParams, n_periods: int, transient: int = 0,
               map_variant: str = "coupled") -> np.ndarray:
    """Stroboscopic states after each period, shape (n_periods, N, 3)."""
    if n_periods < 1 or transient < 0:
        raise ValueError("n_periods must be positive and transient non-negative")
    variant = validate_map_variant(map_variant)
    states, _ = _as_states(x0)
    for _ in range(transient):
        states, _ = _advance(states, params, variant)
    record = np.empty((n_periods,) + states.shape)
    for period in range(n_periods):
        states, _ = _advance(states, params, variant)
        record[period] = states
    return record


def attractor_points(params: ClassicalParams, n_trajectories: int = 1000, n_periods: int = 1000,
                     transient: int = 1000, seed: int = 0, map_variant: str = "coupled") -> np.ndarray:
    """(Q, P) samples of the asymptotic set reached from random starts."""
    starts = random_states(n_trajectories, seed)
    states = trajectory(starts, params, n_periods, transient, map_variant)
    return to_plane(states.reshape(-1, 3))


def hausdorff_dimension(points, eps_range: Tuple[float, float] = HAUSDORFF_EPS_RANGE,
                        n_eps: int = 8) -> BoxCountFit:
    """Box-counting dimension of planar points on a grid anchored at (-2, -2)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("Cannot box-count an empty point set")
    if n_eps < 8:
        raise ValueError("At least 8 cell sizes are needed for the fit")
    lo, hi = sorted(eps_range)
    if lo <= 0:
        raise ValueError("Cell sizes must be positive")
    if not np.all(np.isfinite(pts)):
        raise NumericalError("Trajectory contains non-finite points")
    if len(pts) < MIN_BOX_COUNT_POINTS:
        logger.warning(f"Box counting {len(pts)} points; below {MIN_BOX_COUNT_POINTS} the small cells are undersampled")
    eps = np.geomspace(hi, lo, n_eps)
    counts = np.empty(n_eps, dtype=np.int64)
    for i, size in enumerate(eps):
        cells = np.floor((pts + 2.0) / size).astype(np.int64)
        side = int(np.ceil(4.0 / size)) + 2
        counts[i] = np.unique(cells[:, 0] * side + cells[:, 1]).size
    if np.all(counts == 1):
        logger.warning("All points fall in a single cell at every scale; reporting dimension 0")
        return BoxCountFit(0.0, 0.0, eps, counts)
    x, y = -np.log(eps), np.log(counts)
    coeffs = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - np.polyval(coeffs, x)) ** 2)))
    return BoxCountFit(float(coeffs[0]), residual, eps, counts)


def bifurcation_scan(params_base: ClassicalParams, gammas: Sequence[float], x0: Optional[StateLike] = None,
                     n_periods: int = 1000, n_record: int = 100, offset: float = 1e-9) -> List[BifurcationSlice]:
    """J_y over the last n_record periods for each dissipation strength.

    The default start is the south pole. It is an exact fixed point of every map,
    so it is displaced by offset along J_x to let unstable poles be left.
    """
    if not 0 < n_record <= n_periods:
        raise ValueError("n_record must lie in (0, n_periods]")
    if x0 is None:
        x0 = np.array([offset, 0.0, -np.sqrt(1 - offset ** 2)])
    slices = []
    for gamma in gammas:
        params = params_base.with_gamma(float(gamma))
        if params.gamma == 0:
            logger.warning("gamma=0 has no attractor; the scan records the conservative orbit")
        states = trajectory(x0, params, n_record, n_periods - n_record)
        slices.append(BifurcationSlice(params.gamma, states[:, 0, 1].copy(), params.gamma > 0))
    return slices


def poincare_section(initials, params: ClassicalParams, map_variant: str = "coupled",
                     n_periods: int = DEFAULT_N_PERIODS, transient: int = 0) -> np.ndarray:
    """(Q, P) after every period for each initial phase point, shape (N, n_periods, 2)."""
    pts = np.asarray([pp.as_array() if isinstance(pp, PhasePoint) else pp for pp in initials], dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("Initial conditions must be (Q, P) pairs")
    starts = _renormalize(to_sphere(pts))
    states = trajectory(starts, params, n_periods, transient, map_variant)
    return np.swapaxes(to_plane(states), 0, 1)


def set_distance(a, b) -> float:
    """Symmetric Hausdorff distance between two planar point sets."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("Point sets must be non-empty")
    forward, _ = cKDTree(b).query(a)
    backward, _ = cKDTree(a).query(b)
    return float(max(forward.max(), backward.max()))


def splitting_discrepancy(params: ClassicalParams, gammas: Sequence[float], starts=None,
                          seed: int = 0) -> Tuple[np.ndarray, float]:
    """Max single-period distance between coupled and decoupled maps, and its log-log order in gamma."""
    gammas = np.asarray(gammas, dtype=float)
    if np.any(gammas <= 0):
        raise ValueError("Dissipation strengths must be positive")
    states = random_states(10, seed) if starts is None else _as_states(starts)[0]
    discrepancy = np.empty(len(gammas))
    for i, gamma in enumerate(gammas):
        current = params.with_gamma(gamma)
        coupled, _ = _advance(states, current, "coupled")
        decoupled, _ = _advance(states, current, "decoupled")
        discrepancy[i] = np.max(np.linalg.norm(coupled - decoupled, axis=1))
    order = float(np.polyfit(np.log(gammas), np.log(discrepancy), 1)[0]) if len(gammas) > 1 else float("nan")
    return discrepancy, order
