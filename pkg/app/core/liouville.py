"""Superoperators of the dissipative kicked top and their complex spectra.

Vectorization convention (row stacking, numpy C order): for a d x d operator,
vec(rho)[a * d + b] = rho[a, b], so vec(A rho B) = (A kron B^T) vec(rho).
The Liouville basis element a * d + b is |m_a><m_b| with m ascending, and its
coherence order is q = a - b.
"""
from typing import List, Tuple
import logging

import numpy as np
import scipy.linalg

from app.core.constants import DEFAULT_EPSILON, GAMMA_VALIDATED_MAX
from app.core.errors import NumericalError
from app.core.spin_ops import (
    SpinLike,
    as_spin,
    build_jminus,
    build_jplus,
    kick_hamiltonian,
    precession_hamiltonian,
)
from app.models.quantum import ComplexSpectrum, ModelParams, validate_sector

logger = logging.getLogger(__name__)

BRANCH_CUT_TOL = 1e-8


def _check_square(op: np.ndarray, name: str = "operator") -> int:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {op.shape}")
    return op.shape[0]


def vectorize(rho: np.ndarray) -> np.ndarray:
    _check_square(rho, "rho")
    return np.asarray(rho, dtype=complex).reshape(-1)


def devectorize(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec)
    if vec.ndim != 1:
        raise ValueError("Liouville vector must be one-dimensional")
    dim = int(round(np.sqrt(vec.size)))
    if dim * dim != vec.size:
        raise ValueError(f"Length {vec.size} is not a perfect square")
    return vec.reshape(dim, dim)


def left_multiplication(op: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> op rho."""
    dim = _check_square(op)
    return np.kron(op, np.eye(dim))


def right_multiplication(op: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> rho op."""
    dim = _check_square(op)
    return np.kron(np.eye(dim), np.asarray(op).T)


def commutator_superop(hamiltonian: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> [H, rho]."""
    return left_multiplication(hamiltonian) - right_multiplication(hamiltonian)


def conjugation_superop(unitary: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> U rho U^dagger, lifted from the Hilbert-space matrix."""
    _check_square(unitary, "unitary")
    unitary = np.asarray(unitary, dtype=complex)
    return np.kron(unitary, unitary.conj())


def trace_vector(dim: int) -> np.ndarray:
    """vec(I); its inner product with vec(rho) is Tr(rho)."""
    return vectorize(np.eye(dim, dtype=complex))


def dissipator_superop(j: SpinLike, gamma: float) -> np.ndarray:
    """Superradiant dissipator (gamma / 2j)(2 J- rho J+ - {J+ J-, rho})."""
    if gamma < 0:
        raise ValueError(f"Dissipation strength must be non-negative, got {gamma}")
    spin = as_spin(j)
    jp = build_jplus(spin)
    jm = build_jminus(spin)
    jpjm = jp @ jm
    jump = np.kron(jm, jp.T)
    super_op = 2 * jump - left_multiplication(jpjm) - right_multiplication(jpjm)
    return (gamma / (2 * spin.j)) * super_op


def matrix_exponential(matrix: np.ndarray) -> np.ndarray:
    """exp(M) by scaling and squaring with a Pade approximant."""
    _check_square(matrix)
    matrix = np.asarray(matrix)
    if not np.all(np.isfinite(matrix)):
        raise NumericalError("Cannot exponentiate a matrix with non-finite entries")
    result = scipy.linalg.expm(matrix)
    if not np.all(np.isfinite(result)):
        raise NumericalError("Matrix exponential produced non-finite entries")
    return result


def coherence_blocks(dim: int) -> List[np.ndarray]:
    """Liouville indices grouped by coherence order q = a - b, for q = -(d-1) .. d-1."""
    a, b = np.divmod(np.arange(dim * dim), dim)
    order = a - b
    return [np.flatnonzero(order == q) for q in range(-(dim - 1), dim)]


def generator_exponential(generator: np.ndarray, dim: int) -> np.ndarray:
    """exp(G) for a generator that conserves the coherence order a - b.

    Both the superradiant dissipator and the commutator with a diagonal H0 shift
    |m><m'| only along m - m' = const, so exp(G) is the direct sum of the
    exponentials of its coherence blocks.
    """
    residual = np.array(generator, dtype=complex)
    result = np.zeros_like(residual)
    for block in coherence_blocks(dim):
        cells = np.ix_(block, block)
        result[cells] = matrix_exponential(residual[cells])
        residual[cells] = 0
    leakage = np.linalg.norm(residual)
    if leakage > 1e-12 * max(1.0, np.linalg.norm(generator)):
        raise NumericalError(f"Generator does not conserve coherence order (leakage {leakage:.3e})")
    return result


def parity_split_exponential(hamiltonian: np.ndarray, factor: complex = -1j) -> np.ndarray:
    """exp(factor * H) for a Hermitian H that commutes with parity.

    Even and odd basis indices are exponentiated separately, so the result has
    exact zeros between the two parity classes.
    """
    dim = _check_square(hamiltonian)
    index = np.arange(dim)
    result = np.zeros((dim, dim), dtype=complex)
    for cls in (index[index % 2 == 0], index[index % 2 == 1]):
        if cls.size:
            result[np.ix_(cls, cls)] = matrix_exponential(factor * hamiltonian[np.ix_(cls, cls)])
    return result


def kick_unitary(j: SpinLike, k1: float) -> np.ndarray:
    """exp(-i H1) with H1 = (k1 / 2j) J_y^2."""
    return parity_split_exponential(kick_hamiltonian(j, k1))


def precession_unitary(j: SpinLike, p: float, k0: float) -> np.ndarray:
    """exp(-i H0), diagonal."""
    return np.diag(np.exp(-1j * np.diag(precession_hamiltonian(j, p, k0)).real))


def isolated_floquet(j: SpinLike, p: float, k0: float, k1: float) -> np.ndarray:
    """F = exp(-i H1) exp(-i H0)."""
    return kick_unitary(j, k1) @ precession_unitary(j, p, k0)


def _warn_regime(params: ModelParams) -> None:
    if params.gamma > GAMMA_VALIDATED_MAX:
        logger.warning(
            f"gamma={params.gamma} is above {GAMMA_VALIDATED_MAX}: eigenvalues collapse towards "
            "the origin and fall below machine precision"
        )


def free_generator(params: ModelParams) -> np.ndarray:
    """Lambda - i L0, the inter-kick generator."""
    spin = params.spin
    h0 = precession_hamiltonian(spin, params.p, params.k0)
    return dissipator_superop(spin, params.gamma) - 1j * commutator_superop(h0)


def apply_conjugation(unitary: np.ndarray, superop: np.ndarray) -> np.ndarray:
    """conjugation_superop(U) @ S, computed in Hilbert space column by column."""
    dim = _check_square(unitary, "unitary")
    columns = np.ascontiguousarray(superop.T).reshape(-1, dim, dim)
    conjugated = unitary @ columns @ unitary.conj().T
    return conjugated.reshape(-1, dim * dim).T


def dissipative_floquet(params: ModelParams) -> np.ndarray:
    """D = exp(-i L1) exp(Lambda - i L0), the one-period dissipative propagator."""
    _warn_regime(params)
    spin = params.spin
    logger.info(f"Building dissipative Floquet operator at {params}")
    free = generator_exponential(free_generator(params), spin.dim)
    return apply_conjugation(kick_unitary(spin, params.k1), free)


def decoupled_floquet(params: ModelParams) -> np.ndarray:
    """D~ = exp(Lambda) U_F: unitary kicked-top step followed by pure dissipation."""
    _warn_regime(params)
    spin = params.spin
    logger.info(f"Building decoupled Floquet operator at {params}")
    floquet = isolated_floquet(spin, params.p, params.k0, params.k1)
    damping = generator_exponential(dissipator_superop(spin, params.gamma), spin.dim)
    unitary_step = conjugation_superop(floquet)
    result = np.empty_like(unitary_step)
    for block in coherence_blocks(spin.dim):
        result[block, :] = damping[np.ix_(block, block)] @ unitary_step[block, :]
    return result


def parity_liouville_indices(j: SpinLike) -> Tuple[np.ndarray, np.ndarray]:
    """Liouville indices of |m><m'| with (-1)^(m - m') = +1 and -1."""
    dim = as_spin(j).dim
    a, b = np.divmod(np.arange(dim * dim), dim)
    even = (a - b) % 2 == 0
    return np.flatnonzero(even), np.flatnonzero(~even)


def sector_dimensions(j: SpinLike) -> Tuple[int, int]:
    """Block dimensions of the positive and negative parity sectors, without building them."""
    dim = as_spin(j).dim
    positive = (dim * dim + 1) // 2 if dim % 2 else dim * dim // 2
    return positive, dim * dim - positive


def off_block_norm(superop: np.ndarray, j: SpinLike) -> float:
    positive, negative = parity_liouville_indices(j)
    upper = np.linalg.norm(superop[np.ix_(positive, negative)])
    lower = np.linalg.norm(superop[np.ix_(negative, positive)])
    return float(np.hypot(upper, lower))


def parity_sectors(superop: np.ndarray, j: SpinLike, tol: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """Split a parity-covariant superoperator into its positive and negative blocks."""
    spin = as_spin(j)
    size = _check_square(superop, "superoperator")
    if size != spin.dim ** 2:
        raise ValueError(f"Superoperator of size {size} does not match j={spin.j}")
    leak = off_block_norm(superop, spin)
    if leak >= tol:
        raise NumericalError(f"Superoperator is not block diagonal in parity (off-block norm {leak:.3e})")
    positive, negative = parity_liouville_indices(spin)
    return superop[np.ix_(positive, positive)], superop[np.ix_(negative, negative)]


def eigenphases(eigenvalues: np.ndarray) -> np.ndarray:
    """Principal logarithm ln|lambda| + i Arg(lambda) with Arg in (-pi, pi]."""
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    angle = np.angle(eigenvalues)
    angle = np.where(angle <= -np.pi, np.pi, angle)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(eigenvalues)) + 1j * angle


def spectrum(superop: np.ndarray, j: SpinLike = None, sector: str = "full") -> ComplexSpectrum:
    """Complex eigenvalues and eigenphases of a superoperator, optionally one parity block."""
    sector = validate_sector(sector)
    matrix = np.asarray(superop)
    if sector != "full":
        if j is None:
            raise ValueError("j is required to restrict the spectrum to a parity sector")
        positive, negative = parity_sectors(matrix, j)
        matrix = positive if sector == "positive" else negative
    if not np.all(np.isfinite(matrix)):
        raise NumericalError("Cannot diagonalize a matrix with non-finite entries")
    logger.info(f"Diagonalizing {matrix.shape[0]}x{matrix.shape[0]} block ({sector} sector)")
    try:
        values = scipy.linalg.eigvals(matrix, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Eigensolver did not converge: {e}") from e
    near_cut = int(np.sum((values.real < 0) & (np.abs(values.imag) < BRANCH_CUT_TOL)))
    if near_cut:
        logger.warning(f"{near_cut} eigenvalues lie within {BRANCH_CUT_TOL} of the negative real axis")
    return ComplexSpectrum(
        eigenvalues=values,
        eigenphases=eigenphases(values),
        parity_sector=sector,
        n_branch_cut=near_cut,
    )


def precision_filter(spec: ComplexSpectrum, epsilon: float = DEFAULT_EPSILON) -> Tuple[ComplexSpectrum, float]:
    """Drop eigenvalues with modulus below epsilon; returns the kept spectrum and N_eps / N."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    total = len(spec)
    if total == 0:
        return spec, 0.0
    keep = np.abs(spec.eigenvalues) >= epsilon
    n_dropped = int(total - np.count_nonzero(keep))
    kept = ComplexSpectrum(
        eigenvalues=spec.eigenvalues[keep],
        eigenphases=spec.eigenphases[keep],
        parity_sector=spec.parity_sector,
        n_filtered=spec.n_filtered + n_dropped,
        n_branch_cut=spec.n_branch_cut,
    )
    return kept, n_dropped / total


def floquet_spectrum(params: ModelParams, sector: str = "positive", variant: str = "exact",
                     epsilon: float = DEFAULT_EPSILON) -> Tuple[ComplexSpectrum, float]:
    """Build D (or D~), restrict to a parity sector, diagonalize and filter."""
    if variant == "exact":
        superop = dissipative_floquet(params)
    elif variant == "decoupled":
        superop = decoupled_floquet(params)
    else:
        raise ValueError(f"Unknown Floquet variant: {variant}")
    return precision_filter(spectrum(superop, params.j, sector), epsilon)


def isolated_eigenphases(j: SpinLike, p: float, k0: float, k1: float, sector: str = "positive") -> np.ndarray:
    """Sorted real eigenphases of the isolated Floquet operator in one parity sector."""
    sector = validate_sector(sector)
    spin = as_spin(j)
    floquet = isolated_floquet(spin, p, k0, k1)
    index = np.arange(spin.dim)
    if sector == "positive":
        index = index[index % 2 == 0]
    elif sector == "negative":
        index = index[index % 2 == 1]
    try:
        values = scipy.linalg.eigvals(floquet[np.ix_(index, index)])
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Eigensolver did not converge: {e}") from e
    return np.sort(np.angle(values))
