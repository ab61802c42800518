"""Angular-momentum operators on the spin-j Hilbert space.

All matrices are dense complex (2j+1)x(2j+1) arrays in the ascending-m_z basis
documented on SpinQuantumNumber: row/column i holds m_z = -j + i.
"""
from typing import Tuple, Union
import logging

import numpy as np

from app.models.quantum import SpinQuantumNumber

logger = logging.getLogger(__name__)

SpinLike = Union[float, SpinQuantumNumber]


def as_spin(j: SpinLike) -> SpinQuantumNumber:
    return j if isinstance(j, SpinQuantumNumber) else SpinQuantumNumber(j)


def build_jz(j: SpinLike) -> np.ndarray:
    spin = as_spin(j)
    return np.diag(spin.m_values).astype(complex)


def build_jplus(j: SpinLike) -> np.ndarray:
    """Raising operator, <m+1|J+|m> = sqrt(j(j+1) - m(m+1))."""
    spin = as_spin(j)
    m = spin.m_values[:-1]
    ladder = np.sqrt(spin.j * (spin.j + 1) - m * (m + 1))
    return np.diag(ladder, k=-1).astype(complex)


def build_jminus(j: SpinLike) -> np.ndarray:
    return build_jplus(j).conj().T


def build_jx(j: SpinLike) -> np.ndarray:
    jp = build_jplus(j)
    return (jp + jp.conj().T) / 2


def build_jy(j: SpinLike) -> np.ndarray:
    jp = build_jplus(j)
    return (jp - jp.conj().T) / 2j


def build_parity(j: SpinLike) -> np.ndarray:
    # (-1)^(m_z + j) with m_z + j equal to the basis index
    spin = as_spin(j)
    signs = np.where(np.arange(spin.dim) % 2 == 0, 1.0, -1.0)
    return np.diag(signs).astype(complex)


def parity_indices(j: SpinLike) -> Tuple[np.ndarray, np.ndarray]:
    """Hilbert-space basis indices with parity +1 and -1."""
    spin = as_spin(j)
    index = np.arange(spin.dim)
    return index[index % 2 == 0], index[index % 2 == 1]


def kick_hamiltonian(j: SpinLike, k1: float) -> np.ndarray:
    """H1 = (k1 / 2j) J_y^2."""
    spin = as_spin(j)
    jy = build_jy(spin)
    return (k1 / (2 * spin.j)) * (jy @ jy)


def precession_hamiltonian(j: SpinLike, p: float, k0: float) -> np.ndarray:
    """H0 = p J_z + (k0 / 2j) J_z^2, diagonal in the m_z basis."""
    spin = as_spin(j)
    m = spin.m_values
    return np.diag(p * m + (k0 / (2 * spin.j)) * m ** 2).astype(complex)
