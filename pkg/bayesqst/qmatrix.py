"""
Dense complex linear algebra for density matrices.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; the
``DensityMatrix`` and ``StateVector`` wrappers validate the physical
invariants once, at construction.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg

from bayesqst.exceptions import (
    DegenerateDecomposition,
    DimensionMismatch,
    InvalidDensityMatrix,
    NotHermitian,
    NotPSD,
)

ComplexMatrix = np.ndarray

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-12
PSD_ATOL = 1e-10
NORM_ATOL = 1e-12


def _as_square(m, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidDensityMatrix(f"{name} has non-finite entries")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    mat: np.ndarray

    def __post_init__(self):
        arr = _as_square(self.mat, "density matrix")
        check_density_matrix(arr)
        object.__setattr__(self, "mat", _frozen(arr))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def from_array(cls, arr, atol: float = HERMITIAN_ATOL) -> "DensityMatrix":
        """Validate with a looser tolerance, then snap to exact Hermiticity and unit trace."""
        arr = _as_square(arr, "density matrix")
        check_density_matrix(arr, hermitian_atol=atol, trace_atol=atol)
        snapped = 0.5 * (arr + arr.conj().T)
        return cls(snapped / np.trace(snapped).real)

    @classmethod
    def pure(cls, psi: "StateVector") -> "DensityMatrix":
        v = psi.amplitudes
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=np.complex128) / dim)


@dataclass(frozen=True)
class StateVector:
    """Unit-norm pure state."""

    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=np.complex128)
        if v.ndim != 1 or v.size < 1:
            raise DimensionMismatch(f"state vector must be one-dimensional, got shape {v.shape}")
        if abs(np.linalg.norm(v) - 1.0) > NORM_ATOL:
            raise InvalidDensityMatrix("state vector is not normalized")
        v = np.array(v, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.size


def check_density_matrix(
    arr: np.ndarray,
    hermitian_atol: float = HERMITIAN_ATOL,
    trace_atol: float = TRACE_ATOL,
    psd_atol: float = PSD_ATOL,
) -> None:
    """Raise InvalidDensityMatrix unless ``arr`` is a valid state."""
    asym = np.max(np.abs(arr - arr.conj().T))
    if asym > hermitian_atol:
        raise InvalidDensityMatrix(f"not Hermitian (max asymmetry {asym:.3e})")
    trace = np.trace(arr)
    if abs(trace - 1.0) > trace_atol:
        raise InvalidDensityMatrix(f"trace is {trace.real:.15g}, expected 1")
    min_eig = linalg.eigvalsh(0.5 * (arr + arr.conj().T))[0]
    if min_eig < -psd_atol:
        raise InvalidDensityMatrix(f"not positive semidefinite (min eigenvalue {min_eig:.3e})")


def qr_haar_correct(h: ComplexMatrix) -> ComplexMatrix:
    """
    Unitary factor of the QR decomposition with the phase correction
    U = Q diag(r_ii / |r_ii|), which makes U Haar-distributed when ``h``
    has i.i.d. standard complex Gaussian entries.

    Accepts a single matrix or a stack of shape (..., D, D).
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise DimensionMismatch(f"expected square matrices, got shape {h.shape}")
    q, r = np.linalg.qr(h)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    modulus = np.abs(diag)
    if np.any(modulus < 1e-300):
        raise DegenerateDecomposition("R factor has a vanishing diagonal entry")
    return q * (diag / modulus)[..., np.newaxis, :]


def hermitian_eig(m: ComplexMatrix) -> Tuple[np.ndarray, ComplexMatrix]:
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-10:
        raise NotHermitian("matrix is not Hermitian within 1e-10")
    return linalg.eigh(0.5 * (m + m.conj().T))


def hermitian_sqrt(m: ComplexMatrix) -> ComplexMatrix:
    """Principal square root of a Hermitian PSD matrix."""
    eigenvalues, vectors = hermitian_eig(m)
    if eigenvalues[0] < -PSD_ATOL:
        raise NotPSD(f"matrix has eigenvalue {eigenvalues[0]:.3e} < -1e-10")
    roots = np.sqrt(np.clip(eigenvalues, 0.0, None))
    s = (vectors * roots) @ vectors.conj().T
    return 0.5 * (s + s.conj().T)


def _check_same_dim(a, b) -> None:
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimension {a.dim} does not match {b.dim}")


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """(Tr sqrt(sqrt(a) b sqrt(a)))^2, clamped to [0, 1]."""
    _check_same_dim(a, b)
    root_a = hermitian_sqrt(a.mat)
    inner = root_a @ b.mat @ root_a
    eigenvalues = linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    value = float(np.sum(np.sqrt(np.clip(eigenvalues, 0.0, None))) ** 2)
    return min(max(value, 0.0), 1.0)


def frobenius_sq_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    _check_same_dim(a, b)
    return float(np.sum(np.abs(a.mat - b.mat) ** 2))


def expectation(rho: DensityMatrix, psi: StateVector) -> float:
    """Re <psi|rho|psi>, clamped to [0, 1]."""
    _check_same_dim(rho, psi)
    v = psi.amplitudes
    value = np.vdot(v, rho.mat @ v).real
    return min(max(float(value), 0.0), 1.0)


def purity(rho: DensityMatrix) -> float:
    """Tr(rho^2)."""
    return float(np.sum(np.abs(rho.mat) ** 2))
