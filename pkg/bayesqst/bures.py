"""
Bures-distributed density matrices from standard-normal parameter vectors.

A parameter vector x of length 4*D**2 is split into four row-major D x D
blocks: Re G, Im G, Re H, Im H. With U the phase-corrected unitary factor
of H, W = (U + I) G and rho(x) = W W^dagger / Tr(W W^dagger).
"""

import math
from typing import Tuple

import numpy as np

from bayesqst.exceptions import DegenerateState, DimensionMismatch, NonFiniteState
from bayesqst.qmatrix import DensityMatrix, qr_haar_correct

ParamVector = np.ndarray


def num_params(dim: int) -> int:
    return 4 * dim * dim


def dim_from_params(n: int) -> int:
    """Hilbert-space dimension D for a parameter count 4*D**2."""
    dim = math.isqrt(n // 4)
    if dim < 1 or 4 * dim * dim != n:
        raise DimensionMismatch(f"parameter length {n} is not 4*D^2")
    return dim


def check_params(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch(f"parameter vector must be one-dimensional, got shape {x.shape}")
    dim_from_params(x.size)
    if not np.all(np.isfinite(x)):
        raise NonFiniteState("parameter vector has non-finite entries")
    return x


def rho_stack(xs: np.ndarray) -> np.ndarray:
    """
    Map a stack of parameter vectors, shape (M, 4D^2), to density
    matrices, shape (M, D, D). No validation; used on the sampling path.
    """
    xs = np.asarray(xs, dtype=np.float64)
    m, n = xs.shape
    dim = dim_from_params(n)
    blocks = xs.reshape(m, 4, dim, dim)
    g = blocks[:, 0] + 1j * blocks[:, 1]
    h = blocks[:, 2] + 1j * blocks[:, 3]
    u = qr_haar_correct(h)
    w = (u + np.eye(dim)) @ g
    ww = w @ np.conj(np.swapaxes(w, -1, -2))
    ww = 0.5 * (ww + np.conj(np.swapaxes(ww, -1, -2)))
    traces = np.trace(ww, axis1=-2, axis2=-1).real
    if np.any(traces <= 1e-300):
        raise DegenerateState("Tr(W W^dagger) underflows; parameters are in a degenerate region")
    return ww / traces[:, np.newaxis, np.newaxis]


def rho_matrix(x: ParamVector) -> np.ndarray:
    """Unvalidated rho(x) as a raw array."""
    return rho_stack(np.asarray(x, dtype=np.float64)[np.newaxis, :])[0]


def rho_from_params(x: ParamVector) -> DensityMatrix:
    return DensityMatrix(rho_matrix(check_params(x)))


def sample_bures(dim: int, rng: np.random.Generator) -> Tuple[ParamVector, DensityMatrix]:
    """Draw x ~ N(0, I) and return (x, rho(x))."""
    if dim < 1:
        raise DimensionMismatch("dimension must be at least 1")
    x = rng.standard_normal(num_params(dim))
    return x, rho_from_params(x)


def sample_bures_batch(dim: int, size: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` parameter vectors row by row and their density matrices."""
    xs = rng.standard_normal((size, num_params(dim)))
    return xs, rho_stack(xs)


def log_prior(x: ParamVector) -> float:
    """Standard-normal log density of x."""
    x = check_params(x)
    return -0.5 * x.size * math.log(2 * math.pi) - 0.5 * float(np.dot(x, x))
