"""
Multinomial log-likelihood of a parameter vector given Pauli count data.
"""

import math
from typing import Sequence

import numpy as np

from bayesqst.bures import ParamVector, check_params, rho_matrix
from bayesqst.exceptions import DimensionMismatch, InvalidDataset
from bayesqst.measurement import Dataset, Povm, pauli_povm

PROBABILITY_FLOOR = 1e-300

# finite or -inf, never +inf or NaN
LogLikelihood = float


class LikelihoodModel:
    """
    Dataset and its POVMs flattened for repeated evaluation.

    Tr(effect rho) is computed for all K*D effects with one matrix-vector
    product against the row-major flattening of rho.
    """

    def __init__(self, data: Dataset, povms: Sequence[Povm]):
        if len(povms) != len(data.settings):
            raise InvalidDataset(f"{len(povms)} POVMs for {len(data.settings)} settings")
        dim = data.dim
        for povm in povms:
            if povm.dim != dim or povm.effects.shape[0] != dim:
                raise DimensionMismatch(f"POVM dimension {povm.dim} does not match dataset dimension {dim}")
        self.data = data
        self.dim = dim
        effects = np.concatenate([povm.effects for povm in povms])
        self._effects_t = np.ascontiguousarray(np.swapaxes(effects, -1, -2).reshape(len(effects), dim * dim))
        counts = data.counts_matrix().ravel().astype(np.float64)
        self._observed = counts > 0
        self._counts = counts[self._observed]

    @classmethod
    def from_dataset(cls, data: Dataset) -> "LikelihoodModel":
        return cls(data, [pauli_povm(pauli) for pauli in data.paulis])

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        """All p_kl in (setting, outcome) order, clamped to [0, 1]."""
        probs = (self._effects_t @ rho.ravel()).real
        return np.clip(probs, 0.0, 1.0)

    def log_likelihood_rho(self, rho: np.ndarray) -> LogLikelihood:
        probs = self.probabilities(rho)[self._observed]
        if np.any(probs <= PROBABILITY_FLOOR):
            return -math.inf
        return float(np.dot(self._counts, np.log(probs)))

    def log_likelihood(self, x: ParamVector) -> LogLikelihood:
        if x.size != 4 * self.dim * self.dim:
            raise DimensionMismatch(f"parameter length {x.size} does not match dimension {self.dim}")
        return self.log_likelihood_rho(rho_matrix(x))

    __call__ = log_likelihood


def log_likelihood(x: ParamVector, data: Dataset, povms: Sequence[Povm]) -> LogLikelihood:
    """Sum over settings and outcomes of c_kl * ln p_kl; -inf if an observed outcome has p_kl = 0."""
    return LikelihoodModel(data, povms).log_likelihood(check_params(x))
