"""
Pauli measurement model.

Outcome index convention: for a Q-qubit setting, outcome l has bit
(Q - 1 - q) equal to 1 when qubit q reported eigenvalue -1. Qubit 0 is
the most significant bit, matching basis-string character 0 in the
counts file.
"""

from dataclasses import dataclass
from itertools import product
from typing import List, Sequence, Tuple

import numpy as np

from bayesqst.exceptions import DimensionMismatch, InvalidDataset
from bayesqst.qmatrix import DensityMatrix

PAULI_AXES = "XYZ"
MAX_QUBITS = 10

_SQRT_HALF = 1 / np.sqrt(2)

# Eigenvectors per axis: (eigenvalue +1, eigenvalue -1)
_EIGENVECTORS = {
    "X": (np.array([_SQRT_HALF, _SQRT_HALF], dtype=np.complex128),
          np.array([_SQRT_HALF, -_SQRT_HALF], dtype=np.complex128)),
    "Y": (np.array([_SQRT_HALF, 1j * _SQRT_HALF], dtype=np.complex128),
          np.array([_SQRT_HALF, -1j * _SQRT_HALF], dtype=np.complex128)),
    "Z": (np.array([1, 0], dtype=np.complex128),
          np.array([0, 1], dtype=np.complex128)),
}


@dataclass(frozen=True)
class PauliString:
    """One measurement axis per qubit, e.g. ``PauliString("XZ")``."""

    axes: str

    def __post_init__(self):
        if len(self.axes) < 1:
            raise InvalidDataset("Pauli string must cover at least one qubit")
        bad = set(self.axes) - set(PAULI_AXES)
        if bad:
            raise InvalidDataset(f"invalid Pauli axes {sorted(bad)} in '{self.axes}'")

    @property
    def num_qubits(self) -> int:
        return len(self.axes)

    def __str__(self) -> str:
        return self.axes


@dataclass(frozen=True)
class Povm:
    """D rank-1 effects; ``effects[l]`` belongs to outcome index l."""

    effects: np.ndarray

    @property
    def dim(self) -> int:
        return self.effects.shape[-1]


@dataclass(frozen=True)
class Dataset:
    num_qubits: int
    shots_per_setting: int
    settings: Tuple[Tuple[PauliString, np.ndarray], ...]

    def __post_init__(self):
        q, p = self.num_qubits, self.shots_per_setting
        if q < 1:
            raise InvalidDataset("num_qubits must be at least 1")
        if p < 1:
            raise InvalidDataset("shots_per_setting must be at least 1")
        if not self.settings:
            raise InvalidDataset("dataset has no settings")
        frozen = []
        seen = set()
        for pauli, counts in self.settings:
            if pauli.num_qubits != q:
                raise InvalidDataset(f"setting {pauli} does not match {q} qubits")
            if pauli.axes in seen:
                raise InvalidDataset(f"duplicate setting {pauli}")
            seen.add(pauli.axes)
            counts = np.asarray(counts)
            if counts.shape != (2 ** q,):
                raise InvalidDataset(f"setting {pauli} needs {2 ** q} counts, got {counts.shape}")
            if np.any(counts < 0) or not np.all(counts == np.round(counts)):
                raise InvalidDataset(f"setting {pauli} has negative or fractional counts")
            counts = counts.astype(np.int64)
            if int(counts.sum()) != p:
                raise InvalidDataset(f"setting {pauli} counts sum to {int(counts.sum())}, expected {p}")
            counts.setflags(write=False)
            frozen.append((pauli, counts))
        object.__setattr__(self, "settings", tuple(frozen))

    @property
    def dim(self) -> int:
        return 2 ** self.num_qubits

    @property
    def paulis(self) -> List[PauliString]:
        return [pauli for pauli, _ in self.settings]

    @property
    def total_counts(self) -> int:
        return len(self.settings) * self.shots_per_setting

    def counts_matrix(self) -> np.ndarray:
        """Counts as a (K, D) array in setting order."""
        return np.stack([counts for _, counts in self.settings])


def all_pauli_settings(num_qubits: int) -> List[PauliString]:
    """All 3^Q settings in lexicographic order over X < Y < Z."""
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise InvalidDataset(f"number of qubits must lie in [1, {MAX_QUBITS}]")
    return [PauliString("".join(axes)) for axes in product(PAULI_AXES, repeat=num_qubits)]


def pauli_povm(setting: PauliString) -> Povm:
    q = setting.num_qubits
    effects = []
    for outcome in range(2 ** q):
        vector = np.ones(1, dtype=np.complex128)
        for qubit, axis in enumerate(setting.axes):
            bit = (outcome >> (q - 1 - qubit)) & 1
            vector = np.kron(vector, _EIGENVECTORS[axis][bit])
        effects.append(np.outer(vector, vector.conj()))
    return Povm(np.array(effects))


def outcome_probabilities(rho: DensityMatrix, povm: Povm) -> np.ndarray:
    """p_l = Re Tr(effect_l rho), clamped to [0, 1]."""
    if rho.dim != povm.dim:
        raise DimensionMismatch(f"state dimension {rho.dim} does not match POVM dimension {povm.dim}")
    probs = np.einsum("lij,ji->l", povm.effects, rho.mat).real
    return np.clip(probs, 0.0, 1.0)


def sample_multinomial(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """
    Multinomial draw by D-1 sequential conditional binomials, in outcome
    order; no draw is consumed once all shots are assigned.
    """
    counts = np.zeros(len(probs), dtype=np.int64)
    remaining = shots
    mass = 1.0
    for l, p in enumerate(probs[:-1]):
        if remaining == 0:
            break
        q = min(max(p / mass, 0.0), 1.0) if mass > 0 else 0.0
        counts[l] = rng.binomial(remaining, q)
        remaining -= counts[l]
        mass -= p
    counts[-1] += remaining
    return counts


def simulate_counts(
    rho: DensityMatrix,
    settings: Sequence[PauliString],
    shots: int,
    rng: np.random.Generator,
) -> Dataset:
    if shots < 1:
        raise InvalidDataset("shots per setting must be at least 1")
    if not settings:
        raise InvalidDataset("at least one setting is required")
    results = []
    for setting in settings:
        probs = outcome_probabilities(rho, pauli_povm(setting))
        results.append((setting, sample_multinomial(probs, shots, rng)))
    return Dataset(
        num_qubits=settings[0].num_qubits,
        shots_per_setting=shots,
        settings=tuple(results),
    )


def default_shots(num_qubits: int) -> int:
    """25 * 2^Q shots per setting."""
    if num_qubits < 1:
        raise InvalidDataset("number of qubits must be at least 1")
    return 25 * 2 ** num_qubits
