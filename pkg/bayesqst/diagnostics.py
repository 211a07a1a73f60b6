"""
Convergence and accuracy diagnostics for pooled chains.

The autocorrelation function is defined on density matrices, not on the
overparametrized vectors x, so distinct x mapping to the same state do
not distort it. Every lag sums over the same N - l_max terms.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from bayesqst import storage
from bayesqst.exceptions import DegenerateChain, NumericalError, SampleDirError, UsageError
from bayesqst.qmatrix import DensityMatrix, StateVector, fidelity, frobenius_sq_distance
from bayesqst.runner import PooledSamples, pooled_mean

logger = logging.getLogger(__name__)

DEFAULT_MAX_LAG = 200
ACF_CROSS_CHECK_ATOL = 1e-10

ChainStates = Union[np.ndarray, Sequence[DensityMatrix]]


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    values: np.ndarray
    normalization: float
    samples: int

    @property
    def l_max(self) -> int:
        return int(self.lags[-1])


@dataclass(frozen=True)
class IactResult:
    tau: float
    n_eff: float


def _as_stack(chain_rhos: ChainStates) -> np.ndarray:
    if isinstance(chain_rhos, np.ndarray):
        return np.asarray(chain_rhos, dtype=np.complex128)
    return np.stack([rho.mat for rho in chain_rhos])


def _deviations(chain_rhos: ChainStates, l_max: int) -> np.ndarray:
    rhos = _as_stack(chain_rhos)
    if rhos.ndim != 3:
        raise UsageError(f"expected a stack of density matrices, got shape {rhos.shape}")
    if l_max < 0 or rhos.shape[0] <= l_max + 1:
        raise UsageError(f"maximum lag {l_max} requires more than {l_max + 1} samples, chain has {rhos.shape[0]}")
    # the mean of identical states can differ from them by an ulp, so test before centring
    if np.all(rhos == rhos[0]):
        raise DegenerateChain("chain is constant; autocorrelation is undefined")
    return rhos - rhos.mean(axis=0)


def _normalize(raw: np.ndarray, samples: int) -> AcfResult:
    if raw[0] <= 1e-300:
        raise DegenerateChain("chain is constant; autocorrelation is undefined")
    return AcfResult(
        lags=np.arange(raw.size),
        values=raw / raw[0],
        normalization=float(raw[0]),
        samples=samples,
    )


def acf_components(chain_rhos: ChainStates, l_max: int) -> AcfResult:
    """Autocorrelation as the sum of real-part and imaginary-part correlations of all entries."""
    dev = _deviations(chain_rhos, l_max)
    n = dev.shape[0]
    m = n - l_max
    re = dev.real.reshape(n, -1)
    im = dev.imag.reshape(n, -1)
    raw = np.array([
        np.sum(re[:m] * re[lag:lag + m]) + np.sum(im[:m] * im[lag:lag + m])
        for lag in range(l_max + 1)
    ])
    return _normalize(raw, n)


def acf(chain_rhos: ChainStates, l_max: int = DEFAULT_MAX_LAG, cross_check: bool = False) -> AcfResult:
    """
    c[l] = (1/C) sum_{n < N - l_max} Re Tr[(rho_n - mean)^dagger (rho_{n+l} - mean)],
    with the per-chain mean and C chosen so that c[0] = 1.
    """
    dev = _deviations(chain_rhos, l_max)
    n = dev.shape[0]
    m = n - l_max
    head = dev[:m].conj()
    raw = np.array([
        np.einsum("nij,nij->", head, dev[lag:lag + m]).real
        for lag in range(l_max + 1)
    ])
    result = _normalize(raw, n)
    if cross_check:
        other = acf_components(chain_rhos, l_max)
        gap = np.max(np.abs(result.values - other.values))
        if gap > ACF_CROSS_CHECK_ATOL:
            raise NumericalError(f"trace and componentwise ACF disagree by {gap:.3e}")
    return result


def iact(acf_result: AcfResult, samples_per_chain: int, chains: int = 1) -> IactResult:
    """tau = 1 + 2 sum_{l=1}^{l_max} c[l]; n_eff = N R / tau."""
    tau = 1.0 + 2.0 * float(np.sum(acf_result.values[1:]))
    n_eff = samples_per_chain * chains / tau if tau != 0 else math.inf
    return IactResult(tau=tau, n_eff=n_eff)


def frobenius_error(estimate: DensityMatrix, reference: DensityMatrix) -> float:
    return frobenius_sq_distance(estimate, reference)


def w_state(num_qubits: int) -> StateVector:
    """Uniform superposition of the Q basis states with exactly one qubit in |1>."""
    if num_qubits < 1:
        raise UsageError("number of qubits must be at least 1")
    amplitudes = np.zeros(2 ** num_qubits, dtype=np.complex128)
    for qubit in range(num_qubits):
        amplitudes[1 << (num_qubits - 1 - qubit)] = 1 / math.sqrt(num_qubits)
    return StateVector(amplitudes)


def chain_taus(samples: PooledSamples, l_max: int = DEFAULT_MAX_LAG) -> List[Tuple[int, AcfResult, IactResult]]:
    """ACF and IACT of every chain in the pool, in chain order."""
    rows = []
    for r, rhos in samples.iter_chain_rhos():
        result = acf(rhos, l_max)
        rows.append((r, result, iact(result, samples.samples_per_chain)))
    return rows


def acf_table(per_chain: Iterable[Tuple[int, AcfResult, IactResult]]) -> pd.DataFrame:
    """Long-format ``chain,lag,acf`` rows."""
    frames = [
        pd.DataFrame({"chain": r, "lag": result.lags, "acf": result.values})
        for r, result, _ in per_chain
    ]
    return pd.concat(frames, ignore_index=True)


def chain_iact_table(samples: PooledSamples, per_chain: Sequence[Tuple[int, AcfResult, IactResult]]) -> pd.DataFrame:
    """
    ``chain,tau,n_eff`` rows, plus ``final_beta,mean_acceptance`` when the
    pool lives in a run directory with chain metadata.
    """
    rows = []
    for r, _, result in per_chain:
        row = {"chain": r, "tau": result.tau, "n_eff": result.n_eff}
        if samples.directory is not None:
            try:
                meta = storage.read_chain_metadata(samples.directory, r)
                row["final_beta"] = meta.final_beta
                row["mean_acceptance"] = float(np.mean(meta.acceptance_fractions)) if meta.acceptance_fractions else math.nan
            except SampleDirError:
                logger.warning(f"No metadata for chain {r}")
        rows.append(row)
    return pd.DataFrame(rows)


def pooled_n_eff(samples: PooledSamples, taus: Sequence[float]) -> float:
    """N R / median per-chain tau."""
    tau = float(np.median(taus))
    return samples.total_samples / tau if tau != 0 else math.inf


def error_scaling_report(
    pool_dir: Union[str, Path, PooledSamples],
    reference: DensityMatrix,
    subsets: Sequence[int],
    l_max: int = DEFAULT_MAX_LAG,
    taus: Optional[Sequence[float]] = None,
) -> pd.DataFrame:
    """
    One ``R,n_eff,frob_err_sq,one_minus_fidelity`` row per subset size R,
    pooling the first R chains of the run. Per-chain taus already computed
    for the pool can be passed in ``taus``.
    """
    pool = pool_dir if isinstance(pool_dir, PooledSamples) else PooledSamples.from_directory(pool_dir)
    if not subsets:
        raise UsageError("at least one subset size is required")
    largest = pool.first_chains(max(subsets))
    if taus is None or len(taus) < largest.num_chains:
        taus = [result.tau for _, _, result in chain_taus(largest, l_max)]
    rows = []
    for count in subsets:
        subset = pool.first_chains(count)
        estimate = pooled_mean(subset)
        rows.append({
            "R": count,
            "n_eff": pooled_n_eff(subset, taus[:count]),
            "frob_err_sq": frobenius_error(estimate, reference),
            "one_minus_fidelity": max(1.0 - fidelity(estimate, reference), 0.0),
        })
    return pd.DataFrame(rows, columns=["R", "n_eff", "frob_err_sq", "one_minus_fidelity"])


def fit_error_plateau(n_eff: Sequence[float], errors: Sequence[float]) -> Tuple[float, float]:
    """Least-squares fit of err = A + B / n_eff; returns (A, B)."""
    slope, intercept = np.polyfit(1.0 / np.asarray(n_eff, dtype=float), np.asarray(errors, dtype=float), 1)
    return float(intercept), float(slope)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)), 1)
    return float(slope)


def timing_report(
    sample_dirs: Sequence[Union[str, Path]],
    reference: DensityMatrix,
    cores: int,
) -> pd.DataFrame:
    """
    Wall clock against accuracy for a set of runs. ``avg_wall_clock_s``
    rescales the total run time by min(cores, R) / R, the time one chain
    would take on a machine with a core per chain.
    """
    if cores < 1:
        raise UsageError("cores must be at least 1")
    rows = []
    for directory in sample_dirs:
        manifest = storage.read_manifest(directory)
        pool = PooledSamples.from_directory(directory)
        estimate = pooled_mean(pool)
        chains = pool.num_chains
        rows.append({
            "samples_dir": str(directory),
            "thin": manifest.chain_config.thinning,
            "R": chains,
            "wall_clock_s": manifest.wall_clock_seconds,
            "avg_wall_clock_s": manifest.wall_clock_seconds * min(cores, chains) / chains,
            "one_minus_fidelity": max(1.0 - fidelity(estimate, reference), 0.0),
        })
    return pd.DataFrame(rows, columns=["samples_dir", "thin", "R", "wall_clock_s", "avg_wall_clock_s", "one_minus_fidelity"])


def time_to_fidelity(table: pd.DataFrame, ks: Sequence[int] = (1, 2, 3, 4, 5)) -> pd.DataFrame:
    """Minimum average wall clock at which F > 1 - 10^-k, NaN when never reached."""
    rows = []
    for k in ks:
        reached = table[table["one_minus_fidelity"] < 10.0 ** (-k)]
        rows.append({
            "k": k,
            "fidelity_threshold": 1.0 - 10.0 ** (-k),
            "avg_wall_clock_s": float(reached["avg_wall_clock_s"].min()) if len(reached) else math.nan,
        })
    return pd.DataFrame(rows)
