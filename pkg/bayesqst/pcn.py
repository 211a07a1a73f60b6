"""
Adaptive preconditioned Crank-Nicolson Metropolis-Hastings chain.

Per iteration j = 1 .. N*T the generator is consumed in a fixed order:
eta (4D^2 standard normals), then alpha (one uniform). The initial state
consumes 4D^2 standard normals before the first iteration.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from bayesqst.bures import ParamVector, num_params
from bayesqst.exceptions import NonFiniteState
from bayesqst.measurement import Dataset, Povm
from bayesqst.posterior import LikelihoodModel
from bayesqst.schemas import ChainConfig

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15

LogLikelihoodFn = Callable[[np.ndarray], float]
Recorder = Callable[[int, np.ndarray], None]


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def split_seed(master_seed: int, chain_index: int) -> int:
    """
    Per-chain 64-bit seed: the SplitMix64 output for state
    master_seed + (chain_index + 1) * 0x9E3779B97F4A7C15 (mod 2^64).
    """
    state = (master_seed + (chain_index + 1) * _GOLDEN_GAMMA) & _MASK64
    return _mix64(state)


@dataclass
class ChainOutput:
    chain_index: int
    samples: np.ndarray
    beta_trace: List[float] = field(default_factory=list)
    acceptance_fractions: List[float] = field(default_factory=list)
    final_beta: float = 0.0
    seed: int = 0
    wall_clock_seconds: float = 0.0

    @property
    def dim(self) -> int:
        return math.isqrt(self.samples.shape[1] // 4)


def propose(y: ParamVector, beta: float, eta: ParamVector) -> ParamVector:
    """sqrt(1 - beta^2) * y + beta * eta."""
    return math.sqrt(1.0 - beta * beta) * y + beta * eta


def accept_test(log_l_new: float, log_l_old: float, alpha: float) -> bool:
    """
    Metropolis test on the likelihood ratio alone; the proposal is
    reversible with respect to the standard-normal prior.
    """
    log_alpha = math.log(alpha) if alpha > 0 else -math.inf
    return log_alpha < log_l_new - log_l_old


def adapt_beta(
    beta: float,
    accept_count: int,
    m_a: int,
    scale: float = 1.1,
    low: float = 0.2,
    high: float = 0.6,
) -> float:
    rate = accept_count / m_a
    if rate > high:
        return min(beta * scale, 1.0)
    if rate < low:
        return beta / scale
    return beta


def run_chain(
    data: Dataset,
    povms: Sequence[Povm],
    cfg: ChainConfig,
    chain_index: int,
    log_likelihood_fn: Optional[LogLikelihoodFn] = None,
    recorder: Optional[Recorder] = None,
) -> ChainOutput:
    """
    Run N*T pCN iterations for chain ``chain_index`` and keep every T-th
    state. ``cfg.seed`` is the master seed; the chain's generator is
    derived with ``split_seed``. ``log_likelihood_fn`` replaces the
    dataset likelihood (test hook); ``recorder`` sees (j, state) after
    every iteration.
    """
    started = time.perf_counter()
    seed = split_seed(cfg.seed, chain_index)
    rng = np.random.Generator(np.random.PCG64(seed))
    loglik = log_likelihood_fn or LikelihoodModel(data, povms).log_likelihood
    n_params = num_params(data.dim)

    n_kept, thin, m_a = cfg.samples_kept, cfg.thinning, cfg.adapt_interval
    samples = np.empty((n_kept, n_params))
    beta = cfg.beta_init
    beta_trace: List[float] = []
    fractions: List[float] = []
    accepted = 0

    y = rng.standard_normal(n_params)
    log_l = loglik(y)
    if not np.isfinite(log_l):
        raise NonFiniteState(f"chain {chain_index}: initial state has log-likelihood {log_l}")

    for j in range(1, n_kept * thin + 1):
        eta = rng.standard_normal(n_params)
        proposal = propose(y, beta, eta)
        log_l_new = loglik(proposal)
        alpha = rng.random()
        if accept_test(log_l_new, log_l, alpha):
            y = proposal
            log_l = log_l_new
            accepted += 1

        if j % m_a == 0:
            fractions.append(accepted / m_a)
            beta = adapt_beta(beta, accepted, m_a, cfg.beta_scale, cfg.accept_low, cfg.accept_high)
            beta_trace.append(beta)
            accepted = 0

        if j % thin == 0:
            samples[j // thin - 1] = y

        if recorder is not None:
            recorder(j, y)

    if not np.all(np.isfinite(samples)):
        raise NonFiniteState(f"chain {chain_index}: stored samples contain non-finite entries")

    elapsed = time.perf_counter() - started
    logger.debug(f"Chain {chain_index} finished in {elapsed:.2f}s with beta={beta:.4g}")
    return ChainOutput(
        chain_index=chain_index,
        samples=samples,
        beta_trace=beta_trace,
        acceptance_fractions=fractions,
        final_beta=beta,
        seed=seed,
        wall_clock_seconds=elapsed,
    )
