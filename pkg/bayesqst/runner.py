"""
Parallel execution of independent pCN chains and the pooled estimators.
"""

import hashlib
import logging
import time
import traceback
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, cpu_count, delayed

from bayesqst import __version__
from bayesqst.bures import dim_from_params, rho_stack
from bayesqst.config import get_settings
from bayesqst.exceptions import (
    ChainFailure,
    EmptyPool,
    InsufficientChains,
    OutputError,
    SampleDirError,
    UsageError,
)
from bayesqst.measurement import Dataset, Povm, pauli_povm
from bayesqst.pcn import ChainOutput, LogLikelihoodFn, run_chain
from bayesqst.qmatrix import DensityMatrix
from bayesqst.schemas import CountsFile, RunConfig, RunManifest
from bayesqst import storage

logger = logging.getLogger(__name__)

Observable = Callable[[DensityMatrix], float]


@dataclass(frozen=True)
class _FailedChain:
    chain_index: int
    cause: str


@dataclass(frozen=True)
class PooledSamples:
    """
    Samples x^{n,r} of R chains, either held in memory or read one chain
    at a time from a run directory. Chains are always visited in
    ascending chain index.
    """

    dim: int
    stored_samples: int
    chain_indices: Tuple[int, ...]
    directory: Optional[Path] = None
    arrays: Optional[Dict[int, np.ndarray]] = field(default=None, repr=False)
    burn_in: int = 0

    @property
    def num_chains(self) -> int:
        return len(self.chain_indices)

    @property
    def samples_per_chain(self) -> int:
        return self.stored_samples - self.burn_in

    @property
    def total_samples(self) -> int:
        return self.num_chains * self.samples_per_chain

    @classmethod
    def from_outputs(cls, outputs: Sequence[ChainOutput]) -> "PooledSamples":
        if not outputs:
            raise EmptyPool("No chain outputs to pool")
        ordered = sorted(outputs, key=lambda out: out.chain_index)
        shapes = {out.samples.shape for out in ordered}
        if len(shapes) != 1:
            raise SampleDirError(f"Chains disagree on sample shape: {sorted(shapes)}")
        n, n_params = shapes.pop()
        return cls(
            dim=dim_from_params(n_params),
            stored_samples=n,
            chain_indices=tuple(out.chain_index for out in ordered),
            arrays={out.chain_index: out.samples for out in ordered},
        )

    @classmethod
    def from_directory(cls, directory: Union[str, Path]) -> "PooledSamples":
        """Pool every readable chain file; chains the manifest lists as failed are skipped."""
        directory = Path(directory)
        indices = storage.list_chain_indices(directory)
        manifest_path = directory / storage.MANIFEST_NAME
        if manifest_path.exists():
            failed = storage.read_manifest(directory).failed_chains
            if failed:
                indices = [r for r in indices if r not in failed]
                logger.warning(
                    f"Skipping failed chains {sorted(failed)}; estimating over R={len(indices)} surviving chains"
                )
        if not indices:
            raise EmptyPool(f"No chain sample files in {directory}")

        dims, lengths = set(), set()
        for r in indices:
            header = storage.read_chain_header(storage.chain_sample_path(directory, r))
            dims.add(int(header["dim"]))
            lengths.add(int(header["samples"]))
        if len(dims) != 1 or len(lengths) != 1:
            raise SampleDirError(f"Chain files in {directory} disagree on dimension or sample count")
        return cls(
            dim=dims.pop(),
            stored_samples=lengths.pop(),
            chain_indices=tuple(indices),
            directory=directory,
        )

    def first_chains(self, count: int) -> "PooledSamples":
        """View restricted to the first ``count`` chains."""
        if count < 1 or count > self.num_chains:
            raise InsufficientChains(f"Requested {count} chains but the pool holds {self.num_chains}")
        return replace(self, chain_indices=self.chain_indices[:count])

    def with_burn_in(self, burn_in: int) -> "PooledSamples":
        """View dropping the first ``burn_in`` stored samples of every chain."""
        if burn_in < 0 or burn_in >= self.stored_samples:
            raise UsageError(f"Burn-in {burn_in} must lie in [0, {self.stored_samples})")
        return replace(self, burn_in=burn_in)

    def chain_params(self, chain_index: int) -> np.ndarray:
        if self.arrays is not None:
            xs = self.arrays[chain_index]
        else:
            _, xs = storage.read_chain_samples(storage.chain_sample_path(self.directory, chain_index))
        return xs[self.burn_in:]

    def chain_rhos(self, chain_index: int) -> np.ndarray:
        return rho_stack(self.chain_params(chain_index))

    def iter_chain_rhos(self) -> Iterator[Tuple[int, np.ndarray]]:
        for r in self.chain_indices:
            yield r, self.chain_rhos(r)


def _run_chain_safely(
    data: Dataset,
    povms: Sequence[Povm],
    chain_cfg,
    chain_index: int,
    log_likelihood_fn: Optional[LogLikelihoodFn],
) -> Union[ChainOutput, _FailedChain]:
    try:
        return run_chain(data, povms, chain_cfg, chain_index, log_likelihood_fn=log_likelihood_fn)
    except Exception:
        return _FailedChain(chain_index, traceback.format_exc())


def dataset_sha256(data: Dataset) -> str:
    """Hash of the dataset's canonical counts JSON."""
    payload = CountsFile.from_dataset(data).model_dump_json().encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_parallel(
    data: Dataset,
    cfg: RunConfig,
    counts_file: Optional[Path] = None,
    log_likelihood_fn: Optional[LogLikelihoodFn] = None,
) -> PooledSamples:
    """
    Run ``cfg.chains`` independent chains with at most ``worker_limit``
    at a time and persist each one. Chain r uses the generator seeded with
    ``split_seed(master_seed, r)``, so results do not depend on scheduling.
    """
    settings = get_settings()
    output_dir = storage.ensure_directory(cfg.output_dir)
    if storage.list_chain_indices(output_dir):
        raise OutputError(f"{output_dir} already holds chain files; use a fresh output directory")
    worker_limit = cfg.worker_limit or cpu_count()
    chain_cfg = cfg.chain_cfg.model_copy(update={"seed": cfg.master_seed})
    povms = [pauli_povm(pauli) for pauli in data.paulis]

    logger.info(
        f"Starting {cfg.chains} chains (N={chain_cfg.samples_kept}, T={chain_cfg.thinning}) "
        f"with up to {worker_limit} workers"
    )
    started_at = _utc_now()
    started = time.perf_counter()

    parallel = Parallel(
        n_jobs=min(worker_limit, cfg.chains),
        backend=settings.joblib_backend,
        return_as="generator",
    )
    results = parallel(
        delayed(_run_chain_safely)(data, povms, chain_cfg, r, log_likelihood_fn)
        for r in range(cfg.chains)
    )

    outputs: List[ChainOutput] = []
    failures: Dict[int, str] = {}
    write_error: Optional[OutputError] = None
    for result in results:
        if isinstance(result, _FailedChain):
            logger.error(f"Chain {result.chain_index} failed:\n{result.cause}")
            failures[result.chain_index] = result.cause.strip().splitlines()[-1]
            continue
        try:
            storage.write_chain_samples(output_dir, result)
            storage.write_chain_metadata(output_dir, result)
        except OutputError as exc:
            logger.error(f"Chain {result.chain_index} could not be written: {exc.detail}")
            failures[result.chain_index] = f"OutputError: {exc.detail}"
            write_error = write_error or exc
            continue
        outputs.append(result)

    elapsed = time.perf_counter() - started
    manifest = RunManifest(
        tool_version=__version__,
        master_seed=cfg.master_seed,
        chains=cfg.chains,
        chain_config=chain_cfg,
        counts_file=str(counts_file) if counts_file else None,
        counts_sha256=storage.file_sha256(counts_file) if counts_file else dataset_sha256(data),
        dim=data.dim,
        worker_limit=worker_limit,
        started_at=started_at,
        finished_at=_utc_now(),
        wall_clock_seconds=elapsed,
        chain_wall_clock_seconds={out.chain_index: out.wall_clock_seconds for out in outputs},
        failed_chains=failures,
    )
    storage.write_manifest(output_dir, manifest)
    logger.info(f"Finished {len(outputs)}/{cfg.chains} chains in {elapsed:.2f}s")

    if write_error is not None:
        raise write_error
    if failures:
        raise ChainFailure(failures)
    return PooledSamples.from_outputs(outputs)


def pooled_mean(samples: PooledSamples) -> DensityMatrix:
    """
    Mean of rho(x^{n,r}) over all N*R samples. Per-chain partial sums are
    accumulated in ascending chain order.
    """
    if samples.total_samples < 1:
        raise EmptyPool("Pool holds no samples")
    total = np.zeros((samples.dim, samples.dim), dtype=np.complex128)
    for _, rhos in samples.iter_chain_rhos():
        total += rhos.sum(axis=0)
    return DensityMatrix.from_array(total / samples.total_samples, atol=1e-9)


def _observable_values(samples: PooledSamples, phi: Observable) -> np.ndarray:
    if samples.total_samples < 1:
        raise EmptyPool("Pool holds no samples")
    values = []
    for _, rhos in samples.iter_chain_rhos():
        values.extend(float(phi(DensityMatrix(rho))) for rho in rhos)
    return np.array(values)


def pooled_observable(samples: PooledSamples, phi: Observable) -> float:
    """Mean of phi(rho(x^{n,r})) over all samples."""
    return float(np.mean(_observable_values(samples, phi)))


def pooled_observable_stats(samples: PooledSamples, phi: Observable) -> Tuple[float, float]:
    """Pooled posterior mean and standard deviation of phi."""
    values = _observable_values(samples, phi)
    return float(np.mean(values)), float(np.std(values))


def pooled_purity(samples: PooledSamples) -> float:
    """Mean of Tr(rho^2) over all samples, evaluated on whole chains at once."""
    if samples.total_samples < 1:
        raise EmptyPool("Pool holds no samples")
    total = 0.0
    for _, rhos in samples.iter_chain_rhos():
        total += float(np.sum(np.abs(rhos) ** 2))
    return total / samples.total_samples
