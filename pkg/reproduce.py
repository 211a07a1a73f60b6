#!/usr/bin/env python3
"""
Long-run driver for the thinning and parallel-scaling study.
This script simulates one dataset, samples it at a ladder of thinnings
T = 2^0 .. 2^k with R chains each, and writes the ACF, IACT,
error-scaling and timing tables for every run. Runs already present in
the output directory are reused, so an interrupted study can be resumed.

    python reproduce.py --qubits 1 --chains 64 --max-log2-thin 10 --out-dir study
"""

import argparse
import sys
from pathlib import Path

# Add the current directory to Python path
current_dir = Path(__file__).parent
sys.path.insert(0, str(current_dir))

import numpy as np
from joblib import cpu_count

from bayesqst import storage
from bayesqst.bures import sample_bures
from bayesqst.diagnostics import (
    acf_table,
    chain_iact_table,
    chain_taus,
    error_scaling_report,
    fit_error_plateau,
    time_to_fidelity,
    timing_report,
)
from bayesqst.exceptions import QstError
from bayesqst.main import configure_logging
from bayesqst.measurement import all_pauli_settings, default_shots, simulate_counts
from bayesqst.runner import PooledSamples, pooled_mean, run_parallel
from bayesqst.schemas import ChainConfig, RunConfig


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--qubits", type=int, default=1)
    parser.add_argument("--chains", type=int, default=64)
    parser.add_argument("--samples", type=int, default=1024)
    parser.add_argument("--max-log2-thin", type=int, default=10)
    parser.add_argument("--max-lag", type=int, default=200)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--out-dir", type=Path, default=Path("study"))
    return parser.parse_args(argv)


def create_dataset(args: argparse.Namespace) -> Path:
    """Simulate Bures ground-truth counts once."""
    counts_path = args.out_dir / "counts.json"
    if counts_path.exists():
        print(f"✅ Dataset already exists: {counts_path}")
        return counts_path

    rng = np.random.Generator(np.random.PCG64(args.seed))
    _, truth = sample_bures(2 ** args.qubits, rng)
    data = simulate_counts(truth, all_pauli_settings(args.qubits), default_shots(args.qubits), rng)
    storage.write_counts(counts_path, data)
    storage.write_density(args.out_dir / "truth.json", truth)
    print(f"✅ Dataset created: {len(data.settings)} settings x {data.shots_per_setting} shots")
    return counts_path


def run_thinning(args: argparse.Namespace, counts_path: Path, thin: int) -> PooledSamples:
    """Sample one rung of the thinning ladder, or reuse it."""
    run_dir = args.out_dir / f"thin_{thin:05d}"
    if run_dir.is_dir() and storage.list_chain_indices(run_dir):
        print(f"✅ Run for T={thin} already exists")
        return PooledSamples.from_directory(run_dir)

    cfg = RunConfig(
        chains=args.chains,
        chain_cfg=ChainConfig(samples_kept=args.samples, thinning=thin),
        master_seed=args.seed + thin,
        output_dir=run_dir,
        worker_limit=args.workers,
    )
    pool = run_parallel(storage.read_counts(counts_path), cfg, counts_file=counts_path)
    manifest = storage.read_manifest(run_dir)
    print(f"✅ T={thin}: {pool.num_chains} chains in {manifest.wall_clock_seconds:.1f}s")
    return PooledSamples.from_directory(run_dir)


def write_diagnostics(args: argparse.Namespace, thin: int, pool: PooledSamples, reference) -> None:
    """ACF, IACT and scaling tables of one run."""
    out_dir = storage.ensure_directory(args.out_dir / f"thin_{thin:05d}_diagnostics")
    per_chain = chain_taus(pool, args.max_lag)
    taus = [result.tau for _, _, result in per_chain]
    storage.write_csv(out_dir / "acf.csv", acf_table(per_chain))
    storage.write_csv(out_dir / "iact.csv", chain_iact_table(pool, per_chain))

    subsets = [4 ** k for k in range(8) if 4 ** k <= pool.num_chains]
    if subsets[-1] != pool.num_chains:
        subsets.append(pool.num_chains)
    scaling = error_scaling_report(pool, reference, subsets, args.max_lag, taus=taus)
    storage.write_csv(out_dir / "scaling.csv", scaling)

    if len(scaling) >= 2:
        plateau, slope = fit_error_plateau(scaling["n_eff"], scaling["frob_err_sq"])
        print(f"   T={thin}: median tau={np.median(taus):.3f}, eps^2 ~ {plateau:.3e} + {slope:.3e}/N_eff")
    else:
        print(f"   T={thin}: median tau={np.median(taus):.3f}")


def main(argv=None):
    """Run the whole study."""
    args = parse_args(argv)
    configure_logging()
    storage.ensure_directory(args.out_dir)

    print("🚀 Starting thinning/scaling study...")
    try:
        counts_path = create_dataset(args)
        thinnings = [2 ** k for k in range(args.max_log2_thin + 1)]
        pools = {thin: run_thinning(args, counts_path, thin) for thin in thinnings}

        # longest-thinned run serves as the reference estimate
        reference = pooled_mean(pools[thinnings[-1]])
        storage.write_density(args.out_dir / "reference.json", reference)

        print("📊 Writing diagnostics...")
        for thin, pool in pools.items():
            write_diagnostics(args, thin, pool, reference)

        table = timing_report([args.out_dir / f"thin_{thin:05d}" for thin in thinnings], reference, args.workers or cpu_count())
        storage.write_csv(args.out_dir / "timing.csv", table)
        storage.write_csv(args.out_dir / "timing_thresholds.csv", time_to_fidelity(table))
    except QstError as e:
        print(f"❌ Study failed: {e.detail}")
        sys.exit(e.exit_code)

    print(f"🎉 Study complete: tables in {args.out_dir}")


if __name__ == "__main__":
    main()
