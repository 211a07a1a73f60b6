import argparse
import logging
from pathlib import Path
from typing import Dict

import numpy as np

from bayesqst import storage
from bayesqst.cli.options import int_list, non_negative_int
from bayesqst.config import get_settings
from bayesqst.diagnostics import (
    acf_table,
    chain_iact_table,
    chain_taus,
    error_scaling_report,
    pooled_n_eff,
)
from bayesqst.exceptions import DimensionMismatch, UsageError
from bayesqst.runner import PooledSamples

logger = logging.getLogger(__name__)

ACF_CSV = "acf.csv"
IACT_CSV = "iact.csv"
SCALING_CSV = "scaling.csv"


def register(subparsers) -> None:
    settings = get_settings()
    parser = subparsers.add_parser(
        "diagnose",
        help="Autocorrelation, IACT and error-scaling tables",
        description=f"Write {ACF_CSV}, {IACT_CSV} and, with --reference, {SCALING_CSV}.",
    )
    parser.add_argument("--samples-dir", type=Path, required=True, help="Directory written by 'sample'")
    parser.add_argument("--max-lag", type=non_negative_int, default=settings.max_lag, help="Largest ACF lag l_max")
    parser.add_argument("--out-dir", type=Path, required=True, help="Directory for the CSV files")
    parser.add_argument("--reference", type=Path, default=None, help="Reference density matrix JSON")
    parser.add_argument("--subsets", type=int_list, default=None, help="Chain counts, e.g. 1,4,16,64")
    parser.set_defaults(handler=cmd_diagnose)


def cmd_diagnose(args: argparse.Namespace) -> Dict[str, Path]:
    if args.subsets and args.reference is None:
        raise UsageError("--subsets requires --reference")
    pool = PooledSamples.from_directory(args.samples_dir)
    if args.max_lag + 1 >= pool.samples_per_chain:
        raise UsageError(
            f"--max-lag {args.max_lag} needs more than {args.max_lag + 1} samples per chain, "
            f"found {pool.samples_per_chain}"
        )
    reference = storage.read_density(args.reference) if args.reference else None
    if reference is not None and reference.dim != pool.dim:
        raise DimensionMismatch(f"reference has dimension {reference.dim}, samples have {pool.dim}")

    out_dir = storage.ensure_directory(args.out_dir)
    per_chain = chain_taus(pool, args.max_lag)
    taus = [result.tau for _, _, result in per_chain]
    written = {
        "acf": out_dir / ACF_CSV,
        "iact": out_dir / IACT_CSV,
    }
    storage.write_csv(written["acf"], acf_table(per_chain))
    storage.write_csv(written["iact"], chain_iact_table(pool, per_chain))
    logger.info(
        f"Median tau={np.median(taus):.4g} over R={pool.num_chains}; "
        f"pooled N_eff={pooled_n_eff(pool, taus):.4g}"
    )

    if reference is not None:
        subsets = args.subsets or [pool.num_chains]
        written["scaling"] = out_dir / SCALING_CSV
        table = error_scaling_report(pool, reference, subsets, args.max_lag, taus=taus)
        storage.write_csv(written["scaling"], table)
    return written
