import argparse
import logging
from pathlib import Path

from bayesqst import storage
from bayesqst.cli.options import build_model, positive_int, seed_int
from bayesqst.config import get_settings
from bayesqst.runner import PooledSamples, run_parallel
from bayesqst.schemas import ChainConfig, RunConfig

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    settings = get_settings()
    parser = subparsers.add_parser(
        "sample",
        help="Run independent adaptive pCN chains on a counts file",
        description="Run R chains in parallel and persist their samples, metadata and run manifest.",
    )
    parser.add_argument("--counts", type=Path, required=True, help="Counts JSON")
    parser.add_argument("--chains", type=positive_int, required=True, help="Number of chains R")
    parser.add_argument("--samples", type=positive_int, default=settings.default_samples, help="Stored samples per chain N")
    parser.add_argument("--thin", type=positive_int, default=settings.default_thin, help="Thinning interval T")
    parser.add_argument("--adapt-interval", type=positive_int, default=settings.adapt_interval, help="Adaptation window M_A")
    parser.add_argument("--beta0", type=float, default=settings.beta_init, help="Initial pCN step size in (0, 1]")
    parser.add_argument("--seed", type=seed_int, required=True, help="Master seed")
    parser.add_argument("--workers", type=positive_int, default=None, help="Worker limit (default: all cores; QST_WORKERS overrides)")
    parser.add_argument("--out-dir", type=Path, required=True, help="Fresh output directory")
    parser.set_defaults(handler=cmd_sample)


def cmd_sample(args: argparse.Namespace) -> PooledSamples:
    settings = get_settings()
    data = storage.read_counts(args.counts)

    workers = args.workers
    if settings.workers is not None:
        if workers is not None and workers != settings.workers:
            logger.info(f"QST_WORKERS={settings.workers} overrides --workers {workers}")
        workers = settings.workers

    chain_cfg = build_model(
        ChainConfig,
        samples_kept=args.samples,
        thinning=args.thin,
        adapt_interval=args.adapt_interval,
        beta_init=args.beta0,
        seed=args.seed,
    )
    cfg = build_model(
        RunConfig,
        chains=args.chains,
        chain_cfg=chain_cfg,
        master_seed=args.seed,
        output_dir=args.out_dir,
        worker_limit=workers,
    )
    pool = run_parallel(data, cfg, counts_file=args.counts)

    # every chain file must read back with the expected shape
    reread = PooledSamples.from_directory(args.out_dir)
    logger.info(
        f"Stored {reread.num_chains} chains x {reread.stored_samples} samples (D={reread.dim}) in {args.out_dir}"
    )
    return pool
