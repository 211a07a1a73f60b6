import argparse
import logging
import math
from functools import partial
from pathlib import Path

from bayesqst import storage
from bayesqst.cli.options import ensure_parent, non_negative_int, sibling_path
from bayesqst.diagnostics import frobenius_error, w_state
from bayesqst.exceptions import DimensionMismatch, OutputError, UsageError
from bayesqst.qmatrix import expectation, fidelity
from bayesqst.runner import PooledSamples, pooled_mean, pooled_observable_stats, pooled_purity
from bayesqst.schemas import EstimateReport

logger = logging.getLogger(__name__)

ESTIMATE_SUFFIX = "_rho"


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "estimate",
        help="Pool chain samples into a posterior-mean estimate",
        description=(
            "Write the pooled-mean density matrix (default <out>_rho.json) and a report "
            "with N, R, purity and optional fidelity/W-overlap figures."
        ),
    )
    parser.add_argument("--samples-dir", type=Path, required=True, help="Directory written by 'sample'")
    parser.add_argument("--out", type=Path, required=True, help="Report JSON path")
    parser.add_argument("--rho-out", type=Path, default=None, help="Pooled-mean density matrix JSON path")
    parser.add_argument("--reference", type=Path, default=None, help="Reference density matrix JSON")
    parser.add_argument("--target-w", action="store_true", help="Report the overlap with the W state")
    parser.add_argument("--burn-in", type=non_negative_int, default=0, help="Stored samples dropped per chain")
    parser.set_defaults(handler=cmd_estimate)


def cmd_estimate(args: argparse.Namespace) -> EstimateReport:
    pool = PooledSamples.from_directory(args.samples_dir)
    if args.burn_in:
        pool = pool.with_burn_in(args.burn_in)
    reference = storage.read_density(args.reference) if args.reference else None
    if reference is not None and reference.dim != pool.dim:
        raise DimensionMismatch(f"reference has dimension {reference.dim}, samples have {pool.dim}")

    estimate = pooled_mean(pool)
    report = {
        "N": pool.samples_per_chain,
        "R": pool.num_chains,
        "burn_in": pool.burn_in,
        "purity": pooled_purity(pool),
    }
    if reference is not None:
        report["fidelity_vs_reference"] = fidelity(reference, estimate)
        report["frob_err_sq"] = frobenius_error(estimate, reference)
    if args.target_w:
        num_qubits = int(round(math.log2(pool.dim)))
        if 2 ** num_qubits != pool.dim:
            raise UsageError(f"--target-w needs a qubit register, dimension is {pool.dim}")
        psi = w_state(num_qubits)
        _, spread = pooled_observable_stats(pool, partial(expectation, psi=psi))
        report["w_overlap"] = expectation(estimate, psi)
        report["w_overlap_std"] = spread
    result = EstimateReport(**report)

    out = ensure_parent(args.out)
    rho_out = ensure_parent(args.rho_out or sibling_path(out, ESTIMATE_SUFFIX))
    storage.write_density(rho_out, estimate)
    storage.write_model(out, result)
    storage.read_density(rho_out)
    storage.read_model(out, EstimateReport, OutputError)

    logger.info(
        f"Estimate over N={result.N}, R={result.R}: purity={result.purity:.6f}"
        + (f", fidelity={result.fidelity_vs_reference:.6f}" if reference is not None else "")
        + (f", <W|rho|W>={result.w_overlap:.6f}" if args.target_w else "")
    )
    return result
