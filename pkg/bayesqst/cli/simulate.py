import argparse
import logging
from pathlib import Path

import numpy as np

from bayesqst import storage
from bayesqst.bures import sample_bures
from bayesqst.cli.options import ensure_parent, positive_int, seed_int, sibling_path
from bayesqst.diagnostics import w_state
from bayesqst.exceptions import InvalidStateFile, UsageError
from bayesqst.measurement import MAX_QUBITS, all_pauli_settings, default_shots, simulate_counts
from bayesqst.qmatrix import DensityMatrix

logger = logging.getLogger(__name__)

TRUTH_SUFFIX = "_truth"


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "simulate",
        help="Simulate Pauli-measurement counts of a ground-truth state",
        description=(
            "Draw or load a ground-truth state, measure it in all 3^Q Pauli settings "
            "and write the counts JSON plus the state as <out>_truth.json."
        ),
    )
    parser.add_argument("--qubits", type=positive_int, required=True, help="Number of qubits Q")
    parser.add_argument("--shots", type=positive_int, default=None, help="Shots per setting (default 25*2^Q)")
    parser.add_argument(
        "--ground-truth",
        default="bures",
        help="'bures' (random Bures state), 'w' (W state) or a density-matrix JSON file",
    )
    parser.add_argument("--seed", type=seed_int, required=True, help="Generator seed")
    parser.add_argument("--out", type=Path, default=Path("counts.json"), help="Counts JSON path")
    parser.set_defaults(handler=cmd_simulate)


def ground_truth(choice: str, num_qubits: int, rng: np.random.Generator) -> DensityMatrix:
    """Resolve the ``--ground-truth`` value; a random draw consumes the generator first."""
    dim = 2 ** num_qubits
    if choice == "bures":
        _, rho = sample_bures(dim, rng)
        return rho
    if choice == "w":
        return DensityMatrix.pure(w_state(num_qubits))
    rho = storage.read_density(Path(choice))
    if rho.dim != dim:
        raise InvalidStateFile(f"{choice} has dimension {rho.dim}, expected {dim} for {num_qubits} qubits")
    return rho


def cmd_simulate(args: argparse.Namespace) -> Path:
    if args.qubits > MAX_QUBITS:
        raise UsageError(f"--qubits must be at most {MAX_QUBITS}")
    shots = args.shots or default_shots(args.qubits)
    rng = np.random.Generator(np.random.PCG64(args.seed))

    rho = ground_truth(args.ground_truth, args.qubits, rng)
    settings = all_pauli_settings(args.qubits)
    data = simulate_counts(rho, settings, shots, rng)
    logger.info(f"Simulated {len(settings)} settings x {shots} shots for Q={args.qubits}")

    out = ensure_parent(args.out)
    truth_path = sibling_path(out, TRUTH_SUFFIX)
    storage.write_counts(out, data)
    storage.write_density(truth_path, rho)

    # round-trip the outputs through the readers
    storage.read_counts(out)
    storage.read_density(truth_path)
    return out
