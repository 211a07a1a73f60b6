import argparse
import logging
from pathlib import Path

import pandas as pd
from joblib import cpu_count

from bayesqst import storage
from bayesqst.cli.options import ensure_parent, positive_int, sibling_path
from bayesqst.diagnostics import time_to_fidelity, timing_report

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "timing",
        help="Wall clock against fidelity for a set of runs",
        description=(
            "Tabulate thinning, chain count, wall clock and 1 - F for each sample directory, "
            "plus the time needed to reach F > 1 - 10^-k (<out>_thresholds.csv)."
        ),
    )
    parser.add_argument("--samples-dirs", type=Path, nargs="+", required=True, help="Directories written by 'sample'")
    parser.add_argument("--reference", type=Path, required=True, help="Reference density matrix JSON")
    parser.add_argument("--cores", type=positive_int, default=None, help="Cores available per run (default: this machine)")
    parser.add_argument("--out", type=Path, default=Path("timing.csv"), help="Timing CSV path")
    parser.set_defaults(handler=cmd_timing)


def cmd_timing(args: argparse.Namespace) -> pd.DataFrame:
    reference = storage.read_density(args.reference)
    cores = args.cores or cpu_count()
    table = timing_report(args.samples_dirs, reference, cores)

    out = ensure_parent(args.out)
    storage.write_csv(out, table)
    storage.write_csv(sibling_path(out, "_thresholds"), time_to_fidelity(table))
    return table
