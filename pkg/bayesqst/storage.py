"""
Reading and writing run artifacts.

Per-chain sample file ``chain_<r>.pqst`` (little-endian): magic b"PQST",
then u32 fields version (=1), D, N, chain index r, reserved (=0), then
N * 4D^2 float64 values, sample-major. Next to it ``chain_<r>.json``
holds the chain metadata and ``manifest.json`` describes the run.
"""

import hashlib
import json
import logging
import re
from pathlib import Path
from typing import List, Tuple, Type, TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from bayesqst.exceptions import (
    InvalidDataset,
    InvalidStateFile,
    NumericalError,
    OutputError,
    QstError,
    SampleDirError,
)
from bayesqst.measurement import Dataset
from bayesqst.pcn import ChainOutput
from bayesqst.qmatrix import DensityMatrix
from bayesqst.schemas import ChainMetadata, CountsFile, DensityMatrixFile, RunManifest

logger = logging.getLogger(__name__)

PQST_MAGIC = b"PQST"
PQST_VERSION = 1
PQST_HEADER = np.dtype([
    ("magic", "S4"),
    ("version", "<u4"),
    ("dim", "<u4"),
    ("samples", "<u4"),
    ("chain", "<u4"),
    ("reserved", "<u4"),
])
MANIFEST_NAME = "manifest.json"
CSV_FLOAT_FORMAT = "%.17g"

_CHAIN_FILE = re.compile(r"^chain_(\d+)\.pqst$")

ModelT = TypeVar("ModelT", bound=BaseModel)


def chain_sample_path(directory: Path, chain_index: int) -> Path:
    return Path(directory) / f"chain_{chain_index:05d}.pqst"


def chain_metadata_path(directory: Path, chain_index: int) -> Path:
    return Path(directory) / f"chain_{chain_index:05d}.json"


def ensure_directory(directory: Path) -> Path:
    """Create an output directory or raise OutputError."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"Cannot create directory {directory}: {exc}")
    return directory


def _write_bytes(path: Path, payload: bytes) -> None:
    try:
        Path(path).write_bytes(payload)
    except OSError as exc:
        raise OutputError(f"Cannot write {path}: {exc}")


def write_model(path: Path, model: BaseModel) -> None:
    """Write a pydantic model as indented JSON."""
    _write_bytes(path, (model.model_dump_json(indent=2) + "\n").encode("utf-8"))
    logger.info(f"Wrote {path}")


def read_model(path: Path, model_cls: Type[ModelT], error_cls: Type[QstError]) -> ModelT:
    """Parse a JSON file into ``model_cls``; failures become ``error_cls``."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise error_cls(f"Cannot read {path}: {exc}")
    try:
        return model_cls.model_validate(json.loads(raw))
    except (ValueError, ValidationError) as exc:
        raise error_cls(f"Invalid {model_cls.__name__} in {path}: {exc}")


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


# Counts and density matrices
def write_counts(path: Path, data: Dataset) -> None:
    write_model(path, CountsFile.from_dataset(data))


def read_counts(path: Path) -> Dataset:
    counts = read_model(path, CountsFile, InvalidDataset)
    return counts.to_dataset()


def write_density(path: Path, rho: DensityMatrix) -> None:
    write_model(path, DensityMatrixFile.from_density(rho))


def read_density(path: Path) -> DensityMatrix:
    state = read_model(path, DensityMatrixFile, InvalidStateFile)
    try:
        return state.to_density()
    except NumericalError as exc:
        raise InvalidStateFile(f"{path} is not a valid density matrix: {exc.detail}")


# Chain samples
def write_chain_samples(directory: Path, output: ChainOutput) -> Path:
    """Persist the chain's parameter samples as a PQST file."""
    header = np.zeros(1, dtype=PQST_HEADER)
    header["magic"] = PQST_MAGIC
    header["version"] = PQST_VERSION
    header["dim"] = output.dim
    header["samples"] = output.samples.shape[0]
    header["chain"] = output.chain_index
    body = np.ascontiguousarray(output.samples, dtype="<f8")
    path = chain_sample_path(directory, output.chain_index)
    _write_bytes(path, header.tobytes() + body.tobytes())
    return path


def read_chain_header(path: Path) -> np.void:
    try:
        raw = np.fromfile(path, dtype=PQST_HEADER, count=1)
    except OSError as exc:
        raise SampleDirError(f"Cannot read {path}: {exc}")
    if raw.size != 1 or raw["magic"][0] != PQST_MAGIC:
        raise SampleDirError(f"{path} is not a PQST sample file")
    if raw["version"][0] != PQST_VERSION:
        raise SampleDirError(f"{path} has unsupported format version {raw['version'][0]}")
    return raw[0]


def read_chain_samples(path: Path) -> Tuple[np.void, np.ndarray]:
    """Header and the (N, 4D^2) parameter array of one chain."""
    header = read_chain_header(path)
    n_params = 4 * int(header["dim"]) ** 2
    expected = int(header["samples"]) * n_params
    body = np.fromfile(path, dtype="<f8", offset=PQST_HEADER.itemsize)
    if body.size != expected:
        raise SampleDirError(f"{path} holds {body.size} values, expected {expected}")
    return header, body.reshape(int(header["samples"]), n_params)


def list_chain_indices(directory: Path) -> List[int]:
    directory = Path(directory)
    if not directory.is_dir():
        raise SampleDirError(f"Sample directory {directory} does not exist")
    indices = []
    for entry in directory.iterdir():
        match = _CHAIN_FILE.match(entry.name)
        if match:
            indices.append(int(match.group(1)))
    return sorted(indices)


def write_chain_metadata(directory: Path, output: ChainOutput) -> Path:
    path = chain_metadata_path(directory, output.chain_index)
    write_model(path, ChainMetadata(
        chain_index=output.chain_index,
        seed=output.seed,
        dim=output.dim,
        samples=output.samples.shape[0],
        beta_trace=output.beta_trace,
        acceptance_fractions=output.acceptance_fractions,
        final_beta=output.final_beta,
        wall_clock_seconds=output.wall_clock_seconds,
    ))
    return path


def read_chain_metadata(directory: Path, chain_index: int) -> ChainMetadata:
    return read_model(chain_metadata_path(directory, chain_index), ChainMetadata, SampleDirError)


def write_manifest(directory: Path, manifest: RunManifest) -> Path:
    path = Path(directory) / MANIFEST_NAME
    write_model(path, manifest)
    return path


def read_manifest(directory: Path) -> RunManifest:
    return read_model(Path(directory) / MANIFEST_NAME, RunManifest, SampleDirError)


def write_csv(path: Path, table: pd.DataFrame) -> None:
    """Write a diagnostics table with 17 significant digits."""
    try:
        table.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    except OSError as exc:
        raise OutputError(f"Cannot write {path}: {exc}")
    logger.info(f"Wrote {path}")
