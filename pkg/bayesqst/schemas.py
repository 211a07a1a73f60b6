from typing import Dict, List, Optional
from pathlib import Path
from pydantic import BaseModel, Field, validator

import numpy as np

from bayesqst.measurement import Dataset, PauliString
from bayesqst.qmatrix import DensityMatrix

SEED_LIMIT = 2 ** 64


# Sampler configuration
class ChainConfig(BaseModel):
    samples_kept: int = Field(1024, ge=1)
    thinning: int = Field(1, ge=1)
    adapt_interval: int = Field(500, ge=1)
    beta_init: float = Field(0.1, gt=0, le=1)
    beta_scale: float = Field(1.1, gt=1)
    accept_low: float = Field(0.2, ge=0, le=1)
    accept_high: float = Field(0.6, ge=0, le=1)
    seed: int = Field(0, ge=0, lt=SEED_LIMIT)

    @validator("accept_high")
    def validate_accept_band(cls, v, values):
        low = values.get("accept_low")
        if low is not None and not low < v:
            raise ValueError("accept_low must be smaller than accept_high")
        return v

    @property
    def total_iterations(self) -> int:
        return self.samples_kept * self.thinning

    class Config:
        frozen = True


class RunConfig(BaseModel):
    chains: int = Field(..., ge=1)
    chain_cfg: ChainConfig = Field(default_factory=ChainConfig)
    master_seed: int = Field(0, ge=0, lt=SEED_LIMIT)
    output_dir: Path
    worker_limit: Optional[int] = Field(None, ge=1)

    class Config:
        frozen = True


# Density matrix file
class DensityMatrixFile(BaseModel):
    format: str = "qst-density-matrix"
    version: int = 1
    dim: int = Field(..., ge=1)
    re: List[List[float]]
    im: List[List[float]]

    @validator("re", "im")
    def validate_shape(cls, v, values):
        dim = values.get("dim")
        if dim is not None and (len(v) != dim or any(len(row) != dim for row in v)):
            raise ValueError(f"matrix must be {dim}x{dim}")
        return v

    def to_array(self) -> np.ndarray:
        return np.array(self.re, dtype=np.float64) + 1j * np.array(self.im, dtype=np.float64)

    def to_density(self) -> DensityMatrix:
        return DensityMatrix.from_array(self.to_array(), atol=1e-9)

    @classmethod
    def from_density(cls, rho: DensityMatrix) -> "DensityMatrixFile":
        return cls(dim=rho.dim, re=rho.mat.real.tolist(), im=rho.mat.imag.tolist())


# Counts file
class SettingCounts(BaseModel):
    basis: str = Field(..., min_length=1, pattern="^[XYZ]+$")
    counts: List[int]

    @validator("counts")
    def validate_counts(cls, v):
        if any(c < 0 for c in v):
            raise ValueError("counts must be non-negative")
        return v


class CountsFile(BaseModel):
    format: str = "qst-counts"
    version: int = 1
    num_qubits: int = Field(..., ge=1, le=10)
    shots_per_setting: int = Field(..., ge=1)
    settings: List[SettingCounts] = Field(..., min_length=1)

    @validator("settings")
    def validate_settings(cls, v, values):
        q = values.get("num_qubits")
        p = values.get("shots_per_setting")
        if q is None or p is None:
            return v
        bases = [s.basis for s in v]
        if len(set(bases)) != len(bases):
            raise ValueError("settings must be distinct")
        for s in v:
            if len(s.basis) != q:
                raise ValueError(f"basis '{s.basis}' does not have {q} characters")
            if len(s.counts) != 2 ** q:
                raise ValueError(f"basis '{s.basis}' needs {2 ** q} counts")
            if sum(s.counts) != p:
                raise ValueError(f"counts for '{s.basis}' sum to {sum(s.counts)}, expected {p}")
        return v

    def to_dataset(self) -> Dataset:
        return Dataset(
            num_qubits=self.num_qubits,
            shots_per_setting=self.shots_per_setting,
            settings=tuple(
                (PauliString(s.basis), np.array(s.counts, dtype=np.int64)) for s in self.settings
            ),
        )

    @classmethod
    def from_dataset(cls, data: Dataset) -> "CountsFile":
        return cls(
            num_qubits=data.num_qubits,
            shots_per_setting=data.shots_per_setting,
            settings=[
                SettingCounts(basis=pauli.axes, counts=[int(c) for c in counts])
                for pauli, counts in data.settings
            ],
        )


# Run artifacts
class ChainMetadata(BaseModel):
    format: str = "qst-chain-metadata"
    version: int = 1
    chain_index: int = Field(..., ge=0)
    seed: int
    dim: int
    samples: int
    beta_trace: List[float]
    acceptance_fractions: List[float]
    final_beta: float
    wall_clock_seconds: float


class RunManifest(BaseModel):
    format: str = "qst-run-manifest"
    version: int = 1
    tool_version: str
    master_seed: int
    chains: int
    chain_config: ChainConfig
    counts_file: Optional[str] = None
    counts_sha256: str
    dim: int
    worker_limit: int
    started_at: str
    finished_at: str
    wall_clock_seconds: float
    chain_wall_clock_seconds: Dict[int, float] = Field(default_factory=dict)
    failed_chains: Dict[int, str] = Field(default_factory=dict)


class EstimateReport(BaseModel):
    format: str = "qst-estimate-report"
    version: int = 1
    N: int
    R: int
    burn_in: int = 0
    purity: float
    fidelity_vs_reference: Optional[float] = None
    frob_err_sq: Optional[float] = None
    w_overlap: Optional[float] = None
    w_overlap_std: Optional[float] = None
