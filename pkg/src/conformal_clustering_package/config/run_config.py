"""
Per-command run configurations of the command-line interface.

Each command validates one of these models after merging the optional JSON
config file with flag overrides; unknown keys are rejected.
"""

import os
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from conformal_clustering_package.simulate.experiment import ExperimentConfig
from conformal_clustering_package.simulate.generators import GeneratorSource

from .constants import ConformalDefaults, PipelineMode
from .specs import ClassifierSpec, ClustererSpec

_SEED = Field(ge=0, lt=2 ** 64, description="Root seed (unsigned 64-bit)")


class SimulateRunConfig(GeneratorSource):
    """simulate: draw a labeled sample from a known mixture."""
    n: int = Field(ge=1)
    seed: int = _SEED
    features_out: str = Field(description="Features CSV path")
    labels_out: str = Field(description="True labels CSV path")


class FitRunConfig(BaseModel):
    """fit: fit a conformal clustering pipeline on an unlabeled data CSV."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    data: str
    K: int = Field(ge=1)
    alpha: float = Field(default=ConformalDefaults.ALPHA.value, gt=0, lt=1)
    mode: PipelineMode = Field(default=PipelineMode.STOCHASTIC)
    train_fraction: float = Field(default=ConformalDefaults.TRAIN_FRACTION.value, gt=0, lt=1)
    bypass_classifier: bool = Field(default=False)
    clusterer: ClustererSpec = Field(default_factory=ClustererSpec)
    classifier: ClassifierSpec = Field(default_factory=ClassifierSpec)
    seed: int = _SEED
    output: str = Field(description="Pipeline JSON path")

    @model_validator(mode="after")
    def _clustering_mode(self) -> "FitRunConfig":
        if self.mode == PipelineMode.ORACLE_LABELS:
            raise ValueError("mode: 'oracle-labels' needs true labels and is only available in experiments")
        return self


class PredictSetsRunConfig(BaseModel):
    """predict-sets: confidence sets of a fitted pipeline at the rows of a data CSV."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    pipeline: str
    data: str
    output: str


class HeatmapRunConfig(BaseModel):
    """heatmap: set sizes and members over a regular 2-D grid."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    pipeline: str
    x1_min: float
    x1_max: float
    x2_min: float
    x2_max: float
    resolution: int = Field(default=50, ge=1, description="Grid points per axis")
    output: str

    @model_validator(mode="after")
    def _bounds(self) -> "HeatmapRunConfig":
        if not self.x1_min < self.x1_max:
            raise ValueError("x1_min must be smaller than x1_max")
        if not self.x2_min < self.x2_max:
            raise ValueError("x2_min must be smaller than x2_max")
        return self


class DiagnosticsRunConfig(GeneratorSource):
    """diagnostics: estimation error, stability bound and coverage bound per n."""
    clusterer: ClustererSpec = Field(default_factory=ClustererSpec)
    n_grid: List[int] = Field(min_length=1)
    reps: int = Field(default=50, ge=1)
    alpha: float = Field(default=ConformalDefaults.ALPHA.value, gt=0, lt=1)
    seed: int = _SEED
    data: Optional[str] = Field(default=None, description="Not supported: real data has no known posterior")
    output: Optional[str] = Field(default=None, description="Report JSON path; defaults under the output directory")
    table_output: Optional[str] = Field(default=None, description="Optional flat CSV of the report")

    @model_validator(mode="before")
    @classmethod
    def _needs_known_posterior(cls, values):
        if isinstance(values, dict) and values.get("data") is not None:
            raise ValueError(
                "data: diagnostics compare against the true posterior, which only a simulation "
                "generator provides; give 'generator' or 'preset' instead of a data file"
            )
        return values

    @model_validator(mode="after")
    def _even_sizes(self) -> "DiagnosticsRunConfig":
        if any(n < 4 or n % 2 for n in self.n_grid):
            raise ValueError("n_grid: sample sizes must be even and >= 4")
        return self

    def output_path(self, base_dir: str) -> str:
        return self.output or os.path.join(base_dir, "diagnostics.json")


class ExperimentRunConfig(ExperimentConfig):
    """experiment: coverage sweep with tidy and aggregate CSV outputs."""
    tidy_output: Optional[str] = Field(default=None, description="Defaults to <output dir>/<name>_tidy.csv")
    aggregate_output: Optional[str] = Field(default=None, description="Defaults to <output dir>/<name>_aggregate.csv")

    def output_paths(self, base_dir: str) -> Tuple[str, str]:
        return (
            self.tidy_output or os.path.join(base_dir, f"{self.name}_tidy.csv"),
            self.aggregate_output or os.path.join(base_dir, f"{self.name}_aggregate.csv"),
        )
