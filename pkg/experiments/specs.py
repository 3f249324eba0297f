import itertools
import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from config import RunConfig
from evalmetrics import Scheme, as_scheme
from gnn import PolicyKind
from utils.exceptions import UsageError

ExperimentId = Literal[
    "table3",
    "fig5-curve",
    "fig6-size-sweep",
    "fig7-overhead-sweep",
    "fig8-framelen-sweep",
    "table4-rho-sweep",
    "fig9-density-sweep",
]

EXPERIMENT_IDS: tuple[str, ...] = ExperimentId.__args__

ALL_SCHEMES = [s.value for s in Scheme]
GNN_SCHEMES = [k.value for k in PolicyKind]
AIR_SCHEMES = {Scheme.AIR_WMMSE.value, Scheme.AIR_MPNN.value, Scheme.AIR_MPRNN.value}


class GridPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    scheme: str
    n_links: int
    delta_csi: int
    delta_mp: int
    symbols_per_frame: int
    rho: float | None
    gamma: float
    seed: int

    @property
    def dataset_key(self) -> tuple:
        return (self.n_links, self.rho, self.gamma, self.seed)


class ExperimentSpec(BaseModel):
    """
    One experiment: which schemes are evaluated on which grid of test conditions.

    Test field lengths follow from the density factor gamma = beta_train / beta_test,
    i.e. l = sqrt(K * gamma / beta_train); gamma = 1 keeps the training density.
    """

    model_config = ConfigDict(extra="forbid")

    experiment_id: ExperimentId
    schemes: list[str] = Field(min_length=1)
    n_links: list[int] = Field([20], min_length=1)
    overheads: list[tuple[int, int]] = Field([(1, 5)], min_length=1)
    symbols_per_frame: list[int] = Field([3000], min_length=1)
    # None -> rho ~ U[0, 1) per layout
    rho: list[float | None] = Field([None], min_length=1)
    gamma: list[float] = Field([1.0], min_length=1)
    seeds: list[int] = Field([2024], min_length=1)
    test_layouts: int = Field(500, ge=1)
    reference_scheme: str | None = None
    mode: Literal["ideal", "physical"] = "ideal"
    warm_start: bool = False
    train_if_missing: bool = False
    output: Path

    @field_validator("schemes")
    @classmethod
    def check_schemes(cls, schemes: list[str]) -> list[str]:
        return [as_scheme(s).value for s in schemes]

    @property
    def needs_training_curves(self) -> bool:
        return self.experiment_id == "fig5-curve"

    def required_models(self) -> list[str]:
        kinds = [s for s in self.schemes if s in GNN_SCHEMES]
        if self.warm_start and PolicyKind.AIR_MPRNN.value in kinds and PolicyKind.AIR_MPNN.value not in kinds:
            kinds.append(PolicyKind.AIR_MPNN.value)
        return kinds

    def grid(self) -> list[GridPoint]:
        if self.needs_training_curves:
            return []
        return [
            GridPoint(
                scheme=scheme,
                n_links=k,
                delta_csi=delta_csi,
                delta_mp=delta_mp,
                symbols_per_frame=n_s,
                rho=rho,
                gamma=gamma,
                seed=seed,
            )
            for scheme, k, (delta_csi, delta_mp), n_s, rho, gamma, seed in itertools.product(
                self.schemes, self.n_links, self.overheads, self.symbols_per_frame, self.rho, self.gamma, self.seeds
            )
        ]


def field_length_for_density(n_links: int, gamma: float, train_density: float) -> float:
    return math.sqrt(n_links * gamma / train_density)


def default_spec(experiment_id: str, cfg: RunConfig, results_dir: str | Path = "results") -> ExperimentSpec:
    """Default grids of every experiment, built around the channel and overhead settings in ``cfg``."""
    ch, oh = cfg.channel, cfg.overhead
    common = {
        "experiment_id": experiment_id,
        "n_links": [ch.n_links],
        "overheads": [(oh.delta_csi, oh.delta_mp)],
        "symbols_per_frame": [oh.symbols_per_frame],
        "seeds": [ch.test_seed],
        "test_layouts": ch.test_layouts,
        "output": Path(results_dir) / f"{experiment_id}.csv",
    }
    table3 = [s for s in ALL_SCHEMES if s != Scheme.AIR_WMMSE.value]
    grids = {
        "table3": {"schemes": table3},
        "fig5-curve": {"schemes": GNN_SCHEMES},
        "fig6-size-sweep": {
            "schemes": ALL_SCHEMES,
            "n_links": [10, 20, 30, 40, 50],
            "overheads": [(0, 0), (1, 5), (2, 20)],
        },
        "fig7-overhead-sweep": {
            "schemes": ALL_SCHEMES,
            "overheads": [(0, 0), (1, 1), (1, 5), (1, 10), (2, 10), (2, 20)],
        },
        "fig8-framelen-sweep": {
            "schemes": ALL_SCHEMES,
            "n_links": [30],
            "symbols_per_frame": [500, 1000, 2000, 3000, 4000, 5000, 6000],
        },
        "table4-rho-sweep": {
            "schemes": [Scheme.AIR_MPNN.value, Scheme.AIR_MPRNN.value],
            "n_links": [30],
            "rho": [0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.99],
            "reference_scheme": Scheme.AIR_MPNN.value,
        },
        "fig9-density-sweep": {
            "schemes": ALL_SCHEMES,
            "gamma": [0.25, 0.5, 1.0, 2.0, 4.0],
        },
    }
    if experiment_id not in grids:
        raise UsageError(f"unknown experiment '{experiment_id}', expected one of {list(grids)}")
    return ExperimentSpec(**{**common, **grids[experiment_id]})
