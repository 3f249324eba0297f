import logging
from enum import Enum
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from config import PUBLISHED_PARAMETER_COUNTS, ModelConfig
from diffmath import Activation, MlpParams, Tensor, read_checkpoint, write_checkpoint
from utils.exceptions import CheckpointError, ConfigurationError
from utils.types import ParameterCountRow

logger = logging.getLogger(__name__)

MESSAGE_WIDTH = 32
OUTPUT_HIDDEN = 16
AGGREGATIONS = ("sum", "mean", "max")


class PolicyKind(str, Enum):
    MPNN = "mpnn"
    AIR_MPNN = "air-mpnn"
    AIR_MPRNN = "air-mprnn"


class NormStats(BaseModel):
    """Training-set statistics of linear power gains (direct links and interference links kept apart)."""

    direct_mean: float
    direct_std: float = Field(gt=0)
    interference_mean: float
    interference_std: float = Field(gt=0)


def normalize_gain(x, mean: float, std: float):
    """(x - mean) / std; works on scalars and arrays."""
    if not std > 0:
        raise ConfigurationError(f"normalization std must be positive, got {std}")
    return (x - mean) / std


def structure(kind: PolicyKind, embed_dim: int = 8) -> dict[str, list[int]]:
    """
    Layer dims of the message (phi), update and output (omega) MLPs.

    With embed_dim = 8:
        mpnn       phi {10,32,32}    update {41,16,8}   omega {8,16,1}
        air-mpnn   phi {9,32,32,1}   update {10,16,8}   omega {8,16,1}
        air-mprnn  phi {9,32,32,1}   update {10,32,8}   omega {8,16,1}
    """
    e = embed_dim
    omega = [e, OUTPUT_HIDDEN, 1]
    if kind is PolicyKind.MPNN:
        return {"phi": [e + 2, MESSAGE_WIDTH, MESSAGE_WIDTH], "update": [e + MESSAGE_WIDTH + 1, 16, e], "omega": omega}
    if kind is PolicyKind.AIR_MPNN:
        return {"phi": [e + 1, MESSAGE_WIDTH, MESSAGE_WIDTH, 1], "update": [e + 2, 16, e], "omega": omega}
    return {"phi": [e + 1, MESSAGE_WIDTH, MESSAGE_WIDTH, 1], "update": [e + 2, 32, e], "omega": omega}


class PolicyModel:
    """
    A trained (or freshly initialized) power control policy.

    ``max_power`` scales the sigmoid pilot-power head of the air kinds to [0, P_max] mW.
    """

    def __init__(
        self,
        kind: PolicyKind,
        phi: MlpParams,
        update: MlpParams,
        omega: MlpParams,
        layers: int,
        embed_dim: int = 8,
        aggregation: str = "sum",
        norm_stats: NormStats | None = None,
        max_power: float = 1e4,
        training_seconds: float | None = None,
    ):
        self.kind = PolicyKind(kind)
        self.phi = phi
        self.update = update
        self.omega = omega
        self.layers = layers
        self.embed_dim = embed_dim
        self.aggregation = aggregation
        self.norm_stats = norm_stats or NormStats(
            direct_mean=0.0, direct_std=1.0, interference_mean=0.0, interference_std=1.0
        )
        self.max_power = max_power
        self.training_seconds = training_seconds  # seconds, when known

        if aggregation not in AGGREGATIONS:
            raise ConfigurationError(f"aggregation must be one of {AGGREGATIONS}, got '{aggregation}'")
        if layers < 1 or (self.kind is PolicyKind.AIR_MPRNN and layers != 1):
            raise ConfigurationError(f"{self.kind.value} cannot have {layers} layers")
        expected = structure(self.kind, embed_dim)
        for name, mlp in self.mlps.items():
            if mlp.layer_dims != expected[name]:
                raise ConfigurationError(
                    f"{self.kind.value} {name} MLP must be {expected[name]}, got {mlp.layer_dims}"
                )
        if omega.output_activation is not Activation.SIGMOID:
            raise ConfigurationError("output MLP needs a sigmoid head")

    @property
    def mlps(self) -> dict[str, MlpParams]:
        return {"phi": self.phi, "update": self.update, "omega": self.omega}

    def parameters(self) -> list[Tensor]:
        return self.phi.parameters() + self.update.parameters() + self.omega.parameters()

    @property
    def parameter_count(self) -> int:
        return sum(mlp.parameter_count for mlp in self.mlps.values())

    def with_norm_stats(self, norm_stats: NormStats) -> "PolicyModel":
        self.norm_stats = norm_stats
        return self

    def copy(self) -> "PolicyModel":
        return PolicyModel(
            self.kind,
            self.phi.copy(),
            self.update.copy(),
            self.omega.copy(),
            self.layers,
            self.embed_dim,
            self.aggregation,
            self.norm_stats.model_copy(),
            self.max_power,
            self.training_seconds,
        )

    def header(self) -> dict:
        header = {
            "kind": self.kind.value,
            "layers": self.layers,
            "embed_dim": self.embed_dim,
            "aggregation": self.aggregation,
            "norm_stats": self.norm_stats.model_dump(),
            "max_power": self.max_power,
        }
        if self.training_seconds is not None:
            header["training_seconds"] = self.training_seconds
        return header

    def __repr__(self) -> str:
        return f"PolicyModel(kind={self.kind.value}, layers={self.layers}, parameters={self.parameter_count})"


def build_model(
    kind: PolicyKind | str,
    cfg: ModelConfig | None = None,
    norm_stats: NormStats | None = None,
    max_power: float = 1e4,
    seed: int | None = None,
) -> PolicyModel:
    """Glorot-initialized policy of the given kind; MPNN messages are linear, air pilot heads sigmoid."""
    kind = PolicyKind(getattr(kind, "value", kind))
    cfg = cfg or ModelConfig()
    rng = np.random.default_rng(cfg.init_seed if seed is None else seed)
    dims = structure(kind, cfg.embed_dim)
    phi_head = Activation.LINEAR if kind is PolicyKind.MPNN else Activation.SIGMOID
    layers = {PolicyKind.MPNN: cfg.mpnn_layers, PolicyKind.AIR_MPNN: cfg.air_mpnn_layers}.get(kind, 1)
    return PolicyModel(
        kind,
        phi=MlpParams.initialize(dims["phi"], rng, phi_head),
        update=MlpParams.initialize(dims["update"], rng, Activation.LINEAR),
        omega=MlpParams.initialize(dims["omega"], rng, Activation.SIGMOID),
        layers=layers,
        embed_dim=cfg.embed_dim,
        aggregation=cfg.aggregation,
        norm_stats=norm_stats,
        max_power=max_power,
    )


def parameter_report(cfg: ModelConfig | None = None) -> list[ParameterCountRow]:
    """Computed parameter counts of all kinds next to the published ones."""
    rows = []
    for kind in PolicyKind:
        computed = build_model(kind, cfg).parameter_count
        published = PUBLISHED_PARAMETER_COUNTS[kind.value]
        if computed != published:
            logger.warning(
                "%s: %d parameters from the layer structure, %d published", kind.value, computed, published
            )
        rows.append(
            ParameterCountRow(kind=kind.value, computed=computed, published=published, discrepancy=computed - published)
        )
    return rows


def save_checkpoint(path: str | Path, model: PolicyModel) -> None:
    write_checkpoint(path, model.header(), model.mlps)


def load_checkpoint(path: str | Path) -> PolicyModel:
    header, mlps = read_checkpoint(path)
    try:
        kind = PolicyKind(header["kind"])
        return PolicyModel(
            kind,
            phi=mlps["phi"],
            update=mlps["update"],
            omega=mlps["omega"],
            layers=int(header["layers"]),
            embed_dim=int(header["embed_dim"]),
            aggregation=header.get("aggregation", "sum"),
            norm_stats=NormStats(**header["norm_stats"]),
            max_power=float(header.get("max_power", 1e4)),
            training_seconds=header.get("training_seconds"),
        )
    except (KeyError, ValueError, ConfigurationError) as e:
        raise CheckpointError(f"{path} does not hold a usable policy: {e}") from e
