from pydantic import BaseModel, Field

from utils.utils import format_float

CSV_SCHEMA_VERSION = 2


class ParameterCountRow(BaseModel):
    kind: str
    computed: int
    published: int
    discrepancy: int


class LearningCurvePoint(BaseModel):
    iteration: int = Field(ge=0)
    train_loss: float
    validation_sum_rate: float
    lr: float

    def as_csv(self) -> dict[str, str]:
        return {
            "iteration": str(self.iteration),
            "train_loss": format_float(self.train_loss),
            "validation_sum_rate": format_float(self.validation_sum_rate),
            "lr": repr(self.lr),
        }


class LayoutResult(BaseModel):
    """Sum-rate of one test layout, averaged over the frames it was evaluated on."""

    layout: int
    rho: float
    sum_rate: float

    def as_csv(self) -> dict[str, str]:
        return {"layout": str(self.layout), "rho": format_float(self.rho), "sum_rate": format_float(self.sum_rate)}


class EvaluationResult(BaseModel):
    scheme: str
    n_links: int
    overhead_symbols: int
    overhead_ratio: float
    mean_sum_rate: float
    frame_overheads: list[int] = []
    layouts: list[LayoutResult] = []


class ExperimentRow(BaseModel):
    """One grid point of an experiment; ``rho``/``gamma`` stay empty where the sweep does not vary them."""

    experiment: str
    scheme: str
    n_links: int
    delta_csi: int
    delta_mp: int
    symbols_per_frame: int
    rho: float | None = None
    gamma: float | None = None
    mean_sum_rate: float
    overhead_symbols: int
    overhead_ratio: str
    seed: int
    reference_ratio: float | None = None
    training_seconds: float | None = None

    def sort_key(self) -> tuple:
        return (
            self.scheme,
            self.n_links,
            self.delta_csi,
            self.delta_mp,
            self.symbols_per_frame,
            -1.0 if self.rho is None else self.rho,
            -1.0 if self.gamma is None else self.gamma,
            self.seed,
        )

    def as_csv(self) -> dict[str, str]:
        return {
            "schema_version": str(CSV_SCHEMA_VERSION),
            "experiment": self.experiment,
            "scheme": self.scheme,
            "K": str(self.n_links),
            "delta_csi": str(self.delta_csi),
            "delta_mp": str(self.delta_mp),
            "N_S": str(self.symbols_per_frame),
            "rho": "" if self.rho is None else format_float(self.rho, 2),
            "gamma": "" if self.gamma is None else format_float(self.gamma, 2),
            "mean_sum_rate": format_float(self.mean_sum_rate),
            "overhead_symbols": str(self.overhead_symbols),
            "overhead_ratio": self.overhead_ratio,
            "seed": str(self.seed),
            "ratio_to_reference": "" if self.reference_ratio is None else format_float(self.reference_ratio),
            "training_seconds": "" if self.training_seconds is None else format_float(self.training_seconds, 2),
        }


EXPERIMENT_COLUMNS = list(
    ExperimentRow(
        experiment="",
        scheme="",
        n_links=0,
        delta_csi=0,
        delta_mp=0,
        symbols_per_frame=1,
        mean_sum_rate=0.0,
        overhead_symbols=0,
        overhead_ratio="0",
        seed=0,
    ).as_csv()
)
