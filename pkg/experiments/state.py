# /experiments/state.py
from typing import TypedDict

from config import AppConfig, RunConfig
from gnn import PolicyModel
from netgen import ChannelDataset
from utils.types import ExperimentRow, LearningCurvePoint

from .specs import ExperimentSpec


class ExperimentState(TypedDict, total=False):
    spec: ExperimentSpec
    run_config: RunConfig
    app_config: AppConfig
    datasets: dict[tuple, ChannelDataset]  # ключ: (K, rho, gamma, seed)
    models: dict[str, PolicyModel]
    missing: list[str]  # виды моделей без чекпоинта
    curves: dict[str, list[LearningCurvePoint]]
    references: dict[str, float]  # EPA/WMMSE на отложенных раскладках
    rows: list[ExperimentRow]
    output_path: str  # куда записан CSV
