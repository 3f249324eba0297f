import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import templates
from config import AppConfig, RunConfig
from evalmetrics import format_ratio
from gnn import PolicyKind, load_checkpoint, save_checkpoint
from netgen import ChannelDataset, generate_dataset, load_dataset
from train import evaluate, train
from utils.exceptions import MissingCheckpointError
from utils.types import CSV_SCHEMA_VERSION, EXPERIMENT_COLUMNS, ExperimentRow
from utils.utils import format_float, save_json, write_csv

from .specs import AIR_SCHEMES, GridPoint, field_length_for_density
from .state import ExperimentState

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["schema_version", "experiment", "scheme", "iteration", "train_loss", "validation_sum_rate", "lr", "seed"]
TRAIN_DATASET_FILE = "train.agds"
# базовые схемы, которые рисуются рядом с кривыми обучения
CURVE_REFERENCES = ("epa", "wmmse")


def checkpoint_path(app: AppConfig, kind: str) -> Path:
    return Path(app.checkpoint_dir) / f"{kind}.agck"


def training_dataset(app: AppConfig, cfg: RunConfig) -> ChannelDataset:
    """Training layouts from ``gen-data`` if present, otherwise generated from the channel settings."""
    path = Path(app.data_dir) / TRAIN_DATASET_FILE
    if path.exists():
        logger.info("Используем обучающие данные из %s", path)
        return load_dataset(path)
    return generate_dataset(cfg.channel, cfg.channel.train_layouts, cfg.channel.seed)


def prepare_datasets(state: ExperimentState) -> ExperimentState:
    """Генерация тестовых наборов для всех точек сетки."""
    logger.info("--- УЗЕЛ: ПОДГОТОВКА ТЕСТОВЫХ ДАННЫХ ---")
    spec, cfg = state["spec"], state["run_config"]
    keys = sorted({point.dataset_key for point in spec.grid()}, key=repr)

    def build(key: tuple) -> ChannelDataset:
        n_links, rho, gamma, seed = key
        length = field_length_for_density(n_links, gamma, cfg.channel.link_density)
        return generate_dataset(cfg.channel, spec.test_layouts, seed, n_links=n_links, field_length=length, rho=rho)

    with ThreadPoolExecutor(max_workers=4) as executor:
        state["datasets"] = dict(zip(keys, executor.map(build, keys)))
    logger.info("Подготовлено тестовых наборов: %d", len(keys))
    return state


def load_checkpoints(state: ExperimentState) -> ExperimentState:
    """Загрузка обученных моделей; отсутствующие попадают в state['missing']."""
    logger.info("--- УЗЕЛ: ЗАГРУЗКА ЧЕКПОИНТОВ ---")
    spec, app = state["spec"], state["app_config"]
    models, missing = {}, []
    for kind in spec.required_models():
        path = checkpoint_path(app, kind)
        if spec.needs_training_curves or not path.exists():
            missing.append(kind)
            continue
        models[kind] = load_checkpoint(path)
        logger.info("Загружен чекпоинт %s: %s", kind, path)
    state["models"] = models
    state["missing"] = missing
    return state


def route_after_checkpoints(state: ExperimentState) -> str:
    spec = state["spec"]
    if spec.needs_training_curves or (state["missing"] and spec.train_if_missing):
        return "train_models"
    if state["missing"]:
        return "missing_checkpoints"
    return "evaluate_grid"


def route_after_training(state: ExperimentState) -> str:
    return "write_results" if state["spec"].needs_training_curves else "evaluate_grid"


def _reference_rates(dataset: ChannelDataset, cfg: RunConfig) -> dict[str, float]:
    """Overhead-discounted EPA and WMMSE rates on the layouts the trainer holds out for validation."""
    _, validation = dataset.split(cfg.train.validation_fraction, seed=cfg.train.seed)
    if len(validation) == 0:
        logger.warning("Нет отложенных раскладок: опорные кривые не строятся")
        return {}
    return {scheme: evaluate(scheme, validation, cfg, workers=1).mean_sum_rate for scheme in CURVE_REFERENCES}


def train_models(state: ExperimentState) -> ExperimentState:
    """Обучение недостающих моделей и сохранение чекпоинтов."""
    logger.info("--- УЗЕЛ: ОБУЧЕНИЕ МОДЕЛЕЙ ---")
    app, cfg = state["app_config"], state["run_config"]
    dataset = training_dataset(app, cfg)
    curves = state.get("curves", {})
    for kind in state["missing"]:
        result = train(kind, dataset, cfg, checkpoint_dir=app.checkpoint_dir)
        save_checkpoint(checkpoint_path(app, kind), result.model)
        state["models"][kind] = result.model
        curves[kind] = result.curve
    if state["spec"].needs_training_curves:
        state["references"] = _reference_rates(dataset, cfg)
    state["curves"] = curves
    state["missing"] = []
    return state


def missing_checkpoints(state: ExperimentState) -> ExperimentState:
    """Эксперименту нужна необученная модель: сообщаем, какую команду запустить."""
    logger.info("--- УЗЕЛ: НЕТ ЧЕКПОИНТА ---")
    kind = state["missing"][0]
    path = checkpoint_path(state["app_config"], kind)
    raise MissingCheckpointError(kind, str(path), templates.MISSING_CHECKPOINT_HINT.format(kind=kind, path=path))


def _evaluate_point(state: ExperimentState, point: GridPoint) -> ExperimentRow:
    spec, cfg = state["spec"], state["run_config"]
    overhead = cfg.overhead.model_copy(
        update={"delta_csi": point.delta_csi, "delta_mp": point.delta_mp, "symbols_per_frame": point.symbols_per_frame}
    )
    point_cfg = cfg.model_copy(update={"overhead": overhead})
    models = state["models"]
    warm_start = None
    if spec.warm_start and point.scheme == PolicyKind.AIR_MPRNN.value:
        warm_start = models[PolicyKind.AIR_MPNN.value]
    result = evaluate(
        models.get(point.scheme, point.scheme),
        state["datasets"][point.dataset_key],
        point_cfg,
        mode=spec.mode if point.scheme in AIR_SCHEMES else "ideal",
        warm_start=warm_start,
        seed=point.seed,
        workers=1,
    )
    return ExperimentRow(
        experiment=spec.experiment_id,
        scheme=point.scheme,
        n_links=point.n_links,
        delta_csi=point.delta_csi,
        delta_mp=point.delta_mp,
        symbols_per_frame=point.symbols_per_frame,
        rho=point.rho,
        gamma=point.gamma,
        mean_sum_rate=result.mean_sum_rate,
        overhead_symbols=result.overhead_symbols,
        overhead_ratio=format_ratio(result.overhead_ratio),
        seed=point.seed,
        training_seconds=models[point.scheme].training_seconds if point.scheme in models else None,
    )


def _with_reference_ratios(rows: list[ExperimentRow], reference: str) -> list[ExperimentRow]:
    def key(row: ExperimentRow) -> tuple:
        return row.sort_key()[1:]

    baseline = {key(row): row.mean_sum_rate for row in rows if row.scheme == reference}
    return [
        row.model_copy(update={"reference_ratio": row.mean_sum_rate / baseline[key(row)]})
        if baseline.get(key(row)) else row
        for row in rows
    ]


def evaluate_grid(state: ExperimentState) -> ExperimentState:
    """Оценка всех схем во всех точках сетки; строки сортируются по ключу сетки."""
    logger.info("--- УЗЕЛ: ОЦЕНКА ПО СЕТКЕ ---")
    spec = state["spec"]
    points = spec.grid()
    with ThreadPoolExecutor(max_workers=4) as executor:
        rows = list(executor.map(lambda point: _evaluate_point(state, point), points))
    if spec.reference_scheme is not None:
        rows = _with_reference_ratios(rows, spec.reference_scheme)
    state["rows"] = sorted(rows, key=ExperimentRow.sort_key)
    logger.info("Оценено точек сетки: %d", len(rows))
    return state


def write_results(state: ExperimentState) -> ExperimentState:
    """Запись CSV с результатами эксперимента."""
    logger.info("--- УЗЕЛ: ЗАПИСЬ РЕЗУЛЬТАТОВ ---")
    spec = state["spec"]
    if spec.needs_training_curves:
        seed = str(state["run_config"].train.seed)
        curves = state["curves"]
        rows = [
            {
                "schema_version": str(CSV_SCHEMA_VERSION),
                "experiment": spec.experiment_id,
                "scheme": kind,
                **point.as_csv(),
                "seed": seed,
            }
            for kind in sorted(curves)
            for point in curves[kind]
        ]
        # опорные схемы не обучаются: постоянная скорость на каждой итерации кривой
        iterations = sorted({point.iteration for curve in curves.values() for point in curve})
        rows += [
            {
                "schema_version": str(CSV_SCHEMA_VERSION),
                "experiment": spec.experiment_id,
                "scheme": scheme,
                "iteration": str(iteration),
                "train_loss": "",
                "validation_sum_rate": format_float(rate),
                "lr": "",
                "seed": seed,
            }
            for scheme, rate in sorted(state.get("references", {}).items())
            for iteration in iterations
        ]
        write_csv(spec.output, rows, CURVE_COLUMNS)
    else:
        write_csv(spec.output, [row.as_csv() for row in state["rows"]], EXPERIMENT_COLUMNS)
    # Параметры запуска рядом с CSV
    save_json(
        {"spec": spec.model_dump(mode="json"), "run_config": state["run_config"].model_dump(mode="json")},
        Path(spec.output).with_suffix(".json"),
    )
    state["output_path"] = str(spec.output)
    logger.info("Результаты сохранены в: %s", spec.output)
    return state
