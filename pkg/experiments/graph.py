# /experiments/graph.py
import logging
from pathlib import Path

from langgraph.graph import END, StateGraph

from config import AppConfig, RunConfig

from . import nodes
from .specs import ExperimentSpec
from .state import ExperimentState

logger = logging.getLogger(__name__)


def create_experiment_graph():
    """Создает и компилирует граф эксперимента."""
    graph = StateGraph(ExperimentState)

    # Добавление узлов графа
    graph.add_node("prepare_datasets", nodes.prepare_datasets)
    graph.add_node("load_checkpoints", nodes.load_checkpoints)
    graph.add_node("train_models", nodes.train_models)
    graph.add_node("missing_checkpoints", nodes.missing_checkpoints)
    graph.add_node("evaluate_grid", nodes.evaluate_grid)
    graph.add_node("write_results", nodes.write_results)

    # Определение ребер графа
    graph.set_entry_point("prepare_datasets")
    graph.add_edge("prepare_datasets", "load_checkpoints")

    # Условное ветвление: обучить, сообщить об отсутствии чекпоинта или сразу оценивать
    graph.add_conditional_edges("load_checkpoints", nodes.route_after_checkpoints)
    graph.add_conditional_edges("train_models", nodes.route_after_training)

    graph.add_edge("evaluate_grid", "write_results")

    # Завершение работы
    graph.add_edge("write_results", END)
    graph.add_edge("missing_checkpoints", END)

    # Компиляция графа
    return graph.compile()


def run_experiment(spec: ExperimentSpec, run_config: RunConfig, app_config: AppConfig | None = None) -> Path:
    """Runs one experiment end to end and returns the CSV it wrote."""
    app = create_experiment_graph()
    final_state = app.invoke(
        {
            "spec": spec,
            "run_config": run_config,
            "app_config": app_config or AppConfig(),
            "datasets": {},
            "models": {},
            "missing": [],
            "curves": {},
            "rows": [],
            "output_path": "",
        }
    )
    logger.info("experiment %s done: %s", spec.experiment_id, final_state["output_path"])
    return Path(final_state["output_path"])
