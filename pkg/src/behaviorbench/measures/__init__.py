from behaviorbench.measures.scenario import (
    ScenarioEntry,
    ScenarioSet,
    load_scenario_set,
    save_scenario_set,
)
from behaviorbench.measures.measure import (
    BehaviorMeasure,
    evaluate,
    evaluate_with,
    evaluation_report,
    gradient,
    load_measure,
    measure_node,
    save_measure,
)
from behaviorbench.measures.fixtures import (
    collision_measure_fixture,
    write_reference_archive,
)
from behaviorbench.measures.rollouts import build_from_rollouts

__all__ = [
    "BehaviorMeasure",
    "ScenarioEntry",
    "ScenarioSet",
    "build_from_rollouts",
    "collision_measure_fixture",
    "evaluate",
    "evaluate_with",
    "evaluation_report",
    "gradient",
    "load_measure",
    "load_scenario_set",
    "measure_node",
    "save_measure",
    "save_scenario_set",
    "write_reference_archive",
]
