from behaviorbench.explain.counterfactual import CounterfactualResult, counterfactual
from behaviorbench.explain.influence import InfluenceReport, influence
from behaviorbench.explain.shapley import (
    ShapleyReport,
    behavior_shapley,
    exact_shapley,
    marginalized_policy_table,
)
from behaviorbench.explain.toy_mdp import (
    TabularMdp,
    expected_return,
    occupancy,
    state_values,
    toy_chain,
)

__all__ = [
    "CounterfactualResult",
    "InfluenceReport",
    "ShapleyReport",
    "TabularMdp",
    "behavior_shapley",
    "counterfactual",
    "exact_shapley",
    "expected_return",
    "influence",
    "marginalized_policy_table",
    "occupancy",
    "state_values",
    "toy_chain",
]
