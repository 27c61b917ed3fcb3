"""Online routing on capacity-constrained parallel networks.

Greedy routing, offline optima, scenario-learned randomized policies with
risk bounds, and the experiment harness that compares them.
"""
from .greedy import NoCapacityError, empirical_ratio, greedy_route, total_cost
from .harness import ExperimentReport, StageError, run_experiment
from .instance import (
    ArrivalProfile,
    InputSequence,
    NetworkSpec,
    ScenarioPreset,
    derive_seed,
    get_preset,
    sample_sequence,
    validate,
)
from .lp import LinearProgram, LpSolution, lexicographic_solve, solve
from .offline import Assignment, opt_fractional, opt_integral_bruteforce
from .online import expected_cost, route_online
from .scenario import (
    RiskInterval,
    TdPolicy,
    TiPolicy,
    count_support_constraints,
    learn_td,
    learn_ti,
    risk_interval,
    violation_check,
)
from .worstcase import three_arc_instance, two_vot_instance, two_vot_ratio

__version__ = "0.1.0"
