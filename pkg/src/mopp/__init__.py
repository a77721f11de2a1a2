"""Linear-scalarization proximal point methods for multiobjective minimization."""

from .criticality import (
    CriticalityCertificate,
    criticality_certificate,
    descent_direction,
    fejer_check,
    pareto_grid_oracle,
    weak_pareto_grid_oracle,
)
from .errors import (
    BudgetError,
    ConfigError,
    ContractError,
    EvaluationError,
    InnerSolveError,
    IoError,
    OracleError,
    WeightError,
)
from .inner_solver import InnerConfig, SubproblemSolution, penalty_objective, prox_convex, solve_subproblem
from .model import DominanceRelation, ProblemSpec, dominates, evaluate, jacobian
from .outer_loop import (
    AlphaSchedule,
    IterationRecord,
    RunReport,
    SolverConfig,
    SummableSequence,
    check_stop,
    delta_k,
    run,
    run_cispp,
    run_ispp,
    run_spp,
    step_residual,
)
from .problems import REGISTRY, get_problem, validate_problem
from .scalarization import normalize_weights, scalarize, strict_representation_check

__version__ = "0.1.0"
