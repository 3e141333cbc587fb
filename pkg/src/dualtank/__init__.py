"""Co-design of a dual-tank thermal management plant and its control schedule.

The package pairs a nonlinear lumped-parameter plant model with two design
algorithms: a robust co-design that nests a constraint-tightened MPC and
scheduled LQR feedback inside a derivative-free search over plant parameters,
and an open-loop direct-transcription baseline optimized against a single
disturbance profile. Designs serialize to JSON/CSV and replay in closed or
open loop against perturbed profiles.
"""

from .boxes import BoxSet, box
from .errors import (
    DegenerateFlow,
    DualTankError,
    NoFeasiblePoint,
    NotControllable,
    RiccatiDiverged,
    ScenarioError,
    SingularMass,
)
from .olccd import OlccdOptions, TranscriptionVector, open_loop_replay, transcribe_and_solve
from .patternsearch import SearchOptions, pattern_search
from .plant import (
    CP_WATER,
    PlantParams,
    jacobians,
    mix,
    rk4_step,
    simulate_interval,
    state_derivative,
)
from .profiles import DisturbanceProfile, load_profile, perturb_profile, save_profile
from .qp import QpSolution, QpStatus, QuadraticProgram, phase1_feasibility, solve_qp
from .rccd import (
    DesignVector,
    LqrConfig,
    RolloutResult,
    Schedules,
    closed_loop_replay,
    inner_rollout,
    objective,
    outer_optimize,
)
from .results import DesignResult, load_design, save_design
from .rmpc import (
    RmpcConfig,
    RmpcSolution,
    build_prediction,
    solve_rmpc,
    tighten_constraints,
    worst_case_oracle,
)
from .scenario import Scenario, load_scenario
from .synthesis import (
    AffineModel,
    discretize_zoh,
    dlqr,
    extract_controllable,
    linearize_discretize,
    matrix_exponential,
    spectral_radius,
)

__version__ = "0.1.0"
