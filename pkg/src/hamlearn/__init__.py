"""Online learning of continuous-time recurrent networks as Hamiltonian optimal control."""
from .backend import NAME as BACKEND
from .graph import NetGraph, StructureError, build_graph, full_graph, layered_graph, switch_sums_check
from .dynamics import Activation, InputSignal, SpeedConstants, bibo_bound, state_rhs
from .costate import (
    HamiltonianConfig,
    LossSpec,
    NetworkHamiltonian,
    NotDAG,
    SingularActivation,
    backprop_limit_lambda,
    equilibrium_state,
)
from .integrator import IntegratorConfig, NumericalBlowup, TrajectoryLog, integrate, integrate_backward
from .policy import AlwaysForward, Periodic, TrackBall, internal_time, make_policy, sign_at
from .bvp import LQControlProblem, NetworkControlProblem, NoConvergence, bvp_sweep, network_bvp_sweep
from .lq import LQProblem, algebraic_riccati_roots, riccati_rhs, simultaneous_flip_check, stable_root
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .experiments import TargetSignal, run_experiment, sweep

__version__ = "0.1.0"
