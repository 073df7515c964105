"""Gradient-sampling optimisation of variational circuits, with PSR/RCD/SPSA baselines."""
from .gradients import ExpectationObjective, default_lipschitz, fd_gradient, psr_gradient, psr_partial
from .observables import Observable, PauliTerm, expval, normalize, sample_expval_obs
from .optimizers import OptimizerConfig, OptState, run_optimizer
from .shots_cost import ExecutionLedger, PricingProfile, builtin_profiles, cost, shots_for_descent, shots_for_precision
from .statevector import CX, RX, RY, RZ, Evaluator, H, ParamCircuit, RZConst, StateVector, init_zero, run_circuit

__version__ = "0.1.0"
