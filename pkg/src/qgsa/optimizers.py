"""Gradient-sampling descent and the baselines it is compared against.

Every step function takes an :class:`OptState` (mutated in place) and an
objective exposing ``value``, ``exact_value``, ``exact_gradient``,
``psr_gradient``, ``psr_partial`` and ``lipschitz`` (see
:class:`qgsa.gradients.ExpectationObjective` and :class:`qgsa.qml.RiskObjective`),
and returns a :class:`StepOutcome` carrying the ledger cost of the step.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .shots_cost import ExecutionLedger, LedgerDelta, PricingProfile
from .statevector import Evaluator

log = logging.getLogger(__name__)

METHODS = ("qgsa_ideal", "qgsa_practical", "gd", "rcd", "spsa")
DISTRIBUTIONS = ("uniform", "truncated_gaussian")


class Objective(Protocol):
    k: int

    def value(self, theta, evaluator: Evaluator) -> tuple[float, LedgerDelta]: ...
    def exact_value(self, theta) -> float: ...
    def exact_gradient(self, theta) -> np.ndarray: ...
    def psr_gradient(self, theta, evaluator: Evaluator) -> tuple[np.ndarray, LedgerDelta]: ...
    def psr_partial(self, theta, i: int, evaluator: Evaluator) -> tuple[float, LedgerDelta]: ...
    def lipschitz(self) -> float: ...


@dataclass
class OptState:
    theta: np.ndarray
    alpha: float
    rng: np.random.Generator
    t: int = 0
    stall_count: int = 0
    mu_cache: float | None = None

    def __post_init__(self):
        self.theta = np.array(self.theta, dtype=float)
        if self.alpha <= 0:
            raise ValueError("step size must be positive")


@dataclass(frozen=True)
class SampledDirection:
    g_s: np.ndarray
    half_width: float


@dataclass
class StepOutcome:
    accepted: bool
    new_theta: np.ndarray
    mu_new: float | None
    circuits_used: int = 0
    shots_used: int = 0
    update_circuits: int = 0
    direction_sign: int | None = None

    def charge(self, delta: LedgerDelta, update: bool = True):
        self.circuits_used += delta.circuits
        self.shots_used += delta.shots
        if update:
            self.update_circuits += delta.circuits


def sample_direction(mu: float, k: int, rng: np.random.Generator, distribution: str = "uniform",
                     floor: float = 0.0) -> SampledDirection:
    """Random surrogate gradient with i.i.d. components in ``[-w, w]``, ``w = max(2 sqrt|mu|, floor)``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if floor < 0:
        raise ValueError("floor must be non-negative")
    half_width = max(2.0 * np.sqrt(abs(mu)), floor)
    if half_width == 0.0:
        return SampledDirection(np.zeros(k), 0.0)
    if distribution == "uniform":
        g = rng.uniform(-half_width, half_width, size=k)
    elif distribution == "truncated_gaussian":
        # N(0, (w/2)^2) restricted to [-w, w] by rejection
        g = np.empty(k)
        todo = np.arange(k)
        while todo.size:
            draw = rng.normal(0.0, half_width / 2.0, size=todo.size)
            ok = np.abs(draw) <= half_width
            g[todo[ok]] = draw[ok]
            todo = todo[~ok]
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    return SampledDirection(g, half_width)


def ideal_step_size(g: np.ndarray, g_s: np.ndarray, L: float, a: float = 2.0) -> float:
    """``2 |g . g_s| / (a L |g_s|^2)``; ``a > 1`` keeps it inside the descent range."""
    g_s = np.asarray(g_s, dtype=float)
    norm2 = float(g_s @ g_s)
    if norm2 == 0.0:
        raise ValueError("sampled direction is zero")
    if a <= 1:
        raise ValueError("a must exceed 1")
    if L <= 0:
        raise ValueError("L must be positive")
    return 2.0 * abs(float(np.dot(g, g_s))) / (a * L * norm2)


def _draw_nonzero(mu, k, rng, distribution, floor, max_resamples):
    for _ in range(max_resamples + 1):
        d = sample_direction(mu, k, rng, distribution, floor)
        if np.any(d.g_s):
            return d
    return None


def qgsa_ideal_step(state: OptState, objective: Objective, mu_eval: Evaluator, g_eval: Evaluator,
                    L: float, a: float = 2.0, distribution: str = "uniform", floor: float = 1e-3,
                    max_resamples: int = 5) -> StepOutcome:
    """One iteration with the true gradient available for the step size.

    Both candidates are always evaluated; ties go to ``theta - alpha g_s``.
    """
    out = StepOutcome(False, state.theta.copy(), None)
    mu, d = objective.value(state.theta, mu_eval)
    out.charge(d, update=False)
    direction = _draw_nonzero(mu, objective.k, state.rng, distribution, floor, max_resamples)
    if direction is None:
        return out
    g = objective.exact_gradient(state.theta)
    alpha = ideal_step_size(g, direction.g_s, L, a)
    state.alpha = alpha if alpha > 0 else state.alpha
    minus = state.theta - alpha * direction.g_s
    plus = state.theta + alpha * direction.g_s
    mu_minus, d = objective.value(minus, g_eval)
    out.charge(d)
    mu_plus, d = objective.value(plus, g_eval)
    out.charge(d)
    if mu_minus <= mu_plus:
        state.theta, out.mu_new, out.direction_sign = minus, mu_minus, 1
    else:
        state.theta, out.mu_new, out.direction_sign = plus, mu_plus, -1
    out.accepted = True
    out.new_theta = state.theta.copy()
    return out


def qgsa_practical_step(state: OptState, objective: Objective, mu_eval: Evaluator, g_eval: Evaluator,
                        gamma: float = 0.1, distribution: str = "uniform", floor: float = 1e-3,
                        reuse_mu: bool = False) -> StepOutcome:
    """One iteration without gradient access: try ``theta - alpha g_s``, then ``+``, else shrink alpha."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    out = StepOutcome(False, state.theta.copy(), None)
    if reuse_mu and state.mu_cache is not None:
        mu = state.mu_cache
    else:
        mu, d = objective.value(state.theta, mu_eval)
        out.charge(d, update=False)
    direction = sample_direction(mu, objective.k, state.rng, distribution, floor)
    for sign in (1, -1):
        candidate = state.theta - sign * state.alpha * direction.g_s
        mu_c, d = objective.value(candidate, g_eval)
        out.charge(d)
        if mu_c < mu:
            state.theta = candidate
            state.stall_count = 0
            state.mu_cache = mu_c
            out.accepted, out.mu_new, out.direction_sign = True, mu_c, sign
            out.new_theta = candidate.copy()
            return out
    state.alpha = state.alpha / (1.0 + gamma)
    state.stall_count += 1
    state.mu_cache = mu
    return out


def gd_step(state: OptState, objective: Objective, evaluator: Evaluator) -> StepOutcome:
    out = StepOutcome(True, state.theta, None)
    g, d = objective.psr_gradient(state.theta, evaluator)
    out.charge(d)
    state.theta = state.theta - state.alpha * g
    out.new_theta = state.theta.copy()
    return out


def rcd_step(state: OptState, objective: Objective, evaluator: Evaluator) -> StepOutcome:
    out = StepOutcome(True, state.theta, None)
    i = int(state.rng.integers(objective.k))
    gi, d = objective.psr_partial(state.theta, i, evaluator)
    out.charge(d)
    theta = state.theta.copy()
    theta[i] -= state.alpha * gi
    state.theta = theta
    out.new_theta = theta.copy()
    return out


def spsa_gains(t: int, a: float = 0.1, alpha_exp: float = 0.602, c: float = 0.2,
               gamma_exp: float = 0.101, A: float = 0.0) -> tuple[float, float]:
    """Step and perturbation gains ``(a_t, c_t)`` at iteration ``t``."""
    if t < 0:
        raise ValueError("iteration must be non-negative")
    return a / (t + 1 + A) ** alpha_exp, c / (t + 1) ** gamma_exp


def spsa_step(state: OptState, objective: Objective, evaluator: Evaluator, a: float = 0.1,
              alpha_exp: float = 0.602, c: float = 0.2, gamma_exp: float = 0.101,
              A: float = 0.0) -> StepOutcome:
    out = StepOutcome(True, state.theta, None)
    a_t, c_t = spsa_gains(state.t, a, alpha_exp, c, gamma_exp, A)
    delta = state.rng.choice((-1.0, 1.0), size=objective.k)
    y_plus, d = objective.value(state.theta + c_t * delta, evaluator)
    out.charge(d)
    y_minus, d = objective.value(state.theta - c_t * delta, evaluator)
    out.charge(d)
    g_hat = (y_plus - y_minus) / (2.0 * c_t * delta)
    state.theta = state.theta - a_t * g_hat
    out.new_theta = state.theta.copy()
    return out


@dataclass
class OptimizerConfig:
    method: str = "qgsa_practical"
    iterations: int = 100
    alpha: float = 0.1
    gamma: float = 0.1
    a: float = 2.0
    L: float | None = None
    distribution: str = "uniform"
    floor: float = 1e-3
    spsa_a: float = 0.1
    spsa_alpha: float = 0.602
    spsa_c: float = 0.2
    spsa_gamma: float = 0.101
    spsa_A: float = 0.0
    sampled: bool = False
    shots: int = 100
    n_mu: int | None = None
    n_g: int | None = None
    stall_limit: int | None = 20
    alpha_floor: float = 1e-6
    epsilon: float = 0.0
    max_resamples: int = 5
    reuse_mu: bool = False
    track_gradient: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown optimizer {self.method!r}; choose from {METHODS}")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        for name in ("alpha", "a", "spsa_a", "spsa_c", "shots"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.gamma < 0 or self.floor < 0:
            raise ValueError("gamma and floor must be non-negative")
        if self.L is not None and self.L <= 0:
            raise ValueError("L must be positive")
        for name in ("n_mu", "n_g"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be at least 1")


@dataclass(frozen=True)
class IterationRecord:
    t: int
    loss: float
    circuits: int
    shots: int
    update_circuits: int
    cost: float
    alpha: float
    accepted: bool
    sign: int | None
    grad_norm: float | None = None


@dataclass
class OptimizerTrace:
    method: str
    seed: int
    records: list[IterationRecord] = field(default_factory=list)
    ledger: ExecutionLedger = field(default_factory=ExecutionLedger)
    theta: np.ndarray | None = None
    stop_reason: str = "iterations"

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]


def run_optimizer(config: OptimizerConfig, objective: Objective, theta0, seed: int,
                  profile: PricingProfile | None = None) -> OptimizerTrace:
    """Iterate one method from ``theta0``; record 0 is the starting point.

    The recorded loss is an exact, uncharged evaluation for monitoring. The
    ledger only sees circuits the method itself asks for.
    """
    direction_seed, shot_seed = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(direction_seed)
    shot_rng = np.random.default_rng(shot_seed) if config.sampled else None
    base = Evaluator(shots=config.shots, sampled=config.sampled, rng=shot_rng)
    mu_eval = base.with_shots(config.n_mu or config.shots)
    g_eval = base.with_shots(config.n_g or config.shots)
    L = config.L if config.L is not None else objective.lipschitz()

    state = OptState(np.asarray(theta0, dtype=float), config.alpha, rng)
    if state.theta.shape != (objective.k,):
        raise ValueError(f"initial point has shape {state.theta.shape}, expected ({objective.k},)")
    trace = OptimizerTrace(config.method, seed)
    ledger = trace.ledger

    def snapshot(outcome: StepOutcome | None):
        grad_norm = None
        if config.track_gradient:
            grad_norm = float(np.linalg.norm(objective.exact_gradient(state.theta)))
        price = profile.price(ledger.circuits, ledger.shots) if profile else 0.0
        trace.records.append(IterationRecord(
            t=state.t,
            loss=objective.exact_value(state.theta),
            circuits=ledger.circuits,
            shots=ledger.shots,
            update_circuits=ledger.circuits_for("update"),
            cost=price,
            alpha=state.alpha,
            accepted=True if outcome is None else outcome.accepted,
            sign=None if outcome is None else outcome.direction_sign,
            grad_norm=grad_norm,
        ))

    snapshot(None)
    for _ in range(config.iterations):
        if config.method == "qgsa_ideal" and config.epsilon > 0:
            if np.linalg.norm(objective.exact_gradient(state.theta)) < config.epsilon:
                trace.stop_reason = "gradient"
                break
        if config.method == "qgsa_practical":
            if config.stall_limit is not None and state.stall_count >= config.stall_limit:
                trace.stop_reason = "stalled"
                break
            if state.alpha < config.alpha_floor:
                trace.stop_reason = "alpha_floor"
                break
        outcome = _step(config, state, objective, base, mu_eval, g_eval, L)
        mu_circuits = outcome.circuits_used - outcome.update_circuits
        mu_shots = mu_circuits * mu_eval.shots
        if mu_circuits:
            ledger.record("mu", LedgerDelta(mu_circuits, mu_shots))
        ledger.record("update", LedgerDelta(outcome.update_circuits, outcome.shots_used - mu_shots))
        state.t += 1
        snapshot(outcome)
    if trace.stop_reason != "iterations":
        log.info("%s seed %d stopped early at t=%d (%s)", config.method, seed, state.t, trace.stop_reason)
    trace.theta = state.theta.copy()
    return trace


def _step(config, state, objective, base, mu_eval, g_eval, L) -> StepOutcome:
    m = config.method
    if m == "qgsa_practical":
        return qgsa_practical_step(state, objective, mu_eval, g_eval, config.gamma,
                                   config.distribution, config.floor, config.reuse_mu)
    if m == "qgsa_ideal":
        return qgsa_ideal_step(state, objective, mu_eval, g_eval, L, config.a,
                               config.distribution, config.floor, config.max_resamples)
    if m == "gd":
        return gd_step(state, objective, base)
    if m == "rcd":
        return rcd_step(state, objective, base)
    return spsa_step(state, objective, base, config.spsa_a, config.spsa_alpha, config.spsa_c,
                     config.spsa_gamma, config.spsa_A)
