"""Parameter-shift gradients, a finite-difference oracle, and smoothness bounds."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .observables import Observable
from .shots_cost import LedgerDelta
from .statevector import ROTATIONS, Evaluator, ParamCircuit, simulate

SHIFT = np.pi / 2


def _check_slot(circuit: ParamCircuit, i: int) -> list[int]:
    if not 0 <= i < circuit.k:
        raise IndexError(f"parameter index {i} out of range for k={circuit.k}")
    positions = circuit.slot_gates(i)
    for pos in positions:
        if circuit.gates[pos].kind not in ROTATIONS:
            raise ValueError(f"slot {i} is bound to non-rotation gate {circuit.gates[pos].kind}")
    return positions


def _shift_batch(circuit: ParamCircuit, theta: np.ndarray, i: int):
    """Circuit and ``(2m, k')`` parameter rows for the +/- shifts of slot ``i``.

    A slot shared by ``m`` gates is differentiated with the product rule: each
    occurrence gets its own temporary slot and is shifted separately. Rows
    alternate ``+s, -s`` per occurrence.
    """
    positions = _check_slot(circuit, i)
    if len(positions) == 1:
        rows = np.repeat(theta[None, :], 2, axis=0)
        rows[0, i] += SHIFT
        rows[1, i] -= SHIFT
        return circuit, rows
    # first occurrence keeps slot i, the others move to fresh slots k, k+1, ...
    gates = list(circuit.gates)
    extra = len(positions) - 1
    for j, pos in enumerate(positions[1:]):
        gates[pos] = replace(gates[pos], slot=circuit.k + j)
    split = ParamCircuit(circuit.n_qubits, gates, k=circuit.k + extra)
    base = np.concatenate([theta, np.full(extra, theta[i])])
    columns = [i] + [circuit.k + j for j in range(extra)]
    rows = np.repeat(base[None, :], 2 * len(columns), axis=0)
    for j, col in enumerate(columns):
        rows[2 * j, col] += SHIFT
        rows[2 * j + 1, col] -= SHIFT
    return split, rows


def _as_theta(circuit: ParamCircuit, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.k,):
        raise ValueError(f"expected {circuit.k} parameters, got shape {theta.shape}")
    return theta


def _fold(values: np.ndarray) -> float:
    # rows alternate (+s, -s); sum the per-occurrence shift-rule terms
    return float(np.sum(values[0::2] - values[1::2]) / 2.0)


def psr_partial(circuit: ParamCircuit, obs: Observable, theta, i: int,
                evaluator: Evaluator | None = None) -> tuple[float, LedgerDelta]:
    evaluator = evaluator or Evaluator.exact()
    theta = _as_theta(circuit, theta)
    circ, rows = _shift_batch(circuit, theta, i)
    values, delta = obs.evaluate(simulate(circ, rows), evaluator)
    return _fold(values), delta


def psr_gradient(circuit: ParamCircuit, obs: Observable, theta,
                 evaluator: Evaluator | None = None) -> tuple[np.ndarray, LedgerDelta]:
    evaluator = evaluator or Evaluator.exact()
    theta = _as_theta(circuit, theta)
    k = circuit.k
    if all(len(_check_slot(circuit, i)) == 1 for i in range(k)):
        rows = np.repeat(theta[None, :], 2 * k, axis=0)
        idx = np.arange(k)
        rows[2 * idx, idx] += SHIFT
        rows[2 * idx + 1, idx] -= SHIFT
        values, delta = obs.evaluate(simulate(circuit, rows), evaluator)
        return (values[0::2] - values[1::2]) / 2.0, delta
    grad = np.zeros(k)
    total = LedgerDelta()
    for i in range(k):
        grad[i], d = psr_partial(circuit, obs, theta, i, evaluator)
        total = total + d
    return grad, total


def exact_expval(circuit: ParamCircuit, obs: Observable, theta) -> float:
    theta = _as_theta(circuit, theta)
    amps = simulate(circuit, theta[None, :])
    return float(obs.term_expvals(amps)[0] @ obs.coefficients)


def fd_gradient(circuit: ParamCircuit, obs: Observable, theta, h: float = 1e-5) -> np.ndarray:
    """Central finite differences on exact expectation values."""
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    theta = _as_theta(circuit, theta)
    k = circuit.k
    rows = np.repeat(theta[None, :], 2 * k, axis=0)
    idx = np.arange(k)
    rows[2 * idx, idx] += h
    rows[2 * idx + 1, idx] -= h
    values = obs.term_expvals(simulate(circuit, rows)) @ obs.coefficients
    return (values[0::2] - values[1::2]) / (2.0 * h)


def default_lipschitz(k: int, obs: Observable) -> float:
    """Conservative bound on the Hessian spectral norm of ``<H>``.

    Every second derivative of a Pauli-rotation expectation is a signed
    average of four shifted expectations, so each Hessian entry is bounded by
    ``sum |c_i|``; the spectral norm is at most ``k`` times that. Assumes each
    slot drives one gate.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    return k * obs.l1_norm


class ExpectationObjective:
    """``theta -> <psi(theta)|H|psi(theta)>`` packaged for the optimisers.

    Each evaluation costs one circuit per observable term.
    """

    def __init__(self, circuit: ParamCircuit, obs: Observable):
        if circuit.n_qubits != obs.n_qubits:
            raise ValueError("circuit and observable widths differ")
        self.circuit = circuit
        self.obs = obs
        self.k = circuit.k

    @property
    def circuits_per_eval(self) -> int:
        return len(self.obs)

    def value(self, theta, evaluator: Evaluator) -> tuple[float, LedgerDelta]:
        theta = _as_theta(self.circuit, theta)
        values, delta = self.obs.evaluate(simulate(self.circuit, theta[None, :]), evaluator)
        return float(values[0]), delta

    def exact_value(self, theta) -> float:
        return exact_expval(self.circuit, self.obs, theta)

    def exact_gradient(self, theta) -> np.ndarray:
        return psr_gradient(self.circuit, self.obs, theta)[0]

    def psr_gradient(self, theta, evaluator: Evaluator):
        return psr_gradient(self.circuit, self.obs, theta, evaluator)

    def psr_partial(self, theta, i: int, evaluator: Evaluator):
        return psr_partial(self.circuit, self.obs, theta, i, evaluator)

    def lipschitz(self) -> float:
        return default_lipschitz(self.k, self.obs)
