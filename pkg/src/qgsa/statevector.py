"""Dense statevector simulation of parameterised circuits.

Amplitudes are stored with qubit 0 as the most significant bit of the basis
index, so ``|q0 q1 ... q_{n-1}>`` maps to ``int("q0q1...", 2)``.

Internally every routine works on a batch of states shaped ``(B, 2**n)``;
the single-state helpers are thin wrappers around the batched ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

MAX_QUBITS = 20
PAULI_LETTERS = frozenset("IXYZ")
ROTATIONS = ("RX", "RY", "RZ")
_GATE_KINDS = frozenset({"H", "RX", "RY", "RZ", "RZ_const", "CX"})
_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    control: int | None = None
    slot: int | None = None
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in _GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in ROTATIONS and self.slot is None:
            raise ValueError(f"{self.kind} needs a parameter slot")
        if self.kind == "RZ_const" and self.angle is None:
            raise ValueError("RZ_const needs a constant angle")
        if self.kind == "CX":
            if self.control is None:
                raise ValueError("CX needs a control qubit")
            if self.control == self.target:
                raise ValueError("CX control and target must differ")

    @property
    def qubits(self) -> tuple[int, ...]:
        if self.control is None:
            return (self.target,)
        return (self.control, self.target)


def H(target: int) -> Gate:
    return Gate("H", target)


def RX(target: int, slot: int) -> Gate:
    return Gate("RX", target, slot=slot)


def RY(target: int, slot: int) -> Gate:
    return Gate("RY", target, slot=slot)


def RZ(target: int, slot: int) -> Gate:
    return Gate("RZ", target, slot=slot)


def RZConst(target: int, angle: float) -> Gate:
    return Gate("RZ_const", target, angle=float(angle))


def CX(control: int, target: int) -> Gate:
    return Gate("CX", target, control=control)


@dataclass(frozen=True)
class ParamCircuit:
    """Ordered gate list with ``k`` trainable parameter slots."""

    n_qubits: int
    gates: tuple[Gate, ...]
    k: int = field(default=-1)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        object.__setattr__(self, "gates", tuple(self.gates))
        slots = set()
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.n_qubits:
                    raise ValueError(f"qubit {q} out of range for {self.n_qubits} qubits")
            if g.slot is not None:
                slots.add(g.slot)
        k = self.k if self.k >= 0 else (max(slots) + 1 if slots else 0)
        if slots != set(range(k)):
            raise ValueError(f"parameter slots {sorted(slots)} must cover exactly 0..{k - 1}")
        object.__setattr__(self, "k", k)

    def __add__(self, other: ParamCircuit) -> ParamCircuit:
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot concatenate circuits of different widths")
        shifted = [replace(g, slot=g.slot + self.k) if g.slot is not None else g for g in other.gates]
        return ParamCircuit(self.n_qubits, self.gates + tuple(shifted))

    def slot_gates(self, slot: int) -> list[int]:
        """Positions in ``gates`` bound to ``slot``."""
        return [pos for pos, g in enumerate(self.gates) if g.slot == slot]


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state is not normalised (|psi|^2 = {norm})")
        object.__setattr__(self, "amplitudes", amps)

    def __len__(self):
        return self.amplitudes.shape[0]


def _check_width(n_qubits: int):
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


def init_zero(n_qubits: int) -> StateVector:
    _check_width(n_qubits)
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


# -- batched gate kernels ----------------------------------------------------
# psi has shape (B, 2, 2, ..., 2); qubit q lives on axis q + 1.

def _halves(psi: np.ndarray, q: int):
    lead = (slice(None),) * (q + 1)
    return lead + (0,), lead + (1,)


def _angles(theta: np.ndarray, ndim: int) -> np.ndarray:
    # (B,) -> (B, 1, ..., 1) so it broadcasts against one half of psi
    return theta.reshape((-1,) + (1,) * (ndim - 2))


def _apply(psi: np.ndarray, gate: Gate, angle: np.ndarray | float | None):
    if gate.kind == "CX":
        # the target axis index shifts down by one once the control axis is fixed
        c = gate.control
        t = gate.target - 1 if gate.target > c else gate.target
        sub = psi[(slice(None),) * (c + 1) + (1,)]
        j0, j1 = _halves(sub, t)
        tmp = sub[j0].copy()
        sub[j0] = sub[j1]
        sub[j1] = tmp
        return
    i0, i1 = _halves(psi, gate.target)
    a0 = psi[i0].copy()
    a1 = psi[i1]
    if gate.kind == "H":
        psi[i0] = (a0 + a1) * _INV_SQRT2
        psi[i1] = (a0 - a1) * _INV_SQRT2
    else:
        half = np.asarray(angle, dtype=float)
        if half.ndim:
            half = _angles(half, psi.ndim)
        half = half / 2.0
        if gate.kind == "RX":
            c, s = np.cos(half), np.sin(half)
            psi[i0] = c * a0 - 1j * s * a1
            psi[i1] = -1j * s * a0 + c * a1
        elif gate.kind == "RY":
            c, s = np.cos(half), np.sin(half)
            psi[i0] = c * a0 - s * a1
            psi[i1] = s * a0 + c * a1
        else:  # RZ, RZ_const
            psi[i0] = np.exp(-1j * half) * a0
            psi[i1] = np.exp(1j * half) * a1


def simulate(circuit: ParamCircuit, thetas: np.ndarray, initial: np.ndarray | None = None) -> np.ndarray:
    """Run ``circuit`` for a batch of parameter vectors.

    ``thetas`` is ``(B, k)``; ``initial`` is ``(2**n,)`` or ``(B, 2**n)`` and
    defaults to ``|0...0>``. Returns amplitudes of shape ``(B, 2**n)``.
    """
    n = circuit.n_qubits
    _check_width(n)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if thetas.shape[1] != circuit.k:
        raise ValueError(f"expected {circuit.k} parameters, got {thetas.shape[1]}")
    batch = thetas.shape[0]
    dim = 2**n
    if initial is None:
        psi = np.zeros((batch, dim), dtype=complex)
        psi[:, 0] = 1.0
    else:
        init = np.asarray(initial, dtype=complex)
        if init.shape[-1] != dim:
            raise ValueError(f"initial state has dimension {init.shape[-1]}, expected {dim}")
        psi = np.array(np.broadcast_to(init, (batch, dim)), dtype=complex)
    psi = psi.reshape((batch,) + (2,) * n)
    for gate in circuit.gates:
        if gate.slot is not None:
            angle = thetas[:, gate.slot]
        else:
            angle = gate.angle
        _apply(psi, gate, angle)
    return psi.reshape(batch, dim)


def run_circuit(circuit: ParamCircuit, theta: Sequence[float], initial: StateVector | None = None) -> StateVector:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.k,):
        raise ValueError(f"expected {circuit.k} parameters, got shape {theta.shape}")
    init = None if initial is None else initial.amplitudes
    amps = simulate(circuit, theta[None, :], init)[0]
    return StateVector(circuit.n_qubits, amps)


# -- Pauli expectations -------------------------------------------------------

def check_pauli(letters: str, n_qubits: int) -> str:
    letters = letters.upper()
    if len(letters) != n_qubits:
        raise ValueError(f"Pauli string {letters!r} has length {len(letters)}, expected {n_qubits}")
    bad = set(letters) - PAULI_LETTERS
    if bad:
        raise ValueError(f"invalid Pauli letters {sorted(bad)} in {letters!r}")
    return letters


@lru_cache(maxsize=256)
def _pauli_action(letters: str) -> tuple[np.ndarray, np.ndarray]:
    """P|b> = phase[b] |b XOR flip>; returns (permuted index, phase)."""
    n = len(letters)
    idx = np.arange(2**n)
    flip = 0
    phase = np.ones(2**n, dtype=complex)
    for q, p in enumerate(letters):
        bit = (idx >> (n - 1 - q)) & 1
        if p in "XY":
            flip |= 1 << (n - 1 - q)
        if p == "Z":
            phase *= 1 - 2 * bit
        elif p == "Y":
            phase *= 1j * (1 - 2 * bit)
    return idx ^ flip, phase


def pauli_expvals(amps: np.ndarray, letters: str) -> np.ndarray:
    """Exact <P> for every row of a ``(B, 2**n)`` amplitude batch."""
    amps = np.atleast_2d(amps)
    n = int(np.log2(amps.shape[1]))
    letters = check_pauli(letters, n)
    target, phase = _pauli_action(letters)
    # <psi|P|psi> = sum_b conj(psi[b ^ flip]) * phase[b] * psi[b]
    return np.einsum("bi,bi->b", amps[:, target].conj(), amps * phase).real


def expval_pauli(state: StateVector, pauli_string: str) -> float:
    return float(pauli_expvals(state.amplitudes[None, :], pauli_string)[0])


def state_distance(a: StateVector, b: StateVector) -> float:
    if a.amplitudes.shape != b.amplitudes.shape:
        raise ValueError("states have different dimensions")
    return float(np.linalg.norm(a.amplitudes - b.amplitudes))


def sample_from_expval(expval, shots: int, rng: np.random.Generator):
    """Shot-noise estimate of a ±1-valued observable with mean ``expval``.

    Each shot is a ±1 outcome, so the count of +1 outcomes is
    Binomial(shots, (1 + <P>)/2). Works elementwise on arrays.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    p = np.clip((1.0 + np.asarray(expval, dtype=float)) / 2.0, 0.0, 1.0)
    m = rng.binomial(shots, p)
    return 2.0 * m / shots - 1.0


def sample_expval(state: StateVector, pauli_string: str, shots: int, rng: np.random.Generator) -> float:
    return float(sample_from_expval(expval_pauli(state, pauli_string), shots, rng))


@dataclass(frozen=True)
class Evaluator:
    """How expectation values are read out: exactly or with shot noise.

    ``shots`` is always the per-circuit shot count charged to the ledger; in
    exact mode it is a nominal figure used only for pricing.
    """

    shots: int = 100
    sampled: bool = False
    rng: np.random.Generator | None = None

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        if self.sampled and self.rng is None:
            raise ValueError("a sampled evaluator needs an rng")

    @classmethod
    def exact(cls, shots: int = 100) -> Evaluator:
        return cls(shots=shots)

    @classmethod
    def sampling(cls, shots: int, rng: np.random.Generator) -> Evaluator:
        return cls(shots=shots, sampled=True, rng=rng)

    def with_shots(self, shots: int) -> Evaluator:
        return replace(self, shots=shots)

    def estimate(self, expvals):
        if not self.sampled:
            return np.asarray(expvals, dtype=float)
        return sample_from_expval(expvals, self.shots, self.rng)
