"""Shared fixtures and a dense-matrix oracle independent of the simulator kernels."""
import numpy as np
import pytest
from scipy.linalg import expm

from qgsa.statevector import CX, RX, RY, RZ, H, ParamCircuit, RZConst

I2 = np.eye(2, dtype=complex)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HAD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def kron_all(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def embed(op, q, n):
    return kron_all([op if j == q else I2 for j in range(n)])


def pauli_matrix(letters):
    return kron_all([PAULI[p] for p in letters])


def gate_matrix(gate, n, theta):
    if gate.kind == "H":
        return embed(HAD, gate.target, n)
    if gate.kind == "CX":
        p0 = np.diag([1, 0]).astype(complex)
        p1 = np.diag([0, 1]).astype(complex)
        return embed(p0, gate.control, n) + embed(p1, gate.control, n) @ embed(PAULI["X"], gate.target, n)
    angle = gate.angle if gate.kind == "RZ_const" else theta[gate.slot]
    axis = {"RX": "X", "RY": "Y", "RZ": "Z", "RZ_const": "Z"}[gate.kind]
    return embed(expm(-0.5j * angle * PAULI[axis]), gate.target, n)


def dense_state(circuit, theta, initial=None):
    n = circuit.n_qubits
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    if initial is not None:
        psi = np.asarray(initial, dtype=complex)
    for g in circuit.gates:
        psi = gate_matrix(g, n, theta) @ psi
    return psi


def dense_expval(obs_terms, psi):
    """``obs_terms``: iterable of (coefficient, letters)."""
    n = int(np.log2(len(psi)))
    mat = sum(c * pauli_matrix(p) for c, p in obs_terms)
    assert mat.shape == (2**n, 2**n)
    return float(np.vdot(psi, mat @ psi).real)


def random_circuit(rng, n, k, extra=None):
    """Random rotation/CX circuit where each of the ``k`` slots drives one gate."""
    extra = n if extra is None else extra
    gates = []
    slots = list(rng.permutation(k))
    fixed = []
    for _ in range(extra):
        kind = rng.integers(3)
        q = int(rng.integers(n))
        if kind == 0:
            fixed.append(H(q))
        elif kind == 1 and n > 1:
            c, t = rng.choice(n, size=2, replace=False)
            fixed.append(CX(int(c), int(t)))
        else:
            fixed.append(RZConst(q, float(rng.uniform(0, 2 * np.pi))))
    rot = (RX, RY, RZ)
    for s in slots:
        gates.append(rot[int(rng.integers(3))](int(rng.integers(n)), int(s)))
    # interleave fixed gates at random positions
    for g in fixed:
        gates.insert(int(rng.integers(len(gates) + 1)), g)
    # make sure every qubit is touched and entangled with its neighbour
    gates = [H(q) for q in range(n)] + gates + [CX(q, q + 1) for q in range(n - 1)]
    return ParamCircuit(n, gates, k=k)


@pytest.fixture
def rng():
    return np.random.default_rng(20231016)
