"""Pauli-string observables: real linear combinations of Pauli products."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .shots_cost import LedgerDelta
from .statevector import Evaluator, StateVector, check_pauli, pauli_expvals, sample_from_expval


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    letters: str


class Observable:
    """``sum_i c_i P_i`` over ``n_qubits`` qubits.

    Terms with identical letters are merged on construction. ``c_star`` is
    the divisor applied by :func:`normalize` (1.0 for unscaled observables).
    """

    __slots__ = ("n_qubits", "terms", "c_star")

    def __init__(self, n_qubits: int, terms, c_star: float = 1.0):
        merged: dict[str, float] = {}
        for t in terms:
            if not isinstance(t, PauliTerm):
                t = PauliTerm(float(t[0]), t[1])
            letters = check_pauli(t.letters, n_qubits)
            merged[letters] = merged.get(letters, 0.0) + float(t.coefficient)
        if not merged:
            raise ValueError("an observable needs at least one term")
        if c_star < 0:
            raise ValueError("c_star must be non-negative")
        self.n_qubits = n_qubits
        self.terms = tuple(PauliTerm(c, p) for p, c in merged.items())
        self.c_star = float(c_star)

    @classmethod
    def parse(cls, text: str) -> Observable:
        """Parse ``"-0.5*XZI + 1.0*ZII"``; a bare ``ZZ`` means coefficient 1."""
        compact = re.sub(r"\s+", "", text.replace("−", "-"))
        if not compact:
            raise ValueError("empty observable string")
        # split before every sign that is not part of an exponent
        pieces = [p for p in re.split(r"(?<![eE])(?=[+-])", compact) if p]
        terms = []
        for piece in pieces:
            sign, body = (piece[0], piece[1:]) if piece[0] in "+-" else ("+", piece)
            coeff_str, _, letters = body.rpartition("*")
            try:
                coeff = float(coeff_str) if coeff_str else 1.0
            except ValueError:
                raise ValueError(f"bad coefficient {coeff_str!r} in {text!r}") from None
            if not letters:
                raise ValueError(f"missing Pauli letters in {text!r}")
            terms.append(PauliTerm(-coeff if sign == "-" else coeff, letters.upper()))
        widths = {len(t.letters) for t in terms}
        if len(widths) != 1:
            raise ValueError(f"terms of {text!r} act on different numbers of qubits")
        return cls(widths.pop(), terms)

    def format(self) -> str:
        out = []
        for i, t in enumerate(self.terms):
            sign = "-" if t.coefficient < 0 else "+"
            body = f"{abs(t.coefficient)!r}*{t.letters}"
            out.append(("-" + body if sign == "-" else body) if i == 0 else f" {sign} {body}")
        return "".join(out)

    def __repr__(self):
        return f"Observable({self.format()!r}, c_star={self.c_star})"

    def __eq__(self, other):
        if not isinstance(other, Observable):
            return NotImplemented
        return (self.n_qubits, self.terms, self.c_star) == (other.n_qubits, other.terms, other.c_star)

    def __len__(self):
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms])

    @property
    def l1_norm(self) -> float:
        """``sum_i |c_i|``, a bound on the spectral norm."""
        return float(np.abs(self.coefficients).sum())

    def term_expvals(self, amps: np.ndarray) -> np.ndarray:
        """Exact per-term ``<P_i>`` for a batch; shape ``(B, n_terms)``."""
        return np.stack([pauli_expvals(amps, t.letters) for t in self.terms], axis=-1)

    def evaluate(self, amps: np.ndarray, evaluator: Evaluator) -> tuple[np.ndarray, LedgerDelta]:
        """``<H>`` for every state in a batch, each term read out as its own circuit."""
        amps = np.atleast_2d(amps)
        values = evaluator.estimate(self.term_expvals(amps)) @ self.coefficients
        return values, LedgerDelta.runs(amps.shape[0] * len(self.terms), evaluator.shots)


def normalize(obs: Observable) -> Observable:
    c_star = float(np.max(np.abs(obs.coefficients)))
    if c_star == 0.0:
        raise ValueError("cannot normalise an all-zero observable")
    if c_star == 1.0:
        return obs
    terms = [PauliTerm(t.coefficient / c_star, t.letters) for t in obs.terms]
    return Observable(obs.n_qubits, terms, c_star=obs.c_star * c_star)


def expval(obs: Observable, state: StateVector) -> float:
    if state.n_qubits != obs.n_qubits:
        raise ValueError(f"observable acts on {obs.n_qubits} qubits, state has {state.n_qubits}")
    return float(obs.term_expvals(state.amplitudes[None, :])[0] @ obs.coefficients)


def sample_expval_obs(obs: Observable, state: StateVector, shots_per_term: int,
                      rng: np.random.Generator) -> tuple[float, int]:
    if state.n_qubits != obs.n_qubits:
        raise ValueError(f"observable acts on {obs.n_qubits} qubits, state has {state.n_qubits}")
    exact = obs.term_expvals(state.amplitudes[None, :])[0]
    noisy = sample_from_expval(exact, shots_per_term, rng)
    return float(noisy @ obs.coefficients), len(obs.terms)
