"""Binary classification with an H+RZ angle encoder and an entangling ansatz."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .gradients import SHIFT
from .observables import Observable
from .shots_cost import LedgerDelta
from .statevector import CX, RX, Evaluator, H, ParamCircuit, RZConst, simulate

IRIS_CLASSES = ("setosa", "versicolor")


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise ValueError(f"features {x.shape} and labels {y.shape} do not line up")
        if not np.isin(y, (-1.0, 1.0)).all():
            raise ValueError("labels must be +1 or -1")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def scale_features(x: np.ndarray) -> np.ndarray:
    """Min-max scale each column onto ``[0, pi]``; constant columns map to 0."""
    x = np.asarray(x, dtype=float)
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = (x - lo) / safe * np.pi
    scaled[:, span == 0] = 0.0
    return np.clip(scaled, 0.0, np.pi)


def _iris_rows(path):
    if path is None:
        text = resources.files("qgsa.data").joinpath("iris.csv").read_text()
        lines = text.splitlines()
    else:
        lines = Path(path).read_text().splitlines()
    for row in csv.reader(lines):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 5:
            raise ValueError(f"expected 5 columns in iris data, got {len(row)}: {row}")
        yield row


def load_iris(path: str | Path | None = None, classes: tuple[str, str] = IRIS_CLASSES) -> Dataset:
    """Two-class slice of the Iris data, scaled to ``[0, pi]``.

    ``path=None`` reads the copy bundled with the package. The first class
    is labelled +1, the second -1. A header row is skipped if present.
    """
    feats, labels = [], []
    seen = set()
    for n, row in enumerate(_iris_rows(path)):
        name = row[4].strip()
        name = name.removeprefix("Iris-")
        try:
            values = [float(v) for v in row[:4]]
        except ValueError:
            if n == 0:
                continue  # header
            raise ValueError(f"non-numeric feature in row {n}: {row}") from None
        seen.add(name)
        if name in classes:
            feats.append(values)
            labels.append(1.0 if name == classes[0] else -1.0)
    missing = [c for c in classes if c not in seen]
    if missing:
        raise ValueError(f"unknown iris class(es) {missing}; available {sorted(seen)}")
    return Dataset(scale_features(np.array(feats)), np.array(labels), name="iris")


def load_feature_csv(path: str | Path, name: str | None = None) -> Dataset:
    """``d`` numeric columns followed by a +/-1 label column; features get rescaled."""
    rows = []
    with open(path, newline="") as fh:
        for n, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if n == 0:
                    continue
                raise ValueError(f"malformed row {n} in {path}: {row}") from None
    if not rows:
        raise ValueError(f"no data rows in {path}")
    if len({len(r) for r in rows}) != 1 or len(rows[0]) < 2:
        raise ValueError(f"ragged or too-narrow rows in {path}")
    data = np.array(rows)
    return Dataset(scale_features(data[:, :-1]), data[:, -1], name=name or Path(path).stem)


def synth_crack(n_per_class: int = 100, d: int = 4, seed: int = 0,
                separation: float = 2.0, sigma: float = 0.3) -> Dataset:
    """Two Gaussian blobs in ``[0, pi]^d`` standing in for image features.

    Class centres sit ``separation * sigma`` apart along every feature axis,
    symmetric about ``pi/2``; samples are clipped into the box.
    """
    rng = np.random.default_rng(seed)
    offset = separation * sigma / 2.0
    pos = rng.normal(np.pi / 2 + offset, sigma, size=(n_per_class, d))
    neg = rng.normal(np.pi / 2 - offset, sigma, size=(n_per_class, d))
    x = np.clip(np.vstack([pos, neg]), 0.0, np.pi)
    y = np.concatenate([np.ones(n_per_class), -np.ones(n_per_class)])
    return Dataset(x, y, name="crack-synthetic")


@dataclass(frozen=True)
class ClassifierModel:
    d: int
    ansatz: ParamCircuit
    readout: Observable

    @property
    def k(self) -> int:
        return self.ansatz.k

    def encoder(self, x) -> ParamCircuit:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"expected {self.d} features, got shape {x.shape}")
        gates = [H(q) for q in range(self.d)] + [RZConst(q, x[q]) for q in range(self.d)]
        return ParamCircuit(self.d, gates)

    def full_circuit(self, x) -> ParamCircuit:
        return self.encoder(x) + self.ansatz

    def encode(self, features: np.ndarray) -> np.ndarray:
        """Encoded amplitudes for every row of ``features``; shape ``(n, 2**d)``."""
        features = np.atleast_2d(features)
        return np.vstack([simulate(self.encoder(x), np.zeros((1, 0))) for x in features])


def build_model(d: int, layers: int = 3) -> ClassifierModel:
    if d < 2:
        raise ValueError("need at least 2 qubits for the CX ring")
    if layers < 1:
        raise ValueError("need at least one layer")
    gates = []
    for layer in range(layers):
        gates += [RX(q, layer * d + q) for q in range(d)]
        gates += [CX(q, (q + 1) % d) for q in range(d)]
    readout = Observable(d, [(1.0, "Z" + "I" * (d - 1))])
    return ClassifierModel(d, ParamCircuit(d, gates), readout)


def _readout(model: ClassifierModel, encoded: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """Exact ``h`` for every (theta row, example) pair; shape ``(m, n)``."""
    m, n = thetas.shape[0], encoded.shape[0]
    rows = np.repeat(thetas, n, axis=0)
    init = np.tile(encoded, (m, 1))
    amps = simulate(model.ansatz, rows, init)
    return model.readout.term_expvals(amps)[:, 0].reshape(m, n)


def predict(model: ClassifierModel, theta, x, evaluator: Evaluator | None = None) -> float:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.k,):
        raise ValueError(f"expected {model.k} parameters, got shape {theta.shape}")
    h = _readout(model, model.encode(np.asarray(x, dtype=float)[None, :]), theta[None, :])[0, 0]
    if evaluator is not None:
        h = evaluator.estimate(h)
    return float(h)


def _check_labels(y):
    y = np.asarray(y, dtype=float)
    if not np.isin(y, (-1.0, 1.0)).all():
        raise ValueError("labels must be +1 or -1")
    return y


def loss_qh(h, y):
    """Quantum hinge loss ``(1 - y h) / 2``."""
    y = _check_labels(y)
    return (1.0 - y * np.asarray(h, dtype=float)) / 2.0


def loss_mse(h, y):
    y = _check_labels(y)
    return (np.asarray(h, dtype=float) - y) ** 2


LOSSES: dict[str, Callable] = {"qh": loss_qh, "mse": loss_mse}


class RiskObjective:
    """Empirical risk ``sum_i loss(h(x_i), y_i)`` as a function of theta.

    One evaluation reads out ``h`` for every example, i.e. ``n`` circuits.
    With ``mean=True`` the sum is divided by ``n``.
    """

    def __init__(self, model: ClassifierModel, data: Dataset, loss: str = "qh", mean: bool = False):
        if len(data) == 0:
            raise ValueError("empty dataset")
        if data.d != model.d:
            raise ValueError(f"dataset has {data.d} features, model expects {model.d}")
        if loss not in LOSSES:
            raise ValueError(f"unknown loss {loss!r}; choose from {sorted(LOSSES)}")
        self.model = model
        self.data = data
        self.loss = loss
        self.mean = mean
        self.k = model.k
        self._encoded = model.encode(data.features)
        self._scale = 1.0 / len(data) if mean else 1.0

    @property
    def circuits_per_eval(self) -> int:
        return len(self.data)

    def _h(self, thetas) -> np.ndarray:
        return _readout(self.model, self._encoded, np.atleast_2d(np.asarray(thetas, dtype=float)))

    def _risk(self, h: np.ndarray) -> float:
        return float(np.sum(LOSSES[self.loss](h, self.data.labels)) * self._scale)

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.k,):
            raise ValueError(f"expected {self.k} parameters, got shape {theta.shape}")
        return theta

    def value(self, theta, evaluator: Evaluator) -> tuple[float, LedgerDelta]:
        h = evaluator.estimate(self._h(self._check(theta))[0])
        return self._risk(h), LedgerDelta.runs(len(self.data), evaluator.shots)

    def exact_value(self, theta) -> float:
        return self._risk(self._h(self._check(theta))[0])

    def _chain(self, dh: np.ndarray, h: np.ndarray | None) -> np.ndarray:
        # dh: (k, n) shift-rule derivatives of h per example
        y = self.data.labels
        if self.loss == "qh":
            weights = -y / 2.0
        else:
            weights = 2.0 * (h - y)
        return dh @ weights * self._scale

    def _gradient_rows(self, theta, coords) -> np.ndarray:
        rows = np.repeat(theta[None, :], 2 * len(coords), axis=0)
        for j, i in enumerate(coords):
            rows[2 * j, i] += SHIFT
            rows[2 * j + 1, i] -= SHIFT
        return rows

    def _psr(self, theta, coords, evaluator):
        theta = self._check(theta)
        n = len(self.data)
        h_shift = evaluator.estimate(self._h(self._gradient_rows(theta, coords)))
        dh = (h_shift[0::2] - h_shift[1::2]) / 2.0
        delta = LedgerDelta.runs(2 * len(coords) * n, evaluator.shots)
        h = None
        if self.loss == "mse":
            # the chain rule needs h itself: one extra forward pass
            h = evaluator.estimate(self._h(theta)[0])
            delta = delta + LedgerDelta.runs(n, evaluator.shots)
        return self._chain(dh, h), delta

    def psr_gradient(self, theta, evaluator: Evaluator) -> tuple[np.ndarray, LedgerDelta]:
        return self._psr(theta, list(range(self.k)), evaluator)

    def psr_partial(self, theta, i: int, evaluator: Evaluator) -> tuple[float, LedgerDelta]:
        if not 0 <= i < self.k:
            raise IndexError(f"parameter index {i} out of range for k={self.k}")
        grad, delta = self._psr(theta, [i], evaluator)
        return float(grad[0]), delta

    def exact_gradient(self, theta) -> np.ndarray:
        return self.psr_gradient(theta, Evaluator.exact())[0]

    def lipschitz(self) -> float:
        """Hessian bound summed over examples.

        QH: each example contributes ``k/2``. MSE: ``2 grad h grad h^T + 2 (h - y) hess h``
        with ``|dh| <= 1``, ``|h - y| <= 2`` gives ``6k``.
        """
        per_example = self.k / 2.0 if self.loss == "qh" else 6.0 * self.k
        return per_example * len(self.data) * self._scale


def empirical_risk(model: ClassifierModel, theta, data: Dataset, loss: str = "qh",
                   evaluator: Evaluator | None = None, mean: bool = False) -> tuple[float, LedgerDelta]:
    return RiskObjective(model, data, loss, mean).value(theta, evaluator or Evaluator.exact())
