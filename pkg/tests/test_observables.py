import numpy as np
import pytest

from conftest import dense_expval, pauli_matrix, random_circuit
from qgsa.observables import Observable, PauliTerm, expval, normalize, sample_expval_obs
from qgsa.statevector import RX, RY, H, ParamCircuit, init_zero, run_circuit


def plus_state():
    return run_circuit(ParamCircuit(1, [H(0)]), [])


def test_normalize_examples():
    obs = normalize(Observable(1, [(2.0, "Z"), (0.5, "X")]))
    assert obs.terms == (PauliTerm(1.0, "Z"), PauliTerm(0.25, "X"))
    assert obs.c_star == 2.0

    single = Observable(1, [(1.0, "Z")])
    assert normalize(single) == single
    assert normalize(single).c_star == 1.0

    two = normalize(Observable(2, [(-3.0, "ZZ"), (1.5, "XI")]))
    assert two.terms == (PauliTerm(-1.0, "ZZ"), PauliTerm(0.5, "XI"))
    assert two.c_star == 3.0
    eig = np.linalg.eigvalsh(sum(t.coefficient * pauli_matrix(t.letters) for t in two.terms))
    # ZZ and XI anticommute: spectrum is +-sqrt(1 + 0.25), outside [-1, 1]
    # but inside [-sum|c'|, sum|c'|]
    np.testing.assert_allclose(sorted(eig), [-np.sqrt(1.25)] * 2 + [np.sqrt(1.25)] * 2, atol=1e-12)
    assert np.abs(eig).max() <= two.l1_norm + 1e-12


def test_normalize_idempotent_and_zero():
    once = normalize(Observable(2, [(4.0, "XY"), (-1.0, "ZI")]))
    assert normalize(once) == once
    with pytest.raises(ValueError):
        normalize(Observable(1, [(0.0, "Z")]))


def test_terms_merge():
    obs = Observable(2, [(1.0, "ZZ"), (0.5, "ZZ"), (1.0, "XI")])
    assert len(obs) == 2
    assert obs.terms[0] == PauliTerm(1.5, "ZZ")


def test_expval_examples():
    assert expval(Observable(1, [(1.0, "Z")]), init_zero(1)) == 1.0
    assert expval(Observable(1, [(0.5, "Z"), (0.5, "X")]), plus_state()) == pytest.approx(0.5)
    scaled = normalize(Observable(1, [(2.0, "Z"), (0.5, "X")]))
    assert expval(scaled, init_zero(1)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        expval(scaled, init_zero(2))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_expval_matches_dense_matrix(rng, n):
    for _ in range(10):
        c = random_circuit(rng, n, 4)
        psi = run_circuit(c, rng.uniform(0, 2 * np.pi, 4))
        terms = [(float(rng.normal()), "".join(rng.choice(list("IXYZ"), size=n))) for _ in range(4)]
        obs = Observable(n, terms)
        assert expval(obs, psi) == pytest.approx(dense_expval(terms, psi.amplitudes), abs=1e-10)


def test_expval_bounded_by_l1(rng):
    for _ in range(20):
        c = random_circuit(rng, 3, 5)
        psi = run_circuit(c, rng.uniform(0, 2 * np.pi, 5))
        obs = normalize(Observable(3, [(float(rng.normal()), "".join(rng.choice(list("XYZ"), size=3)))
                                       for _ in range(3)]))
        assert abs(expval(obs, psi)) <= obs.l1_norm + 1e-12
        single = normalize(Observable(3, [(float(rng.normal()) or 1.0, "ZXY")]))
        assert abs(expval(single, psi)) <= 1 + 1e-12


def test_normalize_preserves_argmin():
    c = ParamCircuit(2, [RY(0, 0), RX(1, 1), H(1)])
    raw = Observable(2, [(3.0, "ZI"), (-1.2, "XZ"), (0.7, "YY")])
    scaled = normalize(raw)
    grid = np.linspace(0, 2 * np.pi, 25)
    vals_raw, vals_scaled = [], []
    for a in grid:
        for b in grid:
            psi = run_circuit(c, [a, b])
            vals_raw.append(expval(raw, psi))
            vals_scaled.append(expval(scaled, psi))
    assert np.argmin(vals_raw) == np.argmin(vals_scaled)
    np.testing.assert_allclose(np.array(vals_raw) / raw.coefficients.__abs__().max(), vals_scaled, atol=1e-12)


def test_sample_expval_obs():
    one = Observable(1, [(1.0, "Z")])
    est, n = sample_expval_obs(one, init_zero(1), 10**6, np.random.default_rng(0))
    assert (est, n) == (1.0, 1)
    two = Observable(1, [(0.5, "Z"), (0.5, "X")])
    est, n = sample_expval_obs(two, plus_state(), 10**6, np.random.default_rng(1))
    assert n == 2
    assert est == pytest.approx(0.5, abs=0.01)
    with pytest.raises(ValueError):
        sample_expval_obs(two, plus_state(), 0, np.random.default_rng(1))


def test_parse_and_format():
    obs = Observable.parse("-0.5*XZI + 1.0*ZII")
    assert obs.terms == (PauliTerm(-0.5, "XZI"), PauliTerm(1.0, "ZII"))
    assert Observable.parse(obs.format()) == obs
    assert Observable.parse(" 2 * z z - x y ") == Observable(2, [(2.0, "ZZ"), (-1.0, "XY")])
    assert Observable.parse("1e-3*Z").terms == (PauliTerm(0.001, "Z"),)
    for bad in ("", "0.5*ZQ", "1.0*ZZ + 2*Z", "abc*Z", "0.5*"):
        with pytest.raises(ValueError):
            Observable.parse(bad)
