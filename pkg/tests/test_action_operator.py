import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfq.action_operator import (Form, PolynomialFunctional, apply_action, commutator_check, expectation,
                                 momentum_apply, stencil_commutator)
from wfq.errors import ValidationError
from wfq.grid import Harmonic, PhysicalParams, SpaceGrid, TimeGrid, first_difference, quadrature, second_difference
from wfq.schrodinger import ground_state, stationary_history
from wfq.wavefunctional import BrokenLine, MultiplicativeFunctional, variational_derivative


def _normalized(space, raw):
    return raw / np.sqrt(quadrature(space, np.abs(raw) ** 2).real)[:, None]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_symmetrized_lambda_is_real(seed):
    rng = np.random.default_rng(seed)
    space, time = SpaceGrid(-3.0, 3.0, 24), TimeGrid(1.0, 4)
    factors = _normalized(space, rng.normal(size=(5, 24)) + 1j * rng.normal(size=(5, 24)))
    psi = MultiplicativeFunctional(space, time, factors)
    lam = expectation(psi, Harmonic(1.0), PhysicalParams(1.0, 1.0, time.eps)).lam
    assert abs(lam.imag) < 1e-12


def test_raw_form_carries_half_hbar_per_slice(coherent_history, harmonic_setup):
    _, time, params, potential = harmonic_setup
    raw = expectation(coherent_history, potential, params, Form.RAW)
    sym = expectation(coherent_history, potential, params, Form.SYMMETRIZED)
    assert (raw.lam - sym.lam).imag == pytest.approx(-time.N * params.hbar / 2, rel=1e-2)
    assert raw.kinetic_term.real == pytest.approx(sym.kinetic_term.real, rel=1e-2)


def test_expectation_accepts_history_or_functional(coherent_history, harmonic_setup):
    _, _, params, potential = harmonic_setup
    a = expectation(coherent_history, potential, params)
    b = expectation(MultiplicativeFunctional.from_history(coherent_history), potential, params)
    assert a.lam == b.lam
    assert a.lam == pytest.approx(a.velocity_term + a.kinetic_term + a.potential_term)
    data = json.loads(a.to_json())
    assert data["form"] == "symmetrized" and data["N"] == 32


def test_expectation_requires_normalised_factors():
    space, time = SpaceGrid(-3.0, 3.0, 16), TimeGrid(1.0, 2)
    psi = MultiplicativeFunctional(space, time, 2.0 * np.ones((3, 16)))
    with pytest.raises(ValidationError):
        expectation(psi, Harmonic(1.0), PhysicalParams(1.0, 1.0, time.eps))


def test_stationary_ground_state_lambda_is_minus_energy_times_T():
    # the velocity term of a real, time-independent profile vanishes; kinetic + potential give -E0 T
    space, time = SpaceGrid(-8.0, 8.0, 256), TimeGrid(1.0, 16)
    params = PhysicalParams(1.0, 1.0, time.eps)
    e0, g = ground_state(space, Harmonic(1.0), params)
    lam = expectation(stationary_history(g, e0, time, params), Harmonic(1.0), params)
    assert abs(lam.velocity_term) < 1e-12
    assert lam.lam.real == pytest.approx(-e0 * time.T, abs=1e-3)


def test_apply_action_matches_hand_expansion():
    rng = np.random.default_rng(7)
    space, time = SpaceGrid(-2.0, 2.0, 9), TimeGrid(1.0, 2)
    params = PhysicalParams(1.0, 1.0, time.eps)
    f = rng.normal(size=(3, 9)) + 1j * rng.normal(size=(3, 9))
    psi = MultiplicativeFunctional(space, time, f)
    idx = [2, 5, 7]
    line = BrokenLine.from_indices(space, idx)
    x = line.vertices
    d1, d2 = first_difference(space, f), second_difference(space, f)
    v = f[np.arange(3), idx]
    U = Harmonic(1.0)
    expected = 0.0
    for n in range(2):
        others = np.prod(np.delete(v, n))
        term = (1 / 1j) * (x[n + 1] - x[n]) * d1[n, idx[n]] + time.eps / 2 * d2[n, idx[n]]
        term -= time.eps * U(x[n], time.t[n], params) * v[n]
        expected += term * others
    assert apply_action(psi, line, U, params) == pytest.approx(expected, abs=1e-12)


def test_momentum_is_scaled_variational_derivative():
    rng = np.random.default_rng(2)
    space, time = SpaceGrid(-2.0, 2.0, 9), TimeGrid(2.0, 4)
    params = PhysicalParams(1.0, 1.5, time.eps)
    psi = MultiplicativeFunctional(space, time, rng.normal(size=(5, 9)) + 0j)
    line = BrokenLine.from_indices(space, [1, 3, 4, 4, 8])
    for n in range(5):
        assert momentum_apply(psi, line, n, params) == pytest.approx(
            params.hbar_tilde / 1j * variational_derivative(psi, line, n))


coefficients = st.lists(st.floats(-2, 2), min_size=1, max_size=5)


@settings(max_examples=40, deadline=None)
@given(rows=st.lists(coefficients, min_size=3, max_size=6), hbar=st.floats(0.2, 3.0),
       point=st.lists(st.floats(-1.5, 1.5), min_size=6, max_size=6))
def test_polynomial_commutator_is_canonical(rows, hbar, point):
    functional = PolynomialFunctional.from_coefficients(rows, coef=0.5 - 1j)
    N = functional.N
    params = PhysicalParams(1.0, hbar, 1.0 / N)
    line = np.array(point[: N + 1])
    for n in range(N + 1):
        for n_prime in range(N + 1):
            rep = commutator_check(n, n_prime, functional, [line], params)
            scale = max(1.0, abs(functional(line)))
            assert rep.abs_error < 1e-12 * scale * 100
            if n != n_prime:
                assert rep.measured == pytest.approx(rep.expected, abs=1e-12 * scale)


def test_commutator_rejects_bad_slices():
    functional = PolynomialFunctional.from_coefficients([[1.0, 1.0]] * 3)
    with pytest.raises(ValidationError):
        commutator_check(0, 5, functional, [np.zeros(3)], PhysicalParams())


def test_stencil_commutator_converges_at_second_order():
    errs = []
    for M in (101, 201, 401):
        space, time = SpaceGrid(-6.0, 6.0, M), TimeGrid(1.0, 2)
        params = PhysicalParams(1.0, 1.0, time.eps)
        fields = np.exp(-((space.x[None, :] - np.array([[0.1], [0.0], [-0.2]])) ** 2) + 0.3j * space.x)
        psi = MultiplicativeFunctional(space, time, fields)
        line = BrokenLine([0.3, -0.6, 0.9])
        value = np.prod(psi.values_at(line))
        errs.append(abs(stencil_commutator(psi, line, 1, 1, params) - 1j * value))
        # off-node lines pick up interpolation error; on nodes distinct slices commute exactly
        node_line = BrokenLine.from_indices(space, [M // 2, M // 3, M // 2 + 5])
        assert abs(stencil_commutator(psi, node_line, 0, 2, params)) < 1e-15
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.2)
