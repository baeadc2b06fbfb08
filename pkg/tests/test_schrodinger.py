import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfq.analytic import coherent_center, coherent_state, free_gaussian
from wfq.errors import ValidationError
from wfq.grid import Free, Harmonic, PhysicalParams, SpaceGrid, TimeGrid, TimeLinearCoupling
from wfq.schrodinger import (SliceState, WaveHistory, cn_step, energy, evolve, ground_state,
                             momentum_expectation, position_expectation, schrodinger_action,
                             stationary_history)


def _gaussian(space, q0=0.0, k0=0.0, width=1.0):
    return SliceState.from_function(space, lambda x: np.exp(-((x - q0) ** 2) / (4 * width**2) + 1j * k0 * x))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**16), eps=st.floats(1e-3, 0.5))
def test_cn_is_unitary_on_periodic_grids(seed, eps):
    rng = np.random.default_rng(seed)
    g = SpaceGrid(-5.0, 5.0, 32, "periodic")
    state = SliceState(g, rng.normal(size=32) + 1j * rng.normal(size=32)).normalized()
    out = cn_step(state, Harmonic(1.0), PhysicalParams(1.0, 1.0, eps))
    assert abs(out.norm() - 1.0) < 1e-12
    assert out.t == pytest.approx(eps)


def test_dirichlet_cn_conserves_plain_sum():
    # CN is unitary in the Euclidean inner product; trapezoid weights differ at the two end nodes
    g = SpaceGrid(-3.0, 3.0, 12)
    rng = np.random.default_rng(1)
    state = SliceState(g, rng.normal(size=12) + 1j * rng.normal(size=12)).normalized()
    out = cn_step(state, Harmonic(1.0), PhysicalParams(1.0, 1.0, 0.2))
    assert np.sum(np.abs(out.amps) ** 2) == pytest.approx(np.sum(np.abs(state.amps) ** 2), abs=1e-13)


def test_energy_conserved_for_static_potential(coherent_history, harmonic_setup):
    space, time, params, potential = harmonic_setup
    e = [energy(coherent_history.slice(n), potential, params) for n in range(time.N + 1)]
    assert np.ptp(e) < 1e-12
    assert np.max(np.abs(coherent_history.norms() - 1.0)) < 1e-12


def test_coherent_center_follows_classical_path(coherent_history, harmonic_setup):
    space, time, params, _ = harmonic_setup
    q, p = coherent_center(time.t, 1.0, 0.0)
    x = [position_expectation(coherent_history.slice(n)) for n in range(time.N + 1)]
    pm = [momentum_expectation(coherent_history.slice(n), params) for n in range(time.N + 1)]
    assert np.max(np.abs(x - q)) < 3e-3
    assert np.max(np.abs(pm - p)) < 3e-3


def test_coherent_state_against_closed_form():
    space, time = SpaceGrid(-10.0, 10.0, 512), TimeGrid(1.0, 128)
    params = PhysicalParams(1.0, 1.0, time.eps)
    init = SliceState.from_function(space, lambda x: coherent_state(x, 0.0, 1.0, 0.5))
    hist = evolve(init, Harmonic(1.0), params, time)
    assert np.max(np.abs(hist.amps[-1] - coherent_state(space.x, 1.0, 1.0, 0.5))) < 2e-3


def test_free_gaussian_spreads_like_closed_form():
    space, time = SpaceGrid(-20.0, 20.0, 1024), TimeGrid(1.0, 200)
    params = PhysicalParams(1.0, 1.0, time.eps)
    init = SliceState.from_function(space, lambda x: free_gaussian(x, 0.0, 0.0, 1.0, 0.7))
    hist = evolve(init, Free(), params, time)
    assert np.max(np.abs(hist.amps[-1] - free_gaussian(space.x, 1.0, 0.0, 1.0, 0.7))) < 2e-3


def test_ground_state_phase_error_is_second_order():
    space = SpaceGrid(-8.0, 8.0, 128)
    errs = []
    for N in (8, 16, 32):
        time = TimeGrid(1.0, N)
        params = PhysicalParams(1.0, 1.0, time.eps)
        e0, g = ground_state(space, Harmonic(1.0), params)
        out = evolve(g, Harmonic(1.0), params, time).amps[-1]
        overlap = np.sum(space.weights * np.conj(g.amps) * out)
        errs.append(abs(np.angle(overlap * np.exp(1j * e0))))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 1.95)
    assert e0 == pytest.approx(0.5, abs=2e-3)


def test_time_dependent_force_uses_midpoint():
    # U = g x t gives <p>(T) = -g T^2 / 2 exactly (Ehrenfest, linear force)
    space, time = SpaceGrid(-15.0, 15.0, 512), TimeGrid(1.0, 20)
    params = PhysicalParams(1.0, 1.0, time.eps)
    hist = evolve(_gaussian(space), TimeLinearCoupling(0.8), params, time)
    assert momentum_expectation(hist.slice(time.N), params) == pytest.approx(-0.4, abs=1e-3)


def test_evolve_validates_initial_state():
    space, time = SpaceGrid(-5.0, 5.0, 32), TimeGrid(1.0, 4)
    params = PhysicalParams(1.0, 1.0, time.eps)
    with pytest.raises(ValidationError):
        evolve(_gaussian(space).at_time(0.5), Free(), params, time)
    with pytest.raises(ValidationError):
        evolve(SliceState(space, 2 * _gaussian(space).amps), Free(), params, time)


def test_history_shapes_and_slice_times():
    space, time = SpaceGrid(-1.0, 1.0, 8), TimeGrid(1.0, 4)
    with pytest.raises(ValidationError):
        WaveHistory(space, time, np.zeros((4, 8)))
    slices = [_gaussian(space).at_time(t) for t in time.t]
    hist = WaveHistory.from_slices(time, slices)
    assert hist.slice(2).t == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        WaveHistory.from_slices(time, slices[::-1])


def test_stationary_action_time_part_matches_closed_form():
    # phase term of psi e^{-iEt} with a forward difference is T (sin(E eps)/eps - E);
    # what remains is a spatial stencil mismatch independent of N
    space = SpaceGrid(-8.0, 8.0, 128)
    rest = []
    for N in (8, 16, 32):
        time = TimeGrid(1.0, N)
        params = PhysicalParams(1.0, 1.0, time.eps)
        e0, g = ground_state(space, Harmonic(1.0), params)
        action = schrodinger_action(stationary_history(g, e0, time, params), Harmonic(1.0), params)
        rest.append(action - (np.sin(e0 * time.eps) / time.eps - e0))
    assert np.ptp(rest) < 1e-12
    assert abs(rest[0]) < 5e-3


def test_coherent_state_is_on_shell(coherent_history, harmonic_setup):
    # the Schrodinger action of any exact solution is zero; only discretisation error remains
    _, _, params, potential = harmonic_setup
    assert abs(schrodinger_action(coherent_history, potential, params)) < 5e-3
