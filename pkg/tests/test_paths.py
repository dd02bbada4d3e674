import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

import oracles
from sympidx.errors import NonSymplectic, SamplingTooCoarse
from sympidx.linalg import standard_J, symplectic_sum
from sympidx.paths import (Convention, QuadHamiltonian, SympPath, delta_homogenized, delta_rho,
                           delta_tilde, iterate_path, linear_flow)
from sympidx.sampling import random_quad_hamiltonian, random_symplectic, random_unitary


def rot_path(rates, T, N=400):
    t = np.linspace(0.0, T, N + 1)
    frames = np.array([symplectic_sum(*(oracles.rot(w * s) for w in rates)) for s in t])
    # symplectic_sum orders coordinates (x1..xn, y1..yn)
    return SympPath(t, frames)


def test_constant_path_has_zero_delta(rng):
    A = random_symplectic(2, rng, 0.5)
    p = SympPath(np.linspace(0, 1, 5), np.repeat(A[None], 5, axis=0))
    assert delta_tilde(p).delta == 0.0


def test_rotation_loop_is_two():
    assert delta_tilde(rot_path([1.0], 2 * math.pi)).delta == pytest.approx(2.0, abs=1e-12)


def test_rotation_sum_sp4():
    assert delta_tilde(rot_path([1.0, 2.0], 2 * math.pi)).delta == pytest.approx(6.0, abs=1e-12)


def test_coarse_sampling_is_rejected():
    with pytest.raises(SamplingTooCoarse):
        SympPath([0.0, 1.0, 2.0], np.array([np.eye(2), oracles.rot(1.5), oracles.rot(3.0)]))
    p = SympPath([0.0, 1.0], np.array([np.eye(2), oracles.rot(2.0)]), validate=False)
    with pytest.raises(SamplingTooCoarse):
        delta_tilde(p)


def test_path_rejects_bad_input():
    with pytest.raises(ValueError):
        SympPath([0.0], np.eye(2)[None])
    with pytest.raises(ValueError):
        SympPath([0.0, 0.0], np.array([np.eye(2), np.eye(2)]))
    with pytest.raises(NonSymplectic):
        SympPath([0.0, 1.0], np.array([np.eye(2), 1.1 * np.eye(2)]))


def test_json_round_trip(rng):
    p = linear_flow(random_quad_hamiltonian(2, rng), (0.0, 1.0), 20)
    q = SympPath.from_json(p.to_json())
    assert np.array_equal(q.times, p.times)
    assert np.array_equal(q.frames, p.frames)


# u ** power with power >= 0.5 keeps the first step of the 201-point grid
# below the sampling guard; smaller powers are rightly rejected as too coarse
@given(st.floats(0.5, 3.0), st.floats(0.5, 4.0))
@settings(max_examples=25, deadline=None)
def test_reparametrization_invariance(power, T):
    A = standard_J(1) @ np.array([[1.0, 0.3], [0.3, -0.4]])
    u = np.linspace(0.0, 1.0, 201)
    a = SympPath(T * u, np.array([expm(T * s * A) for s in u]))
    b = SympPath(T * u ** power, np.array([expm(T * s ** power * A) for s in u]))
    assert abs(delta_tilde(a).delta - delta_tilde(b).delta) < 1e-9


def test_concatenation_and_inverse(rng):
    p = linear_flow(random_quad_hamiltonian(2, rng), (0.0, 4.0), 300)
    whole = delta_tilde(p).delta
    parts = delta_tilde(p.restrict(0, 120)).delta + delta_tilde(p.restrict(120, 300)).delta
    assert abs(whole - parts) < 1e-13
    assert abs(delta_tilde(p.inverse()).delta + whole) < 1e-9


def test_unitary_conjugation_invariance(rng):
    p = linear_flow(random_quad_hamiltonian(2, rng), (0.0, 3.0), 300)
    U = random_unitary(2, rng)
    assert abs(delta_tilde(p.conjugate(U)).delta - delta_tilde(p).delta) < 1e-9


def test_symplectic_conjugation_is_bounded(rng):
    for _ in range(10):
        p = linear_flow(random_quad_hamiltonian(2, rng), (0.0, 3.0), 300)
        B = random_symplectic(2, rng, 0.5)
        assert abs(delta_tilde(p.conjugate(B)).delta - delta_tilde(p).delta) <= 4


def test_linear_flow_oscillator_closed_form():
    p = linear_flow(QuadHamiltonian.constant(np.eye(2)), (0.0, math.pi), 100)
    assert np.allclose(p.frames[-1], -np.eye(2), atol=1e-8)
    assert np.allclose(p.frames[37], oracles.exp_rotation_flow(1.0, p.times[37]), atol=1e-12)


@pytest.mark.parametrize("n,alpha,T", [(1, 0.5, 3.0), (2, 1.5, 2.0), (3, 0.2, 7.0)])
def test_linear_flow_scalar_winding(n, alpha, T):
    p = linear_flow(QuadHamiltonian.constant(2 * alpha * np.eye(2 * n)), (0.0, T), 200)
    assert delta_tilde(p).delta == pytest.approx(oracles.delta_scalar_flow(2 * alpha, n, T), abs=1e-6)


def test_linear_flow_zero_hamiltonian():
    p = linear_flow(QuadHamiltonian.constant(np.zeros((4, 4))), (0.0, 1.0), 10)
    assert np.array_equal(p.frames, np.repeat(np.eye(4)[None], 11, axis=0))


def test_linear_flow_refines_until_guard_holds():
    p = linear_flow(QuadHamiltonian.constant(40.0 * np.eye(2)), (0.0, 1.0), 4)
    assert len(p) > 5
    assert p.max_step() < 0.5


def test_mechanics_convention_reverses_rotation():
    S = np.eye(2)
    a = linear_flow(QuadHamiltonian.constant(S, Convention.JGRAD), (0.0, 2.0), 100)
    b = linear_flow(QuadHamiltonian.constant(S, Convention.MECHANICS), (0.0, 2.0), 100)
    assert delta_tilde(a).delta == pytest.approx(-delta_tilde(b).delta, abs=1e-12)


def test_sampled_hamiltonian_interpolates():
    H = QuadHamiltonian.sampled([0.0, 1.0], [np.zeros((2, 2)), 2 * np.eye(2)])
    assert np.allclose(H(0.25), 0.5 * np.eye(2))
    with pytest.raises(ValueError):
        QuadHamiltonian.constant(np.array([[0.0, 1.0], [0.0, 0.0]]))(0.0)


def test_homogenization_unitary_fixed_point():
    p = rot_path([1.0], 2 * math.pi)
    for k in (1, 3, 8):
        assert delta_homogenized(p, k).delta == pytest.approx(2.0, abs=1e-12)


def test_homogenization_hyperbolic():
    t = np.linspace(0.0, 1.0, 51)
    p = SympPath(t, np.array([np.diag([math.exp(s), math.exp(-s)]) for s in t]))
    rep = delta_homogenized(p, 8)
    assert abs(rep.delta) <= 2 / 8
    assert rep.method == "homogenized(8)"


def test_homogenization_sequence_converges(rng):
    for _ in range(5):
        p = linear_flow(random_quad_hamiltonian(2, rng, 0.4), (0.0, 2.0), 200)
        for k in (2, 4, 8):
            gap = abs(delta_homogenized(p, 2 * k).delta - delta_homogenized(p, k).delta)
            assert gap <= 4 / k


def test_homogenization_limits():
    p = rot_path([1.0], 1.0, 10)
    with pytest.raises(ValueError):
        delta_homogenized(p, 65)
    with pytest.raises(ValueError):
        iterate_path(p.left(oracles.rot(0.1)), 2)


def test_delta_rho_matches_on_unitary_paths():
    p = rot_path([1.0, -0.5], 5.0)
    assert delta_rho(p).delta == pytest.approx(delta_tilde(p).delta, abs=1e-9)
