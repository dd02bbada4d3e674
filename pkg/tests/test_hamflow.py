import math

import numpy as np
import pytest

from sympidx.errors import NonPeriodicInput, NoConvergence, StepTooLarge
from sympidx.hamflow import (HamSystem, Reparam, closure_residual, delta_under_reparametrization,
                             flow, variational_flow)
from sympidx.linalg import symplectic_defect
from sympidx.paths import Convention, QuadHamiltonian, delta_tilde, linear_flow
from sympidx.sampling import random_symmetric

MECH = Convention.MECHANICS


def oscillator():
    return HamSystem.quadratic(np.eye(2))


def test_oscillator_returns():
    tr = flow(oscillator(), [1.0, 0.0], 2 * math.pi, 400)
    assert np.allclose(tr.states[-1], [1.0, 0.0], atol=1e-6)
    assert tr.within_bound


def test_constant_hamiltonian_is_stationary():
    sys_ = HamSystem(2, lambda z: 3.0)
    tr = flow(sys_, [0.3, -0.2], 5.0, 50)
    assert np.allclose(tr.states, [0.3, -0.2], atol=1e-12)


def test_pendulum_drift():
    tr = flow(HamSystem.pendulum(), [2.0, 0.5], 100.0, 10000)
    assert tr.energy_drift < 1e-6


@pytest.mark.parametrize("order", [2, 4, 6])
def test_time_reversal(order):
    sys_ = HamSystem.pendulum()
    z0 = np.array([0.4, 1.1])
    fwd = flow(sys_, z0, 3.0, 300, order=order)
    back = flow(sys_, fwd.states[-1], -3.0, 300, order=order)
    assert np.allclose(back.states[-1], z0, atol=1e-8)


def test_higher_order_reduces_drift():
    sys_ = HamSystem.pendulum()
    d = [flow(sys_, [2.0, 0.5], 20.0, 400, order=o).energy_drift for o in (2, 4, 6)]
    assert d[0] > d[1] > d[2]


def test_guards():
    with pytest.raises(ValueError):
        flow(oscillator(), [1.0, 0.0], 1.0, 8)
    with pytest.raises(StepTooLarge):
        flow(HamSystem.quadratic(100 * np.eye(2)), [1.0, 0.0], 1.0, 16)
    with pytest.raises(ValueError):
        flow(oscillator(), [1.0, 0.0, 0.0], 1.0, 16)


def test_inner_iteration_failure():
    with pytest.raises(NoConvergence):
        flow(oscillator(), [1.0, 0.0], 1.0, 16, max_iter=1)


def test_mechanics_convention_reverses_direction():
    a = flow(oscillator(), [1.0, 0.0], 1.0, 100)
    b = flow(oscillator(), [1.0, 0.0], 1.0, 100, MECH)
    assert np.allclose(a.states[:, 0], b.states[:, 0])
    assert np.allclose(a.states[:, 1], -b.states[:, 1])


def test_gradient_and_hessian_fallbacks(rng):
    S = random_symmetric(4, rng)
    exact = HamSystem.quadratic(S)
    fd = HamSystem(4, lambda z: 0.5 * z @ S @ z)
    z = rng.normal(size=4)
    assert np.allclose(fd.gradient(z), exact.gradient(z), atol=1e-8)
    assert np.allclose(fd.hessian(z), S, atol=1e-6)
    assert fd.check_consistency(rng.normal(size=(5, 4))) < 1e-5


def test_inconsistent_gradient_is_reported():
    bad = HamSystem(2, lambda z: z @ z, grad=lambda z: z)
    with pytest.raises(ValueError):
        bad.check_consistency(np.array([[1.0, 2.0]]))


def test_variational_flow_of_linear_system(rng):
    S = random_symmetric(4, rng, 0.5)
    sys_ = HamSystem.quadratic(S)
    tr = flow(sys_, rng.normal(size=4), 2.0, 200)
    path = variational_flow(sys_, tr)
    ref = linear_flow(QuadHamiltonian.constant(S), (0.0, 2.0), 200)
    assert np.allclose(path.frames[-1], ref.frames[-1], atol=1e-8)


def test_variational_flow_at_stable_equilibrium():
    sys_ = HamSystem.pendulum()
    # the minimum of cos q sits at q = pi; the hessian there is the identity
    T = 10.0
    tr = flow(sys_, [math.pi, 0.0], T, 1000)
    d = delta_tilde(variational_flow(sys_, tr)).delta
    assert d == pytest.approx(T / math.pi, abs=1e-6)


def test_variational_frames_are_symplectic():
    sys_ = HamSystem.pendulum()
    tr = flow(sys_, [2.0, 0.5], 30.0, 3000)
    path = variational_flow(sys_, tr)
    assert symplectic_defect(path.frames) < 1e-7
    assert np.prod(np.linalg.eigvals(path.frames[-1])).real == pytest.approx(1.0, abs=1e-8)


def test_convention_sign_on_linear_system():
    sys_ = HamSystem.quadratic(np.diag([1.0, 2.0]))
    a = delta_tilde(variational_flow(sys_, flow(sys_, [1.0, 0.5], 4.0, 400))).delta
    b = delta_tilde(variational_flow(sys_, flow(sys_, [1.0, 0.5], 4.0, 400, MECH))).delta
    assert a > 0 > b
    assert abs(a + b) < 1e-9


def test_reparametrization_identity():
    sys_ = oscillator()
    orbit = flow(sys_, [1.0, 0.0], 2 * math.pi, 400, order=6)
    a, b = delta_under_reparametrization(sys_, Reparam.identity(), orbit)
    assert a == b


def test_reparametrization_scale():
    sys_ = oscillator()
    orbit = flow(sys_, [1.0, 0.0], 2 * math.pi, 400, order=6)
    a, b = delta_under_reparametrization(sys_, Reparam.scale(2.0), orbit)
    assert abs(a - b) < 1e-6


def test_reparametrization_quadratic_on_oscillator():
    sys_ = oscillator()
    orbit = flow(sys_, [1.0, 0.0], 2 * math.pi, 400, order=6)
    a, b = delta_under_reparametrization(sys_, Reparam.quadratic(1.0), orbit, method="rho")
    assert abs(a - b) < 1e-4
    # the polar winding is not invariant: the reparametrized monodromy is a shear
    a, b = delta_under_reparametrization(sys_, Reparam.quadratic(1.0), orbit, method="tilde")
    assert abs(a - b) > 1e-2


def test_reparametrization_needs_a_closed_orbit():
    sys_ = oscillator()
    open_arc = flow(sys_, [1.0, 0.0], 3.0, 300)
    assert closure_residual(sys_, open_arc) > 1e-3
    with pytest.raises(NonPeriodicInput):
        delta_under_reparametrization(sys_, Reparam.scale(2.0), open_arc)


def test_reparam_rejects_nonpositive_scale():
    with pytest.raises(ValueError):
        Reparam.scale(0.0)


def test_trajectory_csv():
    tr = flow(oscillator(), [1.0, 0.0], 1.0, 16)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,z_1,z_2,H"
    assert len(lines) == 18
    assert float(lines[-1].split(",")[0]) == 1.0


def test_tangent_map_matches_variational_flow():
    sys_ = HamSystem.pendulum()
    tr = flow(sys_, [2.0, 0.5], 5.0, 500, tangent=True)
    path = variational_flow(sys_, tr)
    assert np.allclose(tr.tangent, path.frames[-1], atol=1e-3)
    assert symplectic_defect(tr.tangent) < 1e-10


def test_torus_displacement_wraps():
    sys_ = HamSystem.pendulum()
    d = sys_.displacement([2 * math.pi + 0.1, 1.0], [0.0, 1.0])
    assert d == pytest.approx([0.1, 0.0])
