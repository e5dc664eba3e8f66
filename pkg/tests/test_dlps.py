"""Tests for paths, action sums, equations of motion, stepping and the
fixed-endpoint variational principle."""

import numpy as np
import pytest

from dlpsim.dlps import (DiscretePath, action_derivative, action_sum,
                         build_fixed_endpoint_variation, d1_lagrangian,
                         d2_lagrangian, del_residual, free_particle_dms,
                         from_dms, harmonic_oscillator_dms, make_path,
                         path_from_points, simulate, step)
from dlpsim.errors import SimulationError
from dlpsim.example_se2 import sample_cprime
from dlpsim.lie import sample_group, se2_two_point_action
from dlpsim.smooth import NewtonConfig, SmoothMapHandle, newton_solve

RES_TOL = 1e-9
VAR_TOL = 1e-6


def test_action_sum_constant_lagrangian():
    sys = from_dms(1, SmoothMapHandle(2, 1, lambda x: np.array([3.25])))
    path = make_path([(np.array([0.0]), np.array([1.0]))])
    assert action_sum(sys, path) == pytest.approx(3.25)


def test_action_sum_free_particle_hand_value():
    """Path 0, 1, 2 with L = (q1-q0)^2/2: action 0.5 + 0.5 = 1."""
    sys = free_particle_dms(dim=1, h=1.0)
    path = path_from_points([[0.0], [1.0], [2.0]])
    assert action_sum(sys, path) == pytest.approx(1.0, abs=1e-14)


def test_action_invariant_under_group_shift(full_system, rng):
    """Shifting a whole path by one group element preserves the action."""
    act = se2_two_point_action()
    for _ in range(20):
        pts = [sample_cprime(rng)[:4] for _ in range(4)]
        path = path_from_points(pts)
        g = sample_group(act.group, rng)
        shifted = path_from_points([act.act(g, p) for p in pts])
        assert abs(action_sum(full_system, path)
                   - action_sum(full_system, shifted)) < 1e-12


def test_del_residual_free_particle_zero():
    sys = free_particle_dms(dim=1, h=1.0)
    res = del_residual(sys, [0.0], [1.0], [1.0], [2.0])
    assert np.max(np.abs(res)) < 1e-12


def test_del_residual_stationary_path():
    """A constant path of a potential-free DMS is stationary."""
    sys = free_particle_dms(dim=2, h=0.5)
    q = np.array([0.4, -0.3])
    res = del_residual(sys, q, q, q, q)
    assert np.max(np.abs(res)) < 1e-12


def test_del_residual_reduced_closed_form(reduced, body_cfg, rng):
    """Points satisfying the closed-form update zero the reduced residual."""
    from dlpsim.example_se2 import closed_form_reduced_step, sample_annulus
    for _ in range(20):
        r0 = sample_annulus(rng, 0.7, 1.3)
        z0 = rng.uniform(-0.4, 0.4, 2)
        r1 = r0 + rng.uniform(-0.15, 0.15, 2)
        _, z1, r2 = closed_form_reduced_step(body_cfg, r0, z0, r1)
        res = del_residual(reduced.system, np.concatenate([r0, z0]), r1,
                           np.concatenate([r1, z1]), r2)
        assert np.max(np.abs(res)) < RES_TOL


def test_step_free_particle():
    sys = free_particle_dms(dim=1, h=1.0)
    eps1, m2 = step(sys, [0.0], [1.0])
    assert abs(eps1[0] - 1.0) < 1e-10 and abs(m2[0] - 2.0) < 1e-10


def test_step_stationary_zero_velocity(body_cfg):
    """Zero initial velocity and no force: the system stays put."""
    from dlpsim.example_se2 import TwoBodyConfig, make_full_system, potential_handle
    cfg = TwoBodyConfig(h=body_cfg.h, potential=potential_handle("zero"))
    sys = make_full_system(cfg)
    q = np.array([1.0, 0.0, -1.0, 0.0])
    eps1, m2 = step(sys, q, q)
    assert np.max(np.abs(eps1 - q)) < 1e-10
    assert np.max(np.abs(m2 - q)) < 1e-10


def test_step_reduced_example(reduced):
    """From ((1, 0), 1) with V(s) = s/2, h = 0.1: z1 = 0, r2 = 0.99."""
    eps1, m2 = step(reduced.system, np.array([1.0, 0, 0, 0]), np.array([1.0, 0]))
    assert np.max(np.abs(eps1 - np.array([1.0, 0, 0, 0]))) < 1e-10
    assert np.max(np.abs(m2 - np.array([0.99, 0.0]))) < 1e-10


def test_step_agrees_with_direct_dms_solve(full_system, rng):
    """Unified step vs a direct Newton solve of the two-term equation."""
    for _ in range(10):
        q0 = sample_cprime(rng)[:4]
        q1 = q0 + rng.uniform(-0.1, 0.1, 4)
        eps1, m2 = step(full_system, q0, q1)

        def direct(q2):
            return (d1_lagrangian(full_system, q1, q2)
                    + d2_lagrangian(full_system, q0, q1))

        q2 = newton_solve(SmoothMapHandle(4, 4, direct), 2 * q1 - q0)
        assert np.max(np.abs(m2 - q2)) < 1e-10
        assert np.max(np.abs(eps1 - q1)) < 1e-12


def test_simulate_zero_steps():
    sys = free_particle_dms(dim=1)
    path = simulate(sys, [0.0], [1.0], 0)
    assert len(path) == 1


def test_simulate_free_particle_linear():
    sys = free_particle_dms(dim=1, h=1.0)
    path = simulate(sys, [0.0], [1.0], 10)
    for k, (eps, m) in enumerate(path.pairs):
        assert abs(eps[0] - k) < 1e-10
        assert abs(m[0] - (k + 1)) < 1e-10


def test_simulate_middle_triple_residual(full_system, full_start):
    """Contiguous pairs of a trajectory satisfy the equations of motion."""
    path = simulate(full_system, *full_start, 3)
    res = del_residual(full_system, path[1][0], path[1][1],
                       path[2][0], path[2][1])
    assert np.max(np.abs(res)) <= NewtonConfig().residual_tol


def test_simulate_reports_partial_path(body_cfg):
    """A failing step surfaces the partial path and the step index."""
    from dlpsim.example_se2 import make_full_system
    sys = make_full_system(body_cfg)
    # velocities pointed at each other: the particles collide numerically
    q0 = np.array([1e-7, 0.0, -1e-7, 0.0])
    q1 = np.array([0.5e-13, 0.0, -0.5e-13, 0.0])
    with pytest.raises(SimulationError) as err:
        simulate(sys, q0, q1, 5)
    assert isinstance(err.value.partial_path, DiscretePath)
    assert err.value.step_index >= 0


def test_bundle_section_validation(reduced, rng):
    """The reduced bundle's section hits every sampled base point."""
    bundle = reduced.system.bundle
    defect = bundle.validate(lambda r: r.uniform(-2, 2, 2), rng)
    assert defect < 1e-9
    from dlpsim.dlps import FiberBundleModel
    broken = FiberBundleModel(
        total_dim=2, base_dim=1,
        phi=SmoothMapHandle(2, 1, lambda x: x[:1]),
        section=SmoothMapHandle(1, 2, lambda r: np.array([r[0] + 1.0, 0.0])))
    with pytest.raises(ValueError):
        broken.validate(lambda r: r.uniform(-1, 1, 1), rng)


def test_path_compatibility_validation(full_system):
    good = path_from_points([np.zeros(4), np.ones(4) * 0.1])
    good.validate(full_system.bundle)
    bad = make_path([(np.zeros(4), np.ones(4)),
                     (np.zeros(4), np.ones(4))])
    with pytest.raises(ValueError):
        bad.validate(full_system.bundle)


def test_from_dms_zero_chaining(rng):
    sys = free_particle_dms(dim=3)
    for _ in range(100):
        p0 = (rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3))
        p1 = (rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3))
        out = sys.ivcm(p0, p1, rng.standard_normal(3))
        assert np.max(np.abs(out)) == 0.0


def test_from_dms_two_term_residual(full_system, rng):
    """With the identity bundle the residual is D1 L(k) + D2 L(k-1)."""
    q0 = sample_cprime(rng)[:4]
    q1, q2 = q0 + rng.uniform(-0.1, 0.1, 4), q0 + rng.uniform(-0.2, 0.2, 4)
    res = del_residual(full_system, q0, q1, q1, q2)
    expected = (d1_lagrangian(full_system, q1, q2)
                + d2_lagrangian(full_system, q0, q1))
    assert np.max(np.abs(res - expected)) < 1e-13


def test_variation_zero_inputs(full_system, full_start):
    path = simulate(full_system, *full_start, 4)
    var = build_fixed_endpoint_variation(
        full_system, path, [np.zeros(4)] * (len(path) - 1))
    for de, dm in var.deltas:
        assert np.max(np.abs(de)) == 0.0 and np.max(np.abs(dm)) == 0.0


def test_variation_dms_passthrough(full_system, full_start, rng):
    """Zero chaining: free vectors pass through and the k = 0 slot vanishes."""
    path = simulate(full_system, *full_start, 4)
    tilde = [rng.standard_normal(4) for _ in range(len(path) - 1)]
    var = build_fixed_endpoint_variation(full_system, path, tilde)
    assert np.max(np.abs(var.deltas[0][0])) == 0.0
    for k in range(1, len(path)):
        assert np.max(np.abs(var.deltas[k][0] - tilde[k - 1])) < 1e-14
    assert np.max(np.abs(var.deltas[-1][1])) == 0.0


@pytest.mark.parametrize("system_name", ["free", "harmonic"])
def test_variational_principle_dms(system_name, rng):
    """dS vanishes along fixed-endpoint variations of a trajectory."""
    if system_name == "free":
        sys = free_particle_dms(dim=2, h=0.5)
        start = (np.array([0.0, 0.0]), np.array([0.1, 0.05]))
    else:
        sys = harmonic_oscillator_dms(h=0.1)
        start = (np.array([1.0]), np.array([0.995]))
    path = simulate(sys, *start, 8)
    for _ in range(20):
        tilde = [rng.standard_normal(sys.bundle.total_dim)
                 for _ in range(len(path) - 1)]
        var = build_fixed_endpoint_variation(sys, path, tilde)
        assert abs(action_derivative(sys, path, var)) < VAR_TOL


def test_variational_principle_reduced(reduced, rng):
    """The variational principle holds on the reduced system too."""
    path = simulate(reduced.system, np.array([1.0, 0, 0.1, 0.05]),
                    np.array([1.02, 0.01]), 8)
    for _ in range(20):
        tilde = [rng.standard_normal(4) for _ in range(len(path) - 1)]
        var = build_fixed_endpoint_variation(reduced.system, path, tilde)
        assert abs(action_derivative(reduced.system, path, var)) < VAR_TOL


def test_chaining_map_linearity(reduced, rng):
    """The reduced chaining map is linear in the tangent argument."""
    pair0 = (np.array([1.0, 0.1, 0.2, -0.1]), np.array([1.05, 0.12]))
    pair1 = (np.array([1.05, 0.12, 0.2, -0.1]), np.array([1.1, 0.15]))
    ivcm = reduced.system.ivcm
    for _ in range(10):
        a, b = rng.standard_normal(2)
        x, y = rng.standard_normal(4), rng.standard_normal(4)
        lhs = ivcm(pair0, pair1, a * x + b * y)
        rhs = a * ivcm(pair0, pair1, x) + b * ivcm(pair0, pair1, y)
        assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_chaining_map_vertical(reduced, rng):
    """The reduced chaining map lands in the kernel of the bundle map."""
    bundle = reduced.system.bundle
    pair0 = (np.array([1.0, 0.1, 0.2, -0.1]), np.array([1.05, 0.12]))
    pair1 = (np.array([1.05, 0.12, 0.2, -0.1]), np.array([1.1, 0.15]))
    for _ in range(10):
        out = reduced.system.ivcm(pair0, pair1, rng.standard_normal(4))
        jphi = bundle.phi.jacobian(pair0[0])
        assert np.max(np.abs(jphi @ out)) < 1e-8
