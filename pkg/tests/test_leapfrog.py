"""Leapfrog stepping, crossing detection, and the lean/instrumented parity."""

import numpy as np
import pytest

from kinkhmc.bnn import (BNNPotential, MLPArchitecture, PosteriorSpec,
                         RegressionDataset)
from kinkhmc.harness import generate_synthetic
from kinkhmc.leapfrog import (PhasePoint, detect_crossings, hamiltonian,
                              leapfrog_run, leapfrog_step, trajectory)
from kinkhmc.potentials import QuadraticPotential, ZeroPotential
from kinkhmc.proxy import (LaplacePotential, PiecewiseAffinePotential,
                           ProductPotential)


def test_worked_single_step_on_kink():
    """Every number in this step is checkable by hand.

    V = |q|, q0 = -0.3, p0 = 1.0, eps = 1.0: the drift crosses the kink at
    t = 0.2 and the energy error is 0.9.
    """
    pot = LaplacePotential()
    state = PhasePoint(np.array([-0.3]), np.array([1.0]))
    new, rec = leapfrog_step(pot, state, 1.0)

    np.testing.assert_allclose(rec.p_half, [1.5], rtol=1e-15)
    np.testing.assert_allclose(new.q, [1.2], rtol=1e-15)
    np.testing.assert_allclose(new.p, [1.0], rtol=1e-15)
    np.testing.assert_allclose(rec.h0, 0.8, rtol=1e-15)
    np.testing.assert_allclose(rec.h1, 1.7, rtol=1e-15)
    np.testing.assert_allclose(rec.delta_h, 0.9, rtol=1e-14)

    assert len(rec.crossings) == 1
    ev = rec.crossings[0]
    np.testing.assert_allclose(ev.time, 0.2, rtol=1e-15)
    assert ev.sign_before == -1 and ev.sign_after == 1
    np.testing.assert_allclose(ev.jump, [2.0], rtol=1e-15)
    np.testing.assert_allclose(ev.point, [0.0], atol=1e-16)


def test_free_particle_is_exact():
    pot = ZeroPotential(4)
    rng = np.random.default_rng(0)
    q0 = rng.standard_normal(4)
    p0 = rng.standard_normal(4)
    q1, p1, dh, div = leapfrog_run(pot, q0, p0, 0.37, 25)
    assert not div
    np.testing.assert_allclose(q1, q0 + 25 * 0.37 * p0, rtol=1e-13)
    np.testing.assert_array_equal(p1, p0)
    assert dh == 0.0


def test_harmonic_energy_error_small_and_smooth():
    pot = QuadraticPotential(3, stiffness=2.0)
    rng = np.random.default_rng(1)
    state = PhasePoint(rng.standard_normal(3), rng.standard_normal(3))
    trace = trajectory(pot, state, 0.01, 200)
    assert not trace.divergent
    assert trace.n_crossings == 0
    assert abs(trace.total_delta_h) < 1e-3
    h0 = hamiltonian(pot, state)
    np.testing.assert_allclose(trace.records[0].h0, h0, rtol=1e-14)


def test_detection_against_dense_scan():
    """Closed-form roots agree with a brute-force sign scan of the segment."""
    pot = PiecewiseAffinePotential(breakpoints=[-1.2, -0.3, 0.4, 1.1],
                                  slopes=[-2.0, -0.5, 0.5, 1.0, 2.0])
    rng = np.random.default_rng(6)
    for _ in range(50):
        q0 = rng.uniform(-2.0, 2.0, 1)
        p_half = rng.standard_normal(1) * 2.0
        eps = rng.uniform(0.2, 1.5)
        events = detect_crossings(pot, q0, p_half, eps, with_gradients=False)

        ts = np.linspace(0.0, eps, 10001)
        path = q0[0] + ts * p_half[0]
        brute = []
        for b in pot.breakpoints:
            s = np.sign(path - b)
            flips = np.nonzero(s[:-1] * s[1:] < 0)[0]
            for i in flips:
                # linear interpolation inside the bracketing cell
                t = ts[i] + (ts[i + 1] - ts[i]) * (b - path[i]) / (path[i + 1] - path[i])
                brute.append(t)
        brute.sort()

        assert len(events) == len(brute)
        for ev, t in zip(events, brute):
            np.testing.assert_allclose(ev.time, t, rtol=1e-9, atol=1e-12)
            # root accuracy: the surface function vanishes at the crossing
            assert abs(pot.surface_value(ev.surface_id, ev.point)) < 1e-12


def test_detection_orders_ties_by_surface_enumeration():
    # both coordinates cross their breakpoint at exactly the same offset
    pot = ProductPotential(LaplacePotential(), 2)
    q0 = np.array([-0.5, -0.5])
    p_half = np.array([1.0, 1.0])
    events = detect_crossings(pot, q0, p_half, 1.0, with_gradients=False)
    assert [ev.surface_id for ev in events] == [(0, 0), (1, 0)]
    assert events[0].time == events[1].time


def test_detection_skips_endpoint_touches():
    pot = LaplacePotential()
    # segment starts exactly on the surface: not a strict sign change
    events = detect_crossings(pot, np.array([0.0]), np.array([1.0]), 0.5)
    assert events == []
    # tangential approach that stops at the surface
    events = detect_crossings(pot, np.array([-0.5]), np.array([1.0]), 0.5)
    assert events == []


def _relu_problem(seed, dims=(1, 6, 1), n=8, noise=0.4):
    rng = np.random.default_rng(seed)
    data = generate_synthetic(n, seed)
    arch = MLPArchitecture(dims, activation="relu")
    spec = PosteriorSpec(arch=arch, data=RegressionDataset(data.x, data.y),
                         prior_scale=1.0, noise_scale=noise)
    pot = BNNPotential(spec)
    q = rng.standard_normal(arch.n_params)
    p = rng.standard_normal(arch.n_params)
    return pot, q, p


def test_first_layer_crossing_roots_are_exact():
    pot, q, p = _relu_problem(3)
    g0 = pot.grad(q)
    p_half = p - 0.05 * g0
    events = detect_crossings(pot, q, p_half, 0.1)
    assert events, "expected at least one crossing for this seed"
    for ev in events:
        assert ev.surface_id[0] == 1
        assert abs(pot.surface_value(ev.surface_id, ev.point)) < 1e-10
        assert 0.0 < ev.time < 0.1
        assert ev.jump is not None and ev.jump.shape == q.shape


def test_deep_layer_crossings_found_by_bisection():
    found = 0
    for seed in range(30):
        pot, q, p = _relu_problem(seed, dims=(1, 4, 4, 1), n=6)
        p_half = p - 0.1 * pot.grad(q)
        events = detect_crossings(pot, q, p_half, 0.2)
        deep = [ev for ev in events if ev.surface_id[0] == 2]
        for ev in deep:
            assert abs(pot.surface_value(ev.surface_id, ev.point)) < 1e-9
        found += len(deep)
    assert found >= 3, f"only {found} second-layer crossings in the sweep"


def test_crossings_sorted_by_time():
    for seed in range(10):
        pot, q, p = _relu_problem(seed, n=12)
        p_half = p - 0.1 * pot.grad(q)
        events = detect_crossings(pot, q, p_half, 0.3, with_gradients=False)
        times = [ev.time for ev in events]
        assert times == sorted(times)


def test_lean_and_instrumented_paths_bit_identical():
    pot, q, p = _relu_problem(11)
    eps, L = 0.02, 50
    q_fast, p_fast, dh_fast, div = leapfrog_run(pot, q, p, eps, L)
    assert not div

    trace = trajectory(pot, PhasePoint(q, p), eps, L, detect=False)
    np.testing.assert_array_equal(q_fast, trace.final.q)
    np.testing.assert_array_equal(p_fast, trace.final.p)
    np.testing.assert_array_equal(dh_fast, trace.total_delta_h)

    # chaining single steps reproduces the same floats as well
    state = PhasePoint(q, p)
    for _ in range(L):
        state, _ = leapfrog_step(pot, state, eps, detect=False)
    np.testing.assert_array_equal(state.q, q_fast)
    np.testing.assert_array_equal(state.p, p_fast)


def test_detection_does_not_perturb_the_map():
    pot, q, p = _relu_problem(13)
    eps, L = 0.05, 20
    t1 = trajectory(pot, PhasePoint(q, p), eps, L, detect=True)
    t2 = trajectory(pot, PhasePoint(q, p), eps, L, detect=False)
    np.testing.assert_array_equal(t1.final.q, t2.final.q)
    np.testing.assert_array_equal(t1.final.p, t2.final.p)


def test_divergence_flags_and_early_stop():
    pot = QuadraticPotential(1, stiffness=1e8)
    state = PhasePoint(np.array([1.0]), np.array([0.0]))
    trace = trajectory(pot, state, 0.5, 100)
    assert trace.divergent
    assert len(trace.records) < 100  # stopped at the first blow-up

    q1, p1, dh, div = leapfrog_run(pot, state.q, state.p, 0.5, 100)
    assert div and (not np.isfinite(dh) or abs(dh) > 1e6)


def test_divergence_cap_marks_large_but_finite_errors():
    pot = QuadraticPotential(1, stiffness=100.0)
    state = PhasePoint(np.array([1.0]), np.array([0.0]))
    _, rec = leapfrog_step(pot, state, 0.3, divergence_cap=1e-6)
    assert rec.divergent
    assert np.isfinite(rec.delta_h)


def test_phase_point_shape_mismatch():
    with pytest.raises(ValueError):
        PhasePoint(np.zeros(3), np.zeros(2))
