"""Integration layer: drift control, event location, variational flow."""

import math
import os

import numpy as np
import pytest

from saddletubes.errors import DriftExceeded, NoEventWithinMaxTime
from saddletubes.integrate import (DEFAULT_CONFIG, IntegratorConfig,
                                   Trajectory, flow, integrate,
                                   integrate_to_event, integrate_variational,
                                   trajectory_to_csv)
from saddletubes.sections import SectionSpec

S0 = np.array([0.4, -0.3, 1.1, -0.7])


def test_energy_drift_100_units(physical_model):
    cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-12, max_time=200.0,
                           drift_tol=1e-8)
    traj = integrate(physical_model, S0, (0.0, 100.0), cfg)
    h = np.array([physical_model.hamiltonian(s) for s in traj.states])
    assert np.max(np.abs(h - h[0])) < 1e-9


def test_drift_guard_trips_on_sloppy_tolerance(physical_model):
    cfg = IntegratorConfig(rel_tol=1e-3, abs_tol=1e-3, max_time=300.0,
                           drift_tol=1e-12)
    with pytest.raises(DriftExceeded):
        integrate(physical_model, S0, (0.0, 200.0), cfg)


def test_flow_matches_trajectory_endpoint(physical_model):
    traj = integrate(physical_model, S0, (0.0, 3.0))
    xT = flow(physical_model, S0, 3.0)
    assert np.allclose(xT, traj.states[-1], atol=1e-12)


def test_dense_state_at(physical_model):
    traj = integrate(physical_model, S0, (0.0, 5.0))
    t = 2.3173
    assert np.allclose(traj.state_at(t), flow(physical_model, S0, t),
                       atol=1e-9)


def test_backward_integration(physical_model):
    xT = flow(physical_model, S0, 2.0)
    back = flow(physical_model, xT, -2.0)
    assert np.allclose(back, S0, atol=1e-9)


class TestEventLocation:
    def test_residual_below_1e10(self, physical_model):
        sec = SectionSpec.angle(1, 0.5)
        ev, traj = integrate_to_event(physical_model, S0, sec)
        assert abs(sec.g(ev.state)) <= 1e-10
        assert ev.time > 0.0
        # the trajectory ends exactly at the event
        assert np.allclose(traj.states[-1], ev.state, atol=1e-12)

    def test_direction_filter(self, physical_model):
        sec = SectionSpec.angle(0, 0.0, crossing_direction=+1)
        ev, _ = integrate_to_event(physical_model, S0, sec)
        assert ev.direction == +1
        assert physical_model.vector_field(ev.state)[0] > 0.0

    def test_skip_count(self, physical_model):
        sec = SectionSpec.angle(0, 0.0, crossing_direction=+1)
        ev0, _ = integrate_to_event(physical_model, S0, sec)
        ev2, _ = integrate_to_event(physical_model, S0, sec, skip_count=2)
        assert ev2.time > ev0.time

    def test_backward_event(self, physical_model):
        sec = SectionSpec.angle(1, 0.5)
        ev, _ = integrate_to_event(physical_model, S0, sec, tdir=-1)
        assert ev.time < 0.0
        assert abs(sec.g(ev.state)) <= 1e-10

    def test_no_event_raises(self, physical_model):
        # a section level the energy shell cannot reach quickly
        sec = SectionSpec.angle(0, 400.0)
        cfg = IntegratorConfig(max_time=2.0)
        with pytest.raises(NoEventWithinMaxTime):
            integrate_to_event(physical_model, S0, sec, cfg=cfg)


def test_variational_vs_finite_difference(physical_model):
    T = 1.5
    xT, M = integrate_variational(physical_model, S0, T)
    fd = np.empty((4, 4))
    h = 1e-7
    for j in range(4):
        dp = np.zeros(4)
        dp[j] = h
        fp = flow(physical_model, S0 + dp, T)
        fm = flow(physical_model, S0 - dp, T)
        fd[:, j] = (fp - fm) / (2 * h)
    assert np.allclose(flow(physical_model, S0, T), xT, atol=1e-10)
    assert np.max(np.abs(M - fd)) < 1e-6


def test_variational_dense_output(physical_model):
    T = 1.0
    xT, M, phi = integrate_variational(physical_model, S0, T, dense=True)
    x_half, M_half = phi(0.5 * T)
    xT2, M2 = integrate_variational(physical_model, x_half, 0.5 * T)
    # chain rule across the midpoint
    assert np.allclose(xT2, xT, atol=1e-9)
    assert np.max(np.abs(M2 @ M_half - M)) < 1e-6


def test_time_reversal_round_trip(physical_model):
    """R flow_T R flow_T = identity for the reverser symmetry."""
    R = physical_model.reversal_matrix
    T = 4.0
    x1 = flow(physical_model, S0, T)
    x2 = flow(physical_model, R @ x1, T)
    assert np.max(np.abs(R @ x2 - S0)) < 1e-7


def test_trajectory_csv_round_trip(physical_model, tmp_path):
    traj = integrate(physical_model, S0, (0.0, 2.0))
    path = os.path.join(tmp_path, "traj.csv")
    trajectory_to_csv(traj, physical_model, path)
    with open(path) as f:
        header = f.readline().strip()
    assert header == "t,q1,q2,v1,v2,H"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 0], traj.times)
    assert np.array_equal(data[:, 1:5], traj.states)
    h = np.array([physical_model.hamiltonian(s) for s in traj.states])
    assert np.array_equal(data[:, 5], h)


def test_trajectory_records_energy_endpoints(physical_model):
    traj = integrate(physical_model, S0, (0.0, 1.0))
    assert traj.energy_at_start == pytest.approx(
        physical_model.hamiltonian(S0), abs=1e-13)
    assert abs(traj.energy_at_end - traj.energy_at_start) < 1e-10
