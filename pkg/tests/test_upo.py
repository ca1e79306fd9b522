"""Periodic orbit solver, Floquet data, and family continuation."""

import numpy as np
import pytest

from saddletubes.errors import EnergyBelowSaddle
from saddletubes.integrate import flow
from saddletubes.upo import (compute_floquet, continue_family, sample_orbit,
                             upo_at_energy)

# half-period symmetric shooting results, frozen from converged runs
FAMILY = {
    -0.147: dict(T=0.615153, anchor=(0.50199, 3.54621), lam_u=4110.632),
    -0.07: dict(T=0.654997, anchor=(0.99408, 3.92605), lam_u=10319.662),
    0.2: dict(T=0.886138, anchor=(1.93470, 4.16914), lam_u=111127.044),
}


def _check_against_frozen(orbit, ref):
    assert orbit.period == pytest.approx(ref["T"], abs=2e-5)
    assert orbit.anchor[0] == pytest.approx(ref["anchor"][0], abs=2e-4)
    assert orbit.anchor[1] == pytest.approx(ref["anchor"][1], abs=2e-4)
    assert orbit.lam_u == pytest.approx(ref["lam_u"], rel=1e-3)


def test_frozen_family_values(physical_model, du_saddle, du_upo_007):
    _check_against_frozen(du_upo_007, FAMILY[-0.07])
    for h in (-0.147, 0.2):
        orbit = upo_at_energy(physical_model, du_saddle, h)
        _check_against_frozen(orbit, FAMILY[h])


def test_orbit_closure(physical_model, du_upo_007):
    end = flow(physical_model, du_upo_007.anchor, du_upo_007.period)
    assert np.max(np.abs(end - du_upo_007.anchor)) < 1e-9


def test_orbit_energy(physical_model, du_upo_007):
    assert physical_model.hamiltonian(du_upo_007.anchor) == pytest.approx(
        -0.07, abs=1e-10)
    assert du_upo_007.energy == pytest.approx(-0.07, abs=1e-10)


def test_reverser_symmetry(physical_model, du_upo_007):
    """Anchor and half-period point both sit on Fix(R): zero velocity."""
    R = physical_model.reversal_matrix
    a = du_upo_007.anchor
    assert np.max(np.abs(R @ a - a)) < 1e-9
    half = flow(physical_model, a, 0.5 * du_upo_007.period)
    assert np.max(np.abs(R @ half - half)) < 1e-8


def test_floquet_structure(physical_model, du_upo_007):
    m = du_upo_007.multipliers
    lam_u, t1, t2, lam_s = m
    assert lam_u.imag == 0.0 and lam_u.real > 1.0
    assert abs(t1 - 1.0) < 1e-4 and abs(t2 - 1.0) < 1e-4
    assert abs(lam_u * lam_s - 1.0) < 1e-6


def test_monodromy_determinant(physical_model, du_upo_007):
    M, _ = compute_floquet(physical_model, du_upo_007)
    assert abs(np.linalg.det(M) - 1.0) < 1e-6


def test_floquet_directions(physical_model, du_upo_007):
    M, _ = compute_floquet(physical_model, du_upo_007)
    u = du_upo_007.unstable_dir
    s = du_upo_007.stable_dir
    lam_u = du_upo_007.lam_u
    assert np.max(np.abs(M @ u - lam_u * u)) / lam_u < 1e-6
    assert np.max(np.abs(M @ s - (1.0 / lam_u) * s)) < 1e-4


def test_sample_orbit(physical_model, du_upo_007):
    times, states = sample_orbit(physical_model, du_upo_007, 64)
    assert len(times) == 64 and states.shape == (64, 4)
    assert np.allclose(states[0], du_upo_007.anchor)
    h = np.array([physical_model.hamiltonian(s) for s in states])
    assert np.max(np.abs(h + 0.07)) < 1e-10


def test_shifted_lift(physical_model, du_upo_007):
    shift = np.array([0.0, 2 * np.pi, 0.0, 0.0])
    lifted = du_upo_007.shifted(shift)
    assert lifted.period == du_upo_007.period
    assert lifted.energy == du_upo_007.energy
    assert np.allclose(lifted.anchor, du_upo_007.anchor + shift)
    end = flow(physical_model, lifted.anchor, lifted.period)
    assert np.max(np.abs(end - lifted.anchor)) < 1e-9


def test_continue_family_monotone(physical_model, du_saddle):
    energies = [-0.16, -0.12, -0.08]
    fam = continue_family(physical_model, du_saddle, energies)
    assert len(fam) == 3
    assert [o.energy for o in fam] == pytest.approx(energies, abs=1e-10)
    periods = [o.period for o in fam]
    assert periods == sorted(periods)


def test_energy_below_saddle_raises(physical_model, du_saddle):
    with pytest.raises(EnergyBelowSaddle):
        upo_at_energy(physical_model, du_saddle, -0.3)


def test_pcr3bp_lyapunov_orbit(tbp_model):
    from saddletubes.equilibria import equilibrium_by_label
    l1 = equilibrium_by_label(tbp_model, "L1")
    orbit = upo_at_energy(tbp_model, l1, -1.515)
    assert orbit.period == pytest.approx(3.082119, abs=2e-5)
    assert orbit.lam_u == pytest.approx(1391.78, rel=2e-3)
    end = flow(tbp_model, orbit.anchor, orbit.period)
    assert np.max(np.abs(end - orbit.anchor)) < 1e-9
