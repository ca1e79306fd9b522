"""Equilibrium enumeration, classification, and Lagrange points."""

import math

import numpy as np
import pytest

from saddletubes.equilibria import (CENTER, INDEX1, INDEX2,
                                    classify_equilibrium,
                                    enumerate_equilibria,
                                    equilibrium_by_label,
                                    solve_lagrange_quintic)
from saddletubes.models import PCR3BP, PointMassPendulum

MU = 9.537e-4


def test_physical_pendulum_table(physical_model):
    eqs = enumerate_equilibria(physical_model)
    table = {e.label: e for e in eqs}
    assert set(table) == {"DownDown", "DownUp", "UpDown", "UpUp"}
    assert table["DownDown"].classification == CENTER
    assert table["DownUp"].classification == INDEX1
    assert table["UpDown"].classification == INDEX1
    assert table["UpUp"].classification == INDEX2
    # energies are symmetric about zero for this potential
    assert table["DownDown"].energy == pytest.approx(-0.49061459904, abs=1e-9)
    assert table["DownUp"].energy == pytest.approx(-0.17535317, abs=1e-6)
    assert table["UpDown"].energy == pytest.approx(-table["DownUp"].energy,
                                                   abs=1e-12)
    assert table["UpUp"].energy == pytest.approx(-table["DownDown"].energy,
                                                 abs=1e-12)


def test_enumeration_sorted_by_energy(physical_model):
    eqs = enumerate_equilibria(physical_model)
    energies = [e.energy for e in eqs]
    assert energies == sorted(energies)


def test_downdown_center_frequencies(physical_model):
    eq = equilibrium_by_label(physical_model, "DownDown")
    omegas = sorted(abs(ev.imag) for ev in eq.eigenvalues)[::2]
    assert omegas[0] == pytest.approx(6.14536607300796, rel=1e-10)
    assert omegas[1] == pytest.approx(22.29780084387368, rel=1e-10)


def test_downup_saddle_frame(physical_model):
    eq = equilibrium_by_label(physical_model, "DownUp")
    fr = eq.saddle_frame
    assert fr is not None
    assert fr.lam == pytest.approx(13.140319, abs=1e-5)
    assert fr.omega == pytest.approx(10.428069, abs=1e-5)
    # frame vectors are genuine eigenvectors of the linearization
    J = physical_model.jacobian(eq.state)
    assert np.max(np.abs(J @ fr.unstable - fr.lam * fr.unstable)) < 1e-8
    assert np.max(np.abs(J @ fr.stable + fr.lam * fr.stable)) < 1e-8


def test_vector_field_vanishes_at_equilibria(physical_model):
    for eq in enumerate_equilibria(physical_model):
        assert np.max(np.abs(physical_model.vector_field(eq.state))) < 1e-10


def test_equilibrium_by_label_unknown(physical_model):
    with pytest.raises(Exception):
        equilibrium_by_label(physical_model, "SideWays")


def test_classify_matches_enumeration(physical_model):
    eq = equilibrium_by_label(physical_model, "UpUp")
    assert classify_equilibrium(physical_model, eq.state) == INDEX2


def test_point_mass_pattern():
    model = PointMassPendulum()
    table = {e.label: e.classification for e in enumerate_equilibria(model)}
    assert table == {"DownDown": CENTER, "DownUp": INDEX1,
                     "UpDown": INDEX1, "UpUp": INDEX2}


class TestLagrangePoints:
    def test_quintic_residual(self):
        for branch in ("L1", "L2"):
            g = solve_lagrange_quintic(MU, branch)
            mu = MU
            if branch == "L1":
                c = [1.0, -(3 - mu), 3 - 2 * mu, -mu, 2 * mu, -mu]
            else:
                c = [1.0, 3 - mu, 3 - 2 * mu, -mu, -2 * mu, -mu]
            assert abs(np.polyval(c, g)) < 1e-14

    def test_collinear_point_positions(self, tbp_model):
        l1 = equilibrium_by_label(tbp_model, "L1")
        l2 = equilibrium_by_label(tbp_model, "L2")
        # agreement with independently published positions for this mu
        assert l1.state[0] == pytest.approx(0.9323697416413048, abs=2e-7)
        assert l2.state[0] == pytest.approx(1.0688264827482197, abs=2e-7)
        assert l1.state[1] == 0.0 and l2.state[1] == 0.0

    def test_l_points_are_index1(self, tbp_model):
        for label in ("L1", "L2"):
            eq = equilibrium_by_label(tbp_model, label)
            assert eq.classification == INDEX1
            assert eq.saddle_frame.lam > 0.0

    def test_force_balance(self, tbp_model):
        for label in ("L1", "L2"):
            eq = equilibrium_by_label(tbp_model, label)
            assert np.max(np.abs(tbp_model.vector_field(eq.state))) < 1e-12

    def test_quintic_rejects_bad_input(self):
        with pytest.raises(ValueError):
            solve_lagrange_quintic(0.0, "L1")
        with pytest.raises(ValueError):
            solve_lagrange_quintic(MU, "L3")


def test_l1_below_l2_energy(tbp_model):
    l1 = equilibrium_by_label(tbp_model, "L1")
    l2 = equilibrium_by_label(tbp_model, "L2")
    assert l1.energy < l2.energy
