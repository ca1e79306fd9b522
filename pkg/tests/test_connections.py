"""Cut intersection, connection refinement, and the reverser image.

The expensive end-to-end searches live in session fixtures (homs_007,
hets_02) shared with the acceptance suite; tests here assert their
structure and exercise the geometric kernel on synthetic cuts.
"""

import math

import numpy as np
import pytest

from saddletubes.connections import (ConnectionOrbit, intersect_cuts,
                                     reverse_connection)
from saddletubes.errors import SaddleTubesError
from saddletubes.manifolds import SectionCut
from saddletubes.sections import TWO_PI, SectionSpec


def _circle_cut(section, center, radius, n=256, energy=-0.07):
    phases = np.linspace(0.0, 1.0, n, endpoint=False)
    ang = TWO_PI * phases
    coords = np.column_stack([center[0] + radius * np.cos(ang),
                              center[1] + radius * np.sin(ang)])
    states = np.zeros((n, 4))
    return SectionCut(section=section, coords=coords, full_states=states,
                      flight_times=np.ones(n), phases=phases, energy=energy,
                      closed=True, incomplete_count=0, branch=None,
                      crossing_direction=+1, skip_count=0)


class TestIntersectCuts:
    SEC = SectionSpec.angle(1, TWO_PI)

    def test_two_circles_cross_twice(self):
        a = _circle_cut(self.SEC, (0.0, 0.0), 1.0)
        b = _circle_cut(self.SEC, (1.0, 0.0), 1.0)
        cands = intersect_cuts(a, b)
        assert len(cands) == 2
        pts = sorted((round(c.point[0], 6), round(c.point[1], 6))
                     for c in cands)
        # exact intersection of the circles: x = 0.5, y = +-sqrt(3)/2
        for (x, y), y_ref in zip(pts, (-math.sqrt(3) / 2, math.sqrt(3) / 2)):
            assert x == pytest.approx(0.5, abs=1e-3)
            assert y == pytest.approx(y_ref, abs=1e-3)

    def test_disjoint_circles(self):
        a = _circle_cut(self.SEC, (0.0, 0.0), 1.0)
        b = _circle_cut(self.SEC, (5.0, 0.0), 1.0)
        assert intersect_cuts(a, b) == []

    def test_candidate_phases_interpolated(self):
        a = _circle_cut(self.SEC, (0.0, 0.0), 1.0)
        b = _circle_cut(self.SEC, (1.0, 0.0), 1.0)
        for cand in intersect_cuts(a, b):
            assert 0.0 <= cand.phase_u < 1.0
            assert 0.0 <= cand.phase_s < 1.0

    def test_section_mismatch_rejected(self):
        a = _circle_cut(self.SEC, (0.0, 0.0), 1.0)
        b = _circle_cut(SectionSpec.angle(1, 2 * TWO_PI), (1.0, 0.0), 1.0)
        with pytest.raises(SaddleTubesError):
            intersect_cuts(a, b)

    def test_energy_mismatch_rejected(self):
        a = _circle_cut(self.SEC, (0.0, 0.0), 1.0)
        b = _circle_cut(self.SEC, (1.0, 0.0), 1.0, energy=0.2)
        with pytest.raises(SaddleTubesError):
            intersect_cuts(a, b)

    def test_near_tangent_flagged(self):
        def line_cut(slope):
            x = np.linspace(0.0, 1.0, 32)
            coords = np.column_stack([x, slope * (x - 0.5)])
            return SectionCut(section=self.SEC, coords=coords,
                              full_states=np.zeros((32, 4)),
                              flight_times=np.ones(32), phases=x,
                              energy=-0.07, closed=False,
                              incomplete_count=0, branch=None,
                              crossing_direction=+1, skip_count=0)

        steep = intersect_cuts(line_cut(0.0), line_cut(0.5))
        assert len(steep) == 1 and not steep[0].low_confidence
        shallow = intersect_cuts(line_cut(0.0), line_cut(5e-4))
        assert len(shallow) == 1 and shallow[0].low_confidence


class TestHomoclinicsAtMinus007:
    """Structure of the four Down-Up homoclinics (shared fixture)."""

    def test_exactly_four(self, homs_007):
        assert len(homs_007) == 4

    def test_mismatch_gate(self, homs_007):
        for c in homs_007:
            assert c.mismatch < 1e-8

    def test_rotation_signature(self, homs_007):
        for c in homs_007:
            assert c.rotation_signature == (0, 1)
            assert c.kind == "homoclinic"

    def test_two_symmetric_one_mirror_pair(self, homs_007):
        sym = [c for c in homs_007 if c.symmetric]
        asym = [c for c in homs_007 if not c.symmetric]
        assert len(sym) == 2 and len(asym) == 2
        for c in sym:
            assert abs(c.point[0]) < 1e-6
        a, b = asym
        assert a.partner is b and b.partner is a
        assert a.point[0] == pytest.approx(-b.point[0], abs=1e-5)
        assert a.point[1] == pytest.approx(b.point[1], abs=1e-5)

    def test_phases_within_period(self, homs_007):
        for c in homs_007:
            assert 0.0 <= c.phase_u < c.source_upo.period
            assert 0.0 <= c.phase_s < c.target_upo.period
            assert c.flight_u > 0.0 and c.flight_s > 0.0

    def test_trajectory_spans_section(self, homs_007, physical_model):
        for c in homs_007:
            t = c.trajectory.times
            assert t[0] < 0.0 < t[-1]
            assert np.all(np.diff(t) > 0.0)
            h = np.array([physical_model.hamiltonian(s)
                          for s in c.trajectory.states])
            assert np.max(np.abs(h + 0.07)) < 1e-6

    def test_ordered_by_plane_point(self, homs_007):
        xs = [round(c.point[0], 9) for c in homs_007]
        assert xs == sorted(xs)


class TestHeteroclinicsAt02:
    def test_at_least_two(self, hets_02):
        assert len(hets_02) >= 2

    def test_endpoints(self, hets_02):
        for c in hets_02:
            assert c.kind == "heteroclinic"
            assert c.source_upo.saddle_label == "DownUp"
            assert c.target_upo.saddle_label == "UpDown"
            assert c.mismatch < 1e-8

    def test_diagonal_section(self, hets_02):
        for c in hets_02:
            assert c.section.kind == "diagonal"
            assert abs(c.state[0] - c.state[1]) < 1e-9

    def test_reverser_image(self, physical_model, hets_02):
        rev = reverse_connection(physical_model, hets_02[0])
        assert rev.source_upo.saddle_label == "UpDown"
        assert rev.target_upo.saddle_label == "DownUp"
        assert rev.mismatch < 1e-8
        R = physical_model.reversal_matrix
        assert np.allclose(rev.state, R @ hets_02[0].state, atol=1e-12)


def test_below_threshold_energy_has_no_heteroclinics(physical_model,
                                                     du_saddle, ud_saddle):
    # below the Up-Down saddle no Up-Down UPO exists at all
    from saddletubes.connections import heteroclinics_between_saddles
    out = heteroclinics_between_saddles(physical_model, du_saddle, ud_saddle,
                                        0.0)
    assert out == []
