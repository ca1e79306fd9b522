"""Tube seeding, globalization to section cuts, and plane geometry."""

import math

import numpy as np
import pytest

from saddletubes.errors import SaddleTubesError
from saddletubes.integrate import IntegratorConfig
from saddletubes.manifolds import (STABLE, UNSTABLE, globalize_tube,
                                   interior_iterate, polygon_contains,
                                   polyline_distance,
                                   section_state_at_energy, seed_tube)
from saddletubes.sections import SectionSpec

TWO_PI = 2.0 * math.pi

# coarse settings: structural checks only, accuracy is covered elsewhere
COARSE = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-8)


@pytest.fixture(scope="module")
def coarse_cut(physical_model, du_upo_007):
    branch = seed_tube(physical_model, du_upo_007, UNSTABLE, sign=+1,
                       eps=1e-5, n_seeds=48, cfg=COARSE)
    section = SectionSpec.angle(1, TWO_PI)
    cut = globalize_tube(physical_model, branch, section,
                         crossing_direction=+1, cfg=COARSE)
    return branch, section, cut


def test_seed_tube_basics(physical_model, du_upo_007):
    br = seed_tube(physical_model, du_upo_007, UNSTABLE, sign=+1, eps=1e-6,
                   n_seeds=32, cfg=COARSE)
    assert br.n_seeds == 32
    assert br.seeds.shape == (32, 4)
    assert br.stability == UNSTABLE and br.sign == +1
    dt = np.diff(br.seed_times)
    assert np.all(dt > 0) and br.seed_times[0] >= 0.0
    assert br.seed_times[-1] < du_upo_007.period
    # Floquet directions are tangent to the energy shell, so the seeds
    # sit on it to second order in eps
    h = np.array([physical_model.hamiltonian(s) for s in br.seeds])
    assert np.max(np.abs(h - du_upo_007.energy)) < 1e-8


def test_seed_sign_gives_opposite_sides(physical_model, du_upo_007):
    bp = seed_tube(physical_model, du_upo_007, UNSTABLE, +1, 1e-6, 8,
                   cfg=COARSE)
    bm = seed_tube(physical_model, du_upo_007, UNSTABLE, -1, 1e-6, 8,
                   cfg=COARSE)
    mid = 0.5 * (bp.seeds + bm.seeds)
    # opposite displacements cancel at matching phases
    d = bp.seeds - bm.seeds
    assert np.max(np.abs(d)) > 1e-7
    assert np.max(np.abs(physical_model.hamiltonian(mid[0])
                         - du_upo_007.energy)) < 1e-8


def test_globalized_cut_structure(physical_model, coarse_cut):
    branch, section, cut = coarse_cut
    assert cut.incomplete_count == 0
    assert cut.closed
    assert cut.coords.shape == (48, 2)
    assert cut.full_states.shape == (48, 4)
    assert np.all(cut.flight_times > 0)
    assert np.array_equal(cut.phases, branch.seed_times)
    g = np.max(np.abs([section.g(s) for s in cut.full_states]))
    assert g <= 1e-10
    h = np.array([physical_model.hamiltonian(s) for s in cut.full_states])
    assert np.max(np.abs(h - cut.energy)) < 1e-7


def test_globalize_with_map_hook(physical_model, du_upo_007, coarse_cut):
    """An ordered map (e.g. a thread pool's) must reproduce builtin map."""
    branch, section, cut = coarse_cut
    calls = []

    def tracing_map(fn, it):
        out = [fn(x) for x in it]
        calls.append(len(out))
        return out

    cut2 = globalize_tube(physical_model, branch, section,
                          crossing_direction=+1, cfg=COARSE,
                          map_fn=tracing_map)
    assert calls == [48]
    assert np.array_equal(cut2.coords, cut.coords)


def test_interior_iterate_advances_section(physical_model, coarse_cut):
    _, section, cut = coarse_cut
    inner = np.median(cut.full_states, axis=0)
    state = section_state_at_energy(
        physical_model, section, section.plane_coords(inner), cut.energy,
        branch=+1, near=inner[3])
    cuts = interior_iterate(physical_model, [state], section, 2, tdir=+1,
                            cfg=COARSE)
    assert len(cuts) == 2
    assert cuts[0].section.value == pytest.approx(2 * TWO_PI)
    assert cuts[1].section.value == pytest.approx(3 * TWO_PI)
    for c in cuts:
        assert list(c.phases) == [0]
        h = physical_model.hamiltonian(c.full_states[0])
        assert h == pytest.approx(cut.energy, abs=1e-7)


def test_interior_iterate_rejects_off_section_points(physical_model):
    section = SectionSpec.angle(1, TWO_PI)
    bad = np.array([0.1, 1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        interior_iterate(physical_model, [bad], section, 1)


class TestPlaneGeometry:
    SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])

    def test_polygon_contains(self):
        pts = np.array([[0.5, 0.5], [2.0, 0.5], [-0.1, -0.1], [0.25, 0.99]])
        inside = polygon_contains(self.SQUARE, pts)
        assert inside.tolist() == [True, False, False, True]

    def test_polygon_boundary_counts_inside(self):
        pts = np.array([[0.0, 0.5], [1.0, 1.0], [0.5, 0.0]])
        assert polygon_contains(self.SQUARE, pts).all()

    def test_polygon_nonconvex(self):
        # a C-shape: the notch is outside
        poly = np.array([[0, 0], [4, 0], [4, 4], [0, 4], [0, 3],
                         [3, 3], [3, 1], [0, 1]], dtype=float)
        pts = np.array([[1.0, 2.0], [3.5, 2.0], [1.0, 0.5]])
        assert polygon_contains(poly, pts).tolist() == [False, True, True]

    def test_polyline_distance(self):
        line = np.array([[0.0, 0.0], [1.0, 0.0]])
        pts = np.array([[0.5, 0.25], [2.0, 0.0], [-1.0, 0.0]])
        d = polyline_distance(line, pts)
        assert d == pytest.approx([0.25, 1.0, 1.0])

    def test_polyline_distance_closed(self):
        d_open = polyline_distance(self.SQUARE, np.array([[0.0, 0.5]]),
                                   closed=False)
        d_closed = polyline_distance(self.SQUARE, np.array([[0.0, 0.5]]),
                                     closed=True)
        assert d_closed[0] == pytest.approx(0.0, abs=1e-15)
        assert d_open[0] > 0.0


class TestSectionStateAtEnergy:
    def test_lift_hits_energy(self, physical_model):
        section = SectionSpec.angle(1, TWO_PI)
        st = section_state_at_energy(physical_model, section, (0.3, -2.0),
                                     -0.07)
        assert section.g(st) == pytest.approx(0.0, abs=1e-12)
        assert physical_model.hamiltonian(st) == pytest.approx(-0.07,
                                                               abs=1e-12)
        assert st[0] == 0.3 and st[2] == -2.0
        assert st[3] > 0.0

    def test_branch_selection(self, physical_model):
        section = SectionSpec.angle(1, TWO_PI)
        lo = section_state_at_energy(physical_model, section, (0.3, -2.0),
                                     -0.07, branch=-1)
        assert lo[3] < 0.0

    def test_inaccessible_energy_raises(self, physical_model):
        section = SectionSpec.angle(1, TWO_PI)
        with pytest.raises(SaddleTubesError):
            section_state_at_energy(physical_model, section, (0.0, 0.0),
                                    -10.0)
