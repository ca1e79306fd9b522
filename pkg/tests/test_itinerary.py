"""Connection graph, walk enumeration, and shadowing orbits."""

import numpy as np
import pytest

from saddletubes.errors import SaddleTubesError, WrapsTooSmall
from saddletubes.integrate import IntegratorConfig
from saddletubes.itinerary import (ShadowSpec, Walk, build_graph,
                                   construct_shadow_orbit, enumerate_walks,
                                   verify_shadow_periodicity)

CFG = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-12)


class TestGraph:
    def test_single_vertex_four_loops(self, hom_graph_007):
        g = hom_graph_007
        assert len(g.vertices) == 1
        assert len(g.edges) == 4
        for e in g.edges:
            assert e.source == 0 and e.target == 0

    def test_lifted_targets_identified(self, hom_graph_007):
        # every homoclinic points at a 2*pi-lifted copy of its source;
        # the graph must recognize both as one vertex
        conn = hom_graph_007.edges[0].connection
        assert conn.source_upo is not conn.target_upo
        assert len(hom_graph_007.vertices) == 1

    def test_out_edges(self, hom_graph_007):
        assert len(hom_graph_007.out_edges(0)) == 4

    def test_energy_recorded(self, hom_graph_007):
        assert hom_graph_007.energy == pytest.approx(-0.07, abs=1e-10)

    def test_empty_graph_rejected(self):
        with pytest.raises(SaddleTubesError):
            build_graph([], [])


class TestWalks:
    def test_counts_on_loop_graph(self, hom_graph_007):
        # 4 loops on one vertex: 4^k walks of length k, all closed
        for k in (1, 2, 3):
            walks = enumerate_walks(hom_graph_007, k)
            assert len(walks) == 4 ** k
            assert all(w.closed for w in walks)

    def test_closed_only_filter(self, hom_graph_007):
        open_and_closed = enumerate_walks(hom_graph_007, 2)
        closed = enumerate_walks(hom_graph_007, 2, closed_only=True)
        assert len(closed) == len(open_and_closed) == 16

    def test_start_vertex(self, hom_graph_007):
        walks = enumerate_walks(hom_graph_007, 1, start_vertex=0)
        assert len(walks) == 4
        assert all(w.vertices[0] == 0 for w in walks)

    def test_vertex_sequences(self, hom_graph_007):
        for w in enumerate_walks(hom_graph_007, 2):
            assert len(w.edges) == 2
            assert len(w.vertices) == 3


def _periodic_spec(graph, edge, wraps):
    walk = Walk(edges=(edge,), vertices=(0, 0), closed=True)
    return ShadowSpec(graph=graph, walk=walk, wraps=(wraps,),
                      kind="periodic")


class TestPeriodicShadow:
    def test_converges(self, physical_model, hom_graph_007):
        g = hom_graph_007
        edge = next(i for i, e in enumerate(g.edges) if e.connection.symmetric)
        shadow = construct_shadow_orbit(physical_model,
                                        _periodic_spec(g, edge, 4), cfg=CFG)
        assert shadow.residual < 1e-8
        assert shadow.closure_residual < 1e-8

    def test_rotation_offset_one_turn_second_arm(self, physical_model,
                                                 hom_graph_007):
        g = hom_graph_007
        edge = next(i for i, e in enumerate(g.edges) if e.connection.symmetric)
        shadow = construct_shadow_orbit(physical_model,
                                        _periodic_spec(g, edge, 3), cfg=CFG)
        assert np.allclose(shadow.rotation_offset,
                           [0.0, 2 * np.pi, 0.0, 0.0], atol=1e-12)

    def test_periodicity_verified_segmentwise(self, physical_model,
                                              hom_graph_007):
        g = hom_graph_007
        edge = next(i for i, e in enumerate(g.edges) if e.connection.symmetric)
        shadow = construct_shadow_orbit(physical_model,
                                        _periodic_spec(g, edge, 4), cfg=CFG)
        worst = verify_shadow_periodicity(physical_model, shadow, cfg=CFG)
        assert worst < 1e-6

    def test_dwell_monotone_in_wraps(self, physical_model, hom_graph_007):
        g = hom_graph_007
        edge = next(i for i, e in enumerate(g.edges) if e.connection.symmetric)
        counts = []
        for wraps in (2, 4, 6):
            sh = construct_shadow_orbit(physical_model,
                                        _periodic_spec(g, edge, wraps),
                                        cfg=CFG)
            counts.append(sh.dwell_counts[0])
        assert counts[0] < counts[1] < counts[2]
        assert counts[1] - counts[0] == 2 and counts[2] - counts[1] == 2

    def test_total_time_grows_by_whole_periods(self, physical_model,
                                               hom_graph_007):
        g = hom_graph_007
        edge = next(i for i, e in enumerate(g.edges) if e.connection.symmetric)
        t2 = construct_shadow_orbit(physical_model,
                                    _periodic_spec(g, edge, 2),
                                    cfg=CFG).total_time
        t4 = construct_shadow_orbit(physical_model,
                                    _periodic_spec(g, edge, 4),
                                    cfg=CFG).total_time
        period = g.vertices[0].period
        assert (t4 - t2) == pytest.approx(2 * period, abs=1e-6)


class TestConnectingShadow:
    def test_doubly_homoclinic(self, physical_model, hom_graph_007):
        g = hom_graph_007
        edge = next(i for i, e in enumerate(g.edges) if e.connection.symmetric)
        walk = Walk(edges=(edge, edge), vertices=(0, 0, 0), closed=False)
        spec = ShadowSpec(graph=g, walk=walk, wraps=(4,), kind="connecting")
        shadow = construct_shadow_orbit(physical_model, spec, cfg=CFG)
        assert shadow.residual < 1e-8
        assert shadow.boundary_phases is not None
        # second arm rotates twice: once per homoclinic excursion
        assert shadow.rotation_offset[1] == pytest.approx(4 * np.pi,
                                                          abs=1e-9)

    def test_mixed_edges(self, physical_model, hom_graph_007):
        g = hom_graph_007
        sym = [i for i, e in enumerate(g.edges) if e.connection.symmetric]
        walk = Walk(edges=(sym[0], sym[1]), vertices=(0, 0, 0), closed=False)
        spec = ShadowSpec(graph=g, walk=walk, wraps=(3,), kind="connecting")
        shadow = construct_shadow_orbit(physical_model, spec, cfg=CFG)
        assert shadow.residual < 1e-8


class TestSpecValidation:
    def test_wraps_too_small(self, physical_model, hom_graph_007):
        g = hom_graph_007
        with pytest.raises(WrapsTooSmall):
            spec = _periodic_spec(g, 0, 0)
            construct_shadow_orbit(physical_model, spec, cfg=CFG)

    def test_wrap_count_arity(self, physical_model, hom_graph_007):
        g = hom_graph_007
        walk = Walk(edges=(0,), vertices=(0, 0), closed=True)
        spec = ShadowSpec(graph=g, walk=walk, wraps=(2, 2), kind="periodic")
        with pytest.raises(SaddleTubesError):
            construct_shadow_orbit(physical_model, spec, cfg=CFG)
