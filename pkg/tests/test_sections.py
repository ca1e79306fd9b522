"""SectionSpec construction, geometry, and config parsing."""

import math

import numpy as np
import pytest

from saddletubes.sections import TWO_PI, SectionSpec


def test_angle_section_geometry():
    sec = SectionSpec.angle(1, TWO_PI)
    s = np.array([0.3, TWO_PI, -1.0, 2.0])
    assert sec.g(s) == pytest.approx(0.0, abs=1e-15)
    assert np.array_equal(sec.grad, [0.0, 1.0, 0.0, 0.0])
    # plane coordinates are the other arm's (angle, rate)
    assert np.array_equal(sec.plane_coords(s), [0.3, -1.0])
    assert sec.plane_labels == ("q1", "v1")
    assert sec.symmetry_coord(s) == pytest.approx(0.3)


def test_angle_section_which0():
    sec = SectionSpec.angle(0, 2 * TWO_PI)
    s = np.array([2 * TWO_PI, 0.7, 3.0, -4.0])
    assert sec.g(s) == pytest.approx(0.0, abs=1e-15)
    assert np.array_equal(sec.plane_coords(s), [0.7, -4.0])
    assert sec.plane_labels == ("q2", "v2")


def test_angle_value_must_be_whole_turns():
    with pytest.raises(ValueError):
        SectionSpec.angle(1, 1.0)
    with pytest.raises(ValueError):
        SectionSpec.angle(2, TWO_PI)


def test_plane_coords_batch():
    sec = SectionSpec.angle(1, 0.0)
    pts = np.arange(8.0).reshape(2, 4)
    out = sec.plane_coords(pts)
    assert out.shape == (2, 2)
    assert np.array_equal(out, [[0.0, 2.0], [4.0, 6.0]])


def test_diagonal_section():
    sec = SectionSpec.diagonal()
    s = np.array([1.2, 1.2, 0.5, -0.5])
    assert sec.g(s) == pytest.approx(0.0, abs=1e-15)
    assert sec.g(np.array([1.0, 0.0, 0.0, 0.0])) == pytest.approx(1.0)
    assert np.array_equal(sec.plane_coords(s), [1.2, 0.5])


def test_pcr3bp_section_half_plane():
    sec = SectionSpec.pcr3bp_y0()
    inside = np.array([-0.5, 0.0, 0.1, 0.2])
    outside = np.array([0.5, 0.0, 0.1, 0.2])
    assert sec.admissible(inside) and not sec.admissible(outside)
    assert sec.g(inside) == 0.0


def test_g_dot_matches_gradient(physical_model):
    sec = SectionSpec.diagonal()
    s = np.array([0.4, -0.3, 1.1, -0.7])
    f = physical_model.vector_field(s)
    assert sec.g_dot(physical_model, s) == pytest.approx(f[0] - f[1])


def test_crossing_direction_parse():
    assert SectionSpec.angle(1, 0.0).crossing_direction is None
    assert SectionSpec.angle(1, 0.0, "any").crossing_direction is None
    assert SectionSpec.angle(1, 0.0, -1).crossing_direction == -1
    with pytest.raises(ValueError):
        SectionSpec.angle(1, 0.0, 2)


def test_from_config_turns_and_value():
    a = SectionSpec.from_config({"kind": "angle_level", "which": 1,
                                 "turns": 2})
    assert a.value == pytest.approx(2 * TWO_PI)
    b = SectionSpec.from_config({"kind": "angle_level", "which": 0,
                                 "value": TWO_PI, "crossing_direction": 1})
    assert b.which == 0 and b.crossing_direction == +1
    c = SectionSpec.from_config({"kind": "diagonal"})
    assert c.kind == "diagonal"
    with pytest.raises(ValueError):
        SectionSpec.from_config({"kind": "banana"})


def test_with_direction_and_shifted():
    sec = SectionSpec.angle(1, TWO_PI, crossing_direction=+1)
    up = sec.shifted(TWO_PI)
    assert up.value == pytest.approx(2 * TWO_PI)
    assert up.crossing_direction == +1
    both = sec.with_direction(None)
    assert both.crossing_direction is None
    with pytest.raises(ValueError):
        SectionSpec.diagonal().shifted(1.0)


def test_describe_mentions_level():
    assert "q2" in SectionSpec.angle(1, TWO_PI).describe()
    assert "q1 = q2" in SectionSpec.diagonal().describe()
