"""Poincaré sections as level sets of linear functions of the state.

Three public section kinds cover everything the transport pipeline
needs:

``angle_level``
    theta1 = 2*pi*k or theta2 = 2*pi*k in the unwrapped angle (the value
    must be an exact multiple of 2*pi).  Plane coordinates are the
    *other* arm's (angle, rate) pair.
``diagonal``
    theta1 = theta2; plane coordinates (theta1, omega1).
``pcr3bp_y0``
    y = 0 restricted to the x < 0 half-plane; plane coordinates (x, vx).

All section functions g are linear in the state, so the gradient is a
constant 4-vector and g along a trajectory is as smooth as the dense
interpolant.  A ``crossing_direction`` of +1/-1 selects crossings with
dg/dt of that sign (in real, not integration, time); None accepts both.
"""

import math

import numpy as np

__all__ = ["SectionSpec", "PlaneSection", "TWO_PI"]

TWO_PI = 2.0 * math.pi


def _parse_direction(direction):
    if direction in (None, "any", 0):
        return None
    d = int(direction)
    if d not in (-1, 1):
        raise ValueError("crossing_direction must be +1, -1, or None/'any'")
    return d


class SectionSpec:
    """A Poincaré section with an optional crossing-direction filter.

    Build with the classmethods :meth:`angle`, :meth:`diagonal`,
    :meth:`pcr3bp_y0`, or from a config dict via :meth:`from_config`.
    """

    def __init__(self, kind, which=None, value=0.0, crossing_direction=None):
        if kind not in ("angle_level", "diagonal", "pcr3bp_y0"):
            raise ValueError("unknown section kind %r" % (kind,))
        self.kind = kind
        self.value = float(value)
        self.crossing_direction = _parse_direction(crossing_direction)
        if kind == "angle_level":
            if which not in (0, 1):
                raise ValueError("angle_level section needs which in {0, 1}")
            k = self.value / TWO_PI
            if abs(k - round(k)) > 1e-9:
                raise ValueError(
                    "angle_level value must be a multiple of 2*pi, got %r" % value
                )
            self.which = int(which)
            grad = np.zeros(4)
            grad[self.which] = 1.0
            self._grad = grad
            other = 1 - self.which
            self._plane_idx = (other, other + 2)
        elif kind == "diagonal":
            self.which = None
            self._grad = np.array([1.0, -1.0, 0.0, 0.0])
            self._plane_idx = (0, 2)
        else:  # pcr3bp_y0
            self.which = None
            self.value = 0.0
            self._grad = np.array([0.0, 1.0, 0.0, 0.0])
            self._plane_idx = (0, 2)

    # -- section geometry --------------------------------------------

    def g(self, s):
        """Signed section function; the section is {g = 0}."""
        if self.kind == "angle_level":
            return s[self.which] - self.value
        if self.kind == "diagonal":
            return s[0] - s[1]
        return s[1]

    @property
    def grad(self):
        """Constant gradient dg/ds (4-vector)."""
        return self._grad

    def g_dot(self, model, s):
        """dg/dt along the flow at state s (real time)."""
        return float(self._grad @ model.vector_field(s))

    def admissible(self, s):
        """Extra membership constraint beyond g = 0 (half-plane cuts)."""
        if self.kind == "pcr3bp_y0":
            return s[0] < 0.0
        return True

    @property
    def plane_indices(self):
        """State indices of the 2-d section-plane coordinates."""
        return self._plane_idx

    def plane_coords(self, s):
        i, j = self._plane_idx
        s = np.asarray(s, dtype=float)
        if s.ndim == 1:
            return np.array([s[i], s[j]])
        return np.column_stack([s[..., i], s[..., j]])

    @property
    def plane_labels(self):
        names = ("q1", "q2", "v1", "v2")
        i, j = self._plane_idx
        return (names[i], names[j])

    def symmetry_coord(self, s):
        """Scalar whose vanishing marks a reverser-symmetric crossing.

        For angle sections the cut picture is mirror-symmetric about the
        other arm's zero angle; for the diagonal and the PCR3BP section
        a symmetric crossing needs the respective velocity to vanish.
        """
        if self.kind == "angle_level":
            return float(s[1 - self.which])
        if self.kind == "diagonal":
            return float(math.hypot(s[2], s[3]))
        return float(s[2])

    # -- construction ------------------------------------------------

    @classmethod
    def angle(cls, which, value, crossing_direction=None):
        return cls("angle_level", which=which, value=value,
                   crossing_direction=crossing_direction)

    @classmethod
    def diagonal(cls, crossing_direction=None):
        return cls("diagonal", crossing_direction=crossing_direction)

    @classmethod
    def pcr3bp_y0(cls, crossing_direction=None):
        return cls("pcr3bp_y0", crossing_direction=crossing_direction)

    @classmethod
    def from_config(cls, cfg):
        """Build from a dict like {"kind": "angle_level", "which": 1,
        "turns": 1, "crossing_direction": 1} (turns = value / 2*pi)."""
        kind = cfg.get("kind", "angle_level")
        direction = cfg.get("crossing_direction")
        if kind == "angle_level":
            value = cfg["value"] if "value" in cfg else TWO_PI * cfg.get("turns", 1)
            return cls.angle(cfg.get("which", 1), value, direction)
        if kind == "diagonal":
            return cls.diagonal(direction)
        if kind == "pcr3bp_y0":
            return cls.pcr3bp_y0(direction)
        raise ValueError("unknown section kind %r" % (kind,))

    def with_direction(self, crossing_direction):
        return SectionSpec(self.kind, which=self.which, value=self.value,
                           crossing_direction=crossing_direction)

    def shifted(self, dvalue):
        """Same section family with the level moved by ``dvalue`` (angle kind)."""
        if self.kind != "angle_level":
            raise ValueError("only angle_level sections can be shifted")
        return SectionSpec("angle_level", which=self.which,
                           value=self.value + dvalue,
                           crossing_direction=self.crossing_direction)

    def describe(self):
        if self.kind == "angle_level":
            base = "q%d = %g*pi" % (self.which + 1, self.value / math.pi)
        elif self.kind == "diagonal":
            base = "q1 = q2"
        else:
            base = "y = 0 (x < 0)"
        if self.crossing_direction is not None:
            base += ", dg/dt %s 0" % ("+>" if self.crossing_direction > 0 else "<")
        return base

    def __repr__(self):
        return "SectionSpec(%s)" % self.describe()


class PlaneSection:
    """Affine section <n, s - p0> = 0; used for local return maps near
    a periodic-orbit anchor (not part of the public section kinds)."""

    kind = "plane"
    value = 0.0

    def __init__(self, point, normal, crossing_direction=None):
        self.point = np.asarray(point, dtype=float)
        n = np.asarray(normal, dtype=float)
        self._grad = n / np.linalg.norm(n)
        self.crossing_direction = _parse_direction(crossing_direction)

    def g(self, s):
        return float(self._grad @ (np.asarray(s, dtype=float) - self.point))

    @property
    def grad(self):
        return self._grad

    def g_dot(self, model, s):
        return float(self._grad @ model.vector_field(s))

    def admissible(self, s):
        return True

    def __repr__(self):
        return "PlaneSection(point=%s)" % np.array2string(self.point, precision=4)
