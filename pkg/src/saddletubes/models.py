"""Dynamical systems: two double-pendulum variants and the planar CR3BP.

Each model exposes the same small surface — vector field, Hamiltonian,
analytic Jacobian, configuration-space potential — over a 4-dimensional
phase space ``(q1, q2, v1, v2)``.  For the pendulums the coordinates are
``(theta1, theta2, omega1, omega2)``; for the PCR3BP they are the rotating
frame ``(x, y, vx, vy)``.

Angles are kept unwrapped everywhere: a trajectory whose second angle
climbs from ``pi`` to ``3*pi`` has completed one full rotation, and that
rotation count is meaningful to the connection-finding layers.

Both pendulum variants reduce to one coupled-pendulum core governed by
five constants::

    T = 1/2 I1 w1^2 + 1/2 I2 w2^2 + C cos(th1 - th2) w1 w2
    V = -G1 cos(th1) - G2 cos(th2)

with (I1, I2, C, G1, G2) computed from the physical parameters.  The
equations of motion and the analytic Jacobian are derived once from this
core, and each variant only supplies its coefficient map.
"""

import json
import math

import numpy as np

__all__ = [
    "REVERSER",
    "SystemModel",
    "PhysicalPendulum",
    "PointMassPendulum",
    "PCR3BP",
    "apply_reverser",
    "as_state",
    "hills_region_grid",
    "model_from_config",
    "PHYSICAL_DP_DEFAULTS",
    "POINT_MASS_DP_DEFAULTS",
    "PCR3BP_DEFAULTS",
]

# Reverser symmetry: keep configuration, negate rates.
REVERSER = np.diag([1.0, 1.0, -1.0, -1.0])

# Laboratory parameter set for the physical (distributed-mass) pendulum.
PHYSICAL_DP_DEFAULTS = {
    "m1": 0.0938,
    "m2": 0.1376,
    "a1": 0.1086,
    "a2": 0.1168,
    "l1": 0.1727,
    "J1": 1.0e-4,
    "J2": 1.0e-4,
    "g": 9.808,
}

POINT_MASS_DP_DEFAULTS = {"m1": 1.0, "m2": 1.0, "l1": 1.0, "l2": 1.0, "g": 9.81}

# Sun-Jupiter mass ratio.
PCR3BP_DEFAULTS = {"mu": 9.537e-4}


def as_state(s):
    """Coerce ``s`` to a float ndarray of shape (4,)."""
    a = np.asarray(s, dtype=float)
    if a.shape != (4,):
        raise ValueError("state must have exactly 4 components, got shape %s" % (a.shape,))
    return a


def apply_reverser(s):
    """Apply the reverser R: (q1, q2, v1, v2) -> (q1, q2, -v1, -v2).

    R is an involution.  For the pendulums it is a genuine time-reversal
    symmetry of the dynamics (F(Ru) = -R F(u)); the PCR3BP carries a
    different reversal (see :attr:`PCR3BP.reversal_matrix`).
    """
    s = as_state(s)
    return np.array([s[0], s[1], -s[2], -s[3]])


class SystemModel:
    """Base class for the built-in systems.

    Subclasses define ``kind``, the parameter set, and the four
    evaluation methods.  Instances are immutable after construction and
    safe to share across threads; every method is pure.

    Attributes
    ----------
    kind : str
        One of ``"physical_dp"``, ``"point_mass_dp"``, ``"pcr3bp"``.
    params : dict
        The physical parameters actually in use.
    reversal_matrix : ndarray, shape (4, 4)
        The linear involution S with F(Su) = -S F(u) for this system.
    fix_free, fix_zero : tuple of int
        Coordinate indices that are free on / vanish on Fix(S).  The
        symmetric-orbit machinery anchors periodic orbits on this set.
    angle_indices : tuple of int
        Coordinates that are angles (period 2*pi); empty for the PCR3BP.
    """

    kind = None
    angle_indices = ()

    def vector_field(self, s):
        raise NotImplementedError

    def hamiltonian(self, s):
        raise NotImplementedError

    def jacobian(self, s):
        raise NotImplementedError

    def potential(self, q1, q2):
        raise NotImplementedError

    def grad_hamiltonian(self, s):
        raise NotImplementedError

    # -- convenience -------------------------------------------------

    def energy(self, s):
        return self.hamiltonian(s)

    def reverse_state(self, s):
        """Apply this model's own reversal symmetry to a state."""
        return self.reversal_matrix @ as_state(s)

    def __repr__(self):
        ps = ", ".join("%s=%g" % kv for kv in self.params.items())
        return "%s(%s)" % (type(self).__name__, ps)


def _finite_or_raise(name, value):
    if not math.isfinite(value):
        raise ValueError("non-finite vector-field component %s = %r" % (name, value))
    return value


class _CoupledPendulum(SystemModel):
    """Shared dynamics core for both double-pendulum variants.

    Subclasses populate (I1, I2, C, G1, G2) from their parameters.  The
    equations of motion follow from the Lagrangian of the class
    docstring of this module:

        ddth1 = N1 / D,   ddth2 = N2 / D,
        D  = I1 I2 - C^2 cos^2(dth)
        N1 = -I2 C sin(dth) w2^2 - I2 G1 sin(th1)
             - C^2 sin(dth) cos(dth) w1^2 + C G2 cos(dth) sin(th2)
        N2 =  I1 C sin(dth) w1^2 - I1 G2 sin(th2)
             + C^2 sin(dth) cos(dth) w2^2 + C G1 cos(dth) sin(th1)

    with dth = th1 - th2.  D >= I1 I2 - C^2 > 0 for all physically valid
    parameters; this is asserted over a sampled grid at construction.
    """

    reversal_matrix = REVERSER
    fix_free = (0, 1)   # (theta1, theta2) parameterize Fix(R)
    fix_zero = (2, 3)   # omega1 = omega2 = 0 on Fix(R)
    angle_indices = (0, 1)

    def _init_core(self, I1, I2, C, G1, G2):
        self._I1, self._I2, self._C = float(I1), float(I2), float(C)
        self._G1, self._G2 = float(G1), float(G2)
        dgrid = np.linspace(0.0, 2.0 * np.pi, 181)
        dmin = np.min(I1 * I2 - C * C * np.cos(dgrid) ** 2)
        if dmin <= 0.0:
            raise ValueError("degenerate mass matrix: min D = %g" % dmin)

    @property
    def coefficients(self):
        """The five dynamics constants (I1, I2, C, G1, G2)."""
        return (self._I1, self._I2, self._C, self._G1, self._G2)

    def vector_field(self, s):
        th1, th2, w1, w2 = float(s[0]), float(s[1]), float(s[2]), float(s[3])
        I1, I2, C, G1, G2 = self._I1, self._I2, self._C, self._G1, self._G2
        dth = th1 - th2
        sd, cd = math.sin(dth), math.cos(dth)
        s1, s2 = math.sin(th1), math.sin(th2)
        D = I1 * I2 - C * C * cd * cd
        N1 = -I2 * C * sd * w2 * w2 - I2 * G1 * s1 - C * C * sd * cd * w1 * w1 + C * G2 * cd * s2
        N2 = I1 * C * sd * w1 * w1 - I1 * G2 * s2 + C * C * sd * cd * w2 * w2 + C * G1 * cd * s1
        a1 = _finite_or_raise("ddtheta1", N1 / D)
        a2 = _finite_or_raise("ddtheta2", N2 / D)
        return np.array([w1, w2, a1, a2])

    def hamiltonian(self, s):
        th1, th2, w1, w2 = float(s[0]), float(s[1]), float(s[2]), float(s[3])
        I1, I2, C, G1, G2 = self._I1, self._I2, self._C, self._G1, self._G2
        T = 0.5 * I1 * w1 * w1 + 0.5 * I2 * w2 * w2 + C * math.cos(th1 - th2) * w1 * w2
        V = -G1 * math.cos(th1) - G2 * math.cos(th2)
        return T + V

    def potential(self, q1, q2):
        return -self._G1 * np.cos(q1) - self._G2 * np.cos(q2)

    def grad_hamiltonian(self, s):
        th1, th2, w1, w2 = float(s[0]), float(s[1]), float(s[2]), float(s[3])
        I1, I2, C, G1, G2 = self._I1, self._I2, self._C, self._G1, self._G2
        sd, cd = math.sin(th1 - th2), math.cos(th1 - th2)
        return np.array(
            [
                -C * sd * w1 * w2 + G1 * math.sin(th1),
                C * sd * w1 * w2 + G2 * math.sin(th2),
                I1 * w1 + C * cd * w2,
                I2 * w2 + C * cd * w1,
            ]
        )

    def jacobian(self, s):
        th1, th2, w1, w2 = float(s[0]), float(s[1]), float(s[2]), float(s[3])
        I1, I2, C, G1, G2 = self._I1, self._I2, self._C, self._G1, self._G2
        dth = th1 - th2
        sd, cd = math.sin(dth), math.cos(dth)
        c2d = math.cos(2.0 * dth)
        s1, c1 = math.sin(th1), math.cos(th1)
        s2, c2 = math.sin(th2), math.cos(th2)
        C2 = C * C

        D = I1 * I2 - C2 * cd * cd
        dD_d1 = 2.0 * C2 * cd * sd      # dD/dth1; dD/dth2 = -dD_d1
        N1 = -I2 * C * sd * w2 * w2 - I2 * G1 * s1 - C2 * sd * cd * w1 * w1 + C * G2 * cd * s2
        N2 = I1 * C * sd * w1 * w1 - I1 * G2 * s2 + C2 * sd * cd * w2 * w2 + C * G1 * cd * s1

        dN1_d1 = -I2 * C * cd * w2 * w2 - I2 * G1 * c1 - C2 * c2d * w1 * w1 - C * G2 * sd * s2
        dN1_d2 = I2 * C * cd * w2 * w2 + C2 * c2d * w1 * w1 + C * G2 * (sd * s2 + cd * c2)
        dN1_dw1 = -2.0 * C2 * sd * cd * w1
        dN1_dw2 = -2.0 * I2 * C * sd * w2

        dN2_d1 = I1 * C * cd * w1 * w1 + C2 * c2d * w2 * w2 + C * G1 * (cd * c1 - sd * s1)
        dN2_d2 = -I1 * C * cd * w1 * w1 - I1 * G2 * c2 - C2 * c2d * w2 * w2 + C * G1 * sd * s1
        dN2_dw1 = 2.0 * I1 * C * sd * w1
        dN2_dw2 = 2.0 * C2 * sd * cd * w2

        invD = 1.0 / D
        invD2 = invD * invD
        J = np.zeros((4, 4))
        J[0, 2] = 1.0
        J[1, 3] = 1.0
        J[2, 0] = (dN1_d1 * D - N1 * dD_d1) * invD2
        J[2, 1] = (dN1_d2 * D + N1 * dD_d1) * invD2
        J[2, 2] = dN1_dw1 * invD
        J[2, 3] = dN1_dw2 * invD
        J[3, 0] = (dN2_d1 * D - N2 * dD_d1) * invD2
        J[3, 1] = (dN2_d2 * D + N2 * dD_d1) * invD2
        J[3, 2] = dN2_dw1 * invD
        J[3, 3] = dN2_dw2 * invD
        return J


class PhysicalPendulum(_CoupledPendulum):
    """Distributed-mass double pendulum.

    Parameters
    ----------
    m1, m2 : float
        Link masses (kg).
    a1, a2 : float
        Pivot-to-centroid distances (m).
    l1 : float
        Length of the inner link, pivot to pivot (m).  The outer link
        length never enters the dynamics and is not stored.
    J1, J2 : float
        Centroidal moments of inertia (kg m^2).
    g : float
        Gravitational acceleration (m/s^2).

    Defaults are the laboratory values in :data:`PHYSICAL_DP_DEFAULTS`.
    """

    kind = "physical_dp"

    def __init__(self, **params):
        p = dict(PHYSICAL_DP_DEFAULTS)
        unknown = set(params) - set(p)
        if unknown:
            raise ValueError("unknown physical_dp parameters: %s" % sorted(unknown))
        p.update(params)
        for k, v in p.items():
            if not (v > 0.0):
                raise ValueError("parameter %s must be positive, got %r" % (k, v))
        self.params = p
        I1 = p["m1"] * p["a1"] ** 2 + p["m2"] * p["l1"] ** 2 + p["J1"]
        I2 = p["m2"] * p["a2"] ** 2 + p["J2"]
        C = p["m2"] * p["l1"] * p["a2"]
        G1 = p["g"] * (p["m1"] * p["a1"] + p["m2"] * p["l1"])
        G2 = p["g"] * p["m2"] * p["a2"]
        self._init_core(I1, I2, C, G1, G2)


class PointMassPendulum(_CoupledPendulum):
    """Idealized double pendulum: point masses on massless rods.

    Parameters: m1, m2 (kg), l1, l2 (m), g (m/s^2).  Equivalent to
    :class:`PhysicalPendulum` with a1 = l1, a2 = l2, J1 = J2 = 0 and the
    inner mass replaced by m1 + m2 appropriately; the coefficient map
    below encodes that reduction.
    """

    kind = "point_mass_dp"

    def __init__(self, **params):
        p = dict(POINT_MASS_DP_DEFAULTS)
        unknown = set(params) - set(p)
        if unknown:
            raise ValueError("unknown point_mass_dp parameters: %s" % sorted(unknown))
        p.update(params)
        for k, v in p.items():
            if not (v > 0.0):
                raise ValueError("parameter %s must be positive, got %r" % (k, v))
        self.params = p
        I1 = (p["m1"] + p["m2"]) * p["l1"] ** 2
        I2 = p["m2"] * p["l2"] ** 2
        C = p["m2"] * p["l1"] * p["l2"]
        G1 = (p["m1"] + p["m2"]) * p["g"] * p["l1"]
        G2 = p["m2"] * p["g"] * p["l2"]
        self._init_core(I1, I2, C, G1, G2)


class PCR3BP(SystemModel):
    """Planar circular restricted three-body problem, rotating frame.

    Single parameter mu in (0, 1), the mass ratio m2/(m1+m2); the two
    primaries sit at (-mu, 0) and (1-mu, 0).  Units are nondimensional
    (distance = primary separation, time = 1/mean motion).

    The energy convention is H = |v|^2/2 + V(x, y) with

        V = -1/2 ((1-mu) r1^2 + mu r2^2) - (1-mu)/r1 - mu/r2

    which differs from the effective-potential form by the constant
    -mu(1-mu)/2.
    """

    kind = "pcr3bp"
    # Time reversal for the rotating frame: (x, y, vx, vy) -> (x, -y, -vx, vy).
    # The pendulum reverser diag(1,1,-1,-1) is NOT a symmetry here (Coriolis).
    reversal_matrix = np.diag([1.0, -1.0, -1.0, 1.0])
    fix_free = (0, 3)   # (x, vy) parameterize Fix(S)
    fix_zero = (1, 2)   # y = vx = 0 on Fix(S)
    angle_indices = ()

    def __init__(self, **params):
        p = dict(PCR3BP_DEFAULTS)
        unknown = set(params) - set(p)
        if unknown:
            raise ValueError("unknown pcr3bp parameters: %s" % sorted(unknown))
        p.update(params)
        mu = p["mu"]
        if not (0.0 < mu < 1.0):
            raise ValueError("mu must lie in (0, 1), got %r" % mu)
        self.params = p
        self._mu = float(mu)

    def vector_field(self, s):
        x, y, vx, vy = float(s[0]), float(s[1]), float(s[2]), float(s[3])
        mu = self._mu
        dx1, dx2 = x + mu, x - 1.0 + mu
        r1sq = dx1 * dx1 + y * y
        r2sq = dx2 * dx2 + y * y
        inv_r13 = r1sq ** -1.5
        inv_r23 = r2sq ** -1.5
        ax = 2.0 * vy + x - (1.0 - mu) * dx1 * inv_r13 - mu * dx2 * inv_r23
        ay = -2.0 * vx + y - (1.0 - mu) * y * inv_r13 - mu * y * inv_r23
        return np.array(
            [vx, vy, _finite_or_raise("ax", ax), _finite_or_raise("ay", ay)]
        )

    def hamiltonian(self, s):
        x, y, vx, vy = float(s[0]), float(s[1]), float(s[2]), float(s[3])
        return 0.5 * (vx * vx + vy * vy) + float(self.potential(x, y))

    def potential(self, q1, q2):
        mu = self._mu
        x, y = np.asarray(q1, dtype=float), np.asarray(q2, dtype=float)
        r1 = np.hypot(x + mu, y)
        r2 = np.hypot(x - 1.0 + mu, y)
        return -0.5 * ((1.0 - mu) * r1 ** 2 + mu * r2 ** 2) - (1.0 - mu) / r1 - mu / r2

    def grad_hamiltonian(self, s):
        x, y, vx, vy = float(s[0]), float(s[1]), float(s[2]), float(s[3])
        mu = self._mu
        dx1, dx2 = x + mu, x - 1.0 + mu
        inv_r13 = (dx1 * dx1 + y * y) ** -1.5
        inv_r23 = (dx2 * dx2 + y * y) ** -1.5
        return np.array(
            [
                -x + (1.0 - mu) * dx1 * inv_r13 + mu * dx2 * inv_r23,
                -y + (1.0 - mu) * y * inv_r13 + mu * y * inv_r23,
                vx,
                vy,
            ]
        )

    def jacobian(self, s):
        x, y = float(s[0]), float(s[1])
        mu = self._mu
        dx1, dx2 = x + mu, x - 1.0 + mu
        r1sq = dx1 * dx1 + y * y
        r2sq = dx2 * dx2 + y * y
        inv_r13, inv_r15 = r1sq ** -1.5, r1sq ** -2.5
        inv_r23, inv_r25 = r2sq ** -1.5, r2sq ** -2.5
        m1, m2 = 1.0 - mu, mu
        oxx = 1.0 - m1 * inv_r13 - m2 * inv_r23 \
            + 3.0 * m1 * dx1 * dx1 * inv_r15 + 3.0 * m2 * dx2 * dx2 * inv_r25
        oyy = 1.0 - m1 * inv_r13 - m2 * inv_r23 \
            + 3.0 * m1 * y * y * inv_r15 + 3.0 * m2 * y * y * inv_r25
        oxy = 3.0 * m1 * dx1 * y * inv_r15 + 3.0 * m2 * dx2 * y * inv_r25
        return np.array(
            [
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [oxx, oxy, 0.0, 2.0],
                [oxy, oyy, -2.0, 0.0],
            ]
        )


_DEFAULT_GRID_BOUNDS = {
    "physical_dp": ((-np.pi, np.pi), (-np.pi, np.pi)),
    "point_mass_dp": ((-np.pi, np.pi), (-np.pi, np.pi)),
    "pcr3bp": ((-1.5, 1.5), (-1.5, 1.5)),
}


def hills_region_grid(model, h, bounds=None, resolution=400):
    """Sample the energetically accessible region of configuration space.

    A grid cell (q1, q2) is accessible at energy ``h`` iff the potential
    satisfies V(q1, q2) <= h (zero kinetic energy is the limiting case).

    Parameters
    ----------
    model : SystemModel
    h : float
        Energy level.
    bounds : ((q1min, q1max), (q2min, q2max)), optional
        Defaults to one full period for the pendulums and a 3x3 box for
        the PCR3BP.
    resolution : int or (int, int)
        Number of samples per axis.

    Returns
    -------
    q1, q2 : 1-d arrays of axis samples
    accessible : 2-d boolean array, shape (len(q2), len(q1))
        Indexed [j, i] for (q1[i], q2[j]), matching meshgrid convention.
    """
    if bounds is None:
        bounds = _DEFAULT_GRID_BOUNDS[model.kind]
    (q1min, q1max), (q2min, q2max) = bounds
    if not (q1max > q1min and q2max > q2min):
        raise ValueError("grid bounds must be increasing")
    if np.isscalar(resolution):
        n1 = n2 = int(resolution)
    else:
        n1, n2 = (int(r) for r in resolution)
    if n1 <= 0 or n2 <= 0:
        raise ValueError("grid resolution must be positive")
    q1 = np.linspace(q1min, q1max, n1)
    q2 = np.linspace(q2min, q2max, n2)
    Q1, Q2 = np.meshgrid(q1, q2)
    with np.errstate(divide="ignore"):  # PCR3BP potential blows up at primaries
        V = model.potential(Q1, Q2)
    return q1, q2, V <= h


_MODEL_KINDS = {
    "physical_dp": PhysicalPendulum,
    "point_mass_dp": PointMassPendulum,
    "pcr3bp": PCR3BP,
    # accept the CamelCase spellings too
    "PhysicalDP": PhysicalPendulum,
    "PointMassDP": PointMassPendulum,
    "PCR3BP": PCR3BP,
}


def model_from_config(config):
    """Build a model from a JSON config (path, JSON text, or dict).

    Schema: ``{"kind": "physical_dp" | "point_mass_dp" | "pcr3bp",
    "params": {...}}`` with defaults applied for omitted parameters.
    """
    if isinstance(config, (str, bytes)):
        text = str(config)
        if text.lstrip().startswith("{"):
            config = json.loads(text)
        else:
            with open(text) as fh:
                config = json.load(fh)
    if not isinstance(config, dict):
        raise TypeError("model config must be a dict or JSON object")
    kind = config.get("kind")
    if kind not in _MODEL_KINDS:
        raise ValueError(
            "unknown model kind %r; expected one of %s"
            % (kind, sorted(k for k in _MODEL_KINDS if k.islower()))
        )
    return _MODEL_KINDS[kind](**config.get("params", {}))
