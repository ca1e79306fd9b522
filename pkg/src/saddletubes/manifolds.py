"""Invariant-manifold tubes of UPOs and their Poincaré-section cuts.

The stable/unstable manifold of a hyperbolic UPO is approximated locally
by displacing points of the orbit a small distance eps along the Floquet
eigendirection transported to each phase by the variational flow, then
globalized by integrating every seed to a Poincaré section.  Interior
points of a cut can be pushed through further returns of the section
map.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoEventWithinMaxTime, SaddleTubesError
from .integrate import DEFAULT_CONFIG, integrate_to_event, integrate_variational

__all__ = [
    "TubeBranch",
    "SectionCut",
    "seed_tube",
    "globalize_tube",
    "interior_iterate",
    "polygon_contains",
    "polyline_distance",
    "section_state_at_energy",
]

UNSTABLE = "unstable"
STABLE = "stable"

_EPS_RANGE = (1e-8, 1e-4)


@dataclass
class TubeBranch:
    """Local manifold approximation: seeds displaced eps off the UPO.

    sign selects which side of the orbit the displacement points;
    seed_times are the phases (time along the orbit) of the footpoints.
    """

    orbit: object
    stability: str
    sign: int
    eps: float
    seeds: np.ndarray
    seed_times: np.ndarray

    @property
    def n_seeds(self):
        return len(self.seeds)


@dataclass
class SectionCut:
    """Ordered polyline of tube-section crossing points.

    coords are 2-vectors in the section plane, full_states the
    corresponding phase-space points, both ordered by seed phase
    (incomplete seeds are dropped from the polyline but counted).
    flight_times are signed integration times from seed to crossing.
    """

    section: object
    coords: np.ndarray
    full_states: np.ndarray
    flight_times: np.ndarray
    phases: np.ndarray
    energy: float
    closed: bool
    incomplete_count: int
    branch: object = None
    crossing_direction: object = None
    skip_count: int = 0

    def __len__(self):
        return len(self.coords)


def seed_tube(model, orbit, stability=UNSTABLE, sign=+1, eps=1e-6, n_seeds=200,
              cfg=None):
    """Seed points for one branch of W^s/W^u of a UPO.

    n_seeds footpoints at equal time-fractions around the orbit, each
    displaced by eps along the (normalized) stable or unstable Floquet
    eigendirection transported to that phase by the variational flow.
    sign = +1/-1 picks the side of the orbit.
    """
    cfg = cfg or DEFAULT_CONFIG
    if stability not in (STABLE, UNSTABLE):
        raise ValueError("stability must be 'stable' or 'unstable', got %r"
                         % (stability,))
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if not (_EPS_RANGE[0] <= eps <= _EPS_RANGE[1]):
        raise ValueError("eps=%g outside sensible range [%g, %g]"
                         % (eps, _EPS_RANGE[0], _EPS_RANGE[1]))
    n_seeds = int(n_seeds)
    if n_seeds < 3:
        raise ValueError("need at least 3 seeds, got %d" % n_seeds)
    lam_u = orbit.multipliers[0]
    if not (np.isreal(lam_u) and abs(lam_u) > 1.0):
        raise SaddleTubesError("orbit is not hyperbolic: lam_u=%s" % lam_u)

    v0 = orbit.unstable_dir if stability == UNSTABLE else orbit.stable_dir
    _, _, phi = integrate_variational(model, orbit.anchor, orbit.period, cfg,
                                      dense=True)
    times = np.linspace(0.0, orbit.period, n_seeds, endpoint=False)
    seeds = np.empty((n_seeds, 4))
    for i, t in enumerate(times):
        x, M = phi(t)
        d = M @ v0
        seeds[i] = x + sign * eps * (d / np.linalg.norm(d))

    # Both TubeBranch invariants: displacement is eps by construction,
    # and tangency to the energy level makes the energy error O(eps^2).
    scale = max(1.0, float(np.max(np.abs(model.jacobian(orbit.anchor)))))
    for i in range(n_seeds):
        dh = abs(model.hamiltonian(seeds[i]) - orbit.energy)
        if dh > 100.0 * eps * eps * scale:
            raise SaddleTubesError(
                "seed %d energy error %.3e exceeds %.3e — eigendirection "
                "not tangent to the level set?" % (i, dh, 100 * eps * eps * scale)
            )
    return TubeBranch(orbit=orbit, stability=stability, sign=int(sign),
                      eps=float(eps), seeds=seeds, seed_times=times)


def globalize_tube(model, branch, section, crossing_direction=None, cfg=None,
                   skip_count=0, map_fn=None):
    """Flow every seed of a branch to its section crossing.

    Unstable branches flow forward in time, stable branches backward
    (enforced).  Seeds that fail to reach the section within
    cfg.max_time are dropped from the polyline and counted in
    incomplete_count; if none crosses, that is an error.

    map_fn, when given, must behave like the builtin ``map`` (ordered,
    one result per seed) and may evaluate seeds concurrently, e.g.
    ``ThreadPoolExecutor.map``; the cut is assembled in seed order
    either way, so the output does not depend on scheduling.
    """
    cfg = cfg or DEFAULT_CONFIG
    tdir = +1 if branch.stability == UNSTABLE else -1

    def _cross(seed):
        try:
            ev, _ = integrate_to_event(
                model, seed, section,
                direction=crossing_direction, cfg=cfg,
                skip_count=skip_count, tdir=tdir,
            )
        except NoEventWithinMaxTime:
            return None
        return ev

    states, coords, tflights, phases = [], [], [], []
    incomplete = 0
    events = list((map_fn or map)(_cross, branch.seeds))
    for i, ev in enumerate(events):
        if ev is None:
            incomplete += 1
            continue
        states.append(ev.state)
        coords.append(section.plane_coords(ev.state))
        tflights.append(ev.time)
        phases.append(branch.seed_times[i])
    if not states:
        raise SaddleTubesError(
            "no seed of the %s branch reached the section within max_time=%g"
            % (branch.stability, cfg.max_time)
        )
    states = np.array(states)
    h_ref = branch.orbit.energy
    worst = max(abs(model.hamiltonian(s) - h_ref) for s in states)
    if worst > 1e-8:
        raise SaddleTubesError(
            "globalized cut drifted %.3e in energy (tol 1e-8)" % worst
        )
    return SectionCut(
        section=section,
        coords=np.array(coords),
        full_states=states,
        flight_times=np.array(tflights),
        phases=np.array(phases),
        energy=h_ref,
        closed=(incomplete == 0),
        incomplete_count=incomplete,
        branch=branch,
        crossing_direction=crossing_direction,
        skip_count=skip_count,
    )


def interior_iterate(model, points, section, n_returns, tdir=+1, cfg=None):
    """Push section states through successive returns of the section map.

    For angle-level sections each return advances the section angle by
    2*pi (times tdir); other sections map back to themselves.  Points
    whose next crossing is not found within cfg.max_time are recorded as
    incomplete for that return and excluded afterwards.  Returns one
    SectionCut per return, points kept in input order.
    """
    cfg = cfg or DEFAULT_CONFIG
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    energies = np.array([model.hamiltonian(p) for p in pts])
    h_ref = float(np.median(energies))
    if np.max(np.abs(energies - h_ref)) > 1e-8:
        raise ValueError("interior points are not at a common energy")
    g0 = np.max(np.abs([section.g(p) for p in pts]))
    if g0 > 1e-8:
        raise ValueError("interior points do not lie on the section "
                         "(max |g| = %.3e)" % g0)

    current = {i: pts[i] for i in range(len(pts))}
    times = {i: 0.0 for i in range(len(pts))}
    sec_k = section
    out = []
    for _ in range(int(n_returns)):
        if sec_k.kind == "angle_level":
            sec_k = sec_k.shifted(2.0 * math.pi * tdir)
        coords, states, tf, order = [], [], [], []
        dead = []
        for i in sorted(current):
            try:
                ev, _ = integrate_to_event(
                    model, current[i], sec_k,
                    direction=sec_k.crossing_direction,
                    cfg=cfg, tdir=tdir,
                )
            except NoEventWithinMaxTime:
                dead.append(i)
                continue
            current[i] = ev.state
            times[i] += ev.time
            coords.append(sec_k.plane_coords(ev.state))
            states.append(ev.state)
            tf.append(times[i])
            order.append(i)
        for i in dead:
            del current[i]
        if not states:
            raise SaddleTubesError("no interior point completed the return")
        out.append(SectionCut(
            section=sec_k,
            coords=np.array(coords),
            full_states=np.array(states),
            flight_times=np.array(tf),
            phases=np.array(order, dtype=float),
            energy=h_ref,
            closed=False,
            incomplete_count=len(dead),
        ))
    return out


def polyline_distance(polyline, points, closed=False):
    """Distance from each point to the nearest segment of a polyline.

    polyline: (m,2) vertices; closed=True appends the closing segment.
    Returns an array of distances (scalar for a single 2-vector).
    """
    poly = np.asarray(polyline, dtype=float)
    a = poly[:-1]
    b = poly[1:]
    if closed and not np.allclose(poly[0], poly[-1]):
        a = np.vstack([a, poly[-1]])
        b = np.vstack([b, poly[0]])
    ab = b - a
    den = np.einsum("ij,ij->i", ab, ab)
    den[den == 0.0] = 1.0
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty(len(pts))
    for k, p in enumerate(pts):
        t = np.clip(np.einsum("ij,ij->i", p - a, ab) / den, 0.0, 1.0)
        proj = a + t[:, None] * ab
        out[k] = np.min(np.linalg.norm(proj - p, axis=1))
    if np.asarray(points).ndim == 1:
        return float(out[0])
    return out


def polygon_contains(polygon, points):
    """Winding-number point-in-polygon test (vectorized over points).

    polygon: (m,2) closed or open vertex list (closure implied);
    points: (k,2) or a single 2-vector.  Returns a boolean array (or
    scalar) — True strictly inside or on the boundary within float
    resolution.
    """
    poly = np.asarray(polygon, dtype=float)
    if len(poly) >= 2 and np.allclose(poly[0], poly[-1]):
        poly = poly[:-1]
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    inside = np.empty(len(pts), dtype=bool)
    for k, (px, py) in enumerate(pts):
        # signed winding number accumulated over edges
        upward = (y0 <= py) & (y1 > py)
        downward = (y0 > py) & (y1 <= py)
        cross = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
        wn = int(np.sum(upward & (cross > 0))) - int(np.sum(downward & (cross < 0)))
        inside[k] = wn != 0
    if np.asarray(points).ndim == 1:
        return bool(inside[0])
    return inside


def section_state_at_energy(model, section, plane_point, energy, branch=+1,
                            near=None):
    """Lift a section-plane point to a full state on one energy level.

    Works for sections whose free coordinate is the crossing velocity
    itself (angle levels and the PCR3BP y=0 section): the Hamiltonian
    is exactly quadratic in that velocity, so the quadratic is fitted
    from three evaluations and solved.  branch picks the crossing sign;
    if both roots cross the same way the one nearest ``near`` wins
    (largest magnitude when no reference is given).  Raises if the
    plane point is energetically inaccessible.
    """
    c1, c2 = float(plane_point[0]), float(plane_point[1])
    x = np.zeros(4)
    if section.kind == "angle_level":
        w = int(section.which)
        x[w] = section.value
        x[1 - w] = c1
        x[3 - w] = c2
        iu = 2 + w
    elif section.kind == "pcr3bp_y0":
        x[0], x[1], x[2] = c1, 0.0, c2
        iu = 3
    else:
        raise SaddleTubesError(
            "cannot lift plane points on a %r section (the free "
            "coordinate is not the crossing velocity)" % section.kind)

    def h_at(u):
        y = x.copy()
        y[iu] = u
        return model.hamiltonian(y)

    f0, fp, fm = h_at(0.0) - energy, h_at(1.0) - energy, h_at(-1.0) - energy
    a = 0.5 * (fp + fm) - f0
    b = 0.5 * (fp - fm)
    disc = b * b - 4.0 * a * f0
    if disc < 0.0:
        raise SaddleTubesError(
            "plane point (%g, %g) is inaccessible at H=%g" % (c1, c2, energy))
    sq = math.sqrt(disc)
    roots = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
    want = [r for r in roots if r * branch > 0.0]
    if not want:
        raise SaddleTubesError(
            "no crossing of sign %+d at plane point (%g, %g), H=%g"
            % (branch, c1, c2, energy))
    if len(want) == 2:
        key = (lambda r: abs(r - near)) if near is not None \
            else (lambda r: -abs(r))
        want.sort(key=key)
    x[iu] = want[0]
    return x
