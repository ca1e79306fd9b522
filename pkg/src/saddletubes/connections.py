"""Homoclinic and heteroclinic connections between UPO manifold tubes.

Candidates come from polyline intersections of a stable and an unstable
SectionCut; each candidate is refined by a two-parameter shooting solve
over the seed phases of the two tube branches, then verified: the full
4-coordinate mismatch at the section must close below tolerance and the
refined trajectory must asymptotically approach both orbits.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .equilibria import equilibrium_by_label
from .errors import (
    AsymptoticsFailed,
    EnergyBelowSaddle,
    NoEventWithinMaxTime,
    RefinementDiverged,
    SaddleTubesError,
)
from .integrate import DEFAULT_CONFIG, integrate, integrate_to_event, \
    integrate_variational
from .manifolds import STABLE, UNSTABLE, seed_tube, globalize_tube
from .sections import SectionSpec
from .upo import sample_orbit, upo_at_energy

__all__ = [
    "CandidateIntersection",
    "ConnectionOrbit",
    "SampledPath",
    "intersect_cuts",
    "refine_connection",
    "homoclinic_cuts",
    "find_homoclinics",
    "find_heteroclinics",
    "heteroclinics_between_saddles",
    "reverse_connection",
]

_MERGE_TOL = 1e-6
_TANGENT_RATIO = 1e-3


@dataclass
class SampledPath:
    """A trajectory resampled onto a plain time grid (t=0 at the section)."""

    times: np.ndarray
    states: np.ndarray

    def __len__(self):
        return len(self.times)


@dataclass
class CandidateIntersection:
    """A transversal crossing of two cut polylines, before refinement."""

    point: np.ndarray
    phase_u: float
    phase_s: float
    cut_u: object
    cut_s: object
    low_confidence: bool = False


@dataclass
class ConnectionOrbit:
    kind: str                      # "homoclinic" | "heteroclinic"
    source_upo: object
    target_upo: object
    section: object
    point: np.ndarray              # 2-vector in the section plane
    state: np.ndarray              # full 4-dim state at the section
    trajectory: SampledPath
    symmetric: bool
    rotation_signature: tuple
    mismatch: float
    partner: object = None
    rotation_float: np.ndarray = None
    asym_forward_min: float = None
    asym_backward_min: float = None
    low_confidence: bool = False
    # local-manifold contact data (used to re-seed shadowing solves):
    # departure phase on the source orbit, arrival phase on the target
    # orbit, and the two flight times from the eps-seeds to the section
    phase_u: float = None
    phase_s: float = None
    flight_u: float = None
    flight_s: float = None


def _sections_match(sa, sb):
    if sa.kind != sb.kind:
        return False
    if sa.kind == "angle_level":
        return sa.which == sb.which and abs(sa.value - sb.value) < 1e-9
    return True


def _segments(cut):
    """(P0, P1, phase0, phase1) per polyline segment.

    Closed cuts contribute their genuine closing segment (phase wraps by
    one orbit period); incomplete cuts get no closing segment at all —
    a chord closing an incomplete polyline is an artifact.
    """
    c, ph = cut.coords, cut.phases
    segs = [(c[i], c[i + 1], ph[i], ph[i + 1])
            for i in range(len(c) - 1)]
    if cut.closed and len(c) >= 3:
        if cut.branch is not None:
            wrapped = ph[0] + cut.branch.orbit.period
        else:
            wrapped = ph[-1]  # no period info: flat phase on the join
        segs.append((c[-1], c[0], ph[-1], wrapped))
    return segs


def intersect_cuts(cut_u, cut_s, tol=_MERGE_TOL):
    """All transversal crossings of two cut polylines.

    Exact per-segment linear solve (the closed form of secant iteration
    on the linear interpolants); crossings closer than tol in the plane
    are merged; near-tangential crossings are kept but flagged
    low-confidence.  Cuts must live on the same section at the same
    energy.
    """
    if not _sections_match(cut_u.section, cut_s.section):
        raise SaddleTubesError(
            "cut sections differ: %r vs %r" % (cut_u.section, cut_s.section))
    if abs(cut_u.energy - cut_s.energy) > 1e-8:
        raise SaddleTubesError(
            "cut energies differ by %.3e" % abs(cut_u.energy - cut_s.energy))
    out = []
    slack = 1e-12
    for p0, p1, a0, a1 in _segments(cut_u):
        u = p1 - p0
        for q0, q1, b0, b1 in _segments(cut_s):
            v = q1 - q0
            det = u[0] * (-v[1]) - (-v[0]) * u[1]
            norm_uv = (math.hypot(u[0], u[1]) * math.hypot(v[0], v[1]))
            if norm_uv == 0.0:
                continue
            if abs(det) < 1e-14 * norm_uv:
                continue  # parallel at float resolution
            rhs = q0 - p0
            a = (rhs[0] * (-v[1]) - (-v[0]) * rhs[1]) / det
            b = (u[0] * rhs[1] - rhs[0] * u[1]) / det
            if not (-slack <= a <= 1 + slack and -slack <= b <= 1 + slack):
                continue
            pt = p0 + a * u
            out.append(CandidateIntersection(
                point=pt,
                phase_u=a0 + a * (a1 - a0),
                phase_s=b0 + b * (b1 - b0),
                cut_u=cut_u,
                cut_s=cut_s,
                low_confidence=abs(det) < _TANGENT_RATIO * norm_uv,
            ))
    # merge duplicates (e.g. crossings that land on shared vertices)
    merged = []
    for cand in out:
        if any(np.linalg.norm(cand.point - m.point) < tol for m in merged):
            continue
        merged.append(cand)
    merged.sort(key=lambda c: (c.point[0], c.point[1]))
    return merged


class _BranchSeeder:
    """Fresh manifold seeds at arbitrary phase along a tube branch."""

    def __init__(self, model, branch, cfg):
        orbit = branch.orbit
        self.period = orbit.period
        self.eps = branch.eps
        self.sign = branch.sign
        v0 = orbit.unstable_dir if branch.stability == UNSTABLE \
            else orbit.stable_dir
        self.v0 = v0
        _, _, self.phi = integrate_variational(
            model, orbit.anchor, orbit.period, cfg, dense=True)

    def __call__(self, phase):
        x, M = self.phi(phase % self.period)
        d = M @ self.v0
        return x + self.sign * self.eps * d / np.linalg.norm(d)


def _orbit_tree(model, orbit, cfg, n=600):
    _, pts = sample_orbit(model, orbit, n, cfg)
    return cKDTree(pts)


def _min_distance_to_orbit(model, x0, orbit, tdir, n_periods, cfg):
    span = n_periods * orbit.period
    traj = integrate(model, x0, (0.0, tdir * span), cfg)
    ts = np.linspace(0.0, tdir * span, 400)
    states = traj.state_at(ts)
    d, _ = _orbit_tree(model, orbit, cfg).query(states)
    return float(np.min(d))


def _sample_event_path(traj, t_event, side, n=400):
    """Resample an event trajectory with t=0 placed at the section."""
    ts = np.linspace(0.0, t_event, n)
    states = traj.state_at(ts)
    if side == "u":
        # unstable side: seed at -T_flight, section at 0
        return ts - t_event, states
    # stable side covers [0, |T_flight|] in connection time
    return ts - t_event, states


def refine_connection(model, candidate, source_upo, target_upo, cfg=None,
                      plane_tol=1e-10, mismatch_tol=1e-8,
                      asym_periods=5, asym_tol=1e-3, max_iter=30):
    """Shooting refinement of a cut-intersection candidate.

    The two unknowns are the seed phases along the unstable (source) and
    stable (target) branches; the residual is the section-plane mismatch
    of their globalized crossings.  After convergence the full
    4-coordinate mismatch is asserted below mismatch_tol — the section
    constraint and energy fix the remaining coordinates, but that
    agreement is verified, never assumed — and the refined trajectory
    must approach source (backward) and target (forward) within asym_tol
    during asym_periods orbit periods.
    """
    cfg = cfg or DEFAULT_CONFIG
    cut_u, cut_s = candidate.cut_u, candidate.cut_s
    bu, bs = cut_u.branch, cut_s.branch
    if bu is None or bs is None:
        raise SaddleTubesError("candidate cuts carry no branch provenance")
    if abs(source_upo.energy - target_upo.energy) > 1e-8:
        raise SaddleTubesError("source/target orbits are at different energies")
    section = cut_u.section
    seeder_u = _BranchSeeder(model, bu, cfg)
    seeder_s = _BranchSeeder(model, bs, cfg)

    def shoot(phase, which):
        if which == "u":
            seed, cut, tdir = seeder_u(phase), cut_u, +1
        else:
            seed, cut, tdir = seeder_s(phase), cut_s, -1
        return integrate_to_event(
            model, seed, section, direction=cut.crossing_direction,
            cfg=cfg, skip_count=cut.skip_count, tdir=tdir)

    def residual(p):
        ev_u, traj_u = shoot(p[0], "u")
        ev_s, traj_s = shoot(p[1], "s")
        r = section.plane_coords(ev_u.state) - section.plane_coords(ev_s.state)
        return r, (ev_u, traj_u, ev_s, traj_s)

    gap_u = bu.orbit.period / max(len(cut_u), 8)
    gap_s = bs.orbit.period / max(len(cut_s), 8)
    step_cap = 3.0 * np.array([gap_u, gap_s])

    p = np.array([candidate.phase_u, candidate.phase_s], dtype=float)
    try:
        r, data = residual(p)
    except NoEventWithinMaxTime:
        raise RefinementDiverged("candidate seed lost the section "
                                 "(phase %.4f/%.4f)" % (p[0], p[1]))
    nr = float(np.max(np.abs(r)))

    def fd_jacobian(p, r):
        J = np.empty((2, 2))
        fd = np.array([0.05 * gap_u, 0.05 * gap_s])
        try:
            for j in range(2):
                dp = np.zeros(2)
                dp[j] = fd[j]
                rj, _ = residual(p + dp)
                J[:, j] = (rj - r) / fd[j]
        except NoEventWithinMaxTime:
            raise RefinementDiverged("finite-difference probe lost the section")
        return J

    # FD Jacobian, then Broyden updates; the iteration bottoms out at the
    # roundoff roughness of the shooting map (amplified machine epsilon),
    # so track the best iterate and let the mismatch check decide
    J = fd_jacobian(p, r)
    rebuilt = False
    for _ in range(max_iter):
        if nr < plane_tol:
            break
        try:
            dp = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise RefinementDiverged("singular shooting Jacobian")
        dp = np.clip(dp, -step_cap, step_cap)
        alpha = 1.0
        improved = False
        for _ in range(6):
            try:
                r_new, data_new = residual(p + alpha * dp)
            except NoEventWithinMaxTime:
                alpha *= 0.5
                continue
            nr_new = float(np.max(np.abs(r_new)))
            if nr_new < nr:
                # Broyden rank-1 update before accepting
                s_vec = alpha * dp
                y = r_new - r
                J = J + np.outer(y - J @ s_vec, s_vec) / (s_vec @ s_vec)
                p, r, nr, data = p + s_vec, r_new, nr_new, data_new
                improved = True
                rebuilt = False
                break
            alpha *= 0.5
        if not improved:
            if rebuilt:
                break       # fresh Jacobian did not help either: floor hit
            J = fd_jacobian(p, r)
            rebuilt = True

    # The plane iteration bottoms out near the shooting-map roughness, but
    # the gate below measures the full 4-coordinate gap, which feels that
    # plane error through the section/energy gradients (an O(10) factor
    # for fast arms).  A few overdetermined Gauss-Newton steps on the
    # 4-vector itself squeeze out the amplified component; only strict
    # improvements of the gate norm are kept.
    def gap4(d):
        return d[0].state - d[2].state

    g = gap4(data)
    ng = float(np.max(np.abs(g)))
    if ng > 0.45 * mismatch_tol:
        fd4 = np.array([0.02 * gap_u, 0.02 * gap_s])
        for _ in range(4):
            try:
                G = np.empty((4, 2))
                for j in range(2):
                    dpj = np.zeros(2)
                    dpj[j] = fd4[j]
                    _, data_j = residual(p + dpj)
                    G[:, j] = (gap4(data_j) - g) / fd4[j]
                step = np.linalg.lstsq(G, -g, rcond=None)[0]
            except (NoEventWithinMaxTime, np.linalg.LinAlgError):
                break
            step = np.clip(step, -step_cap, step_cap)
            alpha = 1.0
            improved = False
            for _ in range(4):
                try:
                    r_new, data_new = residual(p + alpha * step)
                except NoEventWithinMaxTime:
                    alpha *= 0.5
                    continue
                g_new = gap4(data_new)
                ng_new = float(np.max(np.abs(g_new)))
                if ng_new < ng:
                    p = p + alpha * step
                    g, ng, data = g_new, ng_new, data_new
                    r = r_new
                    nr = float(np.max(np.abs(r_new)))
                    improved = True
                    break
                alpha *= 0.5
            if not improved or ng < 0.45 * mismatch_tol:
                break

    ev_u, traj_u, ev_s, traj_s = data
    mismatch = float(np.max(np.abs(ev_u.state - ev_s.state)))
    if mismatch > mismatch_tol:
        raise RefinementDiverged(
            "4-coordinate mismatch %.3e exceeds %.3e (plane residual %.3e)"
            % (mismatch, mismatch_tol, nr))

    state = 0.5 * (ev_u.state + ev_s.state)
    d_fwd = _min_distance_to_orbit(model, ev_s.state, target_upo, +1,
                                   asym_periods, cfg)
    if d_fwd > asym_tol:
        raise AsymptoticsFailed("forward", d_fwd, asym_tol)
    d_bwd = _min_distance_to_orbit(model, ev_u.state, source_upo, -1,
                                   asym_periods, cfg)
    if d_bwd > asym_tol:
        raise AsymptoticsFailed("backward", d_bwd, asym_tol)

    # stitch the two shooting legs into one sampled path, section at t=0
    tu, su = _sample_event_path(traj_u, ev_u.time, "u")
    ts_, ss = _sample_event_path(traj_s, ev_s.time, "s")
    order = np.argsort(ts_)[1:]  # drop the duplicate t=0 section sample
    times = np.concatenate([tu, ts_[order]])
    states = np.vstack([su, ss[order]])

    ang = list(model.angle_indices)
    rot_float = (target_upo.anchor[ang] - source_upo.anchor[ang]) / (2 * math.pi)
    kind = "homoclinic" if source_upo.saddle_label == target_upo.saddle_label \
        and np.allclose(rot_float, np.round(rot_float), atol=1e-9) \
        else "heteroclinic"
    sym = abs(section.symmetry_coord(state)) < 1e-6
    return ConnectionOrbit(
        kind=kind,
        source_upo=source_upo,
        target_upo=target_upo,
        section=section,
        point=section.plane_coords(state),
        state=state,
        trajectory=SampledPath(times=times, states=states),
        symmetric=bool(sym),
        rotation_signature=tuple(int(round(x)) for x in rot_float),
        mismatch=mismatch,
        rotation_float=rot_float,
        asym_forward_min=d_fwd,
        asym_backward_min=d_bwd,
        low_confidence=candidate.low_confidence,
        phase_u=p[0] % source_upo.period,
        phase_s=p[1] % target_upo.period,
        flight_u=abs(ev_u.time),
        flight_s=abs(ev_s.time),
    )


def _select_branch_sign(model, orbit, stability, section, crossing_direction,
                        cfg, eps=1e-6):
    """Pick the tube side that actually reaches the section.

    The Floquet eigenvector sign convention is algebraic, not
    geometric, so probe one seed of each sign and keep the one with the
    shorter flight to the requested crossing.
    """
    tdir = +1 if stability == UNSTABLE else -1
    best = None
    for sign in (+1, -1):
        br = seed_tube(model, orbit, stability, sign, eps, 3, cfg=cfg)
        try:
            ev, _ = integrate_to_event(model, br.seeds[0], section,
                                       direction=crossing_direction,
                                       cfg=cfg, tdir=tdir)
        except NoEventWithinMaxTime:
            continue
        if best is None or abs(ev.time) < best[1]:
            best = (sign, abs(ev.time))
    if best is None:
        raise SaddleTubesError(
            "neither %s branch reaches the section %r" % (stability, section))
    return best[0]


def _pair_partners(conns, tol=1e-5):
    """Mutually link asymmetric connections whose section points mirror
    across the symmetry line (symmetric coordinate negated)."""
    for i, a in enumerate(conns):
        if a.symmetric or a.partner is not None:
            continue
        mirrored = np.array([-a.point[0], a.point[1]])
        for b in conns[i + 1:]:
            if b.symmetric or b.partner is not None:
                continue
            if np.linalg.norm(mirrored - b.point) < tol:
                a.partner = b
                b.partner = a
                break


def _dedupe_connections(conns, tol=1e-5):
    kept = []
    for c in conns:
        if any(np.linalg.norm(c.point - k.point) < tol for k in kept):
            continue
        kept.append(c)
    return kept


def homoclinic_cuts(model, upo, lift_turns=1, n_seeds=200, eps=1e-5,
                    cut_cfg=None, map_fn=None):
    """Stable/unstable cuts whose intersections seed the homoclinic hunt.

    For angle models the rotating arm is the inverted ("up") one --
    the arm whose anchor angle sits near pi mod 2*pi -- and the target
    is the source orbit lifted by lift_turns full turns of that arm,
    with the working section at the intermediate angle level (theta2 =
    2*pi for one turn from the DownUp family, theta1 = 2*pi from the
    UpDown family); for the PCR3BP the section is y=0 and the lift is
    trivial.  Returns (cut_u, cut_s, target_upo); the candidate count
    len(intersect_cuts(cut_u, cut_s)) is the geometric homoclinic
    census at this energy.
    """
    cut_cfg = cut_cfg or DEFAULT_CONFIG
    if model.kind == "pcr3bp":
        section = SectionSpec.pcr3bp_y0()
        shift = np.zeros(4)
    else:
        turns = int(lift_turns)
        # the rotating arm is the inverted one: anchor angle ~ pi mod 2*pi
        ang = list(model.angle_indices)
        upness = [abs(math.remainder(upo.anchor[i] - math.pi, 2 * math.pi))
                  for i in ang]
        arm = ang[int(np.argmin(upness))]
        shift = np.zeros(4)
        shift[arm] = 2.0 * math.pi * turns
        # intermediate angle level between the two lifts (one level up
        # from the source orbit for turns >= 1; the orbit's own level
        # family for the same-lift search)
        base = 2.0 * math.pi * round((upo.anchor[arm] + math.pi) / (2 * math.pi))
        section = SectionSpec.angle(arm, base, crossing_direction=None)
    target = upo.shifted(shift) if np.any(shift) else upo

    if model.kind == "pcr3bp":
        dir_u = dir_s = None
    elif np.any(shift):
        dir_u = dir_s = +1 if shift[arm] > 0 else -1
    else:
        dir_u, dir_s = +1, -1  # same-lift search: descending stable family

    sign_u = _select_branch_sign(model, upo, UNSTABLE, section, dir_u, cut_cfg,
                                 eps)
    sign_s = _select_branch_sign(model, target, STABLE, section, dir_s,
                                 cut_cfg, eps)
    br_u = seed_tube(model, upo, UNSTABLE, sign_u, eps, n_seeds, cfg=cut_cfg)
    br_s = seed_tube(model, target, STABLE, sign_s, eps, n_seeds, cfg=cut_cfg)
    cut_u = globalize_tube(model, br_u, section, crossing_direction=dir_u,
                           cfg=cut_cfg, map_fn=map_fn)
    cut_s = globalize_tube(model, br_s, section, crossing_direction=dir_s,
                           cfg=cut_cfg, map_fn=map_fn)
    return cut_u, cut_s, target


def find_homoclinics(model, upo, lift_turns=1, n_seeds=200, eps=1e-5,
                     cut_cfg=None, cfg=None, tol=_MERGE_TOL, map_fn=None):
    """Verified homoclinic connections of one UPO.

    Builds the section cuts via :func:`homoclinic_cuts`, then refines
    every cut intersection by two-phase shooting.  Returns refined,
    deduplicated connections ordered by section point; candidates whose
    refinement or asymptotic verification fails are dropped (they are
    spurious by construction).

    The seed amplitude default (1e-5) is larger than the tube default:
    the refinement mismatch bottoms out at machine roundoff amplified
    over the seed-to-section flight, and the shorter flight keeps that
    floor a factor of a few below the 1e-8 mismatch tolerance.
    """
    cfg = cfg or DEFAULT_CONFIG
    cut_cfg = cut_cfg or cfg
    cut_u, cut_s, target = homoclinic_cuts(
        model, upo, lift_turns=lift_turns, n_seeds=n_seeds, eps=eps,
        cut_cfg=cut_cfg, map_fn=map_fn)

    refined = []
    for cand in intersect_cuts(cut_u, cut_s, tol=tol):
        try:
            refined.append(refine_connection(model, cand, upo, target,
                                             cfg=cfg))
        except (RefinementDiverged, AsymptoticsFailed, NoEventWithinMaxTime):
            continue
    refined = _dedupe_connections(refined)
    refined.sort(key=lambda c: (round(c.point[0], 9), round(c.point[1], 9)))
    _pair_partners(refined)
    return refined


def find_heteroclinics(model, upo_src, upo_dst, energy=None, n_seeds=200,
                       eps=1e-5, cut_cfg=None, cfg=None, tol=_MERGE_TOL,
                       map_fn=None):
    """Verified heteroclinic connections between two distinct UPOs.

    Both tubes are globalized to the diagonal section (theta1 = theta2)
    for the pendulum models (y=0 for the PCR3BP); the crossing
    direction points from the source side of the section toward the
    target side.  An empty result is a valid outcome.  Seed amplitude
    defaults to 1e-5 for the same mismatch-floor reason as
    :func:`find_homoclinics`.
    """
    cfg = cfg or DEFAULT_CONFIG
    cut_cfg = cut_cfg or cfg
    if abs(upo_src.energy - upo_dst.energy) > 1e-8:
        raise SaddleTubesError("heteroclinic endpoints differ in energy")
    if energy is not None and abs(upo_src.energy - energy) > 1e-8:
        raise SaddleTubesError("orbits are not at the requested energy")
    if model.kind == "pcr3bp":
        section = SectionSpec.pcr3bp_y0()
        direction = None
    else:
        section = SectionSpec.diagonal()
        g_src = section.g(upo_src.anchor)
        g_dst = section.g(upo_dst.anchor)
        if g_src == 0.0 or g_dst == 0.0 or np.sign(g_src) == np.sign(g_dst):
            raise SaddleTubesError(
                "orbit lifts are not adjacent across the diagonal section")
        direction = +1 if g_dst > 0 else -1

    sign_u = _select_branch_sign(model, upo_src, UNSTABLE, section, direction,
                                 cut_cfg, eps)
    sign_s = _select_branch_sign(model, upo_dst, STABLE, section, direction,
                                 cut_cfg, eps)
    br_u = seed_tube(model, upo_src, UNSTABLE, sign_u, eps, n_seeds,
                     cfg=cut_cfg)
    br_s = seed_tube(model, upo_dst, STABLE, sign_s, eps, n_seeds, cfg=cut_cfg)
    cut_u = globalize_tube(model, br_u, section, crossing_direction=direction,
                           cfg=cut_cfg, map_fn=map_fn)
    cut_s = globalize_tube(model, br_s, section, crossing_direction=direction,
                           cfg=cut_cfg, map_fn=map_fn)

    refined = []
    for cand in intersect_cuts(cut_u, cut_s, tol=tol):
        try:
            refined.append(refine_connection(model, cand, upo_src, upo_dst,
                                             cfg=cfg))
        except (RefinementDiverged, AsymptoticsFailed, NoEventWithinMaxTime):
            continue
    refined = _dedupe_connections(refined)
    refined.sort(key=lambda c: (round(c.point[0], 9), round(c.point[1], 9)))
    _pair_partners(refined)
    return refined


def heteroclinics_between_saddles(model, saddle_src, saddle_dst, energy,
                                  **kwargs):
    """Heteroclinics between the UPO families of two index-1 saddles.

    Saddles may be Equilibrium objects or labels ("DownUp", "L1", ...).
    Returns [] when the energy is below either saddle — no UPO exists
    there, so no connection can either.
    """
    if isinstance(saddle_src, str):
        saddle_src = equilibrium_by_label(model, saddle_src)
    if isinstance(saddle_dst, str):
        saddle_dst = equilibrium_by_label(model, saddle_dst)
    try:
        upo_src = upo_at_energy(model, saddle_src, energy)
        upo_dst = upo_at_energy(model, saddle_dst, energy)
    except EnergyBelowSaddle:
        return []
    return find_heteroclinics(model, upo_src, upo_dst, energy, **kwargs)


def reverse_connection(model, conn, cfg=None, verify=True,
                       asym_periods=5, asym_tol=1e-3):
    """The reverser image of a connection: a valid connection with the
    roles of source and target exchanged."""
    cfg = cfg or DEFAULT_CONFIG
    R = model.reversal_matrix
    state_r = R @ conn.state
    section = conn.section
    g_res = abs(section.g(state_r))
    if g_res > 1e-8:
        raise SaddleTubesError(
            "reversed state off the section by %.3e — section not "
            "reverser-invariant?" % g_res)
    times = -conn.trajectory.times[::-1]
    states = conn.trajectory.states[::-1] @ R.T
    d_fwd = d_bwd = None
    if verify:
        d_fwd = _min_distance_to_orbit(model, state_r, conn.source_upo, +1,
                                       asym_periods, cfg)
        if d_fwd > asym_tol:
            raise AsymptoticsFailed("forward", d_fwd, asym_tol)
        d_bwd = _min_distance_to_orbit(model, state_r, conn.target_upo, -1,
                                       asym_periods, cfg)
        if d_bwd > asym_tol:
            raise AsymptoticsFailed("backward", d_bwd, asym_tol)
    rot = None if conn.rotation_float is None else -conn.rotation_float
    # R maps the orbit point gamma(phi) to gamma(-phi) (UPOs are anchored
    # on the reverser's fixed set), so contact phases negate and swap roles
    ph_u = ph_s = None
    if conn.phase_s is not None:
        ph_u = (-conn.phase_s) % conn.target_upo.period
    if conn.phase_u is not None:
        ph_s = (-conn.phase_u) % conn.source_upo.period
    return ConnectionOrbit(
        kind=conn.kind,
        source_upo=conn.target_upo,
        target_upo=conn.source_upo,
        section=section,
        point=section.plane_coords(state_r),
        state=state_r,
        trajectory=SampledPath(times=times, states=states),
        symmetric=conn.symmetric,
        rotation_signature=tuple(-x for x in conn.rotation_signature),
        mismatch=conn.mismatch,
        rotation_float=rot,
        asym_forward_min=d_fwd,
        asym_backward_min=d_bwd,
        low_confidence=conn.low_confidence,
        phase_u=ph_u,
        phase_s=ph_s,
        flight_u=conn.flight_s,
        flight_s=conn.flight_u,
    )
