"""Connection graphs, walks on them, and shadowing orbits.

Vertices of the graph are UPOs at one energy (angle lifts identified);
edges are refined connections.  A walk with prescribed wrap counts is
realized as a genuine trajectory by multiple shooting: node chains are
seeded from the stored connection paths plus whole-orbit wraps, matched
segment-to-segment by a damped Gauss-Newton iteration, with local
stable/unstable manifold boundary conditions for connecting orbits and
a lifted-closure condition for periodic ones.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NewtonDiverged, SaddleTubesError, WrapsTooSmall
from .integrate import DEFAULT_CONFIG, integrate, integrate_variational
from .manifolds import UNSTABLE, STABLE

__all__ = [
    "ConnectionGraph",
    "Walk",
    "ShadowSpec",
    "ShadowOrbit",
    "build_graph",
    "enumerate_walks",
    "construct_shadow_orbit",
    "verify_shadow_periodicity",
    "N_MIN",
    "DWELL_RADIUS",
]

N_MIN = 2
DWELL_RADIUS = 0.02
_TWO_PI = 2.0 * math.pi


def _vertex_key(upo):
    """Identify a UPO modulo whole turns of its angle coordinates."""
    a = np.array(upo.anchor, dtype=float)
    if upo.model_kind != "pcr3bp":
        a[0] = a[0] % _TWO_PI
        a[1] = a[1] % _TWO_PI
    return (upo.saddle_label,) + tuple(np.round(a, 8))


@dataclass
class Edge:
    connection: object
    source: int
    target: int


@dataclass
class ConnectionGraph:
    vertices: list          # PeriodicOrbit, one per lift-class
    edges: list             # Edge, deterministic order
    energy: float

    def out_edges(self, v):
        return [i for i, e in enumerate(self.edges) if e.source == v]

    def vertex_index(self, upo):
        key = _vertex_key(upo)
        for i, v in enumerate(self.vertices):
            if _vertex_key(v) == key:
                return i
        raise KeyError("UPO %r is not a vertex" % (key,))


@dataclass
class Walk:
    edges: tuple            # edge indices
    vertices: tuple         # implied vertex sequence, length k+1
    closed: bool


def build_graph(upos, connections):
    """Directed connection multigraph (loops and parallel edges allowed).

    Vertices are the given UPOs with angle lifts identified; every
    connection must run between two of them at the common energy.
    """
    if not upos:
        raise SaddleTubesError("build_graph needs at least one UPO")
    energy = upos[0].energy
    keys = {}
    vertices = []
    for u in upos:
        if abs(u.energy - energy) > 1e-8:
            raise SaddleTubesError("vertex energies differ: %.6g vs %.6g"
                                   % (u.energy, energy))
        k = _vertex_key(u)
        if k not in keys:
            keys[k] = len(vertices)
            vertices.append(u)
    edges = []
    for c in connections:
        if abs(c.source_upo.energy - energy) > 1e-8:
            raise SaddleTubesError(
                "connection at H=%.6g does not match graph energy %.6g"
                % (c.source_upo.energy, energy))
        ks, kt = _vertex_key(c.source_upo), _vertex_key(c.target_upo)
        if ks not in keys or kt not in keys:
            raise SaddleTubesError(
                "connection endpoints are not among the given UPOs")
        edges.append(Edge(connection=c, source=keys[ks], target=keys[kt]))
    edges.sort(key=lambda e: (
        e.source, e.target, tuple(e.connection.rotation_signature),
        tuple(np.round(e.connection.point, 9))))
    return ConnectionGraph(vertices=vertices, edges=edges, energy=energy)


def enumerate_walks(graph, k, start_vertex=None, closed_only=False):
    """All length-k edge sequences with composing endpoints.

    Deterministic lexicographic order in edge indices.  start_vertex may
    be a vertex index or a UPO.
    """
    if k < 1:
        raise ValueError("walk length k must be >= 1")
    if start_vertex is not None and \
            not isinstance(start_vertex, (int, np.integer)):
        start_vertex = graph.vertex_index(start_vertex)
    walks = []

    def extend(seq, vseq):
        if len(seq) == k:
            closed = vseq[-1] == vseq[0]
            if closed_only and not closed:
                return
            walks.append(Walk(edges=tuple(seq), vertices=tuple(vseq),
                              closed=closed))
            return
        for i, e in enumerate(graph.edges):
            if e.source != vseq[-1]:
                continue
            extend(seq + [i], vseq + [e.target])

    for i, e in enumerate(graph.edges):
        if start_vertex is not None and e.source != start_vertex:
            continue
        extend([i], [e.source, e.target])
    return walks


@dataclass
class ShadowSpec:
    """An itinerary: a walk plus wrap counts.

    wraps[i] is the number of whole turns around the orbit reached after
    edge i — one entry per edge for the periodic kind (the last entry
    wraps the closing vertex), one per intermediate vertex (k-1 entries)
    for the connecting kind.
    """
    graph: ConnectionGraph
    walk: Walk
    wraps: tuple
    kind: str               # "periodic" | "connecting"


@dataclass
class ShadowOrbit:
    spec: ShadowSpec
    nodes: np.ndarray        # matched shooting nodes
    durations: np.ndarray    # (m,) segment flight times
    times: np.ndarray        # dense concatenated trajectory
    states: np.ndarray
    residual: float          # final sup-norm shooting residual
    closure_residual: float  # seam mismatch at the final join
    dwell_counts: tuple      # anchor-disc returns per wrapped vertex
    rotation_offset: np.ndarray   # state offset over one itinerary pass
    total_time: float
    boundary_phases: tuple = None   # (phi_u, phi_s), connecting kind only


def _snap_turns(delta, model_kind):
    """Validate an offset as whole angle turns; return it snapped exact."""
    delta = np.asarray(delta, dtype=float)
    if np.max(np.abs(delta[2:])) > 1e-6:
        raise SaddleTubesError("lift offset has velocity components")
    if model_kind == "pcr3bp":
        if np.max(np.abs(delta[:2])) > 1e-6:
            raise SaddleTubesError("PCR3BP orbits admit no lift offsets")
        return np.zeros(4)
    turns = delta[:2] / _TWO_PI
    r = np.round(turns)
    if np.max(np.abs(turns - r)) > 1e-6:
        raise SaddleTubesError("offset %r is not whole angle turns" % (delta,))
    return np.array([r[0] * _TWO_PI, r[1] * _TWO_PI, 0.0, 0.0])


class _OrbitFrame:
    """Cached one-period dense variational flow of a UPO.

    Other angle lifts of the same orbit are served by shifting: the
    caller passes the anchor it wants the data expressed at.
    """

    def __init__(self, model, orbit, cfg):
        self.model_kind = model.kind
        self.orbit = orbit
        self.period = orbit.period
        _, self.monodromy, self.phi = integrate_variational(
            model, orbit.anchor, orbit.period, cfg, dense=True)

    def _shift(self, want_anchor):
        return _snap_turns(np.asarray(want_anchor) - self.orbit.anchor,
                           self.model_kind)

    def point_at(self, phase, want_anchor):
        x, _ = self.phi(phase % self.period)
        return x + self._shift(want_anchor)

    def seed_at(self, phase, stability, sign, eps, want_anchor):
        v0 = self.orbit.unstable_dir if stability == UNSTABLE \
            else self.orbit.stable_dir
        x, M = self.phi(phase % self.period)
        d = M @ v0
        return x + sign * eps * d / np.linalg.norm(d) \
            + self._shift(want_anchor)


def _interp_path(path, t):
    """Linear interpolation of a SampledPath at times t (clipped)."""
    t = np.clip(t, path.times[0], path.times[-1])
    out = np.empty((len(t), path.states.shape[1]))
    for j in range(path.states.shape[1]):
        out[:, j] = np.interp(t, path.times, path.states[:, j])
    return out


def _distance_to_loop(points, loop):
    """Min distance from each point to a closed polyline in R^n.

    Point-to-segment, not point-to-vertex: orbit samples are far apart
    in the velocity coordinates, so vertex distance has a spurious
    floor of half the sample spacing.
    """
    a = loop
    b = np.roll(loop, -1, axis=0)
    ab = b - a                                   # (M, n)
    denom = np.einsum("ij,ij->i", ab, ab)
    denom[denom == 0.0] = 1.0
    ap = points[:, None, :] - a[None]            # (N, M, n)
    t = np.clip(np.einsum("imj,mj->im", ap, ab) / denom, 0.0, 1.0)
    closest = ap - t[..., None] * ab[None]
    return np.sqrt(np.min(np.einsum("imj,imj->im", closest, closest),
                          axis=1))


def _assemble_chain(model, spec, cfg):
    """Initial shooting chain: nodes, durations (durations[i] is the
    flight from node i to node i+1; the final target is the lifted
    closure for the periodic kind, the last listed node otherwise),
    lift offsets, wrapped anchors, and orbit frames."""
    graph, walk, wraps = spec.graph, spec.walk, spec.wraps
    conns = [graph.edges[i].connection for i in walk.edges]
    k = len(conns)
    periodic = spec.kind == "periodic"

    frames = {}

    def frame_of(upo):
        key = _vertex_key(upo)
        if key not in frames:
            frames[key] = _OrbitFrame(model, upo, cfg)
        return frames[key]

    lifts = [np.zeros(4)]
    for i in range(1, k):
        prev_tgt = conns[i - 1].target_upo.anchor + lifts[i - 1]
        lifts.append(_snap_turns(prev_tgt - conns[i].source_upo.anchor,
                                 model.kind))
    closure = conns[-1].target_upo.anchor + lifts[-1] \
        - conns[0].source_upo.anchor
    rotation_offset = _snap_turns(closure, model.kind) if periodic \
        else np.asarray(closure, dtype=float)

    nodes, durations, wrap_anchors, wrap_orbits = [], [], [], []
    for i, conn in enumerate(conns):
        path = conn.trajectory
        t0, t1 = float(path.times[0]), float(path.times[-1])
        t_bar = 0.5 * (conn.source_upo.period + conn.target_upo.period)
        q = max(4, int(math.ceil((t1 - t0) / (0.35 * t_bar))))
        tgrid = np.linspace(t0, t1, q + 1)
        pts = _interp_path(path, tgrid) + lifts[i]
        for j in range(q):
            nodes.append(pts[j])
            durations.append(tgrid[j + 1] - tgrid[j])
        if i == k - 1 and not periodic:
            nodes.append(pts[q])    # stable-manifold boundary node
            break
        # wrap chain around the reached orbit, from the arrival phase to
        # the next connection's departure phase plus wraps[i] full turns
        frame = frame_of(conn.target_upo)
        want_anchor = conn.target_upo.anchor + lifts[i]
        wrap_anchors.append(np.asarray(want_anchor, dtype=float))
        T = frame.period
        wrap_orbits.append(np.array(
            [frame.point_at(s, want_anchor)
             for s in np.linspace(0.0, T, 160, endpoint=False)]))
        phi_a = conn.phase_s
        phi_d = conns[(i + 1) % k].phase_u
        D = wraps[i] * T + ((phi_d - phi_a) % T)
        n = max(2, int(round(D / (0.25 * T))))
        sgrid = np.linspace(0.0, D, n + 1)
        nodes.append(pts[q])        # chain enters the wrap at the arrival seed
        durations.append(sgrid[1] - sgrid[0])
        for j in range(1, n):
            nodes.append(frame.point_at(phi_a + sgrid[j], want_anchor))
            durations.append(sgrid[j + 1] - sgrid[j])
        # sgrid[n] lands on the next connection's departure seed (or the
        # lifted closure of node 0), which the next loop pass appends

    return {
        "nodes": np.array(nodes),
        "durations": np.array(durations),
        "rotation_offset": rotation_offset,
        "wrap_anchors": wrap_anchors,
        "wrap_orbits": wrap_orbits,
        "lifts": lifts,
        "conns": conns,
        "frame_of": frame_of,
    }


def construct_shadow_orbit(model, spec, cfg=None, eps=1e-6, n_min=N_MIN,
                           delta=DWELL_RADIUS, tol=1e-8, max_iter=40):
    """Numerically realize an itinerary as a trajectory.

    Multiple shooting over a node chain assembled from the stored
    connection trajectories plus whole-orbit wraps.  Unknowns are the
    nodes and segment durations; equations are state continuity at the
    joints, one transversality plane per free node (removing the
    time-shift family), and either lifted closure plus an energy pin
    (periodic kind) or local-manifold boundary conditions with the two
    contact phases as extra unknowns (connecting kind).  Damped
    Gauss-Newton on the stacked least-squares system; convergence is a
    sup-norm residual below tol.
    """
    cfg = cfg or DEFAULT_CONFIG
    walk, wraps = spec.walk, spec.wraps
    k = len(walk.edges)
    periodic = spec.kind == "periodic"
    if spec.kind not in ("periodic", "connecting"):
        raise ValueError("ShadowSpec.kind must be 'periodic' or 'connecting'")
    if periodic and not walk.closed:
        raise SaddleTubesError("periodic shadowing needs a closed walk")
    need = k if periodic else k - 1
    if len(wraps) != need:
        raise SaddleTubesError("expected %d wrap counts, got %d"
                               % (need, len(wraps)))
    if any(int(n) < n_min for n in wraps):
        raise WrapsTooSmall(wraps, n_min)

    info = _assemble_chain(model, spec, cfg)
    X = info["nodes"].copy()
    tau = info["durations"].copy()
    m = len(tau)
    offset = info["rotation_offset"]
    h_ref = spec.graph.energy
    conns = info["conns"]
    frame_of = info["frame_of"]
    n_nodes = len(X)            # m for periodic, m+1 for connecting

    if not periodic:
        src, tgt = conns[0].source_upo, conns[-1].target_upo
        f_src, f_tgt = frame_of(src), frame_of(tgt)
        a_src = src.anchor
        a_tgt = tgt.anchor + info["lifts"][-1]
        phi0_u, phi0_s = float(conns[0].phase_u), float(conns[-1].phase_s)

        def boundary_sign(frame, phase, stability, want_anchor, endpoint):
            dp = np.linalg.norm(
                frame.seed_at(phase, stability, +1, eps, want_anchor)
                - endpoint)
            dm = np.linalg.norm(
                frame.seed_at(phase, stability, -1, eps, want_anchor)
                - endpoint)
            return +1 if dp <= dm else -1

        sign_u = boundary_sign(f_src, phi0_u, UNSTABLE, a_src,
                               conns[0].trajectory.states[0])
        sign_s = boundary_sign(f_tgt, phi0_s, STABLE, a_tgt,
                               conns[-1].trajectory.states[-1]
                               + info["lifts"][-1])

        def seed_u(phi):
            return f_src.seed_at(phi, UNSTABLE, sign_u, eps, a_src)

        def seed_s(phi):
            return f_tgt.seed_at(phi, STABLE, sign_s, eps, a_tgt)

    X_bar = X.copy()
    F_bar = np.array([model.vector_field(x) for x in X_bar])
    F_bar /= np.linalg.norm(F_bar, axis=1)[:, None]

    def free_nodes():
        if periodic:
            return range(n_nodes)
        return range(1, n_nodes - 1)

    def residual_vec(X, tau, phis):
        Xw = X.copy()
        if not periodic:
            Xw[0] = seed_u(phis[0])
            Xw[-1] = seed_s(phis[1])
        rows, ends = [], []
        for i in range(m):
            xf, Mf = integrate_variational(model, Xw[i], float(tau[i]), cfg)
            ends.append((xf, Mf))
            nxt = (Xw[0] + offset) if (periodic and i == m - 1) else Xw[i + 1]
            rows.append(xf - nxt)
        for i in free_nodes():
            rows.append([F_bar[i] @ (Xw[i] - X_bar[i])])
        if periodic:
            rows.append([model.hamiltonian(Xw[0]) - h_ref])
        return np.concatenate([np.atleast_1d(np.asarray(r)) for r in rows]), \
            ends, Xw

    n_free = len(list(free_nodes()))
    n_phi = 0 if periodic else 2
    ncol = 4 * n_nodes + m + n_phi
    nrow = 4 * m + n_free + (1 if periodic else 0)

    def jacobian(ends, Xw, phis):
        J = np.zeros((nrow, ncol))
        cols = lambda i: slice(4 * i, 4 * i + 4)
        tau_col = lambda i: 4 * n_nodes + i
        if not periodic:
            dphi = 1e-7 * max(1.0, f_src.period)
            du = (seed_u(phis[0] + dphi) - seed_u(phis[0] - dphi)) / (2 * dphi)
            ds = (seed_s(phis[1] + dphi) - seed_s(phis[1] - dphi)) / (2 * dphi)
        r = 0
        for i in range(m):
            xf, Mf = ends[i]
            rows = slice(r, r + 4)
            if (not periodic) and i == 0:
                J[rows, 4 * n_nodes + m] = Mf @ du
            else:
                J[rows, cols(i)] = Mf
            J[rows, tau_col(i)] = model.vector_field(xf)
            if periodic and i == m - 1:
                J[rows, cols(0)] += -np.eye(4)
            elif (not periodic) and i == m - 1:
                J[rows, 4 * n_nodes + m + 1] = -ds
            else:
                J[rows, cols(i + 1)] += -np.eye(4)
            r += 4
        for i in free_nodes():
            J[r, cols(i)] = F_bar[i]
            r += 1
        if periodic:
            J[r, cols(0)] = model.grad_hamiltonian(Xw[0])
        return J

    phis = np.zeros(2) if periodic else np.array([phi0_u, phi0_s])
    r, ends, Xw = residual_vec(X, tau, phis)
    for _ in range(max_iter):
        sup = float(np.max(np.abs(r)))
        if sup < tol:
            break
        J = jacobian(ends, Xw, phis)
        dz, *_ = np.linalg.lstsq(J, -r, rcond=None)
        dX = dz[:4 * n_nodes].reshape(n_nodes, 4)
        dtau = dz[4 * n_nodes:4 * n_nodes + m]
        dphi_vec = dz[4 * n_nodes + m:] if not periodic else np.zeros(2)
        alpha, accepted = 1.0, False
        for _ in range(10):
            X_try = X + alpha * dX
            tau_try = np.maximum(tau + alpha * dtau, 1e-3)
            phis_try = phis + alpha * dphi_vec
            r_try, ends_try, Xw_try = residual_vec(X_try, tau_try, phis_try)
            if np.linalg.norm(r_try) < (1 - 1e-4 * alpha) * np.linalg.norm(r):
                X, tau, phis = X_try, tau_try, phis_try
                r, ends, Xw = r_try, ends_try, Xw_try
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
    sup = float(np.max(np.abs(r)))
    if sup >= tol:
        joint = int(np.argmax(np.abs(r[:4 * m])) // 4)
        raise NewtonDiverged(
            "shadow solve stalled (worst joint %d of %d)" % (joint, m),
            residual=sup)

    times, states = [], []
    t_acc = 0.0
    for i in range(m):
        traj = integrate(model, Xw[i], (0.0, float(tau[i])), cfg)
        tloc = np.linspace(0.0, float(tau[i]), 120, endpoint=(i == m - 1))
        states.append(traj.state_at(tloc))
        times.append(t_acc + tloc)
        t_acc += float(tau[i])
    times = np.concatenate(times)
    states = np.vstack(states)

    target_last = (Xw[0] + offset) if periodic else Xw[-1]
    closure = float(np.max(np.abs(ends[-1][0] - target_last)))

    dwell = []
    for anchor, orbit_pts in zip(info["wrap_anchors"], info["wrap_orbits"]):
        f_a = model.vector_field(anchor)
        f_a = f_a / np.linalg.norm(f_a)
        g = (states - anchor) @ f_a
        # one count per revolution: ascending crossings of the anchor
        # plane while the trajectory hugs the wrapped orbit (distance to
        # the orbit curve, not to the anchor point -- the pass by the
        # point itself is too brief for sampled detection)
        d = _distance_to_loop(states, orbit_pts)
        near = d < delta
        up = np.nonzero((g[:-1] < 0.0) & (g[1:] >= 0.0))[0]
        dwell.append(int(sum(1 for j in up if near[j] and near[j + 1])))

    return ShadowOrbit(
        spec=spec,
        nodes=Xw,
        durations=tau.copy(),
        times=times,
        states=states,
        residual=sup,
        closure_residual=closure,
        dwell_counts=tuple(dwell),
        rotation_offset=np.asarray(offset, dtype=float),
        total_time=float(np.sum(tau)),
        boundary_phases=None if periodic
        else (float(phis[0]), float(phis[1])),
    )


def verify_shadow_periodicity(model, shadow, n_periods=3, tol=1e-6, cfg=None):
    """Segment-wise re-integration check over n_periods itinerary passes.

    A single continuous re-integration over several periods is
    meaningless for these orbits (per-period error amplification is the
    unstable Floquet multiplier, ~1e4 here, so any closure defect
    saturates within two periods); the faithful check re-flows every
    segment of every pass from its lift-shifted node and measures all
    seam mismatches.  Returns the worst seam error; raises if over tol.
    """
    if shadow.spec.kind != "periodic":
        raise SaddleTubesError("periodicity check applies to periodic shadows")
    cfg = cfg or DEFAULT_CONFIG
    X, tau = shadow.nodes, shadow.durations
    m = len(tau)
    offset = shadow.rotation_offset
    worst = 0.0
    for rep in range(n_periods):
        shift = rep * offset
        for i in range(m):
            xf, _ = integrate_variational(model, X[i] + shift, float(tau[i]),
                                          cfg)
            nxt = X[0] + offset + shift if i == m - 1 else X[i + 1] + shift
            worst = max(worst, float(np.max(np.abs(xf - nxt))))
    if worst > tol:
        raise SaddleTubesError(
            "segment-wise periodicity residual %.3e exceeds %.3e"
            % (worst, tol))
    return worst
