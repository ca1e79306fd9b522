"""Adaptive integration with dense output, event location, and
variational (monodromy) propagation.

Everything funnels through scipy's DOP853 (8th-order embedded
Runge-Kutta with dense output).  Backward integration is forward
integration of the negated vector field, so there is a single code
path; trajectory times are reported decreasing in that case.

Energy conservation is treated as a hard postcondition: every returned
trajectory is checked against ``cfg.drift_tol`` and a violation raises
:class:`~saddletubes.errors.DriftExceeded` rather than silently
returning garbage.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DriftExceeded, MaxStepsExceeded, NoEventWithinMaxTime

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "CrossingEvent",
    "integrate",
    "integrate_to_event",
    "integrate_variational",
    "flow",
    "trajectory_to_csv",
    "DEFAULT_CONFIG",
]

_START_GUARD = 1e-9  # crossings closer than this to t0 are re-detections


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and budgets for one integration.

    rel_tol / abs_tol feed the embedded error control; max_step caps the
    step size; max_time bounds event searches; drift_tol is the maximum
    tolerated |H(t) - H(0)| before the run is declared invalid.
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    max_step: float = math.inf
    max_time: float = 50.0
    drift_tol: float = 1e-8

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "max_time", "drift_tol"):
            if not getattr(self, name) > 0.0:
                raise ValueError("IntegratorConfig.%s must be positive" % name)


DEFAULT_CONFIG = IntegratorConfig()


@dataclass
class Trajectory:
    """Sampled solution with access to the dense interpolant.

    ``times`` are the solver's accepted steps (strictly increasing for
    forward runs, strictly decreasing for backward ones); ``states`` the
    matching 4-dim states.
    """

    times: np.ndarray
    states: np.ndarray
    model_kind: str
    energy_at_start: float
    energy_at_end: float
    _segments: list = field(default_factory=list, repr=False)  # (tau_offset, OdeSolution)
    _t0: float = 0.0
    _tdir: int = 1

    def __len__(self):
        return len(self.times)

    @property
    def t_final(self):
        return float(self.times[-1])

    @property
    def final_state(self):
        return self.states[-1].copy()

    def state_at(self, t):
        """Evaluate the dense interpolant at time t (scalar or array)."""
        if not self._segments:
            raise ValueError("trajectory carries no dense output")
        t = np.asarray(t, dtype=float)
        tau = (t - self._t0) * self._tdir
        scalar = tau.ndim == 0
        tau = np.atleast_1d(tau)
        out = np.empty((tau.size, 4))
        for i, tk in enumerate(tau):
            seg = None
            for off, sol in self._segments:
                if tk <= off + sol.t_max + 1e-12:
                    seg = (off, sol)
                    break
            if seg is None:
                seg = self._segments[-1]
            off, sol = seg
            out[i] = sol(min(max(tk - off, sol.t_min), sol.t_max))
        return out[0] if scalar else out


@dataclass
class CrossingEvent:
    """A refined section crossing: |g(state)| <= 1e-10 guaranteed."""

    state: np.ndarray
    time: float
    direction: int
    g_residual: float = 0.0


def _drift_check(model, states, h0, tol, times):
    worst = 0.0
    worst_t = None
    for k in range(len(states)):
        d = abs(model.hamiltonian(states[k]) - h0)
        if d > worst:
            worst, worst_t = d, times[k]
    if worst > tol:
        raise DriftExceeded(worst, tol, worst_t)
    return worst


def _rhs(model, sgn):
    vf = model.vector_field
    if sgn > 0:
        return lambda t, y: vf(y)
    return lambda t, y: -vf(y)


def integrate(model, s0, t_span, cfg=None):
    """Integrate from s0 over t_span = (t0, t1); t1 < t0 runs backward.

    Returns a :class:`Trajectory`; raises DriftExceeded or
    MaxStepsExceeded on failure.
    """
    cfg = cfg or DEFAULT_CONFIG
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 == t0:
        raise ValueError("degenerate time span")
    s0 = np.asarray(s0, dtype=float)
    tdir = 1 if t1 > t0 else -1
    span = abs(t1 - t0)
    sol = solve_ivp(
        _rhs(model, tdir),
        (0.0, span),
        s0,
        method="DOP853",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        dense_output=True,
    )
    if sol.status < 0:
        raise MaxStepsExceeded(sol.message)
    times = t0 + tdir * sol.t
    states = sol.y.T
    h0 = model.hamiltonian(s0)
    _drift_check(model, states, h0, cfg.drift_tol, times)
    return Trajectory(
        times=times,
        states=states,
        model_kind=model.kind,
        energy_at_start=h0,
        energy_at_end=model.hamiltonian(states[-1]),
        _segments=[(0.0, sol.sol)],
        _t0=t0,
        _tdir=tdir,
    )


def flow(model, s0, T, cfg=None):
    """Endpoint of the time-T flow (T may be negative)."""
    if T == 0.0:
        return np.asarray(s0, dtype=float).copy()
    return integrate(model, s0, (0.0, T), cfg).final_state


def _refine_crossing(section, sol, tau_est, tau_lo, tau_hi, model, sgn):
    """Polish the crossing time on the dense interpolant.

    Newton from the solver's estimate, guarded by the bracketing
    interval; plain bisection fallback.  Returns (tau, state)."""
    g = lambda tau: section.g(sol(tau))
    tau = tau_est
    glo, ghi = g(tau_lo), g(tau_hi)
    for _ in range(60):
        val = g(tau)
        if abs(val) <= 1e-13:
            break
        s = sol(tau)
        # dg/dtau along the integrated (possibly negated) field
        dval = float(section.grad @ (sgn * model.vector_field(s)))
        step_ok = False
        if dval != 0.0:
            t_new = tau - val / dval
            if tau_lo < t_new < tau_hi:
                tau = t_new
                step_ok = True
        if not step_ok:
            # bisection step on the current bracket
            if glo == 0.0:
                tau = tau_lo
                break
            mid = 0.5 * (tau_lo + tau_hi)
            if g(mid) * glo <= 0.0:
                tau_hi = mid
            else:
                tau_lo, glo = mid, g(mid)
            tau = 0.5 * (tau_lo + tau_hi)
        if tau_hi - tau_lo < 1e-15 * max(1.0, tau_hi):
            break
    state = sol(tau)
    return tau, state


def integrate_to_event(model, s0, section, direction=None, cfg=None,
                       skip_count=0, tdir=1):
    """Flow to the (skip_count+1)-th matching crossing of a section.

    Parameters
    ----------
    section : SectionSpec or PlaneSection
    direction : {+1, -1, None}
        Sign of dg/dt (real time) at accepted crossings; None falls back
        to the section's own crossing_direction (None = either sign).
    tdir : {+1, -1}
        Time direction: -1 integrates backward (stable-manifold runs).
    skip_count : int
        Number of matching crossings to pass over before stopping.

    Returns (CrossingEvent, Trajectory).  Crossings within 1e-9 time
    units of the start are ignored.  Raises NoEventWithinMaxTime if the
    time budget cfg.max_time is exhausted first.
    """
    cfg = cfg or DEFAULT_CONFIG
    if direction is None:
        direction = section.crossing_direction
    if tdir not in (1, -1):
        raise ValueError("tdir must be +1 or -1")
    s0 = np.asarray(s0, dtype=float)
    wanted = int(skip_count) + 1
    if wanted < 1:
        raise ValueError("skip_count must be >= 0")
    h0 = model.hamiltonian(s0)
    rhs = _rhs(model, tdir)

    # crossing filter in integration time: dg/dtau = tdir * dg/dt
    ev_dir = 0 if direction is None else direction * tdir

    segments = []
    hits = []          # (global_tau, segment_index)
    tau_offset = 0.0
    y = s0
    guard_active = True
    while True:
        remaining = cfg.max_time - tau_offset
        if remaining <= 1e-12:
            break

        def event(t, yv):
            return section.g(yv)

        event.direction = ev_dir
        # small slack over the still-needed count: one crossing may be the
        # departure point itself and get filtered by the start guard
        event.terminal = (wanted - len(hits)) + 1
        sol = solve_ivp(
            rhs,
            (0.0, remaining),
            y,
            method="DOP853",
            rtol=cfg.rel_tol,
            atol=cfg.abs_tol,
            max_step=cfg.max_step,
            dense_output=True,
            events=[event],
        )
        if sol.status < 0:
            raise MaxStepsExceeded(sol.message)
        seg_index = len(segments)
        segments.append((tau_offset, sol.sol))
        for te in sol.t_events[0]:
            gtau = tau_offset + te
            if guard_active and gtau <= _START_GUARD:
                continue
            if not section.admissible(sol.sol(te)):
                continue
            hits.append((gtau, seg_index))
        if len(hits) >= wanted:
            break
        if sol.status == 0:  # ran out the horizon
            break
        # terminated on an event that did not survive filtering: resume
        tau_offset += sol.t[-1]
        y = sol.y[:, -1]
        guard_active = False

    if len(hits) < wanted:
        raise NoEventWithinMaxTime(cfg.max_time, found=len(hits), wanted=wanted)

    gtau, seg_index = hits[wanted - 1]
    off, dense = segments[seg_index]
    tau_local = gtau - off
    # bracket one mesh interval around the estimate for the polish
    mesh = dense.ts
    k = np.searchsorted(mesh, tau_local)
    lo = mesh[max(k - 1, 0)]
    hi = mesh[min(k, len(mesh) - 1)]
    if hi <= lo:
        lo, hi = max(tau_local - 1e-6, mesh[0]), min(tau_local + 1e-6, mesh[-1])
    tau_ref, state = _refine_crossing(section, dense, tau_local, lo, hi, model, tdir)
    gres = abs(section.g(state))
    if gres > 1e-10:
        raise RuntimeError(
            "event refinement stalled at |g| = %.3e (> 1e-10)" % gres
        )
    gdot = section.g_dot(model, state)
    event = CrossingEvent(
        state=np.asarray(state, dtype=float),
        time=tdir * (off + tau_ref),
        direction=1 if gdot > 0 else -1,
        g_residual=gres,
    )

    # assemble the trajectory up to the crossing
    tau_cross = off + tau_ref
    ts, ys = [], []
    for soff, sdense in segments:
        tloc = sdense.ts
        keep = tloc + soff < tau_cross - 1e-14
        for tk in tloc[keep]:
            ts.append(soff + tk)
            ys.append(sdense(tk))
    ts.append(tau_cross)
    ys.append(state)
    ts = np.asarray(ts)
    ys = np.asarray(ys)
    times = tdir * ts
    _drift_check(model, ys, h0, cfg.drift_tol, times)
    traj = Trajectory(
        times=times,
        states=ys,
        model_kind=model.kind,
        energy_at_start=h0,
        energy_at_end=model.hamiltonian(state),
        _segments=segments,
        _t0=0.0,
        _tdir=tdir,
    )
    return event, traj


def integrate_variational(model, s0, T, cfg=None, dense=False):
    """Flow endpoint and state-transition matrix over time T.

    Jointly integrates u' = F(u), M' = DF(u) M with M(0) = I.  Negative
    T propagates the reversed field (M is then the derivative of the
    backward flow map).  With dense=True also returns a callable
    ``phi(t) -> (state, M)`` valid on [0, T] (or [T, 0]).
    """
    cfg = cfg or DEFAULT_CONFIG
    s0 = np.asarray(s0, dtype=float)
    if T == 0.0:
        if dense:
            return s0.copy(), np.eye(4), lambda t: (s0.copy(), np.eye(4))
        return s0.copy(), np.eye(4)
    sgn = 1 if T > 0 else -1

    def rhs(t, u):
        x = u[:4]
        M = u[4:].reshape(4, 4)
        f = model.vector_field(x)
        J = model.jacobian(x)
        if sgn < 0:
            return np.concatenate([-f, (-J @ M).ravel()])
        return np.concatenate([f, (J @ M).ravel()])

    u0 = np.concatenate([s0, np.eye(4).ravel()])
    sol = solve_ivp(
        rhs,
        (0.0, abs(T)),
        u0,
        method="DOP853",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        dense_output=dense,
    )
    if sol.status < 0:
        raise MaxStepsExceeded(sol.message)
    states = sol.y[:4].T
    h0 = model.hamiltonian(s0)
    _drift_check(model, states, h0, cfg.drift_tol, sgn * sol.t)
    xT = sol.y[:4, -1].copy()
    M = sol.y[4:, -1].reshape(4, 4).copy()
    if not dense:
        return xT, M

    dense_sol = sol.sol

    def phi(t):
        u = dense_sol(min(max(sgn * t, 0.0), abs(T)))
        return u[:4], u[4:].reshape(4, 4)

    return xT, M, phi


def trajectory_to_csv(traj, model, path):
    """Write a trajectory as CSV with columns t,q1,q2,v1,v2,H."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "q1", "q2", "v1", "v2", "H"])
        for t, s in zip(traj.times, traj.states):
            w.writerow(
                ["%.17g" % t]
                + ["%.17g" % c for c in s]
                + ["%.17g" % model.hamiltonian(s)]
            )
