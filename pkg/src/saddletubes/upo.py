"""Symmetric unstable periodic orbits by differential correction.

The UPOs of interest live just above an index-1 saddle inside one
energy level and are symmetric under the model's reversal S: they cross
the fixed set Fix(S) perpendicular-like (both anti-fixed coordinates
zero) twice per period.  That symmetry collapses the boundary-value
problem to a half-period shot from Fix(S) back to Fix(S):

    unknowns   z = (u, w, T/2)   — the two free Fix(S) coordinates of
                                   the anchor plus the half period
    conditions H(anchor) = h, and both anti-fixed coordinates of the
               half-period flow image vanish.

Newton's method with Jacobians from the variational flow solves this in
a handful of iterations given the linear-center seed.  Families in
energy are grown by natural-parameter continuation with adaptive steps.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import EnergyBelowSaddle, NewtonDiverged, SaddleTubesError
from .equilibria import INDEX1
from .integrate import DEFAULT_CONFIG, flow, integrate, integrate_variational

__all__ = [
    "PeriodicOrbit",
    "find_symmetric_upo",
    "compute_floquet",
    "continue_family",
    "upo_at_energy",
    "sample_orbit",
]

_NEWTON_TOL = 1e-12
_NEWTON_ACCEPT = 1e-11
_NEWTON_MAX_ITER = 25
_CONTINUATION_FLOOR = 1e-5


@dataclass
class PeriodicOrbit:
    """A symmetric UPO anchored on Fix(S).

    multipliers are ordered by descending modulus: [lam_u, ~1, ~1,
    lam_s]; unstable_dir/stable_dir are unit eigenvectors of the
    one-period monodromy at the anchor.
    """

    model_kind: str
    saddle_label: str
    anchor: np.ndarray
    period: float
    energy: float
    multipliers: np.ndarray
    unstable_dir: np.ndarray
    stable_dir: np.ndarray

    @property
    def lam_u(self):
        return float(self.multipliers[0])

    @property
    def lam_s(self):
        return float(self.multipliers[3])

    def shifted(self, delta):
        """Copy re-anchored at an angle-lattice shifted lift.

        delta must vanish on non-angle coordinates and be a 2*pi
        multiple on angle coordinates; the dynamics (period, Floquet
        data) are equivariant under such shifts.
        """
        delta = np.asarray(delta, dtype=float)
        for i in range(4):
            if abs(delta[i]) < 1e-12:
                continue
            k = delta[i] / (2.0 * math.pi)
            if abs(k - round(k)) > 1e-9:
                raise ValueError(
                    "lift shift must be a multiple of 2*pi per angle, got %r"
                    % (delta,)
                )
        return replace(self, anchor=self.anchor + delta)


def _embed_anchor(model, u, w):
    a = np.zeros(4)
    a[model.fix_free[0]] = u
    a[model.fix_free[1]] = w
    return a


def _residual_and_jacobian(model, z, h, cfg):
    u, w, T2 = z
    anchor = _embed_anchor(model, u, w)
    i0, i1 = model.fix_zero
    j0, j1 = model.fix_free
    xT, M = integrate_variational(model, anchor, T2, cfg)
    fT = model.vector_field(xT)
    gH = model.grad_hamiltonian(anchor)
    r = np.array([model.hamiltonian(anchor) - h, xT[i0], xT[i1]])
    J = np.array(
        [
            [gH[j0], gH[j1], 0.0],
            [M[i0, j0], M[i0, j1], fT[i0]],
            [M[i1, j0], M[i1, j1], fT[i1]],
        ]
    )
    return r, J


def _newton_half_period(model, z0, h, cfg):
    """Solve the Fix(S)-to-Fix(S) system; returns converged z."""
    z = np.asarray(z0, dtype=float).copy()
    r, J = _residual_and_jacobian(model, z, h, cfg)
    nr = float(np.max(np.abs(r)))
    best = nr
    for _ in range(_NEWTON_MAX_ITER):
        if nr < _NEWTON_TOL:
            break
        try:
            dz = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise NewtonDiverged("singular correction Jacobian", residual=nr)
        alpha = 1.0
        accepted = False
        for _ in range(8):
            z_try = z + alpha * dz
            if z_try[2] <= 0.0:
                alpha *= 0.5
                continue
            try:
                r_try, J_try = _residual_and_jacobian(model, z_try, h, cfg)
            except SaddleTubesError:
                alpha *= 0.5
                continue
            nr_try = float(np.max(np.abs(r_try)))
            if nr_try < nr:
                z, r, J, nr = z_try, r_try, J_try, nr_try
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            # strict-descent line search exhausted: either converged to
            # the numerical floor or genuinely stuck
            break
        best = min(best, nr)
    if nr >= _NEWTON_ACCEPT:
        raise NewtonDiverged(
            "half-period correction did not converge", residual=nr,
            iterations=_NEWTON_MAX_ITER,
        )
    return z


def _floquet_from_monodromy(M, M_backward=None):
    """Multipliers and hyperbolic eigendirections of a monodromy matrix.

    The stable multiplier of a strongly hyperbolic orbit is the smallest
    eigenvalue of M, which double precision resolves only to ~eps*||M||
    — enough to ruin the lam_u*lam_s ~ 1 invariant once lam_u is large.
    Given a backward-flow monodromy based anywhere on the orbit (inverse
    spectrum, computed by an independent integration), lam_s is instead
    recovered as the reciprocal of its well-separated *dominant*
    eigenvalue, and the product check compares two independent
    measurements of the hyperbolic stretch.  The backward base point
    must NOT be reverser-symmetric: at such a point reversibility makes
    the backward pass the bitwise mirror of the forward one and the
    comparison degenerates to an identity.
    """
    evals, evecs = np.linalg.eig(M)
    order = np.argsort(-np.abs(evals))
    lu, t1, t2, ls = (evals[i] for i in order)
    if abs(lu.imag) > 1e-6 * abs(lu) or abs(lu) <= 1.0:
        raise SaddleTubesError(
            "orbit is not hyperbolic: leading multiplier %s" % lu
        )
    if M_backward is not None:
        ev_b = np.linalg.eigvals(M_backward)
        ls = 1.0 / ev_b[int(np.argmax(np.abs(ev_b)))]
    if abs(lu * ls - 1.0) > 1e-6:
        raise SaddleTubesError(
            "multiplier product lam_u*lam_s = %s deviates from 1" % (lu * ls)
        )
    for t in (t1, t2):
        if abs(t - 1.0) > 1e-4:
            raise SaddleTubesError(
                "trivial Floquet pair off unity: %s" % t
            )

    def _realvec(idx):
        v = np.real(evecs[:, idx])
        n = np.linalg.norm(v)
        if n == 0.0:
            raise SaddleTubesError("degenerate Floquet eigenvector")
        v = v / n
        k = int(np.argmax(np.abs(v)))
        return -v if v[k] < 0 else v

    multipliers = np.array([lu.real, t1.real, t2.real, ls.real])
    return multipliers, _realvec(order[0]), _realvec(order[3])


def _build_orbit(model, saddle_label, z, h, cfg):
    u, w, T2 = z
    anchor = _embed_anchor(model, u, w)
    period = 2.0 * T2
    xT, M = integrate_variational(model, anchor, period, cfg)
    closure = float(np.max(np.abs(xT - anchor)))
    if closure > 1e-9:
        raise NewtonDiverged(
            "periodic-orbit closure %.3e exceeds 1e-9" % closure, residual=closure
        )
    x_off = flow(model, anchor, 0.37 * period, cfg)
    _, Mb = integrate_variational(model, x_off, -period, cfg)
    multipliers, vu, vs = _floquet_from_monodromy(M, Mb)
    return PeriodicOrbit(
        model_kind=model.kind,
        saddle_label=saddle_label,
        anchor=anchor,
        period=period,
        energy=float(model.hamiltonian(anchor)),
        multipliers=multipliers,
        unstable_dir=vu,
        stable_dir=vs,
    )


def _energy_matched_amplitude(model, base_state, direction, h, a0):
    """1-d solve for the displacement along the center direction whose
    anchor hits the target energy; falls back to the linear guess."""
    def g(a):
        return model.hamiltonian(base_state + a * direction) - h

    a_lo, a_hi = 0.0, a0
    for _ in range(60):
        if g(a_hi) > 0.0:
            break
        a_lo, a_hi = a_hi, a_hi * 1.5
    else:
        return a0
    for _ in range(80):  # plain bisection; g is smooth and bracketed
        mid = 0.5 * (a_lo + a_hi)
        if g(mid) > 0.0:
            a_hi = mid
        else:
            a_lo = mid
        if a_hi - a_lo < 1e-14 * max(1.0, a_hi):
            break
    return 0.5 * (a_lo + a_hi)


def find_symmetric_upo(model, saddle, target_energy, amplitude_guess=None, cfg=None):
    """Differential correction for a symmetric UPO at one energy.

    Parameters
    ----------
    saddle : Equilibrium
        An Index1Saddle with its saddle_frame populated.
    target_energy : float
        Must exceed the saddle energy.
    amplitude_guess : float, optional
        Displacement along the center direction for the initial anchor;
        default sqrt(2 (h - h_saddle) / omega), then energy-matched.

    This is a single local solve seeded by the linear center; it is
    reliable close to the saddle.  Far above the saddle Newton can land
    on some other symmetric orbit — use upo_at_energy / continue_family
    there, which stay on the family by continuation.

    Raises EnergyBelowSaddle or NewtonDiverged.
    """
    cfg = cfg or DEFAULT_CONFIG
    if saddle.classification != INDEX1:
        raise ValueError(
            "need an index-1 saddle, got %s (%s)"
            % (saddle.label, saddle.classification)
        )
    h = float(target_energy)
    if h <= saddle.energy:
        raise EnergyBelowSaddle(h, saddle.energy)
    frame = saddle.saddle_frame
    a0 = amplitude_guess
    if a0 is None:
        a0 = math.sqrt(2.0 * (h - saddle.energy) / frame.omega)
    amp = _energy_matched_amplitude(model, saddle.state, frame.center_real, h, a0)
    anchor0 = saddle.state + amp * frame.center_real
    j0, j1 = model.fix_free
    z0 = np.array([anchor0[j0], anchor0[j1], math.pi / frame.omega])
    z = _newton_half_period(model, z0, h, cfg)
    return _build_orbit(model, saddle.label, z, h, cfg)


def compute_floquet(model, orbit, cfg=None):
    """Monodromy eigendata over one period at the orbit anchor.

    Returns (multipliers, unstable_dir, stable_dir) with multipliers
    ordered by descending modulus [lam_u, ~1, ~1, lam_s].
    """
    cfg = cfg or DEFAULT_CONFIG
    _, M = integrate_variational(model, orbit.anchor, orbit.period, cfg)
    x_off = flow(model, orbit.anchor, 0.37 * orbit.period, cfg)
    _, Mb = integrate_variational(model, x_off, -orbit.period, cfg)
    return _floquet_from_monodromy(M, Mb)


def _z_of_orbit(model, orbit):
    j0, j1 = model.fix_free
    return np.array([orbit.anchor[j0], orbit.anchor[j1], 0.5 * orbit.period])


def _ladder(model, saddle, z_start, h_start, h_target, cfg,
            initial_step=None, dz_dh=None):
    """March the corrected solution from h_start to h_target with
    adaptive natural-parameter steps (halve on divergence, grow on
    success, floor 1e-5).

    A rung is also rejected when the converged point strays from the
    secant prediction by more than half the rung's own motion — Newton
    can silently hop onto a neighboring family at large steps, and that
    deviation test is what catches it.  Returns (z, dz_dh) so callers
    chaining ladders keep the guard armed.
    """
    z, h_cur = np.asarray(z_start, dtype=float).copy(), float(h_start)
    remaining = h_target - h_cur
    step = remaining if initial_step is None else math.copysign(
        min(abs(initial_step), abs(remaining)), remaining)
    while abs(h_target - h_cur) > 0.0:
        remaining = h_target - h_cur
        if abs(step) > abs(remaining) or step * remaining <= 0.0:
            step = remaining
        h_try = h_cur + step
        z_guess = z + dz_dh * step if dz_dh is not None else z.copy()

        def _reject():
            nonlocal step
            step *= 0.5
            if abs(step) < _CONTINUATION_FLOOR:
                raise NewtonDiverged(
                    "continuation stalled between H=%.6g and H=%.6g"
                    % (h_cur, h_target)
                )

        try:
            z_new = _newton_half_period(model, z_guess, h_try, cfg)
        except (NewtonDiverged, SaddleTubesError):
            _reject()
            continue
        if dz_dh is not None:
            motion = float(np.max(np.abs(z_guess - z)))
            deviation = float(np.max(np.abs(z_new - z_guess)))
            if deviation > 0.5 * motion + 1e-9:
                _reject()
                continue
        dz_dh = (z_new - z) / step
        z, h_cur = z_new, h_try
        step *= 1.6
    return z, dz_dh


def continue_family(model, saddle, energy_list, cfg=None):
    """One symmetric UPO per requested energy, by continuation.

    The first member is seeded from the linear center approximation
    (laddering up from just above the saddle if the requested energy is
    too far for a direct solve); each subsequent member is continued
    from its predecessor.  Raises NewtonDiverged naming the failing
    energy on stall.
    """
    cfg = cfg or DEFAULT_CONFIG
    energies = [float(h) for h in energy_list]
    if not energies:
        return []
    for h in energies:
        if h <= saddle.energy:
            raise EnergyBelowSaddle(h, saddle.energy)
    orbits = []
    z, h_cur, slope = None, None, None
    for k, h in enumerate(energies):
        try:
            if z is None:
                # Seed where the linear approximation is trustworthy and
                # ladder up: a direct far shot can converge off-family.
                h0 = saddle.energy + min(1e-3, 0.25 * (h - saddle.energy))
                first = find_symmetric_upo(model, saddle, h0, cfg=cfg)
                z, slope = _ladder(
                    model, saddle, _z_of_orbit(model, first), h0, h,
                    cfg, initial_step=10.0 * (h0 - saddle.energy))
            else:
                z, slope = _ladder(model, saddle, z, h_cur, h, cfg,
                                   dz_dh=slope)
            orbit = _build_orbit(model, saddle.label, z, h, cfg)
        except NewtonDiverged as exc:
            raise NewtonDiverged(
                "family member %d (H=%.6g) failed: %s" % (k, h, exc)
            )
        orbits.append(orbit)
        h_cur = h
    return orbits


def upo_at_energy(model, saddle, energy, cfg=None):
    """Convenience: the symmetric UPO at one energy, laddering as needed."""
    return continue_family(model, saddle, [energy], cfg=cfg)[0]


def sample_orbit(model, orbit, n, cfg=None):
    """n states equally spaced in time over one period (dense output)."""
    cfg = cfg or DEFAULT_CONFIG
    traj = integrate(model, orbit.anchor, (0.0, orbit.period), cfg)
    times = np.linspace(0.0, orbit.period, n, endpoint=False)
    return times, traj.state_at(times)
