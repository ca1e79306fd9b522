"""Equilibrium enumeration and linear classification.

The pendulums have four fundamental equilibria on the angle lattice —
Down-Down, Down-Up, Up-Down, Up-Up — and the PCR3BP contributes the
collinear Lagrange points L1 and L2 (L3-L5 play no role in the
transport pipeline).  Classification reads the eigenvalue pattern of
the analytic Jacobian:

* center: two purely imaginary pairs,
* index-1 saddle: {+lambda, -lambda, +i omega, -i omega},
* index-2 saddle: four real eigenvalues, two of each sign.

Index-1 saddles additionally carry a ``SaddleFrame`` with the data the
periodic-orbit machinery needs: lambda, omega, the real stable/unstable
eigenvectors, and the center pair phase-aligned with the reversal
symmetry's fixed set (so the real center vector points along Fix(S),
which is where symmetric UPO anchors live).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import SaddleTubesError

__all__ = [
    "Equilibrium",
    "SaddleFrame",
    "enumerate_equilibria",
    "classify_equilibrium",
    "solve_lagrange_quintic",
    "equilibrium_by_label",
    "CENTER",
    "INDEX1",
    "INDEX2",
]

CENTER = "Center"
INDEX1 = "Index1Saddle"
INDEX2 = "Index2Saddle"

_PENDULUM_STATES = {
    "DownDown": (0.0, 0.0),
    "DownUp": (0.0, np.pi),
    "UpDown": (np.pi, 0.0),
    "UpUp": (np.pi, np.pi),
}


@dataclass
class SaddleFrame:
    """Linear data of an index-1 saddle."""

    lam: float                 # the positive real eigenvalue
    omega: float               # frequency of the center pair
    unstable: np.ndarray       # unit eigenvector for +lam
    stable: np.ndarray         # unit eigenvector for -lam
    center_real: np.ndarray    # Re of the +i*omega eigenvector, in Fix(S)
    center_imag: np.ndarray    # Im of the same (phase-aligned) eigenvector


@dataclass
class Equilibrium:
    label: str
    state: np.ndarray
    energy: float
    classification: str
    eigenvalues: np.ndarray
    saddle_frame: Optional[SaddleFrame] = None

    def __repr__(self):
        return "Equilibrium(%s, H=%.6g, %s)" % (
            self.label,
            self.energy,
            self.classification,
        )


def _fix_sign(v):
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _classify_eigenvalues(eigs):
    scale = float(np.max(np.abs(eigs)))
    if scale == 0.0:
        raise SaddleTubesError("all eigenvalues vanish; cannot classify")
    tol = 1e-9 * scale
    if np.min(np.abs(eigs)) < tol:
        raise SaddleTubesError(
            "degenerate (near-zero) eigenvalue %s; classification undefined"
            % np.array2string(eigs, precision=3)
        )
    n_pos = n_neg = n_imag = 0
    for lam in eigs:
        if abs(lam.imag) <= tol:
            if lam.real > 0:
                n_pos += 1
            else:
                n_neg += 1
        elif abs(lam.real) <= tol:
            n_imag += 1
        else:
            raise SaddleTubesError(
                "eigenvalue %s is neither real nor imaginary; "
                "not a symmetric-spectrum equilibrium" % lam
            )
    if n_imag == 4:
        return CENTER
    if n_pos == 1 and n_neg == 1 and n_imag == 2:
        return INDEX1
    if n_pos == 2 and n_neg == 2:
        return INDEX2
    raise SaddleTubesError(
        "unrecognized eigenvalue pattern (%d pos, %d neg, %d imaginary)"
        % (n_pos, n_neg, n_imag)
    )


def _saddle_frame(model, eigvals, eigvecs):
    scale = float(np.max(np.abs(eigvals)))
    tol = 1e-9 * scale
    iu = int(np.argmax(eigvals.real))
    isv = int(np.argmin(eigvals.real))
    lam = float(eigvals[iu].real)
    unstable = _fix_sign(np.real(eigvecs[:, iu]))
    unstable = unstable / np.linalg.norm(unstable)
    stable = _fix_sign(np.real(eigvecs[:, isv]))
    stable = stable / np.linalg.norm(stable)
    ic = next(
        i for i in range(4) if abs(eigvals[i].real) <= tol and eigvals[i].imag > tol
    )
    omega = float(eigvals[ic].imag)
    xi = eigvecs[:, ic]
    # rotate the complex phase so Re(xi) lies in Fix(S): its components on
    # the anti-fixed coordinates vanish (possible because S maps the
    # i*omega eigenspace to itself)
    zero_idx = list(model.fix_zero)
    v = xi[zero_idx]
    k = int(np.argmax(np.abs(v)))
    phase = np.exp(1j * (0.5 * np.pi - np.angle(v[k])))
    xi = xi * phase
    cr, ci = np.real(xi), np.imag(xi)
    if np.max(np.abs(cr[zero_idx])) > 1e-8 * np.linalg.norm(cr):
        raise SaddleTubesError(
            "center eigenvector could not be phase-aligned with Fix(S)"
        )
    cr[zero_idx] = 0.0
    nrm = np.linalg.norm(cr)
    cr, ci = cr / nrm, ci / nrm
    if np.max(cr) < -np.min(cr):
        cr, ci = -cr, -ci
    return SaddleFrame(
        lam=lam,
        omega=omega,
        unstable=unstable,
        stable=stable,
        center_real=cr,
        center_imag=ci,
    )


def classify_equilibrium(model, state):
    """Classify an equilibrium state; returns (classification, eigenvalues).

    Raises if the state is not an equilibrium (‖F‖ > 1e-10) or if the
    spectrum is degenerate.
    """
    state = np.asarray(state, dtype=float)
    fnorm = float(np.max(np.abs(model.vector_field(state))))
    if fnorm > 1e-10:
        raise ValueError("state is not an equilibrium: ‖F‖ = %.3e" % fnorm)
    eigvals = np.linalg.eigvals(model.jacobian(state))
    return _classify_eigenvalues(eigvals), eigvals


def _make_equilibrium(model, label, state):
    state = np.asarray(state, dtype=float)
    J = model.jacobian(state)
    eigvals, eigvecs = np.linalg.eig(J)
    order = np.lexsort((eigvals.imag, eigvals.real))
    eigvals_sorted = eigvals[order]
    classification = _classify_eigenvalues(eigvals)
    frame = None
    if classification == INDEX1:
        frame = _saddle_frame(model, eigvals, eigvecs)
    return Equilibrium(
        label=label,
        state=state,
        energy=float(model.hamiltonian(state)),
        classification=classification,
        eigenvalues=eigvals_sorted,
        saddle_frame=frame,
    )


def solve_lagrange_quintic(mu, branch):
    """Real root in (0, 1) of the collinear-point quintic.

    branch "L1" uses the upper signs (point between the primaries at
    x = (1-mu) - gamma), branch "L2" the lower signs (x = (1-mu) + gamma).
    The returned gamma satisfies |p(gamma)| < 1e-14.
    """
    if not (0.0 < mu < 1.0):
        raise ValueError("mu must lie in (0, 1)")
    if branch == "L1":
        coeffs = np.array([1.0, -(3.0 - mu), 3.0 - 2.0 * mu, -mu, 2.0 * mu, -mu])
    elif branch == "L2":
        coeffs = np.array([1.0, 3.0 - mu, 3.0 - 2.0 * mu, -mu, -2.0 * mu, -mu])
    else:
        raise ValueError("branch must be 'L1' or 'L2', got %r" % (branch,))
    p = lambda g: float(np.polyval(coeffs, g))
    dcoeffs = np.polyder(coeffs)
    dp = lambda g: float(np.polyval(dcoeffs, g))

    grid = np.linspace(0.0, 1.0, 1001)[1:]  # 1e-3 spacing, skip g=0
    vals = np.polyval(coeffs, grid)
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if len(idx) == 0:
        raise SaddleTubesError(
            "no sign change of the %s quintic on (0,1) for mu=%g" % (branch, mu)
        )
    a, b = grid[idx[0]], grid[idx[0] + 1]
    gamma = brentq(p, a, b, xtol=1e-15, rtol=8.9e-16)
    for _ in range(8):  # Newton polish toward the 1e-14 residual contract
        val = p(gamma)
        if abs(val) < 1e-16:
            break
        d = dp(gamma)
        if d == 0.0:
            break
        gamma -= val / d
    if abs(p(gamma)) >= 1e-14:
        raise SaddleTubesError(
            "quintic residual %.3e did not reach 1e-14" % abs(p(gamma))
        )
    return gamma


def _lagrange_states(model):
    mu = model.params["mu"]
    out = []
    for branch, sign in (("L1", -1.0), ("L2", 1.0)):
        gamma = solve_lagrange_quintic(mu, branch)
        x = (1.0 - mu) + sign * gamma
        # polish on the force balance itself so ‖F‖ hits machine level
        for _ in range(4):
            f = model.vector_field([x, 0.0, 0.0, 0.0])[2]
            if abs(f) < 1e-15:
                break
            dfdx = model.jacobian([x, 0.0, 0.0, 0.0])[2, 0]
            x -= f / dfdx
        out.append((branch, np.array([x, 0.0, 0.0, 0.0])))
    return out


def enumerate_equilibria(model):
    """All built-in equilibria of the model, sorted by ascending energy.

    Pendulums: the four lattice states; PCR3BP: L1 and L2.
    """
    if model.kind in ("physical_dp", "point_mass_dp"):
        items = [
            (label, np.array([q1, q2, 0.0, 0.0]))
            for label, (q1, q2) in _PENDULUM_STATES.items()
        ]
    elif model.kind == "pcr3bp":
        items = _lagrange_states(model)
    else:
        raise ValueError("unknown model kind %r" % model.kind)
    eqs = [_make_equilibrium(model, label, state) for label, state in items]
    eqs.sort(key=lambda e: e.energy)
    return eqs


def equilibrium_by_label(model, label):
    """Fetch one equilibrium by its label (e.g. "DownUp", "L1")."""
    for eq in enumerate_equilibria(model):
        if eq.label == label:
            return eq
    raise KeyError("model %r has no equilibrium labeled %r" % (model.kind, label))
