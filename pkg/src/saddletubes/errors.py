"""Exception types raised by the numerical routines.

Every failure mode that a caller might reasonably want to catch and
handle (as opposed to a programming error) gets its own class, all
rooted at :class:`SaddleTubesError` so that ``except SaddleTubesError``
catches any numerical failure.
"""


class SaddleTubesError(Exception):
    """Base class for all numerical/algorithmic failures in this package."""


class DriftExceeded(SaddleTubesError):
    """Energy drift along a trajectory exceeded the configured tolerance."""

    def __init__(self, drift, tol, t=None):
        self.drift = float(drift)
        self.tol = float(tol)
        self.t = t
        msg = "energy drift %.3e exceeds tolerance %.3e" % (self.drift, self.tol)
        if t is not None:
            msg += " at t=%.6g" % t
        super().__init__(msg)


class MaxStepsExceeded(SaddleTubesError):
    """The integrator failed to advance (step budget or step-size underflow)."""


class NoEventWithinMaxTime(SaddleTubesError):
    """Event-targeted integration hit the time horizon without the requested crossing."""

    def __init__(self, max_time, found=0, wanted=1):
        self.max_time = float(max_time)
        self.found = int(found)
        self.wanted = int(wanted)
        super().__init__(
            "found %d of %d requested section crossings within max_time=%.6g"
            % (self.found, self.wanted, self.max_time)
        )


class NewtonDiverged(SaddleTubesError):
    """A Newton (or quasi-Newton) iteration failed to converge."""

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        if residual is not None:
            message += " (residual %.3e after %s iterations)" % (
                residual,
                "?" if iterations is None else iterations,
            )
        super().__init__(message)


class EnergyBelowSaddle(SaddleTubesError):
    """Requested energy lies at or below the saddle energy, so no orbit exists."""

    def __init__(self, energy, saddle_energy):
        self.energy = float(energy)
        self.saddle_energy = float(saddle_energy)
        super().__init__(
            "energy %.6g does not exceed saddle energy %.6g"
            % (self.energy, self.saddle_energy)
        )


class RefinementDiverged(SaddleTubesError):
    """Connection refinement left the neighbourhood of its seed candidate."""


class AsymptoticsFailed(SaddleTubesError):
    """A refined connection failed its asymptotic approach check."""

    def __init__(self, which, min_distance, tol):
        self.which = which
        self.min_distance = float(min_distance)
        self.tol = float(tol)
        super().__init__(
            "%s asymptotic check failed: min distance to orbit %.3e > %.3e"
            % (which, self.min_distance, self.tol)
        )


class WrapsTooSmall(SaddleTubesError):
    """A shadowing itinerary requested fewer wraps than the guaranteed minimum."""

    def __init__(self, wraps, n_min):
        self.wraps = wraps
        self.n_min = int(n_min)
        super().__init__(
            "wrap counts %s below the minimum %d required for shadowing"
            % (list(wraps), self.n_min)
        )
