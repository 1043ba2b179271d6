"""Exceptions shared across the solver modules."""


class DegenerateParametersError(RuntimeError):
    """The linear system fixing the stationary density is near-singular."""


class CflError(ValueError):
    """A requested explicit time step violates the CFL bound."""

    def __init__(self, dt: float, dt_max: float):
        super().__init__(f"dt={dt:g} violates the CFL bound; maximal admissible dt is {dt_max:g}")
        self.dt = dt
        self.dt_max = dt_max


class EmptySampleError(ValueError):
    """An estimator received an empty (fully filtered) event stream."""
