"""Exception and warning hierarchy for ccsim.

Every error raised by the library derives from ``CcsimError`` so callers can
catch simulation failures without swallowing programming errors.  Warnings
derive from ``CcsimWarning`` and are emitted through the standard ``warnings``
machinery.
"""


class CcsimError(Exception):
    """Base class for all ccsim errors."""


class ValidationError(CcsimError):
    """A configuration document violates the layout schema.

    The message names the offending key.
    """


class LayoutError(CcsimError):
    """A structurally invalid system layout (duplicate ids, missing roles, ...)."""


class RangeError(CcsimError):
    """A value lies outside a tabulated or admissible domain."""


class ConditioningError(CcsimError):
    """The coupling matrix is too ill-conditioned to invert reliably."""

    def __init__(self, cond: float, threshold: float):
        self.cond = cond
        self.threshold = threshold
        super().__init__(
            f"coupling matrix condition number {cond:.3e} exceeds threshold {threshold:.3e}"
        )


class BranchError(CcsimError):
    """An eigenvalue square root fell on the wrong branch (Re <= 0)."""


class InputError(CcsimError):
    """Invalid numerical input to an operation (e.g. negative pump strength)."""


class ContractError(CcsimError):
    """A cross-module contract was violated (e.g. non-constant drive phase)."""


class WindowTooShortError(CcsimError):
    """A trajectory ended before the sought feature (e.g. still-decreasing CV)."""


class RoleError(CcsimError):
    """A cavity was used in a role it does not hold."""


class CutoffError(CcsimError):
    """Fock-space truncation is invalid; rerun with a larger cutoff."""


class StiffnessError(CcsimError):
    """The adaptive ODE integrator failed to converge."""


class StageError(CcsimError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[stage:{stage}] {message}")


class CcsimWarning(UserWarning):
    """Base class for all ccsim warnings."""


class TruncationWarning(CcsimWarning):
    """A pump pulse does not fit in the waveguide (norm loss beyond tolerance)."""


class AccuracyWarning(CcsimWarning):
    """A fixed-step integration did not pass its step-halving check."""


class FitQualityWarning(CcsimWarning):
    """An exponential fit had a residual above threshold."""


class BetaWarning(CcsimWarning):
    """The extracted drive phase is not constant in time."""
