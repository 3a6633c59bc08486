"""Exception types shared across the package."""


class ModelConfigError(ValueError):
    """Raised when a robot or simulation config fails parsing or validation.

    The message always names the offending section/key so the CLI and the
    service can point the user at the exact field.
    """


class NumericsError(RuntimeError):
    """Raised when a linear-algebra step degenerates (singular matrix,
    constraint degeneracy, NaN state). Mapped to exit code 2 by the CLI."""


class KinematicSingularityError(NumericsError):
    """Null-space lift failed: the holonomic elimination block is singular."""


class ConstraintDegeneracyError(NumericsError):
    """Constraint Gram matrix is singular in the force-recovery solve."""


class ImpactDegeneracyError(NumericsError):
    """Contact Gram matrix is rank-deficient in the impact map."""
