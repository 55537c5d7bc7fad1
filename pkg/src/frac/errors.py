"""Exception types shared across the package."""


class FracError(Exception):
    """Base class for all package errors."""


class InvalidConfig(FracError):
    """A radar configuration or scene violates one of its invariants."""


class LengthMismatch(FracError):
    """A bit string does not have the expected length."""


class InvalidSelection(FracError):
    """A pulse selection contains out-of-range or inconsistent indices."""


class DimensionMismatch(FracError):
    """An array does not have the dimensions required by the operation."""


class EigFailure(FracError):
    """Eigendecomposition failed (non-finite input)."""


class SubspaceCollapse(FracError):
    """Signal/noise eigenvalue gap too small for reliable subspace separation."""


class DegenerateCore(FracError):
    """Core-tensor peak extraction deemed unreliable."""


class OutOfDomain(FracError):
    """A normalized frequency maps outside the valid parameter domain."""


class CombinatorialBlowup(FracError):
    """Candidate-combination enumeration exceeds the configured cap."""


class NonFinite(FracError):
    """A linear solve or iterate produced non-finite values."""


class SingularFisher(FracError):
    """Fisher matrix is numerically singular."""
