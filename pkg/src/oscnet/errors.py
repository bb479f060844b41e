"""Exception hierarchy for oscnet.

Every error raised by the library derives from :class:`OscnetError` so
callers can catch library failures with a single except clause.  The CLI
maps configuration problems to exit code 2 and numeric failures to 3.
"""


class OscnetError(Exception):
    """Base class for all oscnet errors."""


# --- network construction ---------------------------------------------------

class NonSymmetricCoupling(OscnetError):
    """Coupling matrix is not exactly symmetric or has nonzero diagonal."""


class NonPositiveFrequency(OscnetError):
    """A node frequency is zero or negative."""


class NonPositiveDefinite(OscnetError):
    """The network Hamiltonian matrix has a non-positive eigenvalue."""


class ExhaustedRetries(OscnetError):
    """Random sampling failed to produce a stable network within the retry cap."""


class DirectLinkForbidden(OscnetError):
    """Attached pair nodes must not be linked to each other directly."""


# --- spectral analysis ------------------------------------------------------

class EigensolverFailure(OscnetError):
    """The symmetric eigensolver did not converge."""


class NonPositiveEigenvalue(OscnetError):
    """Diagonalization produced a non-positive squared mode frequency."""


class LocalBathNodeOutOfRange(OscnetError):
    """Local-bath node index does not exist in the network."""


class CutoffTooLow(OscnetError):
    """Bath cutoff frequency does not exceed the largest mode frequency."""


# --- dynamics ---------------------------------------------------------------

class UnphysicalSpec(OscnetError):
    """Initial-state specification violates physical constraints."""


class UnphysicalCovariance(OscnetError):
    """Covariance matrix has a symplectic eigenvalue below the vacuum floor."""


class DimensionMismatch(OscnetError):
    """Array shapes are inconsistent with the network size."""


class IntegratorStepFailure(OscnetError):
    """Time integration produced a non-finite state."""


class PhysicalityViolation(OscnetError):
    """A trajectory point violates the symplectic uncertainty bound."""


# --- tuning -----------------------------------------------------------------

class NoZeroInBracket(OscnetError):
    """Scanned coupling never changes sign or dips below threshold in bracket."""


class ModeTrackingLost(OscnetError):
    """Eigenvector continuation became ambiguous (degeneracy inside bracket)."""


class NoDominantMode(OscnetError):
    """No strictly least-damped mode exists (tied damping rates)."""


class PoleAtOmega(OscnetError):
    """Residual evaluated at a pole (mode frequency equals a node frequency)."""


class FrequencyMismatch(OscnetError):
    """Pair balancing requires the two nodes to share one frequency."""


# --- CLI / configuration ----------------------------------------------------

class ConfigError(OscnetError):
    """Scenario configuration is missing, malformed, or inconsistent."""
