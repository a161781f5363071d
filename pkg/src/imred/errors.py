"""Exception hierarchy.

Every error carries a stable ``error_class`` slug that the CLI prints as
``error_class=<slug>`` on failure.
"""


class ImredError(Exception):
    error_class = "imred-error"


class InvalidParams(ImredError, ValueError):
    error_class = "invalid-params"


class ZeroEnergySignal(ImredError, ValueError):
    error_class = "zero-energy-signal"


class InvalidGrid(ImredError, ValueError):
    error_class = "invalid-grid"


class NotAdmissible(ImredError, ValueError):
    error_class = "not-admissible"


class RegionOutOfBounds(ImredError, ValueError):
    error_class = "region-out-of-bounds"


class EmptyInput(ImredError, ValueError):
    error_class = "empty-input"


class DegenerateVariances(ImredError, ValueError):
    error_class = "degenerate-variances"


class InsufficientSamples(ImredError, ValueError):
    error_class = "insufficient-samples"


class SingleClassInput(ImredError, ValueError):
    error_class = "single-class-input"


class InvalidBand(ImredError, ValueError):
    error_class = "invalid-band"


class InvalidConfig(ImredError, ValueError):
    error_class = "invalid-config"


class IOFailure(ImredError, OSError):
    error_class = "io-error"
