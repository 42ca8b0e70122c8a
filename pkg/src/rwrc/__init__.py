"""Random walks among biased random conductances: simulation and exact
computation for two one-dimensional models (tilted i.i.d. conductances and
the range-one Mott walk with field)."""

__version__ = "0.1.0"

from .environment import (
    BircParams,
    Environment,
    R1mParams,
    TailSpec,
    dump_environment,
    load_environment,
    sample_environment,
)
from .errors import (
    CertificationError,
    ConfigError,
    PreconditionError,
    WindowCapError,
)

__all__ = [
    "BircParams",
    "Environment",
    "R1mParams",
    "TailSpec",
    "dump_environment",
    "load_environment",
    "sample_environment",
    "CertificationError",
    "ConfigError",
    "PreconditionError",
    "WindowCapError",
    "__version__",
]
