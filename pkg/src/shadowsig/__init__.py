"""Shadow-based quantum digital signatures, classically emulated end to end."""

__version__ = "0.1.0"

from . import (adversary, certify, circuits, ecc, iceberg, plotting,  # noqa: F401
               shadows, signatures, sim, tableau)
