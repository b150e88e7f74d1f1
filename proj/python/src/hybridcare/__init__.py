"""Remote monitoring and call-in thresholds for hybrid inpatient care."""

from ._core import *  # noqa: F401,F403
from ._core import InfeasibleError, __version__

__all__ = [name for name in dir() if not name.startswith("_")]
