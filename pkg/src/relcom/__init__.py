"""relcom: batch analytics for affix-related community pairs in event logs.

Given a multi-community event log (posts and comments with timestamps,
link urls, and text), the package finds community pairs whose names are
related by an affix, scores their link and topic similarity against the
corpus background, characterizes timing and activity dynamics, classifies
spinoffs, and estimates how exploring a spinoff changes activity in the
community it split from. A synthetic-corpus generator with planted ground
truth supports end-to-end verification.
"""

from .errors import ConfigurationError, ContractViolationError, RelcomError

__version__ = "0.1.0"

__all__ = [
    "RelcomError",
    "ConfigurationError",
    "ContractViolationError",
    "__version__",
]
