"""Exception hierarchy for the simulator"""
from typing import Any, Dict, Optional


class CondSqueezeError(Exception):
    """Base class for every error raised by this project"""


class SpaceMismatchError(CondSqueezeError, ValueError):
    """Operands live in different (or incompatible) Hilbert spaces"""


class TruncationError(CondSqueezeError):
    """The Fock cutoff is too small for the requested state"""

    def __init__(self, message: str, deficiency: float, threshold: float):
        super().__init__(f"{message} (deficiency={deficiency:.3e}, threshold={threshold:.1e})")
        self.deficiency = deficiency
        self.threshold = threshold


class DegenerateStateError(CondSqueezeError, ValueError):
    """The requested state has zero norm (e.g. one_L at r = 0)"""


class SolverError(CondSqueezeError):
    """Time integration aborted"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(CondSqueezeError):
    """Experiment configuration could not be parsed or validated"""
