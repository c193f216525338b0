"""
Univalence Checks - Error Types
Every failure the library can signal, each tagged with a stable error code.

The library raises; only the command-line front end turns these into
exit codes and user-facing messages.
"""

from typing import Any, Dict, Iterable, Optional


class UnivalenceError(Exception):
    """Base error carrying a stable string code and structured details"""

    code = "ERROR"

    def __init__(self, message: str, code: Optional[str] = None, **details: Any):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code
        self.details: Dict[str, Any] = details

    def __str__(self) -> str:
        return f"[{self.code}] {super().__str__()}"


# ============================================================================
# SERIES & EXPRESSION ERRORS
# ============================================================================

class SeriesError(UnivalenceError):
    """Invalid power series input or operation (EVAL_OUT_OF_DISK, ZERO_CONSTANT_TERM, ...)"""
    code = "SERIES_ERROR"


class SingularSampleError(UnivalenceError):
    """A denominator vanished at an evaluation point"""
    code = "SINGULAR_SAMPLE"

    def __init__(self, z: complex, message: Optional[str] = None):
        super().__init__(message or f"singular sample at z={z!r}", z=z)
        self.z = z


class DomainError(UnivalenceError):
    """Argument outside the mathematical domain (BAD_ALPHA, BAD_DOMAIN, OMEGA_VANISHES)"""
    code = "BAD_DOMAIN"


class AllSingularError(UnivalenceError):
    """Every sample of a grid evaluation was singular"""
    code = "ALL_SINGULAR"


# ============================================================================
# CRITERIA, SEARCH & CONFIGURATION ERRORS
# ============================================================================

class InputKindError(UnivalenceError):
    """Input normalization does not match what a criterion or oracle expects"""
    code = "INPUT_KIND_MISMATCH"


class ConsistencyViolation(UnivalenceError):
    """A certified hypothesis was followed by a refuted conclusion"""
    code = "VIOLATION"

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class ConfigError(UnivalenceError):
    """Invalid run configuration or search configuration"""
    code = "BAD_CONFIG"


class FunctionParseError(UnivalenceError):
    """Function spec text does not follow the grammar"""
    code = "PARSE_ERROR"

    def __init__(self, message: str, offset: int, expected: Iterable[str]):
        self.offset = offset
        self.expected = sorted(set(expected))
        super().__init__(
            f"{message} at byte {offset} (expected one of: {', '.join(self.expected)})",
            offset=offset,
            expected=self.expected,
        )
