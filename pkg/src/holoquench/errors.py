"""Exception and warning types shared across the package.

Every error carries a stable ``code`` string and the ``module`` it comes
from, so the command line can emit a machine-readable error document.
"""

from __future__ import annotations


class HoloQuenchError(Exception):
    """Base class for all package errors."""

    code = "HoloQuenchError"
    module = "holoquench"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "module": self.module,
            "message": self.message,
            "context": {k: _jsonable(v) for k, v in self.context.items()},
        }


def _jsonable(value):
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return repr(value)


# model-config -------------------------------------------------------------

class ConfigError(HoloQuenchError):
    """One or more configuration invariants are violated.

    ``issues`` is a list of ``(code, field_path, message)`` triples; ``code``
    of the exception is the code of the first issue.
    """

    module = "model-config"

    def __init__(self, issues):
        issues = list(issues)
        self.issues = issues
        text = "; ".join(f"{path}: {msg} [{code}]" for code, path, msg in issues)
        super().__init__(text, issues=[list(i) for i in issues])
        self.code = issues[0][0] if issues else "InvalidConfig"

    @property
    def codes(self) -> list[str]:
        return [c for c, _, _ in self.issues]


# ring-sim -----------------------------------------------------------------

class NonFiniteField(HoloQuenchError):
    code = "NonFiniteField"
    module = "ring-sim"


class EdgeLeakage(UserWarning):
    """Boundary modes carry more than the allowed fraction of the output."""


class RecordFormatError(HoloQuenchError):
    code = "RecordFormatError"
    module = "ring-sim"


# spin-analysis ------------------------------------------------------------

class EmptyRecord(HoloQuenchError):
    code = "EmptyRecord"
    module = "spin-analysis"


class MisalignedSamples(HoloQuenchError):
    code = "MisalignedSamples"
    module = "spin-analysis"


class NormalizationUndefined(UserWarning):
    """Intensity fell below the floor; normalized values are masked."""


# topology -----------------------------------------------------------------

class TopologyError(HoloQuenchError):
    module = "topology"


class NoBandInversion(TopologyError):
    code = "NoBandInversion"


class UnexpectedBisCount(TopologyError):
    code = "UnexpectedBisCount"


class DegenerateDerivative(TopologyError):
    code = "DegenerateDerivative"


class GaplessSpectrum(TopologyError):
    code = "GaplessSpectrum"


class Undersampled(TopologyError):
    code = "Undersampled"


# tight-binding ------------------------------------------------------------

class UnsupportedPhase(HoloQuenchError):
    code = "UnsupportedPhase"
    module = "tight-binding"


# cli-io -------------------------------------------------------------------

class EmptySweep(HoloQuenchError):
    code = "EmptySweep"
    module = "cli-io"


class OverrideError(HoloQuenchError):
    code = "OverrideError"
    module = "cli-io"
