"""
MIT License

Copyright (c) 2024-present ressf developers

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""

from __future__ import annotations

from typing import Any, Dict, Optional


class RessfError(Exception):
    """Base class of every error raised by ressf.

    ``error`` and ``code`` mirror the error payloads the scanner writes into
    failed report rows.
    """

    error: str = "ressf"
    code: int = 1

    def __init__(self, message: str, **extra: Any) -> None:
        super().__init__(message)
        self.message: str = message
        self.extra: Dict[str, Any] = extra

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "error": self.error,
            "code": self.code,
            "message": self.message,
        }
        for key, value in self.extra.items():
            if isinstance(value, complex):
                value = [value.real, value.imag]
            payload[key] = value
        return payload


class ModelValidationError(RessfError):
    """A model (or model file) violates one of its invariants"""

    error = "model"
    code = 2

    def __init__(self, message: str, *, field: Optional[str] = None, **extra: Any) -> None:
        super().__init__(message, field=field, **extra)
        self.field = field


class DimensionMismatchError(ModelValidationError):
    error = "dimension"
    code = 3


class SingularResolventError(RessfError):
    """The spectral parameter is real and sits on the spectrum"""

    error = "singular_resolvent"
    code = 10


class PoleEvaluationError(RessfError):
    """A meromorphic function was evaluated at (or numerically on) one of its poles"""

    error = "pole_evaluation"
    code = 11

    def __init__(self, message: str, *, nearest_pole: complex, **extra: Any) -> None:
        super().__init__(message, nearest_pole=nearest_pole, **extra)
        self.nearest_pole = nearest_pole


class DegeneratePathError(RessfError):
    """Every operator on the line is resonant at lambda"""

    error = "degenerate_path"
    code = 12


class GroupOverlapError(RessfError):
    """Pole groups of neighbouring resonance points are not separated at this y"""

    error = "group_overlap"
    code = 13


class InstabilityError(RessfError):
    """The up/down partition did not settle before the y-schedule ran out"""

    error = "instability"
    code = 14


class ContourCollisionError(RessfError):
    """A pole lies on (or too close to) an integration contour"""

    error = "contour_collision"
    code = 15


class GeometryError(RessfError):
    """No admissible detour radius exists"""

    error = "geometry"
    code = 16


class ConvergenceError(RessfError):
    """An extrapolation or quadrature did not converge; partial data attached"""

    error = "convergence"
    code = 17


class AmbiguousCountError(RessfError):
    error = "ambiguous_count"
    code = 18


class EndpointProximityError(RessfError):
    error = "endpoint_proximity"
    code = 19


class InfiniteResonance(RessfError):
    """The principal value integral vanishes: no finite resonance coupling"""

    error = "infinite_resonance"
    code = 20


class RessfWarning(UserWarning):
    pass


class DefectiveClusterWarning(RessfWarning):
    pass


class SignatureToleranceWarning(RessfWarning):
    pass


class DegenerateCrossingWarning(RessfWarning):
    pass


class ClassificationWarning(RessfWarning):
    pass


class ScheduleCapWarning(RessfWarning):
    pass
