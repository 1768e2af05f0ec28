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

import json
import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from os import PathLike
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from fuzzywuzzy import process
from scipy import linalg

from ..errors import (
    DegeneratePathError,
    DimensionMismatchError,
    ModelValidationError,
    SignatureToleranceWarning,
)
from .constants import (
    GAP_TOL_FACTOR,
    HERMITIAN_TOL,
    MACHINE_NOISE,
    REGULARIZING_OFFSETS,
    SIGNATURE_TOL,
)

log = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[Sequence[complex]], Sequence[complex], complex, float]

MODEL_KEYS: Tuple[str, ...] = ("h0", "frame", "j", "lambda", "interval")


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


def _as_square(entries: ArrayLike, name: str) -> np.ndarray:
    array = np.atleast_2d(np.asarray(entries, dtype=complex))
    if array.ndim != 2 or array.shape[0] != array.shape[1] or array.shape[0] == 0:
        raise DimensionMismatchError(
            f"{name} must be a non-empty square matrix, got shape {array.shape}", field=name
        )
    return array


@dataclass(frozen=True)
class HermitianMatrix:
    """A validated, symmetrized Hermitian matrix"""

    entries: np.ndarray

    def __post_init__(self) -> None:
        array = _as_square(self.entries, "matrix")
        deviation = float(np.max(np.abs(array - array.conj().T)))
        if deviation > HERMITIAN_TOL:
            raise ModelValidationError(
                f"matrix is not Hermitian (max |A - A*| = {deviation:.3e})",
                field="entries",
            )
        object.__setattr__(self, "entries", _frozen((array + array.conj().T) / 2))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(self.entries)

    def __neg__(self) -> HermitianMatrix:
        return HermitianMatrix(-self.entries)

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return np.asarray(self.entries, dtype=dtype)


def as_hermitian(matrix: Union[HermitianMatrix, ArrayLike]) -> HermitianMatrix:
    if isinstance(matrix, HermitianMatrix):
        return matrix
    return HermitianMatrix(np.atleast_2d(np.asarray(matrix, dtype=complex)))


@dataclass(frozen=True)
class Frame:
    """The frame F : H -> K, a full-rank (possibly rectangular) matrix"""

    entries: np.ndarray
    singular_values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        array = np.atleast_2d(np.asarray(self.entries, dtype=complex))
        if array.ndim != 2 or 0 in array.shape:
            raise DimensionMismatchError(
                f"frame must be a non-empty matrix, got shape {array.shape}", field="frame"
            )
        kappa = linalg.svdvals(array)
        if kappa[-1] <= MACHINE_NOISE * max(1.0, kappa[0]):
            raise ModelValidationError(
                f"frame is rank deficient (smallest singular value {kappa[-1]:.3e})",
                field="frame",
            )
        object.__setattr__(self, "entries", _frozen(array))
        object.__setattr__(self, "singular_values", np.sort(kappa)[::-1].copy())
        self.singular_values.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @classmethod
    def identity(cls, dim: int) -> Frame:
        return cls(np.eye(dim))


@dataclass(frozen=True)
class Direction:
    """J in V = F*JF, a Hermitian matrix on the auxiliary space"""

    J: HermitianMatrix

    def __post_init__(self) -> None:
        object.__setattr__(self, "J", as_hermitian(self.J))

    @property
    def dim(self) -> int:
        return self.J.dim

    def __neg__(self) -> Direction:
        return Direction(-self.J)


@dataclass(frozen=True)
class SpectralParameter:
    """z = lam + iy with y >= 0"""

    lam: float
    y: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.lam) or not np.isfinite(self.y):
            raise ModelValidationError("spectral parameter must be finite", field="lambda")
        if self.y < 0:
            raise ModelValidationError(f"y must be non-negative, got {self.y}", field="y")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "y", float(self.y))

    @property
    def z(self) -> complex:
        return complex(self.lam, self.y)

    @property
    def is_real(self) -> bool:
        return self.y == 0.0

    def conjugate_z(self) -> complex:
        return complex(self.lam, -self.y)

    def with_y(self, y: float) -> SpectralParameter:
        return SpectralParameter(self.lam, y)


def build_perturbation(F: Frame, J: Direction) -> HermitianMatrix:
    """V = F* J F"""
    if J.dim != F.rows:
        raise DimensionMismatchError(
            f"J acts on a space of dim {J.dim} but the frame maps into dim {F.rows}",
            field="j",
        )
    f = F.entries
    return HermitianMatrix(f.conj().T @ J.J.entries @ f)


@dataclass(frozen=True)
class FramedModel:
    """The line H_r = H_0 + rV with V = F*JF"""

    H0: HermitianMatrix
    F: Frame
    J: Direction
    V: HermitianMatrix = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "H0", as_hermitian(self.H0))
        if not isinstance(self.F, Frame):
            object.__setattr__(self, "F", Frame(self.F))
        if not isinstance(self.J, Direction):
            object.__setattr__(self, "J", Direction(self.J))
        if self.F.cols != self.H0.dim:
            raise DimensionMismatchError(
                f"frame has {self.F.cols} columns but H0 has dim {self.H0.dim}",
                field="frame",
            )
        object.__setattr__(self, "V", build_perturbation(self.F, self.J))

    @property
    def dim(self) -> int:
        return self.H0.dim

    @property
    def aux_dim(self) -> int:
        return self.F.rows

    @classmethod
    def from_arrays(cls, h0: ArrayLike, frame: ArrayLike, j: ArrayLike) -> FramedModel:
        return cls(as_hermitian(h0), Frame(np.atleast_2d(np.asarray(frame))), Direction(as_hermitian(j)))

    @classmethod
    def rank_one(cls, h0: ArrayLike, v: ArrayLike, sign: float = 1.0) -> FramedModel:
        """V = sign * v v* through a 1 x n frame row and a scalar J"""
        row = np.asarray(v, dtype=complex).reshape(1, -1)
        return cls.from_arrays(h0, row, [[sign]])

    def rebased(self, s: float) -> FramedModel:
        """The same line with its base point moved to H_s"""
        return FramedModel(path_at(self, s), self.F, self.J)

    def reversed(self) -> FramedModel:
        """The same base point crossed in direction -V"""
        return FramedModel(self.H0, self.F, -self.J)

    @cached_property
    def v_norm(self) -> float:
        return float(np.max(np.abs(self.V.eigenvalues), initial=0.0))


def path_at(model: FramedModel, r: float) -> HermitianMatrix:
    return HermitianMatrix(model.H0.entries + r * model.V.entries)


@dataclass(frozen=True)
class SignatureReport:
    value: int
    n_positive: int
    n_negative: int
    flagged: bool


def signature_report(V: Union[HermitianMatrix, ArrayLike], tol: float = SIGNATURE_TOL) -> SignatureReport:
    if tol <= 0:
        raise ModelValidationError("signature tolerance must be positive", field="tol")
    eigenvalues = as_hermitian(V).eigenvalues
    n_positive = int(np.count_nonzero(eigenvalues > tol))
    n_negative = int(np.count_nonzero(eigenvalues < -tol))
    scale = max(1.0, float(np.max(np.abs(eigenvalues), initial=0.0)))
    borderline = np.abs(eigenvalues) <= tol
    flagged = bool(np.any(borderline & (np.abs(eigenvalues) > MACHINE_NOISE * scale)))
    if flagged:
        log.warning("signature: eigenvalue inside the tolerance band %.1e but above noise", tol)
        warnings.warn(
            f"eigenvalue within {tol:.1e} of zero but above machine noise",
            SignatureToleranceWarning,
            stacklevel=2,
        )
    return SignatureReport(n_positive - n_negative, n_positive, n_negative, flagged)


def signature(V: Union[HermitianMatrix, ArrayLike], tol: float = SIGNATURE_TOL) -> int:
    """(# eigenvalues > tol) - (# eigenvalues < -tol)"""
    return signature_report(V, tol).value


def default_gap_tol(H: HermitianMatrix) -> float:
    eigenvalues = H.eigenvalues
    diameter = float(eigenvalues[-1] - eigenvalues[0])
    scale = max(diameter, float(np.max(np.abs(eigenvalues))))
    return GAP_TOL_FACTOR * (scale if scale > 0 else 1.0)


def is_regular_point(
    model: FramedModel, r: float, lam: float, gap_tol: Optional[float] = None
) -> bool:
    """True iff lam keeps a distance larger than gap_tol from spec(H_r)"""
    H = path_at(model, r)
    if gap_tol is None:
        gap_tol = default_gap_tol(H)
    if gap_tol <= 0:
        raise ModelValidationError("gap_tol must be positive", field="gap_tol")
    return bool(np.min(np.abs(H.eigenvalues - lam)) > gap_tol)


def regular_base(model: FramedModel, lam: float) -> float:
    """A coupling s with H_s regular at lam, 0.0 if H_0 already is"""
    if is_regular_point(model, 0.0, lam):
        return 0.0
    if model.v_norm == 0.0:
        raise DegeneratePathError(f"V = 0 and H_0 is resonant at lambda={lam}", lam=lam)
    for offset in REGULARIZING_OFFSETS:
        s = offset / model.v_norm
        if is_regular_point(model, s, lam):
            log.debug("re-based the path at s=%g to regularize lambda=%g", s, lam)
            return s
    raise DegeneratePathError(
        f"every tested operator on the line is resonant at lambda={lam}", lam=lam
    )


def _complex_entry(value: Any, name: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(part, (int, float)) for part in value
    ):
        return complex(value[0], value[1])
    raise ModelValidationError(
        f"{name}: expected a number or an [re, im] pair, got {value!r}", field=name
    )


def _complex_matrix(payload: Any, name: str) -> np.ndarray:
    if not isinstance(payload, list) or not payload:
        raise ModelValidationError(f"{name}: expected a non-empty list of rows", field=name)
    rows: List[List[complex]] = []
    for row in payload:
        if not isinstance(row, list) or not row:
            raise ModelValidationError(f"{name}: every row must be a non-empty list", field=name)
        rows.append([_complex_entry(value, name) for value in row])
    if len({len(row) for row in rows}) != 1:
        raise ModelValidationError(f"{name}: rows have different lengths", field=name)
    return np.array(rows, dtype=complex)


@dataclass(frozen=True)
class ModelFileExtras:
    lam: Optional[float] = None
    interval: Optional[Tuple[float, float]] = None


def model_from_dict(payload: Dict[str, Any]) -> Tuple[FramedModel, ModelFileExtras]:
    """Builds a model from the JSON payload, reporting the first violated invariant"""
    if not isinstance(payload, dict):
        raise ModelValidationError("model file must contain a JSON object")
    for key in payload:
        if key not in MODEL_KEYS:
            suggestion, score = process.extractOne(key, MODEL_KEYS)
            hint = f", did you mean {suggestion!r}?" if score >= 60 else ""
            raise ModelValidationError(f"unknown key {key!r}{hint}", field=key)
    for key in ("h0", "frame", "j"):
        if key not in payload:
            raise ModelValidationError(f"missing required key {key!r}", field=key)

    parts: Dict[str, Any] = {}
    builders = (("h0", HermitianMatrix), ("frame", Frame), ("j", HermitianMatrix))
    for key, builder in builders:
        try:
            parts[key] = builder(_complex_matrix(payload[key], key))
        except DimensionMismatchError as e:
            raise DimensionMismatchError(f"{key}: {e.message}", field=key) from e
        except ModelValidationError as e:
            raise ModelValidationError(f"{key}: {e.message}", field=key) from e
    model = FramedModel(parts["h0"], parts["frame"], Direction(parts["j"]))

    lam = payload.get("lambda")
    if lam is not None and not isinstance(lam, (int, float)):
        raise ModelValidationError("lambda must be a real number", field="lambda")
    interval = payload.get("interval")
    if interval is not None:
        if (
            not isinstance(interval, list)
            or len(interval) != 2
            or not all(isinstance(x, (int, float)) for x in interval)
            or not interval[0] < interval[1]
        ):
            raise ModelValidationError("interval must be [a, b] with a < b", field="interval")
        interval = (float(interval[0]), float(interval[1]))
    return model, ModelFileExtras(None if lam is None else float(lam), interval)


def load_model(path: Union[str, PathLike]) -> Tuple[FramedModel, ModelFileExtras]:
    try:
        with open(path, "r", encoding="utf-8") as fp:
            payload = json.load(fp)
    except json.JSONDecodeError as e:
        raise ModelValidationError(f"malformed JSON: {e}", field="file") from e
    except OSError as e:
        raise ModelValidationError(f"cannot read model file: {e}", field="file") from e
    return model_from_dict(payload)


def model_to_dict(model: FramedModel, **extras: Any) -> Dict[str, Any]:
    def encode(matrix: np.ndarray) -> List[List[List[float]]]:
        return [[[float(x.real), float(x.imag)] for x in row] for row in matrix]

    payload: Dict[str, Any] = {
        "h0": encode(model.H0.entries),
        "frame": encode(model.F.entries),
        "j": encode(model.J.J.entries),
    }
    payload.update({k: v for k, v in extras.items() if v is not None})
    return payload
