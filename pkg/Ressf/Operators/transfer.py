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

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
from scipy import linalg

from ..errors import ModelValidationError, PoleEvaluationError, SingularResolventError
from .constants import POLE_EXCLUSION, RESOLVENT_RESIDUAL, ZERO_EIGENVALUE_TOL
from .model import FramedModel, HermitianMatrix, SpectralParameter, default_gap_tol, path_at

log = logging.getLogger(__name__)

Method = Literal["direct", "meromorphic"]


def _check_regular(H: HermitianMatrix, z: complex, gap_tol: Optional[float]) -> None:
    if z.imag != 0.0:
        return
    if gap_tol is None:
        gap_tol = default_gap_tol(H)
    distance = float(np.min(np.abs(H.eigenvalues - z.real)))
    if distance <= gap_tol:
        raise SingularResolventError(
            f"z={z.real:g} lies within {gap_tol:.1e} of the spectrum (distance {distance:.3e})",
            distance=distance,
        )


def _resolve(H: HermitianMatrix, z: complex, gap_tol: Optional[float] = None) -> np.ndarray:
    _check_regular(H, z, gap_tol)
    shifted = H.entries - z * np.eye(H.dim)
    eye = np.eye(H.dim, dtype=complex)
    lu_piv = linalg.lu_factor(shifted, check_finite=False)
    inverse = linalg.lu_solve(lu_piv, eye, check_finite=False)
    # (H - z)R = I, relative to the conditioning of H - z
    residual = float(np.max(np.abs(shifted @ inverse - eye)))
    scale = max(1.0, float(np.linalg.norm(shifted, 1) * np.linalg.norm(inverse, 1)))
    if not residual <= RESOLVENT_RESIDUAL * scale:
        raise SingularResolventError(
            f"(H - z)R misses the identity by {residual:.2e} at z={z:.6g}", residual=residual
        )
    return inverse


def resolvent(
    H: HermitianMatrix,
    z: SpectralParameter,
    *,
    conjugate: bool = False,
    gap_tol: Optional[float] = None,
) -> np.ndarray:
    """R_z(H) = (H - z)^{-1}, or R_{conj z}(H) when ``conjugate`` is set"""
    return _resolve(H, z.conjugate_z() if conjugate else z.z, gap_tol)


@dataclass(frozen=True)
class TransferMatrix:
    """T_z(H_r) = F R_z(H_r) F* (or T_z(H_r) J for an A-matrix) on the auxiliary space"""

    z: SpectralParameter
    r: float
    entries: np.ndarray

    def __post_init__(self) -> None:
        self.entries.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def imaginary_part(self) -> np.ndarray:
        """(T - T*) / 2i"""
        return (self.entries - self.entries.conj().T) / 2j

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvals(self.entries, check_finite=False)


def _transfer(model: FramedModel, r: float, z: complex) -> np.ndarray:
    f = model.F.entries
    return f @ _resolve(path_at(model, r), z) @ f.conj().T


def transfer_matrix(model: FramedModel, r: float, z: SpectralParameter) -> TransferMatrix:
    return TransferMatrix(z, float(r), _transfer(model, r, z.z))


def a_matrix(model: FramedModel, r: float, z: SpectralParameter) -> TransferMatrix:
    """A^{(r)}_z = T_z(H_r) J"""
    return TransferMatrix(z, float(r), _transfer(model, r, z.z) @ model.J.J.entries)


def a_matrix_from(reference: TransferMatrix, s: float) -> np.ndarray:
    """A^{(s)} from A^{(r)} through (1 + (s - r) A^{(r)})^{-1} A^{(r)}"""
    a = reference.entries
    return linalg.solve(np.eye(reference.dim) + (s - reference.r) * a, a)


def f_operator(model: FramedModel, s: complex, z: SpectralParameter) -> np.ndarray:
    """f_z(s) = (1 + s T_z(H_0) J)^{-1}"""
    a = a_matrix(model, 0.0, z).entries
    return linalg.inv(np.eye(a.shape[0]) + s * a)


def transfer_eigenvalues(
    model: FramedModel, z: SpectralParameter, r: float = 0.0
) -> np.ndarray:
    """Eigenvalues of T_z(H_r) J"""
    return a_matrix(model, r, z).eigenvalues()


def _nonzero(mu: np.ndarray, scale: float) -> np.ndarray:
    return mu[np.abs(mu) > ZERO_EIGENVALUE_TOL * max(scale, 1e-300)]


class TraceFunction:
    """The meromorphic continuation of F_z(s) in its eigen form.

    With mu_k the eigenvalues of A = T_z(H_base)J,

        F_z(s) = 1/(2 pi i) * sum_k (mu_k - conj mu_k) / ((1 + t conj mu_k)(1 + t mu_k)),

    t = s - base. Poles sit at base - 1/mu_k (up to the path) and at their conjugates.
    """

    def __init__(self, model: FramedModel, z: SpectralParameter, base: float = 0.0) -> None:
        self.__model = model
        self.__z = z
        self.__base = float(base)
        a = a_matrix(model, base, z)
        mu = a.eigenvalues()
        self.__mu: np.ndarray = _nonzero(mu, float(np.linalg.norm(a.entries, 2)))
        poles = self.__base - 1.0 / self.__mu
        self.__poles: np.ndarray = np.concatenate([poles, poles.conj()])

    @property
    def z(self) -> SpectralParameter:
        return self.__z

    @property
    def base(self) -> float:
        return self.__base

    @property
    def mu(self) -> np.ndarray:
        return self.__mu

    @property
    def poles(self) -> np.ndarray:
        """Poles of F_z: poles of f_z and their mirror images"""
        return self.__poles

    def nearest_pole(self, s: complex) -> Optional[complex]:
        if self.__poles.size == 0:
            return None
        return complex(self.__poles[np.argmin(np.abs(self.__poles - s))])

    def check_pole(self, s: complex) -> None:
        nearest = self.nearest_pole(s)
        if nearest is not None and abs(s - nearest) <= POLE_EXCLUSION * max(1.0, abs(nearest)):
            raise PoleEvaluationError(
                f"F_z evaluated at its pole s={nearest:.6g}", nearest_pole=nearest
            )

    def __call__(self, s: Union[complex, np.ndarray]) -> Union[complex, np.ndarray]:
        t = np.asarray(s, dtype=complex) - self.__base
        mu = self.__mu
        if mu.size == 0:
            return np.zeros_like(t) if t.ndim else 0j
        t_col = t[..., np.newaxis]
        terms = (mu - mu.conj()) / ((1.0 + t_col * mu.conj()) * (1.0 + t_col * mu))
        value = terms.sum(axis=-1) / (2j * math.pi)
        return complex(value) if value.ndim == 0 else value

    def pole_sum(self, s: complex) -> complex:
        """sum_j s (s_j - conj s_j) / ((s - s_j)(s - conj s_j)) over poles s_j of f_z"""
        t = complex(s) - self.__base
        poles = -1.0 / self.__mu
        return complex(np.sum(t * (poles - poles.conj()) / ((t - poles) * (t - poles.conj()))))


def trace_function(model: FramedModel, z: SpectralParameter, base: float = 0.0) -> TraceFunction:
    return TraceFunction(model, z, base)


def _f_trace_direct(model: FramedModel, s: complex, z: SpectralParameter) -> complex:
    if complex(s).imag != 0.0:
        raise ModelValidationError("the direct formula needs a real coupling s", field="s")
    R = resolvent(path_at(model, complex(s).real), z)
    im_r = (R - R.conj().T) / 2j
    return complex(np.trace(im_r @ model.V.entries).real / math.pi)


def _f_trace_inverse(model: FramedModel, s: complex, z: SpectralParameter) -> complex:
    V = model.V.entries
    rz = resolvent(model.H0, z) @ V
    if s == 0:
        im_r = (rz - resolvent(model.H0, z, conjugate=True) @ V) / 2j
        return complex(np.trace(im_r) / math.pi)
    rz_bar = resolvent(model.H0, z, conjugate=True) @ V
    eye = np.eye(model.dim)
    try:
        left = linalg.inv(eye + s * rz_bar)
        right = linalg.inv(eye + s * rz)
    except linalg.LinAlgError as e:
        raise PoleEvaluationError(f"1 + sR_zV is singular at s={s}", nearest_pole=complex(s)) from e
    return complex(np.trace(left - right) / (2j * math.pi * s))


def f_trace(
    model: FramedModel,
    s: complex,
    z: SpectralParameter,
    method: Method = "meromorphic",
    *,
    form: Literal["eigen", "inverse"] = "eigen",
) -> complex:
    """F_z(s) = (1/pi) Tr(Im R_z(H_s) V) and its meromorphic continuation"""
    if method == "direct":
        return _f_trace_direct(model, s, z)
    if method != "meromorphic":
        raise ModelValidationError(f"unknown method {method!r}", field="method")
    function = TraceFunction(model, z)
    function.check_pole(complex(s))
    if form == "inverse":
        return _f_trace_inverse(model, complex(s), z)
    return function(complex(s))


def pole_sum_trace(model: FramedModel, s: complex, z: SpectralParameter) -> complex:
    """Pole-sum form of Tr[(1 + sT_{conj z}J)^{-1} - (1 + sT_zJ)^{-1}] (= 2 pi i s F_z(s))"""
    function = TraceFunction(model, z)
    function.check_pole(complex(s))
    return function.pole_sum(complex(s))
