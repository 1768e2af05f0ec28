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
import warnings
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy import linalg

from ..errors import (
    AmbiguousCountError,
    ClassificationWarning,
    ContourCollisionError,
    DegenerateCrossingWarning,
    ModelValidationError,
)
from ..Operators.constants import (
    ARGUMENT_RESIDUAL,
    COUNT_TOL,
    FLOW_BISECTION_WIDTH,
    FLOW_GRID,
    KREIN_REAL_TOL,
    ZERO_EIGENVALUE_TOL,
)
from ..Operators.model import FramedModel, HermitianMatrix, SpectralParameter, as_hermitian, path_at
from ..Operators.transfer import a_matrix, resolvent
from ..Resonance.contour import Contour

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Crossing:
    r: float
    direction: int
    eigenvalue_branch: int
    degenerate: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r": self.r,
            "direction": self.direction,
            "eigenvalue_branch": self.eigenvalue_branch,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class FlowRecord:
    lam: float
    crossings: Tuple[Crossing, ...]
    net_flow: int

    def __post_init__(self) -> None:
        if self.net_flow != sum(c.direction for c in self.crossings):
            raise ModelValidationError("net flow must be the sum of the directions", field="net_flow")

    def net_at(self, r0: float, tol: float = 1e-6) -> int:
        """Signed crossing count at r0"""
        return sum(c.direction for c in self.crossings if abs(c.r - r0) <= tol * max(1.0, abs(r0)))


def _below(model: FramedModel, r: float, lam: float) -> int:
    return int(np.count_nonzero(path_at(model, r).eigenvalues < lam))


def _bisect(
    model: FramedModel, lam: float, lo: float, hi: float, n_lo: int, n_hi: int, found: List[Tuple[float, int, int]]
) -> None:
    if n_lo == n_hi:
        return
    if hi - lo < FLOW_BISECTION_WIDTH:
        found.append(((lo + hi) / 2, n_lo, n_hi))
        return
    mid = (lo + hi) / 2
    n_mid = _below(model, mid, lam)
    _bisect(model, lam, lo, mid, n_lo, n_mid, found)
    _bisect(model, lam, mid, hi, n_mid, n_hi, found)


def _slopes(model: FramedModel, r: float, lam: float, count: int) -> np.ndarray:
    """d e/dr = <psi, V psi> for the eigenvalues of H_r closest to lam"""
    eigenvalues, vectors = linalg.eigh(path_at(model, r).entries)
    nearest = np.argsort(np.abs(eigenvalues - lam))[:count]
    psi = vectors[:, nearest]
    return np.real(np.einsum("ij,ik,kj->j", psi.conj(), model.V.entries, psi))


def spectral_flow(
    model: FramedModel, lam: float, a: float, b: float, grid: int = FLOW_GRID
) -> FlowRecord:
    """Signed count of eigenvalue branches of H_r crossing lam for r in (a, b)"""
    if grid < 1:
        raise ModelValidationError("grid must be positive", field="grid")
    if not a < b:
        raise ModelValidationError(f"interval must satisfy a < b, got [{a}, {b}]", field="interval")
    for end in (a, b):
        if np.min(np.abs(path_at(model, end).eigenvalues - lam)) <= COUNT_TOL:
            raise AmbiguousCountError(f"lambda={lam:g} is in the spectrum of H_{end:g}", r=end)

    rs = np.linspace(a, b, grid + 1)
    counts = [_below(model, float(r), lam) for r in rs]
    found: List[Tuple[float, int, int]] = []
    for i in range(grid):
        _bisect(model, lam, float(rs[i]), float(rs[i + 1]), counts[i], counts[i + 1], found)

    crossings: List[Crossing] = []
    scale = max(1.0, model.v_norm)
    for r, n_lo, n_hi in found:
        net = n_lo - n_hi
        slopes = _slopes(model, r, lam, abs(net))
        degenerate = bool(np.any(np.abs(slopes) < 1e-8 * scale))
        if degenerate:
            message = f"tangential crossing of lambda={lam:g} at r={r:.10g}, multiplicity about {abs(net)}"
            log.warning(message)
            warnings.warn(message, DegenerateCrossingWarning, stacklevel=2)
        direction = 1 if net > 0 else -1
        # the lowest branch index that changes side of lam
        first = min(n_lo, n_hi)
        for k in range(abs(net)):
            crossings.append(Crossing(r, direction, first + k, degenerate))
    record = FlowRecord(float(lam), tuple(crossings), sum(c.direction for c in crossings))
    log.debug("spectral flow at lambda=%g over [%g, %g]: %d", lam, a, b, record.net_flow)
    return record


def counting_xi(H_a: HermitianMatrix, H_b: HermitianMatrix, lam: float, tol: float = COUNT_TOL) -> int:
    """N_{H_a}(lam) - N_{H_b}(lam), N counting eigenvalues below lam"""
    H_a, H_b = as_hermitian(H_a), as_hermitian(H_b)
    for name, H in (("H_a", H_a), ("H_b", H_b)):
        if np.min(np.abs(H.eigenvalues - lam)) <= tol:
            raise AmbiguousCountError(f"lambda={lam:g} lies within {tol:.0e} of spec({name})", operator=name)
    return int(np.count_nonzero(H_a.eigenvalues < lam)) - int(np.count_nonzero(H_b.eigenvalues < lam))


def smoothed_xi_exact(H_a: HermitianMatrix, H_b: HermitianMatrix, z: SpectralParameter) -> float:
    """xi(z; H_b, H_a) = (1/pi) sum_k [Arg(e_k(H_b) - z) - Arg(e_k(H_a) - z)]"""
    if z.is_real:
        return float(counting_xi(H_a, H_b, z.lam))
    H_a, H_b = as_hermitian(H_a), as_hermitian(H_b)
    after = np.angle(H_b.eigenvalues - z.z)
    before = np.angle(H_a.eigenvalues - z.z)
    return (math.fsum(after) - math.fsum(before)) / math.pi


@dataclass(frozen=True)
class HalfplaneCounts:
    n_plus: int
    n_minus: int
    n_real_nonzero: int
    flagged: bool = False


def halfplane_counts(H: HermitianMatrix, V: HermitianMatrix, z: SpectralParameter) -> HalfplaneCounts:
    """Eigenvalues of R_z(H)V by half-plane, with algebraic multiplicity"""
    if z.is_real:
        raise ModelValidationError("half-plane counts need y > 0", field="y")
    H, V = as_hermitian(H), as_hermitian(V)
    product = resolvent(H, z) @ V.entries
    mu = linalg.eigvals(product)
    scale = max(float(np.linalg.norm(product, 2)), 1e-300)
    mu = mu[np.abs(mu) > ZERO_EIGENVALUE_TOL * scale]
    near_real = np.abs(mu.imag) <= KREIN_REAL_TOL * np.abs(mu)
    flagged = bool(np.any(near_real))
    if flagged:
        message = f"{int(np.count_nonzero(near_real))} eigenvalue(s) of R_z V within {KREIN_REAL_TOL:.0e} of the real axis"
        log.warning(message)
        warnings.warn(message, ClassificationWarning, stacklevel=2)
    return HalfplaneCounts(
        n_plus=int(np.count_nonzero(~near_real & (mu.imag > 0))),
        n_minus=int(np.count_nonzero(~near_real & (mu.imag < 0))),
        n_real_nonzero=int(np.count_nonzero(near_real)),
        flagged=flagged,
    )


def argument_principle_multiplicity(model: FramedModel, z: SpectralParameter, contour: Contour) -> int:
    """Zeros of det(1 + sT_z(H_0)J) inside a closed contour.

    d/ds log det(1 + sA) = Tr[(1 + sA)^{-1} A], so no branch of log det is ever chosen.
    """
    if not contour.is_closed:
        raise ModelValidationError("the argument principle needs a closed contour", field="contour")
    a = a_matrix(model, 0.0, z).entries
    eye = np.eye(a.shape[0])
    mu = linalg.eigvals(a)
    zeros = -1.0 / mu[np.abs(mu) > ZERO_EIGENVALUE_TOL * max(float(np.linalg.norm(a, 2)), 1e-300)]
    for zero in zeros:
        if contour.distance_to(complex(zero)) == 0.0:
            raise ContourCollisionError(f"det(1 + sTJ) vanishes on the contour at {zero:.6g}", zero=complex(zero))

    def log_derivative(nodes: np.ndarray) -> np.ndarray:
        return np.array([np.trace(linalg.solve(eye + s * a, a)) for s in nodes])

    count = contour.integrate(log_derivative) / (2j * math.pi)
    nearest = int(round(count.real))
    residual = abs(count - nearest)
    if residual >= ARGUMENT_RESIDUAL:
        raise ContourCollisionError(
            f"argument principle count {count:.6g} is not an integer; the contour is too close to a zero",
            residual=residual,
        )
    return nearest
