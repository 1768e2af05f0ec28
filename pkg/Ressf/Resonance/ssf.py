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
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from ..errors import (
    ContourCollisionError,
    ConvergenceError,
    DegeneratePathError,
    GeometryError,
    ModelValidationError,
    SingularResolventError,
)
from ..Operators.constants import (
    CLUSTER_GAP,
    DECOMPOSITION_TOL,
    EXCLUSION_TOL,
    GL_LOCAL_TOL,
    INTEGER_TOL,
    LARGE_COUPLING_TOL,
    NON_RESONANT_STEPS,
    QUAD_EPSABS,
    QUAD_LIMIT,
    QUAD_PEAK_WIDTHS,
    RESIDUE_MAX_NODES,
    RESIDUE_NODES,
    RESIDUE_TOL,
    RICHARDSON_AGREEMENT,
    RICHARDSON_MAX_LEVELS,
    RICHARDSON_STABLE,
    Y_SCHEDULE_FACTOR,
)
from ..Operators.model import (
    FramedModel,
    SpectralParameter,
    is_regular_point,
    path_at,
    regular_base,
    signature,
)
from ..Operators.transfer import TraceFunction, a_matrix
from .contour import ArcSegment, Segment, StraightSegment, adaptive_integral, circle_integral
from .poles import clustering_radius, real_resonance_points, resonance_index, resonance_points_all

log = logging.getLogger(__name__)


def _trace_function(model: FramedModel, z: SpectralParameter) -> TraceFunction:
    return TraceFunction(model, z, regular_base(model, z.lam) if z.is_real else 0.0)


def residue_at(model: FramedModel, z: SpectralParameter, s0: complex, radius: float) -> complex:
    """Residue of F_z at s0, as (1/2 pi i) times the integral over |s - s0| = radius"""
    function = _trace_function(model, z)
    value, _ = circle_integral(
        function,
        complex(s0),
        radius,
        n=RESIDUE_NODES,
        tol=RESIDUE_TOL,
        max_n=RESIDUE_MAX_NODES,
        poles=function.poles,
    )
    return value / (2j * math.pi)


def _detour_radius(poles: np.ndarray, r0: float, a: float, b: float) -> float:
    distances = np.abs(poles - r0)
    others = distances[distances > CLUSTER_GAP * max(1.0, abs(r0))]
    radius = 0.5 * float(np.min(others)) if others.size else 0.5 * (b - a)
    return min(radius, 0.5 * (r0 - a), 0.5 * (b - r0))


def detour_path(
    a: float, b: float, centers: Sequence[float], radii: Sequence[float]
) -> List[Segment]:
    """Straight a -> b with a semicircle above every center"""
    segments: List[Segment] = []
    start = complex(a)
    for center, radius in zip(centers, radii):
        left = complex(center - radius)
        if left.real > start.real:
            segments.append(StraightSegment(start, left))
        segments.append(ArcSegment(complex(center), radius, math.pi, 0.0))
        start = complex(center + radius)
    segments.append(StraightSegment(start, complex(b)))
    return segments


def xi_a_contour(
    model: FramedModel, lam: float, a: float, b: float, *, y: float = 0.0, radius_scale: float = 1.0
) -> float:
    """Integral of F_{lam+iy} along the straight path from a to b detouring above each
    resonance point; at y = 0 this is the absolutely continuous part of xi.

    ``radius_scale`` shrinks every detour below its default radius.
    """
    if not a < b:
        raise ModelValidationError(f"interval must satisfy a < b, got [{a}, {b}]", field="interval")
    if not 0 < radius_scale <= 1:
        raise ModelValidationError("radius_scale must lie in (0, 1]", field="radius_scale")
    z = SpectralParameter(lam, y)
    function = _trace_function(model, z)
    centers = [r for r in resonance_points_all(model, lam) if a < r < b]
    reference = _trace_function(model, SpectralParameter(lam)).poles
    radii = [radius_scale * _detour_radius(reference, r, a, b) for r in centers]
    for center, radius in zip(centers, radii):
        if radius <= 1e-12 * max(1.0, abs(center)):
            raise GeometryError(f"no room for a detour around r0={center:g}", r0=center)
        if y > 0:
            group = function.poles[np.abs(function.poles - center) < radius]
            if group.size and np.max(np.abs(group - center)) >= radius * (1 - EXCLUSION_TOL):
                raise GeometryError(
                    f"the pole group of r0={center:g} reaches the detour at y={y:.3e}", r0=center
                )
    segments = detour_path(a, b, centers, radii)
    for segment in segments:
        for pole in function.poles:
            if segment.distance_to(complex(pole)) <= EXCLUSION_TOL * min(radii + [b - a]):
                raise ContourCollisionError(f"pole {complex(pole):.6g} lies on the detour path", pole=complex(pole))
    value = adaptive_integral(function, segments, GL_LOCAL_TOL)
    if abs(value.imag) > 1e-8 * max(1.0, abs(value.real)):
        raise ConvergenceError(
            f"xi_a contour has imaginary residual {value.imag:.2e}",
            value=[value.real, value.imag],
        )
    return value.real


def xi_smoothed(model: FramedModel, lam: float, y: float, a: float, b: float) -> float:
    """xi(lam+iy; H_b, H_a): the integral of F_{lam+iy} over [a, b].

    Each eigen term mu/(1 + t mu) - conj(mu)/(1 + t conj(mu)) has the antiderivative
    2i Arg(1 + t mu), so the integral is (1/pi) sum_k Arg((1 + t_b mu_k)/(1 + t_a mu_k)).
    The segment t -> 1 + t mu misses the origin for non-real mu, hence the principal
    argument of the ratio is the continuous one.
    """
    if y <= 0:
        raise ModelValidationError("the smoothed xi needs y > 0", field="y")
    if a == b:
        return 0.0
    if a > b:
        return -xi_smoothed(model, lam, y, b, a)
    function = TraceFunction(model, SpectralParameter(lam, y))
    mu = function.mu
    if mu.size == 0:
        return 0.0
    start = 1.0 + (a - function.base) * mu
    end = 1.0 + (b - function.base) * mu
    if np.any(start == 0) or np.any(end == 0):
        function.check_pole(complex(a))
        function.check_pole(complex(b))
    return math.fsum(np.angle(end / start)) / math.pi


def xi_smoothed_quadrature(model: FramedModel, lam: float, y: float, a: float, b: float) -> float:
    """The same integral by adaptive quadrature, with breakpoints at Re p +- k |Im p|"""
    if y <= 0:
        raise ModelValidationError("the smoothed xi needs y > 0", field="y")
    if a >= b:
        return -xi_smoothed_quadrature(model, lam, y, b, a) if a > b else 0.0
    function = TraceFunction(model, SpectralParameter(lam, y))
    points = {
        float(p.real + k * abs(p.imag))
        for p in function.poles
        for k in QUAD_PEAK_WIDTHS
    }
    inner = sorted(p for p in points if a < p < b)
    value, _ = integrate.quad(
        lambda s: function(s).real,
        a,
        b,
        points=inner or None,
        limit=QUAD_LIMIT + 4 * len(inner),
        epsabs=QUAD_EPSABS,
        epsrel=1e-12,
    )
    return float(value)


def upper_group_integral(
    model: FramedModel, lam: float, r0: float, y: float, radius: float
) -> complex:
    """Integral of F_{lam+iy} counter-clockwise around the half-disc above r0"""
    if y <= 0:
        raise ModelValidationError("the half-disc integral needs y > 0", field="y")
    function = TraceFunction(model, SpectralParameter(lam, y))
    segments: List[Segment] = [
        StraightSegment(complex(r0 - radius), complex(r0 + radius)),
        ArcSegment(complex(r0), radius, 0.0, math.pi),
    ]
    for pole in function.poles:
        if min(s.distance_to(complex(pole)) for s in segments) <= EXCLUSION_TOL * min(radius, y):
            raise ContourCollisionError(f"pole {complex(pole):.6g} lies on the half-disc", pole=complex(pole))
    return adaptive_integral(function, segments, GL_LOCAL_TOL)


@dataclass(frozen=True)
class Jump:
    r0: float
    jump: int
    raw: float
    n_plus: int
    n_minus: int

    def to_dict(self) -> Dict[str, Any]:
        return {"r0": self.r0, "jump": self.jump, "raw": self.raw, "n_plus": self.n_plus, "n_minus": self.n_minus}


@dataclass(frozen=True)
class SsfDecomposition:
    lam: float
    a: float
    b: float
    xi: float
    xi_a: float
    xi_s: float
    jumps: Tuple[Jump, ...]
    y_extrapolation_error: float
    y_schedule: Tuple[float, ...] = field(default=())

    @property
    def jump_sum(self) -> int:
        return sum(j.jump for j in self.jumps)

    @property
    def residual(self) -> float:
        """|xi - xi_a - sum of jumps|"""
        return abs(self.xi - self.xi_a - self.jump_sum)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam,
            "a": self.a,
            "b": self.b,
            "xi": self.xi,
            "xi_a": self.xi_a,
            "xi_s": self.xi_s,
            "jumps": [j.to_dict() for j in self.jumps],
            "y_extrapolation_error": self.y_extrapolation_error,
            "y_schedule": list(self.y_schedule),
        }


@dataclass(frozen=True)
class Extrapolation:
    value: float
    error: float
    ys: Tuple[float, ...]
    samples: Tuple[float, ...]


def _endpoint_spectra(model: FramedModel, lam: float, a: float, b: float) -> float:
    eigenvalues = np.concatenate([path_at(model, a).eigenvalues, path_at(model, b).eigenvalues])
    return float(np.min(np.abs(eigenvalues - lam)))


def extrapolate_xi(
    model: FramedModel,
    lam: float,
    a: float,
    b: float,
    *,
    y0: Optional[float] = None,
) -> Extrapolation:
    """lim_{y -> 0+} xi(lam+iy; H_b, H_a) by Richardson extrapolation on y0, y0/2, ..."""
    if y0 is None:
        points = [r for r in resonance_points_all(model, lam) if a < r < b]
        gaps = np.diff(sorted(points + [a, b]))
        scale = min(float(np.min(gaps)), _endpoint_spectra(model, lam, a, b))
        y0 = Y_SCHEDULE_FACTOR * (scale if scale > 0 else 1.0)
    ys: List[float] = []
    samples: List[float] = []
    table: List[List[float]] = []
    diagonal: List[float] = []
    agreeing = 0
    y = y0
    for level in range(RICHARDSON_MAX_LEVELS):
        ys.append(y)
        samples.append(xi_smoothed(model, lam, y, a, b))
        if level >= 2:
            # halving y must shrink the step between samples
            step, previous = abs(samples[-1] - samples[-2]), abs(samples[-2] - samples[-3])
            if step > previous + RICHARDSON_AGREEMENT:
                raise ConvergenceError(
                    f"xi jumps by {step:.3e} at y={y:.3e} (previous step {previous:.3e})",
                    ys=ys,
                    samples=samples,
                )
        row = [samples[-1]]
        for j in range(1, level + 1):
            factor = 2.0**j - 1.0
            row.append(row[j - 1] + (row[j - 1] - table[level - 1][j - 1]) / factor)
        table.append(row)
        diagonal.append(row[-1])
        if len(diagonal) >= 2:
            change = abs(diagonal[-1] - diagonal[-2])
            agreeing = agreeing + 1 if change < RICHARDSON_AGREEMENT else 0
            if agreeing >= RICHARDSON_STABLE:
                return Extrapolation(diagonal[-1], change, tuple(ys), tuple(samples))
        y /= 2
    raise ConvergenceError(
        f"Richardson extrapolation of xi did not settle at lambda={lam:g}",
        ys=ys,
        samples=samples,
    )


def ssf_decompose(
    model: FramedModel, lam: float, a: float, b: float, *, y0: Optional[float] = None
) -> SsfDecomposition:
    """xi = xi_a + xi_s over [a, b], with the jump of xi_s at every resonance point"""
    if not a < b:
        raise ModelValidationError(f"interval must satisfy a < b, got [{a}, {b}]", field="interval")
    for name, end in (("a", a), ("b", b)):
        if not is_regular_point(model, end, lam):
            raise SingularResolventError(
                f"endpoint {name}={end:g} is resonant at lambda={lam:g}", endpoint=name
            )

    extrapolation = extrapolate_xi(model, lam, a, b, y0=y0)
    xi_a = xi_a_contour(model, lam, a, b)
    jumps: List[Jump] = []
    for r0 in real_resonance_points(model, lam, (a, b)):
        index = resonance_index(model, lam, r0)
        radius = clustering_radius(model, lam, r0)
        raw = upper_group_integral(model, lam, r0, index.y_used, radius).real
        jump = int(round(raw))
        if abs(raw - jump) >= INTEGER_TOL:
            log.warning("jump at r0=%g is %.3e away from an integer", r0, abs(raw - jump))
        if jump != index.index:
            log.warning("jump %d at r0=%g disagrees with the resonance index %d", jump, r0, index.index)
        jumps.append(Jump(r0, jump, raw, index.n_plus, index.n_minus))

    decomposition = SsfDecomposition(
        lam=float(lam),
        a=float(a),
        b=float(b),
        xi=extrapolation.value,
        xi_a=xi_a,
        xi_s=extrapolation.value - xi_a,
        jumps=tuple(jumps),
        y_extrapolation_error=extrapolation.error,
        y_schedule=extrapolation.ys,
    )
    if decomposition.residual > DECOMPOSITION_TOL:
        raise ConvergenceError(
            f"xi_s - sum of jumps = {decomposition.residual:.3e} at lambda={lam:g}",
            xi=decomposition.xi,
            xi_a=xi_a,
            jumps=[j.jump for j in jumps],
        )
    return decomposition


@dataclass(frozen=True)
class LargeCouplingResult:
    xi_limit: float
    signature: int
    converged: bool
    values: Tuple[Tuple[float, float], ...]
    xi_a_limit: int
    index_sum: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "xi_limit": self.xi_limit,
            "signature": self.signature,
            "converged": self.converged,
            "values": [list(v) for v in self.values],
            "xi_a_limit": self.xi_a_limit,
            "index_sum": self.index_sum,
        }


def default_coupling_schedule(model: FramedModel) -> Tuple[float, ...]:
    """R = 10^k (1 + |H_0|) / |V| for k = 1..4"""
    if model.v_norm == 0:
        return (10.0, 100.0, 1000.0, 10000.0)
    scale = (1.0 + float(np.max(np.abs(model.H0.eigenvalues)))) / model.v_norm
    return tuple(scale * 10.0**k for k in range(1, 5))


def _non_resonant(model: FramedModel, lam: float, R: float) -> float:
    for _ in range(NON_RESONANT_STEPS):
        if is_regular_point(model, R, lam) and is_regular_point(model, -R, lam):
            return R
        R *= 1.0 + 1e-3
    raise DegeneratePathError(f"no regular coupling pair +-R near R={R:g} at lambda={lam:g}", lam=lam)


def xi_a_limit(model: FramedModel, lam: float) -> int:
    """(# eigenvalues of T_{lam+i0}(H_0)J in C+) - (# in C-)"""
    base = regular_base(model, lam)
    mu = a_matrix(model, base, SpectralParameter(lam)).eigenvalues()
    scale = max(1.0, float(np.max(np.abs(mu), initial=0.0)))
    upper = int(np.count_nonzero(mu.imag > 1e-9 * scale))
    lower = int(np.count_nonzero(mu.imag < -1e-9 * scale))
    return upper - lower


def large_coupling_limit(
    model: FramedModel, lam: float, R_schedule: Optional[Sequence[float]] = None
) -> LargeCouplingResult:
    """xi(lam; H_R, H_-R) along an increasing schedule of R, compared with signature(V)"""
    if R_schedule is None:
        R_schedule = default_coupling_schedule(model)
    R_schedule = [float(R) for R in R_schedule]
    if not R_schedule:
        raise ModelValidationError("R_schedule is empty", field="R_schedule")
    if any(later <= earlier for earlier, later in zip(R_schedule, R_schedule[1:])):
        raise ModelValidationError("R_schedule must be increasing", field="R_schedule")
    target = signature(model.V)
    values: List[Tuple[float, float]] = []
    converged = False
    for R in R_schedule:
        R = _non_resonant(model, lam, float(R))
        xi = extrapolate_xi(model, lam, -R, R).value
        values.append((R, xi))
        if abs(xi - target) < LARGE_COUPLING_TOL:
            converged = True
            break

    index_sum = sum(resonance_index(model, lam, r0).index for r0 in resonance_points_all(model, lam))
    absolutely_continuous = xi_a_limit(model, lam)
    if index_sum != target - absolutely_continuous:
        log.warning(
            "sum of resonance indices %d differs from signature - xi_a = %d",
            index_sum,
            target - absolutely_continuous,
        )
    return LargeCouplingResult(
        xi_limit=values[-1][1],
        signature=target,
        converged=converged,
        values=tuple(values),
        xi_a_limit=absolutely_continuous,
        index_sum=index_sum,
    )
