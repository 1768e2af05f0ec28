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

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from ..errors import ContourCollisionError, ConvergenceError, GeometryError
from ..Operators.constants import (
    EXCLUSION_TOL,
    GL_LOCAL_TOL,
    GL_MAX_DEPTH,
    GL_NODES,
)

Integrand = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=32)
def gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1]"""
    nodes, weights = special.roots_legendre(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def ordered_sum(values: np.ndarray) -> complex:
    """Compensated sum of complex values in their given order"""
    values = np.ravel(values)
    return complex(math.fsum(values.real), math.fsum(values.imag))


@dataclass(frozen=True)
class StraightSegment:
    p: complex
    q: complex

    @property
    def start(self) -> complex:
        return complex(self.p)

    @property
    def end(self) -> complex:
        return complex(self.q)

    def map(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        half = (self.q - self.p) / 2
        return self.p + half * (t + 1.0), np.full(t.shape, half, dtype=complex)

    def split(self) -> Tuple[StraightSegment, StraightSegment]:
        mid = (self.p + self.q) / 2
        return StraightSegment(self.p, mid), StraightSegment(mid, self.q)

    def distance_to(self, point: complex) -> float:
        d = self.q - self.p
        if d == 0:
            return abs(point - self.p)
        t = ((point - self.p) * d.conjugate()).real / abs(d) ** 2
        t = min(1.0, max(0.0, t))
        return abs(point - (self.p + t * d))


@dataclass(frozen=True)
class ArcSegment:
    """center + radius * exp(i theta), theta running from theta1 to theta2"""

    center: complex
    radius: float
    theta1: float
    theta2: float

    @property
    def start(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.theta1)

    @property
    def end(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.theta2)

    @property
    def is_circle(self) -> bool:
        return math.isclose(abs(self.theta2 - self.theta1), 2 * math.pi)

    def map(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        half = (self.theta2 - self.theta1) / 2
        theta = self.theta1 + half * (t + 1.0)
        point = self.center + self.radius * np.exp(1j * theta)
        return point, 1j * self.radius * np.exp(1j * theta) * half

    def split(self) -> Tuple[ArcSegment, ArcSegment]:
        mid = (self.theta1 + self.theta2) / 2
        return (
            ArcSegment(self.center, self.radius, self.theta1, mid),
            ArcSegment(self.center, self.radius, mid, self.theta2),
        )

    def distance_to(self, point: complex) -> float:
        offset = point - self.center
        if offset == 0:
            return self.radius
        angle = cmath.phase(offset)
        lo, hi = sorted((self.theta1, self.theta2))
        # bring the angle into [lo, lo + 2pi)
        angle = lo + (angle - lo) % (2 * math.pi)
        if angle <= hi:
            return abs(abs(offset) - self.radius)
        return min(abs(point - self.start), abs(point - self.end))


Segment = Union[StraightSegment, ArcSegment]


def _segment_rule(
    segment: Segment, n: int, periodic: bool = True
) -> Tuple[np.ndarray, np.ndarray]:
    if periodic and isinstance(segment, ArcSegment) and segment.is_circle:
        # trapezoid rule, spectrally accurate for periodic integrands
        theta = segment.theta1 + (segment.theta2 - segment.theta1) * np.arange(n) / n
        points = segment.center + segment.radius * np.exp(1j * theta)
        weights = 1j * segment.radius * np.exp(1j * theta) * (segment.theta2 - segment.theta1) / n
        return points, weights
    t, w = gauss_legendre(n)
    points, jacobian = segment.map(t)
    return points, w * jacobian


@dataclass(frozen=True)
class Contour:
    """A piecewise path with a fixed quadrature rule on every segment"""

    segments: Tuple[Segment, ...]
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        for before, after in zip(self.segments, self.segments[1:]):
            gap = abs(before.end - after.start)
            if gap > 1e-14 * max(1.0, abs(before.end)):
                raise GeometryError(f"contour segments do not join (gap {gap:.2e})")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @classmethod
    def build(cls, segments: Sequence[Segment], nodes_per_segment: int = GL_NODES) -> Contour:
        rules = [_segment_rule(segment, nodes_per_segment) for segment in segments]
        nodes = np.concatenate([rule[0] for rule in rules])
        weights = np.concatenate([rule[1] for rule in rules])
        return cls(tuple(segments), nodes, weights)

    @classmethod
    def circle(cls, center: complex, radius: float, n: int = 64) -> Contour:
        if radius <= 0:
            raise GeometryError("circle radius must be positive")
        return cls.build([ArcSegment(complex(center), float(radius), 0.0, 2 * math.pi)], n)

    @property
    def is_closed(self) -> bool:
        return abs(self.segments[0].start - self.segments[-1].end) <= 1e-14 * max(
            1.0, abs(self.segments[0].start)
        )

    def distance_to(self, point: complex) -> float:
        return min(segment.distance_to(point) for segment in self.segments)

    def check_exclusion(self, poles: Iterable[complex], tol: float) -> None:
        for pole in poles:
            distance = self.distance_to(complex(pole))
            if distance <= tol:
                raise ContourCollisionError(
                    f"pole {complex(pole):.6g} lies {distance:.2e} from the contour",
                    pole=complex(pole),
                )

    def integrate(self, f: Integrand) -> complex:
        return ordered_sum(self.weights * np.asarray(f(self.nodes)))

    def integrate_matrix(self, f: Callable[[complex], np.ndarray]) -> np.ndarray:
        total: Optional[np.ndarray] = None
        for node, weight in zip(self.nodes, self.weights):
            term = weight * f(complex(node))
            total = term if total is None else total + term
        assert total is not None
        return total


def circle_integral(
    f: Integrand,
    center: complex,
    radius: float,
    *,
    n: int,
    tol: float,
    max_n: int,
    poles: Sequence[complex] = (),
) -> Tuple[complex, int]:
    """Trapezoid rule on a circle, doubling the node count until the value settles"""
    contour = Contour.circle(center, radius, n)
    contour.check_exclusion(poles, EXCLUSION_TOL * radius)
    value = contour.integrate(f)
    while n < max_n:
        n *= 2
        refined = Contour.circle(center, radius, n).integrate(f)
        if abs(refined - value) < tol * max(1.0, abs(refined)):
            return refined, n
        value = refined
    raise ConvergenceError(
        f"circle integral did not settle with {n} nodes", value=[value.real, value.imag]
    )


def _adaptive(f: Integrand, segment: Segment, whole: complex, tol: float, depth: int) -> complex:
    left, right = segment.split()
    parts = []
    for piece in (left, right):
        points, weights = _segment_rule(piece, GL_NODES, periodic=False)
        parts.append(ordered_sum(weights * np.asarray(f(points))))
    refined = parts[0] + parts[1]
    if abs(refined - whole) <= tol or depth >= GL_MAX_DEPTH:
        if depth >= GL_MAX_DEPTH and abs(refined - whole) > tol:
            raise ConvergenceError(
                f"adaptive Gauss-Legendre hit depth {depth} on {segment}",
                error=abs(refined - whole),
            )
        return refined
    half = max(tol / 2, 1e-15)
    return _adaptive(f, left, parts[0], half, depth + 1) + _adaptive(
        f, right, parts[1], half, depth + 1
    )


def adaptive_integral(f: Integrand, segments: Sequence[Segment], tol: float = GL_LOCAL_TOL) -> complex:
    """Adaptive composite Gauss-Legendre along a chain of segments"""
    total: List[complex] = []
    for segment in segments:
        points, weights = _segment_rule(segment, GL_NODES, periodic=False)
        whole = ordered_sum(weights * np.asarray(f(points)))
        total.append(_adaptive(f, segment, whole, tol, 0))
    return ordered_sum(np.array(total))
