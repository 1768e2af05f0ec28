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
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..errors import (
    ContourCollisionError,
    ConvergenceError,
    DefectiveClusterWarning,
    GroupOverlapError,
    InstabilityError,
    ModelValidationError,
    ScheduleCapWarning,
)
from ..Operators.constants import (
    CLUSTER_GAP,
    EXCLUSION_TOL,
    REAL_AXIS_TOL,
    RESIDUE_TOL,
    RIESZ_MAX_NODES,
    RIESZ_NODES,
    RIESZ_TOL,
    Y_SCHEDULE_FACTOR,
    Y_SCHEDULE_MAX_HALVINGS,
    Y_SCHEDULE_STABLE,
)
from ..Operators.model import FramedModel, SpectralParameter, regular_base
from ..Operators.transfer import TraceFunction, a_matrix
from .contour import Contour

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Pole:
    """A pole of f_z(s) = (1 + sT_z(H_0)J)^{-1}"""

    location: complex
    algebraic_multiplicity: int
    source_eigenvalue: complex

    def __post_init__(self) -> None:
        if self.algebraic_multiplicity < 1:
            raise ModelValidationError("multiplicity must be positive", field="algebraic_multiplicity")
        if self.location == 0:
            # lambda in spec(H_0): T_z(H_0) itself does not exist
            if not cmath.isinf(self.source_eigenvalue):
                raise ModelValidationError(
                    "a pole at s = 0 has no finite source eigenvalue", field="source_eigenvalue"
                )
            return
        if abs(self.source_eigenvalue * self.location + 1) > 1e-10 * max(
            1.0, abs(self.source_eigenvalue * self.location)
        ):
            raise ModelValidationError(
                "source eigenvalue and location are not reciprocal", field="source_eigenvalue"
            )

    @classmethod
    def at(cls, location: complex, multiplicity: int = 1) -> Pole:
        location = complex(location)
        source = -1.0 / location if location != 0 else complex(math.inf, 0.0)
        return cls(location, multiplicity, source)

    @property
    def is_up(self) -> bool:
        return self.location.imag > 0


def _clusters(points: np.ndarray, gap: float) -> List[Tuple[complex, int, float]]:
    """Single-linkage clusters as (mean, size, spread), sorted by real then imaginary part"""
    n = points.size
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(points[i] - points[j]) <= gap * max(1.0, abs(points[i]), abs(points[j])):
                parent[find(i)] = find(j)

    groups: Dict[int, List[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = []
    for members in groups.values():
        values = points[members]
        center = complex(np.mean(values))
        spread = float(np.max(np.abs(values - center)))
        clusters.append((center, len(members), spread))
    clusters.sort(key=lambda c: (round(c[0].real, 12), round(c[0].imag, 12)))
    return clusters


def _warn_ambiguous(points: np.ndarray, gap: float) -> bool:
    """Pairs whose distance sits just above the clustering gap"""
    for i in range(points.size):
        for j in range(i + 1, points.size):
            scale = max(1.0, abs(points[i]), abs(points[j]))
            distance = abs(points[i] - points[j])
            if gap * scale < distance <= 100 * gap * scale:
                message = (
                    f"poles {complex(points[i]):.6g} and {complex(points[j]):.6g} are "
                    f"{distance:.2e} apart, close to the clustering gap"
                )
                log.warning(message)
                warnings.warn(message, DefectiveClusterWarning, stacklevel=3)
                return True
    return False


def _check_cluster(model: FramedModel, z: SpectralParameter, base: float, pole: Pole, radius: float) -> None:
    from ..Oracles.oracles import argument_principle_multiplicity

    center = pole.location - base
    try:
        count = argument_principle_multiplicity(
            model.rebased(base) if base else model, z, Contour.circle(center, radius)
        )
    except (ContourCollisionError, ConvergenceError):
        count = -1
    if count != pole.algebraic_multiplicity:
        message = (
            f"cluster at s={pole.location:.6g} has {pole.algebraic_multiplicity} eigenvalues "
            f"but the argument principle counts {count}"
        )
        log.warning(message)
        warnings.warn(message, DefectiveClusterWarning, stacklevel=3)


def eigen_poles(
    model: FramedModel,
    z: SpectralParameter,
    *,
    base: Optional[float] = None,
    cluster_gap: float = CLUSTER_GAP,
) -> List[Pole]:
    """Poles of f_z(s) as -1/mu over the nonzero eigenvalues mu of T_z(H_0)J.

    ``base`` computes them from T_z(H_base)J instead, which is needed when z is real
    and lambda sits on spec(H_0); the locations do not depend on the base.
    """
    if base is None:
        base = regular_base(model, z.lam) if z.is_real else 0.0
    function = TraceFunction(model, z, base)
    points = base - 1.0 / function.mu
    clusters = _clusters(points, cluster_gap)
    poles = [Pole.at(center, size) for center, size, _ in clusters]
    _warn_ambiguous(np.array([p.location for p in poles]), cluster_gap)
    for i, pole in enumerate(poles):
        if pole.algebraic_multiplicity == 1:
            continue
        others = [abs(pole.location - q.location) for j, q in enumerate(poles) if j != i]
        radius = 0.5 * min(others) if others else 0.1 * max(1.0, abs(pole.location))
        _check_cluster(model, z, base, pole, radius)
    return poles


def _real_poles(model: FramedModel, lam: float) -> Tuple[List[Pole], float]:
    z = SpectralParameter(lam)
    base = regular_base(model, lam)
    poles = eigen_poles(model, z, base=base)
    real = [
        Pole.at(p.location.real, p.algebraic_multiplicity)
        for p in poles
        if abs(p.location.imag) <= REAL_AXIS_TOL * max(1.0, abs(p.location))
    ]
    return real, base


def resonance_points_all(model: FramedModel, lam: float) -> List[float]:
    """Every real pole of f_{lam+i0} on the whole line"""
    real, _ = _real_poles(model, lam)
    return sorted(p.location.real for p in real)


def real_resonance_points(model: FramedModel, lam: float, interval: Sequence[float]) -> List[float]:
    """Real resonance points r0 in [a, b], i.e. real s0 with -1/s0 in spec T_{lam+i0}(H_0)J"""
    a, b = (float(v) for v in interval)
    if not a < b:
        raise ModelValidationError(f"interval must satisfy a < b, got [{a}, {b}]", field="interval")
    return [r for r in resonance_points_all(model, lam) if a <= r <= b]


def _multiplicity_at(model: FramedModel, lam: float, r0: float) -> Tuple[int, float]:
    real, base = _real_poles(model, lam)
    for pole in real:
        if abs(pole.location.real - r0) <= 1e-8 * max(1.0, abs(r0)):
            return pole.algebraic_multiplicity, base
    raise ModelValidationError(f"r0={r0:g} is not a resonance point at lambda={lam:g}", field="r0")


def clustering_radius(model: FramedModel, lam: float, r0: float) -> float:
    """min(half the distance to the nearest other pole of F_{lam+i0}, 0.1|r0| + 0.1)"""
    base = regular_base(model, lam)
    poles = TraceFunction(model, SpectralParameter(lam), base).poles
    distances = np.abs(poles - r0)
    others = distances[distances > CLUSTER_GAP * max(1.0, abs(r0))]
    cap = 0.1 * abs(r0) + 0.1
    return float(min(0.5 * np.min(others), cap)) if others.size else cap


@dataclass(frozen=True)
class PoleGroup:
    """The poles of f_{lam+iy} that split off the real resonance point r0"""

    resonance_point: float
    y: float
    ups: Tuple[Pole, ...]
    downs: Tuple[Pole, ...]
    radius: float

    def __post_init__(self) -> None:
        if self.y <= 0 or self.radius <= 0:
            raise ModelValidationError("a pole group needs y > 0 and a positive radius", field="y")
        for pole in self.ups + self.downs:
            if abs(pole.location - self.resonance_point) > self.radius:
                raise GroupOverlapError(
                    f"pole {pole.location:.6g} lies outside the group radius {self.radius:.3g}"
                )

    @property
    def n_plus(self) -> int:
        return sum(p.algebraic_multiplicity for p in self.ups)

    @property
    def n_minus(self) -> int:
        return sum(p.algebraic_multiplicity for p in self.downs)

    @property
    def multiplicity(self) -> int:
        return self.n_plus + self.n_minus

    @property
    def partition(self) -> Tuple[int, int]:
        return self.n_plus, self.n_minus

    def upper_poles_of_trace(self) -> List[Tuple[complex, int, int]]:
        """Poles of F_z in the upper half-plane as (location, sign, multiplicity).

        Up-poles of f_z count +1 and the mirror images of down-poles count -1.
        """
        black = [(p.location, 1, p.algebraic_multiplicity) for p in self.ups]
        white = [(p.location.conjugate(), -1, p.algebraic_multiplicity) for p in self.downs]
        return black + white


def group_and_classify(
    model: FramedModel,
    lam: float,
    r0: float,
    y: float,
    *,
    radius: Optional[float] = None,
) -> PoleGroup:
    """Split the poles of f_{lam+iy} around r0 into up- and down-poles"""
    if y <= 0:
        raise ModelValidationError("group_and_classify needs y > 0", field="y")
    multiplicity, base = _multiplicity_at(model, lam, r0)
    if radius is None:
        radius = clustering_radius(model, lam, r0)
    poles = eigen_poles(model, SpectralParameter(lam, y), base=base)
    members = [p for p in poles if abs(p.location - r0) <= radius]
    total = sum(p.algebraic_multiplicity for p in members)
    if total != multiplicity:
        raise GroupOverlapError(
            f"group of r0={r0:g} holds {total} poles at y={y:.3e}, expected {multiplicity}",
            r0=r0,
            y=y,
        )
    for pole in members:
        if abs(pole.location.imag) <= REAL_AXIS_TOL * max(1.0, abs(pole.location)):
            raise InstabilityError(
                f"pole {pole.location:.6g} did not leave the real axis at y={y:.3e}", y=y
            )
    ups = tuple(p for p in members if p.is_up)
    downs = tuple(p for p in members if not p.is_up)
    return PoleGroup(float(r0), float(y), ups, downs, float(radius))


@dataclass(frozen=True)
class ResonanceIndexResult:
    lam: float
    r0: float
    n_plus: int
    n_minus: int
    index: int
    y_used: float
    residue_check: complex
    multiplicity: int
    y_schedule: Tuple[Tuple[float, int, int], ...] = field(default=())
    capped: bool = False

    def __post_init__(self) -> None:
        if self.index != self.n_plus - self.n_minus:
            raise ModelValidationError("index must equal n_plus - n_minus", field="index")
        if self.n_plus < 0 or self.n_minus < 0 or self.n_plus + self.n_minus != self.multiplicity:
            raise ModelValidationError("up/down counts do not add up to the multiplicity", field="n_plus")

    @property
    def residue_residual(self) -> float:
        return abs(2j * math.pi * self.residue_check - self.index)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam,
            "r0": self.r0,
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "index": self.index,
            "multiplicity": self.multiplicity,
            "y_used": self.y_used,
            "residue_check": [self.residue_check.real, self.residue_check.imag],
            "y_schedule": [list(step) for step in self.y_schedule],
            "capped": self.capped,
        }


def y_schedule_start(model: FramedModel, lam: float) -> float:
    """1e-2 times the smallest gap between resonance points (1e-2 when there is a single one)"""
    points = resonance_points_all(model, lam)
    gaps = np.diff(points)
    gaps = gaps[gaps > 0]
    return Y_SCHEDULE_FACTOR * (float(np.min(gaps)) if gaps.size else 1.0)


def _residue_check(model: FramedModel, lam: float, group: PoleGroup) -> complex:
    from .ssf import residue_at

    z = SpectralParameter(lam, group.y)
    upper = group.upper_poles_of_trace()
    locations = np.array([loc for loc, _, _ in upper], dtype=complex)
    every = TraceFunction(model, z).poles
    total = []
    for center, _, _ in _clusters(locations, CLUSTER_GAP):
        distances = np.abs(every - center)
        others = distances[distances > CLUSTER_GAP * max(1.0, abs(center))]
        radius = 0.5 * float(np.min(others)) if others.size else 0.5 * group.radius
        total.append(residue_at(model, z, center, radius))
    return complex(math.fsum(c.real for c in total), math.fsum(c.imag for c in total))


def resonance_index(
    model: FramedModel,
    lam: float,
    r0: float,
    *,
    y0: Optional[float] = None,
    max_halvings: int = Y_SCHEDULE_MAX_HALVINGS,
    stable: int = Y_SCHEDULE_STABLE,
) -> ResonanceIndexResult:
    """N+ - N- for the group of r0, on a halving y-schedule until the partition settles"""
    if y0 is None:
        y0 = y_schedule_start(model, lam)
    radius = clustering_radius(model, lam, r0)
    schedule: List[Tuple[float, int, int]] = []
    groups: List[PoleGroup] = []
    y = y0
    for _ in range(max_halvings + 1):
        try:
            group = group_and_classify(model, lam, r0, y, radius=radius)
        except (GroupOverlapError, InstabilityError) as e:
            log.debug("y=%.3e rejected for r0=%g: %s", y, r0, e)
            groups.clear()
            y /= 2
            continue
        schedule.append((y, group.n_plus, group.n_minus))
        if groups and groups[-1].partition != group.partition:
            groups.clear()
        groups.append(group)
        if len(groups) >= stable:
            break
        y /= 2

    capped = len(groups) < stable
    if not groups:
        raise InstabilityError(
            f"no admissible y for r0={r0:g} at lambda={lam:g}",
            y_schedule=[list(step) for step in schedule],
        )
    if capped:
        message = f"y-schedule hit its cap for r0={r0:g}; partition seen {len(groups)} time(s)"
        if len(groups) < 2:
            raise InstabilityError(message, y_schedule=[list(step) for step in schedule])
        log.warning(message)
        warnings.warn(message, ScheduleCapWarning, stacklevel=2)

    group = groups[-1]
    residue = _residue_check(model, lam, group)
    result = ResonanceIndexResult(
        lam=float(lam),
        r0=float(r0),
        n_plus=group.n_plus,
        n_minus=group.n_minus,
        index=group.n_plus - group.n_minus,
        y_used=group.y,
        residue_check=residue,
        multiplicity=group.multiplicity,
        y_schedule=tuple(schedule),
        capped=capped,
    )
    if result.residue_residual > 1e-6:
        log.warning(
            "residue check off by %.2e at r0=%g (index %d)", result.residue_residual, r0, result.index
        )
    log.debug("lambda=%g r0=%g: N+=%d N-=%d", lam, r0, result.n_plus, result.n_minus)
    return result


def _riesz(a: np.ndarray, center: complex, radius: float, n: int) -> np.ndarray:
    eye = np.eye(a.shape[0])
    contour = Contour.circle(center, radius, n)
    return contour.integrate_matrix(lambda t: linalg.solve(t * eye - a, eye)) / (2j * math.pi)


def riesz_projector(
    model: FramedModel,
    r: float,
    z: SpectralParameter,
    s: float,
    circle_radius: float,
) -> np.ndarray:
    """Riesz idempotent of T_z(H_{r+s})J for its eigenvalue 1/s.

    A resonance of H_r is regularized at H_{r+s}; there the resonance eigenvalue of
    T_z(H_{r+s})J sits at 1/s, and a circle of ``circle_radius`` around it picks out
    its root space.
    """
    if s == 0:
        raise ModelValidationError("the regularizing offset s must be nonzero", field="s")
    a = a_matrix(model, r + s, z).entries
    center = 1.0 / s
    eigenvalues = linalg.eigvals(a)
    distance = np.abs(np.abs(eigenvalues - center) - circle_radius)
    if np.any(distance <= EXCLUSION_TOL * circle_radius):
        raise ContourCollisionError(
            f"an eigenvalue of T J lies on the circle |t - {center:.6g}| = {circle_radius:.3g}",
            radius=circle_radius,
        )
    n = RIESZ_NODES
    projector = _riesz(a, center, circle_radius, n)
    while n < RIESZ_MAX_NODES:
        n *= 2
        refined = _riesz(a, center, circle_radius, n)
        if np.linalg.norm(refined - projector) < RIESZ_TOL:
            projector = refined
            break
        projector = refined
    else:
        raise ConvergenceError(f"Riesz projector did not settle with {n} nodes", nodes=n)
    defect = float(np.linalg.norm(projector @ projector - projector))
    if defect >= 1e-8:
        raise ConvergenceError(f"Riesz projector is not idempotent (|P^2 - P| = {defect:.2e})", defect=defect)
    projector.setflags(write=False)
    return projector


@dataclass(frozen=True)
class RootSpace:
    r0: float
    s: float
    dimension: int
    basis: np.ndarray = field(repr=False)
    projector: np.ndarray = field(repr=False)

    def residual(self, model: FramedModel, lam: float, s_prime: float) -> float:
        """max over the basis of |(1 - s' T_{lam+i0}(H_{r0+s'})J)^n psi|, n the dimension"""
        a = a_matrix(model, self.r0 + s_prime, SpectralParameter(lam)).entries
        operator = np.linalg.matrix_power(np.eye(a.shape[0]) - s_prime * a, self.dimension)
        return float(np.max(np.linalg.norm(operator @ self.basis, axis=0), initial=0.0))


def root_space(model: FramedModel, lam: float, r0: float, s: float) -> RootSpace:
    """Span of the resonance vectors of every order at the resonance point r0"""
    z = SpectralParameter(lam)
    a = a_matrix(model, r0 + s, z).entries
    center = 1.0 / s
    eigenvalues = linalg.eigvals(a)
    distances = np.abs(eigenvalues - center)
    others = distances[distances > 1e-4 * abs(center)]
    radius = 0.5 * float(np.min(others)) if others.size else 0.5 * abs(center)
    projector = riesz_projector(model, r0, z, s, radius)
    dimension = int(round(np.trace(projector).real))
    basis = linalg.orth(projector)
    if basis.shape[1] != dimension:
        log.warning(
            "trace of the Riesz projector gives %d but its range has dimension %d",
            dimension,
            basis.shape[1],
        )
    basis.setflags(write=False)
    return RootSpace(float(r0), float(s), dimension, basis, projector)
