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

import csv
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from os import PathLike
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from ..errors import ConvergenceError, EndpointProximityError, InfiniteResonance, ModelValidationError
from ..Operators.constants import (
    CANTOR_TRACK_LEVELS,
    CANTOR_TRACK_TOL,
    CSV_SCHEMA_VERSION,
    GUARD_FACTOR,
    SAMPLE_MARGIN,
)
from ..Operators.model import FramedModel, SpectralParameter
from ..Resonance.contour import gauss_legendre

log = logging.getLogger(__name__)

Interval = Tuple[Fraction, Fraction]

CANTOR_COLUMNS: Tuple[str, ...] = (
    "lambda",
    "pv_integral",
    "r0_closed_form",
    "r0_tracked",
    "index",
    "depth",
    "y",
    "nodes_per_interval",
    "infinite_resonance",
    "r0_error",
    "y_min",
)


@dataclass(frozen=True)
class FatCantorSet:
    """K = [-1, 1] minus a symmetric union of open intervals, cut to a finite depth"""

    depth: int
    removed: Tuple[Interval, ...]
    pieces: Tuple[Interval, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ModelValidationError("depth must be at least 1", field="depth")
        ordered = sorted(self.removed)
        for (a, b), (c, _) in zip(ordered, ordered[1:]):
            if b > c:
                raise ModelValidationError(f"removed intervals ({a}, {b}) and ({c}, ...) overlap", field="removed")
        if sorted((-b, -a) for a, b in ordered) != ordered:
            raise ModelValidationError("removed intervals are not symmetric about 0", field="removed")
        object.__setattr__(self, "removed", tuple(ordered))
        object.__setattr__(self, "pieces", tuple(sorted(self.pieces)))

    @property
    def removed_length(self) -> Fraction:
        return sum((b - a for a, b in self.removed), Fraction(0))

    @cached_property
    def endpoints(self) -> np.ndarray:
        return np.array([float(x) for interval in self.removed for x in interval])

    @property
    def shortest(self) -> float:
        return float(min(b - a for a, b in self.removed))

    def default_guard(self) -> float:
        return GUARD_FACTOR * self.shortest


def build_svc(depth: int) -> FatCantorSet:
    """Smith-Volterra-Cantor schedule: stage n cuts 2 * 4^-n out of the middle of each piece"""
    if depth < 1:
        raise ModelValidationError("depth must be at least 1", field="depth")
    pieces: List[Interval] = [(Fraction(-1), Fraction(1))]
    removed: List[Interval] = []
    for stage in range(1, depth + 1):
        half = Fraction(1, 4**stage)
        next_pieces: List[Interval] = []
        for lo, hi in pieces:
            mid = (lo + hi) / 2
            removed.append((mid - half, mid + half))
            next_pieces.extend([(lo, mid - half), (mid + half, hi)])
        pieces = next_pieces
    return FatCantorSet(depth, tuple(removed), tuple(pieces))


def K_pieces(cantor: FatCantorSet) -> List[Tuple[float, float]]:
    """The closed intervals making up K_d"""
    return [(float(lo), float(hi)) for lo, hi in cantor.pieces]


def F_eval(cantor: FatCantorSet, x: float) -> float:
    """Signed measure of U n [0, x]"""
    if not -1.0 <= x <= 1.0:
        raise ModelValidationError(f"x={x} is outside [-1, 1]", field="x")
    x = Fraction(x)
    lo, hi, sign = (Fraction(0), x, 1) if x >= 0 else (x, Fraction(0), -1)
    total = sum((max(Fraction(0), min(b, hi) - max(a, lo)) for a, b in cantor.removed), Fraction(0))
    return sign * float(total)


def _check_guard(cantor: FatCantorSet, lam: float, guard: float) -> None:
    if not -1.0 <= lam <= 1.0:
        raise EndpointProximityError(f"lambda={lam} is outside [-1, 1]", lam=lam)
    distance = float(np.min(np.abs(cantor.endpoints - lam)))
    if distance <= guard:
        raise EndpointProximityError(
            f"lambda={lam} is {distance:.2e} from a gap endpoint (guard {guard:.2e})", lam=lam, distance=distance
        )


def in_removed(cantor: FatCantorSet, lam: float) -> bool:
    return any(float(a) < lam < float(b) for a, b in cantor.removed)


def pv_integral(cantor: FatCantorSet, lam: float, guard: Optional[float] = None) -> float:
    """p.v. integral of dF(x) / (x - lam) = sum ln|(b - lam)/(a - lam)| over the removed intervals.

    The closed form is also the principal value when lam lies inside a removed interval.
    """
    if guard is None:
        guard = cantor.default_guard()
    _check_guard(cantor, lam, guard)
    return math.fsum(math.log(abs((float(b) - lam) / (float(a) - lam))) for a, b in cantor.removed)


def pv_quadrature(cantor: FatCantorSet, lam: float) -> float:
    """The same integral by adaptive quadrature over each removed interval"""
    parts = [
        integrate.quad(lambda x: 1.0 / (x - lam), float(a), float(b), epsabs=1e-13, epsrel=1e-13, limit=200)[0]
        for a, b in cantor.removed
    ]
    return math.fsum(parts)


def resonance_curve(cantor: FatCantorSet, lam: float, guard: Optional[float] = None) -> float:
    """r0(lam) = -1 / pv_integral(lam)"""
    pv = pv_integral(cantor, lam, guard)
    if abs(pv) <= 1e-14:
        raise InfiniteResonance(f"the p.v. integral vanishes at lambda={lam}", lam=lam)
    return -1.0 / pv


def _graded_panels(a: float, b: float, levels: int) -> List[Tuple[float, float]]:
    """[a, b] split at the midpoint, each half refined dyadically toward its endpoint"""
    if levels <= 0:
        return [(a, b)]
    mid = (a + b) / 2
    left = [a] + [a + (mid - a) / 2**k for k in range(levels, 0, -1)] + [mid]
    right = [mid] + [b - (b - mid) / 2**k for k in range(1, levels + 1)] + [b]
    cuts = left + right[1:]
    return list(zip(cuts, cuts[1:]))


@dataclass(frozen=True)
class CantorModel:
    """Multiplication by x on L2(dF), discretized, with v = 1 pushed to the nodes"""

    cantor: FatCantorSet
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if np.any(self.weights <= 0):
            raise ModelValidationError("quadrature weights must be positive", field="weights")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.nodes.size

    @property
    def v(self) -> np.ndarray:
        return np.sqrt(self.weights)

    @property
    def H0(self) -> np.ndarray:
        return np.diag(self.nodes)

    def transfer(self, z: complex) -> complex:
        """<v, R_z(H_0) v> = sum w_i / (x_i - z)"""
        terms = self.weights / (self.nodes - z)
        return complex(math.fsum(terms.real), math.fsum(terms.imag))

    def tracked_pole(self, z: complex) -> complex:
        """The only pole of f_z(s) = (1 + s<v, R_z v>)^{-1}"""
        return -1.0 / self.transfer(z)

    def framed(self) -> FramedModel:
        return FramedModel.rank_one(self.H0, self.v)


def log_transfer(cantor: FatCantorSet, z: complex) -> complex:
    """sum over removed (a, b) of Log((b - z)/(a - z)), the exact integral of dF(x)/(x - z)"""
    terms = [np.log((float(b) - z) / (float(a) - z)) for a, b in cantor.removed]
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


def discretize(cantor: FatCantorSet, nodes_per_interval: int, *, graded: bool = True) -> CantorModel:
    """Gauss-Legendre nodes on every removed interval.

    With ``graded`` the longer intervals are cut into panels that shrink toward the
    endpoints until they are as short as the shortest removed interval.
    """
    if nodes_per_interval < 2:
        raise ModelValidationError("nodes_per_interval must be at least 2", field="nodes_per_interval")
    t, w = gauss_legendre(nodes_per_interval)
    shortest = cantor.shortest
    nodes: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    for a, b in cantor.removed:
        a, b = float(a), float(b)
        levels = max(0, math.ceil(math.log2((b - a) / shortest)) - 1) if graded else 0
        for lo, hi in _graded_panels(a, b, levels):
            nodes.append(lo + (hi - lo) * (t + 1.0) / 2)
            weights.append(w * (hi - lo) / 2)
    model = CantorModel(cantor, np.concatenate(nodes), np.concatenate(weights))
    log.debug("discretized depth %d with %d nodes", cantor.depth, model.dim)
    return model


def sample_lambdas(cantor: FatCantorSet, count: int, seed: int) -> List[float]:
    """Paired samples lam, -lam from the middle half of the positive K_d pieces"""
    if count < 1:
        raise ModelValidationError("count must be positive", field="samples")
    rng = np.random.default_rng(seed)
    positive = [(lo, hi) for lo, hi in K_pieces(cantor) if lo >= 0]
    guard = cantor.default_guard()
    samples: List[float] = []
    while len(samples) < count:
        lo, hi = positive[int(rng.integers(len(positive)))]
        margin = SAMPLE_MARGIN * (hi - lo)
        lam = float(rng.uniform(lo + margin, hi - margin))
        if float(np.min(np.abs(cantor.endpoints - lam))) <= guard:
            continue
        samples.extend([lam, -lam])
    return samples[:count]


@dataclass(frozen=True)
class CantorRow:
    lam: float
    pv_integral: float
    r0_closed_form: Optional[float]
    r0_tracked: Optional[float]
    index: Optional[int]
    depth: int
    y: float
    nodes_per_interval: int
    infinite_resonance: bool = False
    r0_error: Optional[float] = None
    y_min: Optional[float] = None

    @classmethod
    def from_values(cls, values: Dict[str, Any]) -> CantorRow:
        fields = dict(values)
        return cls(lam=fields.pop("lambda"), **fields)

    def values(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam,
            "pv_integral": self.pv_integral,
            "r0_closed_form": self.r0_closed_form,
            "r0_tracked": self.r0_tracked,
            "index": self.index,
            "depth": self.depth,
            "y": self.y,
            "nodes_per_interval": self.nodes_per_interval,
            "infinite_resonance": self.infinite_resonance,
            "r0_error": self.r0_error,
            "y_min": self.y_min,
        }


@dataclass(frozen=True)
class TrackedResonance:
    """Re s(y) followed down a halving y-schedule and extrapolated to y -> 0"""

    r0: float
    error: float
    index: int
    ys: Tuple[float, ...]


def track_resonance(model: CantorModel, lam: float, y: float) -> TrackedResonance:
    """Follow the pole s(y) = -1/<v, R_{lam+iy} v> toward the real axis.

    Re s(y) is even in y, so each Richardson column removes the next power of y^2.
    Only the last three levels enter the estimate, which keeps the pre-asymptotic
    start of the schedule out of it.
    """
    pole = model.tracked_pole(SpectralParameter(lam, y).z)
    index = 1 if pole.imag > 0 else -1
    ys: List[float] = [y]
    reals: List[float] = [pole.real]
    estimates: List[float] = []
    agreeing = 0
    for level in range(1, CANTOR_TRACK_LEVELS):
        ys.append(y / 2**level)
        pole = model.tracked_pole(complex(lam, ys[-1]))
        if (1 if pole.imag > 0 else -1) != index:
            raise ConvergenceError(f"the tracked pole crossed the real axis at y={ys[-1]:.3e}", lam=lam)
        reals.append(pole.real)
        if level < 2:
            continue
        once = [(4.0 * later - earlier) / 3.0 for earlier, later in zip(reals[-3:], reals[-2:])]
        estimates.append((16.0 * once[1] - once[0]) / 15.0)
        if len(estimates) < 2:
            continue
        change = abs(estimates[-1] - estimates[-2])
        agreeing = agreeing + 1 if change <= CANTOR_TRACK_TOL * max(1.0, abs(estimates[-1])) else 0
        if agreeing >= 2:
            return TrackedResonance(estimates[-1], change, index, tuple(ys))
    raise ConvergenceError(
        f"the tracked resonance at lambda={lam} did not settle by y={ys[-1]:.3e}",
        lam=lam,
        ys=ys[-3:],
        reals=reals[-3:],
    )


def index_row(model: CantorModel, lam: float, y: float, nodes_per_interval: int) -> CantorRow:
    cantor = model.cantor
    pv = pv_integral(cantor, lam)
    try:
        closed: Optional[float] = resonance_curve(cantor, lam)
    except InfiniteResonance:
        return CantorRow(lam, pv, None, None, None, cantor.depth, y, nodes_per_interval, True)
    if in_removed(cantor, lam):
        # the pole stays away from the real axis inside U: no resonance point
        pole = model.tracked_pole(SpectralParameter(lam, y).z)
        return CantorRow(lam, pv, None, pole.real, 0, cantor.depth, y, nodes_per_interval)
    tracked = track_resonance(model, lam, y)
    return CantorRow(
        lam,
        pv,
        closed,
        tracked.r0,
        tracked.index,
        cantor.depth,
        y,
        nodes_per_interval,
        r0_error=tracked.error,
        y_min=tracked.ys[-1],
    )


def index_on_K(
    cantor: FatCantorSet,
    lambda_samples: Sequence[float],
    y: float,
    nodes_per_interval: int = 32,
) -> List[CantorRow]:
    """Resonance index and tracked coupling of the discretized rank-one model at each sample"""
    if y <= 0:
        raise ModelValidationError("y must be positive", field="y")
    model = discretize(cantor, nodes_per_interval)
    return [index_row(model, float(lam), y, nodes_per_interval) for lam in lambda_samples]


@dataclass(frozen=True)
class CantorSummary:
    samples: int
    index_fraction: float
    positive_fraction: float
    infinite: int


def summarize(rows: Iterable[CantorRow]) -> CantorSummary:
    rows = list(rows)
    finite = [row for row in rows if row.r0_closed_form is not None]
    infinite = sum(1 for row in rows if row.infinite_resonance)
    if not finite:
        return CantorSummary(len(rows), 0.0, 0.0, infinite)
    index_fraction = sum(1 for row in finite if row.index == 1) / len(finite)
    positive_fraction = sum(1 for row in finite if row.r0_closed_form > 0) / len(finite)
    return CantorSummary(len(rows), index_fraction, positive_fraction, infinite)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_cantor_csv(
    rows: Iterable[CantorRow], path: Union[str, PathLike], *, comment: Optional[str] = None
) -> None:
    """Write the cantor table with a leading '#' comment line"""
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"# {comment or f'ressf cantor schema {CSV_SCHEMA_VERSION}'}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CANTOR_COLUMNS)
        for row in rows:
            values = row.values()
            writer.writerow([_cell(values[column]) for column in CANTOR_COLUMNS])
