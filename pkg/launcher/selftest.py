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
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy import linalg

from Ressf.errors import RessfError
from Ressf.Operators import (
    FramedModel,
    SpectralParameter,
    a_matrix,
    f_trace,
    is_regular_point,
    path_at,
    pole_sum_trace,
    resolvent,
    signature_report,
    trace_function,
)
from Ressf.Oracles import counting_xi, halfplane_counts, spectral_flow
from Ressf.Resonance import (
    clustering_radius,
    eigen_poles,
    large_coupling_limit,
    real_resonance_points,
    residue_at,
    resonance_index,
    resonance_points_all,
    root_space,
    ssf_decompose,
)
from Ressf.utils import plural

log = logging.getLogger("Selftest")

MAX_FAILURES: int = 5


def random_model(rng: np.random.Generator, dim: int = 0, rank: int = 0) -> FramedModel:
    """GUE-like H_0 with spectrum of order [-2, 2] and a random frame of the given rank"""
    dim = dim or int(rng.integers(4, 9))
    rank = rank or int(rng.integers(1, 4))
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h0 = (a + a.conj().T) / (2 * math.sqrt(dim))
    frame = (rng.normal(size=(rank, dim)) + 1j * rng.normal(size=(rank, dim))) / math.sqrt(dim)
    signs = rng.choice([-1.0, 1.0], size=rank)
    return FramedModel.from_arrays(h0, frame, np.diag(signs))


def random_lambda(model: FramedModel, rng: np.random.Generator, margin: float = 1e-2) -> float:
    """A lambda inside the spectral range of H_0, at least ``margin`` away from spec(H_0)"""
    eigenvalues = model.H0.eigenvalues
    while True:
        lam = float(rng.uniform(eigenvalues[0] - 0.5, eigenvalues[-1] + 0.5))
        if np.min(np.abs(eigenvalues - lam)) > margin:
            return lam


def random_interval(model: FramedModel, lam: float, rng: np.random.Generator) -> Tuple[float, float]:
    while True:
        a, b = -float(rng.uniform(1.0, 3.0)), float(rng.uniform(1.0, 3.0))
        if is_regular_point(model, a, lam, 1e-6) and is_regular_point(model, b, lam, 1e-6):
            return a, b


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    worst: float = 0.0
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, ok: bool, residual: float, message: str) -> None:
        self.checked += 1
        if math.isfinite(residual):
            self.worst = max(self.worst, residual)
        if not ok:
            self.failures.append(message)

    def fail(self, message: str) -> None:
        self.checked += 1
        self.failures.append(message)

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "failed": len(self.failures),
            "worst": self.worst,
            "failures": self.failures[:MAX_FAILURES],
        }


def _count_near(matrix: np.ndarray, target: complex) -> int:
    mu = linalg.eigvals(matrix)
    return int(np.count_nonzero(np.abs(mu - target) <= 1e-6 * max(1.0, abs(target))))


def suite_residue(rng: np.random.Generator, models: int) -> SuiteResult:
    """2 pi i res F_z = (mult of -1/s0 for R_z V) - (mult for R_{conj z} V)"""
    suite = SuiteResult("residue theorem")
    for k in range(models):
        model = random_model(rng)
        lam = random_lambda(model, rng)
        for y in (0.1, 0.01):
            z = SpectralParameter(lam, y)
            try:
                every = trace_function(model, z).poles
                rz = resolvent(model.H0, z) @ model.V.entries
                rz_bar = resolvent(model.H0, z, conjugate=True) @ model.V.entries
                for pole in eigen_poles(model, z):
                    for s0 in (pole.location, pole.location.conjugate()):
                        distances = np.abs(every - s0)
                        others = distances[distances > 1e-6 * max(1.0, abs(s0))]
                        radius = 0.5 * float(np.min(others)) if others.size else 0.5
                        expected = _count_near(rz, -1 / s0) - _count_near(rz_bar, -1 / s0)
                        value = 2j * math.pi * residue_at(model, z, s0, radius)
                        residual = abs(value - expected)
                        suite.check(residual < 1e-6, residual, f"model {k}, y={y}: s0={s0:.6g} gave {value:.6g}, expected {expected}")
            except RessfError as e:
                suite.fail(f"model {k}, y={y}: {e.error}: {e.message}")
    return suite


def suite_real_residue(rng: np.random.Generator, models: int) -> SuiteResult:
    suite = SuiteResult("zero real residue")
    for k in range(models):
        model = random_model(rng)
        lam = random_lambda(model, rng)
        try:
            for r0 in resonance_points_all(model, lam):
                value = residue_at(model, SpectralParameter(lam), r0, clustering_radius(model, lam, r0))
                suite.check(abs(value) < 1e-6, abs(value), f"model {k}: residue {value:.3e} at r0={r0:g}")
        except RessfError as e:
            suite.fail(f"model {k}: {e.error}: {e.message}")
    return suite


def suite_main_theorem(rng: np.random.Generator, models: int) -> SuiteResult:
    suite = SuiteResult("decomposition")
    for k in range(models):
        model = random_model(rng)
        lam = random_lambda(model, rng)
        a, b = random_interval(model, lam, rng)
        try:
            decomposition = ssf_decompose(model, lam, a, b)
        except RessfError as e:
            suite.fail(f"model {k}: {e.error}: {e.message}")
            continue
        for jump in decomposition.jumps:
            suite.check(
                jump.jump == jump.n_plus - jump.n_minus,
                abs(jump.raw - jump.jump),
                f"model {k}: jump {jump.jump} at r0={jump.r0:g} but N+ - N- = {jump.n_plus - jump.n_minus}",
            )
        suite.check(decomposition.residual < 1e-6, decomposition.residual, f"model {k}: xi - xi_a - sum of jumps = {decomposition.residual:.3e}")
        oracle = counting_xi(path_at(model, a), path_at(model, b), lam)
        suite.check(abs(decomposition.xi - oracle) < 1e-6, abs(decomposition.xi - oracle), f"model {k}: xi={decomposition.xi:.9f}, counting gives {oracle}")
    return suite


def suite_flow(rng: np.random.Generator, models: int) -> SuiteResult:
    suite = SuiteResult("flow equivalence")
    for k in range(models):
        model = random_model(rng)
        lam = random_lambda(model, rng)
        a, b = random_interval(model, lam, rng)
        try:
            flow = spectral_flow(model, lam, a, b)
            for r0 in real_resonance_points(model, lam, (a, b)):
                index = resonance_index(model, lam, r0).index
                net = flow.net_at(r0)
                suite.check(index == net, float(abs(index - net)), f"model {k}: index {index} but flow {net} at r0={r0:g}")
        except RessfError as e:
            suite.fail(f"model {k}: {e.error}: {e.message}")
    return suite


def suite_krein(rng: np.random.Generator, models: int) -> SuiteResult:
    suite = SuiteResult("Krein counts")
    for k in range(models):
        model = random_model(rng)
        ranks = signature_report(model.V)
        lam = float(rng.uniform(-2.0, 2.0))
        for y in (1.0, 0.1, 0.001):
            counts = halfplane_counts(model.H0, model.V, SpectralParameter(lam, y))
            ok = (counts.n_plus, counts.n_minus, counts.n_real_nonzero) == (ranks.n_positive, ranks.n_negative, 0)
            suite.check(ok, 0.0 if ok else 1.0, f"model {k}, y={y}: counts {counts} vs ranks ({ranks.n_positive}, {ranks.n_negative})")
    return suite


def _regularizing(model: FramedModel, lam: float, r0: float, rng: np.random.Generator) -> float:
    while True:
        s = float(rng.uniform(0.2, 0.6)) * (1 if rng.random() < 0.5 else -1)
        if is_regular_point(model, r0 + s, lam, 1e-6):
            return s


def suite_invariance(rng: np.random.Generator, models: int) -> SuiteResult:
    suite = SuiteResult("invariance")
    for k in range(models):
        model = random_model(rng)
        lam = random_lambda(model, rng)
        z = SpectralParameter(lam, 0.1)
        a = a_matrix(model, 0.0, z).entries
        mu, vectors = linalg.eig(a)
        for m, psi in zip(mu, vectors.T):
            if abs(m) < 1e-8:
                continue
            alpha = 1 / m
            for _ in range(5):
                s = float(rng.uniform(-2.0, 2.0))
                moved = a_matrix(model, s, z).entries @ psi - psi / (s + alpha)
                residual = float(np.linalg.norm(moved))
                suite.check(residual < 1e-8, residual, f"model {k}: eigenvector moved by {residual:.2e} at s={s:g}")
        try:
            for r0 in resonance_points_all(model, lam)[:2]:
                s1, s2 = _regularizing(model, lam, r0, rng), _regularizing(model, lam, r0, rng)
                first, second = root_space(model, lam, r0, s1), root_space(model, lam, r0, s2)
                difference = float(np.linalg.norm(first.projector - second.projector))
                suite.check(difference < 1e-8, difference, f"model {k}: projectors differ by {difference:.2e} at r0={r0:g}")
                suite.check(first.dimension == second.dimension, 0.0, f"model {k}: root space dimension changed at r0={r0:g}")
                residual = first.residual(model, lam, _regularizing(model, lam, r0, rng))
                suite.check(residual < 1e-7, residual, f"model {k}: root vectors moved by {residual:.2e}")
        except RessfError as e:
            suite.fail(f"model {k}: {e.error}: {e.message}")
    return suite


def suite_sign(rng: np.random.Generator, models: int) -> SuiteResult:
    suite = SuiteResult("sign antisymmetry")
    for k in range(models):
        model = random_model(rng)
        lam = random_lambda(model, rng)
        try:
            for r0 in resonance_points_all(model, lam):
                forward = resonance_index(model, lam, r0).index
                backward = resonance_index(model.reversed(), lam, -r0).index
                suite.check(forward == -backward, float(abs(forward + backward)), f"model {k}: {forward} and {backward} at r0={r0:g}")
        except RessfError as e:
            suite.fail(f"model {k}: {e.error}: {e.message}")
    return suite


def suite_large_coupling(rng: np.random.Generator, models: int) -> SuiteResult:
    suite = SuiteResult("large coupling")
    for k in range(models):
        model = random_model(rng)
        lam = random_lambda(model, rng)
        try:
            limit = large_coupling_limit(model, lam)
        except RessfError as e:
            suite.fail(f"model {k}: {e.error}: {e.message}")
            continue
        residual = abs(limit.xi_limit - limit.signature)
        suite.check(residual < 1e-4, residual, f"model {k}: xi_limit {limit.xi_limit:.6g} vs signature {limit.signature}")
        suite.check(limit.index_sum == limit.signature, 0.0, f"model {k}: index sum {limit.index_sum} vs signature {limit.signature}")
    return suite


def suite_pole_sum(rng: np.random.Generator, models: int) -> SuiteResult:
    suite = SuiteResult("pole-sum formula")
    for k in range(models):
        model = random_model(rng)
        z = SpectralParameter(random_lambda(model, rng), 0.1)
        try:
            for _ in range(5):
                s = complex(rng.normal(), rng.normal())
                expected = 2j * math.pi * s * f_trace(model, s, z)
                residual = abs(pole_sum_trace(model, s, z) - expected) / max(1.0, abs(expected))
                suite.check(residual < 1e-8, residual, f"model {k}: pole sum off by {residual:.2e} at s={s:.4g}")
            theta = float(rng.uniform(0.1, math.pi - 0.1))
            sizes = [abs(pole_sum_trace(model, 10.0**p * cmath.exp(1j * theta), z)) for p in range(1, 5)]
            decaying = all(later <= 1.1 * earlier for earlier, later in zip(sizes, sizes[1:]))
            suite.check(decaying, sizes[-1], f"model {k}: pole sum does not decay: {sizes}")
        except RessfError as e:
            suite.fail(f"model {k}: {e.error}: {e.message}")
    return suite


def suite_dual_formula(rng: np.random.Generator, models: int) -> SuiteResult:
    suite = SuiteResult("dual formula")
    for k in range(models):
        model = random_model(rng)
        z = SpectralParameter(random_lambda(model, rng), float(rng.uniform(0.05, 1.0)))
        function = trace_function(model, z)
        for _ in range(20):
            s = float(rng.uniform(-3.0, 3.0))
            direct = f_trace(model, s, z, "direct")
            meromorphic = f_trace(model, s, z, "meromorphic")
            inverse = f_trace(model, s, z, "meromorphic", form="inverse")
            residual = max(abs(direct - meromorphic), abs(direct - inverse))
            suite.check(residual < 1e-9, residual, f"model {k}: formulas differ by {residual:.2e} at s={s:g}")
        s = complex(rng.normal(), rng.normal())
        symmetry = abs(function(s.conjugate()) - function(s).conjugate())
        suite.check(symmetry < 1e-10, symmetry, f"model {k}: F(conj s) != conj F(s) by {symmetry:.2e}")
    return suite


SUITES: Tuple[Tuple[str, Callable[[np.random.Generator, int], SuiteResult]], ...] = (
    ("residue", suite_residue),
    ("real_residue", suite_real_residue),
    ("decomposition", suite_main_theorem),
    ("flow", suite_flow),
    ("krein", suite_krein),
    ("invariance", suite_invariance),
    ("sign", suite_sign),
    ("large_coupling", suite_large_coupling),
    ("pole_sum", suite_pole_sum),
    ("dual_formula", suite_dual_formula),
)


def run_suites(seed: int, models: int, names: Sequence[str] = ()) -> List[SuiteResult]:
    """Every suite draws from its own generator seeded by (seed, suite number)"""
    results = []
    for number, (name, suite) in enumerate(SUITES):
        if names and name not in names:
            continue
        rng = np.random.default_rng([seed, number])
        result = suite(rng, models)
        log.info(
            "%s: %s, %s",
            result.name,
            "passed" if result.passed else f"{len(result.failures)} failed",
            format(plural(result.checked), "check"),
        )
        results.append(result)
    return results
