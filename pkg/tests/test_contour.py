import math

import numpy as np
import pytest

from Ressf.errors import ContourCollisionError, ConvergenceError, GeometryError
from Ressf.Resonance import (
    ArcSegment,
    Contour,
    StraightSegment,
    adaptive_integral,
    circle_integral,
    detour_path,
    gauss_legendre,
)


def test_gauss_legendre_integrates_polynomials():
    t, w = gauss_legendre(8)
    assert np.sum(w) == pytest.approx(2.0)
    assert np.sum(w * t**14) == pytest.approx(2.0 / 15.0)


def test_circle_picks_up_the_residue():
    contour = Contour.circle(0.3 + 0.1j, 1.0)
    assert contour.is_closed
    assert contour.integrate(lambda s: 1.0 / (s - (0.3 + 0.1j))) == pytest.approx(2j * math.pi)
    assert contour.integrate(lambda s: 1.0 / (s - 5.0)) == pytest.approx(0.0, abs=1e-12)


def test_circle_integral_doubles_until_settled():
    value, n = circle_integral(lambda s: 1.0 / (s * (s - 3.0)), 0.0, 1.0, n=16, tol=1e-12, max_n=1024)
    assert value == pytest.approx(2j * math.pi * (-1.0 / 3.0), abs=1e-12)
    assert 16 < n <= 1024


def test_circle_integral_gives_up():
    with pytest.raises(ConvergenceError):
        circle_integral(lambda s: 1.0 / (s - 0.999), 0.0, 1.0, n=4, tol=1e-14, max_n=8)


def test_collision_with_the_contour():
    with pytest.raises(ContourCollisionError):
        circle_integral(lambda s: 1.0 / (s - 1.0), 0.0, 1.0, n=16, tol=1e-12, max_n=64, poles=[1.0])


def test_segments_must_join():
    with pytest.raises(GeometryError):
        Contour.build([StraightSegment(0j, 1 + 0j), StraightSegment(2 + 0j, 3 + 0j)])
    with pytest.raises(GeometryError):
        Contour.circle(0j, 0.0)


def test_adaptive_along_a_line():
    assert adaptive_integral(lambda s: s**2, [StraightSegment(0j, 1 + 0j)]) == pytest.approx(1.0 / 3.0)


def test_adaptive_along_an_upper_arc():
    arc = ArcSegment(0j, 1.0, math.pi, 0.0)
    assert adaptive_integral(lambda s: 1.0 / s, [arc]) == pytest.approx(-1j * math.pi)


def test_adaptive_near_a_pole():
    y = 1e-4
    value = adaptive_integral(lambda s: y / (math.pi * (s**2 + y**2)), [StraightSegment(-1 + 0j, 1 + 0j)])
    assert value.real == pytest.approx(2.0 / math.pi * math.atan(1.0 / y), abs=1e-9)


def test_detour_path_is_continuous():
    segments = detour_path(-1.0, 1.0, [0.0], [0.5])
    assert len(segments) == 3
    contour = Contour.build(segments)
    assert not contour.is_closed
    assert contour.distance_to(0.5j) == pytest.approx(0.0, abs=1e-14)
    assert contour.distance_to(0j) == pytest.approx(0.5)


def test_arc_distance():
    arc = ArcSegment(0j, 1.0, 0.0, math.pi)
    assert arc.distance_to(2j) == pytest.approx(1.0)
    assert arc.distance_to(-2j) == pytest.approx(math.sqrt(5.0))


def test_exclusion_check():
    contour = Contour.circle(0j, 1.0)
    contour.check_exclusion([0.5, 3.0], 1e-3)
    with pytest.raises(ContourCollisionError):
        contour.check_exclusion([1.0005j], 1e-3)
