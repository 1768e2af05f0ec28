import cmath
import math

import numpy as np
import pytest

from launcher.selftest import random_lambda
from Ressf.errors import ContourCollisionError, GroupOverlapError, ModelValidationError
from Ressf.Operators import SpectralParameter
from Ressf.Resonance import (
    Pole,
    clustering_radius,
    eigen_poles,
    group_and_classify,
    real_resonance_points,
    resonance_index,
    resonance_points_all,
    riesz_projector,
    root_space,
)


def test_pole_reciprocity():
    pole = Pole.at(2.0 + 1.0j, 2)
    assert pole.source_eigenvalue * pole.location == pytest.approx(-1.0)
    assert pole.is_up
    with pytest.raises(ModelValidationError):
        Pole(1.0 + 0j, 1, 2.0 + 0j)
    with pytest.raises(ModelValidationError):
        Pole(0j, 1, 1.0 + 0j)
    assert cmath.isinf(Pole.at(0j).source_eigenvalue)


def test_scalar_pole_follows_z(scalar_model):
    poles = eigen_poles(scalar_model, SpectralParameter(0.5, 0.1))
    assert len(poles) == 1
    assert poles[0].location == pytest.approx(0.5 + 0.1j)
    assert poles[0].algebraic_multiplicity == 1


def test_double_pole_is_clustered(double_model):
    poles = eigen_poles(double_model, SpectralParameter(0.5, 0.1))
    assert [p.algebraic_multiplicity for p in poles] == [2]


def test_real_resonance_points(diag_model):
    assert real_resonance_points(diag_model, 0.5, (-1.0, 1.0)) == pytest.approx([0.5])
    assert real_resonance_points(diag_model, 0.5, (0.6, 1.0)) == []
    with pytest.raises(ModelValidationError):
        real_resonance_points(diag_model, 0.5, (1.0, -1.0))


def test_resonance_points_with_lambda_on_spec_h0(scalar_model):
    # lambda = 0 is an eigenvalue of H_0, so the points come from a re-based path
    assert resonance_points_all(scalar_model, 0.0) == pytest.approx([0.0], abs=1e-12)


def test_clustering_radius_cap(diag_model):
    assert clustering_radius(diag_model, 0.5, 0.5) == pytest.approx(0.15)


def test_group_and_classify(diag_model):
    group = group_and_classify(diag_model, 0.5, 0.5, 1e-3)
    assert group.partition == (1, 0)
    assert group.multiplicity == 1
    [(location, sign, multiplicity)] = group.upper_poles_of_trace()
    assert location == pytest.approx(0.5 + 1e-3j)
    assert (sign, multiplicity) == (1, 1)


def test_group_needs_positive_y(diag_model):
    with pytest.raises(ModelValidationError):
        group_and_classify(diag_model, 0.5, 0.5, 0.0)


def test_group_overlap(diag_model):
    with pytest.raises(GroupOverlapError):
        group_and_classify(diag_model, 0.5, 0.5, 0.2, radius=0.1)


def test_not_a_resonance_point(diag_model):
    with pytest.raises(ModelValidationError):
        group_and_classify(diag_model, 0.5, 0.7, 1e-3)


@pytest.mark.parametrize("reverse, index, r0", [(False, 1, 0.5), (True, -1, -0.5)])
def test_index_follows_the_direction(diag_model, reverse, index, r0):
    model = diag_model.reversed() if reverse else diag_model
    result = resonance_index(model, 0.5, r0)
    assert result.index == index
    assert result.multiplicity == 1
    assert result.residue_residual < 1e-8
    assert not result.capped
    assert len(result.y_schedule) >= 3


def test_index_of_a_double_point(double_model):
    result = resonance_index(double_model, 0.5, 0.5)
    assert (result.n_plus, result.n_minus) == (2, 0)
    assert result.index == 2
    assert 2j * math.pi * result.residue_check == pytest.approx(2.0, abs=1e-8)


def test_index_result_serializes(scalar_model):
    payload = resonance_index(scalar_model, 0.5, 0.5).to_dict()
    assert payload["index"] == 1
    assert payload["residue_check"][1] == pytest.approx(-1.0 / (2 * math.pi), abs=1e-8)


def test_root_space(diag_model):
    space = root_space(diag_model, 0.5, 0.5, 0.3)
    assert space.dimension == 1
    np.testing.assert_allclose(space.projector, np.diag([1.0, 0.0]), atol=1e-10)
    assert space.residual(diag_model, 0.5, 0.2) < 1e-10


def test_root_space_of_a_double_point(double_model):
    space = root_space(double_model, 0.5, 0.5, 0.25)
    assert space.dimension == 2
    assert space.basis.shape == (2, 2)


def test_riesz_projector_collision(diag_model):
    z = SpectralParameter(0.5)
    with pytest.raises(ContourCollisionError):
        riesz_projector(diag_model, 0.5, z, 0.3, 1.0 / 0.3)
    with pytest.raises(ModelValidationError):
        riesz_projector(diag_model, 0.5, z, 0.0, 1.0)


def test_index_does_not_depend_on_the_base_point(rng, random_models):
    for model in random_models:
        lam = random_lambda(model, rng)
        points = resonance_points_all(model, lam)
        moved = model.rebased(0.37)
        moved_points = resonance_points_all(moved, lam)
        np.testing.assert_allclose(moved_points, [r0 - 0.37 for r0 in points], atol=1e-8)
        for r0, r1 in zip(points, moved_points):
            assert resonance_index(moved, lam, r1).index == resonance_index(model, lam, r0).index
