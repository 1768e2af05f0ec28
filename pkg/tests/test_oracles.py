import numpy as np
import pytest

from launcher.selftest import random_lambda
from Ressf.errors import AmbiguousCountError, ModelValidationError
from Ressf.Operators import FramedModel, SpectralParameter, path_at, signature_report
from Ressf.Oracles import (
    Crossing,
    FlowRecord,
    argument_principle_multiplicity,
    counting_xi,
    halfplane_counts,
    smoothed_xi_exact,
    spectral_flow,
)
from Ressf.Resonance import Contour, StraightSegment, eigen_poles, resonance_index


def test_flow_of_the_diagonal_model(diag_model):
    record = spectral_flow(diag_model, 0.5, -1.0, 1.0)
    assert record.net_flow == 1
    [crossing] = record.crossings
    assert crossing.r == pytest.approx(0.5, abs=1e-9)
    assert crossing.direction == 1
    assert crossing.eigenvalue_branch == 0
    assert not crossing.degenerate
    assert record.net_at(0.5) == 1


def test_flow_of_a_reversed_line(diag_model):
    record = spectral_flow(diag_model.reversed(), 0.5, -1.0, 1.0)
    assert record.net_flow == -1
    assert record.net_at(-0.5) == -1


def test_flow_counts_every_branch(double_model):
    record = spectral_flow(double_model, 0.5, 0.0, 1.0)
    assert record.net_flow == 2
    assert sorted(c.eigenvalue_branch for c in record.crossings) == [0, 1]


def test_flow_matches_the_index():
    h0 = np.diag([-1.0, 0.0, 1.0])
    model = FramedModel.from_arrays(h0, [[1.0, 1.0, 1.0]], [[-1.0]])
    record = spectral_flow(model, 0.5, -3.0, 3.0)
    for crossing in record.crossings:
        assert resonance_index(model, 0.5, crossing.r).index == record.net_at(crossing.r)


def test_flow_endpoint_on_the_spectrum(diag_model):
    with pytest.raises(AmbiguousCountError):
        spectral_flow(diag_model, 0.5, 0.5, 1.0)
    with pytest.raises(ModelValidationError):
        spectral_flow(diag_model, 0.5, 1.0, -1.0)


def test_flow_record_checks_its_sum():
    with pytest.raises(ModelValidationError):
        FlowRecord(0.0, (Crossing(0.1, 1, 0),), 0)


def test_counting_xi():
    assert counting_xi(np.diag([0.0, 2.0]), np.diag([1.0, 2.0]), 0.5) == 1
    assert counting_xi(np.diag([1.0, 2.0]), np.diag([0.0, 2.0]), 0.5) == -1
    with pytest.raises(AmbiguousCountError):
        counting_xi(np.diag([0.5]), np.diag([1.0]), 0.5)


def test_smoothed_xi_exact_tends_to_the_count(diag_model):
    H_a, H_b = path_at(diag_model, -1.0), path_at(diag_model, 1.0)
    assert smoothed_xi_exact(H_a, H_b, SpectralParameter(0.5)) == 1.0
    assert smoothed_xi_exact(H_a, H_b, SpectralParameter(0.5, 1e-9)) == pytest.approx(1.0, abs=1e-8)


def test_halfplane_counts(scalar_model):
    counts = halfplane_counts(scalar_model.H0, scalar_model.V, SpectralParameter(0.5, 0.1))
    assert (counts.n_plus, counts.n_minus, counts.n_real_nonzero) == (1, 0, 0)
    counts = halfplane_counts(scalar_model.H0, -scalar_model.V, SpectralParameter(0.5, 0.1))
    assert (counts.n_plus, counts.n_minus) == (0, 1)
    with pytest.raises(ModelValidationError):
        halfplane_counts(scalar_model.H0, scalar_model.V, SpectralParameter(0.5))


def test_argument_principle(double_model):
    z = SpectralParameter(0.5, 0.1)
    assert argument_principle_multiplicity(double_model, z, Contour.circle(0.5 + 0.1j, 0.05)) == 2
    assert argument_principle_multiplicity(double_model, z, Contour.circle(3.0, 0.5)) == 0


def test_argument_principle_needs_a_closed_contour(double_model):
    contour = Contour.build([StraightSegment(0j, 1 + 0j)])
    with pytest.raises(ModelValidationError):
        argument_principle_multiplicity(double_model, SpectralParameter(0.5, 0.1), contour)


def test_argument_principle_matches_the_pole_multiplicities(rng, random_models):
    for model in random_models:
        z = SpectralParameter(random_lambda(model, rng), 0.1)
        poles = eigen_poles(model, z)
        locations = np.array([pole.location for pole in poles])
        for pole in poles:
            distances = np.abs(locations - pole.location)
            others = distances[distances > 0]
            radius = 0.5 * float(np.min(others)) if others.size else 0.5
            contour = Contour.circle(pole.location, radius, 256)
            assert argument_principle_multiplicity(model, z, contour) == pole.algebraic_multiplicity


@pytest.mark.parametrize("y", [1.0, 0.1, 1e-3])
def test_krein_counts_follow_the_signature(rng, random_models, y):
    for model in random_models:
        ranks = signature_report(model.V)
        counts = halfplane_counts(model.H0, model.V, SpectralParameter(float(rng.uniform(-2.0, 2.0)), y))
        assert (counts.n_plus, counts.n_minus, counts.n_real_nonzero) == (ranks.n_positive, ranks.n_negative, 0)
