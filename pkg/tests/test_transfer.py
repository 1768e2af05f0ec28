import math

import numpy as np
import pytest

from Ressf.errors import ModelValidationError, PoleEvaluationError, SingularResolventError
from Ressf.Operators import transfer as transfer_module
from Ressf.Operators import (
    SpectralParameter,
    a_matrix,
    a_matrix_from,
    f_operator,
    f_trace,
    pole_sum_trace,
    resolvent,
    trace_function,
    transfer_eigenvalues,
    transfer_matrix,
)


def lorentzian(s, lam, y):
    return y / (math.pi * ((s - lam) ** 2 + y**2))


def test_scalar_trace_is_a_lorentzian(scalar_model):
    z = SpectralParameter(0.5, 0.1)
    for s in (-0.3, 0.2, 0.5, 1.7):
        expected = lorentzian(s, 0.5, 0.1)
        assert f_trace(scalar_model, s, z, "direct") == pytest.approx(expected, rel=1e-12)
        assert f_trace(scalar_model, s, z).real == pytest.approx(expected, rel=1e-12)


def test_scalar_poles(scalar_model):
    function = trace_function(scalar_model, SpectralParameter(0.5, 0.1))
    np.testing.assert_allclose(sorted(function.poles, key=lambda p: p.imag), [0.5 - 0.1j, 0.5 + 0.1j])
    assert function.nearest_pole(0.6 + 0.1j) == pytest.approx(0.5 + 0.1j)


def test_forms_agree_on_the_real_line(random_models):
    z = SpectralParameter(0.3, 0.2)
    for model in random_models:
        for s in (-1.1, 0.0, 0.4, 2.5):
            direct = f_trace(model, s, z, "direct")
            eigen = f_trace(model, s, z)
            inverse = f_trace(model, s, z, form="inverse")
            assert eigen == pytest.approx(direct, abs=1e-10)
            assert inverse == pytest.approx(direct, abs=1e-10)
            assert abs(eigen.imag) < 1e-12


def test_direct_form_needs_a_real_coupling(scalar_model):
    with pytest.raises(ModelValidationError):
        f_trace(scalar_model, 0.3 + 0.1j, SpectralParameter(0.5, 0.1), "direct")


def test_unknown_method(scalar_model):
    with pytest.raises(ModelValidationError):
        f_trace(scalar_model, 0.3, SpectralParameter(0.5, 0.1), "residue")


def test_evaluation_at_a_pole(scalar_model):
    with pytest.raises(PoleEvaluationError) as info:
        f_trace(scalar_model, 0.5 + 0.1j, SpectralParameter(0.5, 0.1))
    assert info.value.nearest_pole == pytest.approx(0.5 + 0.1j)


def test_pole_sum(random_models):
    z = SpectralParameter(-0.2, 0.15)
    for model in random_models:
        for s in (0.7 + 0.3j, -1.2 - 0.4j, 2.0):
            expected = 2j * math.pi * s * f_trace(model, s, z)
            assert pole_sum_trace(model, s, z) == pytest.approx(expected, abs=1e-10)


def test_consistency_identity(random_models):
    z = SpectralParameter(0.1, 0.3)
    for model in random_models:
        reference = a_matrix(model, 0.2, z)
        np.testing.assert_allclose(
            a_matrix_from(reference, -0.7), a_matrix(model, -0.7, z).entries, atol=1e-10
        )


def test_f_operator_inverts(random_models):
    z = SpectralParameter(0.0, 0.5)
    for model in random_models:
        a = a_matrix(model, 0.0, z).entries
        f = f_operator(model, 0.8, z)
        np.testing.assert_allclose(f @ (np.eye(a.shape[0]) + 0.8 * a), np.eye(a.shape[0]), atol=1e-10)


def test_transfer_imaginary_part_is_positive(random_models):
    z = SpectralParameter(0.4, 0.1)
    for model in random_models:
        eigenvalues = np.linalg.eigvalsh(transfer_matrix(model, 0.0, z).imaginary_part())
        assert np.all(eigenvalues >= -1e-12)


def test_real_resolvent_on_the_spectrum(diag_model):
    with pytest.raises(SingularResolventError):
        resolvent(diag_model.H0, SpectralParameter(2.0))
    r = resolvent(diag_model.H0, SpectralParameter(1.0))
    np.testing.assert_allclose(r, np.diag([-1.0, 1.0]), atol=1e-14)


def test_eigenvalues_follow_the_base_point(random_models):
    z = SpectralParameter(0.3, 0.2)
    for model in random_models:
        mu = transfer_eigenvalues(model, z)
        moved = transfer_eigenvalues(model, z, r=0.6)
        expected = mu / (1 + 0.6 * mu)
        for value in expected:
            assert np.min(np.abs(moved - value)) < 1e-9


def test_resolvent_checks_its_residual(monkeypatch, diag_model):
    monkeypatch.setattr(transfer_module.linalg, "lu_solve", lambda lu_piv, b, check_finite=False: np.zeros_like(b))
    with pytest.raises(SingularResolventError):
        resolvent(diag_model.H0, SpectralParameter(1.0, 0.5))
