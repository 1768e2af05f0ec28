import json
import warnings

import numpy as np
import pytest

from Ressf.errors import (
    DegeneratePathError,
    DimensionMismatchError,
    ModelValidationError,
    SignatureToleranceWarning,
)
from Ressf.Operators import (
    FramedModel,
    SpectralParameter,
    is_regular_point,
    load_model,
    model_from_dict,
    model_to_dict,
    build_perturbation,
    path_at,
    regular_base,
    signature,
    signature_report,
)


def test_perturbation_is_frame_sandwich(random_models):
    for model in random_models:
        f = model.F.entries
        expected = f.conj().T @ model.J.J.entries @ f
        np.testing.assert_allclose(model.V.entries, expected, atol=1e-14)
        np.testing.assert_allclose(build_perturbation(model.F, model.J).entries, expected, atol=1e-14)


def test_rectangular_frame():
    model = FramedModel.rank_one(np.diag([0.0, 1.0, 2.0]), [1.0, 1.0, 0.0])
    assert model.aux_dim == 1
    assert model.dim == 3
    np.testing.assert_allclose(model.V.entries[:2, :2], np.ones((2, 2)))


def test_non_hermitian_h0_is_rejected():
    with pytest.raises(ModelValidationError):
        FramedModel.from_arrays([[0.0, 1.0], [0.0, 0.0]], np.eye(2), np.eye(2))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        FramedModel.from_arrays(np.eye(2), np.eye(3), np.eye(3))
    with pytest.raises(DimensionMismatchError):
        FramedModel.from_arrays(np.eye(2), np.eye(2), np.eye(3))


def test_rank_deficient_frame():
    with pytest.raises(ModelValidationError):
        FramedModel.from_arrays(np.eye(2), [[1.0, 1.0], [1.0, 1.0]], np.eye(2))


def test_spectral_parameter_rejects_lower_half_plane():
    with pytest.raises(ModelValidationError):
        SpectralParameter(0.0, -1e-3)
    z = SpectralParameter(0.5, 0.25)
    assert z.z == complex(0.5, 0.25)
    assert z.conjugate_z() == complex(0.5, -0.25)
    assert SpectralParameter(1.0).is_real


def test_path_and_regularity(diag_model):
    np.testing.assert_allclose(path_at(diag_model, 0.5).eigenvalues, [0.5, 2.0])
    assert not is_regular_point(diag_model, 0.5, 0.5)
    assert is_regular_point(diag_model, 0.4, 0.5)


def test_rebased_moves_the_base_point(random_models):
    for model in random_models:
        moved = model.rebased(0.7)
        np.testing.assert_allclose(moved.H0.entries, path_at(model, 0.7).entries, atol=1e-13)
        np.testing.assert_allclose(path_at(moved, -1.2).entries, path_at(model, -0.5).entries, atol=1e-13)


def test_regular_base(scalar_model):
    assert regular_base(scalar_model, 0.5) == 0.0
    base = regular_base(scalar_model, 0.0)
    assert base != 0.0
    assert is_regular_point(scalar_model, base, 0.0)


def test_regular_base_without_perturbation():
    model = FramedModel.from_arrays([[0.0]], [[1.0]], [[0.0]])
    with pytest.raises(DegeneratePathError):
        regular_base(model, 0.0)


def test_signature():
    assert signature(np.diag([2.0, -1.0, 3.0])) == 1
    assert signature(np.diag([1.0, 0.0, -1.0])) == 0
    report = signature_report(np.diag([1.0, -1.0, -4.0]))
    assert (report.n_positive, report.n_negative) == (1, 2)
    assert not report.flagged


def test_signature_band_warning():
    with pytest.warns(SignatureToleranceWarning):
        report = signature_report(np.diag([1.0, 1e-11]))
    assert report.value == 1
    assert report.flagged


def test_signature_of_machine_noise_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert signature(np.diag([1.0, 1e-16])) == 1


def test_reversed_flips_signature(rng, random_models):
    for model in random_models:
        assert signature(model.reversed().V) == -signature(model.V)


def test_model_file_round_trip(tmp_path, diag_model):
    path = tmp_path / "model.json"
    path.write_text(json.dumps(model_to_dict(diag_model, **{"lambda": 0.5, "interval": [-1.0, 1.0]})))
    model, extras = load_model(path)
    np.testing.assert_allclose(model.V.entries, diag_model.V.entries)
    assert extras.lam == 0.5
    assert extras.interval == (-1.0, 1.0)


def test_model_file_accepts_plain_numbers():
    model, extras = model_from_dict({"h0": [[0, 1], [1, 0]], "frame": [[1, 0]], "j": [[-1]]})
    assert model.dim == 2
    assert signature(model.V) == -1
    assert extras.lam is None


def test_unknown_key_suggests_a_fix():
    with pytest.raises(ModelValidationError, match="did you mean 'frame'"):
        model_from_dict({"h0": [[0]], "fram": [[1]], "j": [[1]]})


@pytest.mark.parametrize(
    "payload, field",
    [
        ({"frame": [[1]], "j": [[1]]}, "h0"),
        ({"h0": [[0]], "frame": [[1]], "j": [["x"]]}, "j"),
        ({"h0": [[0]], "frame": [[1]], "j": [[1]], "interval": [1, 0]}, "interval"),
        ({"h0": [[0]], "frame": [[1]], "j": [[1]], "lambda": "0.5"}, "lambda"),
    ],
)
def test_model_file_errors_name_the_field(payload, field):
    with pytest.raises(ModelValidationError) as info:
        model_from_dict(payload)
    assert info.value.field == field
    assert info.value.to_dict()["code"] == 2


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ModelValidationError):
        load_model(path)
