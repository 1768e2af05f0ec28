import csv
import json

import pytest

from launcher.launcher import build_parser, config_from_args, main
from launcher.scanner import ScanConfig, header_line
from launcher.selftest import SUITES, random_model, run_suites
from Ressf.errors import ModelValidationError
from Ressf.Operators import model_to_dict
from Ressf.utils import config_digest, digest, human_join, plural


def read_rows(path):
    lines = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


@pytest.fixture
def model_file(tmp_path, diag_model):
    path = tmp_path / "diag.json"
    path.write_text(json.dumps(model_to_dict(diag_model, **{"lambda": 0.5, "interval": [-1.0, 1.0]})))
    return path


def test_index_command(tmp_path, model_file):
    out = tmp_path / "index.csv"
    assert main(["index", "--model", str(model_file), "--out", str(out), "--workers", "1"]) == 0
    first = out.read_text().splitlines()[0]
    assert first.startswith("# ressf 0.1.0 schema 1 index config ")
    [row] = read_rows(out)
    assert float(row["r0"]) == pytest.approx(0.5)
    assert row["index"] == "1"
    assert row["error"] == ""
    assert row["tolerances"].startswith("cluster_gap:1e-06;residue:")


def test_index_command_over_a_grid(tmp_path, model_file):
    out = tmp_path / "index.json"
    argv = ["index", "--model", str(model_file), "--lambda-min", "0.25", "--lambda-max", "0.75"]
    argv += ["--lambda-count", "3", "--interval", "-1", "1", "--format", "json", "--out", str(out)]
    assert main(argv) == 0
    document = json.loads(out.read_text())
    assert document["command"] == "index"
    assert [row["lambda"] for row in document["rows"]] == [0.25, 0.5, 0.75]
    assert [row["index"] for row in document["rows"]] == [1, 1, 1]


def test_scalar_grid(tmp_path, scalar_model):
    path = tmp_path / "scalar.json"
    path.write_text(json.dumps(model_to_dict(scalar_model)))
    out = tmp_path / "scalar.csv"
    argv = ["index", "--model", str(path), "--lambda-min", "0.1", "--lambda-max", "0.9", "--lambda-count", "5"]
    assert main(argv + ["--interval", "-2", "2", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert [float(row["r0"]) for row in rows] == pytest.approx([0.1, 0.3, 0.5, 0.7, 0.9])
    assert {row["index"] for row in rows} == {"1"}


def test_out_of_range_lambda_gives_an_empty_row(tmp_path, model_file):
    out = tmp_path / "empty.json"
    argv = ["index", "--model", str(model_file), "--lambdas", "5.0", "--format", "json", "--out", str(out)]
    assert main(argv) == 0
    assert json.loads(out.read_text())["rows"] == [{"lambda": 5.0}]


def test_ssf_command(tmp_path, model_file):
    out = tmp_path / "ssf.json"
    argv = ["ssf", "--model", str(model_file), "--format", "json", "--out", str(out), "--large-coupling"]
    assert main(argv) == 0
    [row] = json.loads(out.read_text())["rows"]
    assert row["xi"] == pytest.approx(1.0, abs=1e-8)
    assert row["xi_a"] == pytest.approx(0.0, abs=1e-10)
    assert row["jumps"] == [[pytest.approx(0.5), 1]]
    assert row["signature"] == 1
    assert row["nudge"] == [0.0, 0.0]
    assert dict(row["tolerances"])["decomposition"] == 1e-6


def test_invalid_model_writes_nothing(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"h0": [[0]], "fram": [[1]], "j": [[1]], "lambda": 0.5, "interval": [0, 1]}))
    out = tmp_path / "never.csv"
    assert main(["index", "--model", str(path), "--out", str(out)]) == 2
    assert not out.exists()


def test_missing_lambda_grid(tmp_path, diag_model):
    path = tmp_path / "bare.json"
    path.write_text(json.dumps(model_to_dict(diag_model)))
    assert main(["ssf", "--model", str(path), "--out", str(tmp_path / "x.csv")]) == 2


def test_half_a_grid_is_rejected(tmp_path, model_file):
    assert main(["index", "--model", str(model_file), "--lambda-min", "0.1", "--out", str(tmp_path / "x.csv")]) == 2


def test_cantor_command(tmp_path, capsys):
    out = tmp_path / "cantor.csv"
    argv = ["cantor", "--depth", "1", "--nodes", "8", "--samples", "4", "--seed", "3", "--out", str(out)]
    assert main(argv) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# ressf 0.1.0 schema 1 cantor config ")
    assert lines[-1].startswith("# summary ")
    assert "index_fraction=1.0" in lines[-1]
    assert "positive_fraction=0.5" in lines[-1]
    rows = read_rows(out)
    assert len(rows) == 4
    assert {row["index"] for row in rows} == {"1"}
    assert "index_fraction=1.0" in capsys.readouterr().out


def test_reports_do_not_depend_on_the_worker_count(tmp_path):
    outputs = []
    for workers in ("1", "2"):
        out = tmp_path / f"cantor-{workers}.json"
        argv = ["cantor", "--depth", "2", "--nodes", "8", "--samples", "6", "--format", "json"]
        assert main(argv + ["--workers", workers, "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_config_digest_ignores_paths_and_workers():
    first = ScanConfig("cantor", output="a.csv", workers=1)
    second = ScanConfig("cantor", output="b.csv", workers=4)
    assert first.digest == second.digest
    assert ScanConfig("cantor", depth=3).digest != first.digest
    assert header_line(first).endswith(first.digest)


def test_config_validation():
    with pytest.raises(ModelValidationError):
        ScanConfig("index")
    with pytest.raises(ModelValidationError):
        ScanConfig("cantor", y=0.0)
    with pytest.raises(ModelValidationError):
        ScanConfig("ssf", model_path="m.json", interval=(1.0, 0.0))


def test_parser_defaults():
    args = build_parser().parse_args(["cantor"])
    config = config_from_args(args)
    assert (config.depth, config.nodes, config.samples, config.y) == (6, 32, 100, 1e-4)
    assert config.lambdas == []


def test_interval_flag_format():
    args = build_parser().parse_args(["index", "--model", "m.json", "--interval", "-3", "3.5"])
    assert config_from_args(args).interval == (-3.0, 3.5)
    with pytest.raises(SystemExit):
        build_parser().parse_args(["index", "--model", "m.json", "--interval", "1"])


@pytest.mark.parametrize(
    "flags", [["--depth", "0"], ["--samples", "0"], ["--y", "0"], ["--nodes", "0"], ["--workers", "0"]]
)
def test_zero_flags_are_rejected(flags):
    args = build_parser().parse_args(["cantor", *flags])
    with pytest.raises(ModelValidationError):
        config_from_args(args)
    assert main(["cantor", *flags]) == 2


def test_selftest_suites_are_seeded():
    first = run_suites(5, 2, names=("dual_formula",))
    second = run_suites(5, 2, names=("dual_formula",))
    assert [r.to_dict() for r in first] == [r.to_dict() for r in second]
    assert first[0].passed
    assert first[0].checked == 42


def test_every_selftest_suite_passes():
    results = run_suites(42, 3)
    assert len(results) == len(SUITES)
    assert {result.name: result.failures for result in results if not result.passed} == {}


def test_selftest_suite_names_are_unique():
    names = [name for name, _ in SUITES]
    assert len(names) == len(set(names)) == 10


def test_random_model_shape(rng):
    model = random_model(rng, dim=6, rank=2)
    assert (model.dim, model.aux_dim) == (6, 2)


def test_helpers():
    assert digest("ressf") == digest("ressf", None)
    assert digest("ressf", "salt") != digest("ressf")
    assert config_digest({"a": 1, "b": 2}) == config_digest({"b": 2, "a": 1})
    assert f"{plural(1):check}" == "1 check"
    assert f"{plural(3):check}" == "3 checks"
    assert f"{plural(2):entry|entries}" == "2 entries"
    assert human_join(["a", "b"]) == "a or b"
    assert human_join(["a"]) == "a"
    assert human_join(["a", "b", "c"], final="and") == "a, b and c"
