import csv
import io
import json
import subprocess
import sys

import jsonschema
import pytest
import sympy

from modholder import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# modholder ") and lines[0].endswith(" v1")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_profile_sqrt2(capsys):
    code, out, _ = run(capsys, "profile", "--point", "sqrt:2", "--depth", "20")
    assert code == 0
    payload = json.loads(out)
    jsonschema.validate(payload, cli.load_schema("profile"))
    a = [int(v) for v in payload["a"]]  # big integers travel as decimal strings
    assert a == [1] + [2] * 19
    oracle = sympy.continued_fraction_iterator(sympy.sqrt(2))
    assert a == [int(next(oracle)) for _ in range(20)]


def test_profile_echoes_quotients(capsys):
    code, out, _ = run(capsys, "profile", "--point", "cf:[0;7,7,7]", "--depth", "3")
    assert code == 0 and [int(v) for v in json.loads(out)["a"]] == [0, 7, 7]


def test_profile_rational_is_flagged(capsys):
    code, out, _ = run(capsys, "profile", "--point", "355/113")
    payload = json.loads(out)
    assert code == 0 and [int(v) for v in payload["a"]] == [3, 7, 16] and payload["truncated"] is True


def test_profile_csv(capsys):
    code, out, _ = run(capsys, "profile", "--point", "phi", "--depth", "6", "--format", "csv")
    rows = csv_rows(out)
    assert code == 0 and [r["a_n"] for r in rows] == ["1"] * 6
    assert rows[0]["kappa_n"] == ""


def test_profile_precision_exhausted(capsys):
    code, _, err = run(capsys, "profile", "--point", "liouville:4:8", "--depth", "8",
                       "--prec-ceiling", "300")
    assert code == 2 and "precision" in err


def test_env_precision_ceiling(capsys, monkeypatch):
    monkeypatch.setenv(cli.ENV_PREC_CEILING, "300")
    code, _, _ = run(capsys, "profile", "--point", "liouville:4:8", "--depth", "8")
    assert code == 2
    monkeypatch.setenv(cli.ENV_PREC_CEILING, "lots")
    code, _, err = run(capsys, "profile", "--point", "sqrt:2")
    assert code == 4 and cli.ENV_PREC_CEILING in err


def test_series_json(capsys):
    code, out, _ = run(capsys, "series", "--form", "eisenstein:4", "--s", "7", "--point", "dec:0.5")
    payload = json.loads(out)
    jsonschema.validate(payload, cli.load_schema("series"))
    assert code == 0 and float(payload["value"]) == 0 and payload["err_bound"] == 0


def test_series_rejects_nonconvergent_s(capsys):
    code, _, err = run(capsys, "series", "--form", "eisenstein:4", "--s", "4", "--point", "phi")
    assert code == 4 and "s > 4" in err


def test_cwt_apex_grid_phi(capsys):
    code, out, _ = run(capsys, "cwt", "--form", "eisenstein:4", "--s", "7", "--point", "phi",
                       "--n-range", "3:12")
    rows = csv_rows(out)
    assert code == 0 and len(rows) == 10
    assert list(rows[0]) == cli.SCALING_COLUMNS
    a = [float(r["a"]) for r in rows]
    assert all(y < x for x, y in zip(a, a[1:]))


def test_cwt_check_quadrature(capsys):
    code, out, _ = run(capsys, "cwt", "--form", "eisenstein:4", "--s", "7", "--point", "phi",
                       "--a", "0.1,0.2", "--b", "0,0.05", "--check-quadrature")
    rows = csv_rows(out)
    assert code == 0 and len(rows) == 4
    for r in rows:
        assert r["quad_status"] == "ok" and float(r["quad_rel_diff"]) < 1e-4


def test_cwt_empty_grid_writes_nothing(capsys, tmp_path):
    target = tmp_path / "grid.csv"
    code, _, _ = run(capsys, "cwt", "--form", "eisenstein:4", "--s", "7", "--point", "phi",
                     "--a", "", "--b", "0", "-o", str(target))
    assert code == 3 and not target.exists()


def test_cwt_json_scaling(capsys):
    code, out, _ = run(capsys, "cwt", "--form", "delta", "--s", "11", "--point", "sqrt2m1",
                       "--n-range", "3:8", "--format", "json")
    payload = json.loads(out)
    assert code == 0 and [r["n"] for r in payload["rows"]] == list(range(3, 9))


def test_exponent_e4_sqrt2(capsys):
    code, out, _ = run(capsys, "exponent", "--form", "eisenstein:4", "--s", "7", "--point", "sqrt:2")
    payload = json.loads(out)
    jsonschema.validate(payload, cli.load_schema("exponent_report"))
    pred = payload["predicted"][0]
    assert code == 0 and abs(payload["measured_alpha"] - 5) < 0.15
    assert pred["value"] == 5 and pred["conditions"]["s > k + k/nu - k/mu"] is True


def test_exponent_delta_equality_branch(capsys):
    code, out, _ = run(capsys, "exponent", "--form", "delta", "--s", "11", "--point", "sqrt2m1")
    preds = {p["theorem"]: p for p in json.loads(out)["predicted"]}
    assert code == 0 and preds["cusp_equality"]["value"] == 5 and preds["cusp_equality"]["holds"]


def test_exponent_e2_equality_flag(capsys):
    code, out, _ = run(capsys, "exponent", "--form", "e2", "--s", "4", "--point", "cf:[0;(7)]",
                       "--depth", "14")
    preds = {p["theorem"]: p for p in json.loads(out)["predicted"]}
    assert code == 0 and preds["e2_equality"]["value"] == 3 and preds["e2_equality"]["holds"]


def test_exponent_degenerate_range(capsys):
    code, _, _ = run(capsys, "exponent", "--form", "eisenstein:4", "--s", "7", "--point", "sqrt:2",
                     "--n-range", "5:6")
    assert code == 3


def test_verify_lemmas(capsys, tmp_path):
    target = tmp_path / "v.json"
    code, out, _ = run(capsys, "verify", "lemmas", "-o", str(target))
    assert code == 0 and "[PASS]" in out and "[FAIL]" not in out
    payload = json.loads(target.read_text())
    jsonschema.validate(payload, cli.load_schema("verify"))
    assert payload["passed"] is True


def test_verify_prop32_with_overrides(capsys):
    code, out, _ = run(capsys, "verify", "prop32", "--form", "eisenstein:4", "--point", "sqrt:2")
    assert code == 0 and "[PASS]" in out


def test_verify_unknown_suite(capsys):
    code, _, err = run(capsys, "verify", "everything-else")
    assert code == 4 and "unknown suite" in err


@pytest.mark.parametrize("argv", [
    ["profile"],
    ["profile", "--point", "nonsense"],
    ["cwt", "--form", "eisenstein:4", "--s", "7", "--point", "phi", "--a", "0.1"],
    ["exponent", "--form", "eisenstein:4", "--s", "7", "--point", "phi", "--D", "1"],
    ["exponent", "--form", "eisenstein:4", "--s", "7", "--point", "phi", "--n-range", "3:40"],
    ["series", "--form", "eisenstein:4", "--s", "7", "--point", "phi", "--flavor", "tan"],
])
def test_usage_errors_exit_four(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(cli.main(argv))
    assert exc.value.code == 4


def test_run_config_round_trip(capsys):
    ns = cli.build_parser().parse_args(["exponent", "--form", "delta", "--s", "11",
                                        "--point", "sqrt2m1", "--n-range", "3:12"])
    cfg = cli.RunConfig.from_args(ns)
    back = cli.RunConfig.from_json(json.loads(json.dumps(cfg.to_json())))
    assert back == cfg and back.n_range == (3, 12)


def test_output_is_deterministic(capsys):
    argv = ["cwt", "--form", "eisenstein:4", "--s", "7", "--point", "e", "--n-range", "3:9"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "modholder", "--version"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "0.1.0" in proc.stdout
