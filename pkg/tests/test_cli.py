"""Command-line interface: reports, schemas, exit codes, determinism."""

import json
import os
import subprocess
import sys

import pytest

from shintani import cli, qf
from shintani.arith import DirichletChar
from shintani.lifting import theta_classical


@pytest.fixture(autouse=True)
def _no_disk_cache():
    yield
    qf.enable_disk_cache(None)


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


# ---------------------------------------------------------------------------
# frozen command oracles


def test_qf_classes_disc5_level1(capsys):
    # a single class of discriminant 5 over the full group
    code, out = run_cli(capsys, "qf", "classes", "--level", "1",
                        "--disc", "5", "--json")
    assert code == 0
    obj = json.loads(out)
    assert obj["schema_version"] == 1
    assert obj["count"] == 1
    assert len(obj["classes"]) == 1
    [(a, b, c)] = [tuple(t) for t in obj["classes"]]
    assert b * b - 4 * a * c == 5


def test_qf_classes_text(capsys):
    code, out = run_cli(capsys, "qf", "classes", "--level", "11",
                        "--disc", "33")
    assert code == 0
    assert "count: 2" in out
    assert "2 -11 11" in out


def test_modsym_basis_dimension(capsys):
    code, out = run_cli(capsys, "modsym", "basis", "--level", "11",
                        "--weight", "0")
    assert code == 0
    assert "dimension: 3" in out


def test_modsym_basis_sign_split(capsys):
    code, out = run_cli(capsys, "modsym", "basis", "--level", "11",
                        "--weight", "0", "--json")
    obj = json.loads(out)
    assert obj["dimension"] == 3
    assert obj["plus_dimension"] + obj["minus_dimension"] == 3
    assert obj["minus_dimension"] == 1


def test_modsym_eigen_level11(capsys):
    code, out = run_cli(capsys, "modsym", "eigen", "--level", "11",
                        "--weight", "0", "--json")
    assert code == 0
    obj = json.loads(out)
    assert obj["count"] == 1
    assert obj["systems"][0]["eigenvalues"] == {
        "2": -2, "3": -1, "5": 1, "7": -2}


def test_shintani_classical_level5(capsys):
    code, out = run_cli(capsys, "shintani", "classical", "--level", "5",
                        "--weight", "1", "--nmax", "20", "--json")
    assert code == 0
    obj = json.loads(out)
    [system] = obj["systems"]
    assert system["eigenvalues"] == {"2": -4, "3": 2, "5": -5, "7": 6}
    assert system["theta"]["coeffs"] == {
        "1": "-10", "4": "20", "5": "-10", "8": "40", "9": "-50",
        "12": "-80", "13": "-20", "17": "140", "20": "60"}
    assert system["theta"]["weight_num"] == 5


def test_shintani_oc_report(capsys):
    code, out = run_cli(capsys, "shintani", "oc", "--p", "5",
                        "--tame-n", "1", "--moments", "4",
                        "--padic-prec", "4", "--nmax", "8", "--json")
    assert code == 0
    obj = json.loads(out)
    assert obj["space_dimension"] > 0
    assert obj["specialization_weight"] == 1
    spec = obj["specialization"]["coeffs"]
    assert any(v != "0" for v in spec.values())


def test_slopes_report(capsys):
    code, out = run_cli(capsys, "slopes", "--p", "11", "--tame-n", "1",
                        "--moments", "2", "--padic-prec", "4", "--h", "0",
                        "--json")
    assert code == 0
    obj = json.loads(out)
    assert obj["schema_version"] == 1
    # ordinary (slope-zero) part is present
    assert [0, 1] in obj["slopes_kept"]


# ---------------------------------------------------------------------------
# verify suites: exit codes and report shape


def test_verify_involution_passes(capsys):
    code, out = run_cli(capsys, "verify", "involution", "--level", "11",
                        "--weight", "0", "--nmax", "12")
    assert code == 0
    assert out.startswith("verify: anti-symmetry")
    assert "RESULT: PASS" in out


def test_verify_equivariance_passes(capsys):
    code, out = run_cli(capsys, "verify", "equivariance", "--level", "5",
                        "--weight", "1", "--nmax", "5", "--ells", "3")
    assert code == 0
    assert "RESULT: PASS" in out


def test_verify_interpolation_passes(capsys):
    code, out = run_cli(capsys, "verify", "interpolation", "--p", "5",
                        "--tame-n", "1", "--moments", "4",
                        "--padic-prec", "4", "--nmax", "5",
                        "--weights", "0,1")
    assert code == 0
    assert "RESULT: PASS" in out


def test_verify_oc_hecke_passes(capsys):
    code, out = run_cli(capsys, "verify", "oc-hecke", "--p", "5",
                        "--tame-n", "1", "--moments", "4",
                        "--padic-prec", "4", "--nmax", "4", "--ells", "3")
    assert code == 0
    assert "RESULT: PASS" in out


def test_verify_failure_exits_one(capsys, monkeypatch):
    # corrupt one coefficient downstream of the real computation: the
    # suite must exit 1 and point at the first failing index
    real = theta_classical

    def crooked(phi, M, k, chi, n_max, threads=1):
        e = real(phi, M, k, chi, n_max, threads=threads)
        co = dict(e.coeffs)
        co[1] = co.get(1, 0) + 1
        return e._like(co)

    monkeypatch.setattr(cli, "theta_classical", crooked)
    code, out = run_cli(capsys, "verify", "involution", "--level", "5",
                        "--weight", "1", "--nmax", "8")
    assert code == 1
    assert "RESULT: FAIL" in out
    assert "first failing coefficient" in out
    assert "n=1" in out


def test_usage_error_small_p(capsys):
    code = cli.main(["verify", "interpolation", "--p", "3", "--tame-n", "1",
                     "--nmax", "4"])
    assert code == 2


def test_usage_error_p_divides_tame(capsys):
    code = cli.main(["shintani", "oc", "--p", "5", "--tame-n", "10",
                     "--nmax", "4"])
    assert code == 2


def test_usage_error_missing_subcommand():
    with pytest.raises(SystemExit) as exc:
        cli.main(["qf"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# determinism and cache plumbing


def test_json_reruns_byte_identical(capsys):
    args = ("shintani", "classical", "--level", "5", "--weight", "1",
            "--nmax", "12", "--json")
    _, out1 = run_cli(capsys, *args)
    _, out2 = run_cli(capsys, *args)
    assert out1 == out2


def test_thread_count_invariant_output(capsys):
    base = ("verify", "involution", "--level", "5", "--weight", "1",
            "--nmax", "8")
    _, out1 = run_cli(capsys, *base, "--threads", "1")
    _, out2 = run_cli(capsys, *base, "--threads", "4")
    assert out1 == out2


def test_cache_dir_roundtrip(tmp_path, capsys):
    env_args = ("qf", "classes", "--level", "11", "--disc", "44", "--json")
    _, plain = run_cli(capsys, *env_args)
    os.environ["SHINTANI_CACHE_DIR"] = str(tmp_path)
    try:
        _, first = run_cli(capsys, *env_args)
        cached_files = list(tmp_path.iterdir())
        assert len(cached_files) == 1
        _, second = run_cli(capsys, *env_args)
    finally:
        del os.environ["SHINTANI_CACHE_DIR"]
        qf.enable_disk_cache(None)
    assert plain == first == second


def test_console_entry_subprocess():
    # end-to-end through the module entry point
    out = subprocess.run(
        [sys.executable, "-m", "shintani", "modsym", "basis",
         "--level", "11", "--weight", "0"],
        capture_output=True, text=True, check=True)
    assert "dimension: 3" in out.stdout


def test_jobconfig_character():
    cfg = cli.JobConfig(command="x", char_disc=5)
    chi = cfg.character()
    assert chi(2) == DirichletChar.from_kronecker(5)(2) == -1
    assert cli.JobConfig(command="x").character()(2) == 1


def test_json_diff_helper():
    a = {"x": [1, 2], "y": {"z": 3}}
    b = {"x": [1, 5], "y": {"z": 3}}
    assert cli._json_diff(a, b) == "$.x[1]: 2 != 5"
    assert cli._json_diff(a, a) is None
