import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from noiseradar import __version__, signal_model
from noiseradar import roc as roc_mod
from noiseradar.cli import main
from noiseradar.exceptions import QuadratureError
from noiseradar.roc import roc_exact
from noiseradar.signal_model import CovarianceSpec
from noiseradar.vgamma import d0_general_law, detector_law, vg_pdf


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def column(rows, header, name, kind=float):
    i = header.index(name)
    return np.array([kind(r[i]) for r in rows])


def test_pdf_default_grid(capsys):
    code, out, _ = run(capsys, "pdf", "--rho", 0.3, "--kappa", 0.3, "--n", 5)
    header, rows = table(out)
    assert code == 0 and header == ["x", "pdf_analytic"] and len(rows) == 1001
    x = column(rows, header, "x")
    assert x[0] == -2.0 and x[-1] == 2.0
    np.testing.assert_array_equal(column(rows, header, "pdf_analytic"), vg_pdf(x, detector_law(0.3, 0.3, 5)))


def test_pdf_symmetric_when_uncorrelated(capsys):
    _, out, _ = run(capsys, "pdf", "--rho", 0, "--kappa", 0, "--n", 1)
    header, rows = table(out)
    pdf = column(rows, header, "pdf_analytic")
    assert np.abs(pdf - pdf[::-1]).max() <= 1e-12


def test_pdf_general_law(capsys):
    _, out, _ = run(capsys, "pdf", "--general", "--rho", 0.3, "--n", 20, "--sigma1", 2, "--sigma2", 0.5,
                    "--phi", 0.5236, "--points", 11)
    header, rows = table(out)
    law = d0_general_law(CovarianceSpec(2.0, 0.5, 0.3, 0.5236), 20)
    np.testing.assert_array_equal(column(rows, header, "pdf_analytic"), vg_pdf(np.linspace(-2, 2, 11), law))


def test_pdf_with_histogram(capsys):
    code, out, _ = run(capsys, "pdf", "--rho", 0.3, "--kappa", 0.3, "--n", 5, "--points", 81,
                       "--mc-trials", 100_000)
    header, rows = table(out)
    assert code == 0 and header == ["x", "pdf_analytic", "pdf_empirical"]
    a, e = column(rows, header, "pdf_analytic"), column(rows, header, "pdf_empirical")
    mask = a > 0.2
    # bin width 0.05 and 10^5 draws: a few percent relative error in the bulk
    assert np.abs(e[mask] / a[mask] - 1).max() < 0.1


@pytest.mark.parametrize("argv", [
    ["pdf", "--rho", "0.3", "--n", "5", "--sigma1", "2"],
    ["pdf", "--rho", "0.3", "--n", "5", "--general", "--kappa", "0.2"],
    ["pdf", "--rho", "0.3", "--n", "5", "--points", "1"],
    ["pdf", "--rho", "1.0", "--n", "5"],
    ["pdf", "--rho", "0.3"],
    ["roc", "--rho", "0.3", "--kappa", "0.1", "--n", "5", "--method", "empirical"],
    ["sweep-kappa", "--rho", "0.3", "--pfa", "0.01", "--n", "10", "--kappa-step", "0"],
    ["sweep-kappa", "--rho", "0.3", "--pfa", "0.01", "--n", "10", "--kappa-step", "-0.1"],
    ["range", "--rho0", "1.0", "--rc", "100", "--r-max", "500", "--n", "10", "--pfa", "0.01"],
    ["bogus"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 2 and out == ""


def test_roc_figure_family(capsys):
    kappas = [0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
    code, out, _ = run(capsys, "roc", "--rho", 0.3, "--n", 50, "--kappa", *kappas, "--method", "exact")
    header, rows = table(out)
    assert code == 0 and header == ["pfa", "pd", "method", "kappa", "stderr"]
    assert len(rows) == 60 * len(kappas)
    kap = column(rows, header, "kappa")
    pd = column(rows, header, "pd")
    assert {r[4] for r in rows} == {""}
    for k in kappas:
        np.testing.assert_array_equal(pd[kap == k], roc_exact(0.3, k, 50).pd)
        assert np.all(pd[kap == 0.3] >= pd[kap == k] - 1e-6)


def test_roc_null_is_diagonal(capsys):
    _, out, _ = run(capsys, "roc", "--rho", 0, "--kappa", 0.2, "--n", 10)
    header, rows = table(out)
    assert np.abs(column(rows, header, "pd") - column(rows, header, "pfa")).max() <= 1e-9


def test_roc_all_methods(capsys):
    _, out, _ = run(capsys, "roc", "--rho", 0.2, "--kappa", 0.2, "--n", 100, "--method", "all")
    header, rows = table(out)
    method = column(rows, header, "method", str)
    assert set(method) == {"exact", "approx"}
    pd = column(rows, header, "pd")
    assert np.abs(pd[method == "exact"] - pd[method == "approx"]).max() <= 0.05


def test_roc_empirical_shares_draws(capsys):
    _, out, _ = run(capsys, "roc", "--rho", 0.3, "--kappa", 0, 0.3, "--n", 20, "--method", "all",
                    "--trials", 20_000, "--pfa-points", 10)
    header, rows = table(out)
    method = column(rows, header, "method", str)
    assert list(dict.fromkeys(method)) == ["exact", "approx", "empirical"]
    emp = [r for r in rows if r[2] == "empirical"]
    assert len(emp) == 20 and all(r[4] != "" for r in emp)
    pd = column(rows, header, "pd")
    exact = pd[method == "exact"]
    err = column(emp, header, "stderr")
    assert np.abs(pd[method == "empirical"] - exact).max() < 0.05
    assert np.all(err >= 0)


def test_sweep_kappa_peaks(capsys):
    code, out, _ = run(capsys, "sweep-kappa", "--rho", 0.3, "--pfa", 0.01, "--n", 25, 50, 75, 100)
    header, rows = table(out)
    assert code == 0 and header == ["kappa", "n", "pd_normalized", "pd", "kind"]
    kind = column(rows, header, "kind", str)
    n = column(rows, header, "n", int)
    peaks = [r for r in rows if r[4] == "argmax"]
    assert [int(r[1]) for r in peaks] == [25, 50, 75, 100]
    assert all(float(r[0]) == 0.30 for r in peaks)
    norm = column(rows, header, "pd_normalized")
    for size in (25, 50, 75, 100):
        assert norm[(n == size) & (kind == "data")].max() == 1.0
        assert np.sum((n == size) & (kind == "data")) == 100


def test_sweep_kappa_small_rho(capsys):
    _, out, _ = run(capsys, "sweep-kappa", "--rho", 0.1, "--pfa", 0.01, "--n", 50)
    header, rows = table(out)
    (peak,) = [r for r in rows if r[4] == "argmax"]
    assert abs(float(peak[0]) - 0.10) <= 0.01 + 1e-12


def test_range(capsys):
    code, out, _ = run(capsys, "range", "--rho0", 0.5, "--rc", 100, "--r-max", 500, "--points", 26,
                       "--n", 50, "--pfa", 0.01, "--detector", "both")
    header, rows = table(out)
    assert code == 0 and header == ["range", "rho", "pd", "detector"]
    det = column(rows, header, "detector", str)
    rng, rho, pd = (column(rows, header, c) for c in ("range", "rho", "pd"))
    assert rng[0] == 0 and rho[0] == 0.5
    for d in ("optimal", "d0"):
        assert np.all(np.diff(rho[det == d]) <= 0)
    assert np.all(pd[det == "optimal"] >= pd[det == "d0"] - 1e-6)
    assert rho[-1] == pytest.approx(0.5 / math.sqrt(1 + 5 ** 4), rel=1e-15)


def test_outputs_are_byte_identical(tmp_path):
    argv = ["roc", "--rho", "0.3", "--kappa", "0.1", "0.3", "--n", "10", "--method", "all",
            "--trials", "5000", "--pfa-points", "8"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["--out", str(first)]) == 0
    assert main(argv + ["--out", str(second), "--workers", "3"]) == 0
    assert first.read_bytes() == second.read_bytes()
    other = tmp_path / "c.csv"
    main(argv + ["--out", str(other), "--seed", "7"])
    assert other.read_bytes() != first.read_bytes()


def test_manifest_sidecar(tmp_path):
    out = tmp_path / "curve.csv"
    assert main(["roc", "--rho", "0.2", "--kappa", "0.2", "--n", "10", "--out", str(out)]) == 0
    manifest = json.loads(out.with_suffix(".manifest.json").read_text())
    assert set(manifest) == {"command", "parameters", "seed", "tool_version", "timestamp",
                             "fallbacks_used", "data_file"}
    assert manifest["command"] == "roc" and manifest["seed"] == 20221
    assert manifest["tool_version"] == __version__ and manifest["data_file"] == "curve.csv"
    assert manifest["timestamp"].endswith("+00:00") and manifest["fallbacks_used"] == []
    assert manifest["parameters"]["kappa"] == [0.2] and manifest["parameters"]["method"] == "exact"


def test_no_manifest_for_stdout(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    run(capsys, "roc", "--rho", "0.2", "--kappa", "0.2", "--n", "10", "--pfa-points", "3")
    assert list(tmp_path.iterdir()) == []
    side = tmp_path / "m.json"
    run(capsys, "roc", "--rho", "0.2", "--kappa", "0.2", "--n", "10", "--pfa-points", "3",
        "--manifest", side)
    assert json.loads(side.read_text())["data_file"] is None


def test_manifest_records_fallbacks(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise QuadratureError("forced")

    monkeypatch.setattr(roc_mod, "vg_isf", broken)
    out = tmp_path / "r.csv"
    assert main(["roc", "--rho", "0.2", "--kappa", "0.2", "--n", "10", "--pfa-points", "3",
                 "--out", str(out)]) == 0
    used = json.loads(out.with_suffix(".manifest.json").read_text())["fallbacks_used"]
    assert len(used) == 3 and all(u["path"] == roc_mod.PATH_GAMMA for u in used)


def test_numerical_failure_exit_3(capsys, monkeypatch):
    def broken(*args, **kwargs):
        raise QuadratureError("forced")

    monkeypatch.setattr(roc_mod, "vg_isf", broken)
    monkeypatch.setattr(roc_mod, "vg_isf_gamma", broken)
    code, _, err = run(capsys, "roc", "--rho", 0.2, "--kappa", 0.2, "--n", 10, "--pfa-points", 3)
    assert code == 3 and "numerical failure" in err


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"rho": 0.3, "kappa": [0.3], "n": 50, "pfa-points": 5}))
    code, from_cfg, _ = run(capsys, "roc", "--config", cfg)
    _, direct, _ = run(capsys, "roc", "--rho", 0.3, "--kappa", 0.3, "--n", 50, "--pfa-points", 5)
    assert code == 0 and from_cfg == direct
    _, override, _ = run(capsys, "roc", "--config", cfg, "--n", 10)
    _, want, _ = run(capsys, "roc", "--rho", 0.3, "--kappa", 0.3, "--n", 10, "--pfa-points", 5)
    assert override == want
    cfg.write_text(json.dumps({"rho": 0.3, "colour": "red"}))
    assert run(capsys, "roc", "--config", cfg)[0] == 2
    cfg.write_text("[1, 2]")
    assert run(capsys, "roc", "--config", cfg)[0] == 2


def test_csv_values_round_trip(capsys):
    _, out, _ = run(capsys, "roc", "--rho", 0.37, "--kappa", 0.21, "--n", 13, "--pfa-points", 7)
    header, rows = table(out)
    want = roc_exact(0.37, 0.21, 13, np.array([float(r[0]) for r in rows]))
    np.testing.assert_array_equal(column(rows, header, "pd"), want.pd)
    assert any(len(r[1].replace("0.", "").lstrip("0")) >= 15 for r in rows)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "noiseradar", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout


def test_validate_quick_report(tmp_path):
    report_path = tmp_path / "report.json"
    code = main(["validate", "--quick", "--out", str(report_path)])
    report = json.loads(report_path.read_text())
    by_name = {c["name"]: c for c in report["checks"]}
    assert len(by_name) == 12 and report["quick"] and report["seed"] == 20221
    for c in report["checks"]:
        assert set(c) >= {"name", "passed", "statistic", "tolerance"}
    # the large-N approximation misses its 0.05 budget at rho = 0.3, N = 100
    assert not by_name["clt_approximation"]["passed"]
    assert code == 1 and report["passed"] is False
    assert all(c["passed"] for n, c in by_name.items() if n != "clt_approximation")


def test_validate_catches_flipped_quadrature_sign(tmp_path, monkeypatch):
    real = signal_model.build_covariance

    def flipped(spec):
        cov = real(spec).copy()
        cov[1, 3] = cov[3, 1] = -cov[1, 3]
        return cov

    monkeypatch.setattr(signal_model, "build_covariance", flipped)
    report_path = tmp_path / "report.json"
    assert main(["validate", "--quick", "--out", str(report_path)]) == 1
    by_name = {c["name"]: c for c in json.loads(report_path.read_text())["checks"]}
    assert not by_name["detector_law_ks"]["passed"]
