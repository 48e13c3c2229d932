import datetime as dt
import json
import math

import numpy as np
import pytest
from scipy import stats

from hnspread import copula
from hnspread.cli import load_model, main
from hnspread.errors import DataError, ValidationError
from hnspread.garch import GarchParams, MarketContext, long_run_variance, simulate_path

BRENT = "omega=9.124e-33\nalpha=7.081e-6\nbeta=0.914\ngamma=96.505\nlambda=-0.418\ns0=60\n"
WTI = "omega=2.845e-4\nalpha=7.155e-6\nbeta=0.175\ngamma=0.161\nlambda=-0.522\ns0=55\n"
TICK = 1e-3 + 1e-12   # one unit in the last printed decimal


def write_prices(path, prices, start=dt.date(2015, 1, 1)):
    rows = ["date,price"]
    rows += [f"{start + dt.timedelta(days=i)},{float(p)!r}" for i, p in enumerate(prices)]
    path.write_text("\n".join(rows) + "\n")
    return path


def simulated_prices(n, seed):
    p = GarchParams(1e-6, 5e-6, 0.8, 100.0, 0.5)
    ls, _ = simulate_path(p, MarketContext(50.0, 0.0, long_run_variance(p)), n - 1, seed=seed)
    return np.exp(ls)


@pytest.fixture
def models(tmp_path):
    m1, m2 = tmp_path / "brent.txt", tmp_path / "wti.txt"
    m1.write_text(BRENT + "r=1e-4\n")
    m2.write_text(WTI + "r=1e-4\n")
    return str(m1), str(m2)


# --- model files ---------------------------------------------------------------------------

def test_load_model_formats(tmp_path):
    kv = tmp_path / "a.txt"
    kv.write_text("# Brent\n" + BRENT + "h0 = 3.5e-4  # next-day variance\n")
    spec = load_model(kv)
    assert spec.h0 == 3.5e-4 and spec.s0 == 60.0 and spec.rate is None
    js = tmp_path / "b.json"
    js.write_text(json.dumps({"model": {"omega": 1e-5, "alpha": 0, "beta": 0, "gamma": 0,
                                        "lambda": 0, "s0": 10}}))
    assert load_model(js).h0 == pytest.approx(1e-5)


def test_load_model_errors(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text(BRENT + "sigma=1\n")
    with pytest.raises(ValidationError, match="unknown"):
        load_model(path)
    path.write_text("omega=1e-6\n")
    with pytest.raises(ValidationError, match="missing"):
        load_model(path)
    with pytest.raises(DataError):
        load_model(tmp_path / "absent.txt")


# --- calibrate ----------------------------------------------------------------------------

def test_calibrate_simulated_csv(tmp_path):
    csv = write_prices(tmp_path / "p.csv", simulated_prices(500, seed=3))
    out = tmp_path / "fit.json"
    assert main(["calibrate", str(csv), "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    assert rec["converged"] is True and rec["n_obs"] == 499
    assert rec["model"]["s0"] == pytest.approx(float(simulated_prices(500, seed=3)[-1]))
    # the record is usable as a model file
    assert load_model(out).h0 > 0


def test_calibrate_csv_format(tmp_path, capsys):
    csv = write_prices(tmp_path / "p.csv", simulated_prices(200, seed=4))
    assert main(["calibrate", str(csv), "--format", "csv"]) in (0, 4)
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "parameter,estimate,std_error"
    assert lines[1].startswith("omega,")


def test_calibrate_missing_header(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("2020-01-01,1.0\n2020-01-02,1.1\n")
    assert main(["calibrate", str(path)]) == 3
    assert "line 1" in capsys.readouterr().err


def test_calibrate_too_short(tmp_path, capsys):
    csv = write_prices(tmp_path / "p.csv", np.linspace(10, 11, 10))
    assert main(["calibrate", str(csv)]) == 3
    assert "at least 30" in capsys.readouterr().err


# --- price --------------------------------------------------------------------------------

def test_price_all_methods(models, tmp_path):
    out = tmp_path / "p.json"
    code = main(["price", "--model1", models[0], "--model2", models[1], "--theta", "50.52",
                 "--method", "all", "--out", str(out)])
    assert code == 0
    rec = json.loads(out.read_text())
    reports = rec["reports"]
    assert len(reports) == 15
    for k in (0.0, 2.5, 5.0, 7.5, 10.0):
        by = {r["method"]: r for r in reports if r["strike"] == k}
        assert set(by) == {"single", "double", "monte_carlo"}
        mc = by["monte_carlo"]
        assert mc["ci_low"] <= by["single"]["price"] <= mc["ci_high"]
        # printed to 3 decimals, so agreement below 1e-3 shows as at most one tick
        assert abs(by["single"]["price"] - by["double"]["price"]) <= TICK
    assert all(r["price"] == round(r["price"], 3) for r in reports)


def test_price_n_ladder_grid(models, tmp_path):
    out = tmp_path / "t6.csv"
    code = main(["price", "--model1", models[0], "--model2", models[1], "--theta", "50.52",
                 "--n", "100,500,1000,5000,10000", "--format", "csv", "--no-timing",
                 "--out", str(out)])
    assert code == 0
    rows = [r.split(",") for r in out.read_text().splitlines()]
    assert rows[0][0] == "strike" and "single[100]" in rows[0] and "single[10000]" in rows[0]
    assert len(rows) == 6
    i5, i10 = rows[0].index("single[5000]"), rows[0].index("single[10000]")
    for row in rows[1:]:
        assert abs(float(row[i5]) - float(row[i10])) <= TICK


def test_price_convergence_diagnostics(models, capsys):
    code = main(["price", "--model1", models[0], "--model2", models[1], "--theta", "50.52",
                 "--strikes", "5", "--n", "100,500,1000,5000,10000"])
    assert code == 0
    conv = json.loads(capsys.readouterr().out)["convergence"]
    assert len(conv) == 1 and len(conv[0]["abs_diffs"]) == 4
    assert conv[0]["abs_diffs"][-1] < 1e-3


@pytest.mark.parametrize("extra", [
    ["--method", "fast"],
    ["--n", "5"],
    ["--method", "mc", "--sims", "10"],
    ["--maturity-days", "0"],
    ["--theta", "-1"],
    ["--strikes", "1,x"],
])
def test_price_validation_errors(models, capsys, extra):
    argv = ["price", "--model1", models[0], "--model2", models[1], "--theta", "2"] + extra
    assert main(argv) == 2
    assert "invalid input" in capsys.readouterr().err


def test_price_rate_conflict(tmp_path):
    m1, m2 = tmp_path / "a.txt", tmp_path / "b.txt"
    m1.write_text(BRENT + "r=1e-4\n")
    m2.write_text(WTI + "r=2e-4\n")
    argv = ["price", "--model1", str(m1), "--model2", str(m2), "--theta", "2", "--strikes", "5"]
    assert main(argv) == 2
    assert main(argv + ["--rate", "1e-4", "--n", "100"]) == 0


def test_price_no_timing_is_byte_identical(models, tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}.json"
        main(["price", "--model1", models[0], "--model2", models[1], "--theta", "3",
              "--strikes", "0,5", "--method", "single,mc", "--sims", "2000", "--seed", "11",
              "--no-timing", "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


# --- concordance ---------------------------------------------------------------------------

def test_concordance_identical_series(tmp_path, capsys):
    csv = write_prices(tmp_path / "p.csv", simulated_prices(300, seed=5))
    assert main(["concordance", str(csv), str(csv)]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["kendall_tau"] == 1.0
    assert rec["spearman_rho"] == pytest.approx(1.0)
    assert rec["theta_star"] is None and "theta_error" in rec


def test_concordance_recovers_plackett_theta(tmp_path, capsys):
    uv = copula.sample(copula.PlackettCopula(50.52), 10_000, seed=77)
    # returns with Gaussian marginals, integrated to prices
    r = stats.norm.ppf(uv) * 0.01
    p1 = write_prices(tmp_path / "a.csv", 50 * np.exp(np.concatenate([[0], np.cumsum(r[:, 0])])))
    p2 = write_prices(tmp_path / "b.csv", 40 * np.exp(np.concatenate([[0], np.cumsum(r[:, 1])])))
    assert main(["concordance", str(p1), str(p2)]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["n"] == 10_000
    assert rec["theta_star"] == pytest.approx(50.52, rel=0.2)
    assert 0 < rec["spearman_rho_at_theta_star"] < 1


def test_concordance_disjoint_dates(tmp_path, capsys):
    a = write_prices(tmp_path / "a.csv", np.linspace(10, 20, 50))
    b = write_prices(tmp_path / "b.csv", np.linspace(10, 20, 50), start=dt.date(2019, 1, 1))
    assert main(["concordance", str(a), str(b)]) == 3
    assert "data error" in capsys.readouterr().err


# --- figures ------------------------------------------------------------------------------

def read_columns(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data.T


def test_figures_rho_curve(tmp_path, capsys):
    assert main(["figures", "--out", str(tmp_path / "f")]) == 0
    theta, rho = read_columns(tmp_path / "f" / "rho_theta.csv")
    assert theta.size == 200
    assert np.all(np.diff(rho) > 0)
    assert rho[0] < 0 < rho[-1]
    names = {p.split("/")[-1] for p in capsys.readouterr().out.split()}
    assert {"scatter_theta_0.04.csv", "scatter_theta_1.csv", "scatter_theta_30.csv"} <= names


def test_figures_degenerate_model_is_gaussian(tmp_path):
    omega, rate, n = 1e-4, 1e-4, 20
    m = tmp_path / "m.txt"
    m.write_text(f"omega={omega}\nalpha=0\nbeta=0\ngamma=0\nlambda=0.3\ns0=1\n")
    out = tmp_path / "f"
    code = main(["figures", "--model1", str(m), "--horizons", f"5,{n}", "--sims", "500",
                 "--rate", str(rate), "--out", str(out)])
    assert code == 0
    mu, var = n * (rate - omega / 2), n * omega
    x, pdf, cdf = read_columns(out / "law_model1.csv")
    np.testing.assert_allclose(pdf, stats.norm.pdf(x, mu, math.sqrt(var)), atol=1e-6)
    np.testing.assert_allclose(cdf, stats.norm.cdf(x, mu, math.sqrt(var)), atol=1e-6)
    u, re, im = read_columns(out / "cf_model1.csv")
    phi = np.exp(1j * u * mu - 0.5 * var * u**2)
    np.testing.assert_allclose(re, phi.real, atol=1e-6)
    np.testing.assert_allclose(im, phi.imag, atol=1e-6)
    for hz in (5, n):
        counts = read_columns(out / f"hist_model1_{hz}d.csv")[2]
        assert counts.sum() == 500


def test_figures_same_seed_same_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        main(["figures", "--out", str(d), "--seed", "9", "--scatter-n", "300"])
    for name in ("scatter_theta_0.04.csv", "scatter_theta_1.csv", "scatter_theta_30.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    c = tmp_path / "c"
    main(["figures", "--out", str(c), "--seed", "10", "--scatter-n", "300"])
    assert (c / "scatter_theta_1.csv").read_bytes() != (a / "scatter_theta_1.csv").read_bytes()


def test_figures_needs_out_dir(capsys):
    assert main(["figures"]) == 2
