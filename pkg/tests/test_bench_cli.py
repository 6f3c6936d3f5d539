import numpy as np
import pytest

from phdisc.bench_cli import (BENCH_HEADER, TRAJECTORY_HEADER, BenchRow,
                              build_scenario, builtin_systems,
                              fit_loglog_slope, parse_config, run_cli,
                              run_kernel_benchmark)
from phdisc.errors import (ConfigTypeError, InsufficientData, MissingKey,
                           UnknownModel)

MINIMAL = """
[scenario]
model = wave1d_sl
n = 32
t_final = 0.05
dt = 1e-3
"""


def test_parse_config_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.model == "wave1d_sl"
    assert cfg.mass == "lumped"
    assert cfg.bc == "closed"
    assert cfg.record_every == 1


def test_parse_config_comments_and_sections():
    cfg = parse_config("""
[scenario]
model = dzektser      # seepage run
nx = 8
ny = 8
t_final = 0.5
dt = 1e-2
[material]
mu = 0.2
a = 1.0
b = 0.5
[output]
path = out.csv
""")
    assert cfg.material["mu"] == 0.2
    assert cfg.output == "out.csv"


def test_parse_config_unknown_model_names_valid_set():
    with pytest.raises(UnknownModel) as err:
        parse_config("[scenario]\nmodel = wave9d\n")
    assert "wave1d_sd" in str(err.value)


def test_parse_config_missing_model():
    with pytest.raises(MissingKey):
        parse_config("[scenario]\nn = 8\n")


def test_parse_config_negative_dt():
    with pytest.raises(ConfigTypeError) as err:
        parse_config("[scenario]\nmodel = wave1d_sl\nn = 32\n"
                     "t_final = 1.0\ndt = -1\n")
    assert "dt must be > 0" in str(err.value)


def test_parse_config_collects_every_bad_key():
    with pytest.raises(ConfigTypeError) as err:
        parse_config("""
[scenario]
model = wave1d_sl
n = 1
t_final = 1.0
dt = 1e-3
bogus = 3
[material]
quark = 1.0
""")
    issues = err.value.issues
    assert any("n must be >= 2" in s for s in issues)
    assert any("bogus" in s for s in issues)
    assert any("quark" in s for s in issues)


def test_build_scenario_every_dynamic_model():
    for model in ("wave1d_sd", "wave1d_sl", "wave2d_sd", "wave2d_sl",
                  "rm_sd", "rm_sl", "kl_sd", "kl_sl", "maxwell_te_sd",
                  "maxwell_te_sl", "maxwell_lf_sl", "dzektser",
                  "spring_coupling", "piezo"):
        cfg = parse_config("[scenario]\nmodel = %s\nn = 16\nnx = 4\nny = 4\n"
                           "t_final = 0.01\ndt = 1e-2\n"
                           "[material]\nsigma = 1.0\n" % model)
        sys, z0, schedule = build_scenario(cfg)
        assert z0.shape == (sys.n,)


def test_builtin_registry_complete():
    names = set(builtin_systems())
    assert len(names) >= 12
    for required in ("wave1d_sd", "wave1d_sl", "wave2d_sd", "wave2d_sl",
                     "rm_sd", "rm_sl", "kl_sd", "kl_sl", "maxwell_te_sd",
                     "maxwell_te_sl", "dzektser", "piezo"):
        assert required in names


# ---------------------------------------------------------------------------
# benchmark

def test_fit_loglog_slope_exact_powers():
    rows = [BenchRow(N, 0, 0, 0, 0, N * N, 3 * N - 2, 0.0)
            for N in (64, 128, 256)]
    assert abs(fit_loglog_slope(rows, "nnz_dense") - 2.0) <= 1e-12
    rows_lin = [BenchRow(N, 0, 0, 0, 0, N * N, 5 * N, 0.0)
                for N in (64, 128, 256)]
    assert abs(fit_loglog_slope(rows_lin, "nnz_sparse") - 1.0) <= 1e-12
    with pytest.raises(InsufficientData):
        fit_loglog_slope(rows[:2], "nnz_dense")


def test_kernel_benchmark_small_ladder():
    rows = run_kernel_benchmark([32, 64, 128], mu=1e-3, repeats=3)
    assert [r.N for r in rows] == [32, 64, 128]
    for r in rows:
        assert r.nnz_dense == r.N * r.N
        assert r.max_rel_diff_sigma < 0.05
    ratio = rows[1].nnz_sparse / rows[0].nnz_sparse
    assert 1.9 <= ratio <= 2.1
    assert fit_loglog_slope(rows, "nnz_dense") >= 1.999
    assert fit_loglog_slope(rows, "nnz_sparse") <= 1.05
    with pytest.raises(ValueError):
        run_kernel_benchmark([64, 32], mu=1e-3)
    with pytest.raises(ValueError):
        run_kernel_benchmark([32, 64, 128], mu=1e-3, repeats=2)


# ---------------------------------------------------------------------------
# CLI

def test_cli_run_writes_trajectory_csv(tmp_path):
    cfgfile = tmp_path / "wave.ini"
    out = tmp_path / "traj.csv"
    cfgfile.write_text(MINIMAL + "[output]\npath = %s\n" % out)
    assert run_cli(["run", str(cfgfile)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == TRAJECTORY_HEADER
    assert len(lines) == 52    # header + initial sample + 50 steps
    # energy column constant for the closed run
    H = [float(l.split(",")[2]) for l in lines[1:]]
    assert abs(H[-1] - H[0]) <= 1e-10 * max(1.0, H[0])


def test_cli_run_deterministic(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    for out in (out1, out2):
        cfgfile = tmp_path / "cfg.ini"
        cfgfile.write_text(MINIMAL + "[output]\npath = %s\n" % out)
        assert run_cli(["run", str(cfgfile)]) == 0
    assert out1.read_text() == out2.read_text()


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[scenario]\nmodel = wave9d\n")
    assert run_cli(["run", str(bad)]) == 2
    bad.write_text("[scenario]\nmodel = wave1d_sl\nn = 16\n"
                   "t_final = 1.0\ndt = -2\n")
    assert run_cli(["run", str(bad)]) == 2
    # numerically impossible run: low-frequency projection without
    # conductivity
    nolf = tmp_path / "nolf.ini"
    nolf.write_text("[scenario]\nmodel = maxwell_lf_sl\nnx = 4\nny = 4\n"
                    "t_final = 0.1\ndt = 1e-2\n")
    assert run_cli(["run", str(nolf)]) == 3


def test_cli_bench_csv_header(tmp_path):
    out = tmp_path / "bench.csv"
    code = run_cli(["bench", "kernel", "--sizes", "32,64,128",
                    "--mu", "1e-3", "--repeats", "3", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == BENCH_HEADER
    assert len(lines) == 4


def test_cli_nanorod_scenario(tmp_path):
    cfgfile = tmp_path / "rod.ini"
    out = tmp_path / "rod.csv"
    cfgfile.write_text("[scenario]\nmodel = nanorod\nn = 128\n"
                       "[material]\nmu = 1e-4\n[output]\npath = %s\n" % out)
    assert run_cli(["run", str(cfgfile)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "N,max_rel_diff_sigma"
    assert float(lines[1].split(",")[1]) <= 0.05


def test_cli_verify_suite_exit_zero():
    assert run_cli(["verify", "--suite", "sbp"]) == 0
