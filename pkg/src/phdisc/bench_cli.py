"""Kernel benchmark harness, scenario configs, verification suites and CLI.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import sys as _sys
import time
from dataclasses import dataclass, field
from statistics import median

import numpy as np

from . import dzektser as dz
from . import interconnect as ic
from . import maxwell2d as mx
from . import plates as pl
from . import wave1d as wv
from .discrete_ops import (Grid1D, StaggeredGrid2D, apply_dirichlet,
                           assemble_kernel_matrix, assemble_p1_mass,
                           assemble_p1_stiffness, sbp_gradient_1d,
                           sbp_operators_2d)
from .errors import (ConfigError, ConfigTypeError, InsufficientData,
                     MissingKey, PhdiscError, UnknownModel)
from .numerics import integrate, solve_linear
from .phcore import check_structure, hamiltonian, power_balance, transposition_check

TRAJECTORY_HEADER = "step,t,H,supplied_power,dissipated_power,balance_residual"
BENCH_HEADER = ("N,assembly_dense_s,solve_dense_s,assembly_sparse_s,"
                "solve_sparse_s,nnz_dense,nnz_sparse,max_rel_diff_sigma")
DEFAULT_BENCH_SIZES = (64, 128, 256, 512, 1024, 2048, 4096)
DEFAULT_BENCH_MU = 1e-3          # times (b - a)^2
DEFAULT_BENCH_REPEATS = 5


# ---------------------------------------------------------------------------
# kernel benchmark

@dataclass
class BenchRow:
    N: int
    assembly_dense_s: float
    solve_dense_s: float
    assembly_sparse_s: float
    solve_sparse_s: float
    nnz_dense: int
    nnz_sparse: int
    max_rel_diff_sigma: float


def _bench_eps(grid):
    x = grid.nodes
    return np.sin(np.pi * x) ** 2 * np.cos(2.0 * np.pi * x)


def run_kernel_benchmark(sizes, mu, modulus=1.0, repeats=DEFAULT_BENCH_REPEATS):
    """Assemble and solve the nonlocal constitutive system along a size
    ladder, dense kernel path versus sparse implicit path; wall times are
    medians over ``repeats`` runs.  ``sizes`` are matrix dimensions."""
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    if repeats < 3:
        raise ValueError("repeats must be >= 3")
    rows = []
    for N in sizes:
        grid = Grid1D(0.0, 1.0, N - 1)
        mat = wv.WaveMaterial(E=modulus, mu=mu)
        eps = _bench_eps(grid)

        t_ad, t_sd, t_as, t_ss = [], [], [], []
        for _ in range(repeats):
            t0 = time.perf_counter()
            K_alpha = assemble_kernel_matrix(grid, mu, modulus)
            t_ad.append(time.perf_counter() - t0)

            M = assemble_p1_mass(grid, 1.0)
            t0 = time.perf_counter()
            rhs = K_alpha @ eps
            sigma_dense, _ = solve_linear(M.tocsr(), rhs)
            t_sd.append(time.perf_counter() - t0)

            t0 = time.perf_counter()
            A = (assemble_p1_mass(grid, 1.0)
                 + assemble_p1_stiffness(grid, mu)).tocsr()
            K_E = assemble_p1_mass(grid, mat.E_nodes(grid))
            A_bc, shift = apply_dirichlet(A, grid, (0.0, 0.0))
            t_as.append(time.perf_counter() - t0)

            t0 = time.perf_counter()
            rhs_s = K_E @ eps
            rhs_s[[0, grid.n_cells]] = 0.0
            sigma_sparse, _ = solve_linear(A_bc, rhs_s + shift)
            t_ss.append(time.perf_counter() - t0)

        x = grid.nodes
        mid = (x > 1.0 / 3.0) & (x < 2.0 / 3.0)
        diff = np.max(np.abs(sigma_dense[mid] - sigma_sparse[mid]))
        scale = np.max(np.abs(sigma_sparse[mid]))
        A_nnz = A_bc.copy()
        A_nnz.eliminate_zeros()
        rows.append(BenchRow(N=N,
                             assembly_dense_s=median(t_ad),
                             solve_dense_s=median(t_sd),
                             assembly_sparse_s=median(t_as),
                             solve_sparse_s=median(t_ss),
                             nnz_dense=K_alpha.size,
                             nnz_sparse=int(A_nnz.nnz),
                             max_rel_diff_sigma=float(diff / scale)))
    return rows


def fit_loglog_slope(rows, column):
    """Least-squares slope of log(value) versus log(N) over bench rows."""
    if len(rows) < 3:
        raise InsufficientData("need at least 3 rows")
    N = np.array([r.N for r in rows], dtype=float)
    v = np.array([float(getattr(r, column)) for r in rows])
    if np.any(v <= 0.0):
        raise InsufficientData("column values must be positive")
    return float(np.polyfit(np.log(N), np.log(v), 1)[0])


def write_bench_csv(path, rows):
    with open(path, "w") as fh:
        fh.write(BENCH_HEADER + "\n")
        for r in rows:
            fh.write("%d,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g\n"
                     % (r.N, r.assembly_dense_s, r.solve_dense_s,
                        r.assembly_sparse_s, r.solve_sparse_s,
                        r.nnz_dense, r.nnz_sparse, r.max_rel_diff_sigma))


# ---------------------------------------------------------------------------
# scenario configuration

MODEL_NAMES = ("wave1d_sd", "wave1d_sl", "wave2d_sd", "wave2d_sl", "nanorod",
               "rm_sd", "rm_sl", "kl_sd", "kl_sl", "maxwell_te_sd",
               "maxwell_te_sl", "maxwell_lf_sd", "maxwell_lf_sl", "dzektser",
               "spring_coupling", "piezo")

_MATERIAL_KEYS = ("rho", "modulus", "mu", "eps0", "mu0", "sigma", "a", "b",
                  "k", "gamma", "q", "thickness", "nu", "shear_correction",
                  "shear_modulus", "youngs")


@dataclass
class ScenarioConfig:
    model: str
    n: int = 64
    nx: int = 16
    ny: int = 16
    t_final: float = 0.0
    dt: float = 0.0
    record_every: int = 1
    mass: str = "lumped"
    bc: str = "closed"
    amplitude: float = 1.0
    frequency: float = 1.0
    seed: int = 0
    output: str = ""
    material: dict = field(default_factory=dict)


def parse_config(text):
    """Parse an INI scenario description; collects every bad key into one
    structured error."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(["unparseable config: %s" % exc]) from exc
    if not cp.has_section("scenario"):
        raise MissingKey(["missing [scenario] section"])
    sc = dict(cp.items("scenario"))
    if "model" not in sc:
        raise MissingKey(["scenario.model is required"])
    model = sc.pop("model").strip()
    if model not in MODEL_NAMES:
        raise UnknownModel(["unknown model %r; valid models: %s"
                            % (model, ", ".join(MODEL_NAMES))])

    cfg = ScenarioConfig(model=model)
    issues = []

    def take(key, conv, cond=None, msg=None):
        if key in sc:
            raw = sc.pop(key)
            try:
                val = conv(raw)
            except ValueError:
                issues.append("scenario.%s: cannot parse %r" % (key, raw))
                return
            if cond is not None and not cond(val):
                issues.append(msg or ("scenario.%s invalid" % key))
                return
            setattr(cfg, key, val)

    take("n", int, lambda v: v >= 2, "n must be >= 2")
    take("nx", int, lambda v: v >= 2, "nx must be >= 2")
    take("ny", int, lambda v: v >= 2, "ny must be >= 2")
    take("t_final", float, lambda v: v > 0.0, "t_final must be > 0")
    take("dt", float, lambda v: v > 0.0, "dt must be > 0")
    take("record_every", int, lambda v: v >= 1, "record_every must be >= 1")
    take("mass", str, lambda v: v in ("lumped", "consistent"),
         "mass must be lumped or consistent")
    take("seed", int)
    for key in sorted(sc):
        issues.append("scenario.%s: unknown key" % key)

    if cp.has_section("material"):
        for key, raw in cp.items("material"):
            if key not in _MATERIAL_KEYS:
                issues.append("material.%s: unknown key" % key)
                continue
            try:
                cfg.material[key] = float(raw)
            except ValueError:
                issues.append("material.%s: cannot parse %r" % (key, raw))
    if cp.has_section("bc"):
        bc = dict(cp.items("bc"))
        kind = bc.pop("kind", "closed")
        if kind not in ("closed", "forced"):
            issues.append("bc.kind must be closed or forced")
        else:
            cfg.bc = kind
        for key, conv in (("amplitude", float), ("frequency", float)):
            if key in bc:
                try:
                    setattr(cfg, key, conv(bc.pop(key)))
                except ValueError:
                    issues.append("bc.%s: cannot parse" % key)
        for key in sorted(bc):
            issues.append("bc.%s: unknown key" % key)
    if cp.has_section("output"):
        cfg.output = cp.get("output", "path", fallback="")

    if model != "nanorod":
        if cfg.t_final <= 0.0 and not any("t_final" in s for s in issues):
            issues.append("t_final must be > 0")
        if cfg.dt <= 0.0 and not any("dt" in s for s in issues):
            issues.append("dt must be > 0")
    if issues:
        raise ConfigTypeError(issues)
    return cfg


# ---------------------------------------------------------------------------
# scenario builders

def _smooth_state(sys, seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(sys.n)
    H = hamiltonian(sys, z)
    if H > 0.0:
        z /= np.sqrt(2.0 * H)
    return z


def _forcing(cfg, n_ports):
    if cfg.bc != "forced" or n_ports == 0:
        return None
    amp, om = cfg.amplitude, 2.0 * np.pi * cfg.frequency

    def schedule(t):
        return amp * np.sin(om * t) * np.ones(n_ports)
    return schedule


def _wave_material(cfg):
    m = cfg.material
    return wv.WaveMaterial(rho=m.get("rho", 1.0), E=m.get("modulus", 1.0),
                           mu=m.get("mu", 0.0))


def _plate_material(cfg):
    m = cfg.material
    return pl.PlateMaterial.isotropic(
        rho=m.get("rho", 1.0), h=m.get("thickness", 0.1),
        k=m.get("shear_correction", 5.0 / 6.0),
        G=m.get("shear_modulus", 1.0), E=m.get("youngs", 1.0),
        nu=m.get("nu", 0.3))


def _em_material(cfg):
    m = cfg.material
    return mx.EmMaterial(eps0=m.get("eps0", 1.0), mu0=m.get("mu0", 1.0),
                         sigma_c=m.get("sigma", 0.0))


def build_scenario(cfg):
    """Instantiate (system, z0, input schedule) for a dynamic scenario."""
    model = cfg.model
    if model in ("wave1d_sd", "wave1d_sl"):
        grid = Grid1D(0.0, 1.0, cfg.n)
        mat = _wave_material(cfg)
        if model.endswith("sd"):
            sys = wv.build_wave_sd(grid, mat)
        else:
            sys = wv.build_wave_sl(grid, mat, mass=cfg.mass)
    elif model in ("wave2d_sd", "wave2d_sl"):
        grid = StaggeredGrid2D(1.0, 1.0, cfg.nx, cfg.ny)
        sys = wv.build_wave_2d(grid, _wave_material(cfg), model[-2:])
    elif model in ("rm_sd", "rm_sl"):
        grid = StaggeredGrid2D(1.0, 1.0, cfg.nx, cfg.ny)
        builder = pl.build_rm_sd if model == "rm_sd" else pl.build_rm_sl
        if cfg.bc == "forced":
            sys = builder(grid, _plate_material(cfg), bc="free",
                          load_ports=True)
        else:
            sys = builder(grid, _plate_material(cfg))
    elif model == "kl_sd":
        grid = StaggeredGrid2D(1.0, 1.0, cfg.nx, cfg.ny)
        sys = pl.build_kl_sd(grid, _plate_material(cfg))
    elif model == "kl_sl":
        grid = StaggeredGrid2D(1.0, 1.0, cfg.nx, cfg.ny)
        sys = pl.build_kl_sl(grid, _plate_material(cfg))
    elif model in ("maxwell_te_sd", "maxwell_te_sl", "maxwell_lf_sd",
                   "maxwell_lf_sl"):
        grid = StaggeredGrid2D(1.0, 1.0, cfg.nx, cfg.ny)
        mat = _em_material(cfg)
        forced = cfg.bc == "forced"
        if model.endswith("sd"):
            sys = mx.build_te_sd(grid, mat, boundary_port=forced)
        else:
            sys = mx.build_te_sl(grid, mat)
        if "lf" in model:
            sys = mx.lf_project(sys)
    elif model == "dzektser":
        grid = StaggeredGrid2D(1.0, 1.0, cfg.nx, cfg.ny)
        m = cfg.material
        sys = dz.build_dzektser(grid, dz.DzektserParams(
            mu=m.get("mu", 0.1), a=m.get("a", 1.0), b=m.get("b", 0.1)))
    elif model == "spring_coupling":
        grid = Grid1D(0.0, 1.0, cfg.n)
        mat = _wave_material(cfg)
        sys = ic.couple_spring(wv.build_wave_sl(grid, mat),
                               wv.build_wave_sl(grid, mat),
                               k=cfg.material.get("k", 1.0),
                               gamma=cfg.material.get("gamma", 0.0))
    elif model == "piezo":
        grid = Grid1D(0.0, 1.0, cfg.n)
        sys = ic.couple_piezo(grid, _wave_material(cfg), _em_material(cfg),
                              cfg.material.get("q", 0.1))
    else:
        raise UnknownModel(["model %r is not a dynamic scenario" % model])
    z0 = _smooth_state(sys, cfg.seed)
    if sys.constrained_blocks:
        z0[sys.constrained_mask()] = 0.0
    return sys, z0, _forcing(cfg, sys.n_ports)


def run_nanorod(cfg):
    """Implicit-versus-kernel constitutive cross check on the configured
    grid; returns the interior relative difference."""
    grid = Grid1D(0.0, 1.0, cfg.n)
    mu = cfg.material.get("mu", 1e-4)
    mat = wv.WaveMaterial(E=cfg.material.get("modulus", 1.0), mu=mu)
    x = grid.nodes
    eps = np.where((x > 1 / 3) & (x < 2 / 3),
                   np.sin(3 * np.pi * (x - 1 / 3)) ** 2, 0.0)
    s_imp, _ = wv.solve_sigma_implicit(grid, mat, eps)
    s_exp, _ = wv.solve_sigma_explicit(grid, mat, eps)
    mid = (x > 1 / 3) & (x < 2 / 3)
    return float(np.max(np.abs(s_imp[mid] - s_exp[mid]))
                 / np.max(np.abs(s_exp[mid])))


def write_trajectory_csv(path, traj):
    ss = traj.step_series
    residual = ss["dH"] - traj.dt * (ss["supplied"] - ss["dissipated"])
    with open(path, "w") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for s, t in enumerate(traj.times):
            k = s * traj.record_every
            if k == 0:
                sup = dis = res = 0.0
            else:
                sup = ss["supplied"][k - 1]
                dis = ss["dissipated"][k - 1]
                res = residual[k - 1]
            fh.write("%d,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                     % (k, t, traj.hamiltonian[s], sup, dis, res))


# ---------------------------------------------------------------------------
# verification suites

def builtin_systems():
    """Default-size instances of every bundled model."""
    g1 = Grid1D(0.0, 1.0, 32)
    g2 = StaggeredGrid2D(1.0, 1.0, 6, 6)
    wm = wv.WaveMaterial()
    pm = pl.PlateMaterial.isotropic()
    em = mx.EmMaterial(sigma_c=1.0)
    return {
        "wave1d_sd": lambda: wv.build_wave_sd(g1, wm),
        "wave1d_sl": lambda: wv.build_wave_sl(g1, wm),
        "wave2d_sd": lambda: wv.build_wave_2d(g2, wm, "sd"),
        "wave2d_sl": lambda: wv.build_wave_2d(g2, wm, "sl"),
        "rm_sd": lambda: pl.build_rm_sd(g2, pm),
        "rm_sl": lambda: pl.build_rm_sl(g2, pm),
        "kl_sd": lambda: pl.build_kl_sd(g2, pm),
        "kl_sl": lambda: pl.build_kl_sl(g2, pm),
        "maxwell_te_sd": lambda: mx.build_te_sd(g2, em),
        "maxwell_te_sl": lambda: mx.build_te_sl(g2, em),
        "maxwell_lf_sd": lambda: mx.lf_project(mx.build_te_sd(g2, em)),
        "maxwell_lf_sl": lambda: mx.lf_project(mx.build_te_sl(g2, em)),
        "dzektser": lambda: dz.build_dzektser(
            g2, dz.DzektserParams(mu=0.1, a=1.0, b=0.5)),
        "spring_coupling": lambda: ic.couple_spring(
            wv.build_wave_sl(g1, wm), wv.build_wave_sl(g1, wm), k=1.0),
        "piezo": lambda: ic.couple_piezo(g1, wm, mx.EmMaterial(), 0.1),
    }


def verify_sbp():
    checks = []
    rng = np.random.default_rng(0)
    pair = sbp_gradient_1d(Grid1D(0.0, 2.0, 17))
    worst = max(pair.identity_residual(rng.standard_normal(18),
                                       rng.standard_normal(17))
                for _ in range(100))
    checks.append(("sbp_1d_identity", worst <= 1e-13, "residual %.2e" % worst))
    ops = sbp_operators_2d(StaggeredGrid2D(1.0, 1.4, 7, 5))
    for name, p in ops.as_dict().items():
        worst = 0.0
        for _ in range(100):
            u = rng.standard_normal(p.forward.shape[1])
            v = rng.standard_normal(p.forward.shape[0])
            worst = max(worst, p.identity_residual(u, v))
        checks.append(("sbp_2d_%s" % name, worst <= 1e-13,
                       "residual %.2e" % worst))
    DG = (ops.div_perp_cells @ ops.gradperp.forward).tocsr()
    DG.eliminate_zeros()
    checks.append(("div_gradperp_zero", DG.nnz == 0, "nnz %d" % DG.nnz))
    return checks


def verify_structure():
    checks = []
    for name, build in builtin_systems().items():
        diag = check_structure(build())
        detail = ("J %.1e Q %.1e R %.1e" % (diag.j_skew_defect,
                                            diag.q_sym_defect,
                                            diag.r_sym_defect))
        checks.append(("structure_%s" % name, diag.passed, detail))
    return checks


def verify_equivalence():
    checks = []
    g1 = Grid1D(0.0, 1.0, 24)
    G, Gd = wv.build_wave_transposition(g1)
    wm = wv.WaveMaterial()
    rep = transposition_check(G, Gd, wv.build_wave_sd(g1, wm),
                              wv.build_wave_sl(g1, wm))
    checks.append(("transposition_wave1d", rep.passed,
                   "defects %.1e/%.1e" % (rep.j_defect, rep.q_defect)))
    g2 = StaggeredGrid2D(1.0, 1.0, 5, 6)
    G2, G2d = wv.build_wave_2d_transposition(g2)
    rep = transposition_check(G2, G2d, wv.build_wave_2d(g2, wm, "sd"),
                              wv.build_wave_2d(g2, wm, "sl"))
    checks.append(("transposition_wave2d", rep.passed,
                   "defects %.1e/%.1e" % (rep.j_defect, rep.q_defect)))
    pm = pl.PlateMaterial.isotropic()
    dia = pl.plate_diagram_check(g2, pm)
    checks.append(("plate_diagram", dia.passed,
                   "closure %.1e elim %.1e" % (dia.closure_defect,
                                               dia.elimination_defect)))
    Gm, Gmd = mx.maxwell_transposition(g2)
    em = mx.EmMaterial()
    rep = transposition_check(Gm, Gmd, mx.build_te_sd(g2, em),
                              mx.build_te_sl(g2, em))
    checks.append(("transposition_maxwell", rep.passed,
                   "defects %.1e/%.1e" % (rep.j_defect, rep.q_defect)))
    return checks


def verify_balance():
    checks = []
    g1 = Grid1D(0.0, 1.0, 64)
    wm = wv.WaveMaterial()
    sys = wv.build_wave_sl(g1, wm)
    z0 = _smooth_state(sys, 1)
    traj = integrate(sys, z0, None, 0.5, 1e-3)
    drift = abs(traj.hamiltonian[-1] - traj.hamiltonian[0]) / max(
        traj.hamiltonian[0], 1e-30)
    checks.append(("conservation_wave1d_sl", drift <= 1e-10,
                   "drift %.2e" % drift))
    sysf = wv.build_wave_sd(g1, wm)
    traj = integrate(sysf, _smooth_state(sysf, 2),
                     lambda t: np.array([np.sin(7 * t), np.cos(5 * t)]),
                     0.5, 1e-3)
    rep = power_balance(traj, sysf)
    tol = 1e-9 * max(1.0, traj.hamiltonian[0])
    checks.append(("balance_forced_wave1d", rep.max_residual <= tol,
                   "residual %.2e" % rep.max_residual))
    g2 = StaggeredGrid2D(1.0, 1.0, 6, 6)
    sys = dz.build_dzektser(g2, dz.DzektserParams(mu=0.1, a=1.0, b=0.5))
    traj = integrate(sys, _smooth_state(sys, 3), None, 0.5, 1e-2)
    repd = dz.dissipativity_report(traj)
    checks.append(("dissipativity_dzektser", repd.passed,
                   "max dH %.2e" % repd.max_increase))
    cp = ic.couple_spring(wv.build_wave_sl(g1, wm), wv.build_wave_sl(g1, wm),
                          k=1.0, gamma=0.5)
    traj = integrate(cp, _smooth_state(cp, 4), None, 0.5, 1e-3)
    worst = float(np.max(traj.step_series["dH"]))
    checks.append(("dissipativity_damped_spring", worst <= 1e-12,
                   "max dH %.2e" % worst))
    return checks


VERIFY_SUITES = {"sbp": verify_sbp, "structure": verify_structure,
                 "equivalence": verify_equivalence, "balance": verify_balance}


def run_verify(suite):
    if suite == "all":
        names = list(VERIFY_SUITES)
    elif suite in VERIFY_SUITES:
        names = [suite]
    else:
        raise ConfigError(["unknown suite %r; valid: sbp, structure, "
                           "equivalence, balance, all" % suite])
    ok = True
    for name in names:
        for check, passed, detail in VERIFY_SUITES[name]():
            print("%s %s (%s)" % ("PASS" if passed else "FAIL", check, detail))
            ok = ok and passed
    return ok


# ---------------------------------------------------------------------------
# CLI

def run_cli(argv):
    parser = argparse.ArgumentParser(prog="phdisc")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="integrate a scenario config")
    p_run.add_argument("config")
    p_ver = sub.add_parser("verify", help="run verification suites")
    p_ver.add_argument("--suite", default="all")
    p_bench = sub.add_parser("bench", help="benchmarks")
    p_bench.add_argument("target", choices=["kernel"])
    p_bench.add_argument("--sizes", default=",".join(
        str(s) for s in DEFAULT_BENCH_SIZES))
    p_bench.add_argument("--mu", type=float, default=DEFAULT_BENCH_MU)
    p_bench.add_argument("--modulus", type=float, default=1.0)
    p_bench.add_argument("--repeats", type=int, default=DEFAULT_BENCH_REPEATS)
    p_bench.add_argument("--out", default="bench_kernel.csv")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        if args.command == "run":
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
            if cfg.model == "nanorod":
                diff = run_nanorod(cfg)
                out = cfg.output or "nanorod.csv"
                with open(out, "w") as fh:
                    fh.write("N,max_rel_diff_sigma\n%d,%.17g\n"
                             % (cfg.n, diff))
                print("nanorod interior relative difference: %.3e" % diff)
                return 0
            sys_, z0, schedule = build_scenario(cfg)
            traj = integrate(sys_, z0, schedule, cfg.t_final, cfg.dt,
                             cfg.record_every)
            out = cfg.output or (cfg.model + ".csv")
            write_trajectory_csv(out, traj)
            print("wrote %s (%d samples, H0=%.6g, H_end=%.6g)"
                  % (out, traj.n_samples, traj.hamiltonian[0],
                     traj.hamiltonian[-1]))
            return 0
        if args.command == "verify":
            return 0 if run_verify(args.suite) else 1
        if args.command == "bench":
            sizes = [int(s) for s in args.sizes.split(",") if s]
            rows = run_kernel_benchmark(sizes, args.mu, args.modulus,
                                        args.repeats)
            write_bench_csv(args.out, rows)
            print("wrote %s" % args.out)
            return 0
    except (OSError,) as exc:
        print("error: %s" % exc, file=_sys.stderr)
        return 2
    except ConfigError as exc:
        for issue in exc.issues:
            print("config error: %s" % issue, file=_sys.stderr)
        return 2
    except PhdiscError as exc:
        print("numerical failure: %s" % exc, file=_sys.stderr)
        return 3
    return 2


def main():
    raise SystemExit(run_cli(_sys.argv[1:]))


if __name__ == "__main__":
    main()
