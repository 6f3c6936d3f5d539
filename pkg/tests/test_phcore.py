import numpy as np
import pytest
import scipy.sparse as sp

from phdisc.discrete_ops import Grid1D, StaggeredGrid2D
from phdisc.dzektser import DzektserParams, build_dzektser
from phdisc.errors import DimensionMismatch, QuadratureOrderTooLow
from phdisc.interconnect import couple_piezo
from phdisc.maxwell2d import EmMaterial
from phdisc.numerics import integrate
from phdisc.phcore import (BlockLayout, DescriptorPHSystem, check_structure,
                           consistent_effort, hamiltonian, legendre_variant,
                           power_balance, reconstruct_hamiltonian,
                           transposition_check)
from phdisc.plates import PlateMaterial, build_rm_sl
from phdisc.wave1d import (WaveMaterial, build_wave_sd, build_wave_sl,
                           build_wave_transposition)


def test_hamiltonian_identity_weight():
    sys = DescriptorPHSystem(M=sp.identity(2), J=sp.csr_matrix((2, 2)),
                             R=sp.csr_matrix((2, 2)), Q=sp.identity(2),
                             layout=BlockLayout(("z", 2)))
    assert hamiltonian(sys, np.array([3.0, 4.0])) == 12.5
    assert hamiltonian(sys, np.zeros(2)) == 0.0
    with pytest.raises(DimensionMismatch):
        hamiltonian(sys, np.zeros(3))


def test_hamiltonian_hat_deflection_matches_piecewise_integral():
    # H of a pure hat deflection is the exact elastic energy E / h
    g = Grid1D(0.0, 1.0, 4)
    E = 2.0
    sys = build_wave_sl(g, WaveMaterial(E=E))
    z = np.zeros(sys.n)
    z[2] = 1.0          # hat at the middle node, p = 0
    # piecewise-exact oracle: two elements with slopes +-1/h
    oracle = 0.5 * (E * g.h * (1.0 / g.h) ** 2 + E * g.h * (1.0 / g.h) ** 2)
    assert abs(hamiltonian(sys, z) - oracle) <= 1e-13 * oracle


def test_legendre_variant_identity(rng):
    g = Grid1D(0.0, 1.0, 12)
    sys = build_wave_sl(g, WaveMaterial())
    minus = legendre_variant(sys)
    for _ in range(10):
        z = rng.standard_normal(sys.n)
        gap = hamiltonian(sys, z) - hamiltonian(minus, z)
        boundary = float((sys.trace_beta @ z) @ (sys.trace_gamma @ z))
        assert abs(gap - boundary) <= 1e-13 * max(1.0, abs(boundary))


def test_legendre_variant_neumann_kernel_state():
    g = Grid1D(0.0, 1.0, 8)
    sys = build_wave_sl(g, WaveMaterial())
    minus = legendre_variant(sys)
    z = np.zeros(sys.n)
    z[:9] = 1.0          # uniform deflection: zero co-trace
    assert hamiltonian(sys, z) == hamiltonian(minus, z)


def test_legendre_variant_without_traces_is_identity():
    g = StaggeredGrid2D(1.0, 1.0, 4, 4)
    sys = build_dzektser(g, DzektserParams(mu=0.1, a=1.0))
    out = legendre_variant(sys)
    assert abs(out.Q - sys.Q).max() == 0.0


def test_check_structure_detects_constructed_defect():
    J = sp.csr_matrix(np.array([[0.0, 1.0], [-0.5, 0.0]]))
    sys = DescriptorPHSystem(M=sp.identity(2), J=J, R=sp.csr_matrix((2, 2)),
                             Q=sp.identity(2), layout=BlockLayout(("z", 2)))
    diag = check_structure(sys)
    assert diag.j_skew_defect == 0.5
    assert not diag.passed


def test_check_structure_wave_zero_defects():
    g = Grid1D(0.0, 1.0, 16)
    diag = check_structure(build_wave_sd(g, WaveMaterial()))
    assert diag.j_skew_defect == 0.0
    assert diag.q_sym_defect == 0.0
    assert diag.r_sym_defect == 0.0
    assert diag.passed


def test_check_structure_piezo_cross_blocks_symmetric():
    g = Grid1D(0.0, 1.0, 16)
    sys = couple_piezo(g, WaveMaterial(), EmMaterial(), 0.2)
    diag = check_structure(sys)
    assert diag.q_sym_defect == 0.0
    assert diag.passed


def test_transposition_identity_map():
    g = Grid1D(0.0, 1.0, 10)
    sys = build_wave_sl(g, WaveMaterial())
    I = sp.identity(sys.n, format="csr")
    rep = transposition_check(I, I, sys, sys)
    assert rep.passed
    assert rep.j_defect == 0.0 and rep.q_defect == 0.0


def test_transposition_wave_pair_and_rigid_mode():
    g = Grid1D(0.0, 1.0, 20)
    G, Gdag = build_wave_transposition(g)
    sd = build_wave_sd(g, WaveMaterial())
    sl = build_wave_sl(g, WaveMaterial())
    rep = transposition_check(G, Gdag, sd, sl)
    assert rep.passed and max(rep.j_defect, rep.q_defect) <= 1e-13
    # uniform displacement sits in the kernel of the map: the strain/momentum
    # image of rigid motion vanishes
    z = np.zeros(sl.n)
    z[:21] = 3.7
    assert np.max(np.abs(G @ z)) == 0.0


def test_transposition_dimension_mismatch():
    g = Grid1D(0.0, 1.0, 8)
    G, Gdag = build_wave_transposition(g)
    sd = build_wave_sd(g, WaveMaterial())
    sl = build_wave_sl(Grid1D(0.0, 1.0, 9), WaveMaterial())
    with pytest.raises(DimensionMismatch):
        transposition_check(G, Gdag, sd, sl)


# ---------------------------------------------------------------------------
# power balance

def test_power_balance_closed_run(rng):
    g = Grid1D(0.0, 1.0, 32)
    sys = build_wave_sl(g, WaveMaterial())
    z0 = rng.standard_normal(sys.n)
    traj = integrate(sys, z0, None, 0.5, 1e-3)
    rep = power_balance(traj, sys)
    assert rep.max_residual <= 1e-10 * max(1.0, traj.hamiltonian[0])


def test_power_balance_forced_wave_supplied_equals_trace_power():
    g = Grid1D(0.0, 1.0, 32)
    sys = build_wave_sd(g, WaveMaterial())

    def schedule(t):
        return np.array([0.3 * np.sin(5.0 * t), np.cos(3.0 * t)])

    traj = integrate(sys, np.zeros(sys.n), schedule, 0.4, 1e-3)
    rep = power_balance(traj, sys)
    assert rep.max_residual <= 1e-9 * max(1.0, np.max(traj.hamiltonian))
    # recompute sigma_b v_b - sigma_a v_a from midpoint states
    lay = sys.layout
    sm = lay.slc("momentum")
    for k in range(0, traj.n_steps, 37):
        z_mid = 0.5 * (traj.states[k] + traj.states[k + 1])
        v = (sys.Q @ z_mid)[sm] / sys.M.diagonal()[sm]
        u = traj.port_values["u"][k]
        boundary_power = u[1] * v[-1] - u[0] * v[0]
        assert abs(traj.step_series["supplied"][k] - boundary_power) <= 1e-12


def test_power_balance_dissipation_nonnegative(rng):
    g2 = StaggeredGrid2D(1.0, 1.0, 5, 5)
    sys = build_dzektser(g2, DzektserParams(mu=0.05, a=1.0, b=0.3))
    z0 = rng.standard_normal(sys.n)
    traj = integrate(sys, z0, None, 0.3, 1e-2)
    rep = power_balance(traj, sys)
    assert np.all(rep.dissipated >= 0.0)
    assert rep.max_residual <= 1e-10 * max(1.0, traj.hamiltonian[0])


# ---------------------------------------------------------------------------
# Hamiltonian reconstruction

def test_reconstruct_linear_case(rng):
    Q = rng.standard_normal((4, 4))
    Q = Q @ Q.T + 4 * np.eye(4)
    z = rng.standard_normal(4)
    H = reconstruct_hamiltonian(p_eval=lambda w: w,
                                s_eval=lambda w: Q @ w,
                                dp_eval=lambda w, d: d,
                                z=z, n_quad=2)
    exact = 0.5 * z @ (Q @ z)
    assert abs(H - exact) <= 1e-13 * max(1.0, abs(exact))


def test_reconstruct_cubic_scalar():
    H = reconstruct_hamiltonian(p_eval=lambda w: w,
                                s_eval=lambda w: w ** 3,
                                dp_eval=lambda w, d: d,
                                z=np.array([2.0]), n_quad=8)
    assert abs(H - 4.0) <= 1e-10


def test_reconstruct_zero_state():
    H = reconstruct_hamiltonian(lambda w: w, lambda w: w,
                                lambda w, d: d, np.zeros(3), 2)
    assert H == 0.0


def test_reconstruct_flags_low_order():
    # fractional-power effort law needs many points; 1-point rule must flag
    with pytest.raises(QuadratureOrderTooLow):
        reconstruct_hamiltonian(lambda w: w,
                                lambda w: np.abs(w) ** 0.5,
                                lambda w, d: d,
                                np.array([1.0]), 1)


# ---------------------------------------------------------------------------
# gradient check (assembled effort vs variational derivative of H)

@pytest.mark.parametrize("builder", [
    lambda: build_wave_sl(Grid1D(0.0, 1.0, 12), WaveMaterial(rho=2.0, E=3.0)),
    lambda: build_rm_sl(StaggeredGrid2D(1.0, 1.0, 4, 4),
                        PlateMaterial.isotropic()),
])
def test_gradient_check(builder, rng):
    sys = builder()
    h = 1e-5
    for _ in range(5):
        z = rng.standard_normal(sys.n)
        d = rng.standard_normal(sys.n)
        d /= np.linalg.norm(d)
        fd = (hamiltonian(sys, z + h * d) - hamiltonian(sys, z - h * d)) / (2 * h)
        grad = float((sys.Q @ z) @ d)
        assert abs(fd - grad) <= 1e-7 * max(1.0, abs(grad))


def test_consistent_effort_constrained():
    from phdisc.plates import build_kl_sd
    sys = build_kl_sd(StaggeredGrid2D(1.0, 1.0, 4, 4),
                      PlateMaterial.isotropic())
    rng = np.random.default_rng(1)
    z = rng.standard_normal(sys.n)
    z[sys.constrained_mask()] = 0.0
    e = consistent_effort(sys, z)
    resid = ((sys.J - sys.R) @ e)[sys.constrained_mask()]
    assert np.max(np.abs(resid)) <= 1e-10
