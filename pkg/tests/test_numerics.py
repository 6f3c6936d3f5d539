import numpy as np
import pytest
import scipy.sparse as sp

from phdisc.errors import (DimensionMismatch, RankDeficientConstraint,
                           SingularMatrix)
from phdisc.numerics import (MidpointStepper, implicit_midpoint_step,
                             integrate, power_iteration, solve_linear,
                             solve_saddle, spdiag)
from phdisc.phcore import BlockLayout, DescriptorPHSystem, hamiltonian


def gauss_eliminate(A, b):
    """Dense Gaussian elimination without pivoting; independent oracle for
    SPD systems."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    for k in range(n):
        for i in range(k + 1, n):
            f = A[i, k] / A[k, k]
            A[i, k:] -= f * A[k, k:]
            b[i] -= f * b[k]
    x = np.zeros(n)
    for i in reversed(range(n)):
        x[i] = (b[i] - A[i, i + 1:] @ x[i + 1:]) / A[i, i]
    return x


def make_system(M, J, Q, R=None, constrained=(), names=None):
    n = M.shape[0]
    if R is None:
        R = sp.csr_matrix((n, n))
    if names is None:
        names = (("state", n),)
    return DescriptorPHSystem(M=sp.csr_matrix(M), J=sp.csr_matrix(J),
                              R=sp.csr_matrix(R), Q=sp.csr_matrix(Q),
                              layout=BlockLayout(*names),
                              constrained_blocks=constrained)


# ---------------------------------------------------------------------------
# solve_linear

def test_solve_linear_identity():
    x, rep = solve_linear(sp.identity(3, format="csr"), np.array([1.0, 2.0, 3.0]))
    assert np.allclose(x, [1.0, 2.0, 3.0], atol=0.0)
    assert rep.residual_norm <= 1e-15


def test_solve_linear_diagonal():
    A = sp.diags([2.0, 4.0])
    x, _ = solve_linear(A.tocsr(), np.array([2.0, 4.0]))
    assert np.allclose(x, [1.0, 1.0], atol=0.0)


def test_solve_linear_dirichlet_laplacian_matches_elimination_oracle():
    # interior operator of the unit-spacing second-difference with fixed ends
    A = np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]])
    b = np.ones(3)
    expected = gauss_eliminate(A, b)
    x, rep = solve_linear(sp.csr_matrix(A), b)
    assert np.linalg.norm(x - expected) <= 1e-12
    xd, _ = solve_linear(A, b)
    assert np.linalg.norm(xd - expected) <= 1e-12


def test_solve_linear_spd_residual(rng):
    B = rng.standard_normal((40, 40))
    A = B @ B.T + 40 * np.eye(40)
    b = rng.standard_normal(40)
    _, rep = solve_linear(sp.csr_matrix(A), b)
    assert rep.residual_norm <= 1e-12


def test_solve_linear_banded_path_matches_generic(rng):
    n = 200
    main = 4.0 + rng.random(n)
    off = rng.random(n - 1)
    A = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    b = rng.standard_normal(n)
    x, _ = solve_linear(A, b)   # bandwidth 1 -> banded solver
    assert np.linalg.norm(A @ x - b) <= 1e-12 * np.linalg.norm(b)


def test_solve_linear_errors():
    with pytest.raises(SingularMatrix):
        solve_linear(sp.csr_matrix(np.zeros((3, 3))), np.ones(3))
    with pytest.raises(SingularMatrix):
        solve_linear(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))
    with pytest.raises(DimensionMismatch):
        solve_linear(sp.identity(3, format="csr"), np.ones(4))
    with pytest.raises(DimensionMismatch):
        solve_linear(sp.csr_matrix((3, 4)), np.ones(3))


# ---------------------------------------------------------------------------
# solve_saddle

def kkt_oracle(A, C, b, d):
    n, m = A.shape[0], C.shape[0]
    K = np.zeros((n + m, n + m))
    K[:n, :n] = A
    K[:n, n:] = C.T
    K[n:, :n] = C
    sol = np.linalg.solve(K, np.concatenate([b, d]))
    return sol[:n], sol[n:]


def test_solve_saddle_hand_case_pinned_first_coordinate():
    A = np.eye(2)
    C = np.array([[1.0, 0.0]])
    x, lam = solve_saddle(sp.csr_matrix(A), sp.csr_matrix(C),
                          np.zeros(2), np.array([1.0]))
    assert np.allclose(x, [1.0, 0.0], atol=1e-13)
    assert np.allclose(lam, [-1.0], atol=1e-13)


def test_solve_saddle_hand_case_second_coordinate():
    # A x + C^T lam = b, C x = d with x = (1, 0) forces lam = +1 here
    A = np.eye(2)
    C = np.array([[0.0, 1.0]])
    b = np.array([1.0, 1.0])
    d = np.array([0.0])
    xe, le = kkt_oracle(A, C, b, d)
    x, lam = solve_saddle(sp.csr_matrix(A), sp.csr_matrix(C), b, d)
    assert np.allclose(x, xe, atol=1e-13) and np.allclose(x, [1.0, 0.0])
    assert np.allclose(lam, le, atol=1e-13) and np.allclose(lam, [1.0])


def test_solve_saddle_inactive_constraint(rng):
    B = rng.standard_normal((5, 5))
    A = B @ B.T + 5 * np.eye(5)
    C = rng.standard_normal((2, 5))
    b = rng.standard_normal(5)
    x_star = np.linalg.solve(A, b)
    x, lam = solve_saddle(sp.csr_matrix(A), sp.csr_matrix(C), b, C @ x_star)
    assert np.linalg.norm(x - x_star) <= 1e-10
    assert np.linalg.norm(lam) <= 1e-10


def test_solve_saddle_residuals(rng):
    B = rng.standard_normal((30, 30))
    A = sp.csr_matrix(B @ B.T + 30 * np.eye(30))
    C = sp.csr_matrix(rng.standard_normal((7, 30)))
    b = rng.standard_normal(30)
    d = rng.standard_normal(7)
    x, lam = solve_saddle(A, C, b, d)
    scale = max(1.0, np.linalg.norm(b))
    assert np.linalg.norm(A @ x + C.T @ lam - b) <= 1e-11 * scale
    assert np.linalg.norm(C @ x - d) <= 1e-11 * scale


def test_solve_saddle_rank_deficient():
    A = sp.identity(3, format="csr")
    C = sp.csr_matrix(np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]))
    with pytest.raises(RankDeficientConstraint):
        solve_saddle(A, C, np.zeros(3), np.zeros(2))


# ---------------------------------------------------------------------------
# implicit midpoint

def test_midpoint_conserves_harmonic_oscillator_energy():
    sys = make_system(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]),
                      np.eye(2))
    z = np.array([1.0, 0.0])
    H0 = hamiltonian(sys, z)
    stepper = MidpointStepper(sys, 0.01)
    for _ in range(1000):
        z, _ = stepper.step(z)
    assert abs(hamiltonian(sys, z) - H0) <= 1e-12


def test_midpoint_damping_matches_exponential():
    sys = make_system(np.eye(1), np.zeros((1, 1)), np.eye(1), R=np.eye(1))
    dt = 1e-3
    z = np.array([1.0])
    stepper = MidpointStepper(sys, dt)
    for _ in range(1000):
        z, _ = stepper.step(z)
    assert abs(z[0] - np.exp(-1.0)) <= 1e-6


def test_midpoint_constrained_state_frozen_and_algebraic_row_solved():
    # freeze the first block; its effort becomes the multiplier fixed by the
    # conductive algebraic row
    M = np.eye(2)
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    R = np.diag([2.0, 0.0])
    sys = make_system(M, J, np.eye(2), R=R, constrained=("a",),
                      names=(("a", 1), ("b", 1)))
    z = np.array([0.7, 1.0])
    stepper = MidpointStepper(sys, 0.05)
    vals = [z.copy()]
    for _ in range(100):
        z, e = stepper.step(z)
        vals.append(z.copy())
        # algebraic row: 0 = e_b - 2 e_a
        assert abs(e[1] - 2.0 * e[0]) <= 1e-12
    vals = np.array(vals)
    assert np.all(vals[:, 0] == 0.7)          # frozen exactly
    assert vals[-1, 1] < vals[0, 1]           # dissipative decay


def test_midpoint_matches_manual_reduced_update(rng):
    n = 12
    B = rng.standard_normal((n, n))
    Q = B @ B.T + n * np.eye(n)
    U = np.triu(rng.standard_normal((n, n)), 1)
    J = U - U.T
    sys = make_system(np.eye(n), J, Q)
    dt = 0.02
    z0 = rng.standard_normal(n)
    z1 = implicit_midpoint_step(sys, z0, None, dt)
    A = J @ Q
    expected = np.linalg.solve(np.eye(n) - 0.5 * dt * A,
                               (np.eye(n) + 0.5 * dt * A) @ z0)
    assert np.linalg.norm(z1 - expected) <= 1e-11 * np.linalg.norm(expected)


def test_midpoint_coupled_path_nondiagonal_mass(rng):
    # tridiagonal M exercises the joint (z, e) solve; the effort relation
    # M e = Q z_mid must hold at the midpoint
    n = 10
    M = sp.diags([0.2 * np.ones(n - 1), np.ones(n), 0.2 * np.ones(n - 1)],
                 [-1, 0, 1]).tocsr()
    U = sp.csr_matrix(np.triu(rng.standard_normal((n, n)), 1))
    J = (U - U.T).tocsr()
    Q = sp.diags(1.0 + rng.random(n)).tocsr()
    sys = make_system(M, J, Q)
    stepper = MidpointStepper(sys, 0.01)
    z0 = rng.standard_normal(n)
    z1, e_mid = stepper.step(z0)
    zm = 0.5 * (z0 + z1)
    assert np.linalg.norm(M @ e_mid - Q @ zm) <= 1e-12
    assert np.linalg.norm(M @ (z1 - z0) - 0.01 * (J @ e_mid)) <= 1e-12
    H0 = hamiltonian(sys, z0)
    z = z0
    for _ in range(200):
        z, _ = stepper.step(z)
    assert abs(hamiltonian(sys, z) - H0) <= 1e-10 * max(1.0, H0)


# ---------------------------------------------------------------------------
# integrate

def test_integrate_sample_count():
    sys = make_system(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]),
                      np.eye(2))
    dt = 0.1
    traj = integrate(sys, np.array([1.0, 0.0]), None, 10 * dt, dt)
    assert traj.n_samples == 11
    traj = integrate(sys, np.array([1.0, 0.0]), None, 10 * dt, dt,
                     record_every=2)
    assert traj.n_samples == 6


def test_integrate_zero_state_zero_input():
    sys = make_system(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]),
                      np.eye(2))
    traj = integrate(sys, np.zeros(2), None, 1.0, 0.1)
    assert np.all(traj.states == 0.0)
    assert np.all(traj.hamiltonian == 0.0)


def test_integrate_rejects_bad_arguments():
    sys = make_system(np.eye(2), np.zeros((2, 2)), np.eye(2))
    with pytest.raises(ValueError):
        integrate(sys, np.zeros(2), None, -1.0, 0.1)
    with pytest.raises(DimensionMismatch):
        integrate(sys, np.zeros(3), None, 1.0, 0.1)


def test_power_iteration_dominant_eigenvalue():
    A = np.diag([3.0, 1.0, 0.5])
    lam, v = power_iteration(lambda x: A @ x, 3, seed=1)
    assert abs(lam - 3.0) <= 1e-10
    assert abs(abs(v[0]) - 1.0) <= 1e-5
