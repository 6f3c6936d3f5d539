"""Direct linear and saddle-point solvers plus the implicit-midpoint stepper.

All solvers are direct factorizations (sparse LU with partial pivoting, a
banded fast path for narrow 1D operators, dense LU for dense inputs).  The
midpoint stepper treats a :class:`~phdisc.phcore.DescriptorPHSystem`; for a
closed system with R = 0 it preserves the quadratic energy 1/2 z^T Q z up to
solver roundoff, and its per-step power balance

    H(z1) - H(z0) = dt * (u_mid . y_mid - e_mid . R e_mid)

is an algebraic identity of the scheme.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (DimensionMismatch, RankDeficientConstraint,
                     SingularMatrix, SolverBreakdown)
from .phcore import Trajectory

SOLVE_TOL = 1e-12          # relative residual expected from direct solves
CONSERVATION_TOL = 1e-10   # relative energy drift for closed systems
PIVOT_TOL = 1e-14          # zero-pivot threshold, scaled by max |A|
BANDED_MAX_BANDWIDTH = 4


@dataclass
class LinearSolveReport:
    residual_norm: float
    factor_time_s: float
    solve_time_s: float


def sym(A):
    """Exactly symmetric part (A + A^T)/2; used to finalize M, Q, R."""
    A = sp.csr_matrix(A)
    return ((A + A.T) * 0.5).tocsr()


def skew_from_upper(U):
    """Exactly antisymmetric matrix U - U^T from its upper/partial content."""
    U = sp.csr_matrix(U)
    return (U - U.T).tocsr()


def spdiag(values):
    return sp.diags(np.asarray(values, dtype=float), format="csr")


def blkdiag(blocks):
    return sp.block_diag(blocks, format="csr")


def is_diagonal(A):
    A = sp.csr_matrix(A)
    return A.nnz == np.count_nonzero(A.diagonal())


def _bandwidth(A):
    coo = A.tocoo()
    if coo.nnz == 0:
        return 0
    return int(np.max(np.abs(coo.row - coo.col)))


def _check_pivots(diag, scale):
    small = np.min(np.abs(diag)) if diag.size else 0.0
    if small <= PIVOT_TOL * max(scale, 1.0):
        raise SingularMatrix("zero pivot detected (%.3e)" % small)


def solve_linear(A, b):
    """Solve A x = b by direct factorization.

    Returns ``(x, LinearSolveReport)``.  Sparse inputs go through sparse LU
    (or a banded solver when the bandwidth is small); dense inputs through
    dense LU with partial pivoting.
    """
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch("matrix is not square: %s" % (A.shape,))
    if b.shape != (n,):
        raise DimensionMismatch("rhs length %d does not match n=%d" % (b.size, n))

    if sp.issparse(A):
        A = A.tocsc()
        scale = np.max(np.abs(A.data)) if A.nnz else 0.0
        bw = _bandwidth(A)
        if 0 < bw <= BANDED_MAX_BANDWIDTH and n > 2 * bw + 1:
            t0 = time.perf_counter()
            ab = np.zeros((2 * bw + 1, n))
            Ad = A.todia()
            for off, row in zip(Ad.offsets, Ad.data):
                ab[bw - off, :] = row
            t1 = time.perf_counter()
            try:
                x = sla.solve_banded((bw, bw), ab, b)
            except np.linalg.LinAlgError as exc:
                raise SingularMatrix(str(exc)) from exc
            t2 = time.perf_counter()
        else:
            t0 = time.perf_counter()
            try:
                lu = spla.splu(A)
            except RuntimeError as exc:
                raise SingularMatrix(str(exc)) from exc
            _check_pivots(lu.U.diagonal(), scale)
            t1 = time.perf_counter()
            x = lu.solve(b)
            t2 = time.perf_counter()
        res = np.linalg.norm(A @ x - b) / max(1.0, np.linalg.norm(b))
    else:
        A = np.asarray(A, dtype=float)
        scale = np.max(np.abs(A)) if A.size else 0.0
        t0 = time.perf_counter()
        try:
            lu, piv = sla.lu_factor(A)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix(str(exc)) from exc
        _check_pivots(np.diag(lu), scale)
        t1 = time.perf_counter()
        x = sla.lu_solve((lu, piv), b)
        t2 = time.perf_counter()
        res = np.linalg.norm(A @ x - b) / max(1.0, np.linalg.norm(b))
    if not np.all(np.isfinite(x)):
        raise SolverBreakdown("non-finite solution")
    return x, LinearSolveReport(float(res), t1 - t0, t2 - t1)


def solve_saddle(A, C, b, d):
    """Solve the KKT system  A x + C^T lam = b,  C x = d.

    A is n x n, C is m x n with m <= n and full row rank.  Raises
    RankDeficientConstraint when the KKT factorization fails or the solution
    does not satisfy both blocks.
    """
    A = sp.csr_matrix(A)
    C = sp.csr_matrix(C)
    b = np.asarray(b, dtype=float)
    d = np.asarray(d, dtype=float)
    n = A.shape[0]
    m = C.shape[0]
    if A.shape != (n, n) or C.shape[1] != n:
        raise DimensionMismatch("incompatible saddle blocks")
    if b.shape != (n,) or d.shape != (m,):
        raise DimensionMismatch("incompatible saddle right-hand sides")
    K = sp.bmat([[A, C.T], [C, None]], format="csc")
    rhs = np.concatenate([b, d])
    try:
        lu = spla.splu(K)
        xl = lu.solve(rhs)
    except RuntimeError as exc:
        raise RankDeficientConstraint(str(exc)) from exc
    if not np.all(np.isfinite(xl)):
        raise RankDeficientConstraint("singular KKT system")
    x, lam = xl[:n], xl[n:]
    scale = max(1.0, np.linalg.norm(rhs))
    r1 = np.linalg.norm(A @ x + C.T @ lam - b)
    r2 = np.linalg.norm(C @ x - d)
    if max(r1, r2) > 1e-11 * scale * 10:
        raise RankDeficientConstraint(
            "KKT residuals too large: %.3e / %.3e" % (r1, r2))
    return x, lam


def power_iteration(matvec, n, maxit=2000, tol=1e-13, seed=0):
    """Dominant eigenvalue of a linear map given as a callable."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(maxit):
        w = matvec(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, v
        w /= nw
        lam_new = float(w @ matvec(w))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new, w
        lam, v = lam_new, w
    return lam, v


class MidpointStepper:
    """Implicit midpoint rule for a descriptor system, factored once per dt.

    Unconstrained systems with diagonal M use the reduced update
    (M - dt/2 A) z1 = (M + dt/2 A) z0 + dt B u  with  A = (J - R) M^{-1} Q.
    Otherwise the step solves the coupled sparse system in (z1, e_mid); M is
    never inverted explicitly.  Constrained blocks keep their state frozen and
    contribute their algebraic rows, the block efforts acting as multipliers.
    """

    def __init__(self, sys, dt):
        if dt <= 0.0:
            raise ValueError("dt must be > 0")
        self.sys = sys
        self.dt = float(dt)
        n = sys.n
        JmR = (sys.J - sys.R).tocsr()
        self._JmR = JmR
        constrained = bool(sys.constrained_blocks)
        self._coupled = constrained or not is_diagonal(sys.M)
        try:
            if not self._coupled:
                Minv = spdiag(1.0 / sys.M.diagonal())
                self._Minv = Minv
                A = (JmR @ (Minv @ sys.Q)).tocsr()
                self._lu = spla.splu((sys.M - 0.5 * dt * A).tocsc())
                self._Splus = (sys.M + 0.5 * dt * A).tocsr()
            else:
                mask = sys.constrained_mask()
                self._mask = mask
                Du = sp.diags((~mask).astype(float))
                Dc = sp.diags(mask.astype(float))
                self._Du, self._Dc = Du, Dc
                top = sp.hstack([Du @ sys.M + Dc, -dt * (Du @ JmR)])
                bot = sp.hstack([-0.5 * (Du @ sys.Q), Du @ sys.M + Dc @ JmR])
                self._lu = spla.splu(sp.vstack([top, bot]).tocsc())
        except RuntimeError as exc:
            raise RankDeficientConstraint(
                "midpoint step matrix is singular: %s" % exc) from exc

    def step(self, z, u_mid=None):
        sys = self.sys
        dt = self.dt
        Bu = np.zeros(sys.n)
        if u_mid is not None and sys.n_ports:
            Bu = sys.B_power @ np.asarray(u_mid, dtype=float)
        if not self._coupled:
            rhs = self._Splus @ z + dt * Bu
            z1 = self._lu.solve(rhs)
            e_mid = self._Minv @ (sys.Q @ (0.5 * (z + z1)))
        else:
            rhs_top = self._Du @ (sys.M @ z + dt * Bu) + self._Dc @ z
            rhs_bot = 0.5 * (self._Du @ (sys.Q @ z)) - self._Dc @ Bu
            x = self._lu.solve(np.concatenate([rhs_top, rhs_bot]))
            z1, e_mid = x[:sys.n], x[sys.n:]
        if not np.all(np.isfinite(z1)):
            raise SolverBreakdown("midpoint step diverged")
        return z1, e_mid

    def sample_effort(self, z, u=None):
        sys = self.sys
        if not self._coupled:
            return self._Minv @ (sys.Q @ z)
        from .phcore import consistent_effort
        return consistent_effort(sys, z, u)


def implicit_midpoint_step(sys, z, u_mid, dt):
    """One implicit-midpoint step; convenience wrapper around the stepper."""
    z = np.asarray(z, dtype=float)
    if z.shape != (sys.n,):
        raise DimensionMismatch(
            "state length %d, expected %d" % (z.size, sys.n))
    stepper = _make_stepper(sys, dt)
    z1, _ = stepper.step(z, u_mid)
    return z1


def _make_stepper(sys, dt):
    factory = sys.meta.get("stepper_factory")
    if factory is not None:
        return factory(sys, dt)
    return MidpointStepper(sys, dt)


def integrate(sys, z0, input_schedule, t_final, dt, record_every=1):
    """Integrate the descriptor system and record a :class:`Trajectory`.

    ``input_schedule`` is None or a callable t -> u evaluated at step
    midpoints.  Samples are recorded every ``record_every`` steps; per-step
    power-balance series are always recorded.
    """
    if t_final <= 0.0 or dt <= 0.0:
        raise ValueError("t_final and dt must be > 0")
    record_every = max(int(record_every), 1)
    n_steps = int(np.floor(t_final / dt + 1e-9))
    stepper = _make_stepper(sys, dt)
    z = np.asarray(z0, dtype=float).copy()
    if z.shape != (sys.n,):
        raise DimensionMismatch(
            "initial state length %d, expected %d" % (z.size, sys.n))

    Q = sys.Q
    B = sys.B_power
    R = sys.R
    gamma = sys.trace_gamma
    has_traces = gamma.shape[0] > 0

    t_mid = np.zeros(n_steps)
    supplied = np.zeros(n_steps)
    dissipated = np.zeros(n_steps)
    dH = np.zeros(n_steps)
    epp = np.zeros(n_steps)
    u_hist = np.zeros((n_steps, sys.n_ports))
    y_hist = np.zeros((n_steps, sys.n_ports))
    resistive_ports = sys.meta.get("resistive_ports", ())
    diss_split = {name: np.zeros(n_steps) for name, _ in resistive_ports}

    times, states, efforts, energies = [], [], [], []
    chi_hist, beta_hist = [], []

    def record(step, t, zs):
        times.append(t)
        states.append(zs.copy())
        u_now = None
        if input_schedule is not None and sys.n_ports:
            u_now = np.asarray(input_schedule(t), dtype=float)
        e = stepper.sample_effort(zs, u_now)
        efforts.append(e)
        energies.append(0.5 * float(zs @ (Q @ zs)))
        if has_traces:
            chi_hist.append(gamma @ zs)
            beta_hist.append(sys.trace_beta @ zs)

    record(0, 0.0, z)
    H_prev = energies[0]
    for k in range(n_steps):
        t = k * dt
        tm = t + 0.5 * dt
        u_mid = None
        if input_schedule is not None and sys.n_ports:
            u_mid = np.asarray(input_schedule(tm), dtype=float)
        if has_traces:
            chi_old = gamma @ z
        z_new, e_mid = stepper.step(z, u_mid)
        H_new = 0.5 * float(z_new @ (Q @ z_new))
        t_mid[k] = tm
        dH[k] = H_new - H_prev
        dissipated[k] = float(e_mid @ (R @ e_mid))
        for name, R_part in resistive_ports:
            diss_split[name][k] = float(e_mid @ (R_part @ e_mid))
        if u_mid is not None:
            y_mid = B.T @ e_mid
            supplied[k] = float(u_mid @ y_mid)
            u_hist[k] = u_mid
            y_hist[k] = y_mid
        elif sys.n_ports:
            y_hist[k] = B.T @ e_mid
        if has_traces:
            chi_new = gamma @ z_new
            beta_mid = sys.trace_beta @ (0.5 * (z + z_new))
            epp[k] = float(beta_mid @ (chi_new - chi_old)) / dt
        z = z_new
        H_prev = H_new
        if (k + 1) % record_every == 0:
            record(k + 1, (k + 1) * dt, z)

    port_values = {"u": u_hist, "y": y_hist}
    if has_traces:
        port_values["chi"] = np.array(chi_hist)
        port_values["eps_beta"] = np.array(beta_hist)
    step_series = {"t_mid": t_mid, "supplied": supplied,
                   "dissipated": dissipated, "dH": dH,
                   "energy_port_power": epp}
    for name, series in diss_split.items():
        step_series["diss_" + name] = series
    return Trajectory(times=np.array(times), states=np.array(states),
                      efforts=np.array(efforts),
                      hamiltonian=np.array(energies),
                      port_values=port_values, step_series=step_series,
                      dt=dt, record_every=record_every)
