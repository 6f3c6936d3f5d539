"""Energy-port interconnection builders.

Couplings enter through the Hamiltonian: the composite Q gains the (constant)
Hessian of the coupling potential on the trace variables, so the closed
coupled system conserves the total energy exactly under the midpoint rule.
Only quadratic potentials are supported; the two built-in couplings are a
boundary spring between two strings and a distributed bilinear coupling of a
string with a one-dimensional electromagnetic line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NonQuadraticPotential, TraceUnavailable
from .numerics import spdiag, sym
from .phcore import BlockLayout, DescriptorPHSystem
from .wave1d import WaveMaterial, _lumped_weights_1d, sbp_gradient_1d


@dataclass(frozen=True)
class SeparabilityTag:
    is_separable: bool
    cross_block_nnz: int

    def __post_init__(self):
        assert self.is_separable == (self.cross_block_nnz == 0)


@dataclass(frozen=True)
class CouplingSpec:
    kind: str                      # spring | piezo | custom-potential
    k: float = 0.0                 # spring stiffness
    gamma: float = 0.0             # boundary damping
    q: object = 0.0                # distributed coupling field (piezo)
    potential_gradient: object = None

    def __post_init__(self):
        if self.kind == "spring" and self.k <= 0.0:
            raise ValueError("spring coupling needs k > 0")
        if self.gamma < 0.0:
            raise ValueError("gamma must be >= 0")


def _count_cross_nnz(A, dofs_a, dofs_b):
    A = sp.csr_matrix(A).copy()
    A.eliminate_zeros()
    block = A[np.ix_(dofs_a, dofs_b)]
    block.eliminate_zeros()
    return int(block.nnz)


def separability(sys):
    """Cross-subsystem coupling count in the energy and resistive matrices."""
    dofs_a, dofs_b = sys.meta["subsystems"]
    nnz = (_count_cross_nnz(sys.Q, dofs_a, dofs_b)
           + _count_cross_nnz(sys.R, dofs_a, dofs_b))
    return SeparabilityTag(nnz == 0, nnz)


def _stack(sys_a, sys_b, name):
    blocks_a = [("a_" + nm, sz) for nm, sz in sys_a.layout]
    blocks_b = [("b_" + nm, sz) for nm, sz in sys_b.layout]
    layout = BlockLayout(*(blocks_a + blocks_b))
    M = sp.block_diag([sys_a.M, sys_b.M], format="csr")
    J = sp.block_diag([sys_a.J, sys_b.J], format="csr")
    R = sp.block_diag([sys_a.R, sys_b.R], format="csr")
    Q = sp.block_diag([sys_a.Q, sys_b.Q], format="csr")
    na, nb = sys_a.n, sys_b.n
    gamma = sp.bmat([[sys_a.trace_gamma, sp.csr_matrix((sys_a.trace_gamma.shape[0], nb))],
                     [sp.csr_matrix((sys_b.trace_gamma.shape[0], na)),
                      sys_b.trace_gamma]], format="csr")
    beta = sp.bmat([[sys_a.trace_beta, sp.csr_matrix((sys_a.trace_beta.shape[0], nb))],
                    [sp.csr_matrix((sys_b.trace_beta.shape[0], na)),
                     sys_b.trace_beta]], format="csr")
    meta = {"subsystems": (np.arange(na), na + np.arange(nb)),
            "sub_a": sys_a, "sub_b": sys_b}
    return DescriptorPHSystem(M=M, J=J, R=R, Q=Q, layout=layout,
                              trace_gamma=gamma, trace_beta=beta,
                              trace_names=tuple("a_" + t for t in sys_a.trace_names)
                              + tuple("b_" + t for t in sys_b.trace_names),
                              name=name, meta=meta)


def couple_spring(sys_a, sys_b, k, gamma=0.0):
    """Join the right end of one string to the left end of another through a
    spring of stiffness k acting on the displacement traces; the composite
    energy gains k/2 (w_a(b) - w_b(a))^2 as a rank-one block of Q.

    gamma > 0 adds dampers on the two coupled end velocities.
    """
    for s in (sys_a, sys_b):
        if s.trace_gamma.shape[0] < 2 or "deflection" not in s.layout.names:
            raise TraceUnavailable(
                "spring coupling needs deflection-form strings with traces")
    out = _stack(sys_a, sys_b, "spring_coupling")
    na = sys_a.n
    c = sp.hstack([sys_a.trace_gamma[1], -sys_b.trace_gamma[0]]).tocsr()
    if k != 0.0:
        out.Q = (out.Q + k * (c.T @ c)).tocsr()
        out.meta["coupling"] = CouplingSpec("spring", k=k, gamma=gamma)
    if gamma > 0.0:
        # damper forces on the coupled end velocities
        ia = sys_a.layout.slc("momentum").stop - 1
        ib = na + sys_b.layout.slc("momentum").start
        d = np.zeros(out.n)
        d[[ia, ib]] = gamma
        out.R = (out.R + spdiag(d)).tocsr()
    out.meta["separability"] = separability(out)
    return out


def couple_potential(sys_a, sys_b, grad_potential, hessian_bound=1.0):
    """Generic quadratic coupling through the stacked trace variables.

    ``grad_potential`` maps the stacked traces chi to the potential gradient;
    it must be linear (checked by probing), with a symmetric Hessian.  Q is
    augmented by that constant Hessian lifted through the trace maps.
    """
    out = _stack(sys_a, sys_b, "potential_coupling")
    Gamma = out.trace_gamma
    n_chi = Gamma.shape[0]
    if n_chi == 0:
        raise TraceUnavailable("potential coupling needs trace maps")

    def g(chi):
        return np.atleast_1d(np.asarray(grad_potential(chi), dtype=float))

    g0 = g(np.zeros(n_chi))
    scale = max(1.0, abs(hessian_bound))
    if np.linalg.norm(g0) > 1e-10 * scale:
        raise NonQuadraticPotential("potential gradient must vanish at zero")
    W = np.column_stack([g(np.eye(n_chi)[:, i]) - g0 for i in range(n_chi)])
    rng = np.random.default_rng(11)
    for _ in range(5):
        chi = rng.standard_normal(n_chi)
        lin = W @ chi + g0
        if np.linalg.norm(g(chi) - lin) > 1e-8 * scale * (1 + np.linalg.norm(lin)):
            raise NonQuadraticPotential("potential gradient is not affine")
    if np.max(np.abs(W - W.T)) > 1e-10 * max(1.0, np.max(np.abs(W))):
        raise NonQuadraticPotential("potential Hessian is not symmetric")
    Ws = sp.csr_matrix(0.5 * (W + W.T))
    out.Q = (out.Q + Gamma.T @ Ws @ Gamma).tocsr()
    out.meta["separability"] = separability(out)
    return out


def couple_piezo(grid, wave_mat, em_mat, q_field):
    """Distributed bilinear coupling of a string and a 1D electromagnetic
    line on a shared grid: the composite energy carries the cross term
    int q D eps, so that sigma = k eps + q D and E = D/eps0 + q eps.

    States: (strain on elements, momentum at nodes, D at nodes, B on
    elements), all with free boundaries.
    """
    n = grid.n_cells
    h = grid.h
    pair = sbp_gradient_1d(grid)
    D = pair.forward
    w_nodal = _lumped_weights_1d(n, h)
    k_e = wave_mat.E_elems(grid)
    rho_n = wave_mat.rho_nodes(grid)
    if callable(q_field):
        q_e = np.asarray([q_field(x) for x in grid.midpoints], dtype=float)
    else:
        q_e = np.asarray(q_field, dtype=float)
        if q_e.ndim == 0:
            q_e = np.full(n, float(q_e))
    if np.any(q_e < 0.0):
        raise ValueError("coupling field must be >= 0")

    layout = BlockLayout(("strain", n), ("momentum", n + 1),
                         ("D", n + 1), ("B", n))
    hD = (h * D).tocsr()
    Z = sp.csr_matrix
    U = sp.bmat([
        [None, hD, None, None],
        [Z((n + 1, n)), None, None, None],
        [None, None, None, -hD.T],
        [Z((n, n)), Z((n, n + 1)), Z((n, n + 1)), None]], format="csr")
    J = (U - U.T).tocsr()
    M = sp.block_diag([spdiag(np.full(n, h)), spdiag(w_nodal),
                       spdiag(w_nodal), spdiag(np.full(n, h))], format="csr")

    # cross pairing int q D eps with P0 strain and P1 field
    i = np.arange(n)
    X = sp.csr_matrix((np.repeat(0.5 * h * q_e, 2),
                       (np.repeat(i, 2),
                        np.stack([i, i + 1], axis=1).ravel())),
                      shape=(n, n + 1))
    Zb = sp.csr_matrix
    Q = sym(sp.bmat([
        [spdiag(h * k_e), None, X, None],
        [None, spdiag(w_nodal / rho_n), None, None],
        [X.T, None, spdiag(w_nodal / em_mat.eps0), None],
        [Zb((n, n)), Zb((n, n + 1)), Zb((n, n + 1)),
         spdiag(np.full(n, h / em_mat.mu0))]], format="csr"))

    wave_dofs = np.arange(2 * n + 1)
    em_dofs = 2 * n + 1 + np.arange(2 * n + 1)
    meta = {"grid": grid, "wave_material": wave_mat, "em_material": em_mat,
            "q_elem": q_e, "subsystems": (wave_dofs, em_dofs),
            "node_avg": sp.csr_matrix(
                (np.repeat(0.5, 2 * n),
                 (np.repeat(i, 2), np.stack([i, i + 1], axis=1).ravel())),
                shape=(n, n + 1))}
    out = DescriptorPHSystem(M=M, J=J, R=sp.csr_matrix((layout.n, layout.n)),
                             Q=Q, layout=layout, name="piezo", meta=meta)
    out.meta["coupling"] = CouplingSpec("piezo", k=1.0, q=q_e)
    out.meta["separability"] = separability(out)
    return out
