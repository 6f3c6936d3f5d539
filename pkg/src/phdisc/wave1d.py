"""Wave-equation builders (1D and 2D scalar) in both descriptor forms,
their transposition pair, and the nonlocal nanorod constitutive solvers.

Two equivalent representations are assembled:

* ``sd``: states (strain, momentum); the difference operators sit in the
  interconnection J and the energy matrix is a pointwise weight.
* ``sl``: states (deflection, momentum); J is a bounded mass-weighted
  pair of identities and all differentiation lives inside Q.

The map G = blkdiag(D, I) together with its pairing-weighted adjoint
intertwines the two exactly at the matrix level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discrete_ops import (Grid1D, StaggeredGrid2D, assemble_kernel_matrix,
                           assemble_p1_mass, assemble_p1_stiffness,
                           apply_dirichlet, sbp_gradient_1d, sbp_operators_2d,
                           _lumped_weights_1d)
from .errors import DimensionMismatch
from .numerics import power_iteration, solve_linear, spdiag, sym
from .phcore import BlockLayout, DescriptorPHSystem, weighted_adjoint


@dataclass(frozen=True)
class WaveMaterial:
    rho: object = 1.0     # density: scalar, callable(x) or nodal array
    E: object = 1.0       # tension/modulus: scalar, callable(x) or array
    mu: float = 0.0       # nonlocality length squared; 0 = local

    def __post_init__(self):
        if self.mu < 0.0:
            raise ValueError("mu must be >= 0")

    def _eval(self, f, pts):
        if callable(f):
            vals = np.asarray([f(x) for x in pts], dtype=float)
        else:
            vals = np.asarray(f, dtype=float)
            if vals.ndim == 0:
                vals = np.full(pts.size, float(vals))
        if np.any(vals <= 0.0):
            raise ValueError("material fields must be positive")
        return vals

    def rho_nodes(self, grid):
        return self._eval(self.rho, grid.nodes)

    def E_nodes(self, grid):
        return self._eval(self.E, grid.nodes)

    def E_elems(self, grid):
        if callable(self.E):
            return self._eval(self.E, grid.midpoints)
        vals = np.asarray(self.E, dtype=float)
        if vals.ndim == 0:
            return np.full(grid.n_cells, float(vals))
        return 0.5 * (vals[:-1] + vals[1:])


def _require_local(mat):
    if mat.mu != 0.0:
        raise ValueError("wave builders require a local material (mu = 0)")


def build_wave_sd(grid, mat, bc="free"):
    """Strain/momentum form: M = blkdiag(h I, M_lump), J realized through the
    1D SBP pair, Q a pointwise weight so sigma = E eps and v = p / rho.

    bc='free' keeps all nodes and exposes applied boundary stresses as power
    ports; bc='fixed' eliminates the end momenta and exposes prescribed end
    velocities instead.
    """
    _require_local(mat)
    n = grid.n_cells
    h = grid.h
    pair = sbp_gradient_1d(grid)
    D = pair.forward
    w_nodal = _lumped_weights_1d(n, h)
    E_e = mat.E_elems(grid)
    rho_n = mat.rho_nodes(grid)

    if bc == "free":
        keep = np.arange(n + 1)
    elif bc == "fixed":
        keep = np.arange(1, n)
    else:
        raise ValueError("bc must be 'free' or 'fixed'")

    layout = BlockLayout(("strain", n), ("momentum", keep.size))
    hD = (h * D).tocsr()
    U = sp.bmat([[None, hD[:, keep]],
                 [sp.csr_matrix((keep.size, n)), None]], format="csr")
    J = (U - U.T).tocsr()
    M = sp.block_diag([spdiag(np.full(n, h)), spdiag(w_nodal[keep])],
                      format="csr")
    Q = sp.block_diag([spdiag(h * E_e), spdiag(w_nodal[keep] / rho_n[keep])],
                      format="csr")

    if bc == "free":
        # applied boundary stresses; collocated outputs are -v(a), v(b)
        B = sp.lil_matrix((layout.n, 2))
        B[n, 0] = -1.0
        B[layout.n - 1, 1] = 1.0
        ports = ("stress_a", "stress_b")
    else:
        # prescribed end velocities, harvested from the dropped J columns
        B = sp.lil_matrix((layout.n, 2))
        B[0, 0] = hD[0, 0]
        B[n - 1, 1] = hD[n - 1, n]
        ports = ("velocity_a", "velocity_b")

    meta = {"grid": grid, "material": mat, "bc": bc, "D": D, "E_elem": E_e,
            "keep_nodes": keep}
    return DescriptorPHSystem(M=M, J=J, R=sp.csr_matrix((layout.n, layout.n)),
                              Q=Q, layout=layout, B_power=B.tocsr(),
                              port_names=ports, name="wave1d_sd", meta=meta)


def build_wave_sl(grid, mat, bc="free", mass="lumped"):
    """Deflection/momentum form: J = mass-weighted canonical pair, Q carries
    the stiffness h D^T E D; Dirichlet/Neumann traces of the deflection are
    exposed as the boundary energy port.

    mass='consistent' replaces the lumped pairings by the tridiagonal P1
    masses (the stepper then solves the coupled block system)."""
    _require_local(mat)
    n = grid.n_cells
    h = grid.h
    pair = sbp_gradient_1d(grid)
    D = pair.forward
    w_nodal = _lumped_weights_1d(n, h)
    E_e = mat.E_elems(grid)
    rho_n = mat.rho_nodes(grid)

    K_E = (D.T @ spdiag(h * E_e) @ D).tocsr()

    if bc == "free":
        keep = np.arange(n + 1)
    elif bc == "fixed":
        keep = np.arange(1, n)
    else:
        raise ValueError("bc must be 'free' or 'fixed'")
    nk = keep.size
    layout = BlockLayout(("deflection", nk), ("momentum", nk))
    if mass == "lumped":
        Mw = spdiag(w_nodal[keep])
        M_rho = spdiag(w_nodal[keep] / rho_n[keep])
    elif mass == "consistent":
        Mw = sym(assemble_p1_mass(grid, 1.0)[np.ix_(keep, keep)])
        M_rho = sym(assemble_p1_mass(grid, 1.0 / rho_n)[np.ix_(keep, keep)])
    else:
        raise ValueError("mass must be 'lumped' or 'consistent'")
    U = sp.bmat([[None, Mw], [sp.csr_matrix((nk, nk)), None]], format="csr")
    J = (U - U.T).tocsr()
    M = sp.block_diag([Mw, Mw], format="csr")
    Q = sp.block_diag([K_E[np.ix_(keep, keep)], M_rho], format="csr")

    B = sp.lil_matrix((layout.n, 2))
    gamma = sp.lil_matrix((2, layout.n))
    beta = sp.lil_matrix((2, layout.n))
    if bc == "free":
        B[nk, 0] = -1.0
        B[2 * nk - 1, 1] = 1.0
        ports = ("stress_a", "stress_b")
        gamma[0, 0] = 1.0
        gamma[1, nk - 1] = 1.0
        beta[0, :nk] = -E_e[0] * D[0, :].toarray()
        beta[1, :nk] = E_e[-1] * D[n - 1, :].toarray()
    else:
        ports = ()
        B = sp.lil_matrix((layout.n, 0))

    meta = {"grid": grid, "material": mat, "bc": bc, "D": D, "E_elem": E_e,
            "K_E": K_E, "keep_nodes": keep}
    return DescriptorPHSystem(M=M, J=J, R=sp.csr_matrix((layout.n, layout.n)),
                              Q=Q, layout=layout, B_power=B.tocsr(),
                              trace_gamma=gamma.tocsr(), trace_beta=beta.tocsr(),
                              trace_names=("w_a", "w_b"),
                              port_names=ports, name="wave1d_sl", meta=meta)


def build_wave_transposition(grid, bc="free"):
    """State map G = blkdiag(D, I) from the deflection form to the strain
    form, and its pairing-weighted adjoint."""
    sys_sd = build_wave_sd(grid, WaveMaterial(), bc=bc)
    sys_sl = build_wave_sl(grid, WaveMaterial(), bc=bc)
    keep = sys_sd.meta["keep_nodes"]
    D = sys_sd.meta["D"]
    nk = keep.size
    G = sp.block_diag([D[:, keep], sp.identity(nk)], format="csr")
    if G.shape != (sys_sd.n, sys_sl.n):
        raise DimensionMismatch("transposition map shape mismatch")
    Gdag = weighted_adjoint(G, sys_sl.M, sys_sd.M)
    return G, Gdag


def fundamental_frequency(sys_sd, seed=0):
    """Lowest angular frequency of a strain/momentum wave system, via inverse
    power iteration on the generalized eigenproblem K p = omega^2 M p."""
    lay = sys_sd.layout
    se = lay.slc("strain")
    sm = lay.slc("momentum")
    J_ep = sys_sd.J[se, sm]
    M_eps = sys_sd.M[se, se].diagonal()
    Q_eps = sys_sd.Q[se, se].diagonal()
    M_p = sys_sd.M[sm, sm].diagonal()
    Q_p = sys_sd.Q[sm, sm].diagonal()
    # second-order form: M_p p'' = -K_hat (M_p^{-1} Q_p) p
    K_hat = (J_ep.T @ spdiag(Q_eps / M_eps ** 2) @ J_ep).tocsc()
    W = Q_p / M_p
    lu = spla.splu(K_hat)

    def matvec(v):
        return lu.solve(M_p * v) / W

    lam, _ = power_iteration(matvec, M_p.size, seed=seed)
    return 1.0 / np.sqrt(lam)


# ---------------------------------------------------------------------------
# nonlocal nanorod constitutive solvers

def _p0_to_p1_rhs(grid, E_e, eps_e):
    h = grid.h
    n = grid.n_nodes
    rhs = np.zeros(n)
    contrib = 0.5 * h * E_e * eps_e
    rhs[:-1] += contrib
    rhs[1:] += contrib
    return rhs


def solve_sigma_implicit(grid, mat, eps, sigma_bc=(0.0, 0.0)):
    """Sparse constitutive solve (M + K_mu) sigma = K_E eps on P1 nodes.

    ``eps`` may be a nodal (P1) or element (P0) field; ``sigma_bc`` gives the
    Dirichlet stress values at the two ends, or None for the natural problem.
    """
    if mat.mu <= 0.0:
        raise ValueError("implicit constitutive solve needs mu > 0")
    eps = np.asarray(eps, dtype=float)
    M = assemble_p1_mass(grid, 1.0)
    K_mu = assemble_p1_stiffness(grid, mat.mu)
    if eps.size == grid.n_nodes:
        rhs = assemble_p1_mass(grid, mat.E_nodes(grid)) @ eps
    elif eps.size == grid.n_cells:
        rhs = _p0_to_p1_rhs(grid, mat.E_elems(grid), eps)
    else:
        raise DimensionMismatch("eps must be a nodal or element field")
    A = (M + K_mu).tocsr()
    if sigma_bc is not None:
        A, shift = apply_dirichlet(A, grid, np.asarray(sigma_bc, dtype=float))
        rhs = rhs.copy()
        rhs[[0, grid.n_cells]] = 0.0
        rhs = rhs + shift
    return solve_linear(A, rhs)


def solve_sigma_explicit(grid, mat, eps):
    """Dense constitutive solve M sigma = K_alpha eps with the exponential
    kernel matrix; ``eps`` is a nodal field."""
    if mat.mu <= 0.0:
        raise ValueError("explicit constitutive solve needs mu > 0")
    eps = np.asarray(eps, dtype=float)
    if eps.size != grid.n_nodes:
        raise DimensionMismatch("explicit solve expects a nodal field")
    K_alpha = assemble_kernel_matrix(grid, mat.mu, mat.E)
    M = assemble_p1_mass(grid, 1.0)
    return solve_linear(M.tocsr(), K_alpha @ eps)


# ---------------------------------------------------------------------------
# 2D scalar wave

def _scalar(v, what):
    if callable(v) or np.ndim(v) > 0:
        raise ValueError("2D wave expects scalar %s" % what)
    return float(v)


def build_wave_2d(grid2, mat, repr="sd"):
    """Clamped scalar wave on a staggered 2D grid, in either representation.

    sd states: (strain on edges, momentum at interior nodes);
    sl states: (deflection, momentum) at interior nodes.
    """
    E = _scalar(mat.E, "modulus")
    rho = _scalar(mat.rho, "density")
    _require_local(mat)
    ops = sbp_operators_2d(grid2)
    interior = grid2.interior_node_indices()
    G = ops.grad.forward[:, interior].tocsr()
    w_int = ops.w_nodes[interior]
    M_eg = spdiag(ops.w_edges_grad)
    ne = ops.w_edges_grad.size
    ni = interior.size

    if repr == "sd":
        layout = BlockLayout(("strain", ne), ("momentum", ni))
        U = sp.bmat([[None, (M_eg @ G)],
                     [sp.csr_matrix((ni, ne)), None]], format="csr")
        J = (U - U.T).tocsr()
        M = sp.block_diag([M_eg, spdiag(w_int)], format="csr")
        Q = sp.block_diag([E * M_eg, spdiag(w_int / rho)], format="csr")
        name = "wave2d_sd"
    elif repr == "sl":
        layout = BlockLayout(("deflection", ni), ("momentum", ni))
        Mw = spdiag(w_int)
        U = sp.bmat([[None, Mw], [sp.csr_matrix((ni, ni)), None]], format="csr")
        J = (U - U.T).tocsr()
        M = sp.block_diag([Mw, Mw], format="csr")
        K2 = (G.T @ (E * M_eg) @ G).tocsr()
        Q = sp.block_diag([K2, spdiag(w_int / rho)], format="csr")
        name = "wave2d_sl"
    else:
        raise ValueError("repr must be 'sd' or 'sl'")

    meta = {"grid": grid2, "material": mat, "ops": ops, "interior": interior,
            "G": G}
    return DescriptorPHSystem(M=M, J=J, R=sp.csr_matrix((layout.n, layout.n)),
                              Q=Q, layout=layout, name=name, meta=meta)


def build_wave_2d_transposition(grid2):
    """State map blkdiag(grad, I) for the clamped 2D wave pair."""
    mat = WaveMaterial()
    sys_sd = build_wave_2d(grid2, mat, "sd")
    sys_sl = build_wave_2d(grid2, mat, "sl")
    G2 = sp.block_diag([sys_sd.meta["G"],
                        sp.identity(sys_sl.layout.size("momentum"))],
                       format="csr")
    Gdag = weighted_adjoint(G2, sys_sl.M, sys_sd.M)
    return G2, Gdag
