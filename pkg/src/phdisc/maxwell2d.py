"""Transverse-electric electromagnetic model on a staggered 2D grid.

States: out-of-plane electric displacement D (scalar, interior nodes under a
perfectly conducting boundary) and in-plane magnetic flux B on rotated edge
midpoints.  The classical form places the rotated differences in J; the
vector-potential form uses a scalar potential A with B = gradperp A and all
differentiation inside Q.  The low-frequency projection freezes the D flow,
turning the electric field into a Lagrange multiplier; with conductive
material this is the magnetic diffusion model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .discrete_ops import StaggeredGrid2D, sbp_operators_2d
from .errors import RankDeficientConstraint
from .numerics import spdiag, sym
from .phcore import BlockLayout, DescriptorPHSystem, weighted_adjoint


@dataclass(frozen=True)
class EmMaterial:
    eps0: float = 1.0
    mu0: float = 1.0
    sigma_c: object = 0.0      # conductivity: scalar or callable(x, y)
    q_ext: object = None       # optional external current schedule t -> amp

    def __post_init__(self):
        if self.eps0 <= 0.0 or self.mu0 <= 0.0:
            raise ValueError("permittivity and permeability must be positive")

    def sigma_nodes(self, grid, idx):
        if callable(self.sigma_c):
            X, Y = grid.node_coords()
            vals = np.asarray([self.sigma_c(x, y)
                               for x, y in zip(X[idx], Y[idx])], dtype=float)
        else:
            vals = np.full(idx.size, float(self.sigma_c))
        if np.any(vals < 0.0):
            raise ValueError("conductivity must be >= 0")
        return vals


def _common(grid2, mat):
    ops = sbp_operators_2d(grid2)
    interior = grid2.interior_node_indices()
    bdry = grid2.boundary_node_indices()
    Gp = ops.gradperp.forward
    Gp_i = Gp[:, interior].tocsr()
    M_ep = spdiag(ops.w_edges_perp)
    w_i = ops.w_nodes[interior]
    sigma = mat.sigma_nodes(grid2, interior)
    return ops, interior, bdry, Gp, Gp_i, M_ep, w_i, sigma


def _current_column(w_i, j_profile, grid2, interior):
    if j_profile is None:
        return None
    if callable(j_profile):
        X, Y = grid2.node_coords()
        j = np.asarray([j_profile(x, y)
                        for x, y in zip(X[interior], Y[interior])])
    else:
        j = np.asarray(j_profile, dtype=float)
    return -(w_i * j)


def build_te_sd(grid2, mat, j_profile=None, boundary_port=False):
    """Classical form: J couples D and B through the rotated-difference pair;
    Q is a pointwise material weight, R carries the conductivity on the D
    block.  Optional ports: a distributed current (mass-weighted profile) and
    a uniform tangential boundary field."""
    ops, interior, bdry, Gp, Gp_i, M_ep, w_i, sigma = _common(grid2, mat)
    ni = interior.size
    nep = ops.w_edges_perp.size
    layout = BlockLayout(("D", ni), ("B", nep))

    U = sp.bmat([[None, (Gp_i.T @ M_ep)],
                 [sp.csr_matrix((nep, ni)), None]], format="csr")
    J = (U - U.T).tocsr()
    M = sp.block_diag([spdiag(w_i), M_ep], format="csr")
    Q = sp.block_diag([spdiag(w_i / mat.eps0), M_ep * (1.0 / mat.mu0)],
                      format="csr")
    R = sp.block_diag([spdiag(w_i * sigma), sp.csr_matrix((nep, nep))],
                      format="csr")

    cols = []
    ports = []
    jcol = _current_column(w_i, j_profile, grid2, interior)
    if jcol is not None:
        col = np.zeros(layout.n)
        col[:ni] = jcol
        cols.append(col)
        ports.append("current")
    bprofile = np.ones(bdry.size)
    if boundary_port:
        col = np.zeros(layout.n)
        col[ni:] = -(M_ep @ (Gp[:, bdry] @ bprofile))
        cols.append(col)
        ports.append("boundary_E")
    B_power = (sp.csr_matrix(np.column_stack(cols)) if cols
               else sp.csr_matrix((layout.n, 0)))

    meta = {"grid": grid2, "material": mat, "ops": ops, "interior": interior,
            "boundary": bdry, "Gp_i": Gp_i, "lift_W": (Gp.T @ M_ep).tocsr(),
            "boundary_profile": bprofile, "te": True, "repr": "sd"}
    return DescriptorPHSystem(M=M, J=J, R=R, Q=Q, layout=layout,
                              B_power=B_power, port_names=tuple(ports),
                              name="maxwell_te_sd", meta=meta)


def build_te_sl(grid2, mat, j_profile=None):
    """Vector-potential form: scalar potential A at interior nodes, J is the
    mass-weighted canonical pair and Q carries the rotated-difference
    stiffness realizing the curl of (1/mu) gradperp A."""
    ops, interior, bdry, Gp, Gp_i, M_ep, w_i, sigma = _common(grid2, mat)
    ni = interior.size
    layout = BlockLayout(("D", ni), ("A", ni))
    W = spdiag(w_i)
    U = sp.bmat([[None, W], [sp.csr_matrix((ni, ni)), None]], format="csr")
    J = (U - U.T).tocsr()
    M = sp.block_diag([W, W], format="csr")
    K_perp = sym(Gp_i.T @ (M_ep * (1.0 / mat.mu0)) @ Gp_i)
    Q = sp.block_diag([spdiag(w_i / mat.eps0), K_perp], format="csr")
    R = sp.block_diag([spdiag(w_i * sigma), sp.csr_matrix((ni, ni))],
                      format="csr")

    cols = []
    ports = []
    jcol = _current_column(w_i, j_profile, grid2, interior)
    if jcol is not None:
        col = np.zeros(layout.n)
        col[:ni] = jcol
        cols.append(col)
        ports.append("current")
    B_power = (sp.csr_matrix(np.column_stack(cols)) if cols
               else sp.csr_matrix((layout.n, 0)))

    meta = {"grid": grid2, "material": mat, "ops": ops, "interior": interior,
            "boundary": bdry, "Gp_i": Gp_i, "K_perp": K_perp, "te": True,
            "repr": "sl"}
    return DescriptorPHSystem(M=M, J=J, R=R, Q=Q, layout=layout,
                              B_power=B_power, port_names=tuple(ports),
                              name="maxwell_te_sl", meta=meta)


def maxwell_transposition(grid2):
    """State map blkdiag(I, gradperp) from the potential form to the
    classical form, with its pairing-weighted adjoint."""
    mat = EmMaterial()
    sys_sd = build_te_sd(grid2, mat)
    sys_sl = build_te_sl(grid2, mat)
    ni = sys_sl.layout.size("D")
    G = sp.block_diag([sp.identity(ni), sys_sd.meta["Gp_i"]], format="csr")
    Gdag = weighted_adjoint(G, sys_sl.M, sys_sd.M)
    return G, Gdag


def lf_project(sys, repr=None):
    """Freeze the displacement flow: 0 = [ (J - R) e + B u ]_D, with the
    electric field acting as the multiplier.  Needs conductive material,
    otherwise the field is undetermined."""
    if not sys.meta.get("te"):
        raise ValueError("lf_project expects a TE system")
    sd = sys.layout.slc("D")
    R_D = sys.R[sd, sd]
    if R_D.nnz == 0 or np.max(np.abs(R_D.diagonal())) == 0.0:
        raise RankDeficientConstraint(
            "low-frequency projection needs sigma_c > 0 somewhere")
    name = sys.name.replace("te", "lf")
    out = sys.with_updates(constrained_blocks=("D",), name=name)
    out.meta = dict(sys.meta, lf=True)
    return out


def poynting_boundary_power(traj, sys):
    """Per-step boundary energy inflow recomputed from the boundary lift of
    the rotated-difference pair applied to midpoint (E, H) traces.

    Requires a classical-form trajectory recorded at every step.  The sign
    convention makes outgoing flux a negative contribution to dH/dt.
    """
    if sys.meta.get("repr") != "sd":
        raise ValueError("poynting accounting expects the classical form")
    if traj.record_every != 1:
        raise ValueError("need record_every=1 for midpoint reconstruction")
    n_steps = traj.n_steps
    series = np.zeros(n_steps)
    if "boundary_E" not in sys.port_names:
        return series
    iport = sys.port_names.index("boundary_E")
    bdry = sys.meta["boundary"]
    profile = sys.meta["boundary_profile"]
    lift_W = sys.meta["lift_W"]          # nodes x perp-edges, full grid
    sB = sys.layout.slc("B")
    Minv_diag = 1.0 / sys.M.diagonal()
    for k in range(n_steps):
        z_mid = 0.5 * (traj.states[k] + traj.states[k + 1])
        e_mid = Minv_diag * (sys.Q @ z_mid)
        H_mid = e_mid[sB]
        flux = (lift_W @ H_mid)[bdry]
        u_k = traj.port_values["u"][k, iport]
        series[k] = -float(u_k * (profile @ flux))
    return series
