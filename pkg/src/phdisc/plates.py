"""Thick- and thin-plate builders in both representations, the thin-plate
constraint reduction, and the commuting-diagram verification.

Thick plate states (classical form): heave momentum p_w (scalar nodes),
curvature tensor (cells, 3 components), rotation momentum p_phi and shear
deformation (both nodal 2-vectors, co-located so the +/-I couplings are exact
mass-weighted identities).  The thin-plate model freezes the p_phi and shear
flows; rotation rate and shear force become per-step multipliers.  The
potential form uses (w, p_w, phi, p_phi) with the full elastic operator in Q.

Co-locating shear with the rotation blocks keeps the constraint rows square
and invertible, and makes the reduced thin-plate operator the exact matrix
composition of symmetric gradient and averaged nodal gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discrete_ops import StaggeredGrid2D, sbp_operators_2d
from .errors import DimensionMismatch
from .numerics import spdiag, sym
from .phcore import (BlockLayout, DescriptorPHSystem, TranspositionReport,
                     transposition_check, weighted_adjoint)

TENSOR_XY_WEIGHT = np.diag([1.0, 1.0, 2.0])


@dataclass(frozen=True)
class PlateMaterial:
    rho: float          # surface density
    h: float            # thickness
    k: float            # shear correction factor
    G: float            # shear modulus
    Dtensor: np.ndarray  # 3x3 bending rigidity on (xx, yy, xy) components

    def __post_init__(self):
        if min(self.rho, self.h, self.k, self.G) <= 0.0:
            raise ValueError("plate parameters must be positive")
        D3 = np.asarray(self.Dtensor, dtype=float)
        if D3.shape != (3, 3):
            raise DimensionMismatch("Dtensor must be 3x3")
        WD = TENSOR_XY_WEIGHT @ D3
        if np.max(np.abs(WD - WD.T)) > 1e-12 * np.max(np.abs(WD)):
            raise ValueError("Dtensor is not symmetric in the tensor pairing")
        if np.min(np.linalg.eigvalsh(0.5 * (WD + WD.T))) <= 0.0:
            raise ValueError("Dtensor must be positive definite")

    @classmethod
    def isotropic(cls, rho=1.0, h=0.1, k=5.0 / 6.0, G=1.0, E=1.0, nu=0.3):
        D = E * h ** 3 / (12.0 * (1.0 - nu ** 2))
        D3 = D * np.array([[1.0, nu, 0.0],
                           [nu, 1.0, 0.0],
                           [0.0, 0.0, 1.0 - nu]])
        return cls(rho=rho, h=h, k=k, G=G, Dtensor=D3)

    @property
    def kGh(self):
        return self.k * self.G * self.h


def _plate_pieces(grid2, mat, bc):
    ops = sbp_operators_2d(grid2)
    nn = grid2.n_nodes
    if bc == "clamped":
        nodes = grid2.interior_node_indices()
    elif bc == "free":
        nodes = np.arange(nn)
    else:
        raise ValueError("bc must be 'clamped' or 'free'")
    vec = np.concatenate([nodes, nodes + nn])
    Gnv = ops.nodal_gradient.forward[vec][:, nodes].tocsr()
    SG = ops.symgrad.forward[:, vec].tocsr()
    w_s = ops.w_nodes[nodes]
    w_v = np.concatenate([w_s, w_s])
    WD = TENSOR_XY_WEIGHT @ np.asarray(mat.Dtensor, dtype=float)
    nc = grid2.n_cells
    Q_bend = sym(grid2.hx * grid2.hy * sp.kron(WD, sp.identity(nc)))
    M_ct = spdiag(np.concatenate([np.full(nc, grid2.hx * grid2.hy)] * 2
                                 + [np.full(nc, 2.0 * grid2.hx * grid2.hy)]))
    return ops, nodes, vec, Gnv, SG, w_s, w_v, Q_bend, M_ct


def _boundary_load_ports(grid2, ops, nodes, layout, row_block, comp=0):
    """Mass-weighted boundary load column and its matching displacement
    trace row (free plates only)."""
    nn = grid2.n_nodes
    bdry = grid2.boundary_node_indices()
    w = ops.w_nodes
    col = np.zeros(layout.n)
    s = layout.slc(row_block)
    base = s.start + comp * nodes.size
    pos = np.searchsorted(nodes, bdry)
    col[base + pos] = w[bdry]
    return col, base + pos, w[bdry]


def build_rm_sd(grid2, mat, bc="clamped", load_ports=False):
    """Thick plate, classical form: four-block skew interconnection built
    from the (div, symgrad, tensdiv, nodal grad) pairs plus exact
    mass-weighted +/-I couplings; Q is the pointwise material weight."""
    ops, nodes, vec, Gnv, SG, w_s, w_v, Q_bend, M_ct = _plate_pieces(
        grid2, mat, bc)
    ni = nodes.size
    nv = 2 * ni
    nct = 3 * grid2.n_cells
    layout = BlockLayout(("p_w", ni), ("curvature", nct),
                         ("p_phi", nv), ("shear", nv))
    W_s = spdiag(w_s)
    M_nv = spdiag(w_v)

    Z = sp.csr_matrix
    U = sp.bmat([
        [None, None, None, -(M_nv @ Gnv).T],
        [None, None, (M_ct @ SG), None],
        [None, None, None, M_nv],
        [Z((nv, ni)), Z((nv, nct)), Z((nv, nv)), None]], format="csr")
    J = (U - U.T).tocsr()
    M = sp.block_diag([W_s, M_ct, M_nv, M_nv], format="csr")
    rh = mat.rho * mat.h
    Q = sp.block_diag([W_s * (1.0 / rh), Q_bend,
                       M_nv * (12.0 / (mat.rho * mat.h ** 3)),
                       M_nv * mat.kGh], format="csr")

    cols, ports = [], []
    if load_ports:
        if bc != "free":
            raise ValueError("load ports need the free plate")
        for block, comp, name in (("p_w", 0, "force_w"),
                                  ("p_phi", 0, "moment_x")):
            col, _, _ = _boundary_load_ports(grid2, ops, nodes, layout,
                                             block, comp)
            cols.append(col)
            ports.append(name)
    B_power = (sp.csr_matrix(np.column_stack(cols)) if cols
               else sp.csr_matrix((layout.n, 0)))
    meta = {"grid": grid2, "material": mat, "bc": bc, "ops": ops,
            "nodes": nodes, "Gnv": Gnv, "SG": SG, "Q_bend": Q_bend,
            "M_ct": M_ct}
    return DescriptorPHSystem(M=M, J=J, R=sp.csr_matrix((layout.n, layout.n)),
                              Q=Q, layout=layout, B_power=B_power,
                              port_names=tuple(ports), name="rm_sd", meta=meta)


def build_rm_sl(grid2, mat, bc="clamped", load_ports=False):
    """Thick plate, potential form: canonical mass-weighted J; Q assembles
    the full elastic operator (shear + bending) symmetrically from the
    adjoint-by-construction difference operators."""
    ops, nodes, vec, Gnv, SG, w_s, w_v, Q_bend, M_ct = _plate_pieces(
        grid2, mat, bc)
    ni = nodes.size
    nv = 2 * ni
    layout = BlockLayout(("w", ni), ("p_w", ni), ("phi", nv), ("p_phi", nv))
    W_s = spdiag(w_s)
    M_nv = spdiag(w_v)
    kGhM = M_nv * mat.kGh

    Z = sp.csr_matrix
    U = sp.bmat([
        [None, W_s, None, None],
        [Z((ni, ni)), None, None, None],
        [None, None, None, M_nv],
        [Z((nv, ni)), Z((nv, ni)), Z((nv, nv)), None]], format="csr")
    J = (U - U.T).tocsr()
    M = sp.block_diag([W_s, W_s, M_nv, M_nv], format="csr")

    Q_ww = (Gnv.T @ kGhM @ Gnv).tocsr()
    Q_wphi = (-(Gnv.T @ kGhM)).tocsr()
    Q_phiphi = (kGhM + SG.T @ Q_bend @ SG).tocsr()
    rh = mat.rho * mat.h
    Z_si = sp.csr_matrix((ni, ni))
    Z_sv = sp.csr_matrix((ni, nv))
    Q = sym(sp.bmat([
        [Q_ww, Z_si, Q_wphi, Z_sv],
        [Z_si, W_s * (1.0 / rh), Z_sv, Z_sv],
        [Q_wphi.T, Z_sv.T, Q_phiphi, sp.csr_matrix((nv, nv))],
        [Z_sv.T, Z_sv.T, sp.csr_matrix((nv, nv)),
         M_nv * (12.0 / (mat.rho * mat.h ** 3))]], format="csr"))

    cols, ports = [], []
    gamma_rows, beta_rows, tr_names = [], [], []
    if load_ports:
        if bc != "free":
            raise ValueError("load ports need the free plate")
        for block, comp, name, disp in (("p_w", 0, "force_w", "w"),
                                        ("p_phi", 0, "moment_x", "phi")):
            col, pos, wts = _boundary_load_ports(grid2, ops, nodes, layout,
                                                 block, comp)
            cols.append(col)
            ports.append(name)
            # collocated displacement trace: same weighting on the
            # displacement block
            row = np.zeros(layout.n)
            s = layout.slc(disp)
            row[s.start + comp * nodes.size
                + (pos - layout.slc(block).start - comp * nodes.size)] = wts
            gamma_rows.append(row)
            brow = np.zeros(layout.n)
            beta_rows.append(brow)
            tr_names.append("chi_" + name)
    gamma = (sp.csr_matrix(np.vstack(gamma_rows)) if gamma_rows
             else sp.csr_matrix((0, layout.n)))
    beta = (sp.csr_matrix(np.vstack(beta_rows)) if beta_rows
            else sp.csr_matrix((0, layout.n)))
    B_power = (sp.csr_matrix(np.column_stack(cols)) if cols
               else sp.csr_matrix((layout.n, 0)))
    meta = {"grid": grid2, "material": mat, "bc": bc, "ops": ops,
            "nodes": nodes, "Gnv": Gnv, "SG": SG, "Q_bend": Q_bend,
            "M_ct": M_ct}
    return DescriptorPHSystem(M=M, J=J, R=sp.csr_matrix((layout.n, layout.n)),
                              Q=Q, layout=layout, B_power=B_power,
                              trace_gamma=gamma, trace_beta=beta,
                              trace_names=tuple(tr_names),
                              port_names=tuple(ports), name="rm_sl", meta=meta)


def build_rm_transposition(grid2, mat, bc="clamped"):
    """Block map (w, p_w, phi, p_phi) -> (p_w, curvature, p_phi, shear) and
    its pairing-weighted adjoint."""
    sys_sd = build_rm_sd(grid2, mat, bc=bc)
    sys_sl = build_rm_sl(grid2, mat, bc=bc)
    Gnv = sys_sd.meta["Gnv"]
    SG = sys_sd.meta["SG"]
    ni = sys_sl.layout.size("w")
    nv = 2 * ni
    nct = 3 * grid2.n_cells
    I_s = sp.identity(ni, format="csr")
    I_v = sp.identity(nv, format="csr")
    Z = sp.csr_matrix
    G = sp.bmat([
        [Z((ni, ni)), I_s, Z((ni, nv)), Z((ni, nv))],
        [Z((nct, ni)), None, SG, None],
        [None, None, None, I_v],
        [Gnv, None, -I_v, None]], format="csr")
    Gdag = weighted_adjoint(G, sys_sl.M, sys_sd.M)
    return G, Gdag, sys_sd, sys_sl


# ---------------------------------------------------------------------------
# thin plate

def build_kl_sd(grid2, mat):
    """Thin plate, classical form: the thick-plate system with the rotation
    momentum and shear flows frozen; their efforts (rotation rate, shear
    force) are solved per step as multipliers of the saddle stepper."""
    sys = build_rm_sd(grid2, mat, bc="clamped")
    mask = sys.layout.mask(("p_phi", "shear"))
    C = sp.identity(sys.n, format="csr")[np.flatnonzero(mask)]
    out = sys.with_updates(constrained_blocks=("p_phi", "shear"), C=C,
                           name="kl_sd")
    out.meta = dict(sys.meta)
    return out


def _reduced_kl_blocks(kl_sd):
    """Canonical reduced two-block form of the constrained thin plate."""
    lay = kl_sd.layout
    sp_w = lay.slc("p_w")
    sc = lay.slc("curvature")
    C_comp = (kl_sd.meta["SG"] @ kl_sd.meta["Gnv"]).tocsr()
    M_ct = kl_sd.meta["M_ct"]
    M_red = sp.block_diag([kl_sd.M[sp_w, sp_w], kl_sd.M[sc, sc]],
                          format="csr")
    Q_red = sp.block_diag([kl_sd.Q[sp_w, sp_w], kl_sd.Q[sc, sc]],
                          format="csr")
    ni = lay.size("p_w")
    U = sp.bmat([[None, -(M_ct @ C_comp).T],
                 [sp.csr_matrix((3 * kl_sd.meta["grid"].n_cells, ni)), None]],
                format="csr")
    J_red = (U - U.T).tocsr()
    layout = BlockLayout(("p_w", ni), ("curvature", 3 * kl_sd.meta["grid"].n_cells))
    return DescriptorPHSystem(M=M_red, J=J_red,
                              R=sp.csr_matrix((layout.n, layout.n)),
                              Q=Q_red, layout=layout, name="kl_sd_reduced",
                              meta=dict(kl_sd.meta, C_comp=C_comp))


class _KlSlDaeStepper:
    """Midpoint stepper for the thin-plate potential form written with the
    singular left-hand map blkdiag(I, I, grad, 0): the retained (w, p_w)
    update is solved jointly with the two multiplier blocks."""

    def __init__(self, sys, dt):
        meta = sys.meta
        ni = sys.layout.size("w")
        W = spdiag(meta["w_scalar"])
        M_nv = spdiag(meta["w_vector"])
        Gnv = meta["Gnv"]
        K = sys.Q[sys.layout.slc("w"), sys.layout.slc("w")]
        Wp = sys.Q[sys.layout.slc("p_w"), sys.layout.slc("p_w")]
        nv = 2 * ni
        Z = sp.csr_matrix
        rows = [
            # flow w:  M w1 - dt M ep = M w0
            [W, None, None, -dt * W, None, None],
            # flow p:  M p1 + dt M ew = M p0
            [None, W, dt * W, None, None, None],
            # effort w: -(K/2) w1 + M ew = (K/2) w0
            [-0.5 * K, None, W, None, None, None],
            # effort p: -(Wp/2) p1 + M ep = (Wp/2) p0
            [None, -0.5 * Wp, None, W, None, None],
            # multiplier of the frozen rotation block
            [None, None, None, None, M_nv, None],
            # rotation-rate multiplier: Gnv (w1 - w0) = dt lam
            [M_nv @ Gnv, Z((nv, ni)), Z((nv, ni)), Z((nv, ni)), Z((nv, nv)),
             -dt * M_nv]]
        self._lu = spla.splu(sp.bmat(rows, format="csc"))
        self._mats = (W, K, Wp, M_nv, Gnv, ni, nv, dt)
        self.sys = sys

    def step(self, z, u_mid=None):
        W, K, Wp, M_nv, Gnv, ni, nv, dt = self._mats
        w0, p0 = z[:ni], z[ni:]
        rhs = np.concatenate([W @ w0, W @ p0, 0.5 * (K @ w0),
                              0.5 * (Wp @ p0), np.zeros(nv),
                              M_nv @ (Gnv @ w0)])
        x = self._lu.solve(rhs)
        z1 = x[:2 * ni]
        e_mid = x[2 * ni:4 * ni]
        self.last_multipliers = (x[4 * ni:4 * ni + nv], x[4 * ni + nv:])
        return z1, e_mid

    def sample_effort(self, z, u=None):
        return (1.0 / self.sys.M.diagonal()) * (self.sys.Q @ z)


def build_kl_sl(grid2, mat, reduced=False):
    """Thin plate, potential form: states (w, p_w) with the fourth-order
    bending operator composed from symgrad o nodal-grad inside Q.

    With ``reduced`` False the system integrates as the singular-left-map DAE
    (multipliers solved each step); with True it integrates as the plain
    reduced system.  Both paths share the same matrices.
    """
    ops, nodes, vec, Gnv, SG, w_s, w_v, Q_bend, M_ct = _plate_pieces(
        grid2, mat, "clamped")
    ni = nodes.size
    C_comp = (SG @ Gnv).tocsr()
    K_bend = sym(C_comp.T @ Q_bend @ C_comp)
    layout = BlockLayout(("w", ni), ("p_w", ni))
    W = spdiag(w_s)
    U = sp.bmat([[None, W], [sp.csr_matrix((ni, ni)), None]], format="csr")
    J = (U - U.T).tocsr()
    M = sp.block_diag([W, W], format="csr")
    rh = mat.rho * mat.h
    Q = sp.block_diag([K_bend, W * (1.0 / rh)], format="csr")
    meta = {"grid": grid2, "material": mat, "ops": ops, "nodes": nodes,
            "Gnv": Gnv, "SG": SG, "C_comp": C_comp, "Q_bend": Q_bend,
            "M_ct": M_ct, "w_scalar": w_s, "w_vector": w_v}
    if not reduced:
        meta["stepper_factory"] = _KlSlDaeStepper
    return DescriptorPHSystem(M=M, J=J, R=sp.csr_matrix((layout.n, layout.n)),
                              Q=Q, layout=layout,
                              name="kl_sl" if not reduced else "kl_sl_reduced",
                              meta=meta)


def build_kl_transposition(grid2, mat):
    """Reduced-pair map (w, p_w) -> (p_w, curvature = SG Gnv w)."""
    kl_sd_red = _reduced_kl_blocks(build_kl_sd(grid2, mat))
    kl_sl = build_kl_sl(grid2, mat, reduced=True)
    C_comp = kl_sl.meta["C_comp"]
    ni = kl_sl.layout.size("w")
    Z = sp.csr_matrix
    G = sp.bmat([[Z((ni, ni)), sp.identity(ni)],
                 [C_comp, None]], format="csr")
    Gdag = weighted_adjoint(G, kl_sl.M, kl_sd_red.M)
    return G, Gdag, kl_sd_red, kl_sl


# ---------------------------------------------------------------------------
# commuting diagram

@dataclass
class DiagramReport:
    thick_pair: TranspositionReport
    thin_pair: TranspositionReport
    closure_defect: float
    elimination_defect: float
    passed: bool


def _matrix_diff(A, B):
    D = (sp.csr_matrix(A) - sp.csr_matrix(B)).tocsr()
    D.eliminate_zeros()
    return 0.0 if D.nnz == 0 else float(np.max(np.abs(D.data)))


def plate_diagram_check(grid2, mat, tol=1e-12):
    """Verify the four-system diagram: both horizontal transposition pairs,
    and equality of constrain-then-reduce with the transported reduction."""
    G, Gdag, rm_sd, rm_sl = build_rm_transposition(grid2, mat)
    rep_rm = transposition_check(G, Gdag, rm_sd, rm_sl, tol=tol)

    kl_sd = build_kl_sd(grid2, mat)
    G_kl, Gdag_kl, kl_sd_red, kl_sl = build_kl_transposition(grid2, mat)
    rep_kl = transposition_check(G_kl, Gdag_kl, kl_sd_red, kl_sl, tol=tol)

    # route 1: constraining the assembled thick plate reproduces the thin one
    closure = 0.0
    constrained = build_rm_sd(grid2, mat, bc="clamped")
    for a, b in ((constrained.M, kl_sd.M), (constrained.J, kl_sd.J),
                 (constrained.Q, kl_sd.Q)):
        closure = max(closure, _matrix_diff(a, b))

    # route 2: eliminating the multiplier blocks of the constrained system
    # must reproduce the transported reduced interconnection
    lay = kl_sd.layout
    r = np.concatenate([np.arange(*lay.offsets["p_w"]),
                        np.arange(*lay.offsets["curvature"])])
    c = np.concatenate([np.arange(*lay.offsets["p_phi"]),
                        np.arange(*lay.offsets["shear"])])
    J_rr = kl_sd.J[np.ix_(r, r)]
    J_rc = kl_sd.J[np.ix_(r, c)]
    J_cr = kl_sd.J[np.ix_(c, r)]
    J_cc = kl_sd.J[np.ix_(c, c)].tocsc()
    lu = spla.splu(J_cc)
    J_elim = J_rr - sp.csr_matrix(J_rc @ lu.solve(J_cr.toarray()))
    elim_defect = _matrix_diff(J_elim, kl_sd_red.J) / max(
        1.0, abs(kl_sd_red.J).max())

    passed = (rep_rm.passed and rep_kl.passed and closure == 0.0
              and elim_defect <= tol)
    return DiagramReport(rep_rm, rep_kl, closure, elim_defect, passed)
