"""Grids, P1/staggered finite-difference assembly and summation-by-parts pairs.

Conventions
-----------
1D grid with n cells: nodes x_i = a + i*h (i = 0..n), elements are the cells
between consecutive nodes.  The forward difference D maps nodal values to
element values; its discrete adjoint splits into an interior part L0 and a
boundary lift so that the Abel-summation identity

    sigma . (h I) (D w) = (L0 sigma) . M_lump w + sigma_{n-1} w_n - sigma_0 w_0

holds to machine precision for every pair of vectors.

2D staggered grid (nx x ny cells): scalars live at nodes or cell centers,
vector components on edge midpoints, symmetric 2x2 tensors at cell centers as
(xx, yy, xy) triples with the xy slot double-weighted in inner products.
The perpendicular gradient uses the convention

    gradperp(v) = (d_y v, -d_x v),      curl2d(w) = d_x w_y - d_y w_x,

so that curl2d is the pairing-weighted adjoint of gradperp and the matrix
product div . gradperp vanishes identically; the x component of a
perpendicular-edge vector sits on y-edges and vice versa.

Every adjoint operator is defined *by construction* as a pairing-weighted
transpose of a forward difference plus a boundary lift, which makes all the
discrete integration-by-parts identities exact by design.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, NonPositiveCoefficient, QuadratureFailure

SBP_IDENTITY_TOL = 1e-13


# ---------------------------------------------------------------------------
# grids

@dataclass(frozen=True)
class Grid1D:
    a: float
    b: float
    n_cells: int

    def __post_init__(self):
        if self.b <= self.a:
            raise ValueError("b must exceed a")
        if self.n_cells < 2:
            raise ValueError("need at least 2 cells")

    @property
    def h(self):
        return (self.b - self.a) / self.n_cells

    @property
    def n_nodes(self):
        return self.n_cells + 1

    @property
    def nodes(self):
        return np.linspace(self.a, self.b, self.n_nodes)

    @property
    def midpoints(self):
        return self.nodes[:-1] + 0.5 * self.h


@dataclass(frozen=True)
class StaggeredGrid2D:
    lx: float
    ly: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("need at least 2 cells per direction")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("side lengths must be positive")

    @property
    def hx(self):
        return self.lx / self.nx

    @property
    def hy(self):
        return self.ly / self.ny

    @property
    def n_nodes(self):
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_cells(self):
        return self.nx * self.ny

    @property
    def n_xedges(self):
        # midpoints (i+1/2, j): aligned with the x axis
        return self.nx * (self.ny + 1)

    @property
    def n_yedges(self):
        return (self.nx + 1) * self.ny

    def node_coords(self):
        x = np.linspace(0.0, self.lx, self.nx + 1)
        y = np.linspace(0.0, self.ly, self.ny + 1)
        X, Y = np.meshgrid(x, y, indexing="ij")
        return X.ravel(), Y.ravel()

    def boundary_node_indices(self):
        idx = np.arange(self.n_nodes).reshape(self.nx + 1, self.ny + 1)
        mask = np.zeros_like(idx, dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        return idx[mask]

    def interior_node_indices(self):
        idx = np.arange(self.n_nodes).reshape(self.nx + 1, self.ny + 1)
        return idx[1:-1, 1:-1].ravel()


# ---------------------------------------------------------------------------
# 1D building blocks

def _diff_1d(n, h):
    """Forward difference, n x (n+1)."""
    return sp.diags([-np.ones(n) / h, np.ones(n) / h], [0, 1],
                    shape=(n, n + 1), format="csr")


def _avg_1d(n):
    """Two-point average, n x (n+1)."""
    return sp.diags([0.5 * np.ones(n), 0.5 * np.ones(n)], [0, 1],
                    shape=(n, n + 1), format="csr")


def _lumped_weights_1d(n, h):
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _coeff_nodal(coeff, nodes):
    if callable(coeff):
        vals = np.asarray([coeff(x) for x in nodes], dtype=float)
    else:
        vals = np.asarray(coeff, dtype=float)
        if vals.ndim == 0:
            vals = np.full(nodes.size, float(vals))
    if vals.shape != nodes.shape:
        raise DimensionMismatch("coefficient length does not match nodes")
    return vals


# ---------------------------------------------------------------------------
# P1 assembly

def assemble_p1_mass(grid, coeff=1.0, lumped=False):
    """P1 mass matrix with nodal coefficient, consistent or lumped.

    The coefficient is interpolated linearly on each element and integrated
    exactly, so the matrix is linear in the coefficient.  Lumping takes
    diagonal row sums.
    """
    c = _coeff_nodal(coeff, grid.nodes)
    if np.any(c <= 0.0):
        raise NonPositiveCoefficient("mass coefficient must be positive on nodes")
    h = grid.h
    n = grid.n_nodes
    c0 = c[:-1]
    c1 = c[1:]
    m00 = h * (c0 / 4.0 + c1 / 12.0)
    m01 = h * (c0 + c1) / 12.0
    m11 = h * (c0 / 12.0 + c1 / 4.0)
    i = np.arange(grid.n_cells)
    rr = np.concatenate([i, i, i + 1, i + 1])
    cc = np.concatenate([i, i + 1, i, i + 1])
    vv = np.concatenate([m00, m01, m01, m11])
    M = sp.csr_matrix((vv, (rr, cc)), shape=(n, n))
    if lumped:
        return sp.diags(np.asarray(M.sum(axis=1)).ravel(), format="csr")
    return M


def assemble_p1_stiffness(grid, coeff=1.0):
    """P1 stiffness matrix; element coefficient is the nodal mean (exact for
    linearly interpolated coefficients).  Constants span the kernel."""
    c = _coeff_nodal(coeff, grid.nodes)
    if np.any(c < 0.0):
        raise NonPositiveCoefficient("stiffness coefficient must be >= 0")
    ce = 0.5 * (c[:-1] + c[1:])
    h = grid.h
    n = grid.n_nodes
    i = np.arange(grid.n_cells)
    k = ce / h
    rr = np.concatenate([i, i, i + 1, i + 1])
    cc = np.concatenate([i, i + 1, i, i + 1])
    vv = np.concatenate([k, -k, -k, k])
    return sp.csr_matrix((vv, (rr, cc)), shape=(n, n))


# ---------------------------------------------------------------------------
# dense nonlocal kernel matrix

def _gauss01(n):
    xs, ws = np.polynomial.legendre.leggauss(n)
    return 0.5 * (xs + 1.0), 0.5 * ws


def assemble_kernel_matrix(grid, mu, modulus=1.0, n_gauss=4, chunk=256):
    """Dense matrix of the exponential-kernel constitutive pairing.

        K[i, j] = int int  a(|x - y|) phi_i(x) E(y) phi_j(y) dy dx,
        a(r) = exp(-r / sqrt(mu)) / (2 sqrt(mu)).

    Element pairs are integrated with tensor Gauss rules of order
    ``n_gauss``; the diagonal pairs are split along x = y where the kernel
    has a kink, each triangle mapped smoothly before quadrature.
    """
    if mu <= 0.0:
        raise ValueError("mu must be > 0")
    if n_gauss < 4:
        raise ValueError("need Gauss order >= 4")
    smu = np.sqrt(mu)
    h = grid.h
    n = grid.n_nodes
    nel = grid.n_cells
    xl = grid.nodes[:-1]

    if callable(modulus):
        def eval_E(pts):
            return np.asarray(modulus(pts), dtype=float)
    else:
        Ec = float(modulus)

        def eval_E(pts):
            return np.full_like(pts, Ec)

    g, w = _gauss01(n_gauss)
    phi = np.stack([1.0 - g, g])                      # (2, ng) hat values
    try:
        K = np.zeros((n, n))
    except MemoryError as exc:
        from .errors import OutOfMemory
        raise OutOfMemory("dense kernel matrix of size %d" % n) from exc

    # global Gauss coordinates per element, (nel, ng)
    XG = xl[:, None] + h * g[None, :]
    EG = eval_E(XG)

    # off-diagonal element pairs, tiled over rows of elements
    for e0 in range(0, nel, chunk):
        e1 = min(e0 + chunk, nel)
        X = XG[e0:e1]                                  # (ce, ng)
        D = np.abs(X[:, :, None, None] - XG[None, None, :, :])
        A = np.exp(-D / smu) / (2.0 * smu)             # (ce, ng, nel, ng)
        A *= EG[None, None, :, :]
        for p in range(2):
            for q in range(2):
                Wpq = (h * h) * np.outer(w * phi[p], w * phi[q])
                block = np.einsum("iajb,ab->ij", A, Wpq)
                # diagonal pairs are handled by the split rule below
                ii = np.arange(e0, e1)
                block[ii - e0, ii] = 0.0
                K[e0 + p:e1 + p, q:q + nel] += block

    # diagonal pairs: two triangles x > y and x < y
    U, V = np.meshgrid(g, g, indexing="ij")            # (ng, ng)
    WUV = np.outer(w, w) * U                           # jacobian h^2 u
    refs = [(U, U * V), (U * V, U)]                    # (x_ref, y_ref)
    for xr, yr in refs:
        dist = h * np.abs(xr - yr)
        alpha = np.exp(-dist / smu) / (2.0 * smu)
        for p in range(2):
            phix = np.where(p == 0, 1.0 - xr, xr)
            for q in range(2):
                phiy = np.where(q == 0, 1.0 - yr, yr)
                base = (h * h) * WUV * alpha * phix * phiy   # (ng, ng)
                YG = xl[:, None, None] + h * yr[None, :, :]
                Epts = eval_E(YG.reshape(nel, -1)).reshape(nel, *yr.shape)
                contrib = np.sum(base[None, :, :] * Epts, axis=(1, 2))
                np.add.at(K, (np.arange(nel) + p, np.arange(nel) + q), contrib)

    defect = np.max(np.abs(K - K.T))
    if defect > 1e-10 * max(1.0, np.max(np.abs(K))):
        raise QuadratureFailure("kernel symmetry defect %.3e" % defect)
    return K


# ---------------------------------------------------------------------------
# SBP pairs

@dataclass(frozen=True)
class SbpPair:
    """Forward operator with its pairing-weighted adjoint split.

    The defining identity, exact by construction, reads

        (forward u) . pairing_out v
            = u . pairing_in (adjoint_interior v) + u . (boundary_lift v).
    """
    forward: sp.spmatrix
    adjoint_interior: sp.spmatrix
    boundary_lift: sp.spmatrix
    pairing_in: sp.spmatrix
    pairing_out: sp.spmatrix

    def identity_residual(self, u, v):
        t1 = float((self.forward @ u) @ (self.pairing_out @ v))
        t2 = float(u @ (self.pairing_in @ (self.adjoint_interior @ v)))
        t3 = float(u @ (self.boundary_lift @ v))
        scale = max(1.0, abs(t1), abs(t2), abs(t3))
        return abs(t1 - t2 - t3) / scale

    def max_identity_residual(self, n_pairs=100, seed=0):
        rng = np.random.default_rng(seed)
        worst = 0.0
        n_in = self.forward.shape[1]
        n_out = self.forward.shape[0]
        for _ in range(n_pairs):
            u = rng.standard_normal(n_in)
            v = rng.standard_normal(n_out)
            worst = max(worst, self.identity_residual(u, v))
        return worst


def _make_pair(forward, w_in, M_out, interior_rows):
    """Split forward^T M_out into interior rows (weighted by the lumped input
    pairing) and boundary lift rows."""
    forward = sp.csr_matrix(forward)
    M_in = sp.diags(w_in, format="csr")
    W = (forward.T @ M_out).tocsr()
    n_in = forward.shape[1]
    mask = np.zeros(n_in, dtype=bool)
    mask[interior_rows] = True
    Din = sp.diags(mask.astype(float))
    Dbd = sp.diags((~mask).astype(float))
    L0 = (sp.diags(1.0 / w_in) @ (Din @ W)).tocsr()
    lift = (Dbd @ W).tocsr()
    return SbpPair(forward, L0, lift, M_in, sp.csr_matrix(M_out))


def _full_adjoint_pair(forward_full, M_in, back, M_out):
    """Pair for an operator already carrying its natural boundary closure:
    identity holds with a zero lift."""
    n_in = forward_full.shape[1]
    return SbpPair(sp.csr_matrix(forward_full),
                   sp.csr_matrix(back),
                   sp.csr_matrix((n_in, forward_full.shape[0])),
                   sp.csr_matrix(M_in), sp.csr_matrix(M_out))


def sbp_gradient_1d(grid):
    """Forward-difference gradient (nodes -> elements) with its exact
    Abel-summation adjoint split."""
    n = grid.n_cells
    h = grid.h
    D = _diff_1d(n, h)
    M_el = sp.identity(n, format="csr") * h
    w_nodal = _lumped_weights_1d(n, h)
    return _make_pair(D, w_nodal, M_el, np.arange(1, n))


@dataclass(frozen=True)
class Ops2D:
    """Named staggered operators on a 2D grid; see the module docstring for
    the field placements and sign conventions."""
    grid: StaggeredGrid2D
    grad: SbpPair
    div: SbpPair
    gradperp: SbpPair
    curl2d: SbpPair
    symgrad: SbpPair
    tensdiv: SbpPair
    laplacian: SbpPair
    nodal_gradient: SbpPair
    div_perp_cells: sp.spmatrix     # perpendicular edge vectors -> cells
    avg_nodal_to_edges: sp.spmatrix
    w_nodes: np.ndarray
    w_edges_grad: np.ndarray
    w_edges_perp: np.ndarray
    w_cells: np.ndarray
    w_nodal_vec: np.ndarray
    w_cell_tensor: np.ndarray

    def as_dict(self):
        return {"grad": self.grad, "div": self.div, "gradperp": self.gradperp,
                "curl2d": self.curl2d, "symgrad": self.symgrad,
                "tensdiv": self.tensdiv, "laplacian": self.laplacian}


def sbp_operators_2d(grid):
    """Assemble the staggered operator family {grad, div, gradperp, curl2d,
    symgrad, tensdiv, laplacian} with exact adjoint splits."""
    nx, ny = grid.nx, grid.ny
    hx, hy = grid.hx, grid.hy
    Inx1 = sp.identity(nx + 1, format="csr")
    Iny1 = sp.identity(ny + 1, format="csr")
    Inx = sp.identity(nx, format="csr")
    Iny = sp.identity(ny, format="csr")
    Dx = _diff_1d(nx, hx)
    Dy = _diff_1d(ny, hy)
    Ax = _avg_1d(nx)
    Ay = _avg_1d(ny)
    wx = _lumped_weights_1d(nx, hx)
    wy = _lumped_weights_1d(ny, hy)

    w_nodes = np.kron(wx, wy)
    w_xe = np.kron(np.full(nx, hx), wy)
    w_ye = np.kron(wx, np.full(ny, hy))
    w_cells = np.full(grid.n_cells, hx * hy)

    Dx_n = sp.kron(Dx, Iny1, format="csr")     # nodes -> x-edges
    Dy_n = sp.kron(Inx1, Dy, format="csr")     # nodes -> y-edges
    Ax_n = sp.kron(Ax, Iny1, format="csr")     # nodes -> x-edges (average)
    Ay_n = sp.kron(Inx1, Ay, format="csr")     # nodes -> y-edges (average)

    interior = grid.interior_node_indices()

    # gradient pair: nodes -> grad-layout edges (x comp on x-edges)
    G_grad = sp.vstack([Dx_n, Dy_n]).tocsr()
    w_eg = np.concatenate([w_xe, w_ye])
    M_eg = sp.diags(w_eg, format="csr")
    grad_pair = _make_pair(G_grad, w_nodes, M_eg, interior)

    # full divergence with natural closure (edges -> nodes)
    div_full = (-(sp.diags(1.0 / w_nodes) @ (G_grad.T @ M_eg))).tocsr()
    div_pair = _full_adjoint_pair(div_full, sp.diags(w_eg),
                                  (-G_grad).tocsr(), sp.diags(w_nodes))

    # perpendicular gradient: gradperp(v) = (d_y v, -d_x v); x comp on y-edges
    G_perp = sp.vstack([Dy_n, -Dx_n]).tocsr()
    w_ep = np.concatenate([w_ye, w_xe])
    M_ep = sp.diags(w_ep, format="csr")
    perp_pair = _make_pair(G_perp, w_nodes, M_ep, interior)

    curl_full = (sp.diags(1.0 / w_nodes) @ (G_perp.T @ M_ep)).tocsr()
    curl_pair = _full_adjoint_pair(curl_full, sp.diags(w_ep),
                                   G_perp, sp.diags(w_nodes))

    # symmetric gradient: nodal vectors -> cell tensors (xx, yy, xy)
    zc = sp.csr_matrix((grid.n_cells, grid.n_nodes))
    row_xx = sp.hstack([sp.kron(Dx, Ay), zc])
    row_yy = sp.hstack([zc, sp.kron(Ax, Dy)])
    row_xy = sp.hstack([0.5 * sp.kron(Ax, Dy), 0.5 * sp.kron(Dx, Ay)])
    SG = sp.vstack([row_xx, row_yy, row_xy]).tocsr()
    w_nv = np.concatenate([w_nodes, w_nodes])
    w_ct = np.concatenate([w_cells, w_cells, 2.0 * w_cells])
    M_ct = sp.diags(w_ct, format="csr")
    nv_interior = np.concatenate([interior, interior + grid.n_nodes])
    symgrad_pair = _make_pair(SG, w_nv, M_ct, nv_interior)

    tensdiv_full = (-(sp.diags(1.0 / w_nv) @ (SG.T @ M_ct))).tocsr()
    tensdiv_pair = _full_adjoint_pair(tensdiv_full, sp.diags(w_ct),
                                      (-SG).tocsr(), sp.diags(w_nv))

    # scalar Laplacian as div o grad, self-adjoint in the nodal pairing
    lap = (div_full @ G_grad).tocsr()
    lap_pair = _full_adjoint_pair(lap, sp.diags(w_nodes), lap, sp.diags(w_nodes))

    # averaged nodal gradient (scalar nodes -> nodal vectors)
    Avg = sp.block_diag([Ax_n, Ay_n], format="csr")
    G_nv = (sp.diags(1.0 / w_nv) @ (Avg.T @ (M_eg @ G_grad))).tocsr()
    nodal_grad_pair = _make_pair(G_nv, w_nodes, sp.diags(w_nv), interior)

    # divergence of perpendicular-layout edge vectors, valued at cells
    div_perp = sp.hstack([sp.kron(Dx, Iny), sp.kron(Inx, Dy)]).tocsr()

    return Ops2D(grid=grid, grad=grad_pair, div=div_pair, gradperp=perp_pair,
                 curl2d=curl_pair, symgrad=symgrad_pair, tensdiv=tensdiv_pair,
                 laplacian=lap_pair, nodal_gradient=nodal_grad_pair,
                 div_perp_cells=div_perp, avg_nodal_to_edges=Avg,
                 w_nodes=w_nodes, w_edges_grad=w_eg, w_edges_perp=w_ep,
                 w_cells=w_cells, w_nodal_vec=w_nv, w_cell_tensor=w_ct)


# ---------------------------------------------------------------------------
# Dirichlet elimination

def apply_dirichlet(matrix, grid_or_indices, boundary_values):
    """Symmetric elimination of Dirichlet nodes.

    Rows and columns of constrained nodes are zeroed and replaced by the
    identity.  Returns ``(matrix', rhs_shift)``; to solve ``A u = b`` with
    ``u[bdry] = g``, zero the boundary entries of ``b`` and solve
    ``matrix' u = b + rhs_shift``.
    """
    A = sp.csr_matrix(matrix)
    n = A.shape[0]
    if isinstance(grid_or_indices, Grid1D):
        idx = np.array([0, grid_or_indices.n_cells])
    else:
        idx = np.asarray(grid_or_indices, dtype=int)
    g = np.zeros(n)
    vals = np.asarray(boundary_values, dtype=float)
    if vals.ndim == 0:
        vals = np.full(idx.size, float(vals))
    if vals.size != idx.size:
        raise DimensionMismatch("boundary values do not match boundary nodes")
    g[idx] = vals
    mask = np.zeros(n, dtype=bool)
    mask[idx] = True
    Dfree = sp.diags((~mask).astype(float))
    Dbdry = sp.diags(mask.astype(float))
    A2 = (Dfree @ A @ Dfree + Dbdry).tocsr()
    shift = -(A @ g)
    shift[idx] = g[idx]
    return A2, shift
