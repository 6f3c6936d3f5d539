"""Seepage equation with a nontrivial left-hand operator and two damping ports.

The hydraulic head h evolves under (1 - mu*Lap) dh/dt = a*Lap h - b*Lap^2 h on
a domain with homogeneous Dirichlet head.  Discretely

    M dz/dt = -R z,   M = M_mass + mu K,   R = a K + b K M_L^{-1} K,   Q = M,

so the effort equals the state and H = 1/2 (|h|^2 + mu |grad h|^2) is
non-increasing for a, b >= 0.  The biharmonic term is lumped-mass composed to
stay sparse and exactly symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .discrete_ops import (Grid1D, StaggeredGrid2D, assemble_p1_stiffness,
                           sbp_operators_2d, _lumped_weights_1d)
from .numerics import spdiag, sym
from .phcore import BlockLayout, DescriptorPHSystem


@dataclass(frozen=True)
class DzektserParams:
    mu: float = 0.0
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if min(self.mu, self.a, self.b) < 0.0:
            raise ValueError("mu, a, b must be >= 0")


def _interior_operators(grid):
    if isinstance(grid, Grid1D):
        K = assemble_p1_stiffness(grid, 1.0)
        keep = np.arange(1, grid.n_cells)
        w = _lumped_weights_1d(grid.n_cells, grid.h)[keep]
        return K[np.ix_(keep, keep)].tocsr(), w, keep
    if isinstance(grid, StaggeredGrid2D):
        ops = sbp_operators_2d(grid)
        keep = grid.interior_node_indices()
        G = ops.grad.forward[:, keep]
        K = (G.T @ spdiag(ops.w_edges_grad) @ G).tocsr()
        return K, ops.w_nodes[keep], keep
    raise TypeError("grid must be Grid1D or StaggeredGrid2D")


def build_dzektser(grid, params):
    """Descriptor system for the seepage head on interior nodes; the grid may
    be 2D (default geometry) or 1D for fast modal studies."""
    K, w, keep = _interior_operators(grid)
    K = sym(K)
    M_mass = spdiag(w)
    M = sym(M_mass + params.mu * K)
    R_a = (params.a * K).tocsr()
    R_b = sym(K @ spdiag(1.0 / w) @ K) * params.b
    R = sym(R_a + R_b)
    n = w.size
    layout = BlockLayout(("head", n))
    meta = {"grid": grid, "params": params, "K": K, "mass_weights": w,
            "keep_nodes": keep,
            "resistive_ports": (("grad_port", sym(R_a)), ("lap_port", R_b))}
    return DescriptorPHSystem(M=M, J=sp.csr_matrix((n, n)), R=R, Q=M,
                              layout=layout, name="dzektser", meta=meta)


@dataclass
class DissipativityReport:
    dH: np.ndarray
    port_power: dict
    max_increase: float
    min_port_power: float
    passed: bool


def dissipativity_report(traj, tol=1e-12):
    """Check monotone decay of the stored energy and nonnegativity of both
    damping-port contributions along a trajectory."""
    dH = traj.step_series["dH"]
    H0 = max(1.0, float(traj.hamiltonian[0]))
    ports = {name[5:]: series for name, series in traj.step_series.items()
             if name.startswith("diss_")}
    max_inc = float(np.max(dH)) if dH.size else 0.0
    min_pp = min((float(np.min(s)) for s in ports.values()), default=0.0)
    passed = max_inc <= tol * H0 and min_pp >= -tol
    return DissipativityReport(dH, ports, max_inc, min_pp, passed)
