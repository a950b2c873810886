"""Real-space finite-difference reference for the two-electron problem.

Independent of the sine-basis machinery: a G x G Dirichlet grid per electron,
the full G^4 product space, and a point Coulomb kernel whose coincident value is
the exact average of 1/r over one grid cell. Used for validation only.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.signal import fftconvolve

from .basis import Geometry, Material
from .errors import ResourceLimit, SolverFailure

# int over [-1/2, 1/2]^2 of 1/r, i.e. the cell-averaged kernel times h
CELL_SELF = 4.0 * math.log(1.0 + math.sqrt(2.0))
MAX_GRID = 24


def _cell_kernel(G, h):
    """1/r on the (2G-1)^2 offset lattice, cell average at the origin."""
    off = np.arange(-(G - 1), G) * h
    X, Y = np.meshgrid(off, off, indexing="ij")
    r = np.hypot(X, Y)
    r[G - 1, G - 1] = 1.0
    k = 1.0 / r
    k[G - 1, G - 1] = CELL_SELF / h
    return k


def grid_hamiltonian(geometry: Geometry, material: Material, G: int) -> sp.csr_matrix:
    if G > MAX_GRID:
        raise ResourceLimit(f"G={G} exceeds the desk-scale limit {MAX_GRID} (dimension G^4)")
    L = geometry.L
    h = L / (G + 1)
    t = material.kinetic_prefactor / h**2
    lap = sp.diags([-np.ones(G - 1), 2 * np.ones(G), -np.ones(G - 1)], [-1, 0, 1])
    t1 = t * lap
    i1 = sp.identity(G)
    t2 = sp.kron(t1, i1) + sp.kron(i1, t1)
    i2 = sp.identity(G * G)
    H = sp.kron(t2, i2) + sp.kron(i2, t2)
    if material.coulomb_prefactor:
        xs = (np.arange(G) + 1) * h
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        x, y = X.ravel(), Y.ravel()
        r = np.hypot(x[:, None] - x[None, :], y[:, None] - y[None, :])
        np.fill_diagonal(r, 1.0)
        v = 1.0 / r
        np.fill_diagonal(v, CELL_SELF / h)
        H = H + sp.diags(material.coulomb_prefactor * v.ravel())
    return H.tocsr()


def grid_oracle_spectrum(geometry: Geometry, material: Material, grid_G: int, k: int = 1,
                         return_parity: bool = False):
    """Lowest k eigenvalues (meV) of the G x G finite-difference problem.

    With ``return_parity`` also returns <v|P12|v> per state (+1 spatially
    symmetric, -1 antisymmetric).
    """
    H = grid_hamiltonian(geometry, material, grid_G)
    n = H.shape[0]
    v0 = np.ones(n) / math.sqrt(n)
    try:
        w, v = spla.eigsh(H, k=k, which="SA", v0=v0, tol=1e-12, maxiter=50000)
    except spla.ArpackNoConvergence as exc:
        raise SolverFailure("grid eigensolver did not converge", float("nan")) from exc
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    if not return_parity:
        return w
    G2 = grid_G * grid_G
    par = np.array([float(np.sum(v[:, i].reshape(G2, G2) * v[:, i].reshape(G2, G2).T))
                    for i in range(k)])
    return w, par


def grid_coulomb_element(rho1, rho2, geometry: Geometry, material: Material) -> float:
    """Coulomb energy of two one-body densities on a cell-centred G x G grid.

    rho1, rho2 are callables f(X, Y) (nm^-2) or arrays already sampled at the
    cell centres ((i + 1/2) L / G).
    """
    L = geometry.L
    if callable(rho1):
        raise TypeError("sample the densities first with sample_cell_centres")
    G = rho1.shape[0]
    h = L / G
    K = _cell_kernel(G, h)
    conv = fftconvolve(rho2, K, mode="same")
    return material.coulomb_prefactor * h**4 * float(np.sum(rho1 * conv))


def sample_cell_centres(f, L, G):
    xs = (np.arange(G) + 0.5) * L / G
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    return f(X, Y)


def richardson(hs, values, orders=(2, 4)):
    """Extrapolate values(h) = E0 + sum_j c_j h^orders[j] to h = 0."""
    hs = np.asarray(hs, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(hs) != len(orders) + 1:
        raise ValueError("need len(orders) + 1 samples")
    A = np.column_stack([np.ones_like(hs)] + [hs**p for p in orders])
    return float(np.linalg.solve(A, values)[0])
