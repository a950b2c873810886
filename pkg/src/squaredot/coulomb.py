"""Coulomb matrix elements in the sine basis.

Everything is computed for a unit square and rescaled by ``coulomb_prefactor / L``.
Each orbital product factorises into x and y pair densities
rho_ab(x) = 2 sin(a pi x) sin(b pi x) = cos((a-b) pi x) - cos((a+b) pi x), so

    <pq|1/r|rs> = int_0^1 int_0^1 h_AC(u) h_BD(v) / sqrt(u^2 + v^2) du dv

with A = (n_p, n_r), C = (n_q, n_s) along x, B, D the y analogues, and h_AC
the folded cross-correlation of two pair densities (closed form). The corner
singularity is removed by a Duffy split (v = u t and u = v t), after which the
integrand is analytic and tensor Gauss-Legendre converges exponentially.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import BoxOrbital, Geometry, Material
from .errors import ConvergenceFailure


@dataclass(frozen=True)
class QuadSpec:
    tol: float = 1e-12  # absolute, in units of coulomb_prefactor / L
    n_start: int = 32
    n_limit: int = 1024


def pair_index(n_max):
    """Unordered 1D pairs (a, b), a <= b, and a lookup table idx[a-1, b-1]."""
    pairs = [(a, b) for a in range(1, n_max + 1) for b in range(a, n_max + 1)]
    idx = np.empty((n_max, n_max), dtype=np.intp)
    for k, (a, b) in enumerate(pairs):
        idx[a - 1, b - 1] = idx[b - 1, a - 1] = k
    return np.array(pairs, dtype=np.int64), idx


def correlation_coefficients(pa, pc):
    """Expansion of h_AC(u) = g_AC(u) + g_CA(u) in sin(j pi u) and (1-u) cos(j pi u).

    g_AC(u) = int_u^1 rho_A(x) rho_C(x - u) dx. ``pa`` and ``pc`` are (n, 2)
    integer arrays of 1D pairs. Returns (sin_coef, cos_coef), each (n, J) with
    J = 1 + largest a + a' present. Coefficients vanish identically when
    a + a' + c + c' is odd.
    """
    pa = np.atleast_2d(np.asarray(pa, dtype=np.int64))
    pc = np.atleast_2d(np.asarray(pc, dtype=np.int64))
    n = len(pa)
    J = int(max(pa.sum(1).max(), pc.sum(1).max())) + 1
    cs = np.zeros((n, J))
    cc = np.zeros((n, J))
    rows = np.arange(n)

    def add_g(p1, p2):
        for k, sk in ((np.abs(p1[:, 0] - p1[:, 1]), 1.0), (p1[:, 0] + p1[:, 1], -1.0)):
            for q, sq in ((np.abs(p2[:, 0] - p2[:, 1]), 1.0), (p2[:, 0] + p2[:, 1], -1.0)):
                c = 0.5 * sk * sq
                # int_u^1 cos((k+q) pi x - q pi u) dx
                s = k + q
                nz = s != 0
                safe = np.where(nz, s, 1) * math.pi
                sign = np.where((k + q) % 2 == 0, 1.0, -1.0)
                np.add.at(cs, (rows[nz], q[nz]), (-c * sign / safe)[nz])
                np.add.at(cs, (rows[nz], k[nz]), (-c / safe)[nz])
                np.add.at(cc, (rows[~nz], q[~nz]), c)
                # int_u^1 cos((k-q) pi x + q pi u) dx
                d = k - q
                nz = d != 0
                safe = np.where(nz, d, 1) * math.pi
                sign = np.where(d % 2 == 0, 1.0, -1.0)
                np.add.at(cs, (rows[nz], q[nz]), (c * sign / safe)[nz])
                np.add.at(cs, (rows[nz], k[nz]), (-c / safe)[nz])
                np.add.at(cc, (rows[~nz], q[~nz]), c)

    add_g(pa, pc)
    add_g(pc, pa)
    odd = (pa.sum(1) + pc.sum(1)) % 2 == 1
    cs[odd] = 0.0
    cc[odd] = 0.0
    return cs, cc


def _correlation_basis(J, u):
    j = np.arange(J)[:, None] * math.pi
    u = np.asarray(u, dtype=float)[None, :]
    return np.sin(j * u), (1.0 - u) * np.cos(j * u)


def folded_correlation(pa, pc, u):
    """h_AC at the points u for each row of the pair arrays pa, pc: (n, len(u))."""
    cs, cc = correlation_coefficients(pa, pc)
    bs, bc = _correlation_basis(cs.shape[1], u)
    return cs @ bs + cc @ bc


def _duffy_nodes(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    return x, w


def _tensor_at(n_max, n_nodes):
    pairs, _ = pair_index(n_max)
    npair = len(pairs)
    A, C = np.meshgrid(np.arange(npair), np.arange(npair), indexing="ij")
    A = A.ravel()
    C = C.ravel()
    even = (pairs[A].sum(1) + pairs[C].sum(1)) % 2 == 0
    xa, xc = pairs[A[even]], pairs[C[even]]

    u, w = _duffy_nodes(n_nodes)
    t, wt = u, w
    weight = (w[:, None] * wt[None, :] / np.sqrt(1.0 + t[None, :] ** 2)).ravel()
    ut = (u[:, None] * t[None, :]).ravel()

    cs, cc = correlation_coefficients(xa, xc)
    bs, bc = _correlation_basis(cs.shape[1], u)
    h_u = cs @ bs + cc @ bc
    bs, bc = _correlation_basis(cs.shape[1], ut)
    h_ut = cs @ bs + cc @ bc
    a_mat = np.repeat(h_u, n_nodes, axis=1) * weight[None, :]
    half = a_mat @ h_ut.T
    t_even = half + half.T

    full = np.zeros((npair * npair, npair * npair))
    ev = np.flatnonzero(even)
    full[np.ix_(ev, ev)] = t_even
    return full.reshape(npair, npair, npair, npair)


@lru_cache(maxsize=8)
def coulomb_tensor(n_max, n_nodes=None, tol=1e-10):
    """Dimensionless tensor T[A, C, B, D] for all 1D pairs up to n_max.

    The element <pq|V|rs> for a dot of side L is
    coulomb_prefactor / L * T[A(n_p, n_r), C(n_q, n_s), B(m_p, m_r), D(m_q, m_s)].
    Accuracy is checked against a run with 16 extra nodes per axis.
    """
    if n_nodes is None:
        n_nodes = max(48, 12 * n_max)
    coarse = _tensor_at(n_max, n_nodes)
    fine = _tensor_at(n_max, n_nodes + 16)
    err = float(np.max(np.abs(fine - coarse)))
    if err > tol:
        raise ConvergenceFailure(f"Coulomb tensor for n_max={n_max} not converged", err)
    fine.setflags(write=False)
    return fine


def _element_dimensionless(pair_x1, pair_x2, pair_y1, pair_y2, n_nodes):
    u, w = _duffy_nodes(n_nodes)
    weight = w[:, None] * w[None, :] / np.sqrt(1.0 + u[None, :] ** 2)
    ut = u[:, None] * u[None, :]
    hx = folded_correlation([pair_x1], [pair_x2], np.concatenate([u, ut.ravel()]))[0]
    hy = folded_correlation([pair_y1], [pair_y2], np.concatenate([u, ut.ravel()]))[0]
    n = len(u)
    hx_u, hx_ut = hx[:n], hx[n:].reshape(ut.shape)
    hy_u, hy_ut = hy[:n], hy[n:].reshape(ut.shape)
    return float(np.sum(weight * (hx_u[:, None] * hy_ut + hx_ut * hy_u[:, None])))


def coulomb_element(p: BoxOrbital, q: BoxOrbital, r: BoxOrbital, s: BoxOrbital,
                    geometry: Geometry, material: Material,
                    quad_spec: QuadSpec = QuadSpec()) -> float:
    """<p(1) q(2)| e^2 / (4 pi eps |r1 - r2|) |r(1) s(2)> in meV.

    Node count doubles until two successive estimates agree to quad_spec.tol.
    """
    if (p.n + r.n + q.n + s.n) % 2 or (p.m + r.m + q.m + s.m) % 2:
        return 0.0
    scale = material.coulomb_prefactor / geometry.L
    args = ((p.n, r.n), (q.n, s.n), (p.m, r.m), (q.m, s.m))
    n = quad_spec.n_start
    prev = _element_dimensionless(*args, n)
    while True:
        n *= 2
        cur = _element_dimensionless(*args, n)
        err = abs(cur - prev)
        if err <= quad_spec.tol:
            return scale * cur
        if n >= quad_spec.n_limit:
            raise ConvergenceFailure("Coulomb element did not converge", err * scale)
        prev = cur
