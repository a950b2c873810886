"""Configuration interaction for two electrons in the square dot.

Spatial two-electron states are expanded in symmetrised (singlet) or
antisymmetrised (triplet) products of box orbitals. The Hamiltonian commutes
with the two wall reflections x -> L-x and y -> L-y, and every pair state is a
reflection eigenstate, so spectra are solved block by block and each
eigenstate carries its parity label. The quadrant gate only keeps the 180 degree
rotation, so gated problems are blocked by the product parity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import Geometry, Material, BoxOrbital, energy_unit, enumerate_orbitals, half_overlap, orbitals_on_grid
from .coulomb import coulomb_tensor, pair_index
from .errors import AlignmentFailure, InvalidArgument, ManifoldInvalid, SolverFailure

SYMMETRIC = "symmetric"
ANTISYMMETRIC = "antisymmetric"


@dataclass(eq=False)
class TwoElectronBasis:
    sector: str
    orbitals: tuple
    pairs: np.ndarray  # (M, 2) orbital indices, p <= q (p < q when antisymmetric)
    energy_cutoff: float | None = None
    n_max: int = 0

    def __post_init__(self):
        if self.sector not in (SYMMETRIC, ANTISYMMETRIC):
            raise InvalidArgument(f"unknown sector {self.sector!r}")
        self.pairs = np.asarray(self.pairs, dtype=np.intp).reshape(-1, 2)
        ns = np.array([o.n for o in self.orbitals])
        ms = np.array([o.m for o in self.orbitals])
        p, q = self.pairs[:, 0], self.pairs[:, 1]
        self.px = (ns[p] + ns[q]) % 2
        self.py = (ms[p] + ms[q]) % 2

    def __len__(self):
        return len(self.pairs)

    @property
    def sign(self):
        return 1.0 if self.sector == SYMMETRIC else -1.0

    def subset(self, mask):
        sub = TwoElectronBasis(self.sector, self.orbitals, self.pairs[mask],
                               self.energy_cutoff, self.n_max)
        sub.parent_index = np.flatnonzero(mask)
        return sub


def make_basis(sector, n_max, geometry=None, material=None, energy_cutoff=None):
    """Pair basis over the n_max x n_max orbital set.

    With ``energy_cutoff`` (meV) only pairs with E_p + E_q <= cutoff are kept;
    that needs geometry and material for the orbital energies.
    """
    orbs = tuple(enumerate_orbitals(n_max))
    n = len(orbs)
    if sector == SYMMETRIC:
        pairs = [(i, j) for i in range(n) for j in range(i, n)]
    elif sector == ANTISYMMETRIC:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    else:
        raise InvalidArgument(f"unknown sector {sector!r}")
    pairs = np.array(pairs, dtype=np.intp)
    if energy_cutoff is not None:
        if geometry is None or material is None:
            raise InvalidArgument("energy_cutoff needs geometry and material")
        k = energy_unit(geometry, material)
        e = np.array([k * (o.n**2 + o.m**2) for o in orbs])
        pairs = pairs[e[pairs[:, 0]] + e[pairs[:, 1]] <= energy_cutoff]
    return TwoElectronBasis(sector, orbs, pairs, energy_cutoff, n_max)


# ---------------------------------------------------------------- assembly

def _orbital_arrays(basis):
    ns = np.array([o.n for o in basis.orbitals]) - 1
    ms = np.array([o.m for o in basis.orbitals]) - 1
    return ns, ms


def _norms(basis):
    p, q = basis.pairs[:, 0], basis.pairs[:, 1]
    if basis.sector == SYMMETRIC:
        return np.where(p == q, 0.5, 1.0 / math.sqrt(2.0))
    return np.full(len(p), 1.0 / math.sqrt(2.0))


def coulomb_block(basis: TwoElectronBasis) -> np.ndarray:
    """Dimensionless Coulomb matrix (multiply by coulomb_prefactor / L)."""
    n_max = max(max(o.n, o.m) for o in basis.orbitals)
    T = coulomb_tensor(n_max)
    _, idx = pair_index(n_max)
    npair = idx.max() + 1
    flat = T.reshape(-1)
    ns, ms = _orbital_arrays(basis)
    P, Q = basis.pairs[:, 0], basis.pairs[:, 1]

    def element(r, s):
        f = idx[ns[P][:, None], ns[r][None, :]]
        f = f * npair + idx[ns[Q][:, None], ns[s][None, :]]
        f = f * npair + idx[ms[P][:, None], ms[r][None, :]]
        f = f * npair + idx[ms[Q][:, None], ms[s][None, :]]
        return flat[f]

    nrm = _norms(basis)
    V = element(P, Q) + basis.sign * element(Q, P)
    V *= 2.0 * nrm[:, None] * nrm[None, :]
    return 0.5 * (V + V.T)


def kinetic_block(basis: TwoElectronBasis) -> np.ndarray:
    """Dimensionless kinetic diagonal, in units of hbar^2 pi^2 / (2 m* L^2)."""
    e = np.array([o.n**2 + o.m**2 for o in basis.orbitals], dtype=float)
    return np.diag(e[basis.pairs[:, 0]] + e[basis.pairs[:, 1]])


def one_body_block(basis: TwoElectronBasis, u: np.ndarray) -> np.ndarray:
    """Matrix of u(r1) + u(r2) given the orbital matrix u_pr."""
    P, Q = basis.pairs[:, 0], basis.pairs[:, 1]
    I = np.eye(len(basis.orbitals))

    def U(r, s):
        return (u[P][:, r] * I[Q][:, s]) + (I[P][:, r] * u[Q][:, s])

    nrm = _norms(basis)
    M = U(P, Q) + basis.sign * U(Q, P)
    M *= 2.0 * nrm[:, None] * nrm[None, :]
    return 0.5 * (M + M.T)


def _half_tables(orbitals):
    n = np.array([o.n for o in orbitals])
    m = np.array([o.m for o in orbitals])
    lo_x = half_overlap(n[:, None], n[None, :])
    lo_y = half_overlap(m[:, None], m[None, :])
    hi_x = (n[:, None] == n[None, :]) - lo_x
    hi_y = (m[:, None] == m[None, :]) - lo_y
    return lo_x, hi_x, lo_y, hi_y


def quadrant_gate_orbital(orbitals) -> np.ndarray:
    """Orbital matrix of the indicator of the b and d quadrants."""
    lo_x, hi_x, lo_y, hi_y = _half_tables(orbitals)
    return hi_x * lo_y + lo_x * hi_y


def diagonal_imbalance_orbital(orbitals) -> np.ndarray:
    """Orbital matrix of sign(x - L/2) sign(y - L/2): +1 on quadrants a, c."""
    lo_x, hi_x, lo_y, hi_y = _half_tables(orbitals)
    return (lo_x - hi_x) * (lo_y - hi_y)


def build_hamiltonian(basis: TwoElectronBasis, geometry: Geometry, material: Material,
                      gate_potential: float | None = None) -> np.ndarray:
    """Two-electron Hamiltonian (meV) in the pair basis.

    ``gate_potential`` (meV) raises the two quadrants containing corners b and
    d, pushing the electrons toward a and c.
    """
    H = energy_unit(geometry, material) * kinetic_block(basis)
    if material.coulomb_prefactor != 0.0:
        H = H + (material.coulomb_prefactor / geometry.L) * coulomb_block(basis)
    if gate_potential:
        H = H + gate_potential * one_body_block(basis, quadrant_gate_orbital(basis.orbitals))
    return 0.5 * (H + H.T)


# ---------------------------------------------------------------- spectra

@dataclass(eq=False)
class CiSpectrum:
    sector: str
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns over the (parent) pair basis
    basis_size: int
    residuals: np.ndarray
    basis: TwoElectronBasis | None = None
    parity: np.ndarray | None = None  # (k, 2) reflection parities (px, py); 1 = odd
    diagonal_parity: np.ndarray | None = None  # +-1 for px == py states, 0 otherwise


def _fix_sign(vecs):
    idx = np.argmax(np.abs(vecs), axis=0)
    s = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    s[s == 0] = 1.0
    return vecs * s


def solve_spectrum(H: np.ndarray, k: int, sector: str = SYMMETRIC) -> CiSpectrum:
    """Lowest k eigenpairs by dense LAPACK (MRRR); eigenvector signs fixed so
    the largest component is positive."""
    n = H.shape[0]
    if not 1 <= k <= n:
        raise InvalidArgument(f"k={k} outside 1..{n}")
    w, v = scipy.linalg.eigh(H, subset_by_index=[0, k - 1], driver="evr")
    v = _fix_sign(v)
    res = np.linalg.norm(H @ v - v * w, axis=0)
    scale = max(np.linalg.norm(H, 1), 1e-300)
    if np.any(res > 1e-8 * scale):
        raise SolverFailure("eigenpair residual above 1e-8 ||H||", float(res.max()))
    return CiSpectrum(sector, w, v, n, res)


def _swap_map(basis):
    """Action of the diagonal reflection x <-> y on the pair basis."""
    lookup = {(o.n, o.m): i for i, o in enumerate(basis.orbitals)}
    perm = np.array([lookup[(o.m, o.n)] for o in basis.orbitals])
    pos = {tuple(pq): j for j, pq in enumerate(basis.pairs)}
    target = np.empty(len(basis), dtype=np.intp)
    sign = np.ones(len(basis))
    for j, (p, q) in enumerate(basis.pairs):
        a, b = perm[p], perm[q]
        if a > b:
            a, b = b, a
            sign[j] = basis.sign
        target[j] = pos[(a, b)]
    return target, sign


def solve_sector(sector, geometry: Geometry, material: Material, n_max: int = 8,
                 k_per_block: int = 6, gate_potential: float | None = None,
                 energy_cutoff: float | None = None) -> CiSpectrum:
    """Lowest states of one spin sector, solved per reflection-parity block.

    Eigenvectors are embedded in the full pair basis of the sector. Without a
    gate the four (px, py) blocks are used; with a gate, the two blocks of
    px XOR py.
    """
    full = make_basis(sector, n_max, geometry, material, energy_cutoff)
    if gate_potential:
        classes = [(full.px ^ full.py) == c for c in (0, 1)]
    else:
        classes = [(full.px == a) & (full.py == b) for a in (0, 1) for b in (0, 1)]
    target, sign = _swap_map(full)
    vals, vecs, res, par, dpar = [], [], [], [], []
    for mask in classes:
        if not mask.any():
            continue
        sub = full.subset(mask)
        H = build_hamiltonian(sub, geometry, material, gate_potential)
        spec = solve_spectrum(H, min(k_per_block, len(sub)), sector)
        emb = np.zeros((len(full), len(spec.eigenvalues)))
        emb[sub.parent_index] = spec.eigenvectors
        vals.append(spec.eigenvalues)
        vecs.append(emb)
        res.append(spec.residuals)
        par.append(np.column_stack([full.px[sub.parent_index][0] * np.ones(len(spec.eigenvalues), int),
                                    full.py[sub.parent_index][0] * np.ones(len(spec.eigenvalues), int)]))
        swapped = np.zeros_like(emb)
        swapped[target] = emb * sign[:, None]
        d = np.einsum("ij,ij->j", emb, swapped)
        dpar.append(np.where(np.abs(d) > 0.5, np.sign(d), 0.0))
    vals = np.concatenate(vals)
    order = np.argsort(vals, kind="stable")
    spec = CiSpectrum(sector, vals[order], np.hstack(vecs)[:, order], len(full),
                      np.concatenate(res)[order], full,
                      None if gate_potential else np.vstack(par)[order],
                      np.concatenate(dpar)[order])
    return spec


# ---------------------------------------------------------------- effective parameters

@dataclass
class EffectiveParams:
    E0: float
    Delta1: float
    Delta2: float
    J: float
    Delta: float
    gap_ratio: float = float("inf")
    j_convention: str = "J=(Delta1-Delta2)/2"

    @classmethod
    def from_delta_j(cls, Delta, J, E0=0.0, gap_ratio=float("inf")):
        """Parameters from the tunnelling amplitude and exchange directly."""
        return cls(E0=E0, Delta1=Delta + J, Delta2=Delta - J, J=J, Delta=Delta,
                   gap_ratio=gap_ratio)

    def to_dict(self):
        return {"E0": self.E0, "Delta1": self.Delta1, "Delta2": self.Delta2, "J": self.J,
                "Delta": self.Delta, "gap_ratio": self.gap_ratio,
                "j_convention": self.j_convention}


def _second_singlet_index(spec: CiSpectrum) -> int:
    if spec.parity is not None:
        for i, (px, py) in enumerate(spec.parity):
            if px == 1 and py == 1 and spec.diagonal_parity[i] > 0:
                return i
        raise ManifoldInvalid("no odd-odd, diagonal-even singlet among the solved states")
    return 1


def extract_effective_params(singlet_spec: CiSpectrum, triplet_spec: CiSpectrum) -> EffectiveParams:
    """Charge-spin parameters from the two lowest singlets and triplet pair.

    The second singlet is the lowest state with the symmetry of xy (odd under
    both wall reflections, even under x <-> y) when parity labels are present,
    since only that state combines with the ground state into diagonal charge
    states. J carries the sign that reproduces the singlet energies as
    E0 - J -+ Delta.
    """
    es = singlet_spec.eigenvalues
    et = triplet_spec.eigenvalues
    if len(es) < 2 or len(et) < 2:
        raise InvalidArgument("need at least two singlet and two triplet states")
    i2 = _second_singlet_index(singlet_spec)
    e_s1, e_s2 = es[0], es[i2]
    E0 = 0.5 * (et[0] + et[1])
    d1 = E0 - e_s1
    d2 = e_s2 - E0
    delta = 0.5 * (d1 + d2)
    split = abs(et[1] - et[0])
    if split > 0.1 * abs(delta):
        raise ManifoldInvalid(f"lowest triplets split by {split:.3e} meV > 10% of Delta={delta:.3e}")
    if d1 <= 0 or d2 <= 0:
        raise ManifoldInvalid(f"triplets do not lie between the singlets (Delta1={d1:.3e}, Delta2={d2:.3e})")
    rest = [e for i, e in enumerate(es) if i not in (0, i2)] + list(et[2:])
    gap_ratio = (min(rest) - e_s1) / (e_s2 - e_s1) if rest else float("inf")
    return EffectiveParams(E0=E0, Delta1=d1, Delta2=d2, J=0.5 * (d1 - d2), Delta=delta,
                           gap_ratio=gap_ratio)


def spectrum_from_params(params: EffectiveParams):
    """Inverse map: singlet and triplet spectra of the charge-spin model."""
    E0, J, D = params.E0, params.J, params.Delta
    s = CiSpectrum(SYMMETRIC, np.array([E0 - J - D, E0 - J + D]), np.eye(2), 2, np.zeros(2))
    t = CiSpectrum(ANTISYMMETRIC, np.array([E0, E0]), np.eye(2), 2, np.zeros(2))
    return s, t


# ---------------------------------------------------------------- state utilities

def pair_matrix(basis: TwoElectronBasis, vec: np.ndarray) -> np.ndarray:
    """Orbital coefficient matrix M with Psi(r1, r2) = sum M_pq phi_p(r1) phi_q(r2)."""
    n = len(basis.orbitals)
    M = np.zeros((n, n))
    nrm = _norms(basis)
    P, Q = basis.pairs[:, 0], basis.pairs[:, 1]
    np.add.at(M, (P, Q), nrm * vec)
    np.add.at(M, (Q, P), basis.sign * nrm * vec)
    return M


def one_body_expectation(basis, u, v, w):
    """<v| u(1) + u(2) |w> for pair-basis vectors v, w."""
    Mv = pair_matrix(basis, v)
    Mw = pair_matrix(basis, w)
    return 2.0 * float(np.sum(Mv * (u @ Mw)))


@dataclass
class DensityGrid:
    resolution: int
    values: np.ndarray  # (G, G), indexed [ix, iy], nm^-2
    total: float
    xs: np.ndarray
    ys: np.ndarray

    def corner_fraction(self, L, radius=None):
        """Share of the charge within ``radius`` (default L/4) of the four corners."""
        radius = L / 4 if radius is None else radius
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        mask = np.zeros_like(X, dtype=bool)
        for cx in (0.0, L):
            for cy in (0.0, L):
                mask |= np.hypot(X - cx, Y - cy) < radius
        cell = (self.xs[1] - self.xs[0]) * (self.ys[1] - self.ys[0])
        return float(self.values[mask].sum() * cell / self.total)

    def local_maxima(self):
        """Grid points strictly above all eight neighbours."""
        v = np.pad(self.values, 1, constant_values=-np.inf)
        c = v[1:-1, 1:-1]
        peak = np.ones_like(c, dtype=bool)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx or dy:
                    peak &= c > v[1 + dx:v.shape[0] - 1 + dx, 1 + dy:v.shape[1] - 1 + dy]
        ix, iy = np.nonzero(peak)
        return [(self.xs[i], self.ys[j]) for i, j in zip(ix, iy)]


def density_of_vector(basis, vec, geometry: Geometry, resolution: int = 64) -> DensityGrid:
    """One-body density rho(r) = 2 int |Psi(r, r')|^2 dr' on cell centres."""
    L = geometry.L
    xs = (np.arange(resolution) + 0.5) * L / resolution
    M = pair_matrix(basis, vec)
    Dm = M @ M.T
    phi = orbitals_on_grid(basis.orbitals, xs, xs, L).reshape(len(basis.orbitals), -1)
    rho = 2.0 * np.einsum("pg,pq,qg->g", phi, Dm, phi).reshape(resolution, resolution)
    rho = np.maximum(rho, 0.0)
    total = float(rho.sum() * (L / resolution) ** 2)
    return DensityGrid(resolution, rho, total, xs, xs.copy())


def charge_density(spec: CiSpectrum, state_index: int, geometry: Geometry,
                   resolution: int = 64) -> DensityGrid:
    if not 0 <= state_index < len(spec.eigenvalues):
        raise InvalidArgument(f"state_index {state_index} outside the solved states")
    return density_of_vector(spec.basis, spec.eigenvectors[:, state_index], geometry, resolution)


# ---------------------------------------------------------------- full dot solve

@dataclass
class ManifoldStates:
    """Pair-basis vectors of the diagonal charge states.

    ``phi1_s``/``phi1_a`` are localised on corners a, c; ``phi2_s``/``phi2_a``
    on b, d. phi1_s = (S1 + S2)/sqrt(2) with the sign of S2 chosen so that holds.
    """

    phi1_s: np.ndarray
    phi2_s: np.ndarray
    phi1_a: np.ndarray
    phi2_a: np.ndarray
    s1: np.ndarray
    s2: np.ndarray


@dataclass
class DotSolution:
    geometry: Geometry
    material: Material
    n_max: int
    singlets: CiSpectrum
    triplets: CiSpectrum
    params: EffectiveParams
    manifold: ManifoldStates
    convergence: dict = field(default_factory=dict)


def _manifold_states(singlets, triplets):
    basis_s, basis_t = singlets.basis, triplets.basis
    d_s = diagonal_imbalance_orbital(basis_s.orbitals)
    i2 = _second_singlet_index(singlets)
    s1 = singlets.eigenvectors[:, 0]
    s2 = singlets.eigenvectors[:, i2]
    c = one_body_expectation(basis_s, d_s, s1, s2)
    if abs(c) < 1e-10:
        raise AlignmentFailure("ground and second singlet have no diagonal-charge coupling")
    s2 = s2 * np.sign(c)
    if triplets.parity is not None:
        par = [tuple(p) for p in triplets.parity]
        i_eo = par.index((0, 1))
        i_oe = par.index((1, 0))
        ta = triplets.eigenvectors[:, i_eo]
        tb = triplets.eigenvectors[:, i_oe]
        c = one_body_expectation(basis_t, d_s, ta, tb)
        if abs(c) < 1e-10:
            raise AlignmentFailure("degenerate triplets have no diagonal-charge coupling")
        tb = tb * np.sign(c)
        phi1_a = (ta + tb) / math.sqrt(2)
        phi2_a = (ta - tb) / math.sqrt(2)
    else:
        v = triplets.eigenvectors[:, :2]
        dmat = np.array([[one_body_expectation(basis_t, d_s, v[:, i], v[:, j]) for j in range(2)]
                         for i in range(2)])
        w, rot = np.linalg.eigh(dmat)
        phi2_a, phi1_a = v @ rot[:, 0], v @ rot[:, 1]
    return ManifoldStates((s1 + s2) / math.sqrt(2), (s1 - s2) / math.sqrt(2),
                          phi1_a, phi2_a, s1, s2)


def solve_dot(geometry: Geometry, material: Material, n_max: int = 8, k_per_block: int = 6,
              check_convergence: bool = False, convergence_tol: float = 0.05) -> DotSolution:
    """Both spin sectors, effective parameters and the diagonal charge states.

    With ``check_convergence`` the solve is repeated at n_max - 2 and the
    relative change of Delta reported; changes above ``convergence_tol`` mark
    the result as unconverged.
    """
    singlets = solve_sector(SYMMETRIC, geometry, material, n_max, k_per_block)
    triplets = solve_sector(ANTISYMMETRIC, geometry, material, n_max, k_per_block)
    params = extract_effective_params(singlets, triplets)
    manifold = _manifold_states(singlets, triplets)
    conv = {}
    if check_convergence and n_max > 3:
        try:
            small = extract_effective_params(
                solve_sector(SYMMETRIC, geometry, material, n_max - 2, k_per_block),
                solve_sector(ANTISYMMETRIC, geometry, material, n_max - 2, k_per_block))
            change = abs(params.Delta - small.Delta) / abs(params.Delta)
        except ManifoldInvalid:
            change = float("inf")
        conv = {"delta_rel_change": change, "reference_n_max": n_max - 2,
                "converged": bool(change <= convergence_tol)}
    return DotSolution(geometry, material, n_max, singlets, triplets, params, manifold, conv)


# ---------------------------------------------------------------- gated initialisation

@dataclass
class GatedInitialState:
    gate_potential: float  # meV
    alpha: float
    beta: float
    overlap_ideal: float


def initial_state_overlaps(manifold: ManifoldStates, gated_singlet, gated_triplet):
    """alpha, beta and |<psi~(0)|psi(0)>| for psi~ = (S~ psi- + T~ psi+)/sqrt(2).

    Phases of the gated states are aligned so that their overlaps with the
    a,c-localised charge states are positive.
    """
    cs = float(manifold.phi1_s @ gated_singlet)
    ct = float(manifold.phi1_a @ gated_triplet)
    if abs(cs) < 1e-6 or abs(ct) < 1e-6:
        raise AlignmentFailure(f"gated states barely overlap the a,c charge states ({cs:.2e}, {ct:.2e})")
    s = gated_singlet * np.sign(cs)
    t = gated_triplet * np.sign(ct)
    alpha = float(manifold.phi1_s @ s) / math.sqrt(2)
    beta = float(manifold.phi2_s @ s) / math.sqrt(2)
    overlap = 0.5 * (float(manifold.phi1_s @ s) + float(manifold.phi1_a @ t))
    return alpha, beta, abs(overlap)


def gated_initial_state(gate_potential: float, solution: DotSolution,
                        k_per_block: int = 2) -> GatedInitialState:
    """Initial state prepared by the quadrant gate (meV step on the b, d quadrants).

    The gated ground states of both spatial sectors are projected on the
    ungated diagonal charge states of ``solution``.
    """
    geo, mat, n_max = solution.geometry, solution.material, solution.n_max
    gs = solve_sector(SYMMETRIC, geo, mat, n_max, k_per_block, gate_potential=gate_potential)
    gt = solve_sector(ANTISYMMETRIC, geo, mat, n_max, k_per_block, gate_potential=gate_potential)
    alpha, beta, overlap = initial_state_overlaps(solution.manifold, gs.eigenvectors[:, 0],
                                                  gt.eigenvectors[:, 0])
    return GatedInitialState(gate_potential, alpha, beta, overlap)
