import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from squaredot.basis import Geometry, Material, energy_unit, orbitals_on_grid
from squaredot.ci import (ANTISYMMETRIC, SYMMETRIC, CiSpectrum, EffectiveParams, build_hamiltonian,
                          charge_density, coulomb_block, density_of_vector, extract_effective_params,
                          gated_initial_state, initial_state_overlaps, kinetic_block, make_basis,
                          solve_sector, solve_spectrum, spectrum_from_params)
from squaredot.errors import InvalidArgument, ManifoldInvalid
from squaredot.grid_oracle import grid_oracle_spectrum

FREE = Material(coulomb_prefactor=0.0)
V1111 = 4.758855187849277


def analytic_pair_energies(sector, n_max):
    e = sorted(n * n + m * m for n in range(1, n_max + 1) for m in range(1, n_max + 1))
    return e


@pytest.mark.parametrize("sector", [SYMMETRIC, ANTISYMMETRIC])
def test_noninteracting_spectrum_matches_box_sums(sector):
    geo = Geometry(70.0)
    basis = make_basis(sector, 5)
    H = build_hamiltonian(basis, geo, FREE)
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0
    K = energy_unit(geo, FREE)
    orbs = basis.orbitals
    e = [o.n**2 + o.m**2 for o in orbs]
    ref = sorted(K * (e[p] + e[q]) for p, q in basis.pairs)
    got = np.linalg.eigvalsh(H)
    assert np.allclose(got, ref, rtol=1e-10, atol=0)


def test_noninteracting_lowest_states():
    geo = Geometry(100.0)
    K = energy_unit(geo, FREE)
    s = solve_sector(SYMMETRIC, geo, FREE, n_max=4)
    t = solve_sector(ANTISYMMETRIC, geo, FREE, n_max=4)
    assert s.eigenvalues[0] == pytest.approx(4 * K, rel=1e-12)
    assert s.eigenvalues[1] == pytest.approx(7 * K, rel=1e-12)
    assert t.eigenvalues[:2] == pytest.approx([7 * K, 7 * K], rel=1e-12)


def test_single_pair_hamiltonian(gaas):
    geo = Geometry(100.0)
    basis = make_basis(SYMMETRIC, 1)
    H = build_hamiltonian(basis, geo, gaas)
    ref = 2 * 2 * energy_unit(geo, gaas) + gaas.coulomb_prefactor * V1111 / 100.0
    assert H.shape == (1, 1)
    assert H[0, 0] == pytest.approx(ref, rel=1e-12)


def test_zero_gate_is_no_gate(gaas):
    basis = make_basis(SYMMETRIC, 4)
    geo = Geometry(150.0)
    assert np.array_equal(build_hamiltonian(basis, geo, gaas, 0.0), build_hamiltonian(basis, geo, gaas))


def test_hamiltonian_exactly_symmetric(gaas):
    for sector in (SYMMETRIC, ANTISYMMETRIC):
        H = build_hamiltonian(make_basis(sector, 5), Geometry(120.0), gaas, gate_potential=7.0)
        assert np.array_equal(H, H.T)


def test_basis_sectors():
    s, a = make_basis(SYMMETRIC, 3), make_basis(ANTISYMMETRIC, 3)
    assert len(s) == 9 * 10 // 2 and len(a) == 9 * 8 // 2
    assert any(p == q for p, q in s.pairs)
    assert not any(p == q for p, q in a.pairs)


def test_scaling_decomposition(gaas):
    basis = make_basis(SYMMETRIC, 5)
    Ls = (40.0, 90.0, 310.0)
    Hs = [build_hamiltonian(basis, Geometry(L), gaas) for L in Ls]
    kin = energy_unit(Geometry(1.0), gaas) * kinetic_block(basis)
    coul = gaas.coulomb_prefactor * coulomb_block(basis)
    for L, H in zip(Ls, Hs):
        pred = kin / L**2 + coul / L
        assert np.max(np.abs(H - pred)) <= 1e-10 * np.max(np.abs(H))
    # rescaled blocks agree between two sizes
    a, b = Ls[0], Ls[1]
    c_a = (Hs[0] - kin / a**2) * a
    c_b = (Hs[1] - kin / b**2) * b
    assert np.max(np.abs(c_a - c_b)) <= 1e-10 * np.max(np.abs(c_a))


def test_small_dot_limit_is_first_order_coulomb(gaas):
    # as L -> 0 the kinetic term dominates and E - 4K -> C <11,11|1/r|11,11> / L
    L = 0.05
    geo = Geometry(L)
    e = solve_sector(SYMMETRIC, geo, gaas, n_max=6, k_per_block=1).eigenvalues[0]
    first = (e - 4 * energy_unit(geo, gaas)) * L / gaas.coulomb_prefactor
    assert first == pytest.approx(V1111, rel=2e-3)
    assert first < V1111


def test_variational_monotonicity(gaas):
    geo = Geometry(100.0)
    for sector in (SYMMETRIC, ANTISYMMETRIC):
        prev = None
        for n_max in (4, 6, 8):
            e = np.sort(solve_sector(sector, geo, gaas, n_max=n_max, k_per_block=3).eigenvalues)[:6]
            if prev is not None:
                assert np.all(e <= prev + 1e-10)
            prev = e


@pytest.mark.parametrize("L", [30.0, 100.0, 300.0])
def test_singlet_below_triplet(gaas, L):
    s = solve_sector(SYMMETRIC, Geometry(L), gaas, n_max=6, k_per_block=2)
    t = solve_sector(ANTISYMMETRIC, Geometry(L), gaas, n_max=6, k_per_block=2)
    assert s.eigenvalues[0] < t.eigenvalues[0]


def test_solver_rejects_bad_k():
    with pytest.raises(InvalidArgument):
        solve_spectrum(np.eye(3), 4)


def test_eigenvectors_orthonormal(dots):
    v = dots[200.0].singlets.eigenvectors
    assert np.max(np.abs(v.T @ v - np.eye(v.shape[1]))) < 1e-8


def test_grid_oracle_noninteracting_converges():
    geo = Geometry(50.0)
    exact = 4 * energy_unit(geo, FREE)
    errs = [abs(grid_oracle_spectrum(geo, FREE, G, k=1)[0] - exact) for G in (6, 10, 14)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] / exact < 2e-2


def test_grid_oracle_lieb_mattis(gaas):
    w, par = grid_oracle_spectrum(Geometry(50.0), gaas, 10, k=3, return_parity=True)
    assert par[0] == pytest.approx(1.0, abs=1e-8)
    assert par[1] == pytest.approx(-1.0, abs=1e-8)


# ---------------------------------------------------------------- effective parameters

def _spectra(es1, et, es2):
    s = CiSpectrum(SYMMETRIC, np.array([es1, es2]), np.eye(2), 2, np.zeros(2))
    t = CiSpectrum(ANTISYMMETRIC, np.array([et, et]), np.eye(2), 2, np.zeros(2))
    return s, t


def test_extract_symmetric_placement():
    p = extract_effective_params(*_spectra(-1.0, 0.0, 1.0))
    assert (p.Delta1, p.Delta2, p.Delta, p.J) == (1.0, 1.0, 1.0, 0.0)


def test_extract_table_row_100nm():
    p = EffectiveParams.from_delta_j(0.814, -0.243)
    back = extract_effective_params(*spectrum_from_params(p))
    assert back.Delta1 == pytest.approx(0.814 - 0.243)
    assert back.Delta2 == pytest.approx(0.814 + 0.243)
    assert back.J == pytest.approx(-0.243)


@settings(max_examples=200)
@given(st.floats(-5, 5), st.floats(1e-3, 2.0), st.floats(-0.9, 0.9))
def test_extract_round_trip(E0, Delta, jr):
    p = EffectiveParams.from_delta_j(Delta, jr * Delta, E0)
    back = extract_effective_params(*spectrum_from_params(p))
    for k in ("E0", "Delta1", "Delta2", "J", "Delta"):
        assert getattr(back, k) == pytest.approx(getattr(p, k), abs=1e-12)
    assert back.Delta == pytest.approx(0.5 * (back.Delta1 + back.Delta2), abs=1e-15)


def test_extract_rejects_split_triplets():
    s = CiSpectrum(SYMMETRIC, np.array([-1.0, 1.0]), np.eye(2), 2, np.zeros(2))
    t = CiSpectrum(ANTISYMMETRIC, np.array([0.0, 0.5]), np.eye(2), 2, np.zeros(2))
    with pytest.raises(ManifoldInvalid):
        extract_effective_params(s, t)


def test_dot_manifold_structure(dots):
    for L, sol in dots.items():
        p = sol.params
        assert p.Delta1 > 0 and p.Delta2 > 0
        assert p.J < 0
        t = sol.triplets.eigenvalues
        assert abs(t[1] - t[0]) <= max(1e-6, 1e-3 * p.Delta)
        assert p.gap_ratio > 1
        assert sol.convergence["converged"]


# ---------------------------------------------------------------- densities

def test_density_normalisation(dots):
    sol = dots[200.0]
    g = charge_density(sol.singlets, 0, sol.geometry, resolution=64)
    assert np.all(g.values >= 0)
    assert g.total == pytest.approx(2.0, abs=1e-3)
    fine = charge_density(sol.singlets, 0, sol.geometry, resolution=200)
    assert fine.total == pytest.approx(2.0, abs=1e-6)


def test_noninteracting_density_single_peak():
    geo = Geometry(100.0)
    s = solve_sector(SYMMETRIC, geo, FREE, n_max=4, k_per_block=1)
    g = charge_density(s, 0, geo, resolution=41)
    X, Y = np.meshgrid(g.xs, g.ys, indexing="ij")
    ref = 2 * (2 / 100.0) ** 2 * np.sin(np.pi * X / 100) ** 2 * np.sin(np.pi * Y / 100) ** 2
    assert np.allclose(g.values, ref, atol=1e-12)
    assert len(g.local_maxima()) == 1


def _quadrant_weights(g, L):
    X, Y = np.meshgrid(g.xs, g.ys, indexing="ij")
    lo_x, lo_y = X < L / 2, Y < L / 2
    ac = g.values[(lo_x & lo_y) | (~lo_x & ~lo_y)].sum()
    bd = g.values[(~lo_x & lo_y) | (lo_x & ~lo_y)].sum()
    return ac / (ac + bd), bd / (ac + bd)


def test_charge_states_localise_on_diagonals(dots):
    sol = dots[400.0]
    L = sol.geometry.L
    basis = sol.singlets.basis
    ac1, _ = _quadrant_weights(density_of_vector(basis, sol.manifold.phi1_s, sol.geometry), L)
    _, bd2 = _quadrant_weights(density_of_vector(basis, sol.manifold.phi2_s, sol.geometry), L)
    assert ac1 > 0.75 and bd2 > 0.75
    tb = sol.triplets.basis
    ac1t, _ = _quadrant_weights(density_of_vector(tb, sol.manifold.phi1_a, sol.geometry), L)
    assert ac1t > 0.75


# ---------------------------------------------------------------- gated initial state

def test_overlaps_of_ideal_states(dots):
    m = dots[200.0].manifold
    alpha, beta, overlap = initial_state_overlaps(m, m.phi1_s, m.phi1_a)
    assert alpha == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert beta == pytest.approx(0.0, abs=1e-12)
    assert overlap == pytest.approx(1.0, abs=1e-12)


def test_gated_state_trend(dots):
    sol = dots[200.0]
    weak = gated_initial_state(1.0, sol)
    strong = gated_initial_state(100.0, sol)
    for g in (weak, strong):
        assert g.alpha**2 + g.beta**2 <= 1 + 1e-12
        assert 0 <= g.overlap_ideal <= 1
        assert g.alpha > 0
    # a gate small against the excitation gap leaves the state inside the manifold
    assert abs(weak.alpha**2 - 0.5) < abs(strong.alpha**2 - 0.5)
    assert weak.overlap_ideal > strong.overlap_ideal
