import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from squaredot import effective as eff
from squaredot import noise as nz
from squaredot.ci import EffectiveParams
from squaredot.constants import UEV
from squaredot.errors import InvalidArgument

P400 = EffectiveParams.from_delta_j(2.11e-2, -5.05e-3)


def test_zero_field_samples():
    b1, b2 = nz.sample_overhauser(nz.NoiseConfig(E_hf=0.0), np.random.default_rng(1))
    assert not b1.any() and not b2.any()


@pytest.mark.parametrize("mode,expected", [("rms", 1.0), ("per_component", 3.0)])
def test_field_variance(mode, expected):
    cfg = nz.NoiseConfig(E_hf=0.5, variance_mode=mode)
    rng = np.random.default_rng(12)
    sq = np.array([np.sum(nz.sample_overhauser(cfg, rng)[0] ** 2) for _ in range(100_000)])
    assert sq.mean() == pytest.approx(expected * 0.25, rel=0.02)


def test_sampling_determinism():
    a = nz.sample_fields(nz.NoiseConfig(E_hf=1.0, samples=50, seed=5))
    b = nz.sample_fields(nz.NoiseConfig(E_hf=1.0, samples=50, seed=5))
    c = nz.sample_fields(nz.NoiseConfig(E_hf=1.0, samples=50, seed=6))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    # shot i does not depend on how many shots are drawn
    assert np.array_equal(nz.sample_fields(nz.NoiseConfig(E_hf=1.0, samples=10, seed=5)), a[:10])


def test_config_validation():
    with pytest.raises(InvalidArgument):
        nz.NoiseConfig(E_hf=-1.0)
    with pytest.raises(InvalidArgument):
        nz.NoiseConfig(samples=0)
    with pytest.raises(InvalidArgument):
        nz.NoiseConfig(variance_mode="total")


def two_spin_reference(b1, b2):
    """(1/2)(b1.s1 + b2.s2) in the basis psi-, psi+, uu, dd, built independently."""
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0, -1.0])
    I = np.eye(2)
    H = sum(0.5 * (b1[k] * np.kron(s, I) + b2[k] * np.kron(I, s)) for k, s in enumerate((sx, sy, sz)))
    uu, ud, du, dd = np.eye(4)
    U = np.column_stack([(ud - du) / math.sqrt(2), (ud + du) / math.sqrt(2), uu, dd])
    return U.conj().T @ H @ U


def test_zero_fields_give_bare_hamiltonian():
    H = nz.build_noisy_hamiltonian(P400, np.zeros((2, 3)))
    assert np.array_equal(H, eff.hamiltonian_matrix(P400))


def test_uniform_z_field_keeps_singlet_block():
    H = nz.build_noisy_hamiltonian(P400, np.array([[0, 0, 0.7], [0, 0, 0.7]]))
    H0 = eff.hamiltonian_matrix(P400)
    assert np.allclose(H[:4, :4], H0[:4, :4], atol=1e-15)


@settings(max_examples=50)
@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_zeeman_matches_two_spin_brute_force(vals):
    b = np.array(vals).reshape(2, 3)
    Z = nz.zeeman_matrix(b) / UEV
    ref = two_spin_reference(b[0], b[1])
    for c in (0, 1):
        assert np.allclose(Z[c::2, c::2], ref, atol=1e-12)
    assert np.allclose(Z[0::2, 1::2], 0)


def test_opposite_z_fields_couple_singlet_and_t0():
    b = 0.3
    Z = nz.zeeman_matrix(np.array([[0, 0, b], [0, 0, -b]])) / UEV
    assert Z[0, 2] == pytest.approx(b)  # (1/2) * 2b
    assert Z[0, 0] == pytest.approx(0.0)


def test_closed_system_limit():
    ts = np.linspace(0, 4 * eff.t_star(P400), 201)
    rho = nz.evolve_lindblad(eff.product_initial_state(), P400, t=ts)
    psi = eff.evolve_ideal(eff.product_initial_state(), P400, ts)
    ref = np.einsum("ti,tj->tij", psi, psi.conj())
    assert np.max(np.abs(rho - ref)) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 0.2), st.floats(0, 2.0), st.integers(0, 1000))
def test_cptp_contract(gamma, ehf, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho0 = A @ A.conj().T
    rho0 /= np.trace(rho0)
    b = rng.normal(size=(2, 3)) * ehf * 10
    out = nz.evolve_lindblad(rho0, P400, b, gamma, t=[10.0, 60.0])
    nz.check_density_matrix(out)


def test_strong_dephasing_quarter():
    ts = eff.t_star(P400)
    for gt in (50, 500):
        rho = nz.evolve_lindblad(eff.product_initial_state(), P400, dephasing_rate=gt / ts, t=ts)
        assert np.trace(rho @ eff.charge_projector(True)).real == pytest.approx(0.25, abs=1e-6)


def test_population_operator_freezes_instead():
    # detuning noise suppresses tunnelling, so the 1/4 limit needs the tunnelling channel
    ts = eff.t_star(P400)
    rho = nz.evolve_lindblad(eff.product_initial_state(), P400, dephasing_rate=200 / ts, t=ts,
                             operator="population")
    assert np.trace(rho @ eff.charge_projector(True)).real < 0.02


def test_monotone_dephasing():
    t = 0.7 * eff.t_star(P400)
    coh = [abs(nz.evolve_lindblad(eff.product_initial_state(), P400, dephasing_rate=g, t=t)[0, 1])
           for g in (0.0, 0.001, 0.01, 0.05, 0.2)]
    assert all(a >= b - 1e-12 for a, b in zip(coh, coh[1:]))


def test_step_size_guard():
    with pytest.raises(InvalidArgument):
        nz.evolve_lindblad(eff.product_initial_state(), P400, t=100.0, dt=50.0)
    rho = nz.evolve_lindblad(eff.product_initial_state(), P400, t=30.0, check_step=True)
    nz.check_density_matrix(rho)


def test_uniform_field_invariance():
    ts = np.linspace(0, 2 * eff.t_star(P400), 41)
    a = nz.evolve_lindblad(eff.product_initial_state(), P400, t=ts)
    b = nz.evolve_lindblad(eff.product_initial_state(), P400, np.array([[0, 0, 5.0], [0, 0, 5.0]]), t=ts)
    pa = np.einsum("tii->t", a[:, 1::2, 1::2]).real
    pb = np.einsum("tii->t", b[:, 1::2, 1::2]).real
    assert np.allclose(pa, pb, atol=1e-9)


def test_noiseless_ensemble_is_analytic():
    ts = np.linspace(0, 2 * eff.t_star(P400), 51)
    c = nz.ensemble_filter_curve(P400, nz.NoiseConfig(samples=3), ts)
    assert np.allclose(c.mean, eff.p_singlet(ts, P400), atol=1e-10)
    assert c.first_max_time == pytest.approx(eff.t_star(P400))


def test_ensemble_reproducible_and_rk4_path_agrees():
    ts = np.linspace(0, 2 * eff.t_star(P400), 21)
    cfg = nz.NoiseConfig(E_hf=2.0, samples=40, seed=9)
    a = nz.ensemble_filter_curve(P400, cfg, ts)
    b = nz.ensemble_filter_curve(P400, cfg, ts)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.stderr, b.stderr)
    # an infinitesimal dephasing rate switches to the integrator
    c = nz.ensemble_filter_curve(P400, nz.NoiseConfig(E_hf=2.0, samples=40, seed=9,
                                                      dephasing_rate=1e-12), ts)
    assert np.allclose(a.mean, c.mean, atol=1e-8)


def test_coherence_variance_modes():
    a = nz.hyperfine_coherence(nz.NoiseConfig(E_hf=1.0, samples=4000, seed=1))
    b = nz.hyperfine_coherence(nz.NoiseConfig(E_hf=1.0, samples=4000, seed=1, variance_mode="rms"))
    assert a.decay_time == pytest.approx(a.expected, rel=0.05)
    # same draws scaled by 1/sqrt(3); the fit window differs slightly in units of tau
    assert b.decay_time / a.decay_time == pytest.approx(math.sqrt(3), rel=5e-3)


def test_repeat_until_success_cases():
    ideal = nz.NoiseConfig()
    t = nz.repeat_until_success(P400, ideal, "triplet", 4)
    assert t.round_detection == [0.0] * 4
    s = nz.repeat_until_success(P400, ideal, "singlet", 3)
    assert s.round_detection[0] == pytest.approx(1.0, abs=1e-9)
    assert s.cumulative_miss[0] == pytest.approx(0.0, abs=1e-9)
    prod = nz.repeat_until_success(P400, ideal, "product", 3)
    assert prod.round_detection[0] == pytest.approx(0.5, abs=1e-9)
    strong = nz.NoiseConfig(dephasing_rate=100 / eff.t_star(P400))
    r = nz.repeat_until_success(P400, strong, "product", 5)
    assert r.round_detection[0] == pytest.approx(0.25, abs=1e-6)
    assert np.allclose(r.cumulative_miss, 0.5 ** np.arange(1, 6), atol=1e-6)
    r = nz.repeat_until_success(P400, strong, "singlet", 4)
    assert np.allclose(r.conditional_detection, 0.5, atol=1e-6)
    with pytest.raises(InvalidArgument):
        nz.repeat_until_success(P400, ideal, "product", 0)


def test_povm_summary():
    ideal = nz.povm_from_noise(P400, nz.NoiseConfig())
    assert ideal.p_ss == pytest.approx(1.0, abs=1e-9) and ideal.p_ts == 0.0
    noisy = nz.povm_from_noise(P400, nz.NoiseConfig(dephasing_rate=100 / eff.t_star(P400)), rounds=2)
    assert noisy.p_ss == pytest.approx(0.75, abs=1e-6)
    assert noisy.p_ts == pytest.approx(0.0, abs=1e-12)
