"""Hyperfine and charge-noise dynamics of the ground manifold.

Quasi-static Overhauser fields: each electron sees its own Gaussian random
field, fixed during one shot and redrawn between shots. Field energies are in
micro-eV (the unit of the hyperfine scale E_hf) and enter the Hamiltonian as
(1/2) b_i . sigma_i, so a field energy equals the Zeeman splitting it causes.

Density matrices are propagated with a fixed-step RK4 integrator of the
Lindblad equation, vectorised over shots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from . import effective as eff
from .ci import EffectiveParams
from .constants import HBAR, UEV
from .errors import IntegratorFailure, InvalidArgument

VARIANCE_MODES = ("per_component", "rms")
DEPHASING_OPERATORS = ("tunnelling", "population")


@dataclass(frozen=True)
class NoiseConfig:
    E_hf: float = 0.0  # micro-eV
    dephasing_rate: float = 0.0  # 1/ps
    samples: int = 1000
    seed: int = 0
    field_model: str = "PerElectronStatic"
    # per_component: each Cartesian component has std E_hf; rms: std E_hf/sqrt(3)
    variance_mode: str = "per_component"
    dephasing_operator: str = "tunnelling"
    # keep only the z components of the fields (S-T0 physics)
    secular: bool = False

    def __post_init__(self):
        if not self.E_hf >= 0:
            raise InvalidArgument("E_hf must be >= 0")
        if not self.dephasing_rate >= 0:
            raise InvalidArgument("dephasing_rate must be >= 0")
        if self.samples < 1:
            raise InvalidArgument("samples must be >= 1")
        if self.variance_mode not in VARIANCE_MODES:
            raise InvalidArgument(f"variance_mode must be one of {VARIANCE_MODES}")
        if self.dephasing_operator not in DEPHASING_OPERATORS:
            raise InvalidArgument(f"dephasing_operator must be one of {DEPHASING_OPERATORS}")
        if self.field_model != "PerElectronStatic":
            raise InvalidArgument("only the PerElectronStatic field model is implemented")

    @property
    def component_std(self) -> float:
        if self.variance_mode == "per_component":
            return self.E_hf
        return self.E_hf / math.sqrt(3.0)


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    """Independent stream for one shot, derived from the master seed by counter."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(shot,)))


def sample_overhauser(config: NoiseConfig, rng: np.random.Generator):
    """One field vector (micro-eV) per electron."""
    b = rng.normal(0.0, 1.0, size=(2, 3)) * config.component_std
    if config.secular:
        b[:, :2] = 0.0
    return b[0], b[1]


def sample_fields(config: NoiseConfig, n: int | None = None) -> np.ndarray:
    """Fields for shots 0..n-1, shape (n, 2, 3)."""
    n = config.samples if n is None else n
    out = np.empty((n, 2, 3))
    for i in range(n):
        b1, b2 = sample_overhauser(config, shot_rng(config.seed, i))
        out[i, 0], out[i, 1] = b1, b2
    return out


# ---------------------------------------------------------------- operators

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# columns: psi-, psi+, up-up, down-down in the product basis uu, ud, du, dd
_SPIN_BASIS = np.array([
    [0, 0, 1, 0],
    [1, 1, 0, 0],
    [-1, 1, 0, 0],
    [0, 0, 0, 1],
], dtype=complex)
_SPIN_BASIS[:, :2] /= math.sqrt(2.0)


def pauli_manifold():
    """sigma_k of electron i as 8x8 matrices, array of shape (2, 3, 8, 8)."""
    I2 = np.eye(2)
    out = np.empty((2, 3, 8, 8), dtype=complex)
    for k, s in enumerate(_PAULI):
        for i, op in enumerate((np.kron(s, I2), np.kron(I2, s))):
            spin = _SPIN_BASIS.conj().T @ op @ _SPIN_BASIS
            out[i, k] = np.kron(spin, np.eye(2))  # index = 2 * spin + charge
    return out


_SIGMA = pauli_manifold()


def zeeman_matrix(fields) -> np.ndarray:
    """(1/2) sum_i b_i . sigma_i in meV for fields in micro-eV, shape (..., 2, 3)."""
    fields = np.asarray(fields, dtype=float)
    return 0.5 * UEV * np.einsum("...ik,ikab->...ab", fields, _SIGMA)


def build_noisy_hamiltonian(params: EffectiveParams, fields) -> np.ndarray:
    H0 = eff.hamiltonian_matrix(params)
    if fields is None:
        return H0
    if isinstance(fields, tuple):
        fields = np.stack(fields)
    return H0 + zeeman_matrix(fields)


def dephasing_operator(kind: str = "tunnelling") -> np.ndarray:
    """Jump operator of the charge-noise channel.

    tunnelling: |1><2| + |2><1|, fluctuations of the singlet tunnelling
    amplitude; drives the diagonal-charge coherence to the 1/4 limit.
    population: |1><1| - |2><2|, fluctuations of the diagonal detuning.
    """
    L = np.zeros((8, 8), dtype=complex)
    if kind == "tunnelling":
        L[0, 1] = L[1, 0] = 1.0
    elif kind == "population":
        L[0, 0], L[1, 1] = 1.0, -1.0
    else:
        raise InvalidArgument(f"unknown dephasing operator {kind!r}")
    return L


# ---------------------------------------------------------------- integrator

def _spread(H):
    """Largest |eigenvalue| (meV) of H with its mean diagonal removed."""
    Hs = H - np.trace(H, axis1=-2, axis2=-1)[..., None, None] / 8 * np.eye(8)
    return float(np.max(np.abs(np.linalg.eigvalsh(Hs)))) if Hs.size else 0.0


def default_dt(H, gamma, factor=0.005, damping_factor=0.05) -> float:
    """Step resolving the coherent frequencies finely and the decay rate coarsely
    (the dissipative part only needs RK4 stability and a few-percent accuracy)."""
    dt = factor * HBAR / max(_spread(H), 1e-30)
    if gamma > 0:
        dt = min(dt, damping_factor / gamma)
    return dt


def _lindblad_rhs(rho, H, gamma, L, LdL):
    comm = H @ rho - rho @ H
    d = (-1j / HBAR) * comm
    if gamma:
        d = d + gamma * (L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL))
    return d


def _rk4_grid(rho0, H, gamma, L, t_grid, dt):
    """States at each time of the sorted t_grid, shape (T,) + rho0.shape."""
    # a constant energy shift drops out of the commutator
    H = H - (np.trace(H, axis1=-2, axis2=-1).real / 8)[..., None, None] * np.eye(8)
    LdL = L.conj().T @ L
    out = np.empty((len(t_grid),) + rho0.shape, dtype=complex)
    rho = rho0.astype(complex)
    t_now = 0.0
    for k, t in enumerate(t_grid):
        span = t - t_now
        if span > 0:
            n = max(1, math.ceil(span / dt - 1e-9))
            h = span / n
            for _ in range(n):
                k1 = _lindblad_rhs(rho, H, gamma, L, LdL)
                k2 = _lindblad_rhs(rho + 0.5 * h * k1, H, gamma, L, LdL)
                k3 = _lindblad_rhs(rho + 0.5 * h * k2, H, gamma, L, LdL)
                k4 = _lindblad_rhs(rho + h * k3, H, gamma, L, LdL)
                rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t_now = t
        out[k] = rho
    return out


def check_density_matrix(rho, trace_tol=1e-10, herm_tol=1e-12, pos_tol=1e-9):
    rho = np.asarray(rho)
    tr = np.trace(rho, axis1=-2, axis2=-1)
    if np.max(np.abs(tr - 1.0)) > trace_tol:
        raise IntegratorFailure(f"trace drift {np.max(np.abs(tr - 1.0)):.2e}")
    herm = np.max(np.abs(rho - np.swapaxes(rho, -1, -2).conj()))
    if herm > herm_tol:
        raise IntegratorFailure(f"Hermiticity violated by {herm:.2e}")
    ev = np.linalg.eigvalsh(0.5 * (rho + np.swapaxes(rho, -1, -2).conj()))
    if ev.min() < -pos_tol:
        raise IntegratorFailure(f"negative eigenvalue {ev.min():.2e}")


def evolve_lindblad(rho, params: EffectiveParams, fields=None, dephasing_rate: float = 0.0,
                    t=0.0, dt: float | None = None, operator: str = "tunnelling",
                    check_step: bool = False):
    """rho(t) under the manifold Lindblad equation.

    ``t`` may be a scalar or a sorted array of times (states returned for each).
    ``fields`` of shape (n, 2, 3) evolve a batch of n shots at once. With
    ``check_step`` the run is repeated at dt/2 and IntegratorFailure raised if
    the two differ by more than 1e-8.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    H = build_noisy_hamiltonian(params, fields)
    if H.ndim == 3 and rho.ndim == 2:
        rho = np.broadcast_to(rho, H.shape).copy()
    L = dephasing_operator(operator)
    scalar = np.ndim(t) == 0
    t_grid = np.atleast_1d(np.asarray(t, dtype=float))
    if len(t_grid) and (t_grid.min() < 0 or np.any(np.diff(t_grid) < 0)):
        raise InvalidArgument("times must be non-negative and sorted")
    limit = 0.05 * HBAR / max(_spread(H), 1e-30)
    if dephasing_rate > 0:
        limit = min(limit, 0.5 / dephasing_rate)
    if dt is None:
        dt = default_dt(H, dephasing_rate)
    elif dt <= 0 or dt > limit:
        raise InvalidArgument(f"dt={dt} does not resolve the fastest scale (need <= {limit:.3g} ps)")
    if len(t_grid) and t_grid.max() > 0 and dt > t_grid.max():
        raise InvalidArgument("dt must not exceed t")
    out = _rk4_grid(rho, H, dephasing_rate, L, t_grid, dt)
    if check_step:
        half = _rk4_grid(rho, H, dephasing_rate, L, t_grid, dt / 2)
        err = float(np.max(np.abs(half - out))) if out.size else 0.0
        if err > 1e-8:
            raise IntegratorFailure(f"step-halving change {err:.2e} exceeds 1e-8")
        out = half
    if out.size:
        check_density_matrix(out)
    return out[0] if scalar else out


# ---------------------------------------------------------------- ensembles

@dataclass
class FilterCurve:
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    first_max_value: float
    first_max_time: float


def _unitary_population(H, psi0, t_grid, index, chunk=1000):
    """Per-shot population in ``index`` for pure-state evolution, shape (n, T)."""
    n = H.shape[0]
    out = np.empty((n, len(t_grid)))
    for s in range(0, n, chunk):
        E, V = np.linalg.eigh(H[s:s + chunk])
        c = np.einsum("nba,b->na", V.conj(), psi0)
        ph = np.exp(-1j * E[:, None, :] * t_grid[None, :, None] / HBAR)
        amp = np.einsum("nia,nta->nti", V[:, index, :], c[:, None, :] * ph)
        out[s:s + chunk] = np.sum(np.abs(amp) ** 2, axis=-1)
    return out


def _first_maximum(t, p):
    """First local maximum of a sampled curve (falls back to the global one)."""
    for i in range(1, len(p) - 1):
        if p[i] >= p[i - 1] and p[i] > p[i + 1]:
            return float(p[i]), float(t[i])
    i = int(np.argmax(p)) if len(p) else 0
    return (float(p[i]), float(t[i])) if len(p) else (float("nan"), float("nan"))


def ensemble_filter_curve(params: EffectiveParams, config: NoiseConfig, t_grid,
                          initial=None, dt: float | None = None, chunk: int = 500) -> FilterCurve:
    """Shot-averaged p(charge at b)(t) with standard errors.

    Noise-free dephasing (rate 0) uses exact per-shot diagonalisation; with
    dephasing the batched RK4 integrator runs chunk by chunk.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    psi0 = eff.product_initial_state() if initial is None else np.asarray(initial, dtype=complex)
    fields = sample_fields(config)
    H = build_noisy_hamiltonian(params, fields)
    if config.dephasing_rate == 0 and psi0.ndim == 1:
        p = _unitary_population(H, psi0, t_grid, eff.CHARGE_AT_B)
    else:
        rho0 = np.outer(psi0, psi0.conj()) if psi0.ndim == 1 else psi0
        L = dephasing_operator(config.dephasing_operator)
        step = dt if dt is not None else default_dt(H, config.dephasing_rate)
        p = np.empty((len(fields), len(t_grid)))
        for s in range(0, len(fields), chunk):
            h = H[s:s + chunk]
            rho = np.broadcast_to(rho0, h.shape).astype(complex)
            states = _rk4_grid(rho, h, config.dephasing_rate, L, t_grid, step)
            p[s:s + chunk] = np.einsum("tnii->nt", states[..., eff.CHARGE_AT_B, :][..., eff.CHARGE_AT_B]).real
    mean = p.mean(axis=0)
    n = p.shape[0]
    stderr = p.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
    v, tm = _first_maximum(t_grid, mean)
    return FilterCurve(t_grid, mean, stderr, v, tm)


@dataclass
class CoherenceFit:
    t: np.ndarray
    coherence: np.ndarray
    stderr: np.ndarray
    tau: float  # ps, C(t) ~ exp(-(t/tau)^2)
    decay_time: float  # ps, 2 pi tau
    expected: float  # ps, 2 pi hbar / E_hf


def hyperfine_coherence(config: NoiseConfig, t_grid=None) -> CoherenceFit:
    """Ensemble singlet-T0 coherence with the charge frozen and exchange off.

    A singlet on fixed corners precesses into T0 at the field-difference
    frequency; C(t) = 2 P_S(t) - 1 is averaged over shots and fitted to a
    Gaussian exp(-(t/tau)^2). The decay time is reported as 2 pi tau. Only the
    longitudinal field components enter: transverse ones would mix in the
    T+/T- states, which are degenerate with T0 when exchange is off.
    """
    if config.E_hf <= 0:
        raise InvalidArgument("hyperfine coherence needs E_hf > 0")
    expected = 2 * math.pi * HBAR / (config.E_hf * UEV)
    if t_grid is None:
        t_grid = np.linspace(0.0, 0.5 * expected, 201)
    t_grid = np.asarray(t_grid, dtype=float)
    frozen = EffectiveParams.from_delta_j(0.0, 0.0)
    fields = sample_fields(config)
    fields[:, :, :2] = 0.0
    H = build_noisy_hamiltonian(frozen, fields)
    pS = _unitary_population(H, eff.basis_state(1), t_grid, np.array([0, 1]))
    c = 2.0 * pS - 1.0
    mean = c.mean(axis=0)
    stderr = c.std(axis=0, ddof=1) / math.sqrt(len(c)) if len(c) > 1 else np.zeros_like(mean)
    tau0 = expected / (2 * math.pi)
    (tau,), _ = curve_fit(lambda t, tau: np.exp(-(t / tau) ** 2), t_grid, mean, p0=[tau0])
    tau = abs(float(tau))
    return CoherenceFit(t_grid, mean, stderr, tau, 2 * math.pi * tau, expected)


# ---------------------------------------------------------------- repeated filtering

INPUTS = ("singlet", "triplet", "product")


def _input_state(kind):
    if kind == "singlet":
        psi = eff.basis_state(1)
    elif kind == "triplet":
        psi = eff.basis_state(3)
    elif kind == "product":
        psi = eff.product_initial_state()
    else:
        raise InvalidArgument(f"input must be one of {INPUTS}")
    return np.outer(psi, psi.conj())


@dataclass
class RepeatRecord:
    input: str
    conditional_detection: list = field(default_factory=list)  # p(detect in round k | not before)
    round_detection: list = field(default_factory=list)  # unconditional p(first detection in round k)
    cumulative_miss: list = field(default_factory=list)  # undetected share of the singlet weight
    false_positive: list = field(default_factory=list)  # detected share of the triplet weight


def repeat_until_success(params: EffectiveParams, config: NoiseConfig, initial: str = "product",
                         max_rounds: int = 5, dt: float | None = None) -> RepeatRecord:
    """Rounds of evolve-to-t*, detect at b, continue on the no-detection branch.

    Each shot keeps its Overhauser field through all rounds. States are carried
    unnormalised so shot averages of branch weights are exact.
    """
    if max_rounds < 1:
        raise InvalidArgument("max_rounds must be >= 1")
    rho0 = _input_state(initial)
    singlet_w = float(rho0[0, 0].real + rho0[1, 1].real)
    triplet_w = 1.0 - singlet_w
    n = config.samples if config.E_hf > 0 else 1
    fields = sample_fields(config, n) if config.E_hf > 0 else np.zeros((1, 2, 3))
    H = build_noisy_hamiltonian(params, fields)
    L = dephasing_operator(config.dephasing_operator)
    step = dt if dt is not None else default_dt(H, config.dephasing_rate)
    ts = eff.t_star(params)
    Pb = eff.charge_projector(True)
    Pn = eff.charge_projector(False)
    Ps = np.diag([1.0, 1.0, 0, 0, 0, 0, 0, 0])
    rho = np.broadcast_to(rho0, H.shape).astype(complex)
    rec = RepeatRecord(initial)
    alive = 1.0
    det_s = det_t = 0.0
    for _ in range(max_rounds):
        rho = _rk4_grid(rho, H, config.dephasing_rate, L, np.array([ts]), step)[0]
        hit = Pb @ rho @ Pb
        p_hit = float(np.mean(np.trace(hit, axis1=1, axis2=2).real))
        s_hit = float(np.mean(np.trace(Ps @ hit, axis1=1, axis2=2).real))
        det_s += s_hit
        det_t += p_hit - s_hit
        rec.round_detection.append(p_hit)
        rec.conditional_detection.append(min(1.0, p_hit / alive) if alive > 1e-9 else 0.0)
        alive -= p_hit
        rec.cumulative_miss.append(max(0.0, 1.0 - det_s / singlet_w) if singlet_w > 0 else 0.0)
        rec.false_positive.append(det_t / triplet_w if triplet_w > 0 else 0.0)
        rho = Pn @ rho @ Pn
    return rec


@dataclass(frozen=True)
class PovmSummary:
    """Two-outcome singlet/triplet discrimination of one dot."""
    p_ss: float  # p(report singlet | singlet)
    p_ts: float  # p(report singlet | triplet)
    rounds: int = 1

    def __post_init__(self):
        for p in (self.p_ss, self.p_ts):
            if not 0.0 <= p <= 1.0:
                raise InvalidArgument("POVM probabilities must lie in [0, 1]")

    @classmethod
    def ideal(cls):
        return cls(1.0, 0.0, 1)


def povm_from_noise(params: EffectiveParams, config: NoiseConfig, rounds: int = 1) -> PovmSummary:
    """Singlet/triplet confusion probabilities of the filter after ``rounds``.

    Singlet input |1>; triplet input averaged over the three spin projections
    on the a,c diagonal.
    """
    s = repeat_until_success(params, config, "singlet", rounds)
    p_ss = 1.0 - s.cumulative_miss[-1]
    p_ts = 0.0
    for k in (3, 5, 7):
        rho0 = np.zeros((8, 8), dtype=complex)
        rho0[k - 1, k - 1] = 1.0
        p_ts += _triplet_detection(params, config, rho0, rounds) / 3.0
    return PovmSummary(min(1.0, max(0.0, p_ss)), min(1.0, max(0.0, p_ts)), rounds)


def _triplet_detection(params, config, rho0, rounds):
    n = config.samples if config.E_hf > 0 else 1
    fields = sample_fields(config, n) if config.E_hf > 0 else np.zeros((1, 2, 3))
    H = build_noisy_hamiltonian(params, fields)
    L = dephasing_operator(config.dephasing_operator)
    step = default_dt(H, config.dephasing_rate)
    ts = eff.t_star(params)
    Pb, Pn = eff.charge_projector(True), eff.charge_projector(False)
    rho = np.broadcast_to(rho0, H.shape).astype(complex)
    det = 0.0
    for _ in range(rounds):
        rho = _rk4_grid(rho, H, config.dephasing_rate, L, np.array([ts]), step)[0]
        det += float(np.mean(np.trace(Pb @ rho @ Pb, axis1=1, axis2=2).real))
        rho = Pn @ rho @ Pn
    return det
