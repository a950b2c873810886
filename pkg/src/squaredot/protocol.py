"""Measurement-based protocols on chains of singlet pairs.

N dots are fed by N + 1 singlet pairs on qubits (0,1), (2,3), ..., (2N, 2N+1).
Dot k (1-based) receives qubits 2k-1 and 2k and performs a singlet/triplet
measurement. Post-selecting all-singlet outcomes swaps entanglement onto the
terminal pair (0, 2N+1); post-selecting all-triplet outcomes leaves each dot
holding a spin-1 and the chain in the AKLT valence-bond state with spin-1/2
ends.

States are kept as tensors of shape (2,) * (2N + 2), qubit 0 first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .errors import InvalidArgument, ResourceLimit
from .noise import PovmSummary

MAX_DOTS = 10
SINGLET = "singlet"
TRIPLET = "triplet"
PSI_MINUS = np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0)


@dataclass(frozen=True)
class ChainConfig:
    n_dots: int = 1
    trials: int = 10_000
    mode: str = "swap"  # or "aklt"
    dot_povm: PovmSummary = PovmSummary.ideal()
    seed: int = 0
    confidence: float = 0.99
    keep_samples: int = 10

    def __post_init__(self):
        if self.n_dots < 1:
            raise InvalidArgument("n_dots must be >= 1")
        if self.n_dots > MAX_DOTS:
            raise ResourceLimit(f"n_dots={self.n_dots} exceeds the state-vector limit {MAX_DOTS}")
        if self.trials < 1:
            raise InvalidArgument("trials must be >= 1")
        if self.mode not in ("swap", "aklt"):
            raise InvalidArgument("mode must be 'swap' or 'aklt'")


@dataclass
class ChainOutcome:
    outcomes: list  # true per-dot results
    reported: list  # what the (possibly noisy) detector reported
    success: bool
    post_state: np.ndarray | None
    fidelity: float


# ---------------------------------------------------------------- state algebra

def singlet_chain(n_dots: int) -> np.ndarray:
    n = 2 * n_dots + 2
    psi = PSI_MINUS.reshape(2, 2)
    out = psi
    for _ in range(n_dots):
        out = np.multiply.outer(out, psi)
    return out.reshape((2,) * n).astype(complex)


def _pair_axes_last(psi, i, j):
    return np.moveaxis(psi, (i, j), (-2, -1))


def project_pair(psi, i, j, outcome):
    """P_s or P_t = 1 - P_s on qubits (i, j), unnormalised."""
    moved = _pair_axes_last(psi, i, j)
    c = (moved[..., 0, 1] - moved[..., 1, 0]) / math.sqrt(2.0)
    ps = c[..., None, None] * PSI_MINUS.reshape(2, 2)
    if outcome == SINGLET:
        res = ps
    elif outcome == TRIPLET:
        res = moved - ps
    else:
        raise InvalidArgument(f"outcome must be {SINGLET!r} or {TRIPLET!r}")
    return np.moveaxis(res, (-2, -1), (i, j))


def dot_qubits(k):
    return 2 * k - 1, 2 * k


def terminal_density(psi) -> np.ndarray:
    """Reduced 4x4 density matrix of qubits (0, last)."""
    n = psi.ndim
    m = np.moveaxis(psi, (0, n - 1), (0, 1)).reshape(4, -1)
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


def singlet_fidelity(rho) -> float:
    return float(np.real(PSI_MINUS @ rho @ PSI_MINUS))


class BranchCache:
    """Normalised post-measurement states keyed by the tuple of true outcomes."""

    def __init__(self, n_dots):
        self.n_dots = n_dots
        self._states = {(): (1.0, singlet_chain(n_dots))}

    def get(self, prefix):
        prefix = tuple(prefix)
        if prefix not in self._states:
            p_parent, parent = self.get(prefix[:-1])
            i, j = dot_qubits(len(prefix))
            v = project_pair(parent, i, j, prefix[-1])
            w = float(np.vdot(v, v).real)
            self._states[prefix] = (w, v / math.sqrt(w) if w > 0 else v)
        return self._states[prefix]

    def conditional(self, prefix, outcome):
        """p(outcome at the next dot | prefix)."""
        return self.get(tuple(prefix) + (outcome,))[0]

    def branch_probability(self, outcomes):
        p = 1.0
        for k in range(len(outcomes)):
            p *= self.conditional(outcomes[:k], outcomes[k])
        return p


def trial_rng(seed, trial):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


def _report(true, povm: PovmSummary, u):
    p_rep_s = povm.p_ss if true == SINGLET else povm.p_ts
    return SINGLET if u < p_rep_s else TRIPLET


def _simulate(cache: BranchCache, povm: PovmSummary, rng):
    n = cache.n_dots
    u = rng.random(2 * n)
    true, rep = [], []
    for k in range(n):
        p_s = cache.conditional(true, SINGLET)
        t = SINGLET if u[2 * k] < p_s else TRIPLET
        true.append(t)
        rep.append(_report(t, povm, u[2 * k + 1]))
    return true, rep


# ---------------------------------------------------------------- swapping

def swap_once(dot_povm: PovmSummary, rng: np.random.Generator, cache: BranchCache | None = None) -> ChainOutcome:
    cache = cache or BranchCache(1)
    true, rep = _simulate(cache, dot_povm, rng)
    _, psi = cache.get(true)
    rho = terminal_density(psi)
    success = all(r == SINGLET for r in rep)
    return ChainOutcome(true, rep, success, rho, singlet_fidelity(rho))


@dataclass
class SwapChainResult:
    n_dots: int
    trials: int
    successes: int
    rate: float
    theory: float
    terminal_fidelity: float  # mean over successful trials
    ideal_branch_fidelity: float
    samples: list = field(default_factory=list)


def run_swap_chain(config: ChainConfig) -> SwapChainResult:
    """Sequential measurement of all dots; success means every dot reported singlet."""
    cache = BranchCache(config.n_dots)
    successes = 0
    fid_sum = 0.0
    samples = []
    for trial in range(config.trials):
        true, rep = _simulate(cache, config.dot_povm, trial_rng(config.seed, trial))
        ok = all(r == SINGLET for r in rep)
        if ok or len(samples) < config.keep_samples:
            _, psi = cache.get(true)
            rho = terminal_density(psi)
            f = singlet_fidelity(rho)
            if ok:
                successes += 1
                fid_sum += f
            if len(samples) < config.keep_samples:
                samples.append(ChainOutcome(true, rep, ok, rho, f))
    _, ideal = cache.get((SINGLET,) * config.n_dots)
    return SwapChainResult(
        n_dots=config.n_dots, trials=config.trials, successes=successes,
        rate=successes / config.trials, theory=0.25**config.n_dots,
        terminal_fidelity=fid_sum / successes if successes else float("nan"),
        ideal_branch_fidelity=singlet_fidelity(terminal_density(ideal)),
        samples=samples)


def postselected_terminal_state(n_dots: int, povm: PovmSummary):
    """Exact terminal state and rate when every dot reports singlet.

    Enumerates the 2^N true-outcome strings weighted by the detector's
    confusion probabilities.
    """
    cache = BranchCache(n_dots)
    rho = np.zeros((4, 4), dtype=complex)
    total = 0.0
    for bits in range(2**n_dots):
        s = tuple(SINGLET if (bits >> k) & 1 == 0 else TRIPLET for k in range(n_dots))
        w = cache.branch_probability(s)
        for x in s:
            w *= povm.p_ss if x == SINGLET else povm.p_ts
        if w > 0:
            rho += w * terminal_density(cache.get(s)[1])
            total += w
    return (rho / total if total > 0 else rho), total


# ---------------------------------------------------------------- AKLT

@dataclass
class AkltResult:
    n_dots: int
    trials: int
    successes: int
    rate: float
    theory: float
    branch_probability: float  # exact, from the projector chain
    state: np.ndarray  # normalised all-triplet state, shape (2,) * (2N + 2)
    energy: float


def run_aklt_chain(config: ChainConfig) -> AkltResult:
    """Post-select the all-triplet branch; report its rate, state and AKLT energy."""
    cache = BranchCache(config.n_dots)
    branch = (TRIPLET,) * config.n_dots
    successes = 0
    for trial in range(config.trials):
        _, rep = _simulate(cache, config.dot_povm, trial_rng(config.seed, trial))
        successes += all(r == TRIPLET for r in rep)
    p_exact = cache.branch_probability(branch)
    _, psi = cache.get(branch)
    return AkltResult(config.n_dots, config.trials, successes, successes / config.trials,
                      0.75**config.n_dots, p_exact, psi, aklt_energy(psi, config.n_dots))


def _spin_ops(n):
    """Total-spin components on n qubits."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex) / 2
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
    sz = np.array([[1, 0], [0, -1]], dtype=complex) / 2
    out = []
    for s in (sx, sy, sz):
        tot = np.zeros((2**n, 2**n), dtype=complex)
        for q in range(n):
            ops = [np.eye(2)] * n
            ops[q] = s
            m = ops[0]
            for o in ops[1:]:
                m = np.kron(m, o)
            tot += m
        out.append(tot)
    return out


def _total_spin_sq(n):
    return sum(o @ o for o in _spin_ops(n))


def spin2_projector() -> np.ndarray:
    """Projector on total spin 2 of four qubits (two spin-1 sites)."""
    S2 = _total_spin_sq(4)
    return S2 @ (S2 - 2 * np.eye(16)) / 24.0


def spin32_projector() -> np.ndarray:
    """Projector on total spin 3/2 of three qubits (a spin-1/2 and a spin-1)."""
    S2 = _total_spin_sq(3)
    return (S2 - 0.75 * np.eye(8)) / 3.0


_P2 = spin2_projector()
_P32 = spin32_projector()


def _local_expectation(psi, qubits, op):
    moved = np.moveaxis(psi, qubits, range(len(qubits)))
    m = moved.reshape(2 ** len(qubits), -1)
    return float(np.real(np.vdot(m, op @ m)))


def aklt_energy(state, n_dots: int, check_sites: bool = True, tol: float = 1e-8) -> float:
    """<H_AKLT> with spin-2 bond projectors and spin-3/2 boundary projectors.

    ``state`` has 2N + 2 qubits: boundary spin-1/2 at qubits 0 and 2N+1,
    spin-1 site k on the triplet-projected pair (2k-1, 2k).
    """
    psi = np.asarray(state, dtype=complex)
    n = 2 * n_dots + 2
    if psi.size != 2**n:
        raise InvalidArgument(f"state has {psi.size} amplitudes, expected 2^{n}")
    psi = psi.reshape((2,) * n)
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > 1e-10:
        raise InvalidArgument("state is not normalised")
    if check_sites:
        for k in range(1, n_dots + 1):
            s = project_pair(psi, *dot_qubits(k), SINGLET)
            if float(np.vdot(s, s).real) > tol:
                raise InvalidArgument(f"site {k} is not in the triplet (spin-1) subspace")
    e = _local_expectation(psi, (0, 1, 2), _P32)
    e += _local_expectation(psi, (n - 3, n - 2, n - 1), _P32)
    for k in range(1, n_dots):
        a, b = dot_qubits(k)
        c, d = dot_qubits(k + 1)
        e += _local_expectation(psi, (a, b, c, d), _P2)
    return e


# ---------------------------------------------------------------- statistics

def wilson_interval(successes, trials, confidence=0.99):
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence,
                                                              method="wilson")
    return float(ci.low), float(ci.high)


def estimate_success_prob(config: ChainConfig) -> dict:
    if config.trials < 100:
        raise InvalidArgument("need at least 100 trials for an interval estimate")
    res = run_swap_chain(config) if config.mode == "swap" else run_aklt_chain(config)
    lo, hi = wilson_interval(res.successes, res.trials, config.confidence)
    return {"mode": config.mode, "n_dots": config.n_dots, "trials": res.trials,
            "successes": res.successes, "empirical_rate": res.rate,
            "ci_low": lo, "ci_high": hi, "confidence": config.confidence,
            "theory": res.theory}
