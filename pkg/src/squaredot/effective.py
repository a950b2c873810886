"""Charge-spin model of the eight-state ground manifold.

Basis ordering (0-based index = 2 * spin + charge):

    0 |1> ac, singlet     1 |2> bd, singlet
    2 |3> ac, T0          3 |4> bd, T0
    4 |5> ac, up-up       5 |6> bd, up-up
    6 |7> ac, down-down   7 |8> bd, down-down

Only the singlet tunnels between diagonals; the triplet charge states are
degenerate at E0. Energies in meV, times in ps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ci import EffectiveParams
from .constants import HBAR
from .errors import InvalidArgument, InvalidParams, UndefinedPostState

DIM = 8
LABELS = ("ac,S", "bd,S", "ac,T0", "bd,T0", "ac,T+", "bd,T+", "ac,T-", "bd,T-")
CHARGE_AT_B = np.array([1, 3, 5, 7])
NO_CHARGE_AT_B = np.array([0, 2, 4, 6])
SPIN_BLOCKS = ((0, 1), (2, 3), (4, 5), (6, 7))


def basis_state(k: int) -> np.ndarray:
    """|k> for k = 1..8."""
    if not 1 <= k <= DIM:
        raise InvalidArgument(f"basis label must be in 1..8, got {k}")
    v = np.zeros(DIM, dtype=complex)
    v[k - 1] = 1.0
    return v


def product_initial_state() -> np.ndarray:
    """(|1> + |3>)/sqrt(2): both electrons on a,c with opposite spins."""
    return (basis_state(1) + basis_state(3)) / math.sqrt(2)


def check_state(psi, tol=1e-12) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (DIM,):
        raise InvalidArgument(f"manifold state must have shape (8,), got {psi.shape}")
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise InvalidArgument("manifold state is not normalised")
    return psi


def hamiltonian_matrix(params: EffectiveParams) -> np.ndarray:
    """E0 - Delta (|1><2| + h.c.) + J (s1.s2 - 1/4) on the eight states."""
    H = params.E0 * np.eye(DIM, dtype=complex)
    H[0, 0] -= params.J
    H[1, 1] -= params.J
    H[0, 1] = H[1, 0] = -params.Delta
    return H


def evolve_ideal(initial, params: EffectiveParams, t) -> np.ndarray:
    """Closed-form e^{-iHt/hbar} applied to ``initial``.

    ``t`` may be an array; the result then has shape t.shape + (8,).
    """
    psi = np.asarray(initial, dtype=complex)
    t = np.asarray(t, dtype=float)
    w = params.Delta * t / HBAR
    c, s = np.cos(w), np.sin(w)
    ph_t = np.exp(-1j * params.E0 * t / HBAR)
    ph_s = ph_t * np.exp(1j * params.J * t / HBAR)
    out = np.empty(t.shape + (DIM,), dtype=complex)
    out[..., 0] = ph_s * (c * psi[0] + 1j * s * psi[1])
    out[..., 1] = ph_s * (1j * s * psi[0] + c * psi[1])
    out[..., 2:] = ph_t[..., None] * psi[2:]
    return out


def t_star(params: EffectiveParams) -> float:
    """Filtering time pi hbar / (2 Delta) in ps."""
    if not params.Delta > 0:
        raise InvalidParams(f"t* needs Delta > 0, got {params.Delta}")
    return math.pi * HBAR / (2.0 * params.Delta)


def p_singlet(t, params: EffectiveParams):
    """Population of |2> starting from the product state; independent of J."""
    return 0.5 * np.sin(params.Delta * np.asarray(t, dtype=float) / HBAR) ** 2


def p_initial(t, params: EffectiveParams):
    """Return probability to the product initial state."""
    t = np.asarray(t, dtype=float)
    c = np.cos(params.Delta * t / HBAR)
    return 0.25 * (1.0 + c**2 + 2.0 * np.cos(params.J * t / HBAR) * c)


def _alpha_beta(gated):
    if hasattr(gated, "alpha"):
        return float(gated.alpha), float(gated.beta)
    alpha, beta = gated
    return float(alpha), float(beta)


def p_singlet_gated(t, gated, params: EffectiveParams):
    """Singlet-detection probability for an imperfect gated initialisation.

    Implements (alpha sin(Delta t))^2 - 2 alpha beta sin(J t) sin(Delta t) + beta^2
    with hbar restored. ``gated`` is a GatedInitialState or an (alpha, beta) pair.
    """
    a, b = _alpha_beta(gated)
    t = np.asarray(t, dtype=float)
    sd = np.sin(params.Delta * t / HBAR)
    sj = np.sin(params.J * t / HBAR)
    return (a * sd) ** 2 - 2.0 * a * b * sj * sd + b**2


def p_singlet_gated_exact(t, gated, params: EffectiveParams):
    """|<2|psi(t)>|^2 for the manifold projection alpha|1> + beta|2> + ... of the gated state.

    Direct evaluation under the model Hamiltonian; differs from
    p_singlet_gated in the cross term.
    """
    a, b = _alpha_beta(gated)
    w = params.Delta * np.asarray(t, dtype=float) / HBAR
    return (a * np.sin(w)) ** 2 + (b * np.cos(w)) ** 2


def gated_first_maximum(gated, params: EffectiveParams, n_grid: int = 4001):
    """Maximum of p_singlet_gated over [0, 2 t*] and where it occurs (ps)."""
    ts = np.linspace(0.0, 2.0 * t_star(params), n_grid)
    p = p_singlet_gated(ts, gated, params)
    i = int(np.argmax(p))
    return float(p[i]), float(ts[i])


# ---------------------------------------------------------------- measurement

@dataclass
class MeasurementOutcome:
    detected_charge_at_b: bool
    probability: float
    _post: np.ndarray | None = None

    @property
    def post_state(self) -> np.ndarray:
        if self._post is None:
            raise UndefinedPostState(
                f"branch charge_at_b={self.detected_charge_at_b} has zero probability")
        return self._post


def charge_projector(at_b: bool) -> np.ndarray:
    P = np.zeros((DIM, DIM))
    idx = CHARGE_AT_B if at_b else NO_CHARGE_AT_B
    P[idx, idx] = 1.0
    return P


def measure_charge_at_b(state, params: EffectiveParams | None = None, tol: float = 1e-15):
    """Both branches of a single-corner charge detection at b.

    ``state`` is a normalised 8-vector or an 8x8 density matrix. Returns
    (charge_at_b, no_charge_at_b).
    """
    state = np.asarray(state, dtype=complex)
    out = []
    for at_b in (True, False):
        P = charge_projector(at_b)
        if state.ndim == 1:
            v = P @ state
            p = float(np.vdot(v, v).real)
            post = v / math.sqrt(p) if p > tol else None
        elif state.shape == (DIM, DIM):
            r = P @ state @ P
            p = float(np.trace(r).real)
            post = r / p if p > tol else None
        else:
            raise InvalidArgument(f"bad state shape {state.shape}")
        out.append(MeasurementOutcome(at_b, p, post))
    return out[0], out[1]
