"""Published GaAs dot parameters used as inputs and comparison values.

Columns: side length (nm), Delta (meV), J (meV), |alpha|^2, |beta|^2 and the
hyperfine energy E_hf (micro-eV).
"""

from __future__ import annotations

from dataclasses import dataclass

from .ci import EffectiveParams


@dataclass(frozen=True)
class ReferenceRow:
    L: float
    Delta: float
    J: float
    alpha_sq: float
    beta_sq: float
    E_hf: float

    def params(self) -> EffectiveParams:
        return EffectiveParams.from_delta_j(self.Delta, self.J)


TABLE = (
    ReferenceRow(100.0, 0.814, -0.243, 0.441, 5.23e-2, 1.74),
    ReferenceRow(200.0, 0.145, -4.363e-2, 0.445, 3.63e-5, 0.776),
    ReferenceRow(400.0, 2.11e-2, -5.05e-3, 0.420, 1.21e-3, 0.388),
    ReferenceRow(800.0, 2.08e-3, -2.20e-4, 0.453, 2.78e-4, 0.194),
    ReferenceRow(1600.0, 9.34e-5, -1.66e-6, 0.490, 6.02e-6, 0.0969),
)


def row(L: float) -> ReferenceRow:
    for r in TABLE:
        if r.L == L:
            return r
    raise KeyError(f"no reference row for L={L}")
