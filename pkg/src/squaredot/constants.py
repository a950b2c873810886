"""Physical constants and unit conventions.

Energies are in meV, lengths in nm, times in ps. This module is the only place
where SI values are converted into those units.
"""

HBAR = 0.6582119569  # meV ps
# hbar^2 / (2 m_e) in meV nm^2 (CODATA 2018: 3.80998212 eV Angstrom^2)
HBAR2_OVER_2ME = 38.0998212
# e^2 / (4 pi eps_0) in meV nm
COULOMB_VACUUM = 1439.964548

GAAS_MASS_RATIO = 0.067
GAAS_DIELECTRIC = 12.9

UEV = 1e-3  # 1 micro-eV in meV
