"""Two-electron square quantum dot: CI spectra, charge-spin manifold dynamics,
Overhauser/charge noise, and singlet-triplet filtering protocols."""

__version__ = "0.1.0"
