"""Physical constants and package-wide defaults (SI units throughout)."""

import numpy as np
from scipy import constants as _sc

SPEED_OF_LIGHT = _sc.c                      # m/s
HBAR = _sc.hbar                             # J s
ELEMENTARY_CHARGE = _sc.e                   # C
BOHR_RADIUS = _sc.physical_constants["Bohr radius"][0]  # m

# Gyromagnetic ratio of a g ~ 2 ground-state ion (rad/s per tesla).
GYROMAGNETIC_RATIO = 2.0025 * _sc.physical_constants["Bohr magneton"][0] / HBAR

# Default drive wavelength for both standing waves (m).
DEFAULT_WAVELENGTH = 2052e-9

# Default strong-drive amplitude on the dipole-coupled wave (V/m).
DEFAULT_PNC_AMPLITUDE = 1.5e6

# Default ratio of optical frequency to quadrupole Rabi frequency.
DEFAULT_OMEGA_OVER_RABI = 1.5e9

# Default relative coupling strength of the polarization-induced
# quadrupole systematic compared to the parity-odd shift.
DEFAULT_COUPLING_RATIO = 1e7

XHAT = np.array([1.0, 0.0, 0.0])
YHAT = np.array([0.0, 1.0, 0.0])
ZHAT = np.array([0.0, 0.0, 1.0])
