"""Physical constants (CODATA 2018, exact SI definitions where available).

Every other module takes its constants from here.
"""

import math

import numpy as np

CODATA_VERSION = "CODATA-2018"

h = 6.62607015e-34  # J s, exact
e = 1.602176634e-19  # C, exact
k_B = 1.380649e-23  # J/K, exact
hbar = h / (2.0 * math.pi)
Phi0 = h / (2.0 * e)  # magnetic flux quantum, Wb
R_Q = h / (4.0 * e * e)  # superconducting resistance quantum, ohm
reduced_Phi0 = Phi0 / (2.0 * math.pi)

# unit helpers (value in SI = value_in_unit * factor)
meV = 1e-3 * e
ueV = 1e-6 * e
GHz = 1e9
MHz = 1e6
kHz = 1e3
nm = 1e-9
um = 1e-6
cm2_per_s = 1e-4
nH = 1e-9
pH = 1e-12
mT = 1e-3


def dbm_to_watt(p_dbm):
    """Convert power in dBm to watts. Works on scalars and arrays."""
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watt_to_dbm(p_w):
    return 10.0 * np.log10(p_w) + 30.0
