"""Physical constants in the meV / s / K unit system used throughout."""

#: Boltzmann constant (meV/K).
K_B = 0.08617333262

#: Reduced Planck constant (meV s).
HBAR = 6.582119569e-13

#: Planck constant (meV s); an energy of ``nu`` GHz is ``nu * 1e9 * H_PLANCK`` meV.
H_PLANCK = 4.135667696e-12


def ghz_to_mev(nu_ghz):
    """Convert a frequency in GHz to an energy in meV."""
    return nu_ghz * 1e9 * H_PLANCK
