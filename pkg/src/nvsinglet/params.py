"""Model parameters and their calibration from first-principles inputs.

All energies are in meV, spin-orbit couplings in GHz.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .exceptions import FitError, ParameterError

#: Jahn-Teller energy of the closed-shell |xx> configuration (meV).
E_JT_XX = 316.0
#: Effective E-phonon quantum from the |xx> potential energy surface (meV).
HBAR_OMEGA_E = 66.1
#: Weight of the (ee) singlet in the correlated shelving state.
C2_DEFAULT = 0.9
#: Alternative coupling (meV) used for comparison runs.  It does not satisfy
#: ``jahn_teller_energy(F, 66.1, 0.9) == 316``.
F_ALTERNATIVE = 102.47
#: Singlet zero-phonon line (meV).
ZPL_SINGLET = 1190.0
#: Axial spin-orbit coupling (GHz).
LAMBDA_Z = 15.78


def _check_finite(**values):
    for name, v in values.items():
        if not np.isfinite(v):
            raise ParameterError(f"{name} must be finite, got {v!r}")


def jahn_teller_energy(F, hbar_omega_E, C2):
    """Static Jahn-Teller energy of the combined PJT + DJT coupling."""
    return (C2 * 2 * F + (1 - C2) * F) ** 2 / (2 * hbar_omega_E)


def derive_coupling_F(E_JT, hbar_omega_E, C2):
    """Invert :func:`jahn_teller_energy` for the linear coupling ``F``.

    >>> round(derive_coupling_F(316.0, 66.1, 0.9), 2)
    107.57
    """
    _check_finite(E_JT=E_JT, hbar_omega_E=hbar_omega_E, C2=C2)
    if E_JT < 0:
        raise ParameterError(f"E_JT must be >= 0, got {E_JT}")
    if hbar_omega_E <= 0:
        raise ParameterError(f"hbar_omega_E must be > 0, got {hbar_omega_E}")
    if not 0 <= C2 <= 1:
        raise ParameterError(f"C2 must lie in [0, 1], got {C2}")
    return math.sqrt(2 * hbar_omega_E * E_JT) / (1 + C2)


def derive_correlation_C2(s, p, tol=1e-9):
    """Correlation weight ``C^2 = 1 - 2 p^2 s^2`` from orbital overlaps.

    ``p`` and ``s`` are the amplitudes of the ``e_x`` and ``a`` orbitals in
    the distorted Kohn-Sham orbital.
    """
    _check_finite(s=s, p=p)
    if p * p + s * s > 1 + tol:
        raise ParameterError(f"p^2 + s^2 = {p * p + s * s} exceeds 1")
    C2 = 1 - 2 * p * p * s * s
    if not -tol <= C2 <= 1 + tol:
        raise ParameterError(f"C2 = {C2} outside [0, 1]")
    return min(max(C2, 0.0), 1.0)


def huang_rhys_factor(R):
    """Huang-Rhys factor ``S = R^2 / 2`` for a dimensionless displacement."""
    _check_finite(R=R)
    if R < 0:
        raise ParameterError(f"R must be >= 0, got {R}")
    return R * R / 2


@dataclass(frozen=True)
class ModelParams:
    """Calibrated scalars of the singlet vibronic model.

    Attributes
    ----------
    hbar_omega_E : float
        E-phonon quantum (meV).
    F : float
        Dynamic Jahn-Teller linear coupling (meV); the PJT coupling is ``2F``.
    C2 : float
        Weight of the (ee) ``1E`` configuration in the correlated singlet.
    Lambda_e : float
        Purely electronic ``1E``-``1A1`` gap (meV).
    lambda_z, lambda_perp : float
        Axial and transverse spin-orbit couplings (GHz).
    Sigma : float
        Singlet-triplet gap between the shelving state and the ground triplet (meV).
    N_max : int
        Phonon truncation ``n_x + n_y <= N_max``; 0 leaves the three bare
        electronic levels.
    d_perp : float
        Orbital transition dipole unit (relative intensities only).
    zpl_singlet : float
        Target singlet ZPL used when fitting ``Lambda_e`` (meV).
    """

    hbar_omega_E: float = HBAR_OMEGA_E
    F: float = derive_coupling_F(E_JT_XX, HBAR_OMEGA_E, C2_DEFAULT)
    C2: float = C2_DEFAULT
    Lambda_e: float = 1129.4
    lambda_z: float = LAMBDA_Z
    lambda_perp: float = 1.2 * LAMBDA_Z
    Sigma: float = 385.4
    N_max: int = 10
    d_perp: float = 1.0
    zpl_singlet: float = ZPL_SINGLET

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, (int, float, np.integer, np.floating)):
                raise ParameterError(f"{f.name} must be a number, got {v!r}")
            _check_finite(**{f.name: v})
        if not 0 <= self.C2 <= 1:
            raise ParameterError(f"C2 must lie in [0, 1], got {self.C2}")
        if self.hbar_omega_E <= 0:
            raise ParameterError(f"hbar_omega_E must be > 0, got {self.hbar_omega_E}")
        if int(self.N_max) != self.N_max or self.N_max < 0:
            raise ParameterError(f"N_max must be a non-negative integer, got {self.N_max}")
        object.__setattr__(self, "N_max", int(self.N_max))
        for name in ("F", "Lambda_e", "lambda_z", "lambda_perp", "Sigma", "zpl_singlet"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)


def without_djt(params):
    """Same pseudo Jahn-Teller coupling ``2 C^2 F`` with the DJT term removed."""
    return params.replace(C2=1.0, F=params.C2 * params.F)


def fit_electronic_gap(target_zpl, params, xtol=0.05):
    """Find ``Lambda_e`` whose vibronic ZPL equals ``target_zpl``.

    The ZPL grows monotonically with the electronic gap, so plain bisection on
    ``[0, 2 * target_zpl]`` is used.

    Returns
    -------
    float
        The fitted gap (meV), bracketed to ``xtol``.
    """
    from .vibronic import solve, zpl_energy

    _check_finite(target_zpl=target_zpl)
    if target_zpl <= 0:
        raise ParameterError(f"target_zpl must be > 0, got {target_zpl}")

    def residual(lam):
        return zpl_energy(solve(params.replace(Lambda_e=lam))) - target_zpl

    lo, hi = 0.0, 2.0 * target_zpl
    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo == 0:
        return lo
    if r_lo * r_hi > 0:
        raise FitError(
            f"no bracket for Lambda_e in [{lo}, {hi}]: ZPL residuals {r_lo:.3f}, {r_hi:.3f}"
        )
    return bisect(residual, lo, hi, xtol=xtol)
