"""Phonon-assisted intersystem crossing from the shelving singlet to the ground triplet."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, K_B, ghz_to_mev
from .exceptions import OutOfSupportWarning, ParameterError, TruncationError
from .spectra import SpectralFunction, autoconvolution_series, gaussian_density
from .vibronic import CoefficientTable, VibronicEigensystem

#: Default one-phonon density width (FWHM, meV).
SE_FWHM = 66.0


def default_spectral_function(params, fwhm=SE_FWHM, step=0.1):
    """Gaussian one-phonon density at ``hbar_omega_E``."""
    return gaussian_density(params.hbar_omega_E, fwhm, step=step)


@dataclass(frozen=True)
class RateSet:
    """ISC rates (MHz) towards ms=0 (``Gamma_z``) and ms=+-1 (the other two)."""

    Gamma_z: float
    Gamma_plus: float
    Gamma_minus: float

    def __post_init__(self):
        for name in ("Gamma_z", "Gamma_plus", "Gamma_minus"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    @property
    def Gamma_perp(self):
        return self.Gamma_plus + self.Gamma_minus

    @property
    def total(self):
        return self.Gamma_z + self.Gamma_perp

    @property
    def lifetime_ns(self):
        return 1e3 / self.total if self.total > 0 else float("inf")

    @property
    def ratio(self):
        """``Gamma_z / Gamma_perp``."""
        return self.Gamma_z / self.Gamma_perp if self.Gamma_perp > 0 else float("inf")

    def as_row(self):
        return (self.Gamma_z, self.Gamma_plus, self.Gamma_minus, self.lifetime_ns)


class OverlapFunction:
    """``F(Sigma) = sum_n w_n S^(n)(Sigma)`` (1/meV).

    ``series`` may be shared between overlap functions built from the same
    one-phonon density.
    """

    def __init__(self, weights, S_E: SpectralFunction, series=None):
        self.weights = np.asarray(weights, dtype=float)
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")
        n_max = len(self.weights) - 1
        if series is None or len(series) <= n_max:
            series = autoconvolution_series(S_E, n_max)
        self.step = S_E.step
        self.table = sum(w * series[n].density for n, w in enumerate(self.weights))
        if np.isscalar(self.table):
            self.table = np.zeros(len(series[0].density))
        self.energy = self.step * np.arange(len(self.table))

    @property
    def emax(self):
        return float(self.energy[-1])

    def total_weight(self):
        return float(self.table.sum() * self.step)

    def __call__(self, Sigma):
        Sigma = np.asarray(Sigma, dtype=float)
        outside = (Sigma < 0) | (Sigma > self.emax)
        if np.any(outside):
            warnings.warn(
                f"overlap function evaluated outside [0, {self.emax:.1f}] meV; returning 0",
                OutOfSupportWarning,
                stacklevel=2,
            )
        return np.interp(Sigma, self.energy, self.table, left=0.0, right=0.0)


def overlap_function(coeff_sums, S_E: SpectralFunction, series=None):
    """Build ``F`` from ``{n: weight}`` (mapping or sequence indexed by ``n``)."""
    if isinstance(coeff_sums, dict):
        n_max = max(coeff_sums) if coeff_sums else 0
        w = np.zeros(n_max + 1)
        for n, v in coeff_sums.items():
            w[n] = v
    else:
        w = np.asarray(coeff_sums, dtype=float)
    return OverlapFunction(w, S_E, series)


@dataclass
class OverlapFunctions:
    """``F_E`` (from d), ``F_E'`` (from c) and ``F_E''`` (from f)."""

    F_E: OverlapFunction
    F_E1: OverlapFunction
    F_E2: OverlapFunction


def overlap_functions(coeffs: CoefficientTable, state, S_E, series=None):
    n_max = coeffs.weights.shape[-1] - 1
    if series is None:
        series = autoconvolution_series(S_E, n_max)
    z, plus, minus = coeffs.channel_weights(state)
    return OverlapFunctions(*(OverlapFunction(w, S_E, series) for w in (z, plus, minus)))


def prefactors(params):
    """Rate prefactors (MHz meV) of the z and perpendicular channels."""
    lz = ghz_to_mev(params.lambda_z)
    lp = ghz_to_mev(params.lambda_perp)
    pz = 8 * np.pi * lz**2 * params.C2 / HBAR * 1e-6
    pp = 2 * np.pi * (1 - params.C2) * lp**2 / HBAR * 1e-6
    return pz, pp


def _check_sigma(Sigma):
    s = np.asarray(Sigma, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise ParameterError("Sigma must be positive")


def _state(coeffs, state):
    return coeffs.ground_index if state is None else state


def _rates(Sigma, params, funcs: OverlapFunctions):
    pz, pp = prefactors(params)
    return pz * funcs.F_E(Sigma), pp * funcs.F_E1(Sigma), pp * funcs.F_E2(Sigma)


def isc_rates(Sigma, params, coeffs: CoefficientTable, S_E, state=None, funcs=None) -> RateSet:
    """Low-temperature rates from the ground ``1E~`` doublet at gap ``Sigma``.

    ``state`` selects the eigenstate whose coefficients are used; by default
    the ground doublet recorded in ``coeffs``.
    """
    _check_sigma(Sigma)
    if funcs is None:
        funcs = overlap_functions(coeffs, _state(coeffs, state), S_E)
    gz, gp, gm = _rates(float(Sigma), params, funcs)
    return RateSet(float(gz), float(gp), float(gm))


@dataclass
class ScanTable:
    """Column-oriented rate table over one scanned variable."""

    variable: str
    values: np.ndarray
    Gamma_z: np.ndarray
    Gamma_plus: np.ndarray
    Gamma_minus: np.ndarray

    @property
    def total(self):
        return self.Gamma_z + self.Gamma_plus + self.Gamma_minus

    @property
    def lifetime_ns(self):
        with np.errstate(divide="ignore"):
            return np.where(self.total > 0, 1e3 / np.where(self.total > 0, self.total, 1), np.inf)

    @property
    def ratio(self):
        perp = self.Gamma_plus + self.Gamma_minus
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(perp > 0, self.Gamma_z / np.where(perp > 0, perp, 1), np.inf)

    def rates(self, i):
        return RateSet(float(self.Gamma_z[i]), float(self.Gamma_plus[i]), float(self.Gamma_minus[i]))

    def rows(self):
        for i, v in enumerate(self.values):
            yield (float(v), *self.rates(i).as_row())


def sigma_scan(sigmas, params, coeffs, S_E, state=None) -> ScanTable:
    """Rates at every gap in ``sigmas`` (vectorized; order-independent)."""
    sigmas = np.asarray(sigmas, dtype=float)
    _check_sigma(sigmas)
    funcs = overlap_functions(coeffs, _state(coeffs, state), S_E)
    gz, gp, gm = _rates(sigmas, params, funcs)
    return ScanTable("Sigma_meV", sigmas, gz, gp, gm)


def find_crossings(values, curve, target):
    """Linearly interpolated abscissae where ``curve`` crosses ``target``."""
    values = np.asarray(values, dtype=float)
    r = np.asarray(curve, dtype=float) - target
    out = []
    for i in range(len(r) - 1):
        if r[i] == 0:
            out.append(float(values[i]))
        elif r[i] * r[i + 1] < 0:
            t = r[i] / (r[i] - r[i + 1])
            out.append(float(values[i] + t * (values[i + 1] - values[i])))
    if len(r) and r[-1] == 0:
        out.append(float(values[-1]))
    return out


def lambda_ratio_scan(ratios, Sigma, params, coeffs, S_E, state=None) -> ScanTable:
    """Rates versus ``lambda_perp / lambda_z`` at fixed ``Sigma``."""
    _check_sigma(Sigma)
    ratios = np.asarray(ratios, dtype=float)
    funcs = overlap_functions(coeffs, _state(coeffs, state), S_E)
    rows = [
        _rates(Sigma, params.replace(lambda_perp=r * params.lambda_z), funcs) for r in ratios
    ]
    gz, gp, gm = (np.array(col, dtype=float) for col in zip(*rows))
    return ScanTable("lambda_ratio", ratios, gz, gp, gm)


def boltzmann_populations(energies, T):
    """Normalized Boltzmann weights of states at ``energies`` (meV) above the lowest."""
    e = np.asarray(energies, dtype=float)
    e = e - e.min()
    if T == 0:
        p = (e < 1e-6).astype(float)
    else:
        p = np.exp(-e / (K_B * T))
    return p / p.sum()


def thermal_rates(
    T,
    Sigma,
    params,
    eig: VibronicEigensystem,
    coeffs: CoefficientTable,
    S_E,
    n_levels=None,
    max_excluded=1e-4,
    series=None,
) -> RateSet:
    """Boltzmann-averaged rates over the vibronic levels of the ``1E~`` manifold.

    A state ``k`` at ``E_k`` above the ground doublet contributes its own
    rates evaluated at ``Sigma + E_k``, weighted by ``exp(-E_k / kT) / Z``.
    Degenerate partners are counted as separate states.

    Parameters
    ----------
    n_levels : int, optional
        Number of distinct lowest levels to include.  By default as many as
        needed to keep the discarded Boltzmann weight below ``max_excluded``.

    Raises
    ------
    TruncationError
        If the requested levels leave more than ``max_excluded`` weight out.
    """
    if not np.isfinite(T) or T < 0:
        raise ParameterError(f"temperature must be >= 0, got {T}")
    _check_sigma(Sigma)
    levels = eig.levels(mask=eig.lower)
    e0 = levels[0][0]
    all_states = np.concatenate([ks for _, _, ks in levels])
    all_p = boltzmann_populations(eig.energies[all_states], T)
    cum = np.cumsum([sum(all_p[np.isin(all_states, ks)]) for _, _, ks in levels])
    if n_levels is None:
        n_levels = int(np.searchsorted(cum, 1 - max_excluded) + 1)
        n_levels = min(n_levels, len(levels))
    excluded = float(1 - cum[n_levels - 1])
    if excluded > max_excluded:
        raise TruncationError(
            f"{n_levels} levels leave Boltzmann weight {excluded:.2e} > {max_excluded:.0e} at T={T} K",
            excluded,
        )

    states = np.concatenate([ks for _, _, ks in levels[:n_levels]])
    p = boltzmann_populations(eig.energies[states], T)
    if series is None:
        series = autoconvolution_series(S_E, coeffs.weights.shape[-1] - 1)
    total = np.zeros(3)
    for k, pk in zip(states, p):
        if pk == 0:
            continue
        funcs = overlap_functions(coeffs, k, S_E, series)
        shift = eig.energies[k] - e0
        total += pk * np.array(_rates(Sigma + shift, params, funcs), dtype=float)
    return RateSet(*map(float, total))


def temperature_scan(temperatures, Sigma, params, eig, coeffs, S_E, n_levels=None) -> ScanTable:
    series = autoconvolution_series(S_E, coeffs.weights.shape[-1] - 1)
    rows = [
        thermal_rates(T, Sigma, params, eig, coeffs, S_E, n_levels=n_levels, series=series).as_row()[:3]
        for T in temperatures
    ]
    gz, gp, gm = (np.array(c) for c in zip(*rows))
    return ScanTable("T_K", np.asarray(temperatures, dtype=float), gz, gp, gm)
