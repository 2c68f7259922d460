"""Optical lineshapes of the singlet pair and phonon spectral functions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve
from scipy.stats import gamma as gamma_dist
from scipy.stats import poisson

from .exceptions import ParameterError, SymmetryError
from .vibronic import SIGMA_X, SIGMA_Z, VibronicEigensystem

#: Gaussian widths (standard deviations, meV) of the ZPL, first and second
#: vibronic bands of the emission spectrum; later bands reuse the last width.
PL_SMEARING = (2.0, 5.0, 10.0)
ABS_SMEARING = 1.5


@dataclass
class SpectrumGrid:
    """Intensity on a uniform energy grid measured from the ZPL (meV)."""

    energy: np.ndarray
    intensity: np.ndarray

    def __post_init__(self):
        self.energy = np.asarray(self.energy, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.energy.shape != self.intensity.shape:
            raise ValueError("energy and intensity shapes differ")
        if np.any(np.diff(self.energy) <= 0):
            raise ValueError("energy grid must be strictly increasing")
        if not np.all(np.isfinite(self.intensity)) or np.any(self.intensity < 0):
            raise ValueError("intensities must be finite and non-negative")

    @property
    def step(self):
        return float(self.energy[1] - self.energy[0])

    def normalized(self, value):
        return SpectrumGrid(self.energy, self.intensity / value)

    def local_maxima(self, emin=-np.inf, emax=np.inf):
        y = self.intensity
        k = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1
        e = self.energy[k]
        return e[(e >= emin) & (e <= emax)]


def energy_grid(emin=-20.0, emax=400.0, step=0.1):
    n = int(round((emax - emin) / step))
    return emin + step * np.arange(n + 1)


@dataclass
class SpectralFunction:
    """Density on the grid ``x_k = k * step`` (meV), ``k = 0 .. len-1``.

    Masses are Riemann sums ``sum(density) * step``; with that convention the
    discrete convolution conserves mass exactly.
    """

    step: float
    density: np.ndarray

    def __post_init__(self):
        self.density = np.asarray(self.density, dtype=float)
        if self.step <= 0:
            raise ValueError("step must be positive")
        if np.any(self.density < 0) or not np.all(np.isfinite(self.density)):
            raise ValueError("density must be finite and non-negative")

    @property
    def energy(self):
        return self.step * np.arange(len(self.density))

    @property
    def mass(self):
        return float(self.density.sum() * self.step)

    def mean(self):
        return float(np.sum(self.energy * self.density) * self.step / self.mass)

    def std(self):
        m = self.mean()
        return float(np.sqrt(np.sum((self.energy - m) ** 2 * self.density) * self.step / self.mass))

    def support_end(self, rel=1e-14):
        nz = np.flatnonzero(self.density > rel * self.density.max())
        return int(nz[-1]) if len(nz) else 0

    def padded(self, length):
        if length <= len(self.density):
            return self
        return SpectralFunction(self.step, np.pad(self.density, (0, length - len(self.density))))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.energy, self.density, left=0.0, right=0.0)


def _one_phonon(step, emax, shape):
    x = step * np.arange(int(np.ceil(emax / step)) + 1)
    dens = shape(x)
    dens[0] = 0.0
    dens = np.clip(dens, 0, None)
    return SpectralFunction(step, dens / (dens.sum() * step))


def gaussian_density(center, fwhm, step=0.1, emax=None):
    """Gaussian one-phonon density cut at zero energy and renormalized."""
    if fwhm <= 0:
        raise ParameterError("fwhm must be positive")
    sigma = fwhm / (2 * np.sqrt(2 * np.log(2)))
    emax = center + 8 * sigma if emax is None else emax
    return _one_phonon(step, emax, lambda x: np.exp(-0.5 * ((x - center) / sigma) ** 2))


def gamma_density(mean, std, step=0.1, emax=None):
    """Gamma-shaped one-phonon density with the given mean and spread.

    Positive support with a high-energy tail; its maximum sits ``std**2/mean``
    below the mean.
    """
    if mean <= 0 or std <= 0:
        raise ParameterError("mean and std must be positive")
    k, theta = (mean / std) ** 2, std**2 / mean
    emax = mean + 12 * std if emax is None else emax
    return _one_phonon(step, emax, lambda x: gamma_dist.pdf(x, k, scale=theta))


def delta_function(step, length=1):
    d = np.zeros(max(length, 1))
    d[0] = 1.0 / step
    return SpectralFunction(step, d)


def autoconvolve(S_E: SpectralFunction, n: int) -> SpectralFunction:
    """``n``-fold self-convolution, ``S^(0)`` being unit mass at the origin.

    The grid is extended as needed to hold the full ``n``-fold support.
    """
    return autoconvolution_series(S_E, n)[n]


def autoconvolution_series(S_E: SpectralFunction, n_max: int):
    """``[S^(0), S^(1), ..., S^(n_max)]`` on one shared, extended grid."""
    if n_max < 0 or int(n_max) != n_max:
        raise ValueError(f"n must be a non-negative integer, got {n_max}")
    end = S_E.support_end()
    length = max(len(S_E.density), n_max * end + 1)
    base = S_E.density[: end + 1]
    out = [delta_function(S_E.step, length)]
    cur = out[0].density[:1]
    for _ in range(int(n_max)):
        cur = np.clip(fftconvolve(cur, base)[: length] * S_E.step, 0, None)
        out.append(SpectralFunction(S_E.step, np.pad(cur, (0, length - len(cur)))))
    return out


# ---------------------------------------------------------------------------
# emission


def dipole_operator(polarization, d_perp=1.0):
    """Electronic transition dipole on ``(|xx>, |xy>, |yy>)``."""
    if polarization == "x":
        return 2 * d_perp * SIGMA_Z
    if polarization == "y":
        return 2 * d_perp * SIGMA_X
    raise ValueError(f"polarization must be 'x' or 'y', got {polarization!r}")


@dataclass
class PLLine:
    energy: float  # below the ZPL, meV
    intensity: float
    label: str
    states: tuple


def pl_lines(eig: VibronicEigensystem, polarization="x", d_perp=1.0, emitter=None):
    """Emission lines from the lowest upper-manifold A1 state.

    Each line connects the emitter to one degenerate level of the lower
    manifold; its intensity is ``|<emitter| d (x) 1 |level>|^2`` summed over
    the degenerate states.  Energies are measured from the ZPL, so the line
    sits at ``E(level) - E(ground doublet)``.
    """
    if eig.labels is None:
        raise SymmetryError("pl_lines needs a symmetry-labelled eigensystem")
    D = np.kron(dipole_operator(polarization, d_perp), np.eye(eig.basis.size))
    src = eig.ground_A1_index if emitter is None else emitter
    amp = eig.vectors.T @ (D @ eig.vectors[:, src])
    e0 = eig.energies[eig.ground_E_index]
    lines = []
    for energy, label, ks in eig.levels(mask=eig.lower):
        lines.append(PLLine(energy - e0, float(np.sum(amp[list(ks)] ** 2)), label, ks))
    return lines


def pl_spectrum(eig, smearing=PL_SMEARING, polarization="x", d_perp=1.0, grid=None):
    """Gaussian-broadened emission spectrum normalized to a unit ZPL line.

    The k-th level of the lower manifold (k = 0 is the ZPL, k = 1 the first
    vibronic level, ...) is broadened with ``smearing[k]``; levels beyond the
    list reuse its last width.
    """
    grid = energy_grid() if grid is None else np.asarray(grid, dtype=float)
    lines = pl_lines(eig, polarization, d_perp)
    zpl = lines[0].intensity
    if zpl <= 0:
        raise SymmetryError("ZPL carries no intensity")
    y = np.zeros_like(grid)
    for k, ln in enumerate(lines):
        sig = smearing[min(k, len(smearing) - 1)]
        y += ln.intensity / zpl * _gauss(grid, ln.energy, sig)
    return SpectrumGrid(grid, y)


def _gauss(x, mu, sigma):
    return np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))


# ---------------------------------------------------------------------------
# absorption


def hr_weights(S, cutoff=1e-8, n_max=None):
    """Poisson weights ``exp(-S) S^n / n!`` up to the first below ``cutoff``."""
    if S < 0 or not np.isfinite(S):
        raise ParameterError(f"Huang-Rhys factor must be >= 0, got {S}")
    if n_max is None:
        n_max = int(max(poisson.isf(cutoff, S), 0)) + 1 if S > 0 else 0
    w = poisson.pmf(np.arange(n_max + 1), S)
    keep = np.flatnonzero(w >= cutoff)
    return w[: keep[-1] + 1] if len(keep) else w[:1]


def hr_absorption(S, hbar_omega_eff, smearing=ABS_SMEARING, grid=None, one_phonon=None):
    """Huang-Rhys absorption sideband above the ZPL.

    Without ``one_phonon`` the ``n``-phonon line sits at ``n * hbar_omega_eff``.
    With a :class:`SpectralFunction` the ``n``-phonon term is its ``n``-fold
    autoconvolution instead (the function should have mean ``hbar_omega_eff``).
    Everything is finally broadened by a Gaussian of width ``smearing``.
    """
    grid = energy_grid() if grid is None else np.asarray(grid, dtype=float)
    w = hr_weights(S)
    y = w[0] * _gauss(grid, 0.0, smearing)
    if one_phonon is None:
        for n, wn in enumerate(w[1:], start=1):
            y += wn * _gauss(grid, n * hbar_omega_eff, smearing)
    else:
        series = autoconvolution_series(one_phonon, len(w) - 1)
        side = sum(wn * series[n].density for n, wn in enumerate(w) if n > 0)
        x = series[0].energy
        kern_x = np.arange(-int(6 * smearing / one_phonon.step), int(6 * smearing / one_phonon.step) + 1)
        kern = _gauss(kern_x * one_phonon.step, 0.0, smearing) * one_phonon.step
        side = np.convolve(side, kern, mode="same")
        y += np.interp(grid, x, side, left=0.0, right=0.0)
    return SpectrumGrid(grid, np.clip(y, 0, None))
