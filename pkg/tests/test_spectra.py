import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm, poisson

from nvsinglet import params, spectra, vibronic
from nvsinglet.exceptions import ParameterError


@pytest.fixture(scope="module")
def eig():
    return vibronic.solve(params.ModelParams())


def test_dipole_strength_uncoupled():
    # <1E_x| d_x |1A1> = 2 d, so P = 4 d^2
    d = 0.7
    D = spectra.dipole_operator("x", d)
    ex = vibronic.TO_SYMMETRY_FRAME[0]
    a1 = vibronic.TO_SYMMETRY_FRAME[2]
    assert (ex @ D @ a1) ** 2 == pytest.approx(4 * d * d)
    ey = vibronic.TO_SYMMETRY_FRAME[1]
    assert (ey @ spectra.dipole_operator("y", d) @ a1) ** 2 == pytest.approx(4 * d * d)
    eig0 = vibronic.solve(params.ModelParams(F=0.0, N_max=2))
    lines = spectra.pl_lines(eig0, "x", d)
    assert lines[0].intensity == pytest.approx(4 * d * d)
    assert all(ln.intensity == pytest.approx(0.0, abs=1e-20) for ln in lines[1:])
    with pytest.raises(ValueError):
        spectra.dipole_operator("z")


def test_zpl_amplitude_from_coefficients(eig):
    # independent contraction in the (1E_x, 1E_y, 1A1) frame
    b = eig.basis
    frame = lambda k: vibronic.TO_SYMMETRY_FRAME @ eig.vectors[:, k].reshape(3, b.size)  # noqa: E731
    A = frame(eig.ground_A1_index)
    E = frame(eig.ground_E_index)
    amp = 2 * (A[2] @ E[0] + A[0] @ E[2])
    lines = spectra.pl_lines(eig, "x")
    # the ZPL line sums both partners; only the x partner couples to d_x
    assert lines[0].intensity == pytest.approx(amp**2, rel=1e-10)


def test_line_energies_are_level_differences(eig):
    lines = spectra.pl_lines(eig)
    e0 = eig.energies[eig.ground_E_index]
    for ln in lines:
        assert ln.energy == pytest.approx(eig.energies[ln.states[0]] - e0)
    assert lines[0].energy == 0.0
    assert np.all(np.diff([ln.energy for ln in lines]) > 0)


def test_polarization_isotropy(eig):
    tx = sum(ln.intensity for ln in spectra.pl_lines(eig, "x"))
    ty = sum(ln.intensity for ln in spectra.pl_lines(eig, "y"))
    assert tx == pytest.approx(ty, rel=1e-10)
    sx = spectra.pl_spectrum(eig, polarization="x")
    sy = spectra.pl_spectrum(eig, polarization="y")
    assert np.allclose(sx.intensity, sy.intensity, atol=1e-10)


def test_pl_spectrum_normalized_to_zpl(eig):
    spec = spectra.pl_spectrum(eig, smearing=(2.0,))
    peak = spec.intensity[np.argmin(np.abs(spec.energy))]
    assert peak == pytest.approx(1 / (2.0 * np.sqrt(2 * np.pi)), rel=1e-3)


def test_dark_a1_line(eig):
    a1 = eig.first_excited_A1_index
    lines = spectra.pl_lines(eig)
    dark = [ln for ln in lines if a1 in ln.states][0]
    assert dark.intensity / lines[0].intensity < 1e-3


def test_spectrum_grid_validation():
    with pytest.raises(ValueError):
        spectra.SpectrumGrid([0, 1], [1.0])
    with pytest.raises(ValueError):
        spectra.SpectrumGrid([1, 0], [1.0, 1.0])
    with pytest.raises(ValueError):
        spectra.SpectrumGrid([0, 1], [1.0, -1.0])
    g = spectra.SpectrumGrid([0, 1, 2, 3, 4], [0, 2, 1, 3, 0])
    assert list(g.local_maxima()) == [1, 3]
    assert list(g.local_maxima(2)) == [3]


@settings(max_examples=20, deadline=None)
@given(st.floats(20, 100), st.floats(5, 40), st.integers(0, 6))
def test_autoconvolution_mass(center, fwhm, n):
    S = spectra.gaussian_density(center, fwhm, step=0.2)
    Sn = spectra.autoconvolve(S, n)
    assert Sn.mass == pytest.approx(1.0, abs=1e-6)
    assert np.all(Sn.density >= 0)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_autoconvolution_gaussian_law(n):
    # far from zero the cut is negligible: S^(n) = N(n mu, sqrt(n) sigma)
    mu, fwhm, step = 66.1, 15.0, 0.05
    sig = fwhm / (2 * np.sqrt(2 * np.log(2)))
    Sn = spectra.autoconvolve(spectra.gaussian_density(mu, fwhm, step=step), n)
    assert Sn.mean() == pytest.approx(n * mu, abs=2 * step)
    assert Sn.std() == pytest.approx(np.sqrt(n) * sig, rel=1e-3)
    x = Sn.energy
    assert np.abs(Sn.density - norm.pdf(x, n * mu, np.sqrt(n) * sig)).max() < 1e-3


def test_autoconvolution_zero_is_delta():
    S = spectra.gaussian_density(66.1, 15.0)
    S0 = spectra.autoconvolve(S, 0)
    assert S0.density[0] * S0.step == pytest.approx(1.0)
    assert np.all(S0.density[1:] == 0)
    with pytest.raises(ValueError):
        spectra.autoconvolve(S, -1)


def test_series_matches_single():
    S = spectra.gamma_density(66.1, 20.0)
    series = spectra.autoconvolution_series(S, 4)
    single = spectra.autoconvolve(S, 3)
    assert np.allclose(series[3].density[: len(single.density)], single.density)


def test_gamma_density_moments():
    S = spectra.gamma_density(66.1, 30.0, step=0.05)
    assert S.mean() == pytest.approx(66.1, rel=2e-3)
    assert S.std() == pytest.approx(30.0, rel=5e-3)
    with pytest.raises(ParameterError):
        spectra.gamma_density(-1, 3)
    with pytest.raises(ParameterError):
        spectra.gaussian_density(60, 0)


def test_spectral_function_validation():
    with pytest.raises(ValueError):
        spectra.SpectralFunction(0.1, [1.0, -1.0])
    with pytest.raises(ValueError):
        spectra.SpectralFunction(0.0, [1.0])


@pytest.mark.parametrize("S", [0.0, 0.3, 0.845, 2.5])
def test_hr_weights_poisson(S):
    w = spectra.hr_weights(S)
    assert np.allclose(w, poisson.pmf(np.arange(len(w)), S))
    assert w.sum() == pytest.approx(1.0, abs=1e-7)


def test_hr_weights_reject():
    with pytest.raises(ParameterError):
        spectra.hr_weights(-0.1)


def test_absorption_zero_S_is_zpl_only():
    spec = spectra.hr_absorption(0.0, 66.1)
    assert list(spec.local_maxima()) == pytest.approx([0.0], abs=1e-9)
    assert spec.intensity[spec.energy > 15].max() < 1e-12


def test_absorption_discrete_lines():
    spec = spectra.hr_absorption(0.845, 66.1)
    maxima = spec.local_maxima()
    assert maxima[:3] == pytest.approx([0.0, 66.1, 132.2], abs=0.1)


def test_absorption_total_weight():
    one = spectra.gamma_density(66.1, 30.0, step=0.1)
    grid = spectra.energy_grid(-20, 800, 0.1)
    spec = spectra.hr_absorption(0.845, 66.1, grid=grid, one_phonon=one)
    assert spec.intensity.sum() * spec.step == pytest.approx(1.0, abs=1e-3)
