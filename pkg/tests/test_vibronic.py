import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvsinglet import fock, params, vibronic
from nvsinglet.exceptions import ParameterError

SQ2 = np.sqrt(2.0)


def _oracle_hamiltonian(mp):
    """Element-by-element Hamiltonian, independent of the Kronecker assembly."""
    states = [(nx, n - nx) for n in range(mp.N_max + 1) for nx in range(n, -1, -1)]
    idx = {s: i for i, s in enumerate(states)}
    d = len(states)
    # electronic matrices on (xx, xy, yy), written out by hand
    gap = np.array([[0.5, 0, 0.5], [0, 0, 0], [0.5, 0, 0.5]])
    sz = np.array([[1, 0, 0], [0, 0, 0], [0, 0, -1.0]])
    sx = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0.0]]) / SQ2
    sbz = np.array([[0.5, 0, -0.5], [0, -1, 0], [-0.5, 0, 0.5]])
    sbx = -np.array([[0, 1, 0], [1, 0, -1], [0, -1, 0.0]]) / SQ2
    Mx = 2 * mp.C2 * mp.F * sz + (1 - mp.C2) * mp.F * sbz
    My = -(2 * mp.C2 * mp.F * sx + (1 - mp.C2) * mp.F * sbx)
    H = np.zeros((3 * d, 3 * d))
    for e in range(3):
        for f in range(3):
            for (nx, ny), j in idx.items():
                row = e * d
                col = f * d + j
                if nx + ny <= mp.N_max:
                    H[row + j, col] += mp.Lambda_e * gap[e, f]
                    if e == f:
                        H[row + j, col] += mp.hbar_omega_E * (nx + ny + 1)
                # <nx+1| x |nx> = sqrt((nx+1)/2) and its transpose
                for dn in (+1, -1):
                    tx, ty = (nx + dn, ny), (nx, ny + dn)
                    if tx in idx:
                        amp = np.sqrt(max(nx, tx[0]) / 2)
                        H[row + idx[tx], col] += Mx[e, f] * amp
                    if ty in idx:
                        amp = np.sqrt(max(ny, ty[1]) / 2)
                        H[row + idx[ty], col] += My[e, f] * amp
    return H


@pytest.mark.parametrize("N", [0, 1, 2])
@pytest.mark.parametrize("C2", [1.0, 0.9, 0.4])
def test_matches_elementwise_oracle(N, C2):
    mp = params.ModelParams(N_max=N, C2=C2, F=37.0, Lambda_e=300.0)
    H = vibronic.build_hamiltonian(mp)
    assert np.abs(H - _oracle_hamiltonian(mp)).max() < 1e-10
    e = vibronic.solve(mp).energies
    assert np.allclose(e, np.linalg.eigvalsh(_oracle_hamiltonian(mp)), atol=1e-10)


def test_hamiltonian_symmetric_and_trace():
    mp = params.ModelParams(N_max=5)
    H = vibronic.build_hamiltonian(mp)
    b = fock.build_basis(5)
    assert np.allclose(H, H.T)
    expected = mp.Lambda_e * b.size + 3 * mp.hbar_omega_E * np.sum(b.shell + 1)
    assert np.trace(H) == pytest.approx(expected)


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 150), st.floats(0, 1), st.floats(0, 1500))
def test_commutes_with_c3v(F, C2, lam):
    mp = params.ModelParams(N_max=4, F=F, C2=C2, Lambda_e=lam)
    H = vibronic.build_hamiltonian(mp)
    c3, sv = fock.symmetry_ops(fock.build_basis(4))
    scale = max(1.0, np.abs(H).max())
    assert np.abs(H @ c3 - c3 @ H).max() < 1e-10 * scale
    assert np.abs(H @ sv - sv @ H).max() < 1e-10 * scale


def test_djt_matrices_are_pauli_on_doublet():
    P = vibronic.TO_SYMMETRY_FRAME
    bz = P @ vibronic.SIGMA_BAR_Z @ P.T
    bx = P @ vibronic.SIGMA_BAR_X @ P.T
    assert np.allclose(bz, np.diag([1, -1, 0]))
    assert np.allclose(bx, [[0, -1, 0], [-1, 0, 0], [0, 0, 0]])


def test_uncoupled_ladder_degeneracy():
    mp = params.ModelParams(F=0.0, Lambda_e=0.0, N_max=5)
    e = vibronic.solve(mp).energies
    levels, counts = np.unique(np.round(e, 8), return_counts=True)
    n = np.arange(6)
    assert np.allclose(levels, mp.hbar_omega_E * (n + 1))
    assert list(counts) == list(3 * (n + 1))


def test_eigenvectors_orthonormal_and_labelled():
    eig = vibronic.solve(params.ModelParams(N_max=6))
    V = eig.vectors
    assert np.abs(V.T @ V - np.eye(len(V))).max() < 1e-8
    assert len(eig.labels) == len(eig.energies)
    # E states come in degenerate partner pairs
    for k, (lab, p) in enumerate(zip(eig.labels, eig.partners)):
        if lab == "E" and p == 0:
            assert eig.partners[k + 1] == 1
            assert eig.energies[k + 1] - eig.energies[k] < 1e-6


def test_eigenvectors_carry_their_irrep():
    mp = params.ModelParams(N_max=5)
    eig = vibronic.solve(mp)
    c3, sv = fock.symmetry_ops(eig.basis)
    P = fock.irrep_projectors(c3, sv)
    for k, lab in enumerate(eig.labels):
        v = eig.vectors[:, k]
        assert v @ P[lab] @ v == pytest.approx(1.0, abs=1e-8)
        if lab == "E":
            assert v @ sv @ v == pytest.approx(1.0 if eig.partners[k] == 0 else -1.0, abs=1e-8)


def test_default_structure():
    eig = vibronic.solve(params.ModelParams())
    assert len(eig) == 198
    assert eig.ground_E_index == 0
    assert eig.labels[:2] == ("E", "E")
    assert eig.labels[eig.ground_A1_index] == "A1"
    assert not eig.lower[eig.ground_A1_index]
    levels = eig.levels(mask=eig.lower)
    assert levels[0][1] == "E" and len(levels[0][2]) == 2


def test_truncation_convergence():
    # ground doublet, dark A1 level and first vibronic E pair
    e9 = vibronic.solve(params.ModelParams(N_max=9)).energies[:5]
    e10 = vibronic.solve(params.ModelParams(N_max=10)).energies[:5]
    assert np.abs(e10 - e9).max() < 0.1


def test_perturbative_admixture():
    # weak pure PJT coupling F~ = 2 C2 F = 10 meV
    mp = params.ModelParams(C2=1.0, F=5.0, Lambda_e=1129.4, N_max=4)
    eig = vibronic.solve(mp)
    k = eig.ground_E_index
    b = eig.basis
    amp = np.einsum("e,ej->j", vibronic.TO_SYMMETRY_FRAME[2], eig.vectors[:, k].reshape(3, b.size))
    exact = abs(amp[b.index[(1, 0)]])
    approx = vibronic.perturbative_pjt(2 * mp.C2 * mp.F, mp.Lambda_e, mp.hbar_omega_E)
    assert exact == pytest.approx(approx, rel=0.02)


def test_pjt_energy_quadratic_at_weak_coupling():
    base = params.ModelParams(C2=1.0, N_max=4)
    e1 = vibronic.pjt_relaxation_energy(vibronic.solve(base.replace(F=3.0)), base)
    e2 = vibronic.pjt_relaxation_energy(vibronic.solve(base.replace(F=6.0)), base)
    assert e1 > 0
    assert e2 / e1 == pytest.approx(4.0, rel=0.01)


def test_coefficient_completeness_and_selection():
    eig = vibronic.solve(params.ModelParams())
    ct = vibronic.extract_coefficients(eig)
    assert np.abs(ct.weights.sum(axis=(1, 2, 3)) - 1).max() < 1e-8
    assert np.all(ct.weights >= 0)
    k = eig.ground_E_index
    # c, d, f, g together with the 1A1 x A1/A2 parts exhaust an E state
    total = ct.c(k) + ct.d(k) + ct.f(k) + ct.g(k)
    assert total.sum() == pytest.approx(1.0, abs=1e-8)
    a = eig.first_excited_A1_index
    assert (ct.c_prime(a) + ct.d_prime(a)).sum() == pytest.approx(1.0, abs=1e-8)


def test_shell_content_of_coefficients():
    # phonons of irrep G only occur in shells whose content contains G
    eig = vibronic.solve(params.ModelParams(N_max=8))
    ct = vibronic.extract_coefficients(eig)
    for i, irrep in enumerate(fock.IRREPS):
        for n in range(9):
            if fock.shell_irrep_content(n)[irrep] == 0:
                assert np.abs(ct.weights[:, :, i, n]).max() < 1e-12


def test_table_rows_layout():
    eig = vibronic.solve(params.ModelParams())
    ct = vibronic.extract_coefficients(eig)
    rows = ct.table_rows(eig.ground_E_index, eig.first_excited_A1_index, n_max=3)
    assert [r[0] for r in rows] == [0, 1, 2, 3]
    assert rows[0][1] == pytest.approx(0.645, abs=0.002)


def test_channel_weights_partition():
    eig = vibronic.solve(params.ModelParams(N_max=6))
    ct = vibronic.extract_coefficients(eig)
    z, plus, minus = ct.channel_weights(0)
    assert np.allclose(z, ct.d(0))
    assert (z + plus + minus + ct.g(0)).sum() == pytest.approx(1.0)


def test_zpl_uncoupled():
    eig = vibronic.solve(params.ModelParams(F=0.0, N_max=2, Lambda_e=1190.0))
    assert vibronic.zpl_energy(eig) == pytest.approx(1190.0)


def test_effective_spacing_uncoupled():
    eig = vibronic.solve(params.ModelParams(F=0.0, N_max=4))
    assert vibronic.effective_A1_spacing(eig) == pytest.approx(66.1)


def test_errors():
    with pytest.raises(ValueError):
        vibronic.diagonalize(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValueError):
        vibronic.diagonalize(np.zeros((2, 3)))
    with pytest.raises(np.linalg.LinAlgError):
        vibronic.diagonalize(np.array([[np.nan]]))
    with pytest.raises(ParameterError):
        vibronic.build_hamiltonian(params.ModelParams(N_max=41))


def test_bare_diagonalization_has_no_labels():
    eig = vibronic.diagonalize(np.diag([2.0, 1.0]))
    assert eig.labels is None
    assert np.allclose(eig.energies, [1.0, 2.0])
