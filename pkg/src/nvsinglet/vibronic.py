"""Pseudo + dynamic Jahn-Teller Hamiltonian of the singlet pair and its eigenstates.

The electronic basis is ``(|xx>, |xy>, |yy>)``; in it

* ``|1E_x> = (|xx> - |yy>)/sqrt(2)``, ``|1E_y> = |xy>``,
* ``|1A1> = (|xx> + |yy>)/sqrt(2)``.

The Hamiltonian is assembled literally in that basis and only rotated to the
``(1E_x, 1E_y, 1A1)`` frame when coefficients are extracted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fock
from .exceptions import ParameterError, SymmetryError
from .params import ModelParams

SQ2 = np.sqrt(2.0)

#: Electronic gap operator ``Lambda_e |1A1><1A1|`` divided by ``Lambda_e``.
H_E_UNIT = 0.5 * np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 1.0]])

#: L=1 matrices coupling 1A1 to the 1E doublet (pseudo Jahn-Teller).
SIGMA_Z = np.diag([1.0, 0.0, -1.0])
SIGMA_X = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]) / SQ2

# Pauli matrices inside the 1E doublet (dynamic Jahn-Teller).  The partner
# pairing is fixed by requiring the E x e coupling to commute with the same
# C3v operations as the pseudo Jahn-Teller term: (E_x, E_y) transform as a
# quadrupole, so the doublet enters with sigma_x -> -sigma_x relative to a
# vector-like pairing, and sigma_z must carry the -|E_y><E_y| entry.
_EX = np.array([1.0, 0.0, -1.0]) / SQ2
_EY = np.array([0.0, 1.0, 0.0])
_A1 = np.array([1.0, 0.0, 1.0]) / SQ2
SIGMA_BAR_Z = np.outer(_EX, _EX) - np.outer(_EY, _EY)
SIGMA_BAR_X = -(np.outer(_EX, _EY) + np.outer(_EY, _EX))

#: Rows map (xx, xy, yy) amplitudes to (1E_x, 1E_y, 1A1) amplitudes.
TO_SYMMETRY_FRAME = np.array([_EX, _EY, _A1])

DEGENERACY_TOL = 1e-6


def build_hamiltonian(params: ModelParams, basis=None):
    """Full singlet Hamiltonian on the ``3 x basis.size`` product space.

    ``H = Lambda_e |1A1><1A1| + hw (n_x + n_y + 1)
          + C2 2F (s_z X - s_x Y) + (1 - C2) F (sb_z X - sb_x Y)``
    """
    if basis is None:
        basis = fock.build_basis(params.N_max)
    if basis.N_max > fock.MAX_N:
        raise ParameterError(f"N_max={basis.N_max} exceeds the dense-matrix limit {fock.MAX_N}")
    d = basis.size
    one = np.eye(d)
    X = fock.position(basis, "x")
    Y = fock.position(basis, "y")
    n_op = fock.number(basis)

    H = params.Lambda_e * np.kron(H_E_UNIT, one)
    H += params.hbar_omega_E * np.kron(np.eye(3), n_op + one)
    pjt = params.C2 * 2.0 * params.F
    djt = (1.0 - params.C2) * params.F
    H += pjt * (np.kron(SIGMA_Z, X) - np.kron(SIGMA_X, Y))
    H += djt * (np.kron(SIGMA_BAR_Z, X) - np.kron(SIGMA_BAR_X, Y))
    return H


@dataclass
class VibronicEigensystem:
    """Eigenpairs of the vibronic Hamiltonian.

    Attributes
    ----------
    energies : ndarray
        Ascending eigenvalues (meV).
    vectors : ndarray
        Orthonormal eigenvectors as columns.
    basis : BosonBasis or None
        Phonon basis; ``None`` for a bare matrix diagonalization.
    labels : tuple of str or None
        ``"A1"``, ``"A2"`` or ``"E"`` per eigenstate.
    partners : tuple or None
        For E states 0 (mirror-even, the "x" partner) or 1; ``None`` otherwise.
    a1_weight : ndarray or None
        Weight of the electronic ``1A1`` configuration in each eigenstate;
        states above 0.5 form the upper (``1A1``-like) manifold.
    """

    energies: np.ndarray
    vectors: np.ndarray
    basis: object = None
    labels: tuple = None
    partners: tuple = None
    a1_weight: np.ndarray = None
    params: ModelParams = None

    def __len__(self):
        return len(self.energies)

    def _require_labels(self):
        if self.labels is None:
            raise SymmetryError("eigensystem carries no symmetry labels")

    @property
    def lower(self):
        """Boolean mask of states in the ``1E``-like manifold."""
        self._require_labels()
        return self.a1_weight < 0.5

    @property
    def ground_E_index(self):
        """Mirror-even partner of the lowest E doublet."""
        self._require_labels()
        for k, (lab, p) in enumerate(zip(self.labels, self.partners)):
            if lab == "E" and p == 0 and self.lower[k]:
                return k
        raise SymmetryError("no E doublet in the lower manifold")

    @property
    def ground_A1_index(self):
        """Lowest A1 state of the upper manifold (the emitting level)."""
        self._require_labels()
        for k, lab in enumerate(self.labels):
            if lab == "A1" and not self.lower[k]:
                return k
        raise SymmetryError("no A1 state in the upper manifold")

    @property
    def first_excited_A1_index(self):
        """Lowest A1 state of the lower manifold."""
        self._require_labels()
        for k, lab in enumerate(self.labels):
            if lab == "A1" and self.lower[k]:
                return k
        raise SymmetryError("no A1 state in the lower manifold")

    def levels(self, mask=None, tol=DEGENERACY_TOL):
        """Group states into degenerate levels.

        Returns a list of ``(energy, label, indices)`` with one entry per
        distinct level; E doublets appear once.  Accidentally degenerate
        states of different symmetry share a level whose label joins theirs
        with ``"+"``.
        """
        idx = np.arange(len(self)) if mask is None else np.flatnonzero(mask)
        groups = []
        for k in idx:
            if groups and self.energies[k] - self.energies[groups[-1][-1]] < tol:
                groups[-1].append(int(k))
            else:
                groups.append([int(k)])
        out = []
        for ks in groups:
            if self.labels is None:
                label = None
            else:
                label = "+".join(dict.fromkeys(self.labels[k] for k in ks))
            out.append((float(self.energies[ks[0]]), label, tuple(ks)))
        return out


def _cluster(energies, tol):
    start = 0
    for k in range(1, len(energies) + 1):
        if k == len(energies) or energies[k] - energies[k - 1] > tol:
            yield start, k
            start = k


def _sym_eig_desc(M):
    w, v = np.linalg.eigh((M + M.T) / 2)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _canonical_sign(v):
    j = np.argmax(np.abs(v) > 1e-8 * np.abs(v).max())
    return v if v[j] >= 0 else -v


def _label_cluster(Q, proj, c3, sv, a1_proj, tol):
    """Rotate an invariant subspace into symmetry-adapted eigenvectors."""
    vecs, labels, partners = [], [], []
    total = 0
    for irrep in fock.IRREPS:
        w, v = _sym_eig_desc(Q.T @ proj[irrep] @ Q)
        m = int(np.sum(w > 0.5))
        total += m
        if m == 0:
            continue
        S = Q @ v[:, :m]
        if irrep == "E":
            if m % 2:
                raise SymmetryError("odd-dimensional E subspace")
            # mirror-even partners first, then generate the odd partner by C3
            ws, vs = _sym_eig_desc(S.T @ sv @ S)
            evens = S @ vs[:, : m // 2]
            if not np.allclose(ws[: m // 2], 1.0, atol=tol) or not np.allclose(ws[m // 2 :], -1.0, atol=tol):
                raise SymmetryError("E subspace does not split evenly under the mirror")
            # within the even block, fix the basis by the 1A1 weight
            wa, va = _sym_eig_desc(evens.T @ a1_proj @ evens)
            evens = evens @ va
            for j in range(evens.shape[1]):
                x = _canonical_sign(evens[:, j])
                y = (c3 @ x + 0.5 * x) / (np.sqrt(3) / 2)
                vecs += [x, y]
                labels += ["E", "E"]
                partners += [0, 1]
        else:
            wa, va = _sym_eig_desc(S.T @ a1_proj @ S)
            S = S @ va
            for j in range(m):
                vecs.append(_canonical_sign(S[:, j]))
                labels.append(irrep)
                partners.append(None)
    if total != Q.shape[1]:
        raise SymmetryError(f"projected dimensions {total} != subspace dimension {Q.shape[1]}")
    V = np.column_stack(vecs)
    resid = np.abs(V.T @ V - np.eye(V.shape[1])).max()
    if resid > tol:
        raise SymmetryError(f"symmetry-adapted vectors not orthonormal (residual {resid:.2e})")
    return V, labels, partners


def diagonalize(H, basis=None, degeneracy_tol=DEGENERACY_TOL, params=None):
    """Full eigendecomposition of a real symmetric matrix.

    With a ``basis`` the eigenvectors are additionally classified by C3v
    irreducible representation: every cluster of eigenvalues closer than
    ``degeneracy_tol`` (meV) is projected onto A1/A2/E and re-expressed in a
    symmetry-adapted, deterministic basis.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise np.linalg.LinAlgError("matrix has non-finite entries")
    if not np.allclose(H, H.T, atol=1e-12 * max(1.0, np.abs(H).max())):
        raise ValueError("matrix is not symmetric")
    energies, vectors = np.linalg.eigh(H)
    if basis is None:
        return VibronicEigensystem(energies, vectors, params=params)
    if H.shape[0] != 3 * basis.size:
        raise ValueError(f"matrix dimension {H.shape[0]} != 3 x basis size {basis.size}")

    c3, sv = fock._product_generators(basis)
    proj = _product_projectors(basis)
    a1_proj = np.kron(np.outer(_A1, _A1), np.eye(basis.size))
    labels, partners = [], []
    out = np.empty_like(vectors)
    for lo, hi in _cluster(energies, degeneracy_tol):
        V, lab, par = _label_cluster(vectors[:, lo:hi], proj, c3, sv, a1_proj, 1e-6)
        out[:, lo:hi] = V
        labels += lab
        partners += par
    M = out.reshape(3, basis.size, -1)
    a1_weight = np.sum(np.einsum("e,ejk->jk", _A1, M) ** 2, axis=0)
    return VibronicEigensystem(
        energies, out, basis, tuple(labels), tuple(partners), a1_weight, params
    )


_PRODUCT_PROJECTORS = {}


def _product_projectors(basis):
    if basis not in _PRODUCT_PROJECTORS:
        c3, sv = fock._product_generators(basis)
        _PRODUCT_PROJECTORS[basis] = fock.irrep_projectors(c3, sv)
    return _PRODUCT_PROJECTORS[basis]


def solve(params: ModelParams) -> VibronicEigensystem:
    """Build and diagonalize the Hamiltonian for ``params``."""
    basis = fock.build_basis(params.N_max)
    return diagonalize(build_hamiltonian(params, basis), basis, params=params)


# ---------------------------------------------------------------------------
# coefficients


@dataclass
class CoefficientTable:
    """Shell-resolved weights of every eigenstate.

    ``weights[k, el, irrep, n]`` is the squared norm of eigenstate ``k``
    carried by electronic channel ``el`` (0: ``1E`` doublet, 1: ``1A1``) with
    phonons in irreducible representation ``fock.IRREPS[irrep]`` of shell ``n``.
    Summed over the last three axes it equals 1.  ``ground_index`` is the
    mirror-even partner of the lowest ``1E~`` doublet.
    """

    weights: np.ndarray
    energies: np.ndarray
    labels: tuple
    ground_index: int = 0

    E_CHANNEL = 0
    A1_CHANNEL = 1

    def _w(self, k, el, irrep):
        return self.weights[k, el, fock.IRREPS.index(irrep)]

    # E-symmetry vibronic states
    def c(self, k):
        """``1E (x) chi(A1)`` weight per shell."""
        return self._w(k, 0, "A1")

    def d(self, k):
        """``1A1 (x) chi(E)`` weight per shell."""
        return self._w(k, 1, "E")

    def f(self, k):
        """``1E (x) chi(E)`` weight per shell."""
        return self._w(k, 0, "E")

    def g(self, k):
        """``1E (x) chi(A2)`` weight per shell."""
        return self._w(k, 0, "A2")

    # A1-symmetry vibronic states
    def c_prime(self, k):
        """``1A1 (x) chi(A1)`` weight per shell."""
        return self._w(k, 1, "A1")

    def d_prime(self, k):
        """``1E (x) chi(E)`` weight per shell."""
        return self._w(k, 0, "E")

    def channel_weights(self, k):
        """Per-shell weights feeding the three spin-orbit channels.

        Returns ``(z, plus, minus)``: the whole ``1A1`` electronic weight
        (``d`` for E states), ``1E`` with A1 phonons (``c``) and ``1E`` with E
        phonons (``f``).  ``1E`` with A2 phonons is not routed to any channel.
        """
        z = self.weights[k, 1].sum(axis=0)
        return z, self.c(k), self.f(k)

    def entries(self, k):
        """Non-zero ``(channel, phonon irrep, n, weight)`` tuples of state ``k``."""
        out = []
        for el, name in enumerate(("1E", "1A1")):
            for i, irrep in enumerate(fock.IRREPS):
                for n, w in enumerate(self.weights[k, el, i]):
                    if w > 0:
                        out.append((name, irrep, n, float(w)))
        return out

    def table_rows(self, e_index, a1_index, n_max=None):
        """Rows ``(n, c, d, f, c', d')`` of shell sums for two states."""
        nmax = self.weights.shape[-1] - 1 if n_max is None else n_max
        cols = (
            self.c(e_index),
            self.d(e_index),
            self.f(e_index),
            self.c_prime(a1_index),
            self.d_prime(a1_index),
        )
        return [(n, *(float(col[n]) for col in cols)) for n in range(nmax + 1)]


def extract_coefficients(eig: VibronicEigensystem, params=None, tol=1e-6) -> CoefficientTable:
    """Decompose every eigenstate into electronic channel x phonon irrep x shell."""
    eig._require_labels()
    basis = eig.basis
    P = fock._phonon_projectors(basis)
    shell = basis.shell
    nshell = basis.N_max + 1
    M = eig.vectors.reshape(3, basis.size, -1)
    amp = np.einsum("re,ejk->rjk", TO_SYMMETRY_FRAME, M)  # (E_x, E_y, A1) x phonon x state

    weights = np.zeros((len(eig), 2, 3, nshell))
    onehot = np.zeros((basis.size, nshell))
    onehot[np.arange(basis.size), shell] = 1.0
    for i, irrep in enumerate(fock.IRREPS):
        proj = np.einsum("ij,rjk->rik", P[irrep], amp)
        e_part = proj[0] ** 2 + proj[1] ** 2
        a_part = proj[2] ** 2
        weights[:, 0, i] = (onehot.T @ e_part).T
        weights[:, 1, i] = (onehot.T @ a_part).T

    resid = np.abs(weights.sum(axis=(1, 2, 3)) - 1.0).max()
    if resid > tol:
        raise SymmetryError(f"coefficient completeness violated by {resid:.2e}")
    # symmetry selection: 1A1 electronic only pairs with phonons of the same irrep
    for k, lab in enumerate(eig.labels):
        wrong = sum(weights[k, 1, i].sum() for i, ir in enumerate(fock.IRREPS) if ir != lab)
        if wrong > tol:
            raise SymmetryError(f"state {k} labelled {lab} has {wrong:.2e} off-symmetry 1A1 weight")
    return CoefficientTable(weights, eig.energies.copy(), eig.labels, eig.ground_E_index)


# ---------------------------------------------------------------------------
# derived observables


def zpl_energy(eig: VibronicEigensystem):
    """Energy between the lowest upper-manifold A1 state and the ground doublet."""
    return float(eig.energies[eig.ground_A1_index] - eig.energies[eig.ground_E_index])


def effective_A1_spacing(eig: VibronicEigensystem, count=3):
    """Mean spacing of the lowest ``count`` distinct upper-manifold levels."""
    upper = eig.levels(mask=~eig.lower)[:count]
    if len(upper) < count:
        raise SymmetryError(f"only {len(upper)} upper-manifold levels available")
    return (upper[-1][0] - upper[0][0]) / (count - 1)


def pjt_relaxation_energy(eig: VibronicEigensystem, params: ModelParams):
    """Lowering of the ground doublet below the uncoupled zero-point level."""
    return float(params.hbar_omega_E - eig.energies[eig.ground_E_index])


def perturbative_pjt(F_tilde, Lambda_e, hbar_omega_E):
    """First-order admixture of ``1A1 (x) |10>`` into the ground ``1E_x``.

    Returns ``chi / (Lambda_e + hw)`` with the coupling element
    ``chi = F_tilde / sqrt(2)``.
    """
    return F_tilde / SQ2 / (Lambda_e + hbar_omega_E)
