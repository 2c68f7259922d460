"""Truncated two-mode boson basis and explicit operator matrices.

The two modes are the x and y partners of a degenerate E vibration.  States
``|n_x n_y>`` with ``n_x + n_y <= N_max`` are kept; they are ordered by total
phonon number and, inside a shell, by decreasing ``n_x``::

    N_max = 1  ->  (0, 0), (1, 0), (0, 1)

Operators on the vibronic product space act on ``electronic (x) phonon`` with
the electronic index running slowest, i.e. ``np.kron(electronic, phonon)``.
The electronic triple is ``(|xx>, |xy>, |yy>)``, the symmetric square of the
``e`` orbital doublet.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

#: Character table of C3v over the six group elements in the order produced by
#: :func:`group_elements`: E, C3, C3^2, s, s C3, s C3^2.
CHARACTERS = {
    "A1": np.array([1, 1, 1, 1, 1, 1], dtype=float),
    "A2": np.array([1, 1, 1, -1, -1, -1], dtype=float),
    "E": np.array([2, -1, -1, 0, 0, 0], dtype=float),
}
IRREP_DIM = {"A1": 1, "A2": 1, "E": 2}
IRREPS = ("A1", "A2", "E")

MAX_N = 40


@dataclass(frozen=True)
class BosonBasis:
    """Occupation states of two oscillators with at most ``N_max`` quanta."""

    N_max: int
    states: tuple
    index: dict = field(compare=False, repr=False)

    @property
    def size(self):
        return len(self.states)

    @property
    def shell(self):
        """Total phonon number of every basis state."""
        return np.array([nx + ny for nx, ny in self.states])

    def __len__(self):
        return len(self.states)


@lru_cache(maxsize=None)
def build_basis(N_max) -> BosonBasis:
    if int(N_max) != N_max or N_max < 0:
        raise ValueError(f"N_max must be a non-negative integer, got {N_max!r}")
    N_max = int(N_max)
    states = tuple((nx, n - nx) for n in range(N_max + 1) for nx in range(n, -1, -1))
    return BosonBasis(N_max, states, {s: i for i, s in enumerate(states)})


def _readonly(a):
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def _annihilators(basis):
    d = basis.size
    ax = np.zeros((d, d))
    ay = np.zeros((d, d))
    for (nx, ny), j in basis.index.items():
        if nx > 0:
            ax[basis.index[(nx - 1, ny)], j] = np.sqrt(nx)
        if ny > 0:
            ay[basis.index[(nx, ny - 1)], j] = np.sqrt(ny)
    return _readonly(ax), _readonly(ay)


def ladder(basis, mode, kind):
    """Ladder operator matrix for one of the two modes.

    Parameters
    ----------
    basis : BosonBasis
    mode : {"x", "y"}
    kind : {"create", "annihilate"}

    Creation out of the truncated space gives zero, so ``[a, a^+]`` equals the
    identity only on states below the outermost shell.
    """
    ax, ay = _annihilators(basis)
    try:
        a = {"x": ax, "y": ay}[mode]
    except KeyError:
        raise ValueError(f"mode must be 'x' or 'y', got {mode!r}") from None
    if kind == "annihilate":
        return a.copy()
    if kind == "create":
        return a.T.copy()
    raise ValueError(f"kind must be 'create' or 'annihilate', got {kind!r}")


def position(basis, mode):
    """Dimensionless coordinate ``(a^+ + a) / sqrt(2)``."""
    a = ladder(basis, mode, "annihilate")
    return (a + a.T) / np.sqrt(2)


def number(basis):
    """Total phonon number operator ``n_x + n_y`` (diagonal)."""
    return np.diag(basis.shell.astype(float))


def rotation_2d(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def phonon_rotation(basis, angle):
    """Representation of an in-plane rotation on the phonon space.

    One-phonon states ``(|10>, |01>)`` transform with the ordinary 2x2 rotation
    matrix; higher shells carry its symmetric powers.  The generator conserves
    the shell number, so the exponential is exact within the truncation.
    """
    ax, ay = _annihilators(basis)
    generator = ay.T @ ax - ax.T @ ay
    return expm(angle * generator)


def phonon_mirror(basis):
    """Vertical mirror ``y -> -y`` on the phonon space."""
    return np.diag([(-1.0) ** ny for _, ny in basis.states])


_PAIR_TENSORS = (
    np.array([[1.0, 0.0], [0.0, 0.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]) / np.sqrt(2),
    np.array([[0.0, 0.0], [0.0, 1.0]]),
)


def electronic_representation(orbital_matrix):
    """Action of an orbital transformation on ``(|xx>, |xy>, |yy>)``.

    The pair states are symmetric tensors ``T`` of the ``e`` doublet, which
    transform as ``R T R^T``.
    """
    R = np.asarray(orbital_matrix, dtype=float)
    return np.array(
        [[np.sum(bi * (R @ bj @ R.T)) for bj in _PAIR_TENSORS] for bi in _PAIR_TENSORS]
    )


@lru_cache(maxsize=None)
def _phonon_generators(basis):
    c3 = phonon_rotation(basis, 2 * np.pi / 3)
    return _readonly(c3), _readonly(phonon_mirror(basis))


def phonon_symmetry_ops(basis):
    """``(C3, sigma_v)`` acting on the phonon space alone."""
    c3, sv = _phonon_generators(basis)
    return c3.copy(), sv.copy()


def electronic_symmetry_ops():
    """``(C3, sigma_v)`` acting on the electronic triple alone."""
    c3 = electronic_representation(rotation_2d(2 * np.pi / 3))
    sv = electronic_representation(np.diag([1.0, -1.0]))
    return c3, sv


@lru_cache(maxsize=None)
def _product_generators(basis):
    e3, es = electronic_symmetry_ops()
    p3, ps = _phonon_generators(basis)
    return _readonly(np.kron(e3, p3)), _readonly(np.kron(es, ps))


def symmetry_ops(basis):
    """``(C3, sigma_v)`` on the 3-electronic x phonon product space.

    Electrons and phonons are rotated by the same 2pi/3 rotation; the mirror
    flips ``e_y`` and the ``y`` mode together.
    """
    c3, sv = _product_generators(basis)
    return c3.copy(), sv.copy()


def group_elements(c3, sigma_v):
    """The six C3v elements generated by ``c3`` and ``sigma_v``."""
    c3_2 = c3 @ c3
    return [np.eye(len(c3)), c3, c3_2, sigma_v, sigma_v @ c3, sigma_v @ c3_2]


def irrep_projectors(c3, sigma_v):
    """Isotypic projectors ``P_G = dim(G)/6 sum_g chi_G(g) g`` for A1, A2, E."""
    elements = group_elements(c3, sigma_v)
    return {
        irrep: IRREP_DIM[irrep] / 6.0 * sum(chi * g for chi, g in zip(CHARACTERS[irrep], elements))
        for irrep in IRREPS
    }


@lru_cache(maxsize=None)
def _phonon_projectors(basis):
    c3, sv = _phonon_generators(basis)
    return {k: _readonly(v) for k, v in irrep_projectors(c3, sv).items()}


def phonon_projectors(basis):
    """Projectors onto the A1, A2 and E parts of the phonon space."""
    return {k: v.copy() for k, v in _phonon_projectors(basis).items()}


def shell_irrep_content(n):
    """Multiplicities of A1, A2, E among the ``n + 1`` states of shell ``n``.

    Closed form from the character of the symmetric power of E: the rotation
    character cycles through 1, -1, 0 for ``n % 3 == 0, 1, 2``; the mirror
    character is 1 for even ``n`` and 0 for odd ``n``.
    """
    dim = n + 1
    chi_c3 = (1, -1, 0)[n % 3]
    chi_s = 1 if n % 2 == 0 else 0
    classes = np.array([dim, chi_c3, chi_c3, chi_s, chi_s, chi_s], dtype=float)
    return {k: int(round(CHARACTERS[k] @ classes / 6)) for k in IRREPS}
