"""Built-in verification corpus: the worked examples used across the test
suite and the command-line `verify` run."""

from __future__ import annotations

import numpy as np

from .exterior import KForm, phi_canonical
from .liealg import LieBracket

__all__ = [
    "phi_canonical", "phi_nilpotent_example", "mu_nilpotent",
    "aa_n2", "aa_n6", "aa_n6_soliton", "aa_n6_soliton_partner",
    "aa_n6_soliton_derivation", "aa_diag", "aa_family_2d", "aa_family_4d",
    "aa_heber_example",
]


def phi_nilpotent_example() -> KForm:
    """The positive 3-form used with the two-parameter nilpotent bracket."""
    return KForm.from_terms(3, {
        (1, 4, 7): 1, (2, 6, 7): 1, (3, 5, 7): 1, (1, 2, 3): 1,
        (1, 5, 6): 1, (2, 4, 5): 1, (3, 4, 6): -1,
    })


def mu_nilpotent(a, b, c, d) -> LieBracket:
    """Two-step nilpotent bracket: [e1,e2] = -a e5 - b e6,
    [e1,e3] = -c e5 - d e6."""
    return LieBracket.from_terms({
        (1, 2, 5): -a, (1, 2, 6): -b, (1, 3, 5): -c, (1, 3, 6): -d,
    })


# -- almost-abelian matrices, complex 3x3 upper-triangular data -------------

def aa_n2() -> np.ndarray:
    """Square-zero nilpotent representative (complex view)."""
    return np.array([[0, 0, 1], [0, 0, 0], [0, 0, 0]], dtype=complex)


def aa_n6(t) -> np.ndarray:
    """The one-parameter nilpotent family of cube-zero type (complex view)."""
    return np.array([[0, t, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)


def aa_n6_soliton() -> np.ndarray:
    """The rotating soliton representative on the cube-zero algebra."""
    return np.array([[0, 1, 0], [0, 0, np.sqrt(2)], [0, 0, 0]], dtype=complex)


def aa_n6_soliton_partner() -> np.ndarray:
    """The quarter-turn companion matrix of the rotating soliton."""
    return np.array([[0, 0, 0], [-np.sqrt(2), 0, 0], [0, 1, 0]], dtype=complex)


def aa_n6_soliton_derivation() -> np.ndarray:
    """A feasible complex derivation block for the rotating soliton."""
    return np.array([[4, 0, -np.sqrt(2)], [0, 3, 0], [0, 0, 2]], dtype=complex)


def aa_diag(x, y, z) -> np.ndarray:
    """Diagonal complex matrix; trace-free input gives an algebraic soliton."""
    return np.diag(np.array([x, y, z], dtype=complex))


def aa_family_2d(a, b) -> np.ndarray:
    """Two-parameter family with one off-diagonal pair (complex view)."""
    return np.array([[0, a, 0], [b, 0, 0], [0, 0, 0]], dtype=complex)


def aa_family_4d(a, b, c, d) -> np.ndarray:
    """Four-parameter tridiagonal family (complex view)."""
    return np.array([[0, a, 0], [c, 0, b], [0, d, 0]], dtype=complex)


def aa_heber_example():
    """A non-soliton matrix equivalent to an algebraic soliton via a
    commuting skew summand: returns (A, A1, A2) complex views."""
    A1 = np.array([[0, 0, 1], [0, 0, 0], [0, 0, 0]], dtype=complex)
    A2 = np.diag([1j, -2j, 1j])
    return A1 + A2, A1, A2


def family_2d_rhs_stated(a, b):
    """The two-parameter reduction in its commonly stated form, which
    disagrees with the flow right side; kept verbatim for the acceptance
    suite."""
    return ((2.0 / 3.0) * a * (-2 * a * a - a * b + b * b),
            (2.0 / 3.0) * b * (-2 * b * b - a * b + a * a))


def family_2d_rhs(a, b):
    """The 2-parameter reduction rederived from the matrix flow."""
    return (-a * ((2.0 / 3.0) * (a + b) ** 2 + a * a - b * b),
            -b * ((2.0 / 3.0) * (a + b) ** 2 + b * b - a * a))


def family_4d_rhs(a, b, c, d):
    """The four-parameter reduction in its stated form (consistent with the
    flow right side)."""
    ap = (-5 / 3 * a ** 3 - 11 / 6 * a * b * d - 4 / 3 * a ** 2 * c + d * c * b
          + 1 / 3 * a * c ** 2 - 2 / 3 * a * b ** 2 - 5 / 3 * a * d ** 2
          + 1 / 2 * c * d ** 2)
    bp = (-5 / 3 * b ** 3 + 1 / 3 * b * a ** 2 + 1 / 3 * b * d ** 2
          - 5 / 6 * a * c * b - 5 / 3 * c ** 2 * b - 1 / 2 * d * c ** 2
          - 4 / 3 * d * b ** 2)
    cp = (-5 / 3 * c ** 3 + 1 / 3 * a ** 2 * c - 5 / 6 * d * c * b
          - 4 / 3 * a * c ** 2 - 1 / 2 * a * b ** 2 - 5 / 3 * c * b ** 2
          + 1 / 3 * c * d ** 2)
    dp = (-5 / 3 * d ** 3 - 11 / 6 * d * c * a + 1 / 2 * b * a ** 2
          - 4 / 3 * b * d ** 2 + a * c * b - 2 / 3 * d * c ** 2
          + 1 / 3 * d * b ** 2 - 5 / 3 * d * a ** 2)
    return ap, bp, cp, dp
