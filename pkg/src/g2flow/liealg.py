"""Lie brackets on R^7 as structure constants: Jacobi validation, the
Chevalley-Eilenberg differential, Hodge Laplacian, the delta map and its
kernel (derivations), and the Ricci curvature of left-invariant metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidBracket
from .exterior import DIM, INDEX_SETS, KForm, Metric, NFORMS, RANK, sort_sign

PAIRS = INDEX_SETS[2]
PAIR_RANK = {p: r for r, p in enumerate(PAIRS)}

JACOBI_TOL = 1e-9


def jacobi_residual(c) -> float:
    """Max-norm Jacobi defect of raw antisymmetric structure constants."""
    c = np.asarray(c, dtype=float).reshape(DIM, DIM, DIM)
    T = np.einsum("ijm,mkl->ijkl", c, c)
    res = T + np.einsum("jkil->ijkl", T) + np.einsum("kijl->ijkl", T)
    return float(np.abs(res).max())


def pack_constants(c) -> np.ndarray:
    """(7,7,7) antisymmetric tensor -> (21,7) over increasing pairs."""
    c = np.asarray(c, dtype=float)
    return np.array([c[i - 1, j - 1, :] for (i, j) in PAIRS])


def unpack_constants(cp) -> np.ndarray:
    cp = np.asarray(cp, dtype=float).reshape(len(PAIRS), DIM)
    c = np.zeros((DIM, DIM, DIM))
    for r, (i, j) in enumerate(PAIRS):
        c[i - 1, j - 1, :] = cp[r]
        c[j - 1, i - 1, :] = -cp[r]
    return c


class LieBracket:
    """Antisymmetric structure constants c_ij^k on R^7 satisfying Jacobi.

    The bracket norm convention is |mu|^2 = sum over all ordered pairs
    (i,j) and k of (c_ij^k)^2, i.e. twice the sum over increasing pairs.
    """

    __slots__ = ("c", "jacobi", "_d_cache")

    def __init__(self, c, tol=JACOBI_TOL, validate=True):
        c = np.array(c, dtype=float).reshape(DIM, DIM, DIM)
        anti = np.abs(c + c.transpose(1, 0, 2)).max()
        if anti > 1e-12 * max(1.0, np.abs(c).max()):
            raise InvalidBracket(f"constants not antisymmetric (defect {anti:g})")
        c = 0.5 * (c - c.transpose(1, 0, 2))
        res = jacobi_residual(c)
        if validate and res > tol:
            raise InvalidBracket(f"Jacobi residual {res:g} exceeds {tol:g}")
        c.flags.writeable = False
        self.c = c
        self.jacobi = res
        self._d_cache = {}

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls):
        return cls(np.zeros((DIM, DIM, DIM)))

    @classmethod
    def from_terms(cls, terms, **kw):
        """Build from {(i,j,k): v} with 1-based indices, i < j."""
        c = np.zeros((DIM, DIM, DIM))
        for (i, j, k), v in terms.items():
            if not (1 <= i < j <= DIM and 1 <= k <= DIM):
                raise InvalidBracket(f"bad index triple {(i, j, k)}")
            c[i - 1, j - 1, k - 1] += v
            c[j - 1, i - 1, k - 1] -= v
        return cls(c, **kw)

    @classmethod
    def from_adjoint(cls, A, index=DIM, **kw):
        """Bracket with abelian complement of e_index and ad e_index = A."""
        A = np.asarray(A, dtype=float)
        n = A.shape[0]
        c = np.zeros((DIM, DIM, DIM))
        for j in range(n):
            c[index - 1, j, :n] = A[:, j]
            c[j, index - 1, :n] = -A[:, j]
        return cls(c, **kw)

    # -- accessors ---------------------------------------------------------

    def bracket(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(DIM)
        y = np.asarray(y, dtype=float).reshape(DIM)
        return np.einsum("ijk,i,j->k", self.c, x, y)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.c ** 2)))

    def packed(self) -> np.ndarray:
        return pack_constants(self.c)

    def is_zero(self, tol=1e-14) -> bool:
        return bool(np.abs(self.c).max() <= tol)

    def __repr__(self):
        return f"LieBracket(|mu|={self.norm():g}, jacobi={self.jacobi:g})"

    # -- group actions -----------------------------------------------------

    def act(self, h, validate=False) -> "LieBracket":
        """Basis change h . mu = h mu(h^{-1} ., h^{-1} .)."""
        return LieBracket(bracket_act(h, self.c), validate=validate)

    def scale(self, s, validate=False) -> "LieBracket":
        return LieBracket(s * self.c, validate=validate)

    # -- serialization -----------------------------------------------------

    def to_json_dict(self, tol=0.0):
        out = []
        for (i, j) in PAIRS:
            for k in range(1, DIM + 1):
                v = self.c[i - 1, j - 1, k - 1]
                if abs(v) > tol:
                    out.append({"i": i, "j": j, "k": k, "v": float(v)})
        return {"c": out}

    @classmethod
    def from_json_dict(cls, data, **kw):
        terms = {}
        for t in data["c"]:
            terms[(int(t["i"]), int(t["j"]), int(t["k"]))] = \
                terms.get((int(t["i"]), int(t["j"]), int(t["k"])), 0.0) + float(t["v"])
        return cls.from_terms(terms, **kw)


def bracket_act(h, c) -> np.ndarray:
    """Raw-constants version of the basis-change action."""
    h = np.asarray(h, dtype=float)
    hinv = np.linalg.inv(h)
    c = np.asarray(c, dtype=float)
    return np.einsum("km,abm,ai,bj->ijk", h, c, hinv, hinv)


# ---------------------------------------------------------------------------
# Chevalley-Eilenberg differential
# ---------------------------------------------------------------------------

_ce_tensors = {}


def _ce_tensor(k):
    """D with d_mu on degree k given by einsum('JpmI,pm->JI', D, packed c)."""
    if k not in _ce_tensors:
        D = np.zeros((NFORMS[k + 1], len(PAIRS), DIM, NFORMS[k]))
        for rI, idx in enumerate(INDEX_SETS[k]):
            for p in range(k):
                head, m, tail = idx[:p], idx[p], idx[p + 1:]
                for rp, (r, s) in enumerate(PAIRS):
                    word = head + (r, s) + tail
                    srt, sign = sort_sign(word)
                    if sign == 0:
                        continue
                    D[RANK[k + 1][srt], rp, m - 1, rI] -= ((-1.0) ** p) * sign
        D.flags.writeable = False
        _ce_tensors[k] = D
    return _ce_tensors[k]


def ce_matrix(mu: LieBracket, k: int) -> np.ndarray:
    """Matrix of d_mu from degree k to degree k+1 coefficients."""
    if k >= DIM:
        raise ValueError("no forms of degree 8")
    if k == 0:
        return np.zeros((DIM, 1))
    cache = mu._d_cache
    if k not in cache:
        cache[k] = np.einsum("JpmI,pm->JI", _ce_tensor(k), mu.packed())
    return cache[k]


def ce_differential(mu: LieBracket, a: KForm) -> KForm:
    """The differential of left-invariant forms determined by the bracket."""
    if a.degree >= DIM:
        raise ValueError("differential needs degree <= 6")
    return KForm(a.degree + 1, ce_matrix(mu, a.degree) @ a.coeffs)


def codifferential(mu: LieBracket, s, a: KForm) -> KForm:
    """Adjoint of d_mu: (-1)^k * d * on degree k (zero on 0-forms)."""
    k = a.degree
    if k == 0:
        return KForm.zero(0)
    sa = s.star(a)  # degree 7-k
    dsa = ce_differential(mu, sa)  # degree 8-k
    return ((-1.0) ** k) * s.star(dsa)


def hodge_laplacian(mu: LieBracket, s, a: KForm) -> KForm:
    """Hodge Laplacian d*d + dd* for the structure's metric; on 3-forms this
    is *d*d - d*d*."""
    k = a.degree
    out = KForm.zero(k)
    if k < DIM:
        out = out + codifferential(mu, s, ce_differential(mu, a))
    if k > 0:
        out = out + ce_differential(mu, codifferential(mu, s, a))
    return out


# ---------------------------------------------------------------------------
# the delta map and derivations
# ---------------------------------------------------------------------------

def delta_mu(mu, E) -> np.ndarray:
    """delta_mu(E) = mu(E.,.) + mu(.,E.) - E mu(.,.), as raw constants."""
    c = mu.c if isinstance(mu, LieBracket) else np.asarray(mu, dtype=float)
    E = np.asarray(E, dtype=float)
    return (np.einsum("mjk,mi->ijk", c, E)
            + np.einsum("imk,mj->ijk", c, E)
            - np.einsum("km,ijm->ijk", E, c))


@dataclass
class DerivationSpace:
    """Basis of the kernel of E -> delta_mu(E)."""

    basis: np.ndarray  # (dim, 7, 7)
    dim: int

    def contains(self, D, tol=1e-8) -> bool:
        v = np.asarray(D, dtype=float).reshape(-1)
        proj = (self.basis.reshape(self.dim, -1).T
                @ (self.basis.reshape(self.dim, -1) @ v))
        return bool(np.linalg.norm(proj - v) <= tol * max(1.0, np.linalg.norm(v)))


def derivations(mu: LieBracket) -> DerivationSpace:
    """Derivation algebra via an SVD nullspace of the delta map."""
    cols = []
    for a in range(DIM):
        for b in range(DIM):
            E = np.zeros((DIM, DIM))
            E[a, b] = 1.0
            cols.append(delta_mu(mu, E).reshape(-1))
    L = np.array(cols).T  # 343 x 49
    U, s, Vh = np.linalg.svd(L)
    smax = s[0] if len(s) else 0.0
    mask = np.ones(Vh.shape[0], dtype=bool) if smax == 0.0 else s <= 1e-8 * smax
    mats = Vh[mask].reshape(-1, DIM, DIM)
    return DerivationSpace(mats, mats.shape[0])


# ---------------------------------------------------------------------------
# Ricci curvature of a left-invariant metric
# ---------------------------------------------------------------------------

def ricci(mu: LieBracket, g: Metric | None = None):
    """Ricci operator and scalar curvature of the left-invariant metric.

    Computed from the Levi-Civita connection coefficients obtained by the
    Koszul formula on structure constants, in an orthonormal frame.
    """
    if g is None:
        g = Metric.identity()
    M = g.frame()
    chat = bracket_act(np.linalg.inv(M), mu.c if isinstance(mu, LieBracket) else mu)
    # Koszul: <nabla_i e_j, e_k> = (c_ijk - c_ikj - c_jki) / 2
    gamma = 0.5 * (chat - np.einsum("ikj->ijk", chat) - np.einsum("jki->ijk", chat))
    N = np.einsum("ijk->ikj", gamma)  # N[i] acts on coordinates: (N_i)_{kj}
    NN = np.einsum("iab,jbc->ijac", N, N)
    R4 = NN - NN.transpose(1, 0, 2, 3) - np.einsum("ijk,kab->ijab", chat, N)
    ric_f = np.einsum("iaib->ab", R4)
    ric_f = 0.5 * (ric_f + ric_f.T)
    ric_op = M @ ric_f @ np.linalg.inv(M)
    return ric_op, float(np.trace(ric_f))
