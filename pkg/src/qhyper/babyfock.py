"""Twisted finite Fock algebra: basis, creation/annihilation, gaussians, monomials.

The model lives on the 4**n dimensional coefficient space spanned by
x_A for subsets A of the signed index set I = {-n,...,-1,1,...,n} in the
total order -n < ... < -1 < 1 < ... < n.  A subset is the bitmask whose
bit for index i sits at position i+n (i<0) or i+n-1 (i>0).  Left
creation b*_i sends x_A to sign(i,A) x_{A+i} when i is free, left
annihilation b_i sends x_A to sign(i,A) x_{A-i} when i is present, with
sign(i,A) the product of eps(i,j) over j in A below i.  The twisted
gaussian of index i is g_i = mu_i^{-1} b*_i + mu_i b_{-i}.

Every element X is a unique combination of the 4**n monomials
w_1 ... w_n with w_i in {1, g_i, g*_i, y_i}, y_i = g*_i g_i - mu_i^{-2};
applied to the vacuum each monomial hits a single basis vector, so the
monomial-to-vacuum-vector map is a signed scaled bijection and expansion
is an exact relabeling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .signs import ModelParams

__all__ = [
    "UNIT", "GEN", "STAR", "Y", "LETTER_DEGREE", "LETTER_NAMES",
    "BabyFock", "get_model", "RelationsReport", "opnorm",
]

UNIT, GEN, STAR, Y = 0, 1, 2, 3
LETTER_DEGREE = (0, 1, 1, 2)
LETTER_NAMES = ("1", "g", "g*", "y")


def opnorm(mat: np.ndarray, tol: float = 1e-14, max_iter: int = 2000) -> float:
    """Operator (spectral) norm; power iteration on A*A for larger sizes."""
    if mat.shape[0] <= 256:
        return float(np.linalg.norm(mat, 2))
    rng = np.random.Generator(np.random.Philox(key=0x9e3779b9))
    v = rng.standard_normal(mat.shape[1]) + 1j * rng.standard_normal(mat.shape[1])
    v /= np.linalg.norm(v)
    prev = 0.0
    ah = mat.conj().T
    for _ in range(max_iter):
        w = ah @ (mat @ v)
        lam = np.linalg.norm(w)
        if lam == 0.0:
            return 0.0
        v = w / lam
        if abs(lam - prev) <= tol * lam:
            break
        prev = lam
    return float(np.sqrt(lam))


@dataclass
class RelationsReport:
    """Max absolute residuals of the generator relations, per family."""

    commutation: float
    star_commutation: float
    square: float
    anticommutator: float

    @property
    def max_residual(self) -> float:
        return max(self.commutation, self.star_commutation,
                   self.square, self.anticommutator)

    def passed(self, tol: float = 1e-12) -> bool:
        return self.max_residual <= tol


class BabyFock:
    """Concrete 4**n dimensional realization of one parameter set."""

    def __init__(self, params: ModelParams):
        self.params = params
        self.n = params.n
        self.dim = 4 ** params.n
        self.mu = np.asarray(params.mu)
        eps = params.signs.matrix()
        nbits = 2 * self.n
        # signed index i -> bit position, ascending with the index order
        self._pos = {}
        for i in range(-self.n, self.n + 1):
            if i:
                self._pos[i] = i + self.n if i < 0 else i + self.n - 1
        # sign masks: bits of indices j < i with eps(i, j) = -1
        self._sign_mask = {}
        for i in self._pos:
            mask = 0
            for j in self._pos:
                if j >= i:
                    continue
                e = -1 if abs(i) == abs(j) else eps[abs(i) - 1, abs(j) - 1]
                if e == -1:
                    mask |= 1 << self._pos[j]
            self._sign_mask[i] = mask
        self._parity = _kernels.parity_table(nbits)
        self._matrix_cache: dict = {}
        self._mono = None

    # ------------------------------------------------------------------
    # operator actions on coefficient arrays
    # ------------------------------------------------------------------

    def _check_index(self, i: int, positive: bool = False):
        lo = 1 if positive else -self.n
        if i == 0 or not (lo <= i <= self.n) or (not positive and abs(i) > self.n):
            raise ValueError(f"index {i} out of range for n={self.n}")

    def apply_creation(self, i: int, vec, weight=1.0, out=None):
        self._check_index(i)
        return _kernels.apply_beta_batch(
            vec, 1 << self._pos[i], self._sign_mask[i], True, weight, out=out)

    def apply_annihilation(self, i: int, vec, weight=1.0, out=None):
        self._check_index(i)
        return _kernels.apply_beta_batch(
            vec, 1 << self._pos[i], self._sign_mask[i], False, weight, out=out)

    def apply_gamma(self, i: int, vec, out=None):
        self._check_index(i, positive=True)
        mu = self.mu[i - 1]
        out = self.apply_creation(i, vec, 1.0 / mu, out=out)
        return self.apply_annihilation(-i, vec, mu, out=out)

    def apply_gamma_star(self, i: int, vec, out=None):
        self._check_index(i, positive=True)
        mu = self.mu[i - 1]
        out = self.apply_annihilation(i, vec, 1.0 / mu, out=out)
        return self.apply_creation(-i, vec, mu, out=out)

    def apply_y(self, i: int, vec):
        out = self.apply_gamma_star(i, self.apply_gamma(i, vec))
        out -= vec / self.mu[i - 1] ** 2
        return out

    def apply_letter(self, letter: int, i: int, vec):
        if letter == UNIT:
            return np.array(vec, dtype=np.complex128, copy=True)
        if letter == GEN:
            return self.apply_gamma(i, vec)
        if letter == STAR:
            return self.apply_gamma_star(i, vec)
        if letter == Y:
            return self.apply_y(i, vec)
        raise ValueError(f"unknown letter {letter}")

    # ------------------------------------------------------------------
    # dense matrices
    # ------------------------------------------------------------------

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=np.complex128)

    def _cached(self, key, builder):
        mat = self._matrix_cache.get(key)
        if mat is None:
            mat = builder()
            mat.setflags(write=False)
            self._matrix_cache[key] = mat
        return mat

    def creation(self, i: int) -> np.ndarray:
        return self._cached(("b*", i), lambda: self.apply_creation(i, self.identity()))

    def annihilation(self, i: int) -> np.ndarray:
        return self._cached(("b", i), lambda: self.apply_annihilation(i, self.identity()))

    def gamma(self, i: int) -> np.ndarray:
        return self._cached(("g", i), lambda: self.apply_gamma(i, self.identity()))

    def gamma_star(self, i: int) -> np.ndarray:
        return self._cached(("g*", i), lambda: self.apply_gamma_star(i, self.identity()))

    def y_op(self, i: int) -> np.ndarray:
        return self._cached(("y", i), lambda: self.apply_y(i, self.identity()))

    # ------------------------------------------------------------------
    # vacuum state and monomial expansion
    # ------------------------------------------------------------------

    def vacuum_vector(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.complex128)
        v[0] = 1.0
        return v

    def gns_embed(self, X: np.ndarray) -> np.ndarray:
        """The vector X x_empty, i.e. column 0 of X."""
        return np.array(X[:, 0])

    def vacuum_state(self, X: np.ndarray) -> complex:
        return complex(X[0, 0])

    def word_of(self, windex: int) -> tuple:
        """Letter tuple (index 1 first) of a linear monomial index."""
        return tuple((windex >> (2 * k)) & 3 for k in range(self.n))

    def windex_of(self, word) -> int:
        word = tuple(word)
        if len(word) != self.n:
            raise ValueError(f"word must have {self.n} letters, got {len(word)}")
        return sum(l << (2 * k) for k, l in enumerate(word))

    def _monomial_data(self):
        """Per-word basis target, amplitude, and degree of M_w x_empty."""
        if self._mono is not None:
            return self._mono
        nwords = self.dim
        target = np.zeros(nwords, dtype=np.int64)
        amp = np.zeros(nwords, dtype=np.float64)
        degree = np.zeros(nwords, dtype=np.int64)
        par = self._parity
        for w in range(nwords):
            mask = 0
            a = 1.0
            deg = 0
            # letters applied from index n down to 1 (rightmost factor first)
            for k in range(self.n - 1, -1, -1):
                letter = (w >> (2 * k)) & 3
                i = k + 1
                deg += LETTER_DEGREE[letter]
                if letter == UNIT:
                    continue
                if letter == GEN:
                    sgn = 1.0 - 2.0 * par[mask & self._sign_mask[i]]
                    a *= sgn / self.mu[k]
                    mask |= 1 << self._pos[i]
                elif letter == STAR:
                    sgn = 1.0 - 2.0 * par[mask & self._sign_mask[-i]]
                    a *= sgn * self.mu[k]
                    mask |= 1 << self._pos[-i]
                else:  # Y: y_i x_A = sign(i,A) sign(-i,A+{i}) x_{A+{-i,i}}
                    sgn = 1.0 - 2.0 * par[mask & self._sign_mask[i]]
                    mask |= 1 << self._pos[i]
                    sgn *= 1.0 - 2.0 * par[mask & self._sign_mask[-i]]
                    mask |= 1 << self._pos[-i]
                    a *= sgn
            target[w] = mask
            amp[w] = a
            degree[w] = deg
        if np.min(np.abs(amp)) == 0.0 or np.unique(target).size != nwords:
            raise AssertionError("monomial basis map degenerated: construction bug")
        inv = np.zeros(nwords, dtype=np.int64)
        inv[target] = np.arange(nwords)
        self._mono = (target, amp, degree, inv)
        return self._mono

    @property
    def monomial_degrees(self) -> np.ndarray:
        return self._monomial_data()[2]

    def embedding_condition(self) -> float:
        """Condition number of the monomial -> vacuum-vector bijection."""
        amp = self._monomial_data()[1]
        return float(np.max(np.abs(amp)) / np.min(np.abs(amp)))

    def monomial_matrix(self, word) -> np.ndarray:
        """Dense matrix of the monomial with the given letter tuple."""
        word = tuple(word) if not np.isscalar(word) else self.word_of(word)
        out = None
        for k in range(self.n - 1, -1, -1):
            if word[k] == UNIT:
                continue
            out = self.apply_letter(word[k], k + 1, self.identity() if out is None else out)
        return self.identity() if out is None else out

    def monomial_stack(self) -> np.ndarray:
        """(4**n, dim, dim) array of all monomial matrices (n <= 4)."""
        if self.n > 4:
            raise ValueError("monomial stack is limited to n <= 4")

        def build():
            stack = np.empty((self.dim, self.dim, self.dim), dtype=np.complex128)
            for w in range(self.dim):
                stack[w] = self.monomial_matrix(self.word_of(w))
            return stack

        return self._cached(("stack",), build)

    def expand(self, X: np.ndarray) -> np.ndarray:
        """Monomial coefficients of X (exact inverse of the embedding)."""
        target, amp, _, _ = self._monomial_data()
        v = X[:, 0] if X.ndim == 2 else X
        return v[target] / amp

    def expand_gns(self, vec: np.ndarray) -> np.ndarray:
        """Monomial coefficients of the element whose vacuum vector is vec."""
        target, amp, _, _ = self._monomial_data()
        return vec[target] / amp

    def coeffs_to_gns(self, coeffs: np.ndarray) -> np.ndarray:
        """Vacuum vector of the element with the given monomial coefficients."""
        target, amp, _, _ = self._monomial_data()
        v = np.zeros(self.dim, dtype=np.complex128)
        v[target] = amp * np.asarray(coeffs, dtype=np.complex128)
        return v

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        """Dense matrix of sum_w coeffs[w] M_w."""
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if ("stack",) in self._matrix_cache or (self.n <= 3 and self.dim <= 64):
            stack = self.monomial_stack()
            return np.tensordot(coeffs, stack, axes=1)
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for w in np.nonzero(np.abs(coeffs) > 0)[0]:
            out += coeffs[w] * self.monomial_matrix(self.word_of(int(w)))
        return out

    def membership_residual(self, X: np.ndarray) -> float:
        """Relative Frobenius distance of X from the monomial span."""
        rec = self.reconstruct(self.expand(X))
        scale = np.linalg.norm(X)
        return float(np.linalg.norm(X - rec) / (scale if scale > 0 else 1.0))

    def random_element(self, rng, scale: float = 1.0) -> np.ndarray:
        """Random algebra element with i.i.d. complex gaussian coefficients."""
        c = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        return self.reconstruct(scale * c)

    # ------------------------------------------------------------------
    # relation checks
    # ------------------------------------------------------------------

    def verify_relations(self, check_signs=None) -> RelationsReport:
        """Residuals of the four generator relation families.

        ``check_signs`` lets the relations be tested against a different
        sign table than the one used to build the operators (mutation
        testing); by default the model's own table is used.
        """
        eps = (check_signs or self.params.signs).matrix()
        # products computed as kernel applications to cached matrices,
        # O(dim^2) per product instead of a dense matmul
        gam = [self.gamma(i) for i in range(1, self.n + 1)]
        gs = [self.gamma_star(i) for i in range(1, self.n + 1)]

        def maxabs(M):
            return float(np.max(np.abs(M))) if M.size else 0.0

        comm = 0.0
        star_comm = 0.0
        for i in range(1, self.n + 1):
            for j in range(1, self.n + 1):
                if i == j:
                    continue
                e = eps[i - 1, j - 1]
                if i < j:
                    r = self.apply_gamma(i, gam[j - 1]) - e * self.apply_gamma(j, gam[i - 1])
                    comm = max(comm, maxabs(r))
                r = self.apply_gamma_star(i, gam[j - 1]) - e * self.apply_gamma(j, gs[i - 1])
                star_comm = max(star_comm, maxabs(r))
        square = 0.0
        anti = 0.0
        for i in range(1, self.n + 1):
            square = max(square, maxabs(self.apply_gamma(i, gam[i - 1])),
                         maxabs(self.apply_gamma_star(i, gs[i - 1])))
            acomm = self.apply_gamma_star(i, gam[i - 1]) + self.apply_gamma(i, gs[i - 1])
            c = self.mu[i - 1] ** 2 + self.mu[i - 1] ** -2
            acomm[np.diag_indices(self.dim)] -= c
            anti = max(anti, maxabs(acomm))
        return RelationsReport(commutation=comm, star_commutation=star_comm,
                               square=square, anticommutator=anti)


@lru_cache(maxsize=64)
def get_model(params: ModelParams) -> BabyFock:
    """Shared, cached model instance for a parameter set."""
    return BabyFock(params)
