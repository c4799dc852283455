"""Dense Hermitian spectral calculus.

Eigendecomposition, Schatten norms, fractional powers of positive
matrices, and first/second derivatives of x -> x**(p/2) expressed
through divided differences on the spectrum.  Divided differences
switch from the difference quotient to the analytic limit when the
relative eigenvalue gap drops below ``CONFLUENT_RELGAP``; the quotient
is catastrophically cancellative for near-equal arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CONFLUENT_RELGAP", "HermitianSpectrum", "eig_hermitian",
    "schatten_norm", "psd_power", "PowerDividedDifferences",
    "frechet1", "frechet2", "c_coeff", "expansion_second_order",
    "expansion_via_frechet", "first_order_term", "richardson_second_coeff",
]

CONFLUENT_RELGAP = 1e-7
_TINY = 1e-300


@dataclass
class HermitianSpectrum:
    """Eigenvalues in descending order with the matching unitary."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eig_hermitian(A: np.ndarray, tol: float = 1e-10) -> HermitianSpectrum:
    """Spectral decomposition; rejects visibly non-Hermitian input."""
    A = np.asarray(A)
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.conj().T) > tol * max(scale, _TINY):
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(A)
    return HermitianSpectrum(eigenvalues=w[::-1].copy(), eigenvectors=v[:, ::-1].copy())


def singular_values(A: np.ndarray) -> np.ndarray:
    """Singular values via the spectrum of A*A, descending.

    Eigenvalues below 1e-14 of the largest are zeroed: they are pure
    roundoff and would otherwise surface as ~1e-8 spurious singular
    values after the square root.
    """
    w = np.linalg.eigvalsh(np.asarray(A).conj().T @ A)[::-1]
    w = np.clip(w, 0.0, None)
    if w.size and w[0] > 0.0:
        w[w < 1e-14 * w[0]] = 0.0
    return np.sqrt(w)


def schatten_norm(A: np.ndarray, p: float) -> float:
    """(sum of sigma_k**p)**(1/p) for p >= 1."""
    if p < 1:
        raise ValueError(f"Schatten norm needs p >= 1, got {p}")
    s = singular_values(A)
    top = s[0] if s.size else 0.0
    if top == 0.0:
        return 0.0
    # factor out the largest singular value to avoid overflow for large p
    return float(top * np.sum((s / top) ** p) ** (1.0 / p))


def psd_power(A: np.ndarray, alpha: float, tol: float = 1e-10) -> np.ndarray:
    """A**alpha by spectral calculus for positive semidefinite A."""
    spec = eig_hermitian(A, tol=tol)
    w = spec.eigenvalues
    top = np.max(np.abs(w)) if w.size else 0.0
    if np.min(w) < -tol * max(top, _TINY):
        raise ValueError("matrix is not positive semidefinite within tolerance")
    w = np.clip(w, 0.0, None)
    if alpha < 0 and np.min(w) <= 0.0:
        raise ValueError("negative power of a singular matrix")
    v = spec.eigenvectors
    return (v * w ** alpha) @ v.conj().T


# ============================================================================
# divided differences of f(x) = x**(p/2)
# ============================================================================


class PowerDividedDifferences:
    """First and second divided differences of f(x) = x**(p/2).

    Vectorized over numpy arrays; confluent (near-equal) argument
    patterns fall back to the analytic limit formulas.
    """

    def __init__(self, p: float, relgap: float = CONFLUENT_RELGAP):
        self.p = float(p)
        self.half = 0.5 * float(p)
        self.relgap = relgap

    def f(self, a):
        return a ** self.half

    def df(self, a):
        return self.half * a ** (self.half - 1.0)

    def d2f(self, a):
        return self.half * (self.half - 1.0) * a ** (self.half - 2.0)

    @staticmethod
    def _gap(a, b):
        return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), _TINY)

    def f1(self, a, b):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        near = self._gap(a, b) <= self.relgap
        denom = np.where(near, 1.0, a - b)
        quot = (self.f(a) - self.f(b)) / denom
        return np.where(near, self.df(0.5 * (a + b)), quot)

    def f2(self, a, b, c):
        a = np.asarray(a, dtype=np.float64)
        b, c = np.asarray(b, dtype=np.float64), np.asarray(c, dtype=np.float64)
        a, b, c = np.broadcast_arrays(a, b, c)
        near_ab = self._gap(a, b) <= self.relgap
        denom = np.where(near_ab, 1.0, a - b)
        quot = (self.f1(a, c) - self.f1(b, c)) / denom
        # a ~ b: differentiate the first slot of f1(., c) at the midpoint
        ab = 0.5 * (a + b)
        near_abc = self._gap(ab, c) <= self.relgap
        dd = np.where(near_abc, 1.0, ab - c)
        partial = (self.df(ab) * dd - (self.f(ab) - self.f(c))) / dd ** 2
        lim = np.where(near_abc, 0.5 * self.d2f((ab + c) / 2.0), partial)
        return np.where(near_ab, lim, quot)


def _spectral_setup(x: np.ndarray, p: float):
    spec = eig_hermitian(x)
    w = spec.eigenvalues
    if np.min(w) <= 1e-8 * max(np.max(np.abs(w)), _TINY):
        raise ValueError("x must be safely positive definite for the derivative formulas")
    return spec, PowerDividedDifferences(p)


def frechet1(x: np.ndarray, h: np.ndarray, p: float) -> np.ndarray:
    """Derivative of x -> x**(p/2) at positive definite x applied to h."""
    spec, dd = _spectral_setup(x, p)
    w, v = spec.eigenvalues, spec.eigenvectors
    hp = v.conj().T @ h @ v
    k1 = dd.f1(w[:, None], w[None, :])
    return v @ (k1 * hp) @ v.conj().T


def frechet2(x: np.ndarray, h: np.ndarray, p: float) -> np.ndarray:
    """Second derivative of x -> x**(p/2) at x applied to (h, h).

    Returns 2 * sum_{s,t,u} f2(l_s, l_t, l_u) p_s h p_t h p_u.
    """
    spec, dd = _spectral_setup(x, p)
    w, v = spec.eigenvalues, spec.eigenvectors
    hp = v.conj().T @ h @ v
    t2 = dd.f2(w[:, None, None], w[None, :, None], w[None, None, :])
    k = 2.0 * np.einsum("stu,st,tu->su", t2, hp, hp, optimize=True)
    return v @ k @ v.conj().T


# ============================================================================
# the eps**2 expansion coefficient of || (1 + eps g) d ||_p^p
# ============================================================================


def c_coeff(p: float, lam: float) -> float:
    """(lam**p - 1)/((lam**2 - 1)(1 - lam**-2)) - p lam**2 / (2 (lam**2 - 1))."""
    if p <= 2:
        raise ValueError(f"expansion coefficient needs p > 2, got {p}")
    if lam <= 0 or lam == 1.0:
        raise ValueError(f"lam must be positive and != 1, got {lam}")
    l2 = lam * lam
    return (lam ** p - 1.0) / ((l2 - 1.0) * (1.0 - 1.0 / l2)) - p * l2 / (2.0 * (l2 - 1.0))


def _check_modular_pair(d: np.ndarray, g: np.ndarray, lam: float, tol: float = 1e-8):
    d = np.asarray(d)
    g = np.asarray(g)
    if np.linalg.norm(d - d.conj().T) > 1e-10 * max(np.linalg.norm(d), _TINY):
        raise ValueError("d must be self-adjoint")
    resid = np.linalg.norm(d @ g - lam * (g @ d))
    scale = max(np.linalg.norm(d) * np.linalg.norm(g), _TINY)
    if resid > tol * scale:
        raise ValueError(f"d g = lam g d violated: residual {resid:.3e} vs scale {scale:.3e}")


def expansion_second_order(d: np.ndarray, g: np.ndarray, p: float, lam: float) -> float:
    """Closed-form eps**2 coefficient of ||(1 + eps g) d||_p^p.

    Requires d self-adjoint invertible and d g = lam g d with lam > 1.
    """
    if lam <= 1.0:
        raise ValueError(f"lam must be > 1, got {lam}")
    _check_modular_pair(d, g, lam)
    dp = psd_power(np.asarray(d) @ np.asarray(d), p / 2.0)
    t_gg = float(np.real(np.trace(dp @ g.conj().T @ g)))
    t_gg_star = float(np.real(np.trace(dp @ g @ g.conj().T)))
    return (p / 2.0 + c_coeff(p, lam)) * t_gg + c_coeff(p, 1.0 / lam) * t_gg_star


def expansion_via_frechet(d: np.ndarray, g: np.ndarray, p: float) -> float:
    """Same eps**2 coefficient through the derivative machinery.

    Expands tr (d**2 + eps d(g+g*)d + eps**2 d g*g d)**(p/2); the
    second-order term combines the first derivative applied to the
    eps**2 part with half the second derivative applied to the eps part.
    """
    d = np.asarray(d)
    g = np.asarray(g)
    x = d @ d
    h1 = d @ (g + g.conj().T) @ d
    h2 = d @ g.conj().T @ g @ d
    first = np.trace(frechet1(x, h2, p))
    second = 0.5 * np.trace(frechet2(x, h1, p))
    return float(np.real(first + second))


def first_order_term(d: np.ndarray, g: np.ndarray, p: float) -> float:
    """tr of the derivative applied to d(g+g*)d; zero under d g = lam g d, lam != 1."""
    d = np.asarray(d)
    g = np.asarray(g)
    h1 = d @ (g + g.conj().T) @ d
    return float(np.real(np.trace(frechet1(d @ d, h1, p))))


def richardson_second_coeff(fn, eps_values=(1e-2, 5e-3, 2.5e-3)) -> float:
    """eps**2 Taylor coefficient of fn at 0 by extrapolated central differences.

    Each estimate (fn(e) + fn(-e) - 2 fn(0)) / (2 e**2) has an error
    series in e**2; Richardson extrapolation over the halved eps grid
    removes the leading terms.
    """
    eps_values = list(eps_values)
    f0 = fn(0.0)
    est = [(fn(e) + fn(-e) - 2.0 * f0) / (2.0 * e * e) for e in eps_values]
    table = [est]
    for level in range(1, len(est)):
        prev = table[-1]
        row = []
        for i in range(len(prev) - 1):
            w = ((eps_values[i] / eps_values[i + 1]) ** 2) ** level
            row.append((w * prev[i + 1] - prev[i]) / (w - 1.0))
        table.append(row)
    return float(table[-1][0])
