"""Hypercontractivity checks: convexity margins, time thresholds, ratio search.

The contraction being probed is x D**(1/p) -> P_t(x) D**(1/2) from L^p
into L^2 (1 < p < 2), plus the dual direction from L^2 into L^p'.  The
sufficient threshold is the proof-level bound

    exp(-2t) <= min over indices of
        min{ (mu**4 + 1)**(1 - 2/p) (p - 1),  sqrt(C(mu)) sqrt(p - 1) },

with C(mu) the asymmetric-convexity constant.  The necessary threshold
comes from the second-order expansion of the canonical witness family
1 + eps g: exactly (mu**(4/n) - 1)/(mu**4 - 1) at p' = 2n, while the
displayed closed form (1/n) mu**(4/n - 4) differs for mu > 1; both are
reported with a discrepancy flag.

The search is multistart randomized coordinate ascent over monomial
coefficients, vectorized across restarts, deterministic for a fixed
seed.  It only ever produces lower bounds on the operator norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .babyfock import GEN, BabyFock, get_model
from .linalg import psd_power, schatten_norm
from .state import DensityFactorization, embed_lower, get_density, haagerup_norm

__all__ = [
    "C_of_mu", "bcl_check", "asym_convexity_check", "dual_convexity_check",
    "sufficient_time", "theorem_bound", "contraction_ratio",
    "dual_contraction_ratio", "RatioEvaluator", "ViolationWitness",
    "violation_search", "NecessaryThreshold", "necessary_time_exact",
    "decomposition_identity_check", "gamma_lower_bound_check",
    "disjoint_support_check", "witness_primal_to_dual", "witness_dual_to_primal",
]


# ============================================================================
# convexity inequalities
# ============================================================================


def C_of_mu(p: float, mu: float) -> float:
    """Asymmetric convexity constant; the range boundary sits at p = 4/3.

    (The low/high split corresponds to the dual ranges q >= 4 and
    2 <= q < 4; both branches agree at p = 4/3.)
    """
    if not (1.0 < p <= 2.0):
        raise ValueError(f"need 1 < p <= 2, got {p}")
    if mu < 1.0:
        raise ValueError(f"mu must be >= 1, got {mu}")
    if p <= 4.0 / 3.0:
        return mu ** -4 / 3.0
    return mu ** (8.0 - 16.0 / p) / 3.0


def bcl_check(A: np.ndarray, B: np.ndarray, p: float) -> float:
    """Margin of the two-point convexity inequality, >= 0 for 1 < p <= 2."""
    if not (1.0 < p <= 2.0):
        raise ValueError(f"need 1 < p <= 2, got {p}")
    lhs = (0.5 * schatten_norm(A + B, p) ** p + 0.5 * schatten_norm(A - B, p) ** p) ** (2.0 / p)
    return float(lhs - schatten_norm(A, p) ** 2 - (p - 1.0) * schatten_norm(B, p) ** 2)


def asym_convexity_check(A: np.ndarray, B: np.ndarray, p: float, mu: float) -> float:
    """Margin of the weighted asymmetric version with constant C(mu)."""
    lam = 1.0 / (1.0 + mu ** 4)
    lhs = (lam * schatten_norm(A + mu ** 2 * B, p) ** p
           + (1.0 - lam) * schatten_norm(A - B / mu ** 2, p) ** p) ** (2.0 / p)
    rhs = schatten_norm(A, p) ** 2 + C_of_mu(p, mu) * (p - 1.0) * schatten_norm(B, p) ** 2
    return float(lhs - rhs)


def dual_convexity_check(X: np.ndarray, Y: np.ndarray, q: float, mu: float,
                         coeff: float | None = None) -> float:
    """Margin of the dual inequality for q >= 2.

    The default coefficient (q-1) / (mu**4 C(p, mu)) with p conjugate to
    q is the one the duality argument produces; at q = 2 the sharp
    coefficient mu**-4 (an equality) can be passed explicitly.
    """
    if q < 2.0:
        raise ValueError(f"need q >= 2, got {q}")
    lam = 1.0 / (1.0 + mu ** 4)
    if coeff is None:
        coeff = (q - 1.0) / (mu ** 4 * C_of_mu(q / (q - 1.0), mu))
    lhs = schatten_norm(X, q) ** 2 + coeff * schatten_norm(Y, q) ** 2
    rhs = (lam * schatten_norm(X + Y, q) ** q
           + (1.0 - lam) * schatten_norm(X - (lam / (1.0 - lam)) * Y, q) ** q) ** (2.0 / q)
    return float(lhs - rhs)


# ============================================================================
# time thresholds
# ============================================================================


def sufficient_time(p: float, mu) -> float:
    """Proof-level exp(-2t) threshold, minimized over the index weights."""
    if not (1.0 < p < 2.0):
        raise ValueError(f"need 1 < p < 2, got {p}")
    mus = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    best = np.inf
    for m in mus:
        a = (m ** 4 + 1.0) ** (1.0 - 2.0 / p) * (p - 1.0)
        b = np.sqrt(C_of_mu(p, float(m))) * np.sqrt(p - 1.0)
        best = min(best, a, b)
    return float(best)


def theorem_bound(p: float, alpha_mu: float, c_universal: float) -> float:
    """exp(-2t) <= C alpha**(4 - 8/p) (p - 1); the constant is a free input."""
    if not (1.0 < p < 2.0):
        raise ValueError(f"need 1 < p < 2, got {p}")
    return float(c_universal * alpha_mu ** (4.0 - 8.0 / p) * (p - 1.0))


@dataclass(frozen=True)
class NecessaryThreshold:
    """Exact vs displayed necessary exp(-2t) threshold at p' = 2 n_half."""

    exact: float
    paper_display: float

    @property
    def differs(self) -> bool:
        return abs(self.exact - self.paper_display) > 1e-12 * self.exact


def necessary_time_exact(n_half: int, mu: float) -> NecessaryThreshold:
    """Threshold where the witness 1 + eps g stops contracting into L^(2 n_half).

    Comparing the displayed second-order coefficients directly gives
    (mu**(4/n) - 1)/(mu**4 - 1); the displayed closed form is
    (1/n) mu**(4/n - 4).  They agree only at mu = 1 (both 1/n).
    """
    if n_half < 2:
        raise ValueError(f"n_half must be >= 2, got {n_half}")
    if mu < 1.0:
        raise ValueError(f"mu must be >= 1, got {mu}")
    n = float(n_half)
    if mu == 1.0:
        exact = 1.0 / n
    else:
        exact = (mu ** (4.0 / n) - 1.0) / (mu ** 4 - 1.0)
    return NecessaryThreshold(exact=exact, paper_display=mu ** (4.0 / n - 4.0) / n)


# ============================================================================
# contraction ratios
# ============================================================================


def _l2_weights(model: BabyFock, t: float) -> np.ndarray:
    """Per-monomial weight |amp_w|**2 exp(-2 t deg_w): squared L2 norm terms."""
    _, amp, deg, _ = model._monomial_data()
    return amp ** 2 * np.exp(-2.0 * t * deg)


def contraction_ratio(model: BabyFock, X: np.ndarray, t: float, p: float,
                      density: DensityFactorization | None = None) -> float:
    """|| P_t(X) D**(1/2) ||_2 / || X D**(1/p) ||_p."""
    dens = density or get_density(model)
    coeffs = model.expand(X)
    if not np.any(np.abs(coeffs) > 0):
        raise ValueError("zero element has no contraction ratio")
    num = np.sqrt(float(np.sum(_l2_weights(model, t) * np.abs(coeffs) ** 2)))
    den = schatten_norm(np.asarray(X) @ dens.power(1.0 / p), p)
    return num / den


def dual_contraction_ratio(model: BabyFock, X: np.ndarray, t: float, pprime: float,
                           density: DensityFactorization | None = None) -> float:
    """|| P_t(X) D**(1/p') ||_p' / || X D**(1/2) ||_2."""
    dens = density or get_density(model)
    coeffs = model.expand(X)
    if not np.any(np.abs(coeffs) > 0):
        raise ValueError("zero element has no contraction ratio")
    scaled = coeffs * np.exp(-t * model.monomial_degrees)
    num = schatten_norm(model.reconstruct(scaled) @ dens.power(1.0 / pprime), pprime)
    den = np.sqrt(float(np.sum(_l2_weights(model, 0.0) * np.abs(coeffs) ** 2)))
    return num / den


class RatioEvaluator:
    """Batched contraction-ratio evaluation over monomial coefficient vectors.

    direction "primal": L2 numerator from the coefficient weights,
    Schatten denominator from sum_w c_w M_w D**(1/p).  direction
    "dual": Schatten numerator with the semigroup folded into the
    per-monomial stack, L2 denominator from the weights.
    """

    def __init__(self, model: BabyFock, t: float, p: float, direction: str = "primal",
                 density: DensityFactorization | None = None):
        if direction not in ("primal", "dual"):
            raise ValueError(f"unknown direction {direction!r}")
        if model.n > 4:
            raise ValueError("ratio search is limited to n <= 4")
        dens = density or get_density(model)
        self.model = model
        self.t = float(t)
        self.p = float(p)
        self.direction = direction
        stack = model.monomial_stack()
        if direction == "primal":
            self.r = self.p            # Schatten exponent of the denominator
            droot = dens.power(1.0 / self.p)
            self.mat_stack = stack @ droot
            self.vec_weights = _l2_weights(model, t)
        else:
            self.r = self.p            # here p plays the role of p'
            droot = dens.power(1.0 / self.p)
            scaled = np.exp(-t * model.monomial_degrees)
            self.mat_stack = (stack * scaled[:, None, None]) @ droot
            self.vec_weights = _l2_weights(model, 0.0)
        self.flat = self.mat_stack.reshape(model.dim, -1)

    def matrices(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.atleast_2d(coeffs)
        dim = self.model.dim
        return (coeffs @ self.flat).reshape(coeffs.shape[0], dim, dim)

    def _pnorms(self, mats: np.ndarray) -> np.ndarray:
        w = np.linalg.eigvalsh(mats.conj().transpose(0, 2, 1) @ mats)
        w = np.clip(w, 0.0, None)
        top = np.max(w, axis=1, keepdims=True)
        safe = np.where(top > 0, top, 1.0)
        s = np.sum((w / safe) ** (self.r / 2.0), axis=1)
        return np.sqrt(safe[:, 0]) * s ** (1.0 / self.r)

    def ratios(self, coeffs: np.ndarray, mats: np.ndarray | None = None) -> np.ndarray:
        coeffs = np.atleast_2d(coeffs)
        if mats is None:
            mats = self.matrices(coeffs)
        vec = np.sqrt(np.sum(self.vec_weights * np.abs(coeffs) ** 2, axis=1))
        mat = self._pnorms(mats)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = vec / mat if self.direction == "primal" else mat / vec
        return np.where(np.isfinite(out), out, 0.0)

    def ratio(self, coeffs: np.ndarray) -> float:
        return float(self.ratios(coeffs[None, :])[0])


@dataclass
class ViolationWitness:
    """Best ratio found by the search and the coefficients achieving it."""

    coeffs: np.ndarray
    ratio: float
    t: float
    p: float
    direction: str


def _canonical_seeds(model: BabyFock) -> list:
    """The identity and 1 + eps g_i for eps in {1e-2, 1e-1}."""
    seeds = []
    unit = np.zeros(model.dim, dtype=np.complex128)
    unit[0] = 1.0
    seeds.append(unit)
    for i in range(1, model.n + 1):
        w = model.windex_of(tuple(GEN if k == i - 1 else 0 for k in range(model.n)))
        for eps in (1e-2, 1e-1):
            c = unit.copy()
            c[w] = eps
            seeds.append(c)
    return seeds


def violation_search(model: BabyFock, t: float, p: float, direction: str = "primal",
                     restarts: int = 100, seed: int = 0, iters: int = 200,
                     density: DensityFactorization | None = None,
                     step_floor: float = 1e-8, extra_seeds=None) -> ViolationWitness:
    """Multistart coordinate ascent on the contraction ratio.

    Deterministic for a fixed seed; restarts are vectorized in blocks
    and each keeps a relative step that starts at 0.1 and halves on
    every failed proposal, retiring the restart once it drops below
    ``step_floor``.  Returns the best ratio found (a lower bound on the
    operator norm, never a certificate).
    """
    ev = RatioEvaluator(model, t, p, direction, density)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    nw = model.dim
    starts = rng.standard_normal((restarts, nw)) + 1j * rng.standard_normal((restarts, nw))
    canon = _canonical_seeds(model)
    if extra_seeds is not None:
        canon = canon + [np.asarray(c, dtype=np.complex128) for c in extra_seeds]
    for k, c in enumerate(canon[:restarts]):
        starts[k] = c
    best_ratio = -np.inf
    best_coeffs = None
    block_rows = max(1, (1 << 24) // (model.dim * model.dim))
    dirs4 = np.array([1.0, -1.0, 1.0j, -1.0j], dtype=np.complex128)
    for lo in range(0, restarts, block_rows):
        C = starts[lo:lo + block_rows].copy()
        rows = C.shape[0]
        mats = ev.matrices(C)
        ratio = ev.ratios(C, mats)
        step = np.full(rows, 0.1)
        active = np.arange(rows)
        for _ in range(iters):
            if active.size == 0:
                break
            k_idx = rng.integers(0, nw, size=active.size)
            d_idx = rng.integers(0, 4, size=active.size)
            scale = np.linalg.norm(C[active], axis=1)
            delta = step[active] * scale * dirs4[d_idx]
            cand_mats = mats[active] + delta[:, None, None] * ev.mat_stack[k_idx]
            cand = C[active].copy()
            cand[np.arange(active.size), k_idx] += delta
            cand_ratio = ev.ratios(cand, cand_mats)
            better = cand_ratio > ratio[active]
            upd = active[better]
            if upd.size:
                # renormalize: the ratio is scale-invariant and unnormalized
                # coefficients would otherwise compound without bound
                nrm = np.linalg.norm(cand[better], axis=1)
                C[upd] = cand[better] / nrm[:, None]
                mats[upd] = cand_mats[better] / nrm[:, None, None]
                ratio[upd] = cand_ratio[better]
            worse = active[~better]
            step[worse] *= 0.5
            active = active[(step[active] >= step_floor)]
        blk_best = int(np.argmax(ratio))
        if ratio[blk_best] > best_ratio:
            best_ratio = float(ratio[blk_best])
            best_coeffs = C[blk_best].copy()
    return ViolationWitness(coeffs=best_coeffs, ratio=best_ratio, t=t, p=p,
                            direction=direction)


# ============================================================================
# duality helpers for witness transport
# ============================================================================


def witness_primal_to_dual(model: BabyFock, coeffs: np.ndarray, t: float) -> np.ndarray:
    """P_t maps a primal witness to a dual candidate with ratio at least as large."""
    out = np.asarray(coeffs) * np.exp(-t * model.monomial_degrees)
    return out / np.linalg.norm(out)


def witness_dual_to_primal(model: BabyFock, coeffs: np.ndarray, t: float, p: float,
                           density: DensityFactorization | None = None) -> np.ndarray:
    """Norming element transport: dual witness -> primal candidate coefficients.

    For z = P_t(Y) D**(1/p'), the Hoelder-equality partner in L^p is
    z (z*z)**((p'-2)/2) up to normalization; dividing out D**(1/p)
    returns an algebra element because everything is a function of
    elements of the algebra.
    """
    dens = density or get_density(model)
    pprime = p / (p - 1.0)
    scaled = np.asarray(coeffs) * np.exp(-t * model.monomial_degrees)
    z = model.reconstruct(scaled) @ dens.power(1.0 / pprime)
    z /= schatten_norm(z, pprime)
    xi = z @ psd_power(z.conj().T @ z, (pprime - 2.0) / 2.0)
    out = model.expand(xi @ dens.power(-1.0 / p))
    return out / np.linalg.norm(out)


# ============================================================================
# structural identities (position of the smaller algebra)
# ============================================================================


def _split_models(model: BabyFock):
    small = get_model(model.params.sub(model.n - 1))
    return small, model.mu[model.n - 1]


def decomposition_identity_check(a: np.ndarray, d: np.ndarray, p: float,
                                 model: BabyFock) -> dict:
    """Both sides of the exact split of || (a + y_n d) D**(1/p) ||_p**2.

    a, d live in the model on indices 1..n-1.
    """
    small, mu = _split_models(model)
    lam = 1.0 / (1.0 + mu ** 4)
    A = embed_lower(a, small, model)
    Dd = embed_lower(d, small, model)
    X = A + model.apply_y(model.n, Dd)
    lhs = haagerup_norm(model, X, p) ** 2
    rhs = (lam * haagerup_norm(small, np.asarray(a) + mu ** 2 * np.asarray(d), p) ** p
           + (1.0 - lam) * haagerup_norm(small, np.asarray(a) - np.asarray(d) / mu ** 2, p) ** p
           ) ** (2.0 / p)
    return {"lhs": float(lhs), "rhs": float(rhs),
            "residual": float(abs(lhs - rhs)), "scale": float(max(lhs, rhs, 1e-300))}


def gamma_lower_bound_check(b: np.ndarray, c: np.ndarray, p: float,
                            model: BabyFock) -> dict:
    """Margins of || g_n b D**(1/p) ||_p >= lam**(1/p) (mu^2+mu^-2)**(1/2) || b D'**(1/p) ||_p
    and the starred counterpart with 1 - lam."""
    small, mu = _split_models(model)
    lam = 1.0 / (1.0 + mu ** 4)
    fac = np.sqrt(mu ** 2 + mu ** -2)
    B = embed_lower(b, small, model)
    Cc = embed_lower(c, small, model)
    lhs_b = haagerup_norm(model, model.apply_gamma(model.n, B), p)
    rhs_b = lam ** (1.0 / p) * fac * haagerup_norm(small, b, p)
    lhs_c = haagerup_norm(model, model.apply_gamma_star(model.n, Cc), p)
    rhs_c = (1.0 - lam) ** (1.0 / p) * fac * haagerup_norm(small, c, p)
    return {"margin_b": float(lhs_b - rhs_b), "margin_c": float(lhs_c - rhs_c),
            "scale_b": float(max(lhs_b, rhs_b, 1e-300)),
            "scale_c": float(max(lhs_c, rhs_c, 1e-300))}


def disjoint_support_check(b: np.ndarray, c: np.ndarray, p: float,
                           model: BabyFock) -> dict:
    """p-th power additivity of g_n b + g*_n c (the two parts have disjoint support)."""
    small, _ = _split_models(model)
    B = embed_lower(b, small, model)
    Cc = embed_lower(c, small, model)
    gb = model.apply_gamma(model.n, B)
    gc = model.apply_gamma_star(model.n, Cc)
    if not (np.any(np.abs(gb) > 0) or np.any(np.abs(gc) > 0)):
        raise ValueError("both parts vanish; additivity check is degenerate")
    total = haagerup_norm(model, gb + gc, p) ** p
    parts = haagerup_norm(model, gb, p) ** p + haagerup_norm(model, gc, p) ** p
    return {"residual": float(abs(total - parts)),
            "scale": float(max(total, parts, 1e-300))}
