"""Monte-Carlo central limit: random sign lifts and sparse moment evaluation.

The model on pair indices (i, j), 1 <= i <= n, 1 <= j <= m carries the
same construction as the base model, with the sign function sampled
i.i.d. on unordered pairs: P(+1) = (1+q)/2.  The normalized sums
s_i = m**-0.5 sum_j g_(i,j) converge in moments to the q-deformed
circular variables, which is what the report measures against the
exact oracle.

States are kept sparse as rows of ascending letter codes; moments are
evaluated by splitting the word in half and pairing the two vacuum
images, which keeps the support near (2m)**(len/2).  The inner loop
lives in ``_kernels`` (numba or numpy backend).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import PAD, expand_ops_sparse
from .qfock import QParams, moment, parse_word, word_adjoint

__all__ = [
    "BigSignSample", "sample_signs", "pair_code", "SparseState",
    "gamma_apply_sparse", "s_apply", "clt_estimate", "convergence_report",
    "sample_moment", "dense_reference_moment", "MAX_CLT_WORD", "MAX_CLT_M",
    "report_to_csv",
]

MAX_CLT_WORD = 6
MAX_CLT_M = 64
PRUNE_TOL = 1e-15


def pair_code(i: int, j: int, n: int, m: int) -> int:
    """Order-preserving code of the signed pair index (i, j) in [0, 2nm).

    The total order is lexicographic on (first, second); negative pairs
    (-i, -j) occupy codes [0, nm), positive ones [nm, 2nm).
    """
    if not (1 <= abs(i) <= n and 1 <= abs(j) <= m) or (i > 0) != (j > 0):
        raise ValueError(f"bad pair index ({i}, {j})")
    if i > 0:
        return n * m + (i - 1) * m + (j - 1)
    return (n - (-i)) * m + (m - (-j))


@dataclass
class BigSignSample:
    """One draw of the lifted sign function on absolute pair indices."""

    n: int
    m: int
    q: float
    seed: int
    sample_index: int
    signs: np.ndarray  # (nm, nm) int8, symmetric, -1 on the diagonal
    _epsneg: np.ndarray = field(default=None, repr=False)

    def epsneg(self) -> np.ndarray:
        """(2nm, 2nm) uint8 table: 1 where the lifted sign is -1."""
        if self._epsneg is None:
            nm = self.n * self.m
            # absolute pair index of each code
            a = np.arange(2 * nm)
            first = a // self.m
            second = a % self.m
            i_abs = np.where(first < self.n, self.n - first, first - self.n + 1)
            j_abs = np.where(first < self.n, self.m - second, second + 1)
            k = (i_abs - 1) * self.m + (j_abs - 1)
            self._epsneg = (self.signs[np.ix_(k, k)] == -1).astype(np.uint8)
        return self._epsneg


def sample_signs(q: float, n: int, m: int, seed: int, sample_index: int = 0) -> BigSignSample:
    """i.i.d. signs with P(+1) = (1+q)/2, Philox-keyed by (seed, sample_index).

    The whole upper triangle is drawn in one fixed-order pass, so the
    result does not depend on evaluation order or thread assignment.
    """
    if not (-1.0 <= q < 1.0):
        raise ValueError(f"q must be in [-1, 1), got {q}")
    nm = n * m
    rng = np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(sample_index)]))
    iu = np.triu_indices(nm, k=1)
    draws = np.where(rng.random(iu[0].size) < (1.0 + q) / 2.0, 1, -1).astype(np.int8)
    signs = -np.eye(nm, dtype=np.int8)
    signs[iu] = draws
    signs[(iu[1], iu[0])] = draws
    return BigSignSample(n=n, m=m, q=q, seed=seed, sample_index=sample_index, signs=signs)


# ============================================================================
# sparse states
# ============================================================================


@dataclass
class SparseState:
    """Sparse vacuum-representation vector on pair-index basis sets.

    ``codes`` holds one basis set per row as ascending letter codes
    padded with PAD; ``coeffs`` the amplitudes.  Zero entries are pruned
    below 1e-15.
    """

    codes: np.ndarray
    coeffs: np.ndarray

    @classmethod
    def vacuum(cls, width: int = MAX_CLT_WORD) -> "SparseState":
        return cls(*_vacuum_sparse(width))

    def vacuum_coefficient(self) -> complex:
        hit = np.all(self.codes == PAD, axis=1)
        return complex(self.coeffs[hit].sum())


def _vacuum_sparse(width: int):
    return (np.full((1, width), PAD, dtype=np.int16),
            np.ones(1, dtype=np.complex128))


def _combine(codes: np.ndarray, coeffs: np.ndarray, prune: float = PRUNE_TOL):
    if coeffs.size == 0:
        return codes, coeffs
    width = codes.shape[1]
    vals = np.where(codes == PAD, 0, codes.astype(np.int64) + 1)
    keys = np.zeros(coeffs.size, dtype=np.int64)
    for t in range(width):
        keys = keys * 1024 + vals[:, t]
    uniq, inv = np.unique(keys, return_inverse=True)
    agg = np.zeros(uniq.size, dtype=np.complex128)
    np.add.at(agg, inv, coeffs)
    first = np.zeros(uniq.size, dtype=np.int64)
    first[inv[::-1]] = np.arange(coeffs.size)[::-1]
    keep = np.abs(agg) > prune
    return codes[first][keep], agg[keep]


def _letter_ops(kind: str, i: int, mu_i: float, n: int, m: int):
    """Operator list (codes, create flags, weights) of s_i, s*_i, or x_i."""
    codes, create, weights = [], [], []
    w = 1.0 / np.sqrt(m)

    def add(parts_scale, star):
        for j in range(1, m + 1):
            if not star:
                codes.append(pair_code(i, j, n, m)); create.append(True)
                weights.append(parts_scale * w / mu_i)
                codes.append(pair_code(-i, -j, n, m)); create.append(False)
                weights.append(parts_scale * w * mu_i)
            else:
                codes.append(pair_code(i, j, n, m)); create.append(False)
                weights.append(parts_scale * w / mu_i)
                codes.append(pair_code(-i, -j, n, m)); create.append(True)
                weights.append(parts_scale * w * mu_i)

    if kind == "g":
        add(1.0, False)
    elif kind == "g*":
        add(1.0, True)
    elif kind == "x":
        nrm = 1.0 / np.sqrt(mu_i ** 2 + mu_i ** -2)
        add(nrm, False)
        add(nrm, True)
    else:
        raise ValueError(f"unknown letter kind {kind!r}")
    return (np.asarray(codes, dtype=np.int16), np.asarray(create, dtype=np.bool_),
            np.asarray(weights, dtype=np.complex128))


def _expand_combined(codes, coeffs, ops, epsneg):
    """One operator application with duplicate combining, chunked by rows.

    Chunking keeps the uncombined expansion (rows x n_ops entries) from
    ballooning on wide operator sums.
    """
    chunk = max(1, (1 << 22) // max(1, ops[0].shape[0]))
    if codes.shape[0] <= chunk:
        return _combine(*expand_ops_sparse(codes, coeffs, *ops, epsneg))
    acc_c, acc_v = [], []
    for lo in range(0, codes.shape[0], chunk):
        c, v = expand_ops_sparse(codes[lo:lo + chunk], coeffs[lo:lo + chunk],
                                 *ops, epsneg)
        c, v = _combine(c, v)
        acc_c.append(c)
        acc_v.append(v)
    return _combine(np.concatenate(acc_c, axis=0), np.concatenate(acc_v))


def gamma_apply_sparse(pair, state: SparseState, sample: BigSignSample,
                       mu) -> SparseState:
    """Apply one lifted gaussian g_(i,j) to a sparse state."""
    i, j = pair
    mu_i = mu[i - 1]
    ops = (np.array([pair_code(i, j, sample.n, sample.m),
                     pair_code(-i, -j, sample.n, sample.m)], dtype=np.int16),
           np.array([True, False]),
           np.array([1.0 / mu_i, mu_i], dtype=np.complex128))
    return SparseState(*_expand_combined(state.codes, state.coeffs, ops,
                                         sample.epsneg()))


def s_apply(i: int, state: SparseState, sample: BigSignSample, mu) -> SparseState:
    """Apply the normalized sum s_i = m**-0.5 sum_j g_(i,j)."""
    ops = _letter_ops("g", i, mu[i - 1], sample.n, sample.m)
    return SparseState(*_expand_combined(state.codes, state.coeffs, ops,
                                         sample.epsneg()))


def _apply_word(letters, sample: BigSignSample, mu, width: int):
    """Apply the letters right-to-left to the sparse vacuum."""
    epsneg = sample.epsneg()
    codes, coeffs = _vacuum_sparse(width)
    for kind, i in reversed(letters):
        ops = _letter_ops(kind, i, mu[i - 1], sample.n, sample.m)
        codes, coeffs = _expand_combined(codes, coeffs, ops, epsneg)
    return codes, coeffs


def _sparse_inner(ca, va, cb, vb) -> complex:
    """<a, b> = sum_A a_A conj(b_A) on packed keys."""
    def pack(codes):
        vals = np.where(codes == PAD, 0, codes.astype(np.int64) + 1)
        keys = np.zeros(codes.shape[0], dtype=np.int64)
        for t in range(codes.shape[1]):
            keys = keys * 1024 + vals[:, t]
        return keys

    ka, kb = pack(ca), pack(cb)
    sa, sb = np.argsort(ka), np.argsort(kb)
    common, ia, ib = np.intersect1d(ka[sa], kb[sb], assume_unique=True,
                                    return_indices=True)
    del common
    return complex(np.sum(va[sa][ia] * np.conj(vb[sb][ib])))


def _validate_word(letters, n: int, m: int):
    if len(letters) > MAX_CLT_WORD or m > MAX_CLT_M:
        raise ValueError(
            f"budget: word length <= {MAX_CLT_WORD} and m <= {MAX_CLT_M}")
    for kind, i in letters:
        if not (1 <= i <= n):
            raise ValueError(f"letter index {i} out of range for n={n}")
        if kind not in ("g", "g*", "x"):
            raise ValueError(f"unknown letter kind {kind!r}")


def sample_moment(letters, sample: BigSignSample, mu) -> complex:
    """tau of the word in s_i / s*_i / x_i letters for one fixed sign sample.

    The word W = L R is split in half and tau(W) = <R vac, L* vac>,
    which caps the sparse support at the half-word depth.
    """
    letters = list(letters)
    _validate_word(letters, sample.n, sample.m)
    half = len(letters) // 2
    width = max(1, max(half, len(letters) - half))
    right = _apply_word(letters[half:], sample, mu, width)
    if letters[:half] == letters[half:] and \
            letters[:half] == word_adjoint(letters[:half]):
        left = right
    else:
        left = _apply_word(word_adjoint(letters[:half]), sample, mu, width)
    return _sparse_inner(*right, *left)


def clt_estimate(letters, q: float, mu, m: int, samples: int, seed: int):
    """Monte-Carlo mean and standard error of tau over sign samples."""
    if isinstance(letters, str):
        letters = parse_word(letters)
    mu = tuple(float(x) for x in (mu if np.iterable(mu) else (mu,)))
    n = max(i for _, i in letters)
    if len(mu) < n:
        raise ValueError(f"need {n} mu values")
    vals = np.empty(samples, dtype=np.complex128)
    for s in range(samples):
        sample = sample_signs(q, n, m, seed, sample_index=s)
        vals[s] = sample_moment(letters, sample, mu)
    mean = complex(vals.mean())
    if samples > 1:
        var = np.var(vals.real, ddof=1) + np.var(vals.imag, ddof=1)
        stderr = float(np.sqrt(var / samples))
    else:
        stderr = 0.0
    return mean, stderr


def convergence_report(letters, q: float, mu, m_list, samples: int, seed: int,
                       trajectories: int = 3) -> list:
    """Rows of (m, mean, stderr, oracle, abs err) against the exact oracle.

    The limit statement holds sample by sample, so each row also carries
    the raw moments of the first few pinned sign samples ("traj"), not
    just the average.
    """
    if isinstance(letters, str):
        letters = parse_word(letters)
    mu = tuple(float(x) for x in (mu if np.iterable(mu) else (mu,)))
    n = max(i for _, i in letters)
    oracle = moment(letters, QParams(q=q, n=n, mu=mu[:n],
                                     max_level=max(1, len(letters))))
    rows = []
    for m in m_list:
        mean, stderr = clt_estimate(letters, q, mu, int(m), samples, seed)
        row = {"m": int(m), "mean": mean, "stderr": stderr,
               "oracle": oracle, "abs_err": abs(mean - oracle)}
        row["traj"] = [sample_moment(letters, sample_signs(q, n, int(m), seed, s), mu)
                       for s in range(trajectories)]
        rows.append(row)
    return rows


def report_to_csv(rows) -> str:
    """CSV per the report schema: m,mean_re,mean_im,stderr,oracle_re,oracle_im,abs_err."""
    lines = ["m,mean_re,mean_im,stderr,oracle_re,oracle_im,abs_err"]
    for r in rows:
        lines.append(",".join(repr(x) for x in (
            r["m"], r["mean"].real, r["mean"].imag, r["stderr"],
            r["oracle"].real, r["oracle"].imag, r["abs_err"])))
    return "\n".join(lines) + "\n"


def dense_reference_moment(letters, sample: BigSignSample, mu) -> complex:
    """Dense cross-check: evaluate the same moment in the flat base model.

    The lifted model with nm total pair indices is itself a base model
    whose k-th gaussian is g_(i,j) with k = (i-1) m + j; only small
    instances (nm <= 3) are accepted.
    """
    from .babyfock import BabyFock
    from .signs import ModelParams, SignTable

    n, m = sample.n, sample.m
    nm = n * m
    if nm > 3:
        raise ValueError("dense reference limited to n*m <= 3")
    table = SignTable.from_dict(
        {(k, l): int(sample.signs[k - 1, l - 1]) for k in range(1, nm + 1)
         for l in range(k + 1, nm + 1)}, nm)
    flat_mu = tuple(float(mu[i - 1]) for i in range(1, n + 1) for _ in range(m))
    model = BabyFock(ModelParams(n=nm, mu=flat_mu, signs=table))
    vec = model.vacuum_vector()
    for kind, i in reversed(list(letters)):
        mu_i = mu[i - 1]
        flats = [(i - 1) * m + j for j in range(1, m + 1)]
        out = np.zeros_like(vec)
        for k in flats:
            if kind in ("g", "x"):
                out += model.apply_gamma(k, vec)
            if kind in ("g*", "x"):
                out += model.apply_gamma_star(k, vec)
        out /= np.sqrt(m)
        if kind == "x":
            out /= np.sqrt(mu_i ** 2 + mu_i ** -2)
        vec = out
    return complex(vec[0])
