"""Commutation-sign tables and model parameters for the twisted finite Fock model.

A sign table fixes the function eps on the signed index set
I = {-n, ..., -1, 1, ..., n}: it is symmetric, equals -1 whenever the two
indices share an absolute value, and otherwise depends only on absolute
values, so it is determined by one sign per unordered pair {k, l} with
1 <= k < l <= n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = ["SignTable", "ModelParams", "MAX_N"]

# dense 4**n matrices; 6 means dimension 4096
MAX_N = 6


@dataclass(frozen=True)
class SignTable:
    """Signs on unordered pairs {k, l}, 1 <= k < l <= n, values in {-1, +1}."""

    n: int
    entries: tuple = field(default=())  # tuple of ((k, l), sign) pairs, ordered

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        expected = {(k, l) for k in range(1, self.n + 1) for l in range(k + 1, self.n + 1)}
        got = {pair for pair, _ in self.entries}
        if got != expected:
            raise ValueError("sign table must cover every pair {k, l} with k < l exactly once")
        for pair, s in self.entries:
            if s not in (-1, 1):
                raise ValueError(f"sign for pair {pair} must be +-1, got {s}")

    @classmethod
    def from_dict(cls, mapping: dict, n: int) -> "SignTable":
        entries = tuple(sorted((tuple(sorted(pair)), int(s)) for pair, s in mapping.items()))
        return cls(n=n, entries=entries)

    @classmethod
    def all_anticommuting(cls, n: int) -> "SignTable":
        """eps = -1 everywhere (CAR / fermionic choice)."""
        return cls.from_dict({(k, l): -1 for k in range(1, n + 1) for l in range(k + 1, n + 1)}, n)

    @classmethod
    def all_commuting(cls, n: int) -> "SignTable":
        """eps = +1 off the diagonal."""
        return cls.from_dict({(k, l): 1 for k in range(1, n + 1) for l in range(k + 1, n + 1)}, n)

    @classmethod
    def random(cls, n: int, seed: int, p_plus: float = 0.5) -> "SignTable":
        """i.i.d. off-diagonal signs with P(+1) = p_plus, Philox-keyed by seed."""
        rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        pairs = [(k, l) for k in range(1, n + 1) for l in range(k + 1, n + 1)]
        draws = rng.random(len(pairs))
        return cls.from_dict(
            {pair: (1 if u < p_plus else -1) for pair, u in zip(pairs, draws)}, n)

    def eps(self, i: int, j: int) -> int:
        """Full sign function on I x I."""
        k, l = abs(i), abs(j)
        if not (1 <= k <= self.n and 1 <= l <= self.n):
            raise ValueError(f"index out of range: ({i}, {j}) for n={self.n}")
        if k == l:
            return -1
        return dict(self.entries)[(min(k, l), max(k, l))]

    def matrix(self) -> np.ndarray:
        """(n, n) int matrix of eps on absolute indices, -1 on the diagonal."""
        m = -np.ones((self.n, self.n), dtype=np.int64)
        for (k, l), s in self.entries:
            m[k - 1, l - 1] = s
            m[l - 1, k - 1] = s
        return m

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "pairs": [[k, l, s] for (k, l), s in self.entries]})

    @classmethod
    def from_json(cls, text: str) -> "SignTable":
        data = json.loads(text)
        return cls.from_dict({(k, l): s for k, l, s in data["pairs"]}, int(data["n"]))


@dataclass(frozen=True)
class ModelParams:
    """Finite model parameters: size n, weights mu_i >= 1, and the sign table."""

    n: int
    mu: tuple
    signs: SignTable

    def __post_init__(self):
        if not (1 <= self.n <= MAX_N):
            raise ValueError(f"n must be in [1, {MAX_N}], got {self.n}")
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        if len(self.mu) != self.n:
            raise ValueError(f"need {self.n} mu values, got {len(self.mu)}")
        if any(m < 1.0 for m in self.mu):
            raise ValueError(f"mu entries must be >= 1, got {self.mu}")
        if self.signs.n != self.n:
            raise ValueError("sign table size does not match n")

    @classmethod
    def make(cls, n: int, mu, signs: SignTable | None = None, sign_seed: int = 0) -> "ModelParams":
        if np.isscalar(mu):
            mu = (float(mu),) * n
        if signs is None:
            signs = SignTable.random(n, sign_seed)
        return cls(n=n, mu=tuple(mu), signs=signs)

    @property
    def alpha(self) -> float:
        """max_i mu_i."""
        return max(self.mu)

    def sub(self, k: int) -> "ModelParams":
        """The model on indices 1..k with the restricted sign table."""
        if not (1 <= k <= self.n):
            raise ValueError(f"sub-model size {k} out of range")
        table = SignTable.from_dict(
            {(a, b): s for (a, b), s in self.signs.entries if b <= k}, k)
        return ModelParams(n=k, mu=self.mu[:k], signs=table)
