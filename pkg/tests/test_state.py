"""Density construction, Haagerup norms, and modular commutation."""

import numpy as np
import pytest

from qhyper.babyfock import BabyFock, get_model
from qhyper.signs import ModelParams, SignTable
from qhyper.state import (density_closed_form, density_solve, embed_lower,
                          get_density, haagerup_embed, haagerup_norm,
                          modular_check)

MU = np.sqrt(2.0)


@pytest.fixture(scope="module")
def m1():
    return BabyFock(ModelParams.make(1, MU, SignTable.all_anticommuting(1)))


@pytest.fixture(scope="module")
def m2():
    return BabyFock(ModelParams.make(2, (1.5, 2.0), sign_seed=3))


def test_density_small_closed_forms(m1):
    dens = density_closed_form(m1)
    # lambda = 1/5 at mu^2 = 2: eigenvalues {1/10, 1/10, 2/5, 2/5}
    assert np.allclose(np.sort(np.linalg.eigvalsh(dens.density)),
                       [0.1, 0.1, 0.4, 0.4], atol=1e-12)
    assert abs(np.trace(dens.density).real - 1.0) < 1e-12
    assert abs(dens.lambdas[0] - 0.2) < 1e-15
    flat = BabyFock(ModelParams.make(1, 1.0, SignTable.all_anticommuting(1)))
    assert np.allclose(density_closed_form(flat).density, np.eye(4) / 4, atol=1e-14)


def test_density_projections_commute(m2):
    dens = get_density(m2)
    for p in dens.projections:
        assert np.linalg.norm(p @ p - p) < 1e-10
        assert np.linalg.norm(p - p.conj().T) < 1e-12
        assert np.linalg.norm(dens.density @ p - p @ dens.density) < 1e-10


@pytest.mark.parametrize("n,seed,mu", [(1, 0, (1.4,)), (2, 5, (1.0, 1.7)),
                                       (3, 9, (1.2, 2.0, 1.0))])
def test_density_solve_agreement(n, seed, mu):
    model = BabyFock(ModelParams.make(n, mu, sign_seed=seed))
    closed = density_closed_form(model).density
    solved = density_solve(model)
    assert np.linalg.norm(solved - closed) <= 1e-9 * np.linalg.norm(closed)


def test_density_solve_corruption_detected(m1):
    rhs = np.zeros(m1.dim, dtype=complex)
    rhs[0] = 1.0
    rhs[3] = 5.0  # above the norm of the degree-two letter: infeasible for PSD
    bad = density_solve(m1, vacuum_values=rhs)
    assert np.min(np.linalg.eigvalsh(bad)) < -1e-6


def test_haagerup_norm_values(m1):
    dens = get_density(m1)
    for p in (1.0, 1.7, 2.0, 4.0):
        assert abs(haagerup_norm(m1, m1.identity(), p, dens) - 1.0) < 1e-12
    assert abs(haagerup_norm(m1, m1.gamma(1), 2, dens) - 1.0 / MU) < 1e-12
    for p in (1.0, 2.0, 3.0, 6.0):
        closed = (MU ** 2 + MU ** -2) ** 0.5 * (1 + MU ** 4) ** (-1.0 / p)
        assert abs(haagerup_norm(m1, m1.gamma(1), p, dens) - closed) < 1e-12 * closed
    with pytest.raises(ValueError):
        haagerup_norm(m1, m1.identity(), 0.5, dens)


def test_trace_normalization_invariance(m2):
    dens = get_density(m2)
    rng = np.random.default_rng(4)
    x = m2.random_element(rng)
    for p in (1.0, 1.5, 3.0):
        base = haagerup_norm(m2, x, p, dens)
        for c in (2.0, float(2 ** m2.n)):
            scaled = haagerup_norm(m2, x, p, dens, trace_scale=c)
            assert abs(scaled - base) < 1e-10 * base


def test_l2_orthogonality_of_letters(m1):
    dens = get_density(m1)
    basis = [m1.identity(), m1.gamma(1), m1.gamma_star(1), m1.y_op(1)]
    emb = [haagerup_embed(m1, b, 2, dens) for b in basis]
    for i in range(4):
        for j in range(4):
            ip = np.trace(emb[j].conj().T @ emb[i])
            if i != j:
                assert abs(ip) < 1e-12
    assert abs(np.trace(emb[3].conj().T @ emb[3]).real - 1.0) < 1e-12  # y norm 1
    assert abs(np.trace(emb[1].conj().T @ emb[1]).real - MU ** -2) < 1e-12
    assert abs(np.trace(emb[2].conj().T @ emb[2]).real - MU ** 2) < 1e-12


def test_norm_monotone_in_p(m2):
    # the vacuum state is normalized, so the L^p norms grow with p
    dens = get_density(m2)
    rng = np.random.default_rng(8)
    for _ in range(5):
        x = m2.random_element(rng)
        vals = [haagerup_norm(m2, x, p, dens) for p in (1, 1.5, 2, 3, 4, 6)]
        assert all(vals[k] <= vals[k + 1] + 1e-10 * vals[k] for k in range(len(vals) - 1))


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_modular_commutation(m2, p):
    assert max(modular_check(m2, p)) <= 1e-9


def test_modular_exact_at_mu_one():
    model = BabyFock(ModelParams.make(2, (1.0, 1.0), sign_seed=1))
    assert max(modular_check(model, 2.0)) < 1e-13


def test_embedding_isometry(m2):
    small = get_model(m2.params.sub(1))
    rng = np.random.default_rng(11)
    x = small.random_element(rng)
    lifted = embed_lower(x, small, m2)
    for p in (1.0, 1.7, 2.0, 2.5):
        a = haagerup_norm(small, x, p)
        b = haagerup_norm(m2, lifted, p)
        assert abs(a - b) <= 1e-9 * max(a, 1.0)


def test_embed_lower_rejects_mismatch(m2):
    other = BabyFock(ModelParams.make(1, 3.0, SignTable.all_anticommuting(1)))
    with pytest.raises(ValueError):
        embed_lower(other.identity(), other, m2)
