"""Convexity margins, contraction thresholds, search, structural identities."""

import numpy as np
import pytest

from qhyper.babyfock import get_model
from qhyper.hyperc import (C_of_mu, RatioEvaluator, asym_convexity_check,
                           bcl_check, contraction_ratio, decomposition_identity_check,
                           disjoint_support_check, dual_contraction_ratio,
                           dual_convexity_check, gamma_lower_bound_check,
                           necessary_time_exact, sufficient_time, theorem_bound,
                           violation_search, witness_dual_to_primal,
                           witness_primal_to_dual)
from qhyper.signs import ModelParams, SignTable


def _rand(rng, m):
    return rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))


@pytest.fixture(scope="module")
def m2():
    return get_model(ModelParams.make(2, (1.0, 1.5), sign_seed=1))


def test_margin_trivial_cases():
    rng = np.random.default_rng(0)
    a = _rand(rng, 5)
    assert abs(bcl_check(a, np.zeros_like(a), 1.5)) < 1e-12
    scale = np.linalg.norm(a) ** 2
    assert abs(bcl_check(a, _rand(rng, 5), 2.0)) < 1e-10 * scale  # parallelogram
    assert abs(dual_convexity_check(a, np.zeros_like(a), 3.0, 2.0)) < 1e-12


def test_margin_random_sweep():
    rng = np.random.default_rng(1)
    for k in range(200):
        m = 2 + k % 15
        a, b = _rand(rng, m), _rand(rng, m)
        scale = np.linalg.norm(a) ** 2 + np.linalg.norm(b) ** 2
        p = (1.1, 1.5, 1.9, 2.0)[k % 4]
        mu = (1.0, 1.5, 2.0, 3.0)[(k // 4) % 4]
        q = (2.0, 3.0, 4.0)[k % 3]
        assert bcl_check(a, b, p) >= -1e-10 * scale
        assert asym_convexity_check(a, b, p, mu) >= -1e-10 * scale
        assert dual_convexity_check(a, b, q, mu) >= -1e-10 * scale


def test_asym_reduces_to_slack_bcl_at_mu_one():
    rng = np.random.default_rng(2)
    a, b = _rand(rng, 6), _rand(rng, 6)
    p = 1.6
    from qhyper.linalg import schatten_norm
    lhs = (0.5 * schatten_norm(a + b, p) ** p
           + 0.5 * schatten_norm(a - b, p) ** p) ** (2.0 / p)
    expected = lhs - schatten_norm(a, p) ** 2 \
        - (1.0 / 3.0) * (p - 1.0) * schatten_norm(b, p) ** 2
    assert abs(asym_convexity_check(a, b, p, 1.0) - expected) < 1e-10


def test_dual_sharp_equality_at_q_two():
    rng = np.random.default_rng(3)
    x, y = _rand(rng, 7), _rand(rng, 7)
    mu = 1.8
    margin = dual_convexity_check(x, y, 2.0, mu, coeff=mu ** -4)
    scale = np.linalg.norm(x) ** 2 + np.linalg.norm(y) ** 2
    assert abs(margin) < 1e-10 * scale


def test_constant_branches_meet_at_boundary():
    for mu in (1.0, 1.7, 3.0):
        lo = C_of_mu(4.0 / 3.0, mu)
        hi = C_of_mu(4.0 / 3.0 + 1e-12, mu)
        assert abs(lo - hi) < 1e-10
        assert abs(lo - mu ** -4 / 3.0) < 1e-14
    with pytest.raises(ValueError):
        C_of_mu(1.0, 2.0)


def test_sufficient_time_formula():
    # mu = 1, p = 1.5: branch values 2**(1-4/3)/2 and sqrt(1/6)
    got = sufficient_time(1.5, 1.0)
    assert abs(got - min(2.0 ** (1 - 4 / 3) * 0.5, np.sqrt(1 / 6))) < 1e-15
    # mu = 2, p = 1.5: min{17**(-1/3) * 0.5, sqrt(C) * sqrt(0.5)}
    a = 17.0 ** (-1.0 / 3.0) * 0.5
    b = np.sqrt((1.0 / 3.0) * 2.0 ** (8 - 16 / 1.5)) * np.sqrt(0.5)
    assert abs(sufficient_time(1.5, 2.0) - min(a, b)) < 1e-15
    # continuity toward p = 2
    assert abs(sufficient_time(1.9999, 1.0)
               - min(2.0 ** (1 - 2 / 1.9999) * 0.9999, np.sqrt(0.9999 / 3.0))) < 1e-12
    # vector: the minimum over indices
    assert sufficient_time(1.5, (1.0, 2.0)) == min(sufficient_time(1.5, 1.0),
                                                   sufficient_time(1.5, 2.0))
    assert abs(theorem_bound(1.5, 2.0, 1.0) - 2.0 ** (4 - 16 / 3) * 0.5) < 1e-15


def test_necessary_time_values():
    t = necessary_time_exact(2, 1.0)
    assert t.exact == 0.5 and t.paper_display == 0.5 and not t.differs
    t = necessary_time_exact(2, np.sqrt(2.0))
    assert abs(t.exact - 1.0 / 3.0) < 1e-12
    assert abs(t.paper_display - 0.25) < 1e-12
    assert t.differs
    t = necessary_time_exact(3, 1.0)
    assert abs(t.exact - 1.0 / 3.0) < 1e-15
    with pytest.raises(ValueError):
        necessary_time_exact(1, 1.5)


def test_contraction_ratio_basics(m2):
    ident = m2.identity()
    assert abs(contraction_ratio(m2, ident, 0.9, 1.5) - 1.0) < 1e-12
    assert abs(dual_contraction_ratio(m2, ident, 0.9, 3.0) - 1.0) < 1e-12
    rng = np.random.default_rng(4)
    x = m2.random_element(rng)
    assert contraction_ratio(m2, x, 0.0, 2.0) <= 1.0 + 1e-12
    with pytest.raises(ValueError):
        contraction_ratio(m2, np.zeros_like(ident), 0.5, 1.5)


def test_ratio_evaluator_matches_direct(m2):
    rng = np.random.default_rng(5)
    c = rng.standard_normal(m2.dim) + 1j * rng.standard_normal(m2.dim)
    x = m2.reconstruct(c)
    ev = RatioEvaluator(m2, 0.4, 1.5, "primal")
    assert abs(ev.ratio(c) - contraction_ratio(m2, x, 0.4, 1.5)) < 1e-12
    evd = RatioEvaluator(m2, 0.4, 4.0, "dual")
    assert abs(evd.ratio(c) - dual_contraction_ratio(m2, x, 0.4, 4.0)) < 1e-12


def test_canonical_witness_inside_region(m2):
    p = 1.5
    t = -0.5 * np.log(sufficient_time(p, m2.params.mu))
    x = m2.identity() + np.asarray(m2.gamma(1))
    assert contraction_ratio(m2, x, t, p) < 1.0
    # flat one-index case: exp(-2t) = 0.3 sits below the 0.397 threshold
    flat = get_model(ModelParams.make(1, 1.0, SignTable.all_anticommuting(1)))
    xf = flat.identity() + np.asarray(flat.gamma(1))
    assert contraction_ratio(flat, xf, -0.5 * np.log(0.3), 1.5) < 1.0


def test_search_no_violation_inside_region(m2):
    p = 1.5
    t = -0.5 * np.log(sufficient_time(p, m2.params.mu))
    wit = violation_search(m2, t, p, restarts=120, seed=5)
    assert wit.ratio <= 1.0 + 1e-9
    # witness invariant: the stored ratio reproduces from its coefficients
    recomputed = contraction_ratio(m2, m2.reconstruct(wit.coeffs), t, p)
    assert abs(recomputed - wit.ratio) <= 1e-8 * wit.ratio


def test_search_finds_dual_violation_past_threshold():
    params = ModelParams.make(1, 2.0, SignTable.all_anticommuting(1))
    model = get_model(params)
    thr = necessary_time_exact(2, 2.0).exact
    t = -0.5 * np.log(1.05 * thr)
    wit = violation_search(model, t, 4.0, "dual", restarts=40, seed=3)
    assert wit.ratio > 1.0
    # the canonical small witness alone already crosses
    x = model.identity() + 1e-2 * np.asarray(model.gamma(1))
    assert dual_contraction_ratio(model, x, t, 4.0) > 1.0


def test_search_long_time_limit(m2):
    wit = violation_search(m2, 8.0, 1.5, restarts=60, seed=2)
    assert wit.ratio <= 1.0 + 1e-9


def test_duality_consistency_n1():
    params = ModelParams.make(1, 1.6, SignTable.all_anticommuting(1))
    model = get_model(params)
    p, t = 1.4, 0.35
    pprime = p / (p - 1.0)
    evp = RatioEvaluator(model, t, p, "primal")
    evd = RatioEvaluator(model, t, pprime, "dual")
    wp = violation_search(model, t, p, "primal", restarts=80, seed=11)
    wd = violation_search(model, t, pprime, "dual", restarts=80, seed=12)
    cp, cd = wp.coeffs, wd.coeffs
    best_p, best_d = wp.ratio, wd.ratio
    for _ in range(300):
        cd2 = witness_primal_to_dual(model, cp, t)
        rd = evd.ratio(cd2)
        if rd > best_d:
            best_d, cd = rd, cd2
        cp2 = witness_dual_to_primal(model, cd, t, p)
        rp = evp.ratio(cp2)
        if rp > best_p:
            best_p, cp = rp, cp2
    assert abs(best_p - best_d) <= 1e-6 * best_p


@pytest.fixture(scope="module")
def m3():
    return get_model(ModelParams.make(3, (1.2, 1.0, 1.7), sign_seed=8))


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_decomposition_identity(m3, p):
    small = get_model(m3.params.sub(2))
    rng = np.random.default_rng(13)
    for _ in range(5):
        a, d = small.random_element(rng), small.random_element(rng)
        rep = decomposition_identity_check(a, d, p, m3)
        assert rep["residual"] <= 1e-9 * rep["scale"]
    # d = 0 reduces to the isometric embedding
    rep = decomposition_identity_check(a, np.zeros_like(a), p, m3)
    assert rep["residual"] <= 1e-9 * rep["scale"]


def test_gamma_lower_bounds(m3):
    small = get_model(m3.params.sub(2))
    rng = np.random.default_rng(14)
    for p in (1.5, 2.0, 2.5):
        for _ in range(5):
            b, c = small.random_element(rng), small.random_element(rng)
            rep = gamma_lower_bound_check(b, c, p, m3)
            assert rep["margin_b"] >= -1e-10 * rep["scale_b"]
            assert rep["margin_c"] >= -1e-10 * rep["scale_c"]
        ident = np.eye(small.dim, dtype=complex)
        rep = gamma_lower_bound_check(ident, ident, p, m3)
        assert abs(rep["margin_b"]) <= 1e-10 * rep["scale_b"]   # equality case
        assert abs(rep["margin_c"]) <= 1e-10 * rep["scale_c"]


def test_disjoint_support(m3):
    small = get_model(m3.params.sub(2))
    rng = np.random.default_rng(15)
    for p in (1.5, 2.0, 3.0):
        b, c = small.random_element(rng), small.random_element(rng)
        rep = disjoint_support_check(b, c, p, m3)
        assert rep["residual"] <= 1e-9 * rep["scale"]
    rep = disjoint_support_check(b, np.zeros_like(c), 1.5, m3)
    assert rep["residual"] <= 1e-12 * rep["scale"]
    with pytest.raises(ValueError):
        disjoint_support_check(np.zeros_like(b), np.zeros_like(c), 1.5, m3)
