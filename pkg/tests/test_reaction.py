import math

import numpy as np
import pytest

from apshom import (FrequencyModule, ReactionTerm, ScalarProfile, SmoothField,
                    TrigPoly, ZeroSpatialFrequency, build_G,
                    reaction_identity_check, solve_poisson)
from conftest import random_poly


@pytest.fixture
def module2():
    return FrequencyModule([[1.0, 0.0], [0.0, 1.0]], [1.0], 8)


def test_poisson_single_harmonic(unit_module):
    g = TrigPoly.cosine(unit_module, [1], [0])
    R = solve_poisson(g)
    assert (R + g).besicovitch_norm(2) == pytest.approx(0.0, abs=1e-15)


def test_poisson_temporal_frequency_irrelevant(unit_module):
    g = TrigPoly.cosine(unit_module, [1], [1])   # cos(y + tau)
    R = solve_poisson(g)
    assert (R + g).besicovitch_norm(2) == pytest.approx(0.0, abs=1e-15)


def test_poisson_two_harmonics(module2):
    g = (TrigPoly.cosine(module2, [2, 0], [0])
         + TrigPoly.cosine(module2, [0, 1], [0]))
    R = solve_poisson(g)
    # coefficient-wise division by |omega|^2, checked by differentiating twice
    lap = R.differentiate(0).differentiate(0) + R.differentiate(1).differentiate(1)
    assert (lap - g).besicovitch_norm(2) == pytest.approx(0.0, abs=1e-14)
    expect = (-0.25 * TrigPoly.cosine(module2, [2, 0], [0])
              - TrigPoly.cosine(module2, [0, 1], [0]))
    assert (R - expect).besicovitch_norm(2) == pytest.approx(0.0, abs=1e-14)


def test_poisson_roundtrip_randomized(unit_module):
    rng = np.random.default_rng(10)
    for _ in range(50):
        g = random_poly(unit_module, rng, n_terms=4, zero_spatial_ok=False)
        R = solve_poisson(g)
        assert R.spatial_mean().is_zero
        lap = R.differentiate(0).differentiate(0)
        assert (lap - g).besicovitch_norm(2) <= 1e-12 * max(
            1.0, g.besicovitch_norm(2))


def test_poisson_rejects_zero_spatial_frequency(unit_module):
    with pytest.raises(ZeroSpatialFrequency):
        solve_poisson(TrigPoly.constant(unit_module, 1.0))
    with pytest.raises(ZeroSpatialFrequency):
        solve_poisson(TrigPoly.cosine(unit_module, [0], [1]))


def test_build_G_linear_profile(unit_module):
    g = ReactionTerm(((TrigPoly.cosine(unit_module, [1], [0]),
                       ScalarProfile("linear")),))
    G = build_G(g)
    # grad(-cos y) = sin y
    P = G.terms[0][0][0]
    expect = TrigPoly.sine(unit_module, [1], [0])
    assert (P - expect).besicovitch_norm(2) == pytest.approx(0.0, abs=1e-15)
    assert G.evaluate([math.pi / 2], 0.0, 2.0)[0] == pytest.approx(2.0)


def test_build_G_empty(unit_module):
    G = build_G(ReactionTerm(()))
    assert G.bound == 0.0
    assert G.terms == ()


def test_build_G_divergence_identity_2d(module2):
    gamma = (TrigPoly.cosine(module2, [1, 0], [0])
             + TrigPoly.cosine(module2, [0, 1], [0]))
    g = ReactionTerm(((gamma, ScalarProfile("tanh_saturating")),))
    G = build_G(g)
    rng = np.random.default_rng(11)
    div_terms = G.divergence_terms()
    for _ in range(100):
        y = rng.uniform(-5, 5, size=2)
        tau = float(rng.uniform(-5, 5))
        u = float(rng.uniform(-3, 3))
        div_val = sum(d.eval(y, tau) * s(u) for d, s in div_terms)
        assert div_val == pytest.approx(g.evaluate(y, tau, u), abs=1e-10)


def test_growth_bound_sampled(unit_module):
    g = ReactionTerm((
        (TrigPoly.cosine(unit_module, [1], [0]),
         ScalarProfile("tanh_saturating", amplitude=1.5)),
        (TrigPoly.cosine(unit_module, [2], [1]),
         ScalarProfile("rational_saturating", amplitude=0.7)),
    ))
    G = build_G(g)
    rng = np.random.default_rng(12)
    for _ in range(1000):
        y = rng.uniform(-8, 8, size=1)
        tau = float(rng.uniform(-8, 8))
        u = float(rng.uniform(-5, 5))
        val = np.linalg.norm(G.evaluate(y, tau, u))
        assert val <= G.bound * abs(u) + 1e-12


def test_identity_check_linear(unit_module):
    g = ReactionTerm(((TrigPoly.cosine(unit_module, [1], [0]),
                       ScalarProfile("linear")),))
    G = build_G(g)
    field = SmoothField(value=lambda x: float(x[0] * (1 - x[0])),
                        grad=lambda x: np.array([1.0 - 2.0 * x[0]]))
    rng = np.random.default_rng(13)
    pts = [(rng.uniform(0, 1, size=1), float(rng.uniform(0, 1)))
           for _ in range(50)]
    assert reaction_identity_check(g, G, 0.1, field, pts) <= 1e-10


def test_identity_check_trivial_cases(unit_module):
    gz = ReactionTerm(())
    assert reaction_identity_check(gz, build_G(gz), 0.5,
                                   SmoothField(lambda x: 0.0,
                                               lambda x: np.zeros(1)),
                                   [(np.array([0.3]), 0.1)]) == 0.0
    g = ReactionTerm(((TrigPoly.cosine(unit_module, [1], [0]),
                       ScalarProfile("tanh_saturating")),))
    zero_field = SmoothField(lambda x: 0.0, lambda x: np.zeros(1))
    assert reaction_identity_check(g, build_G(g), 0.2, zero_field,
                                   [(np.array([0.4]), 0.2)]) <= 1e-15


def test_reaction_evaluate_separable(unit_module):
    gamma = TrigPoly.cosine(unit_module, [1], [0])
    g = ReactionTerm(((gamma, ScalarProfile("tanh_saturating")),))
    y, tau, u = np.array([0.3]), 0.7, 1.4
    assert g.evaluate(y, tau, u) == pytest.approx(
        gamma.eval(y, tau) * math.tanh(1.4))
    assert g.deriv_u(y, tau, u) == pytest.approx(
        gamma.eval(y, tau) / math.cosh(1.4) ** 2)
