import math

import numpy as np
import pytest

from apshom import (CoefficientField, EffectiveModel, FrequencyModule,
                    NoiseChannel, NoiseTerm, ReactionTerm, ScalarProfile,
                    TrigPoly, effective_functionals, effective_noise,
                    homogenized_tensor, solve_cell, solve_chi, tabulate)

TWO_PI = 2.0 * math.pi
SQRT3 = math.sqrt(3.0)


@pytest.fixture
def laminate_reaction(periodic_module):
    return ReactionTerm(((TrigPoly.cosine(periodic_module, [1], [0]),
                          ScalarProfile("tanh_saturating")),))


@pytest.fixture
def module2d():
    return FrequencyModule([[TWO_PI, 0.0], [0.0, TWO_PI]], [TWO_PI], 10)


def test_tensor_identity(periodic_module):
    a = CoefficientField.identity(periodic_module, ellipticity=0.9)
    chi = (TrigPoly.zero(periodic_module),)
    assert np.allclose(homogenized_tensor(a, chi), np.eye(1))


def test_tensor_laminate(laminate, periodic_module):
    chi = solve_chi(laminate, periodic_module)
    b = homogenized_tensor(laminate, chi)
    # harmonic-mean oracle by dense quadrature of M(1/a)
    y = (np.arange(400000) + 0.5) / 400000
    harm = 1.0 / np.mean(1.0 / (2.0 + np.cos(TWO_PI * y)))
    assert b[0, 0] == pytest.approx(harm, abs=1e-6)
    assert b[0, 0] == pytest.approx(SQRT3, abs=1e-6)


def test_tensor_separable_2d(module2d):
    lam_x = TrigPoly.constant(module2d, 2.0) + TrigPoly.cosine(
        module2d, [1, 0], [0])
    lam_y = TrigPoly.constant(module2d, 2.0) + TrigPoly.cosine(
        module2d, [0, 1], [0])
    a = CoefficientField.diagonal((lam_x, lam_y), ellipticity=0.3)
    chi = solve_chi(a, module2d)
    b = homogenized_tensor(a, chi)
    assert b[0, 0] == pytest.approx(SQRT3, abs=1e-5)
    assert b[1, 1] == pytest.approx(SQRT3, abs=1e-5)
    assert abs(b[0, 1]) <= 1e-9 and abs(b[1, 0]) <= 1e-9


def test_functionals_zero_reaction(laminate, periodic_module):
    cell = solve_cell(laminate, ReactionTerm(()), periodic_module)
    for r in (-1.0, 0.0, 2.0):
        F1, F2, F3 = effective_functionals(laminate, ReactionTerm(()),
                                           cell.chi, cell, r)
        assert np.all(F1 == 0) and np.all(F2 == 0) and F3 == 0


def test_functionals_identity_a_kills_F2(periodic_module):
    a = CoefficientField.identity(periodic_module, ellipticity=0.9)
    g = ReactionTerm(((TrigPoly.cosine(periodic_module, [1], [0]),
                       ScalarProfile("tanh_saturating")),))
    cell = solve_cell(a, g, periodic_module)
    assert all(c.is_zero for c in cell.chi)
    for r in (0.5, 1.5):
        _, F2, _ = effective_functionals(a, g, cell.chi, cell, r)
        assert np.all(F2 == 0)


def test_functionals_single_harmonic_closed_form(periodic_module):
    # a = 1, g = cos(2 pi y) u: w1(r) = r cos(2 pi y)/(4 pi^2) from the
    # operator identity; F1 = mean(dw1/dy) = 0 and
    # F3(1) = mean(cos * w1) = 1/(8 pi^2) (exact mean of the product)
    a = CoefficientField.identity(periodic_module, ellipticity=0.9)
    g = ReactionTerm(((TrigPoly.cosine(periodic_module, [1], [0]),
                       ScalarProfile("linear")),))
    cell = solve_cell(a, g, periodic_module)
    F1, F2, F3 = effective_functionals(a, g, cell.chi, cell, 1.0)
    assert F1[0] == pytest.approx(0.0, abs=1e-14)
    assert F3 == pytest.approx(1.0 / (8 * math.pi ** 2), rel=1e-12)


def test_effective_noise_examples(periodic_module):
    const = NoiseTerm((NoiseChannel(
        pairs=((TrigPoly.constant(periodic_module, 1.0),
                ScalarProfile("rational_saturating", amplitude=2.0)),)),),
        bound=4.0)
    r = 0.7
    assert effective_noise(const, r)[0] == pytest.approx(
        2.0 * r / (1 + r * r))

    osc = NoiseTerm((NoiseChannel(
        pairs=((TrigPoly.cosine(periodic_module, [1], [0]),
                ScalarProfile("tanh_saturating")),)),), bound=4.0)
    for r in (-1.0, 0.3, 2.2):
        assert effective_noise(osc, r)[0] == 0.0

    mixed = NoiseTerm((NoiseChannel(
        pairs=((TrigPoly.constant(periodic_module, 1.0)
                + TrigPoly.cosine(periodic_module, [0], [1], amplitude=0.5),
                ScalarProfile("tanh_saturating")),)),), bound=4.0)
    assert effective_noise(mixed, 1.0)[0] == pytest.approx(math.tanh(1.0))
    assert effective_noise(mixed, 1.0)[0] == pytest.approx(0.7615942, abs=1e-7)


def _tabulated(laminate, g, module, points=33, r_min=-2.0, r_max=2.0,
               noise=None):
    cell = solve_cell(laminate, g, module)
    return cell, tabulate(laminate, g, noise or NoiseTerm.empty(), cell.chi,
                          module, r_min, r_max, points, cell=cell)


def test_tabulate_zero_reaction_tables(laminate, periodic_module):
    _, model = _tabulated(laminate, ReactionTerm(()), periodic_module)
    assert not model.has_drift_tables
    assert np.all(model.F1 == 0) and np.all(model.F3 == 0)


def test_tabulate_linear_profile_exact_interpolation(laminate,
                                                     periodic_module):
    g = ReactionTerm(((TrigPoly.cosine(periodic_module, [1], [0]),
                       ScalarProfile("linear")),))
    cell, model = _tabulated(laminate, g, periodic_module)
    # every table is linear in r, so interpolation is exact off-grid
    for r in np.linspace(-1.9, 1.9, 17):
        F1, F2, F3 = effective_functionals(laminate, g, cell.chi, cell, r)
        assert model.f1([r])[0] == pytest.approx(F1, abs=1e-13)
        assert model.f3([r])[0] == pytest.approx(F3, abs=1e-13)


def test_tabulate_consistency_at_grid_points(laminate, laminate_reaction,
                                             periodic_module):
    cell, model = _tabulated(laminate, laminate_reaction, periodic_module)
    for idx in (0, 7, 16, 32):
        r = model.r_grid[idx]
        F1, F2, F3 = effective_functionals(laminate, laminate_reaction,
                                           cell.chi, cell, r)
        assert np.allclose(model.F1[idx], F1, atol=1e-14)
        assert np.allclose(model.F2[idx], F2, atol=1e-14)
        assert model.F3[idx] == pytest.approx(F3, abs=1e-14)


def test_tabulate_interpolation_second_order(laminate, laminate_reaction,
                                             periodic_module):
    # Richardson-style self check: max interpolation error on a dense probe
    # scales like h^2 between a 33- and 65-point grid
    cell, m33 = _tabulated(laminate, laminate_reaction, periodic_module, 33)
    _, m65 = _tabulated(laminate, laminate_reaction, periodic_module, 65)
    probe = np.linspace(-2.0, 2.0, 1001)
    exact = np.array([effective_functionals(
        laminate, laminate_reaction, cell.chi, cell, r)[2] for r in probe])
    e33 = np.max(np.abs(m33.f3(probe) - exact))
    e65 = np.max(np.abs(m65.f3(probe) - exact))
    assert e65 <= e33 / 2.5          # ideal factor 4, allow slack


def test_scaling_with_linear_profiles(laminate, periodic_module):
    lam = 3.0
    g1 = ReactionTerm(((TrigPoly.cosine(periodic_module, [1], [0]),
                        ScalarProfile("linear")),))
    g2 = ReactionTerm(((TrigPoly.cosine(periodic_module, [1], [0]),
                        ScalarProfile("linear", amplitude=lam)),))
    cell1, model1 = _tabulated(laminate, g1, periodic_module)
    cell2, model2 = _tabulated(laminate, g2, periodic_module)
    assert np.allclose(model2.F1, lam * model1.F1, atol=1e-13)
    assert np.allclose(model2.F3, lam ** 2 * model1.F3, atol=1e-13)


def test_ellipticity_of_b(laminate, periodic_module):
    chi = solve_chi(laminate, periodic_module)
    b = homogenized_tensor(laminate, chi)
    rng = np.random.default_rng(31)
    margin = math.inf
    for _ in range(100):
        z = rng.standard_normal(1)
        z /= np.linalg.norm(z)
        quad = float(z @ b @ z)
        margin = min(margin, quad - laminate.ellipticity)
        assert quad >= laminate.ellipticity
    assert margin > 0


def test_F2_uniform_bound_nested_ranges(laminate, laminate_reaction,
                                        periodic_module):
    cell, _ = _tabulated(laminate, laminate_reaction, periodic_module)
    probe_small = np.linspace(-2, 2, 401)
    probe_large = np.linspace(-4, 4, 801)
    f2_small = max(abs(effective_functionals(
        laminate, laminate_reaction, cell.chi, cell, r)[1][0])
        for r in probe_small)
    f2_large = max(abs(effective_functionals(
        laminate, laminate_reaction, cell.chi, cell, r)[1][0])
        for r in probe_large)
    # the bound must not grow when the probe range is extended
    assert f2_large <= f2_small + 1e-12


def test_lipschitz_estimates_stable_under_refinement(laminate,
                                                     laminate_reaction,
                                                     periodic_module):
    _, m33 = _tabulated(laminate, laminate_reaction, periodic_module, 33)
    _, m129 = _tabulated(laminate, laminate_reaction, periodic_module, 129)
    for key in ("F1", "F2", "F3", "Mtilde"):
        a, b = m33.lipschitz_estimates[key], m129.lipschitz_estimates[key]
        assert b <= a * 1.2 + 1e-12


def test_out_of_range_clamps_and_counts(laminate, laminate_reaction,
                                        periodic_module):
    _, model = _tabulated(laminate, laminate_reaction, periodic_module)
    inside = model.f3([1.0])[0]
    assert model.out_of_range_count == 0
    clamped = model.f3([5.0])[0]
    assert model.out_of_range_count == 1
    assert clamped == pytest.approx(model.F3[-1])
    model.f3(np.array([-9.0, 0.0, 9.0]))
    assert model.out_of_range_count == 3
    assert inside == pytest.approx(model.f3([1.0])[0])


def test_export_load_roundtrip(tmp_path, laminate, laminate_reaction,
                               periodic_module):
    _, model = _tabulated(laminate, laminate_reaction, periodic_module)
    path = tmp_path / "model.json"
    model.export(path)
    back = EffectiveModel.load(path)
    assert np.allclose(back.b, model.b)
    assert np.allclose(back.F3, model.F3)
    assert back.ellipticity == model.ellipticity
    assert back.provenance == model.provenance


def test_tabulate_validates_grid(laminate, laminate_reaction,
                                 periodic_module):
    cell = solve_cell(laminate, laminate_reaction, periodic_module)
    with pytest.raises(ValueError):
        tabulate(laminate, laminate_reaction, NoiseTerm.empty(), cell.chi,
                 periodic_module, 2.0, -2.0, 33, cell=cell)
    with pytest.raises(ValueError):
        tabulate(laminate, laminate_reaction, NoiseTerm.empty(), cell.chi,
                 periodic_module, -2.0, 2.0, 5, cell=cell)
