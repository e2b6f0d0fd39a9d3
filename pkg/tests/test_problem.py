import math

import numpy as np
import pytest

from apshom import (AssumptionViolation, CoefficientField, DomainSpec,
                    FrequencyModule, InitialData, InitialTerm, NoiseChannel,
                    NoiseTerm, ProblemSpec, ReactionTerm, ScalarProfile,
                    TrigPoly, validate_assumptions)

TWO_PI = 2.0 * math.pi


def make_problem(module=None, a=None, g=None, noise=None, u0=None,
                 mode="auto"):
    m = module or FrequencyModule([[TWO_PI]], [TWO_PI], 8)
    lam = TrigPoly.constant(m, 2.0) + TrigPoly.cosine(m, [1], [0])
    return ProblemSpec(
        domain=DomainSpec(dimension=1, grid_n=32, T=0.1),
        module=m,
        a=a if a is not None else CoefficientField(((lam,),), ellipticity=0.3),
        g=g if g is not None else ReactionTerm(
            ((TrigPoly.cosine(m, [1], [0]), ScalarProfile("tanh_saturating")),)),
        noise=noise if noise is not None else NoiseTerm.empty(),
        u0=u0 or InitialData((InitialTerm(kind="sine"),)),
        eps_list=(0.25, 0.125),
        mode=mode), m


def test_clean_problem_passes_and_classifies_periodic():
    p, _ = make_problem()
    report = validate_assumptions(p)
    assert report.classification == "periodic"
    clauses = {c["clause"] for c in report.checks}
    assert {"A1", "A2", "A3", "A4", "A5", "A6"} <= clauses


def test_quasi_periodic_classification():
    m = FrequencyModule([[TWO_PI]], [TWO_PI * math.sqrt(2.0)], 8)
    lam = TrigPoly.constant(m, 2.0) + TrigPoly.cosine(m, [1], [1])
    p, _ = make_problem(module=m,
                        a=CoefficientField(((lam,),), ellipticity=0.25),
                        g=ReactionTerm(()))
    assert validate_assumptions(p).classification == "quasi-periodic"


def test_a1_violation_overdeclared_ellipticity():
    m = FrequencyModule([[TWO_PI]], [TWO_PI], 8)
    lam = TrigPoly.constant(m, 2.0) + TrigPoly.cosine(m, [1], [0])
    p, _ = make_problem(module=m,
                        a=CoefficientField(((lam,),), ellipticity=3.0))
    with pytest.raises(AssumptionViolation) as exc:
        validate_assumptions(p)
    assert exc.value.clause == "A1"


def test_a3_violation_profile_offset():
    m = FrequencyModule([[TWO_PI]], [TWO_PI], 8)
    g = ReactionTerm(((TrigPoly.cosine(m, [1], [0]),
                       ScalarProfile("linear", intercept=0.3)),))
    p, _ = make_problem(module=m, g=g)
    with pytest.raises(AssumptionViolation) as exc:
        validate_assumptions(p)
    assert exc.value.clause == "A3"


def test_a4_violation_uncentered_reaction():
    m = FrequencyModule([[TWO_PI]], [TWO_PI], 8)
    gamma = TrigPoly.constant(m, 1.0) + TrigPoly.cosine(m, [1], [0])
    g = ReactionTerm(((gamma, ScalarProfile("linear")),))
    p, _ = make_problem(module=m, g=g)
    with pytest.raises(AssumptionViolation) as exc:
        validate_assumptions(p)
    assert exc.value.clause == "A4"
    assert "spatial mean" in str(exc.value)


def test_a5_violation_undeclared_noise_growth():
    m = FrequencyModule([[TWO_PI]], [TWO_PI], 8)
    noise = NoiseTerm((NoiseChannel(
        pairs=((TrigPoly.constant(m, 1.0),
                ScalarProfile("linear", amplitude=5.0)),)),), bound=1.0)
    p, _ = make_problem(module=m, noise=noise)
    with pytest.raises(AssumptionViolation) as exc:
        validate_assumptions(p)
    assert exc.value.clause == "A5"


def test_a6_violation_declared_periodic_but_not():
    m = FrequencyModule([[TWO_PI * math.sqrt(2.0)]], [TWO_PI], 8)
    lam = TrigPoly.constant(m, 2.0) + TrigPoly.cosine(m, [1], [0])
    g = ReactionTerm(((TrigPoly.cosine(m, [1], [0]),
                       ScalarProfile("linear")),))
    p, _ = make_problem(module=m,
                        a=CoefficientField(((lam,),), ellipticity=0.3),
                        g=g, mode="periodic")
    with pytest.raises(AssumptionViolation) as exc:
        validate_assumptions(p)
    assert exc.value.clause == "A6"


def test_initial_data_boundary_violation():
    class Bad:
        def __call__(self, x):
            return np.ones_like(x)

        def max_abs(self, dimension, probe=512):
            return 1.0

    p, _ = make_problem(u0=Bad())
    with pytest.raises(AssumptionViolation) as exc:
        validate_assumptions(p)
    assert exc.value.clause == "u0"


def test_eps_list_must_decrease():
    m = FrequencyModule([[TWO_PI]], [TWO_PI], 8)
    lam = TrigPoly.constant(m, 2.0) + TrigPoly.cosine(m, [1], [0])
    with pytest.raises(ValueError):
        ProblemSpec(domain=DomainSpec(dimension=1, grid_n=32, T=0.1),
                    module=m,
                    a=CoefficientField(((lam,),), ellipticity=0.3),
                    g=ReactionTerm(()), noise=NoiseTerm.empty(),
                    u0=InitialData((InitialTerm(kind="sine"),)),
                    eps_list=(0.125, 0.25))


def test_default_r_range_tracks_initial_amplitude():
    p, _ = make_problem(u0=InitialData(
        (InitialTerm(kind="sine", amplitude=3.0),)))
    lo, hi = p.default_r_range()
    assert hi == pytest.approx(6.0, rel=1e-3)
    assert lo == pytest.approx(-6.0, rel=1e-3)


def test_initial_data_grammar():
    u = InitialData((InitialTerm(kind="sine", amplitude=2.0, modes=(2,)),
                     InitialTerm(kind="bump", amplitude=1.0, powers=(1,))))
    x = np.linspace(0, 1, 5)
    vals = u(x)
    assert abs(vals[0]) <= 1e-13 and abs(vals[-1]) <= 1e-13
    assert vals[1] == pytest.approx(2.0 * math.sin(math.pi / 2)
                                    + 0.25 * 0.75)
