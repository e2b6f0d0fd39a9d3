import numpy as np
import pytest

from apshom import ScalarProfile


@pytest.mark.parametrize("kind", ["linear", "tanh_saturating",
                                  "rational_saturating"])
def test_vanishes_at_zero(kind):
    s = ScalarProfile(kind, amplitude=1.7, width=0.8)
    assert s(0.0) == 0.0


@pytest.mark.parametrize("kind", ["linear", "tanh_saturating",
                                  "rational_saturating"])
def test_derivative_matches_finite_difference(kind):
    s = ScalarProfile(kind, amplitude=1.3, width=0.7)
    h = 1e-6
    for u in np.linspace(-3, 3, 13):
        fd = (s(u + h) - s(u - h)) / (2 * h)
        assert s.deriv(u) == pytest.approx(fd, abs=1e-7)


@pytest.mark.parametrize("kind", ["linear", "tanh_saturating",
                                  "rational_saturating"])
def test_lipschitz_is_sup_of_derivative(kind):
    s = ScalarProfile(kind, amplitude=-2.0, width=0.5)
    us = np.linspace(-50, 50, 4001)
    dv = np.abs(s.deriv(us))
    assert np.max(dv) <= s.lipschitz + 1e-12
    assert np.max(dv) == pytest.approx(s.lipschitz, rel=1e-3)


def test_vectorized_evaluation():
    s = ScalarProfile("tanh_saturating", amplitude=2.0, width=1.5)
    us = np.linspace(-2, 2, 7)
    vals = s(us)
    assert vals.shape == us.shape
    assert vals[3] == pytest.approx(0.0)


def test_intercept_only_for_linear():
    ScalarProfile("linear", intercept=0.5)   # representable (validator rejects)
    with pytest.raises(ValueError):
        ScalarProfile("tanh_saturating", intercept=0.5)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        ScalarProfile("cubic")


def test_dict_roundtrip():
    s = ScalarProfile("rational_saturating", amplitude=0.4, width=2.0)
    assert ScalarProfile.from_dict(s.to_dict()) == s


def test_decay_condition_recorded():
    assert ScalarProfile("tanh_saturating").decay_condition
