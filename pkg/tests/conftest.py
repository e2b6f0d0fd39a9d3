import math
from pathlib import Path

import numpy as np
import pytest

from apshom import CoefficientField, FrequencyModule, TrigPoly

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
TWO_PI = 2.0 * math.pi

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def unit_module():
    """One spatial generator 1.0, one temporal generator 1.0 (N = 1)."""
    return FrequencyModule([[1.0]], [1.0], 8)


@pytest.fixture
def periodic_module():
    """2*pi generators (unit cell), the shipped-config layout."""
    return FrequencyModule([[TWO_PI]], [TWO_PI], 12)


@pytest.fixture
def laminate(periodic_module):
    """a(y) = 2 + cos(2 pi y), the closed-form harmonic-mean test case."""
    poly = TrigPoly.constant(periodic_module, 2.0) + TrigPoly.cosine(
        periodic_module, [1], [0])
    return CoefficientField(((poly,),), ellipticity=0.3)


@pytest.fixture
def config_dir():
    return CONFIG_DIR


def random_poly(module, rng, n_terms=4, amp=1.0, zero_spatial_ok=True):
    """Seeded random real trig polynomial inside the module cutoff."""
    poly = TrigPoly.zero(module)
    ns, nt = module.n_spatial_generators, module.n_temporal_generators
    made = 0
    while made < n_terms:
        s = tuple(int(rng.integers(-2, 3)) for _ in range(ns))
        t = tuple(int(rng.integers(-2, 3)) for _ in range(nt))
        order = sum(abs(x) for x in s) + sum(abs(x) for x in t)
        if order > module.cutoff or order == 0:
            continue
        if not zero_spatial_ok and not any(s):
            continue
        poly = poly + TrigPoly.cosine(module, s, t,
                                      amplitude=float(rng.normal()) * amp,
                                      phase=float(rng.uniform(0, TWO_PI)))
        made += 1
    return poly
