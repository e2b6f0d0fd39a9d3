"""Problem assembly and the structural-assumption firewall.

`validate_assumptions` screens untrusted inputs against the conditions the
homogenization limit needs: uniform ellipticity and boundedness of the
diffusion matrix (A1), Lipschitz profiles (A2) vanishing at zero (A3),
spatial centering of the reaction oscillation (A4), Lipschitz/bounded noise
under the declared constant (A5), and, for problems declared periodic, unit
cell membership and the cell-integral centering (A6).  Violations raise
`AssumptionViolation` naming the clause.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolation
from .spde import DomainSpec

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class InitialTerm:
    """One product term of the initial-data grammar.

    kind "sine": amplitude * prod_d sin(modes[d] * pi * x_d);
    kind "bump": amplitude * prod_d (x_d (1 - x_d))^powers[d].
    Both vanish on the boundary of (0,1)^d by construction.
    """

    kind: str
    amplitude: float = 1.0
    modes: tuple = (1,)
    powers: tuple = (1,)

    def __post_init__(self):
        if self.kind not in ("sine", "bump"):
            raise ValueError(f"unknown initial-data kind {self.kind!r}")

    def factor(self, axis, x):
        if self.kind == "sine":
            return np.sin(self.modes[axis] * math.pi * x)
        return (x * (1.0 - x)) ** self.powers[axis]


@dataclass(frozen=True)
class InitialData:
    terms: tuple

    def __call__(self, *axes):
        out = None
        for t in self.terms:
            val = t.amplitude * t.factor(0, axes[0])
            for d in range(1, len(axes)):
                val = val * t.factor(d, axes[d])
            out = val if out is None else out + val
        if out is None:
            return np.zeros_like(axes[0])
        return out

    def max_abs(self, dimension, probe=512):
        x = np.linspace(0.0, 1.0, probe)
        if dimension == 1:
            return float(np.max(np.abs(self(x))))
        X, Y = np.meshgrid(x, x, indexing="ij")
        return float(np.max(np.abs(self(X, Y))))


@dataclass
class ProblemSpec:
    """Everything that defines one oscillating problem instance."""

    domain: DomainSpec
    module: object
    a: object                 # CoefficientField
    g: object                 # ReactionTerm
    noise: object             # NoiseTerm
    u0: InitialData
    eps_list: tuple
    mode: str = "auto"        # auto | periodic | quasi-periodic

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_list)
        if any(e <= 0 for e in eps):
            raise ValueError("eps values must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps_list must be strictly decreasing")
        self.eps_list = eps
        if self.mode not in ("auto", "periodic", "quasi-periodic"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def default_r_range(self):
        """Table range [-2 max|u0|, 2 max|u0|] (clamped queries counted)."""
        m = max(self.u0.max_abs(self.domain.dimension), 1e-6)
        return (-2.0 * m, 2.0 * m)


@dataclass
class ValidationReport:
    classification: str
    checks: list = field(default_factory=list)

    def record(self, clause, detail):
        self.checks.append({"clause": clause, "detail": detail})

    def to_dict(self):
        return {"classification": self.classification, "checks": self.checks}


def _poly_is_periodic(poly, tol=1e-9):
    for k in poly.frequencies():
        for w in list(k.omega) + [k.omega0]:
            if abs(w / TWO_PI - round(w / TWO_PI)) > tol:
                return False
    return True


def _problem_polys(p):
    for row in p.a.entries:
        yield from row
    for gamma, _ in p.g.terms:
        yield gamma
    for ch in p.noise.channels:
        for mu, _ in ch.pairs:
            yield mu
        if ch.offset is not None:
            yield ch.offset


def _unit_cell_integral(poly):
    """Integral of the spatial part over (0,1)^N, exact per coefficient.

    Returns the worst absolute value over temporal frequency groups; zero for
    correctly centered periodic data.
    """
    groups = {}
    for k, c in poly.coeffs.items():
        factor = 1.0 + 0.0j
        for w in k.omega:
            if w == 0.0:
                continue
            factor *= (np.exp(1j * w) - 1.0) / (1j * w)
        groups[k.temporal] = groups.get(k.temporal, 0j) + c * factor
    return max((abs(v) for v in groups.values()), default=0.0)


def validate_assumptions(p, n_samples=1000, seed=11):
    """Run every structural check; raise AssumptionViolation on the first failure.

    Returns a ValidationReport with the problem classification (periodic when
    every frequency is an integer multiple of 2*pi per axis) and one record
    per passed check.
    """
    report = ValidationReport(classification="")
    rng = np.random.Generator(np.random.Philox(key=[seed, 3]))

    # A1: sampled uniform ellipticity and boundedness of a
    p.a.validate(n_samples=n_samples)
    report.record("A1", f"ellipticity >= {p.a.ellipticity} and "
                        f"|a_ij| < {1.0 / p.a.ellipticity:.6g} on "
                        f"{n_samples} samples")

    # A2: bounded, locally Lipschitz profile derivatives
    us = rng.uniform(-10.0, 10.0, size=256)
    for i, (gamma, s) in enumerate(p.g.terms):
        dv = np.asarray(s.deriv(us))
        if not np.all(np.isfinite(dv)) or np.max(np.abs(dv)) > s.lipschitz + 1e-9:
            raise AssumptionViolation(
                "A2", f"profile of reaction term {i} has unbounded derivative")
    report.record("A2", f"profile derivatives bounded by exact Lipschitz "
                        f"constants on {len(p.g.terms)} terms")

    # A3: sigma(0) = 0 for the reaction profiles
    for i, (gamma, s) in enumerate(p.g.terms):
        v0 = float(s(0.0))
        if v0 != 0.0:
            raise AssumptionViolation(
                "A3", f"reaction profile of term {i} has sigma(0) = {v0:g} != 0")
    report.record("A3", "all reaction profiles vanish at zero")

    # A4: spatial centering of every reaction factor
    for i, (gamma, s) in enumerate(p.g.terms):
        if gamma.is_zero:
            continue
        sm = gamma.spatial_mean()
        if not sm.is_zero:
            raise AssumptionViolation(
                "A4", f"spatial mean of gamma_{i} nonzero "
                f"(mean polynomial has {len(sm.frequencies())} coefficients)")
        for k in gamma.frequencies():
            if k.has_zero_spatial:
                raise AssumptionViolation(
                    "A4", f"gamma_{i} contains frequency {k} with zero "
                    "spatial part")
    report.record("A4", "reaction factors centered in y "
                        "(coefficients are trig polynomials, hence B2_AP)")

    # A5: noise Lipschitz and bounded under the declared constant K
    K = p.noise.bound
    if p.noise.m:
        pts = rng.uniform(-20.0, 20.0,
                          size=(200, p.module.n_dims + 1))
        u1 = rng.uniform(-8.0, 8.0, size=200)
        u2 = rng.uniform(-8.0, 8.0, size=200)
        for s_idx in range(200):
            y, tau = pts[s_idx, :-1], pts[s_idx, -1]
            m1 = p.noise.evaluate(y, tau, u1[s_idx])
            m2 = p.noise.evaluate(y, tau, u2[s_idx])
            du = abs(u1[s_idx] - u2[s_idx])
            lip = float(np.max(np.abs(m1 - m2))) / max(du, 1e-12)
            if lip > K + 1e-9:
                raise AssumptionViolation(
                    "A5", f"noise Lipschitz quotient {lip:.4g} exceeds the "
                    f"declared K = {K:g}")
            sq = float(np.sum(m1 ** 2))
            if sq > K * (1.0 + u1[s_idx] ** 2) + 1e-9:
                raise AssumptionViolation(
                    "A5", f"sum |M_l|^2 = {sq:.4g} exceeds K(1+|u|^2) at "
                    f"u = {u1[s_idx]:.4g} with K = {K:g}")
    report.record("A5", f"noise Lipschitz and growth bounds hold for K = {K:g}")

    # classification, and A6 in periodic mode
    periodic = all(_poly_is_periodic(poly) for poly in _problem_polys(p))
    if p.mode == "periodic" and not periodic:
        raise AssumptionViolation(
            "A6", "declared periodic but some frequency is not an integer "
            "multiple of 2*pi")
    report.classification = "periodic" if periodic else "quasi-periodic"
    if report.classification == "periodic":
        for i, (gamma, s) in enumerate(p.g.terms):
            defect = _unit_cell_integral(gamma)
            if defect > 1e-10:
                raise AssumptionViolation(
                    "A6", f"cell integral of gamma_{i} over Y is {defect:.3e}")
        report.record("A6", "unit-cell centering of the reaction verified "
                            "by exact means")

    # boundary compatibility of the initial data
    x = np.linspace(0.0, 1.0, 65)
    if p.domain.dimension == 1:
        vals = p.u0(x)
        edge = max(abs(float(vals[0])), abs(float(vals[-1])))
    else:
        X, Y = np.meshgrid(x, x, indexing="ij")
        vals = p.u0(X, Y)
        edge = float(np.max(np.abs(
            np.concatenate([vals[0, :], vals[-1, :], vals[:, 0], vals[:, -1]]))))
    if edge > 1e-12:
        raise AssumptionViolation(
            "u0", f"initial data does not vanish on the boundary "
            f"(max edge value {edge:.3e})")
    report.record("u0", "initial data vanishes on the boundary")
    return report
