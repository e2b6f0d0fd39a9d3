"""Large reaction term, its vector potential, and the divergence identity.

The reaction g(y, tau, u) is a finite separable sum  sum_i gamma_i(y, tau) *
sigma_i(u)  whose spatial oscillation gamma_i averages to zero in y.  That
centering lets the spatial Laplacian be inverted exactly per term, giving the
vector field G = grad_y(Laplace^-1 g) with div_y G = g; G is what turns the
1/eps reaction into convection plus absorption in the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ZeroSpatialFrequency
from .profiles import ScalarProfile
from .trig import TrigPoly

SPATIAL_FREQ_FLOOR = 1e-12


@dataclass(frozen=True)
class ReactionTerm:
    """g(y, tau, u) = sum_i gamma_i(y, tau) * sigma_i(u)."""

    terms: tuple  # of (TrigPoly, ScalarProfile) pairs

    def __init__(self, terms):
        object.__setattr__(self, "terms", tuple((g, s) for g, s in terms))

    @property
    def is_zero(self):
        return all(g.is_zero for g, _ in self.terms)

    def evaluate(self, y, tau, u):
        return sum(g.eval(y, tau) * s(u) for g, s in self.terms)

    def deriv_u(self, y, tau, u):
        return sum(g.eval(y, tau) * s.deriv(u) for g, s in self.terms)

    def evaluators(self, Y):
        """Per-term frozen spatial evaluators for time-stepping loops."""
        return [(g.evaluator(Y), s) for g, s in self.terms]


def check_spatial_invertibility(gamma):
    """Raise unless every frequency of gamma has a genuinely nonzero spatial part.

    Both the integer spatial coordinates and the cached real spatial frequency
    must be nonzero: a frequency with zero coordinates has no inverse under the
    spatial Laplacian, and near-zero real values (rationally dependent
    generators) would blow the inversion up.
    """
    for k in gamma.frequencies():
        if k.has_zero_spatial:
            raise ZeroSpatialFrequency(
                f"frequency {k} has zero spatial coordinates; the right side "
                "is not centered in y")
        if sum(w * w for w in k.omega) < SPATIAL_FREQ_FLOOR:
            raise ZeroSpatialFrequency(
                f"frequency {k} has |omega|^2 below {SPATIAL_FREQ_FLOOR}; "
                "inversion would be unstable")


def solve_poisson(gamma):
    """Solve Laplace_y R = gamma with zero spatial mean, exactly per coefficient.

    R_hat(k) = -gamma_hat(k) / |omega_spatial(k)|^2.
    """
    check_spatial_invertibility(gamma)
    out = {}
    for k, c in gamma.coeffs.items():
        w2 = sum(w * w for w in k.omega)
        out[k] = -c / w2
    return TrigPoly(gamma.module, out)


@dataclass(frozen=True)
class CorrectorG:
    """G(y, tau, u) = sum_i P_i(y, tau) * sigma_i(u) with P_i = grad(Laplace^-1 gamma_i).

    ``bound`` is a rigorous constant with |G(y, tau, u)| <= bound * |u|,
    assembled from coefficient-sum sup bounds of each P_i and the exact
    Lipschitz constants of the profiles.
    """

    terms: tuple  # of (tuple of N TrigPolys, ScalarProfile)
    bound: float

    def evaluate(self, y, tau, u):
        n = self.terms[0][0][0].module.n_dims if self.terms else 0
        out = np.zeros(n)
        for P, s in self.terms:
            su = s(u)
            for j, comp in enumerate(P):
                out[j] += comp.eval(y, tau) * su
        return out

    def deriv_u(self, y, tau, u):
        n = self.terms[0][0][0].module.n_dims if self.terms else 0
        out = np.zeros(n)
        for P, s in self.terms:
            dsu = s.deriv(u)
            for j, comp in enumerate(P):
                out[j] += comp.eval(y, tau) * dsu
        return out

    def divergence_terms(self):
        """div_y P_i per term; summing against sigma_i(u) rebuilds g."""
        out = []
        for P, s in self.terms:
            div = P[0].differentiate(0)
            for j in range(1, len(P)):
                div = div + P[j].differentiate(j)
            out.append((div, s))
        return out


def build_G(g):
    """Vector potential of the reaction term (componentwise Poisson solves)."""
    terms = []
    bound = 0.0
    for gamma, s in g.terms:
        if gamma.is_zero:
            continue
        R = solve_poisson(gamma)
        P = R.gradient()
        sup_p = math.sqrt(sum(comp.l1_coeff_bound() ** 2 for comp in P))
        bound += sup_p * s.lipschitz
        terms.append((P, s))
    return CorrectorG(tuple(terms), bound)


def reaction_identity_check(g, G, eps, u_field, sample_points):
    """Max residual of the divergence representation of the 1/eps reaction.

    Checks, at each sample point (x, t), that

        (1/eps) g(x/eps, t/eps^2, u(x))
            = div_x [G(x/eps, t/eps^2, u(x))] - du_G(x/eps, t/eps^2, u(x)) . Du(x)

    with both sides evaluated analytically: the x-divergence expands by the
    chain rule into (1/eps) div_y G + du_G . Du, with div_y G exact trig
    calculus and Du the field's closed-form gradient.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    div_terms = G.divergence_terms()
    worst = 0.0
    for point in sample_points:
        x = np.asarray(point[0], dtype=float).reshape(-1)
        t = float(point[1])
        y = x / eps
        tau = t / eps / eps
        u = u_field.value(x)
        du = np.asarray(u_field.grad(x), dtype=float).reshape(-1)
        lhs = g.evaluate(y, tau, u) / eps
        if G.terms:
            du_g = float(np.dot(G.deriv_u(y, tau, u), du))
        else:
            du_g = 0.0
        # chain rule: div_x[G(x/eps, ., u(x))] = (1/eps) div_y G + du_G . Du
        div_x_G = (sum(div.eval(y, tau) * s(u) for div, s in div_terms) / eps
                   + du_g)
        rhs = div_x_G - du_g
        worst = max(worst, abs(lhs - rhs))
    return worst


@dataclass(frozen=True)
class SmoothField:
    """Closed-form scalar field with analytic gradient, for identity checks."""

    value: object   # callable x -> float
    grad: object    # callable x -> array of length d
