"""Effective (homogenized) model: tensor b and the drift/noise tables.

Everything here is an exact mean of trig-polynomial products:

    b_ij    = M( sum_k a_ik (delta_kj + d chi_j / d y_k) )
    F1_i(r) = M( sum_l a_il d w1(.,.,r) / d y_l )
    F2_j(r) = M( du_g(.,.,r) chi_j )
    F3(r)   = M( du_g(.,.,r) w1(.,.,r) )
    Mt_l(r) = M( M_l(.,.,r) )

with du_g from the closed-form profile derivatives.  The separable reaction
makes w1(., ., r) a profile-weighted combination of unit responses solved
once, so tabulation over the r-grid costs one cell solve per reaction term
regardless of the grid size.  Tables interpolate piecewise-linearly (no
overshoot, preserves the Lipschitz bounds); queries outside the range clamp
to the boundary value and count on the model.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass

import numpy as np

from .trig import mean_of_product


@dataclass(frozen=True)
class NoiseChannel:
    """M_l(y, tau, u) = sum_i mu_i(y, tau) sigma_i(u) + offset(y, tau)."""

    pairs: tuple
    offset: object = None

    def evaluate(self, y, tau, u):
        val = sum(mu.eval(y, tau) * s(u) for mu, s in self.pairs)
        if self.offset is not None:
            val += self.offset.eval(y, tau)
        return val

    def sup_bound(self):
        """Coefficient-sum bound on sup_{y,tau,u<=1} pieces (diagnostic)."""
        b = sum(mu.l1_coeff_bound() * s.lipschitz for mu, s in self.pairs)
        if self.offset is not None:
            b += self.offset.l1_coeff_bound()
        return b


@dataclass(frozen=True)
class NoiseTerm:
    """All m noise channels plus the declared A5 constant K."""

    channels: tuple
    bound: float = 1.0

    @property
    def m(self):
        return len(self.channels)

    @classmethod
    def empty(cls):
        return cls(channels=(), bound=1.0)

    def build_evaluators(self, Y):
        out = []
        for ch in self.channels:
            pairs = [(mu.evaluator(Y), s) for mu, s in ch.pairs]
            off = ch.offset.evaluator(Y) if ch.offset is not None else None
            out.append((pairs, off))
        return out

    def evaluate(self, y, tau, u):
        return np.array([ch.evaluate(y, tau, u) for ch in self.channels])


def homogenized_tensor(a, chi):
    """b = M(a (I + D_y chi)), every product an exact convolution mean."""
    n = a.n_dims
    b = np.empty((n, n))
    for j in range(n):
        grad_j = chi[j].gradient()
        for i in range(n):
            val = a.entry(i, j).mean_value()
            for k in range(n):
                val += mean_of_product(a.entry(i, k), grad_j[k])
            b[i, j] = val
    return b


def effective_functionals(a, g, chi, cell, r):
    """(F1, F2, F3) at one scalar parameter value r.

    `cell` provides the reaction unit responses (a CellSolution); F2 and F3
    use the analytic profile derivatives, never differencing.
    """
    n = a.n_dims
    w1r = cell.w1(r)
    F1 = np.zeros(n)
    for i in range(n):
        for l in range(n):
            F1[i] += mean_of_product(a.entry(i, l), w1r.differentiate(l))
    F2 = np.zeros(n)
    F3 = 0.0
    for gamma, s in g.terms:
        if gamma.is_zero:
            continue
        ds = float(s.deriv(r))
        for j in range(n):
            F2[j] += ds * mean_of_product(gamma, chi[j])
        F3 += ds * mean_of_product(gamma, w1r)
    return F1, F2, F3


def effective_noise(noise, r):
    """Mtilde(r): channel-wise mean value of M_l(., ., r)."""
    out = np.zeros(noise.m)
    for l, ch in enumerate(noise.channels):
        val = sum(mu.mean_value() * float(s(r)) for mu, s in ch.pairs)
        if ch.offset is not None:
            val += ch.offset.mean_value()
        out[l] = val
    return out


class EffectiveModel:
    """Homogenized tensor plus tabulated F1, F2, F3, Mtilde.

    Immutable after construction except the out-of-range counter, which is
    lock-protected so concurrent simulations can clamp safely.
    """

    def __init__(self, b, r_grid, F1, F2, F3, Mtilde, ellipticity,
                 lipschitz_estimates=None, provenance=None):
        self.b = np.asarray(b, dtype=float)
        self.r_grid = np.asarray(r_grid, dtype=float)
        if len(self.r_grid) < 2 or np.any(np.diff(self.r_grid) <= 0):
            raise ValueError("r_grid must be strictly increasing")
        self.F1 = np.asarray(F1, dtype=float)
        self.F2 = np.asarray(F2, dtype=float)
        self.F3 = np.asarray(F3, dtype=float)
        self.Mtilde = np.asarray(Mtilde, dtype=float)
        self.ellipticity = float(ellipticity)
        self.lipschitz_estimates = dict(lipschitz_estimates or {})
        self.provenance = dict(provenance or {})
        self._oor_lock = threading.Lock()
        self._out_of_range = 0

    # ------------------------------------------------------------- queries
    @property
    def n_dims(self):
        return self.b.shape[0]

    @property
    def m(self):
        return self.Mtilde.shape[1]

    @property
    def out_of_range_count(self):
        return self._out_of_range

    @property
    def has_drift_tables(self):
        return bool(np.any(self.F1) or np.any(self.F2) or np.any(self.F3))

    def _count_clamped(self, r):
        lo, hi = self.r_grid[0], self.r_grid[-1]
        n_bad = int(np.count_nonzero((r < lo) | (r > hi)))
        if n_bad:
            with self._oor_lock:
                self._out_of_range += n_bad

    def _interp_table(self, table, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        self._count_clamped(r)
        if table.ndim == 1:
            return np.interp(r, self.r_grid, table)
        out = np.empty((len(r), table.shape[1]))
        for c in range(table.shape[1]):
            out[:, c] = np.interp(r, self.r_grid, table[:, c])
        return out

    def f1(self, r):
        return self._interp_table(self.F1, r)

    def f2(self, r):
        return self._interp_table(self.F2, r)

    def f3(self, r):
        return self._interp_table(self.F3, r)

    def mtilde(self, r):
        return self._interp_table(self.Mtilde, r)

    # ------------------------------------------------------------ persistence
    def to_dict(self):
        return {
            "schema": "apshom-effective-v1",
            "b": self.b.tolist(),
            "r_grid": self.r_grid.tolist(),
            "F1": self.F1.tolist(),
            "F2": self.F2.tolist(),
            "F3": self.F3.tolist(),
            "Mtilde": self.Mtilde.tolist(),
            "ellipticity": self.ellipticity,
            "lipschitz_estimates": self.lipschitz_estimates,
            "provenance": self.provenance,
        }

    def export(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        if d.get("schema") != "apshom-effective-v1":
            raise ValueError("unrecognized effective-model schema")
        return cls(b=d["b"], r_grid=d["r_grid"], F1=d["F1"], F2=d["F2"],
                   F3=d["F3"], Mtilde=d["Mtilde"],
                   ellipticity=d["ellipticity"],
                   lipschitz_estimates=d.get("lipschitz_estimates"),
                   provenance=d.get("provenance"))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def tabulate(a, g, noise, chi, module, r_min, r_max, points, cell=None,
             provenance=None):
    """Assemble the EffectiveModel over a uniform r-grid.

    The unit reaction responses are solved once (or taken from `cell`) and
    recombined across the whole grid; every table entry is an exact mean, so
    interpolation is the only approximation between grid points.
    """
    if not r_min < r_max:
        raise ValueError("need r_min < r_max")
    if points < 9:
        raise ValueError("need at least 9 table points")
    if cell is None:
        from .cell import solve_cell
        cell = solve_cell(a, g, module)
    n = a.n_dims
    r_grid = np.linspace(r_min, r_max, int(points))

    # base means, one per unit response / reaction term
    unit_F1 = np.zeros((len(cell.unit_responses), n))
    for u_idx, w in enumerate(cell.unit_responses):
        for i in range(n):
            for l in range(n):
                unit_F1[u_idx, i] += mean_of_product(
                    a.entry(i, l), w.differentiate(l))
    gamma_chi = np.zeros((len(g.terms), n))
    gamma_w = np.zeros((len(g.terms), len(cell.unit_responses)))
    active = [i for i, (gam, _) in enumerate(g.terms) if not gam.is_zero]
    for row, (gamma, _) in enumerate(g.terms):
        if gamma.is_zero:
            continue
        for j in range(n):
            gamma_chi[row, j] = mean_of_product(gamma, chi[j])
        for u_idx, w in enumerate(cell.unit_responses):
            gamma_w[row, u_idx] = mean_of_product(gamma, w)

    if len(active) != len(cell.unit_responses):
        raise ValueError("cell solution does not match the reaction term")
    F1 = np.zeros((len(r_grid), n))
    F2 = np.zeros((len(r_grid), n))
    F3 = np.zeros(len(r_grid))
    Mt = np.zeros((len(r_grid), noise.m))
    profiles_active = [g.terms[i][1] for i in active]
    sig = np.array([[float(s(r)) for s in profiles_active] for r in r_grid]
                   ) if active else np.zeros((len(r_grid), 0))
    for gi, r in enumerate(r_grid):
        if active:
            F1[gi] = sig[gi] @ unit_F1
        for row, (gamma, s) in enumerate(g.terms):
            if gamma.is_zero:
                continue
            ds = float(s.deriv(r))
            F2[gi] += ds * gamma_chi[row]
            F3[gi] += ds * float(gamma_w[row] @ sig[gi])
        Mt[gi] = effective_noise(noise, r)

    dr = np.diff(r_grid)
    lip = {}
    for name, table in (("F1", F1), ("F2", F2), ("F3", F3.reshape(-1, 1)),
                        ("Mtilde", Mt)):
        if table.shape[1] == 0 or len(r_grid) < 2:
            lip[name] = 0.0
        else:
            slopes = np.abs(np.diff(table, axis=0)) / dr[:, None]
            lip[name] = float(np.max(slopes)) if slopes.size else 0.0

    prov = dict(provenance or {})
    prov.setdefault("cutoff", module.cutoff)
    prov.setdefault("galerkin_dim", cell.galerkin_dim)
    prov.setdefault("residuals", dict(cell.residuals))
    return EffectiveModel(
        b=homogenized_tensor(a, chi), r_grid=r_grid, F1=F1, F2=F2, F3=F3,
        Mtilde=Mt, ellipticity=a.ellipticity, lipschitz_estimates=lip,
        provenance=prov)
