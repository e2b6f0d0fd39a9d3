"""Numerical two-scale (weak/strong) convergence pairings.

A pairing integrates an oscillating field against a test function with an
explicit micro factor evaluated at (x/eps, t/eps^2) and compares the result
with the limit pairing computed from exact trig-polynomial means.  Quadrature
is trapezoid on the simulation grid; the oscillating factors are always
evaluated analytically at the nodes, never interpolated, so the micro scale
is not aliased through interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .trig import TrigPoly, mean_of_product


@dataclass
class GridField:
    """A space-time field sampled on a tensor grid, with a sample weight."""

    times: np.ndarray          # (nt+1,)
    axes: tuple                # per-axis node coordinates
    values: np.ndarray         # (nt+1, *spatial_shape)
    weight: float = 1.0

    @property
    def dimension(self):
        return len(self.axes)


def trajectory_field(tr, weight=1.0):
    x = tr.domain.axis_nodes()
    axes = (x,) * tr.domain.dimension
    return GridField(times=tr.times, axes=axes, values=tr.fields,
                     weight=weight)


def synthetic_field(times, axes, macro, micro, eps):
    """f0(x, t) * phi(x/eps, t/eps^2) sampled on the grid (micro optional)."""
    vals = _macro_values(macro, times, axes)
    if micro is not None:
        vals = vals * _micro_values(micro, times, axes, eps)
    return GridField(times=np.asarray(times, dtype=float),
                     axes=tuple(np.asarray(a, dtype=float) for a in axes),
                     values=vals)


@dataclass
class TestFunction:
    """Admissible test function: macro factor x micro factor x sample weight.

    macro(x..., t) must be vectorized; micro is a TrigPoly (None = constant
    one); micro_vector holds one TrigPoly per gradient component for the
    corrector-identification pairing; weights are per-sample scalars standing
    in for the bounded-random-variable factor.
    """

    __test__ = False          # not a pytest class, despite the name

    macro: object
    micro: object = None
    micro_vector: tuple = None
    weights: object = None

    def weight_for(self, sample_index):
        if self.weights is None:
            return 1.0
        return float(self.weights[sample_index])


# --------------------------------------------------------------------------
# quadrature helpers
# --------------------------------------------------------------------------

def _trapezoid_weights(x):
    w = np.empty(len(x))
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    return w


def _grid_quadrature(field_values, times, axes):
    """Trapezoid integral over time and every spatial axis."""
    acc = field_values
    for axis_coords in reversed(axes):
        w = _trapezoid_weights(axis_coords)
        acc = np.tensordot(acc, w, axes=([acc.ndim - 1], [0]))
    wt = _trapezoid_weights(times)
    return float(acc @ wt)


def _macro_values(macro, times, axes):
    if len(axes) == 1:
        out = np.empty((len(times), len(axes[0])))
        for i, t in enumerate(times):
            out[i] = np.asarray(macro(axes[0], t), dtype=float)
    else:
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        out = np.empty((len(times), len(axes[0]), len(axes[1])))
        for i, t in enumerate(times):
            out[i] = np.asarray(macro(X, Y, t), dtype=float)
    return out


def _micro_values(micro, times, axes, eps):
    if len(axes) == 1:
        pts = (np.asarray(axes[0]) / eps).reshape(-1, 1)
        shape = (len(axes[0]),)
    else:
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        pts = np.stack([X.reshape(-1), Y.reshape(-1)], axis=-1) / eps
        shape = X.shape
    ev = micro.evaluator(pts)
    out = np.empty((len(times),) + shape)
    for i, t in enumerate(times):
        out[i] = ev.at_tau(t / (eps * eps)).reshape(shape)
    return out


# --------------------------------------------------------------------------
# pairings
# --------------------------------------------------------------------------

def weak_sigma_pairing(samples, eps, f):
    """Monte Carlo average of  int u_eps f0 phi(x/eps, t/eps^2) dx dt."""
    total = 0.0
    for s_idx, fld in enumerate(samples):
        integrand = fld.values * _macro_values(f.macro, fld.times, fld.axes)
        if f.micro is not None:
            integrand = integrand * _micro_values(f.micro, fld.times,
                                                  fld.axes, eps)
        total += (fld.weight * f.weight_for(s_idx)
                  * _grid_quadrature(integrand, fld.times, fld.axes))
    return total / len(samples)


def sigma_limit_pairing(u_macro, f, u_micro=None, times=None, axes=None,
                        grid=None):
    """Limit pairing: macro quadrature times an exact micro mean.

    `u_macro` is a GridField or a callable (then `times`/`axes` supply the
    quadrature grid); the micro mean is M(phi) for macro-only limits and
    M(phi_u * phi_f) when the limit carries its own micro factor.
    """
    if grid is not None:
        times, axes = grid.times, grid.axes
    if isinstance(u_macro, GridField):
        times, axes = u_macro.times, u_macro.axes
        macro_vals = u_macro.values
    else:
        macro_vals = _macro_values(u_macro, times, axes)
    if f.micro is None:
        micro_mean = 1.0 if u_micro is None else u_micro.mean_value()
    elif u_micro is None:
        micro_mean = f.micro.mean_value()
    else:
        micro_mean = mean_of_product(u_micro, f.micro)
    fvals = _macro_values(f.macro, times, axes)
    return _grid_quadrature(macro_vals * fvals, times, axes) * micro_mean


def strong_sigma_check(samples_by_eps, limit_macro, limit_micro, times=None,
                       axes=None):
    """Compare L2(Q_T x samples) norms of u_eps with the exact limit norm.

    Returns one row per eps (sorted decreasing) with the signed gap, plus the
    limit norm and whether the absolute gap shrinks monotonically.
    """
    first = next(iter(samples_by_eps.values()))[0]
    times = first.times if times is None else times
    axes = first.axes if axes is None else axes
    macro_sq = _macro_values(limit_macro, times, axes) ** 2
    micro_sq = (mean_of_product(limit_micro, limit_micro)
                if limit_micro is not None else 1.0)
    limit_norm = math.sqrt(_grid_quadrature(macro_sq, times, axes) * micro_sq)
    rows = []
    for eps in sorted(samples_by_eps, reverse=True):
        fields = samples_by_eps[eps]
        ms = [_grid_quadrature(f.values ** 2, f.times, f.axes) for f in fields]
        norm = math.sqrt(sum(ms) / len(ms))
        rows.append({"eps": eps, "norm": norm, "limit": limit_norm,
                     "gap": norm - limit_norm})
    gaps = [abs(r["gap"]) for r in rows]
    return {"rows": rows, "limit_norm": limit_norm,
            "monotone": all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))}


def product_pairing(samples_u, samples_v, f):
    """Pairing of a product of two oscillating sequences against f0."""
    total = 0.0
    for s_idx, (fu, fv) in enumerate(zip(samples_u, samples_v)):
        integrand = (fu.values * fv.values
                     * _macro_values(f.macro, fu.times, fu.axes))
        total += f.weight_for(s_idx) * _grid_quadrature(
            integrand, fu.times, fu.axes)
    return total / len(samples_u)


def _discrete_gradient(values, axes):
    """Per-axis centered gradient of the spatial part (edges one-sided)."""
    grads = []
    for d, coords in enumerate(axes):
        grads.append(np.gradient(values, coords, axis=d + 1))
    return grads


def corrector_identification(pairs_by_eps, chi, cell, f):
    """Defect of the gradient two-scale identification, per eps.

    `pairs_by_eps[eps]` is a list of (oscillating, effective) trajectory
    fields on shared noise.  The oscillating side pairs the discrete gradient
    D u_eps against f0 Psi_j(x/eps, t/eps^2); the limit side evaluates

        D u0 + D_y u1,   u1 = chi . D u0 + w1(., ., u0)

    with exact micro means against the same Psi.  Returns rows with the
    pairing, the limit, and their defect, sorted by decreasing eps.
    """
    n = len(f.micro_vector)
    # exact micro means, independent of the trajectories
    mean_psi = np.array([psi.mean_value() for psi in f.micro_vector])
    chi_means = np.zeros((n, n))        # [j, k] = M(d chi_k / d y_j * Psi_j)
    for j, psi in enumerate(f.micro_vector):
        for k in range(n):
            chi_means[j, k] = mean_of_product(chi[k].differentiate(j), psi)
    unit_means = np.zeros((n, len(cell.unit_responses)))
    for j, psi in enumerate(f.micro_vector):
        for u_idx, w in enumerate(cell.unit_responses):
            unit_means[j, u_idx] = mean_of_product(w.differentiate(j), psi)

    rows = []
    for eps in sorted(pairs_by_eps, reverse=True):
        pairing = 0.0
        limit = 0.0
        pairs = pairs_by_eps[eps]
        for s_idx, (fld_eps, fld_hom) in enumerate(pairs):
            wgt = f.weight_for(s_idx)
            f0 = _macro_values(f.macro, fld_eps.times, fld_eps.axes)
            grads = _discrete_gradient(fld_eps.values, fld_eps.axes)
            acc = np.zeros_like(fld_eps.values)
            for j, psi in enumerate(f.micro_vector):
                acc += grads[j] * _micro_values(psi, fld_eps.times,
                                                fld_eps.axes, eps)
            pairing += wgt * _grid_quadrature(acc * f0, fld_eps.times,
                                              fld_eps.axes)

            f0h = _macro_values(f.macro, fld_hom.times, fld_hom.axes)
            grads0 = _discrete_gradient(fld_hom.values, fld_hom.axes)
            lim = np.zeros_like(fld_hom.values)
            for j in range(n):
                lim += grads0[j] * mean_psi[j]
                for k in range(n):
                    lim += chi_means[j, k] * grads0[k]
            if cell.unit_responses:
                sig_vals = np.stack(
                    [np.asarray(s(fld_hom.values)) for s in cell.profiles],
                    axis=-1)                   # (..., n_units)
                for j in range(n):
                    lim += sig_vals @ unit_means[j]
            limit += wgt * _grid_quadrature(lim * f0h, fld_hom.times,
                                            fld_hom.axes)
        pairing /= len(pairs)
        limit /= len(pairs)
        rows.append({"eps": eps, "pairing": pairing, "limit": limit,
                     "defect": abs(pairing - limit)})
    return {"rows": rows}


def fit_loglog_slope(eps_values, defects, floor=1e-14):
    """Least-squares slope of log(defect) against log(eps)."""
    x = np.log(np.asarray(eps_values, dtype=float))
    y = np.log(np.maximum(np.asarray(defects, dtype=float), floor))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
