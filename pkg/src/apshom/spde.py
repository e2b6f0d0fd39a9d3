"""Finite-difference Euler-Maruyama simulation of both problems.

The oscillating problem

    du = (div(a(x/eps, t/eps^2) Du) + (1/eps) g(x/eps, t/eps^2, u)) dt
         + M(x/eps, t/eps^2, u) dW,     u = 0 on the boundary,

and the effective problem

    du = (div(b Du) + div F1(u) - F2(u).Du - F3(u)) dt + Mtilde(u) dW,

share one semi-implicit scheme: diffusion implicit at the new time level
(oscillating coefficients frozen at the step midpoint of fast time), drift and
noise explicit with Ito left-point evaluation.  Space is a conservative
3-point (1D) / 5-point (2D) flux discretization on a uniform grid over
Q = (0,1)^d with homogeneous Dirichlet data; in 2D an off-diagonal diffusion
entry adds centered cross-difference terms to the implicit operator.

Wiener paths are generated once per sample and refined to any power-of-two
step count by seed-deterministic Brownian-bridge subdivision, so the
oscillating and effective runs of one sample consume literally the same
noise.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import Blowup, StiffnessRejected

BLOWUP_THRESHOLD = 1.0e6
STIFFNESS_FACTOR = 10.0   # harness clamp: dt <= eps^2 / 10
STIFFNESS_REJECT = 2.0    # hard solver refusal: dt > eps^2 / 2


@dataclass(frozen=True)
class DomainSpec:
    """Unit box (0,1)^d with a uniform grid of spacing 1/grid_n."""

    dimension: int
    grid_n: int
    T: float

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.grid_n < 2:
            raise ValueError("grid_n must be at least 2")
        if self.T <= 0:
            raise ValueError("horizon T must be positive")

    @property
    def h(self):
        return 1.0 / self.grid_n

    @property
    def node_shape(self):
        return (self.grid_n + 1,) * self.dimension

    def axis_nodes(self):
        return np.arange(self.grid_n + 1) / self.grid_n

    def interior_coords(self):
        """Coordinates of interior nodes, shape ((n-1)^d, d)."""
        x = np.arange(1, self.grid_n) / self.grid_n
        if self.dimension == 1:
            return x.reshape(-1, 1)
        X, Y = np.meshgrid(x, x, indexing="ij")
        return np.stack([X.reshape(-1), Y.reshape(-1)], axis=-1)


@dataclass(frozen=True)
class WienerPath:
    """Increments of an m-channel Wiener process on a uniform time grid.

    Bit-for-bit reproducible from (seed, base_dt, steps): generation and every
    bridge refinement level draw from counter-based streams keyed by (seed,
    level).  Refinement halves the step; the two children of an increment sum
    to it exactly, so coarse sums of refined increments equal the originals.
    """

    m: int
    seed: int
    base_dt: float
    increments: np.ndarray     # (m, steps)
    level: int = 0
    parent: object = None      # the path this one refines, kept by reference

    @property
    def steps(self):
        return self.increments.shape[1]

    @classmethod
    def generate(cls, m, seed, base_dt, steps):
        rng = np.random.Generator(
            np.random.Philox(key=[seed & (2 ** 64 - 1), 0]))
        inc = rng.standard_normal((m, steps)) * math.sqrt(base_dt)
        inc.setflags(write=False)
        return cls(m=m, seed=seed, base_dt=base_dt, increments=inc)

    def refine(self):
        """One bridge subdivision: twice the steps at half the dt.

        Each increment splits into half-plus-bridge-noise and the float
        remainder, and the refined path keeps its parent by reference, so
        `coarsen` recovers the original increments bitwise (re-summing the
        children in floats agrees to sub-ulp rounding, which binary floats
        cannot always close when a child dwarfs its parent).
        """
        fine_dt = 0.5 * self.base_dt
        rng = np.random.Generator(
            np.random.Philox(key=[self.seed & (2 ** 64 - 1), self.level + 1]))
        xi = rng.standard_normal(self.increments.shape)
        # conditional midpoint split: the perturbation has variance base_dt/4
        left = 0.5 * self.increments + 0.5 * math.sqrt(self.base_dt) * xi
        right = self.increments - left
        fine = np.empty((self.m, 2 * self.steps))
        fine[:, 0::2] = left
        fine[:, 1::2] = right
        fine.setflags(write=False)
        return WienerPath(m=self.m, seed=self.seed, base_dt=fine_dt,
                          increments=fine, level=self.level + 1, parent=self)

    def refine_to_steps(self, steps):
        path = self
        while path.steps < steps:
            path = path.refine()
        if path.steps != steps:
            raise ValueError(
                f"{steps} is not a power-of-two refinement of {self.steps}")
        return path

    def coarsen(self):
        """Exact inverse of one refinement (the stored parent when available)."""
        if self.parent is not None:
            return self.parent
        if self.steps % 2:
            raise ValueError("cannot coarsen an odd number of steps")
        coarse = self.increments[:, 0::2] + self.increments[:, 1::2]
        coarse.setflags(write=False)
        return WienerPath(m=self.m, seed=self.seed,
                          base_dt=2.0 * self.base_dt, increments=coarse,
                          level=max(0, self.level - 1))


@dataclass
class Trajectory:
    """One simulated path on the full node grid (boundary rows included)."""

    domain: DomainSpec
    dt: float
    times: np.ndarray
    fields: np.ndarray          # (steps+1, *node_shape)
    energy_l2: np.ndarray       # |u(t)|^2 in L2(Q), per time level
    h1_integral: float          # int_0^T ||u(t)||^2 dt (trapezoid)
    provenance: dict = field(default_factory=dict)

    @property
    def steps(self):
        return len(self.times) - 1

    def sup_energy(self):
        return float(np.max(self.energy_l2))

    def save_binary(self, path):
        """Columnar little-endian dump: header then times then fields.

        Header: magic 'APSH', version u32, dimension u32, grid_n u32,
        steps u64, node_count u64, h f64, dt f64; then times as f64[steps+1]
        and fields as f64[(steps+1) * node_count], all little-endian.
        """
        n_nodes = int(np.prod(self.fields.shape[1:]))
        with open(path, "wb") as fh:
            fh.write(b"APSH")
            fh.write(struct.pack("<II", 1, self.domain.dimension))
            fh.write(struct.pack("<I", self.domain.grid_n))
            fh.write(struct.pack("<QQ", self.steps, n_nodes))
            fh.write(struct.pack("<dd", self.domain.h, self.dt))
            fh.write(self.times.astype("<f8").tobytes())
            fh.write(self.fields.astype("<f8").reshape(-1).tobytes())

    @staticmethod
    def load_binary(path):
        with open(path, "rb") as fh:
            if fh.read(4) != b"APSH":
                raise ValueError("not a trajectory file")
            _, dim = struct.unpack("<II", fh.read(8))
            (grid_n,) = struct.unpack("<I", fh.read(4))
            steps, n_nodes = struct.unpack("<QQ", fh.read(16))
            h, dt = struct.unpack("<dd", fh.read(16))
            times = np.frombuffer(fh.read(8 * (steps + 1)), dtype="<f8")
            raw = np.frombuffer(fh.read(8 * (steps + 1) * n_nodes), dtype="<f8")
        shape = (steps + 1,) + (grid_n + 1,) * dim
        return {"dimension": dim, "grid_n": grid_n, "h": h, "dt": dt,
                "times": times, "fields": raw.reshape(shape)}


# --------------------------------------------------------------------------
# discrete norms
# --------------------------------------------------------------------------

def l2_norm_sq(u_full, h, dim):
    """Discrete |u|^2 over Q (boundary values vanish, so plain node sum)."""
    return float(h ** dim * np.sum(u_full ** 2))

def h1_seminorm_sq(u_full, h, dim):
    """Discrete ||u||^2: summed squared difference quotients."""
    total = 0.0
    for axis in range(dim):
        d = np.diff(u_full, axis=axis)
        total += float(np.sum(d * d)) * h ** (dim - 2)
    return total


def l2_qt_distance(tr_a, tr_b):
    """Discrete L2(Q_T) distance of two trajectories on identical grids."""
    if tr_a.fields.shape != tr_b.fields.shape:
        raise ValueError("trajectories live on different grids")
    diff = tr_a.fields - tr_b.fields
    h = tr_a.domain.h
    dim = tr_a.domain.dimension
    per_time = h ** dim * np.sum(
        diff.reshape(diff.shape[0], -1) ** 2, axis=1)
    w = np.ones(len(per_time))
    w[0] = w[-1] = 0.5
    return math.sqrt(float(np.sum(w * per_time) * tr_a.dt))


# --------------------------------------------------------------------------
# implicit diffusion operators
# --------------------------------------------------------------------------

def _banded_implicit_1d(a_mid, dt, h):
    """ab-matrix of I - dt * L for the conservative 1D Dirichlet operator."""
    n_int = len(a_mid) - 1            # a_mid has one value per cell, n cells
    r = dt / h ** 2
    ab = np.zeros((3, n_int))
    ab[0, 1:] = -r * a_mid[1:-1]                       # superdiag: a_{i+1/2}
    ab[1, :] = 1.0 + r * (a_mid[:-1] + a_mid[1:])      # diag
    ab[2, :-1] = -r * a_mid[1:-1]                      # subdiag
    return ab


def _sparse_implicit_2d(ax_mid, ay_mid, a01, a10, dt, h):
    """I - dt * L on interior nodes of a 2D Dirichlet grid (CSC).

    Diagonal diffusion is the conservative 5-point flux form: ax_mid[i, j]
    multiplies the flux between nodes (i, j) and (i+1, j) (shape (n, n+1)),
    ay_mid[i, j] between (i, j) and (i, j+1) (shape (n+1, n)).  Off-diagonal
    entries a01/a10, given as (n+1, n+1) node values or None, contribute
    centered cross differences d_x(a01 d_y u) + d_y(a10 d_x u); couplings to
    boundary nodes are dropped (their value is zero).
    """
    n = ax_mid.shape[0]               # cells per axis
    ni = n - 1                        # interior nodes per axis
    size = ni * ni
    rows, cols, data = [], [], []

    def idx(i, j):
        return (i - 1) * ni + (j - 1)

    I, J = np.meshgrid(np.arange(1, n), np.arange(1, n), indexing="ij")
    If, Jf = I.reshape(-1), J.reshape(-1)
    center = idx(If, Jf)
    r = dt / h ** 2

    ax_r = ax_mid[If, Jf]             # flux (i, j) -> (i+1, j)
    ax_l = ax_mid[If - 1, Jf]
    ay_u = ay_mid[If, Jf]
    ay_d = ay_mid[If, Jf - 1]
    rows.append(center); cols.append(center)
    data.append(1.0 + r * (ax_r + ax_l + ay_u + ay_d))

    def couple(di, dj, coeff):
        ii, jj = If + di, Jf + dj
        mask = (ii >= 1) & (ii <= ni) & (jj >= 1) & (jj <= ni)
        rows.append(center[mask])
        cols.append(idx(ii[mask], jj[mask]))
        data.append(coeff[mask])

    couple(1, 0, -r * ax_r)
    couple(-1, 0, -r * ax_l)
    couple(0, 1, -r * ay_u)
    couple(0, -1, -r * ay_d)

    q = dt / (4.0 * h ** 2)
    if a01 is not None:
        # d_x(a01 d_y u): couples the four diagonal neighbors through
        # a01 at the east/west neighbor nodes
        couple(1, 1, -q * a01[If + 1, Jf])
        couple(1, -1, q * a01[If + 1, Jf])
        couple(-1, 1, q * a01[If - 1, Jf])
        couple(-1, -1, -q * a01[If - 1, Jf])
    if a10 is not None:
        # d_y(a10 d_x u): same stencil through a10 at north/south nodes
        couple(1, 1, -q * a10[If, Jf + 1])
        couple(-1, 1, q * a10[If, Jf + 1])
        couple(1, -1, q * a10[If, Jf - 1])
        couple(-1, -1, -q * a10[If, Jf - 1])

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.concatenate(data)
    return scipy.sparse.csc_matrix((data, (rows, cols)), shape=(size, size))


# --------------------------------------------------------------------------
# simulators
# --------------------------------------------------------------------------

def _check_time_grid(domain, dt, w, m_expected):
    steps = int(round(domain.T / dt))
    if steps < 1 or abs(steps * dt - domain.T) > 1e-9 * domain.T:
        raise ValueError(f"dt = {dt} does not divide the horizon T = {domain.T}")
    if w.steps != steps:
        raise ValueError(f"path has {w.steps} steps, run needs {steps}; "
                         "refine the path first")
    if abs(w.base_dt - dt) > 1e-12 * dt:
        raise ValueError("path dt does not match the run dt")
    if w.m != m_expected:
        raise ValueError(f"path has {w.m} channels, problem has {m_expected}")
    return steps


def _initial_grid(domain, u0):
    if callable(u0):
        if domain.dimension == 1:
            vals = np.asarray(u0(domain.axis_nodes()), dtype=float)
        else:
            x = domain.axis_nodes()
            X, Y = np.meshgrid(x, x, indexing="ij")
            vals = np.asarray(u0(X, Y), dtype=float)
    else:
        vals = np.array(u0, dtype=float)
    if vals.shape != domain.node_shape:
        raise ValueError("initial data shape does not match the grid")
    bnd = _boundary_mask(domain)
    if np.max(np.abs(vals[bnd])) > 1e-13:
        raise ValueError("initial data must vanish on the boundary")
    out = vals.copy()
    out[bnd] = 0.0
    return out


def _boundary_mask(domain):
    mask = np.zeros(domain.node_shape, dtype=bool)
    if domain.dimension == 1:
        mask[0] = mask[-1] = True
    else:
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
    return mask


def _check_blowup(u, step, t):
    m = float(np.max(np.abs(u)))
    if not math.isfinite(m) or m > BLOWUP_THRESHOLD:
        raise Blowup(f"field magnitude {m:.3e} at step {step} (t = {t:.6g})",
                     step=step, time=t)


class _EnergyAccumulator:
    """Per-step L2 energy plus trapezoid-accumulated H1 seminorm integral."""

    def __init__(self, h, dim, dt, steps):
        self.h, self.dim, self.dt = h, dim, dt
        self.l2 = np.empty(steps + 1)
        self._h1_prev = None
        self._h1_total = 0.0

    def push(self, k, u_full):
        self.l2[k] = l2_norm_sq(u_full, self.h, self.dim)
        h1 = h1_seminorm_sq(u_full, self.h, self.dim)
        if self._h1_prev is not None:
            self._h1_total += 0.5 * self.dt * (self._h1_prev + h1)
        self._h1_prev = h1

    @property
    def h1_integral(self):
        return self._h1_total


def simulate_eps(p, eps, dt, w):
    """Semi-implicit Euler-Maruyama run of the oscillating problem.

    Diffusion is implicit with coefficients frozen at the fast-time midpoint
    of the step; the 1/eps reaction and the noise are explicit with Ito
    left-point evaluation.  Raises `StiffnessRejected` when dt > eps^2/2 (the
    fast oscillation t/eps^2 would be unresolved) and `Blowup` past 1e6.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if p.eps_list and not any(abs(eps - e) <= 1e-12 * max(1.0, e)
                              for e in p.eps_list):
        raise ValueError(f"eps = {eps} is not in the problem's eps list")
    if dt > eps * eps / STIFFNESS_REJECT:
        raise StiffnessRejected(
            f"dt = {dt} exceeds eps^2/{STIFFNESS_REJECT:g} = "
            f"{eps * eps / STIFFNESS_REJECT:.3e}")
    domain = p.domain
    m = p.noise.m
    steps = _check_time_grid(domain, dt, w, m)
    u = _initial_grid(domain, p.u0)
    dim, h, n = domain.dimension, domain.h, domain.grid_n
    x_int = domain.interior_coords()
    react_evals = [(gamma.evaluator(x_int / eps), s) for gamma, s in p.g.terms]
    noise_evals = p.noise.build_evaluators(x_int / eps)

    interior = (slice(1, n),) * dim
    energy = _EnergyAccumulator(h, dim, dt, steps)
    fields = np.empty((steps + 1,) + domain.node_shape)
    fields[0] = u
    energy.push(0, u)

    if dim == 1:
        mids = ((np.arange(n) + 0.5) * h).reshape(-1, 1)
        a_eval = p.a.entry(0, 0).evaluator(mids / eps)
        static = not a_eval.time_dependent
        ab_cache = _banded_implicit_1d(a_eval.at_tau(0.0), dt, h) if static else None
    else:
        a_evals, static = _setup_2d_coefficients(p.a, domain, eps)
        lu_cache = (_factor_2d(a_evals, 0.0, dt, h) if static else None)

    fields[1:] = 0.0
    dW = w.increments
    inv_eps_sq = 1.0 / (eps * eps)
    for k in range(steps):
        t = k * dt
        tau = t * inv_eps_sq
        tau_mid = (t + 0.5 * dt) * inv_eps_sq
        u_int = u[interior].reshape(-1)
        drift = np.zeros_like(u_int)
        for ev, s in react_evals:
            drift += ev.at_tau(tau) * s(u_int)
        rhs = u_int + (dt / eps) * drift
        if m:
            rhs = rhs + _noise_increment(noise_evals, tau, u_int, dW[:, k])
        if dim == 1:
            ab = ab_cache if ab_cache is not None else _banded_implicit_1d(
                a_eval.at_tau(tau_mid), dt, h)
            new_int = scipy.linalg.solve_banded((1, 1), ab, rhs)
        else:
            lu = lu_cache if lu_cache is not None else _factor_2d(
                a_evals, tau_mid, dt, h)
            new_int = lu(rhs)
        u = fields[k + 1]
        u[interior] = new_int.reshape((n - 1,) * dim)
        _check_blowup(u, k + 1, t + dt)
        energy.push(k + 1, u)

    return Trajectory(
        domain=domain, dt=dt, times=np.arange(steps + 1) * dt, fields=fields,
        energy_l2=energy.l2, h1_integral=energy.h1_integral,
        provenance={"kind": "eps", "eps": eps, "seed": w.seed,
                    "path_level": w.level, "dt": dt})


def _noise_increment(noise_evals, tau, u_int, dW_k):
    out = np.zeros_like(u_int)
    for l, (pairs, offset) in enumerate(noise_evals):
        chan = np.zeros_like(u_int)
        for ev, s in pairs:
            chan += ev.at_tau(tau) * s(u_int)
        if offset is not None:
            chan += offset.at_tau(tau)
        out += chan * dW_k[l]
    return out


def _setup_2d_coefficients(a, domain, eps):
    n, h = domain.grid_n, domain.h
    cells = (np.arange(n) + 0.5) * h
    nodes = np.arange(n + 1) * h
    Xx = np.stack(np.meshgrid(cells, nodes, indexing="ij"), axis=-1).reshape(-1, 2)
    Xy = np.stack(np.meshgrid(nodes, cells, indexing="ij"), axis=-1).reshape(-1, 2)
    Xn = np.stack(np.meshgrid(nodes, nodes, indexing="ij"), axis=-1).reshape(-1, 2)
    evals = {
        "xx": (a.entry(0, 0).evaluator(Xx / eps), (n, n + 1)),
        "yy": (a.entry(1, 1).evaluator(Xy / eps), (n + 1, n)),
        "01": (None if a.entry(0, 1).is_zero
               else a.entry(0, 1).evaluator(Xn / eps), (n + 1, n + 1)),
        "10": (None if a.entry(1, 0).is_zero
               else a.entry(1, 0).evaluator(Xn / eps), (n + 1, n + 1)),
    }
    static = all(ev is None or not ev.time_dependent for ev, _ in evals.values())
    return evals, static


def _factor_2d(a_evals, tau, dt, h):
    def grab(key):
        ev, shape = a_evals[key]
        return None if ev is None else ev.at_tau(tau).reshape(shape)

    mat = _sparse_implicit_2d(grab("xx"), grab("yy"), grab("01"), grab("10"),
                              dt, h)
    return scipy.sparse.linalg.splu(mat).solve


def simulate_homogenized(model, domain, u0, dt, w):
    """Euler-Maruyama run of the effective convection-diffusion equation.

    Constant-matrix diffusion div(b D .) is implicit (factored once);
    div F1(u), the upwinded convection F2(u).Du, the absorption F3(u) and the
    noise Mtilde(u) dW are explicit from the tabulated model.  Queries outside
    the table range clamp and count on the model, they are not fatal.
    """
    steps = _check_time_grid(domain, dt, w, model.m)
    u = _initial_grid(domain, u0)
    dim, h, n = domain.dimension, domain.h, domain.grid_n
    b = model.b
    interior = (slice(1, n),) * dim

    if dim == 1:
        ab = _banded_implicit_1d(np.full(n, b[0, 0]), dt, h)
        solve = lambda rhs: scipy.linalg.solve_banded((1, 1), ab, rhs)
    else:
        ax = np.full((n, n + 1), b[0, 0])
        ay = np.full((n + 1, n), b[1, 1])
        a01 = None if b[0, 1] == 0.0 else np.full((n + 1, n + 1), b[0, 1])
        a10 = None if b[1, 0] == 0.0 else np.full((n + 1, n + 1), b[1, 0])
        solve = scipy.sparse.linalg.splu(
            _sparse_implicit_2d(ax, ay, a01, a10, dt, h)).solve

    energy = _EnergyAccumulator(h, dim, dt, steps)
    fields = np.empty((steps + 1,) + domain.node_shape)
    fields[0] = u
    fields[1:] = 0.0
    energy.push(0, u)
    dW = w.increments

    for k in range(steps):
        u_int = u[interior].reshape(-1)
        drift = _effective_drift(model, u, domain)
        rhs = u_int + dt * drift
        if model.m:
            mt = model.mtilde(u_int)                       # (n_int, m)
            rhs = rhs + mt @ dW[:, k]
        new_int = solve(rhs)
        u = fields[k + 1]
        u[interior] = new_int.reshape((n - 1,) * dim)
        _check_blowup(u, k + 1, (k + 1) * dt)
        energy.push(k + 1, u)

    return Trajectory(
        domain=domain, dt=dt, times=np.arange(steps + 1) * dt, fields=fields,
        energy_l2=energy.l2, h1_integral=energy.h1_integral,
        provenance={"kind": "homogenized", "seed": w.seed,
                    "path_level": w.level, "dt": dt})


def _effective_drift(model, u_full, domain):
    """div F1(u) - F2(u).Du - F3(u) on interior nodes (flattened)."""
    n, h, dim = domain.grid_n, domain.h, domain.dimension
    if not model.has_drift_tables:
        return np.zeros((n - 1) ** dim)
    flat = u_full.reshape(-1)
    F1 = model.f1(flat).reshape(domain.node_shape + (dim,))
    F3 = model.f3(flat).reshape(domain.node_shape)
    if dim == 1:
        div_f1 = (F1[2:, 0] - F1[:-2, 0]) / (2.0 * h)
        c = model.f2(u_full[1:-1]).reshape(-1, 1)[:, 0]
        back = (u_full[1:-1] - u_full[:-2]) / h
        fwd = (u_full[2:] - u_full[1:-1]) / h
        conv = c * np.where(c >= 0.0, back, fwd)
        return div_f1 - conv - F3[1:-1]
    div_f1 = ((F1[2:, 1:-1, 0] - F1[:-2, 1:-1, 0])
              + (F1[1:-1, 2:, 1] - F1[1:-1, :-2, 1])) / (2.0 * h)
    u_in = u_full[1:-1, 1:-1]
    c = model.f2(u_in.reshape(-1)).reshape(u_in.shape + (dim,))
    back_x = (u_full[1:-1, 1:-1] - u_full[:-2, 1:-1]) / h
    fwd_x = (u_full[2:, 1:-1] - u_full[1:-1, 1:-1]) / h
    back_y = (u_full[1:-1, 1:-1] - u_full[1:-1, :-2]) / h
    fwd_y = (u_full[1:-1, 2:] - u_full[1:-1, 1:-1]) / h
    conv = (c[..., 0] * np.where(c[..., 0] >= 0.0, back_x, fwd_x)
            + c[..., 1] * np.where(c[..., 1] >= 0.0, back_y, fwd_y))
    return (div_f1 - conv - F3[1:-1, 1:-1]).reshape(-1)


# --------------------------------------------------------------------------
# diagnostics
# --------------------------------------------------------------------------

def energy_diagnostics(tr):
    """(sup_t |u(t)|^2, int_0^T ||u(t)||^2 dt) recomputed from the fields."""
    h, dim, dt = tr.domain.h, tr.domain.dimension, tr.dt
    flat = tr.fields.reshape(tr.fields.shape[0], -1)
    l2 = h ** dim * np.sum(flat ** 2, axis=1)
    h1 = np.array([h1_seminorm_sq(f, h, dim) for f in tr.fields])
    weights = np.ones(len(h1))
    weights[0] = weights[-1] = 0.5
    return float(np.max(l2)), float(np.sum(weights * h1) * dt)


def _dirichlet_spectral_weights(domain):
    """Per-mode weights turning DST-I coefficients into the H^-1 norm."""
    n, h = domain.grid_n, domain.h
    k = np.arange(1, n)
    lam = (2.0 - 2.0 * np.cos(k * math.pi * h)) / h ** 2
    if domain.dimension == 1:
        return h ** 2 / (2.0 * lam)
    lam2 = lam[:, None] + lam[None, :]
    return h ** 4 / (4.0 * lam2)


def time_increment_profile(tr, delta_max):
    """Integral int_0^T |u(t+theta) - u(t)|^2_{H^-1} dt per representable theta.

    The difference is expanded in the discrete Dirichlet sine eigenbasis
    (DST-I per axis) and weighted by the inverse discrete Laplacian
    eigenvalues; the trajectory is extended by zero outside [0, T].  Returns
    (thetas, values) over theta = +-j*dt up to delta_max.
    """
    dim = tr.domain.dimension
    if dim == 1:
        inter = tr.fields[:, 1:-1]
        coeff = scipy.fft.dst(inter, type=1, axis=1)
    else:
        inter = tr.fields[:, 1:-1, 1:-1]
        coeff = scipy.fft.dstn(inter, type=1, axes=(1, 2))
    weights = _dirichlet_spectral_weights(tr.domain)
    coeff = coeff.reshape(coeff.shape[0], -1)
    wflat = weights.reshape(-1)
    steps = coeff.shape[0] - 1
    dt = tr.dt
    jmax = min(steps, int(math.floor(delta_max / dt + 1e-9)))
    tw = np.ones(steps + 1)
    tw[0] = tw[-1] = 0.5
    thetas, values = [], []
    for j in range(1, jmax + 1):
        shifted = np.zeros_like(coeff)
        shifted[: steps + 1 - j] = coeff[j:]
        d = shifted - coeff
        per_t = (d * d) @ wflat
        values.append(float(np.sum(tw * per_t) * dt))
        thetas.append(j * dt)
        shifted = np.zeros_like(coeff)
        shifted[j:] = coeff[: steps + 1 - j]
        d = shifted - coeff
        per_t = (d * d) @ wflat
        values.append(float(np.sum(tw * per_t) * dt))
        thetas.append(-j * dt)
    return np.array(thetas), np.array(values)


def time_increment_diagnostic(tr, delta):
    """sup over representable |theta| <= delta of the H^-1 increment integral."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    _, values = time_increment_profile(tr, delta)
    if len(values) == 0:
        return 0.0
    return float(np.max(values))
