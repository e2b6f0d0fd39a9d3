"""Space-time cell problems on the truncated frequency module.

Two auxiliary problems are solved in the zero-spatial-mean trig space:

    d chi_j / dtau - div_y(a (D_y chi_j + e_j)) = 0        (gradient corrector)
    d w / dtau    - div_y(a D_y w)             = gamma_i   (reaction responses)

The Galerkin basis is every module frequency with nonzero spatial coordinates
and combined order <= cutoff.  On that basis the time derivative is the exact
diagonal operator i*omega0 and the elliptic pairings are exact means, so the
assembled system is the exact projection of the continuous operator; the only
approximation is the cutoff itself.

A real-space backend (`grid_cell_oracle`) solves the same problems for purely
periodic coefficients by implicit-Euler time stepping and period-map fixed
point iteration; it exists as an independent cross-check of the spectral
route, not as a primary solver (genuinely quasi-periodic time has no period
to step over).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import (AssumptionViolation, NoConvergence, SingularSystem,
                     TruncationOverflow)
from .trig import TrigPoly, rebase, tp_mul

DIRECT_THRESHOLD = 4000
KRYLOV_TOL = 1e-12
RCOND_FLOOR = 1e-14
SELF_CONV_DROP_LIMIT = 0.10
TWO_PI = 2.0 * math.pi


class CoefficientField:
    """The oscillating diffusion matrix a(y, tau) with ellipticity constant.

    Entries are trig polynomials over a shared module; `ellipticity` is the
    declared constant Lambda with a(y,tau) zeta . zeta >= Lambda |zeta|^2 and
    |a_ij| < 1/Lambda, both checked by sampling in `validate`.
    """

    def __init__(self, entries, ellipticity):
        entries = tuple(tuple(row) for row in entries)
        n = len(entries)
        for row in entries:
            if len(row) != n:
                raise ValueError("coefficient matrix must be square")
        module = entries[0][0].module
        if module.n_dims != n:
            raise ValueError("matrix size must equal the spatial dimension")
        for row in entries:
            for p in row:
                if not p.module.compatible(module):
                    raise ValueError("all entries must share one module")
        if ellipticity <= 0:
            raise ValueError("ellipticity constant must be positive")
        self.entries = entries
        self.ellipticity = float(ellipticity)
        self.module = module

    @property
    def n_dims(self):
        return len(self.entries)

    def entry(self, i, j):
        return self.entries[i][j]

    def max_order(self):
        return max(p.max_order() for row in self.entries for p in row)

    def is_time_dependent(self):
        return any(k.omega0 != 0.0
                   for row in self.entries for p in row
                   for k in p.frequencies())

    def is_diagonal(self):
        return all(self.entries[i][j].is_zero
                   for i in range(self.n_dims)
                   for j in range(self.n_dims) if i != j)

    def eval_matrix(self, y, tau):
        n = self.n_dims
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = self.entries[i][j].eval(y, tau)
        return out

    def is_periodic(self, tol=1e-9):
        """True when every frequency is an integer multiple of 2*pi per axis."""
        for row in self.entries:
            for p in row:
                for k in p.frequencies():
                    for w in list(k.omega) + [k.omega0]:
                        if abs(w / TWO_PI - round(w / TWO_PI)) > tol:
                            return False
        return True

    def validate(self, n_samples=1000, seed=7, box=20.0):
        """Sampled uniform ellipticity and boundedness (assumption screen)."""
        rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
        n = self.n_dims
        lam = self.ellipticity
        pts = rng.uniform(-box, box, size=(n_samples, n + 1))
        zetas = rng.standard_normal((n_samples, n))
        zetas /= np.linalg.norm(zetas, axis=1, keepdims=True)
        for i in range(n):
            for j in range(n):
                vals = self.entries[i][j].eval_points(pts)
                bad = np.abs(vals) >= 1.0 / lam
                if np.any(bad):
                    s = int(np.argmax(bad))
                    raise AssumptionViolation(
                        "A1", f"|a_{i}{j}| = {abs(vals[s]):.6g} >= 1/Lambda = "
                        f"{1.0 / lam:.6g} at sampled point")
        for s in range(n_samples):
            mat = self.eval_matrix(pts[s, :n], pts[s, n])
            z = zetas[s]
            quad = float(z @ mat @ z)
            if quad < lam * float(z @ z) - 1e-12:
                raise AssumptionViolation(
                    "A1", f"a zeta.zeta = {quad:.6g} < Lambda = {lam:.6g} "
                    f"at sampled point {pts[s]}")
        return True

    @classmethod
    def identity(cls, module, ellipticity=1.0):
        n = module.n_dims
        one = TrigPoly.constant(module, 1.0)
        zero = TrigPoly.zero(module)
        rows = tuple(tuple(one if i == j else zero for j in range(n))
                     for i in range(n))
        return cls(rows, ellipticity)

    @classmethod
    def diagonal(cls, polys, ellipticity):
        polys = tuple(polys)
        module = polys[0].module
        zero = TrigPoly.zero(module)
        n = len(polys)
        rows = tuple(tuple(polys[i] if i == j else zero for j in range(n))
                     for i in range(n))
        return cls(rows, ellipticity)


@dataclass
class CellSolution:
    """Both correctors with their solve diagnostics.

    `unit_responses[i]` solves the reaction cell problem with right side
    gamma_i; `w1(r)` recombines them with the profile values at r (separable
    right side), caching the result per r.
    """

    chi: tuple
    unit_responses: tuple
    profiles: tuple
    residuals: dict
    galerkin_dim: int
    w1_table: dict = field(default_factory=dict)

    def w1(self, r):
        r = float(r)
        if r not in self.w1_table:
            module = self.chi[0].module
            acc = TrigPoly.zero(module)
            for w, s in zip(self.unit_responses, self.profiles):
                acc = acc + float(s(r)) * w
            self.w1_table[r] = acc
        return self.w1_table[r]

    def manifest(self):
        return {
            "galerkin_dim": self.galerkin_dim,
            "residuals": dict(self.residuals),
            "chi": [c.to_records() for c in self.chi],
            "unit_responses": [w.to_records() for w in self.unit_responses],
        }


class GalerkinCellSolver:
    """Assembled Galerkin operator for one coefficient field and module.

    The linear system is solved directly (LU) up to `DIRECT_THRESHOLD`
    unknowns and by preconditioned GMRES beyond; `method` forces a path for
    cross-checking.  A reciprocal condition estimate below `RCOND_FLOOR`
    raises `SingularSystem` instead of regularizing: small divisors of a
    quasi-periodic module are reported, never damped.
    """

    def __init__(self, a, module):
        if not a.module.same_generators(module):
            raise ValueError("coefficient field and module generators differ")
        if a.max_order() >= module.cutoff:
            raise ValueError(
                f"coefficient frequencies (order {a.max_order()}) must fit "
                f"strictly inside the cutoff {module.cutoff}")
        self._check_self_convolution(a, module)
        self.a = a
        self.module = module
        self.basis = module.with_cutoff(module.cutoff).basis(
            include_zero_spatial=False)
        self.dim = len(self.basis)
        self._coord_index = {(k.spatial, k.temporal): i
                             for i, k in enumerate(self.basis)}
        self._assemble()

    @staticmethod
    def _check_self_convolution(a, module):
        for i in range(a.n_dims):
            for j in range(a.n_dims):
                p = a.entry(i, j)
                if p.is_zero:
                    continue
                prod = tp_mul(rebase(p, module), rebase(p, module))
                kept = prod.besicovitch_norm(2)
                total = math.hypot(kept, prod.dropped_mass)
                if total > 0 and prod.dropped_mass / total > SELF_CONV_DROP_LIMIT:
                    raise TruncationOverflow(
                        f"self-convolution of a[{i}][{j}] drops "
                        f"{prod.dropped_mass / total:.1%} of its mass under "
                        f"cutoff {module.cutoff}")

    def _assemble(self):
        n = self.a.n_dims
        dim = self.dim
        self.omega = np.array([k.omega for k in self.basis])      # (dim, N)
        self.omega0 = np.array([k.omega0 for k in self.basis])    # (dim,)
        M = np.zeros((dim, dim), dtype=complex)
        M[np.diag_indices(dim)] = 1j * self.omega0
        cols = np.arange(dim)
        for p in range(n):
            for l in range(n):
                poly = self.a.entry(p, l)
                for q, aq in poly.coeffs.items():
                    rows = np.empty(dim, dtype=int)
                    for j, kj in enumerate(self.basis):
                        key = (tuple(x + y for x, y in zip(kj.spatial, q.spatial)),
                               tuple(x + y for x, y in zip(kj.temporal, q.temporal)))
                        rows[j] = self._coord_index.get(key, -1)
                    mask = rows >= 0
                    r = rows[mask]
                    c = cols[mask]
                    M[r, c] += self.omega[r, p] * aq * self.omega[c, l]
        self._matrix = M
        if dim <= DIRECT_THRESHOLD:
            try:
                self._lu = scipy.linalg.lu_factor(M)
            except scipy.linalg.LinAlgError as exc:
                raise SingularSystem(f"LU factorization failed: {exc}") from exc
            anorm = np.linalg.norm(M, 1)
            rcond, info = scipy.linalg.lapack.zgecon(self._lu[0], anorm)
            if info != 0 or rcond < RCOND_FLOOR:
                raise SingularSystem(
                    f"Galerkin matrix numerically singular "
                    f"(rcond estimate {rcond:.3e})", rcond=float(rcond))
            self._rcond = float(rcond)
        else:
            self._lu = None
            self._rcond = None
        diag = M[np.diag_indices(dim)].copy()
        diag[np.abs(diag) < 1e-300] = 1.0
        self._jacobi = diag

    def solve_vector(self, rhs, method=None):
        """Solve the assembled system for a raw coefficient vector."""
        if method is None:
            method = "direct" if self._lu is not None else "iterative"
        if method == "direct":
            if self._lu is None:
                raise ValueError("direct path unavailable above the size threshold")
            x = scipy.linalg.lu_solve(self._lu, rhs)
        elif method == "iterative":
            op = scipy.sparse.linalg.LinearOperator(
                (self.dim, self.dim), matvec=lambda v: self._matrix @ v,
                dtype=complex)
            pre = scipy.sparse.linalg.LinearOperator(
                (self.dim, self.dim), matvec=lambda v: v / self._jacobi,
                dtype=complex)
            x, info = scipy.sparse.linalg.gmres(
                op, rhs, rtol=KRYLOV_TOL, atol=0.0, restart=200,
                maxiter=50 * max(1, self.dim // 200), M=pre)
            if info != 0:
                raise SingularSystem(
                    f"GMRES failed to reach {KRYLOV_TOL} (info={info})",
                    rcond=self._rcond)
        else:
            raise ValueError(f"unknown method {method!r}")
        scale = max(1.0, float(np.max(np.abs(rhs))) if len(rhs) else 1.0)
        defect = float(np.max(np.abs(self._matrix @ x - rhs))) if len(rhs) else 0.0
        if not np.all(np.isfinite(x)) or defect > 1e-8 * scale:
            raise SingularSystem(
                f"solution residual {defect:.3e} too large; system is "
                f"numerically singular (rcond {self._rcond})", rcond=self._rcond)
        return x

    def _vector_to_poly(self, x):
        coeffs = {}
        for i, k in enumerate(self.basis):
            coeffs[k] = x[i]
        # enforce exact Hermitian pairing against LU roundoff
        sym = {}
        for k, c in coeffs.items():
            mirror = coeffs.get(-k, 0j)
            sym[k] = 0.5 * (c + mirror.conjugate())
        return TrigPoly(self.module, sym)

    def solve_chi(self, method=None):
        """Gradient correctors chi_j, j = 1..N, in the zero-mean trig space."""
        n = self.a.n_dims
        out = []
        for j in range(n):
            rhs = np.zeros(self.dim, dtype=complex)
            for i, k in enumerate(self.basis):
                val = 0j
                for p in range(n):
                    c = self.a.entry(p, j).coeff(k)
                    if c:
                        val += 1j * k.omega[p] * c
                rhs[i] = val
            out.append(self._vector_to_poly(self.solve_vector(rhs, method)))
        return tuple(out)

    def solve_unit_response(self, gamma, method=None):
        """Response to one separable right-side factor gamma."""
        if gamma.max_order() > self.module.cutoff:
            raise ValueError("right side exceeds the module cutoff")
        rhs = np.zeros(self.dim, dtype=complex)
        missing = []
        for k, c in gamma.coeffs.items():
            idx = self._coord_index.get((k.spatial, k.temporal))
            if idx is None:
                missing.append(k)
            else:
                rhs[idx] = c
        if missing:
            raise ValueError(
                f"right side has frequencies outside the Galerkin basis: "
                f"{missing[:3]}")
        return self._vector_to_poly(self.solve_vector(rhs, method))


def solve_chi(a, module, method=None):
    return GalerkinCellSolver(a, module).solve_chi(method)


def solve_w1(a, g, r, module, method=None):
    """w1(., ., r) for a separable reaction term (responses weighted by sigma_i(r))."""
    solver = GalerkinCellSolver(a, module)
    acc = TrigPoly.zero(module)
    for gamma, s in g.terms:
        if gamma.is_zero:
            continue
        acc = acc + float(s(r)) * solver.solve_unit_response(
            rebase(gamma, module), method)
    return acc


def solve_cell(a, g, module, method=None):
    """Solve both cell problems once and package them with residuals."""
    solver = GalerkinCellSolver(a, module)
    chi = solver.solve_chi(method)
    residuals = {}
    for j, c in enumerate(chi):
        residuals[f"chi_{j}"] = cell_residual(a, c, j)
    units, profiles = [], []
    for i, (gamma, s) in enumerate(g.terms):
        if gamma.is_zero:
            continue
        w = solver.solve_unit_response(rebase(gamma, module), method)
        residuals[f"w_unit_{i}"] = cell_residual(a, w, rebase(gamma, module))
        units.append(w)
        profiles.append(s)
    return CellSolution(chi=chi, unit_responses=tuple(units),
                        profiles=tuple(profiles), residuals=residuals,
                        galerkin_dim=solver.dim)


def cell_residual(a, solution, right_side):
    """Max weak-form defect of a cell solve over every basis test frequency.

    `right_side` is either an int j (the chi_j problem, right side
    div_y(a e_j)) or a TrigPoly gamma (the reaction problem).  All pairings
    are exact trig-polynomial means: the operator is re-applied in a module
    with enlarged cutoff so no convolution output is lost, then the defect is
    read off at the original basis frequencies.
    """
    module = solution.module
    ext = module.with_cutoff(module.cutoff + a.max_order() + 1)
    u = rebase(solution, ext)
    n = a.n_dims
    a_ext = [[rebase(a.entry(i, j), ext) for j in range(n)] for i in range(n)]
    grads = u.gradient()
    op = u.differentiate("tau")
    for p in range(n):
        flux = TrigPoly.zero(ext)
        for l in range(n):
            flux = flux + tp_mul(a_ext[p][l], grads[l])
        if isinstance(right_side, int):
            flux = flux + a_ext[p][right_side]
        op = op - flux.differentiate(p)
    if not isinstance(right_side, int):
        op = op - rebase(right_side, ext)
    worst = 0.0
    for k in module.basis(include_zero_spatial=False):
        c = op.coeff(ext.frequency(k.spatial, k.temporal))
        worst = max(worst, abs(c))
    return worst


# --------------------------------------------------------------------------
# periodic real-space oracle
# --------------------------------------------------------------------------

@dataclass
class GridCellSolution:
    """Periodic-in-time steady cell solution on a uniform grid.

    `fields[j]` has shape (time_steps + 1, *grid) and holds one full period
    of the direction-j corrector after the period map converged; values are
    normalized to zero spatial mean at every time level.
    """

    resolution: int
    time_steps: int
    h: float
    dtau: float
    fields: tuple
    iterations: int
    period_defect: float
    a: object

    def effective_tensor(self):
        """Discrete mean of a (I + D chi) over cell and period (midpoint fluxes)."""
        n = self.a.n_dims
        b = np.zeros((n, n))
        for j in range(n):
            b[:, j] = _oracle_column_mean(self.a, self.fields[j], j,
                                          self.resolution, self.time_steps,
                                          self.h, self.dtau)
        return b


def grid_cell_oracle(a, resolution, time_steps=None, tol=1e-11,
                     max_periods=10_000, initial=None, seed=0,
                     directions=None):
    """Independent periodic-case cell solve by implicit Euler time stepping.

    Requires every coefficient frequency to be an integer multiple of 2*pi on
    each axis (unit cell (0,1)^N x (0,1)).  The one-period evolution map is
    iterated to its fixed point on the zero-spatial-mean subspace (the mean is
    projected out after each step; the continuous problem preserves it and the
    projection pins the additive constant that the periodic operator ignores).

    `initial` may be None (zeros) or "random" (seeded standard normal), used
    by the uniqueness cross-check.
    """
    if not a.is_periodic():
        raise ValueError("grid oracle requires purely periodic coefficients")
    n = a.n_dims
    if n > 2:
        raise ValueError("grid oracle supports N = 1 or 2")
    if n == 2 and not a.is_diagonal():
        raise NotImplementedError(
            "grid oracle supports off-diagonal coefficients only in 1D")
    resolution = int(resolution)
    if time_steps is None:
        time_steps = max(32, resolution // 2)
    time_steps = int(time_steps)
    h = 1.0 / resolution
    dtau = 1.0 / time_steps
    if directions is None:
        directions = range(n)

    factor_cache, forcing_cache = _oracle_operators(a, resolution, time_steps)
    rng = np.random.Generator(np.random.Philox(key=[seed, 1]))
    shape = (resolution,) * n
    fields = [None] * n
    iters_total = 0
    defect_final = 0.0
    for j in directions:
        if initial == "random":
            u = rng.standard_normal(shape).reshape(-1)
        else:
            u = np.zeros(resolution ** n)
        u -= u.mean()
        defect = math.inf
        iters = 0
        while defect > tol:
            if iters >= max_periods:
                raise NoConvergence(
                    f"period map did not converge in {max_periods} periods "
                    f"(defect {defect:.3e})")
            new = _march_period(u, factor_cache, forcing_cache[j], dtau)
            defect = math.sqrt(h ** n * float(np.sum((new - u) ** 2)))
            u = new
            iters += 1
        iters_total += iters
        defect_final = max(defect_final, defect)
        # one more period, recording every level
        levels = np.empty((time_steps + 1, resolution ** n))
        levels[0] = u
        for m in range(1, time_steps + 1):
            rhs = levels[m - 1] + dtau * forcing_cache[j][m - 1]
            v = factor_cache[m - 1](rhs)
            v -= v.mean()
            levels[m] = v
        fields[j] = levels.reshape((time_steps + 1,) + shape)
    return GridCellSolution(resolution=resolution, time_steps=time_steps,
                            h=h, dtau=dtau, fields=tuple(fields),
                            iterations=iters_total,
                            period_defect=defect_final, a=a)


def _march_period(u, factor_cache, forcing, dtau):
    for m in range(len(factor_cache)):
        rhs = u + dtau * forcing[m]
        u = factor_cache[m](rhs)
        u = u - u.mean()
    return u


def _oracle_operators(a, resolution, time_steps):
    """Per-step implicit solves and analytic forcing arrays for one period."""
    n = a.n_dims
    h = 1.0 / resolution
    dtau = 1.0 / time_steps
    taus = [(m + 1) * dtau for m in range(time_steps)]

    if n == 1:
        mids = (np.arange(resolution) + 0.5) * h
        Ymid = mids.reshape(-1, 1)
        a_eval = a.entry(0, 0).evaluator(Ymid)
    else:
        idx = (np.arange(resolution) + 0.5) * h
        nodes = np.arange(resolution) * h
        X_mid_x = np.stack(np.meshgrid(idx, nodes, indexing="ij"),
                           axis=-1).reshape(-1, 2)
        X_mid_y = np.stack(np.meshgrid(nodes, idx, indexing="ij"),
                           axis=-1).reshape(-1, 2)
        ax_eval = a.entry(0, 0).evaluator(X_mid_x)
        ay_eval = a.entry(1, 1).evaluator(X_mid_y)

    div_polys = []
    for j in range(n):
        div = a.entry(0, j).differentiate(0)
        for p in range(1, n):
            div = div + a.entry(p, j).differentiate(p)
        div_polys.append(div)
    if n == 1:
        node_pts = (np.arange(resolution) * h).reshape(-1, 1)
    else:
        g = np.arange(resolution) * h
        node_pts = np.stack(np.meshgrid(g, g, indexing="ij"),
                            axis=-1).reshape(-1, 2)
    forcing_evals = [p.evaluator(node_pts) for p in div_polys]

    factor_cache = []
    forcing_cache = [np.empty((time_steps, resolution ** n)) for _ in range(n)]
    eye = scipy.sparse.identity(resolution ** n, format="csc")
    for m, tau in enumerate(taus):
        if n == 1:
            amid = a_eval.at_tau(tau)
            L = _periodic_flux_1d(amid, h)
        else:
            ax = ax_eval.at_tau(tau).reshape(resolution, resolution)
            ay = ay_eval.at_tau(tau).reshape(resolution, resolution)
            L = _periodic_flux_2d_diag(ax, ay, h)
        lu = scipy.sparse.linalg.splu((eye - dtau * L).tocsc())
        factor_cache.append(lu.solve)
        for j in range(n):
            forcing_cache[j][m] = forcing_evals[j].at_tau(tau)
    return factor_cache, forcing_cache


def _periodic_flux_1d(amid, h):
    """Conservative d/dy(a d/dy .) on a periodic grid; a given at midpoints."""
    nn = len(amid)
    i = np.arange(nn)
    right = amid / h ** 2                 # couples u_{i+1}
    left = np.roll(amid, 1) / h ** 2      # a_{i-1/2}, couples u_{i-1}
    diag = -(right + left)
    rows = np.concatenate([i, i, i])
    cols = np.concatenate([i, (i + 1) % nn, (i - 1) % nn])
    data = np.concatenate([diag, right, left])
    return scipy.sparse.csr_matrix((data, (rows, cols)), shape=(nn, nn))


def _periodic_flux_2d_diag(ax_mid, ay_mid, h):
    """5-point conservative operator, diagonal a, periodic; midpoint coefficients.

    ax_mid[i, j] sits at ((i+1/2)h, jh), ay_mid[i, j] at (ih, (j+1/2)h).
    """
    nn = ax_mid.shape[0]
    size = nn * nn
    I, J = np.meshgrid(np.arange(nn), np.arange(nn), indexing="ij")
    flat = (I * nn + J).reshape(-1)

    def shift(di, dj):
        return (((I + di) % nn) * nn + ((J + dj) % nn)).reshape(-1)

    ax_r = (ax_mid / h ** 2).reshape(-1)
    ax_l = (np.roll(ax_mid, 1, axis=0) / h ** 2).reshape(-1)
    ay_u = (ay_mid / h ** 2).reshape(-1)
    ay_d = (np.roll(ay_mid, 1, axis=1) / h ** 2).reshape(-1)
    rows = np.concatenate([flat] * 5)
    cols = np.concatenate([flat, shift(1, 0), shift(-1, 0),
                           shift(0, 1), shift(0, -1)])
    data = np.concatenate([-(ax_r + ax_l + ay_u + ay_d),
                           ax_r, ax_l, ay_u, ay_d])
    return scipy.sparse.csr_matrix((data, (rows, cols)), shape=(size, size))


def _oracle_column_mean(a, levels, j, resolution, time_steps, h, dtau):
    """Column j of the discrete effective tensor from one oracle solution."""
    n = a.n_dims
    out = np.zeros(n)
    if n == 1:
        mids = ((np.arange(resolution) + 0.5) * h).reshape(-1, 1)
        ev = a.entry(0, 0).evaluator(mids)
        acc = 0.0
        for m in range(1, time_steps + 1):
            u = levels[m]
            du = (np.roll(u, -1) - u) / h
            acc += float(np.mean(ev.at_tau(m * dtau) * (1.0 + du)))
        out[0] = acc / time_steps
        return out
    idxm = (np.arange(resolution) + 0.5) * h
    nodes = np.arange(resolution) * h
    Xx = np.stack(np.meshgrid(idxm, nodes, indexing="ij"), axis=-1).reshape(-1, 2)
    Xy = np.stack(np.meshgrid(nodes, idxm, indexing="ij"), axis=-1).reshape(-1, 2)
    evx = a.entry(0, 0).evaluator(Xx)
    evy = a.entry(1, 1).evaluator(Xy)
    accx = accy = 0.0
    for m in range(1, time_steps + 1):
        u = levels[m]
        dux = (np.roll(u, -1, axis=0) - u) / h
        duy = (np.roll(u, -1, axis=1) - u) / h
        tau = m * dtau
        accx += float(np.mean(evx.at_tau(tau).reshape(u.shape)
                              * (dux + (1.0 if j == 0 else 0.0))))
        accy += float(np.mean(evy.at_tau(tau).reshape(u.shape)
                              * (duy + (1.0 if j == 1 else 0.0))))
    out[0] = accx / time_steps
    out[1] = accy / time_steps
    return out
