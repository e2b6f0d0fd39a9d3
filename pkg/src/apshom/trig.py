"""Exact algebra of real trigonometric polynomials on R^N_y x R_tau.

A polynomial is a finite sum  u(y, tau) = sum_k c_k exp(i(w_k . y + w0_k tau))
whose frequencies live on a finitely generated module: integer combinations of
declared spatial generator vectors and temporal generator reals.  All frequency
arithmetic is integer-exact over the generators; real frequency values are only
cached for evaluation and differentiation, never compared.

Means, products and derivatives of such polynomials are exact, which is what
every downstream formula needs: the mean value is the zero-frequency
coefficient, products convolve integer coordinates, and d/dy_i multiplies by
i*w_i.  The only controlled loss is the cutoff: a product frequency whose
combined integer order exceeds the module cutoff is dropped and the discarded
L2 mass is recorded on the result.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import MismatchedModule

PRUNE_TOL = 1e-15
HERMITIAN_TOL = 1e-12


class Frequency:
    """One point of the frequency module.

    Identity (equality, hashing) is by the integer coordinate vectors only.
    The real values ``omega`` (spatial, length N) and ``omega0`` (temporal)
    are cached for evaluation and calculus but never used for comparison.
    """

    __slots__ = ("spatial", "temporal", "omega", "omega0", "_hash")

    def __init__(self, spatial, temporal, omega, omega0):
        self.spatial = tuple(int(c) for c in spatial)
        self.temporal = tuple(int(c) for c in temporal)
        self.omega = tuple(float(w) for w in omega)
        self.omega0 = float(omega0)
        self._hash = hash((self.spatial, self.temporal))

    def order(self):
        """Combined integer order sum(|k_i|); the quantity the cutoff bounds."""
        return sum(abs(c) for c in self.spatial) + sum(abs(c) for c in self.temporal)

    @property
    def is_zero(self):
        return not any(self.spatial) and not any(self.temporal)

    @property
    def has_zero_spatial(self):
        return not any(self.spatial)

    def __neg__(self):
        return Frequency(
            tuple(-c for c in self.spatial),
            tuple(-c for c in self.temporal),
            tuple(-w for w in self.omega),
            -self.omega0,
        )

    def __eq__(self, other):
        if not isinstance(other, Frequency):
            return NotImplemented
        return self.spatial == other.spatial and self.temporal == other.temporal

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Frequency(spatial={self.spatial}, temporal={self.temporal})"


class FrequencyModule:
    """Finitely generated frequency content of one problem.

    Parameters
    ----------
    spatial_generators : sequence of length-N real vectors
        Base spatial frequencies; every spatial frequency is an integer
        combination of these.
    temporal_generators : sequence of reals
        Base temporal frequencies.
    cutoff : int
        Maximum combined integer order ``sum(|k_i|)`` of any represented
        frequency.  Products drop (and report) anything beyond it.
    declared_independent : optional
        Informational records of generator pairs declared rationally
        independent.  Recorded verbatim, never verified.
    """

    __slots__ = ("spatial_generators", "temporal_generators", "cutoff",
                 "declared_independent", "_basis_cache")

    def __init__(self, spatial_generators, temporal_generators, cutoff,
                 declared_independent=()):
        sg = tuple(tuple(float(x) for x in g) for g in spatial_generators)
        tg = tuple(float(g) for g in temporal_generators)
        if not sg or not tg:
            raise ValueError("generator lists must be non-empty")
        ndim = len(sg[0])
        for g in sg:
            if len(g) != ndim:
                raise ValueError("spatial generators must share one dimension")
            if all(x == 0.0 for x in g):
                raise ValueError("zero spatial generator")
        if any(g == 0.0 for g in tg):
            raise ValueError("zero temporal generator")
        if int(cutoff) < 1:
            raise ValueError("cutoff must be a positive integer")
        self.spatial_generators = sg
        self.temporal_generators = tg
        self.cutoff = int(cutoff)
        self.declared_independent = tuple(declared_independent)
        self._basis_cache = {}

    @property
    def n_dims(self):
        """Spatial dimension N of the fast variable y."""
        return len(self.spatial_generators[0])

    @property
    def n_spatial_generators(self):
        return len(self.spatial_generators)

    @property
    def n_temporal_generators(self):
        return len(self.temporal_generators)

    def same_generators(self, other):
        return (self.spatial_generators == other.spatial_generators
                and self.temporal_generators == other.temporal_generators)

    def compatible(self, other):
        return self.same_generators(other) and self.cutoff == other.cutoff

    def with_cutoff(self, cutoff):
        return FrequencyModule(self.spatial_generators, self.temporal_generators,
                               cutoff, self.declared_independent)

    def frequency(self, spatial, temporal):
        """Build the frequency with the given integer coordinates.

        Raises ``ValueError`` if the combined order exceeds the cutoff.
        """
        spatial = tuple(int(c) for c in spatial)
        temporal = tuple(int(c) for c in temporal)
        if len(spatial) != self.n_spatial_generators:
            raise ValueError("spatial coordinate count mismatch")
        if len(temporal) != self.n_temporal_generators:
            raise ValueError("temporal coordinate count mismatch")
        order = sum(abs(c) for c in spatial) + sum(abs(c) for c in temporal)
        if order > self.cutoff:
            raise ValueError(f"frequency order {order} exceeds cutoff {self.cutoff}")
        return self._make(spatial, temporal)

    def _make(self, spatial, temporal):
        omega = [0.0] * self.n_dims
        for c, gen in zip(spatial, self.spatial_generators):
            if c:
                for d in range(self.n_dims):
                    omega[d] += c * gen[d]
        omega0 = 0.0
        for c, gen in zip(temporal, self.temporal_generators):
            if c:
                omega0 += c * gen
        return Frequency(spatial, temporal, omega, omega0)

    def zero(self):
        return self._make((0,) * self.n_spatial_generators,
                          (0,) * self.n_temporal_generators)

    def basis(self, include_zero_spatial=True, include_zero=True):
        """All frequencies with combined order <= cutoff, canonically ordered.

        ``include_zero_spatial=False`` removes every frequency whose spatial
        integer coordinates vanish (the Galerkin space of the cell problems).
        """
        key = (include_zero_spatial, include_zero)
        cached = self._basis_cache.get(key)
        if cached is not None:
            return cached
        coords = []
        total = self.n_spatial_generators + self.n_temporal_generators

        def rec(prefix, budget):
            if len(prefix) == total:
                coords.append(tuple(prefix))
                return
            for c in range(-budget, budget + 1):
                rec(prefix + [c], budget - abs(c))

        rec([], self.cutoff)
        ns = self.n_spatial_generators
        freqs = []
        for c in sorted(coords):
            spatial, temporal = c[:ns], c[ns:]
            if not include_zero_spatial and not any(spatial):
                continue
            if not include_zero and not any(c):
                continue
            freqs.append(self._make(spatial, temporal))
        freqs = tuple(freqs)
        self._basis_cache[key] = freqs
        return freqs

    def __eq__(self, other):
        if not isinstance(other, FrequencyModule):
            return NotImplemented
        return self.compatible(other)

    def __hash__(self):
        return hash((self.spatial_generators, self.temporal_generators, self.cutoff))

    def __repr__(self):
        return (f"FrequencyModule(S={self.n_spatial_generators}, "
                f"P={self.n_temporal_generators}, N={self.n_dims}, "
                f"cutoff={self.cutoff})")


class TrigPoly:
    """Immutable real-valued trigonometric polynomial over a frequency module.

    Coefficients are stored as a map Frequency -> complex with Hermitian
    symmetry ``c(-k) = conj(c(k))`` (enforced within 1e-12 at construction and
    re-symmetrized exactly), so the represented function is real.  Anything
    with magnitude below the prune threshold is discarded.

    ``dropped_mass`` carries the Besicovitch 2-norm of whatever convolution
    output did not fit under the module cutoff; it accumulates additively
    through sums as a conservative aliasing diagnostic.
    """

    __slots__ = ("module", "_coeffs", "dropped_mass")

    def __init__(self, module, coeffs, dropped_mass=0.0):
        cleaned = {}
        for k, c in coeffs.items():
            c = complex(c)
            if abs(c) >= PRUNE_TOL:
                cleaned[k] = c
        scale = max((abs(c) for c in cleaned.values()), default=0.0)
        tol = HERMITIAN_TOL * max(1.0, scale)
        sym = {}
        for k, c in cleaned.items():
            if k in sym:
                continue
            mirror = cleaned.get(-k, 0j)
            if abs(c - mirror.conjugate()) > tol:
                raise ValueError(
                    f"Hermitian symmetry violated at {k}: {c} vs conj {mirror}")
            avg = 0.5 * (c + mirror.conjugate())
            if k.is_zero:
                sym[k] = complex(avg.real, 0.0)
            else:
                sym[k] = avg
                sym[-k] = avg.conjugate()
        self.module = module
        self._coeffs = {k: c for k, c in sym.items() if abs(c) >= PRUNE_TOL}
        self.dropped_mass = float(dropped_mass)

    # ------------------------------------------------------------------ build
    @classmethod
    def zero(cls, module):
        return cls(module, {})

    @classmethod
    def constant(cls, module, value):
        return cls(module, {module.zero(): complex(float(value), 0.0)})

    @classmethod
    def cosine(cls, module, spatial, temporal, amplitude=1.0, phase=0.0):
        """amplitude * cos(w.y + w0*tau + phase) for the given coordinates."""
        k = module.frequency(spatial, temporal)
        c = 0.5 * amplitude * complex(math.cos(phase), math.sin(phase))
        if k.is_zero:
            return cls(module, {k: complex(amplitude * math.cos(phase), 0.0)})
        return cls(module, {k: c, -k: c.conjugate()})

    @classmethod
    def sine(cls, module, spatial, temporal, amplitude=1.0):
        return cls.cosine(module, spatial, temporal, amplitude, phase=-0.5 * math.pi)

    @classmethod
    def from_records(cls, module, records):
        """Build from {spatial_coords, temporal_coords, re, im} records.

        A record for k without a matching record for -k is Hermitian-completed
        automatically; if both are present they must be conjugate.
        """
        coeffs = {}
        for rec in records:
            k = module.frequency(rec["spatial_coords"], rec["temporal_coords"])
            coeffs[k] = coeffs.get(k, 0j) + complex(float(rec["re"]), float(rec["im"]))
        for k in list(coeffs):
            if -k not in coeffs:
                coeffs[-k] = coeffs[k].conjugate()
        return cls(module, coeffs)

    def to_records(self):
        recs = []
        for k in sorted(self._coeffs, key=lambda f: (f.order(), f.spatial, f.temporal)):
            c = self._coeffs[k]
            recs.append({"spatial_coords": list(k.spatial),
                         "temporal_coords": list(k.temporal),
                         "re": c.real, "im": c.imag})
        return recs

    # ------------------------------------------------------------------ views
    @property
    def coeffs(self):
        return dict(self._coeffs)

    def coeff(self, k):
        return self._coeffs.get(k, 0j)

    def frequencies(self):
        return tuple(self._coeffs)

    @property
    def is_zero(self):
        return not self._coeffs

    def max_order(self):
        return max((k.order() for k in self._coeffs), default=0)

    def l1_coeff_bound(self):
        """sum|c_k|, a rigorous bound on the sup norm of the function."""
        return sum(abs(c) for c in self._coeffs.values())

    # ------------------------------------------------------------- arithmetic
    def _require_same_module(self, other):
        if not self.module.compatible(other.module):
            raise MismatchedModule(
                f"operands over different modules: {self.module} vs {other.module}")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = TrigPoly.constant(self.module, other)
        if not isinstance(other, TrigPoly):
            return NotImplemented
        self._require_same_module(other)
        out = dict(self._coeffs)
        for k, c in other._coeffs.items():
            out[k] = out.get(k, 0j) + c
        return TrigPoly(self.module, out,
                        dropped_mass=self.dropped_mass + other.dropped_mass)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly(self.module, {k: -c for k, c in self._coeffs.items()},
                        dropped_mass=self.dropped_mass)

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = TrigPoly.constant(self.module, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return TrigPoly(
                self.module,
                {k: other * c for k, c in self._coeffs.items()},
                dropped_mass=abs(float(other)) * self.dropped_mass)
        if isinstance(other, TrigPoly):
            return tp_mul(self, other)
        return NotImplemented

    __rmul__ = __mul__

    # ------------------------------------------------------------------ decor
    def __repr__(self):
        return (f"TrigPoly({len(self._coeffs)} coeffs, "
                f"max_order={self.max_order()}, module={self.module})")

    # -------------------------------------------------------------- analysis
    def mean_value(self):
        """Mean value M(u): the coefficient at the zero frequency."""
        return self._coeffs.get(self.module.zero(), 0j).real

    def spatial_mean(self):
        """Average over the fast spatial variable; a polynomial in tau only.

        Keeps exactly the coefficients whose spatial integer coordinates
        vanish (the module's declared notion of zero spatial frequency).
        """
        kept = {k: c for k, c in self._coeffs.items() if k.has_zero_spatial}
        return TrigPoly(self.module, kept)

    def eval(self, y, tau):
        """Point value at y (length-N sequence) and tau (real)."""
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape[0] != self.module.n_dims:
            raise ValueError("point dimension mismatch")
        if not (np.all(np.isfinite(y)) and math.isfinite(tau)):
            raise ValueError("evaluation point must be finite")
        total = 0j
        for k, c in self._coeffs.items():
            phase = float(np.dot(k.omega, y)) + k.omega0 * tau
            total += c * complex(math.cos(phase), math.sin(phase))
        scale = max(1.0, self.l1_coeff_bound())
        assert abs(total.imag) <= 1e-12 * scale, "imaginary residue too large"
        return total.real

    def eval_many(self, Y, tau):
        """Vectorized evaluation at rows of Y (shape (n, N)) and scalar tau."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if not self._coeffs:
            return np.zeros(Y.shape[0])
        ks = list(self._coeffs)
        omega = np.array([k.omega for k in ks])           # (K, N)
        omega0 = np.array([k.omega0 for k in ks])         # (K,)
        c = np.array([self._coeffs[k] for k in ks])       # (K,)
        phase = Y @ omega.T + tau * omega0                # (n, K)
        return (np.exp(1j * phase) @ c).real

    def eval_points(self, pts):
        """Vectorized evaluation at rows (y_1..y_N, tau) of shape (n, N+1)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if not self._coeffs:
            return np.zeros(pts.shape[0])
        n = self.module.n_dims
        ks = list(self._coeffs)
        omega = np.array([k.omega for k in ks])
        omega0 = np.array([k.omega0 for k in ks])
        c = np.array([self._coeffs[k] for k in ks])
        phase = pts[:, :n] @ omega.T + np.outer(pts[:, n], omega0)
        return (np.exp(1j * phase) @ c).real

    def evaluator(self, Y):
        """Precompute the spatial phase table for repeated tau evaluation."""
        return _FrozenEvaluator(self, Y)

    def besicovitch_norm(self, p=2.0, box_radius=100.0, mc_samples=200_000,
                         seed=0):
        """Besicovitch seminorm ||u||_p = M(|u|^p)^(1/p).

        For p = 2 this is exact (Parseval over the mean value).  For other p
        it is a seeded Monte Carlo quadrature estimate of the box average over
        [-box_radius, box_radius]^(N+1); the box size is part of the estimate's
        definition and is echoed in the docstring rather than returned.
        """
        if p < 1:
            raise ValueError("p must be >= 1")
        if p == 2.0:
            return math.sqrt(sum(abs(c) ** 2 for c in self._coeffs.values()))
        if self.is_zero:
            return 0.0
        rng = np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), 0]))
        n = self.module.n_dims
        pts = rng.uniform(-box_radius, box_radius, size=(mc_samples, n + 1))
        vals = self.eval_points(pts)
        return float(np.mean(np.abs(vals) ** p) ** (1.0 / p))

    def differentiate(self, axis):
        """Exact derivative along a spatial axis (0-based int) or "tau".

        Multiplies each coefficient by i*omega_axis; Hermitian symmetry is
        preserved and the mean of the result is zero.
        """
        if axis == "tau" or axis == "temporal":
            out = {k: 1j * k.omega0 * c for k, c in self._coeffs.items()}
        else:
            axis = int(axis)
            if not 0 <= axis < self.module.n_dims:
                raise ValueError(f"axis {axis} out of range")
            out = {k: 1j * k.omega[axis] * c for k, c in self._coeffs.items()}
        return TrigPoly(self.module, out, dropped_mass=self.dropped_mass)

    def gradient(self):
        return tuple(self.differentiate(i) for i in range(self.module.n_dims))


class _FrozenEvaluator:
    """Phase table for evaluating one polynomial at fixed points, many taus."""

    __slots__ = ("n_points", "_expix", "_c", "_omega0", "_static", "_cached")

    def __init__(self, poly, Y):
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        self.n_points = Y.shape[0]
        self._cached = None
        ks = list(poly._coeffs)
        if not ks:
            self._expix = None
            self._static = True
            self._cached = np.zeros(self.n_points)
            return
        omega = np.array([k.omega for k in ks])
        self._omega0 = np.array([k.omega0 for k in ks])
        self._c = np.array([poly._coeffs[k] for k in ks])
        self._expix = np.exp(1j * (Y @ omega.T))
        self._static = not bool(np.any(self._omega0 != 0.0))

    @property
    def time_dependent(self):
        return not self._static

    def at_tau(self, tau):
        if self._static:
            if self._cached is None:
                self._cached = (self._expix @ self._c).real
            return self._cached
        return (self._expix @ (self._c * np.exp(1j * tau * self._omega0))).real


# ---------------------------------------------------------------------- ops

def tp_mul(u, v):
    """Product of two polynomials by exact frequency convolution.

    Output frequencies whose combined integer order exceeds the module cutoff
    are dropped; the Besicovitch 2-norm of the dropped part is recorded as
    ``dropped_mass`` on the result.
    """
    u._require_same_module(v)
    module = u.module
    cutoff = module.cutoff
    out = {}
    dropped = {}
    for k1, c1 in u._coeffs.items():
        for k2, c2 in v._coeffs.items():
            spatial = tuple(a + b for a, b in zip(k1.spatial, k2.spatial))
            temporal = tuple(a + b for a, b in zip(k1.temporal, k2.temporal))
            order = sum(abs(c) for c in spatial) + sum(abs(c) for c in temporal)
            if order > cutoff:
                key = (spatial, temporal)
                dropped[key] = dropped.get(key, 0j) + c1 * c2
                continue
            k = module._make(spatial, temporal)
            out[k] = out.get(k, 0j) + c1 * c2
    mass = math.sqrt(sum(abs(c) ** 2 for c in dropped.values()))
    return TrigPoly(module, out,
                    dropped_mass=mass + u.dropped_mass * v.l1_coeff_bound()
                    + v.dropped_mass * u.l1_coeff_bound())


def mean_value(u):
    return u.mean_value()


def spatial_mean(u):
    return u.spatial_mean()


def tp_eval(u, y, tau):
    return u.eval(y, tau)


def besicovitch_norm(u, p=2.0, **kw):
    return u.besicovitch_norm(p, **kw)


def differentiate(u, axis):
    return u.differentiate(axis)


def rebase(poly, module):
    """Re-express a polynomial over a module with the same generators.

    Used to move between cutoff levels (for exact residual algebra); every
    stored frequency must fit under the target cutoff.
    """
    if not poly.module.same_generators(module):
        raise MismatchedModule("rebase requires identical generators")
    if poly.module.cutoff == module.cutoff:
        return poly
    out = {}
    for k, c in poly.coeffs.items():
        out[module.frequency(k.spatial, k.temporal)] = c
    return TrigPoly(module, out, dropped_mass=poly.dropped_mass)


def mean_of_product(u, v):
    """Exact M(u*v) without forming the product (immune to cutoff loss)."""
    if not u.module.same_generators(v.module):
        raise MismatchedModule("mean_of_product requires identical generators")
    small, large = (u, v) if len(u._coeffs) <= len(v._coeffs) else (v, u)
    total = 0j
    for k, c in small._coeffs.items():
        other = large._coeffs.get(-k)
        if other is not None:
            total += c * other
    assert abs(total.imag) <= 1e-12 * max(1.0, abs(total))
    return total.real


def mean_of_triple(a, u, v):
    """Exact M(a*u*v) by double convolution lookup (no cutoff loss)."""
    if not (a.module.same_generators(u.module)
            and a.module.same_generators(v.module)):
        raise MismatchedModule("mean_of_triple requires identical generators")
    total = 0j
    for ka, ca in a._coeffs.items():
        for ku, cu in u._coeffs.items():
            spatial = tuple(-(x + y) for x, y in zip(ka.spatial, ku.spatial))
            temporal = tuple(-(x + y) for x, y in zip(ka.temporal, ku.temporal))
            # frequency identity is coordinate-based; dummy reals suffice here
            cv = v._coeffs.get(
                Frequency(spatial, temporal, (0.0,) * len(ka.omega), 0.0))
            if cv is not None:
                total += ca * cu * cv
    assert abs(total.imag) <= 1e-10 * max(1.0, abs(total))
    return total.real


def empirical_mean(u, R, nodes_per_radian=8):
    """Box-average oracle for the mean value.

    Computes the average of u over [-R, R]^N x [-R, R] by composite Simpson
    quadrature, axis by axis (the tensor structure of each harmonic makes the
    per-axis reduction exact linear algebra, so this equals the full tensor
    quadrature).  Agreement with ``mean_value`` is O(1/R).
    """
    if R <= 0:
        raise ValueError("R must be positive")
    total = 0.0
    for k, c in u._coeffs.items():
        factor = 1.0
        for w in list(k.omega) + [k.omega0]:
            factor *= _simpson_box_average(w, R, nodes_per_radian)
            if factor == 0.0:
                break
        total += (c * factor).real
    return total


@lru_cache(maxsize=4096)
def _simpson_box_average(omega, R, nodes_per_radian):
    """(1/2R) * integral of exp(i*omega*z) over [-R, R], composite Simpson."""
    if omega == 0.0:
        return 1.0
    n = max(64, int(math.ceil(nodes_per_radian * abs(omega) * R)))
    if n % 2:
        n += 1
    z = np.linspace(-R, R, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    h = 2.0 * R / n
    integral = (h / 3.0) * np.sum(w * np.exp(1j * omega * z))
    value = integral / (2.0 * R)
    assert abs(value.imag) < 1e-9
    return value.real
