"""Scalar response profiles sigma(u) for reaction and noise terms.

Every built-in kind vanishes at zero and has a bounded, closed-form
derivative; analytic derivatives are used throughout so that the effective
drift tables stay free of differencing noise.  The ``lipschitz`` value is the
exact sup of |sigma'|.

``decay_condition`` records whether the kind also satisfies the stronger
derivative-difference bound |s'(u1)-s'(u2)| <= C|u1-u2|/(1+|u1|+|u2|): true
for all built-ins (their second derivatives decay at least like 1/(1+|u|)),
recorded per kind rather than verified at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("linear", "tanh_saturating", "rational_saturating")


@dataclass(frozen=True)
class ScalarProfile:
    """One scalar factor sigma(u) = amplitude * shape(u / width).

    kind : "linear" | "tanh_saturating" | "rational_saturating"
        linear:              sigma(u) = amplitude * u + intercept
        tanh_saturating:     sigma(u) = amplitude * tanh(u / width)
        rational_saturating: sigma(u) = amplitude * u / (1 + (u/width)^2)

    The intercept is only meaningful for "linear" and defaults to zero; a
    nonzero value violates the zero-at-zero assumption and exists so the
    validation layer can screen hand-written configs.
    """

    kind: str
    amplitude: float = 1.0
    width: float = 1.0
    intercept: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.width <= 0:
            raise ValueError("width must be positive")
        if self.intercept != 0.0 and self.kind != "linear":
            raise ValueError("intercept is only supported for the linear kind")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "linear":
            out = self.amplitude * u + self.intercept
        elif self.kind == "tanh_saturating":
            out = self.amplitude * np.tanh(u / self.width)
        else:
            v = u / self.width
            out = self.amplitude * u / (1.0 + v * v)
        return out if out.ndim else float(out)

    def deriv(self, u):
        """Closed-form sigma'(u)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "linear":
            out = np.full_like(u, self.amplitude)
        elif self.kind == "tanh_saturating":
            out = (self.amplitude / self.width) / np.cosh(u / self.width) ** 2
        else:
            v = u / self.width
            out = self.amplitude * (1.0 - v * v) / (1.0 + v * v) ** 2
        return out if out.ndim else float(out)

    @property
    def lipschitz(self):
        """Exact sup over u of |sigma'(u)|."""
        if self.kind == "linear":
            return abs(self.amplitude)
        if self.kind == "tanh_saturating":
            return abs(self.amplitude) / self.width
        # rational: |s'| is maximal at u = 0
        return abs(self.amplitude)

    @property
    def decay_condition(self):
        return True

    def to_dict(self):
        d = {"kind": self.kind, "amplitude": self.amplitude, "width": self.width}
        if self.intercept:
            d["intercept"] = self.intercept
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d["kind"],
                   amplitude=float(d.get("amplitude", 1.0)),
                   width=float(d.get("width", 1.0)),
                   intercept=float(d.get("intercept", 0.0)))
