"""YAML run configuration: parsing and problem construction.

Schema (all-keys example; trig polynomials are given as `constant`, a list of
`cos`/`sin` records, or raw Hermitian `terms` records):

    schema: apshom-config-v1
    mode: periodic                       # auto | periodic | quasi-periodic
    domain: {dimension: 1, grid_n: 256, T: 0.25}
    module:
      scale_2pi: true                    # generators are in units of 2*pi
      spatial_generators: [[1.0]]
      temporal_generators: [1.0]
      cutoff: 16
    coefficients:
      ellipticity: 0.3
      entries:
        - {row: 0, col: 0, constant: 2.0,
           cos: [{spatial: [1], temporal: [0], amplitude: 1.0}]}
    reaction:
      terms:
        - profile: {kind: tanh_saturating, amplitude: 1.0, width: 1.0}
          gamma: {cos: [{spatial: [1], temporal: [0], amplitude: 1.0}]}
    noise:
      bound: 4.0
      channels:
        - pairs:
            - profile: {kind: tanh_saturating}
              mu: {constant: 1.0,
                   cos: [{spatial: [0], temporal: [1], amplitude: 0.5}]}
    initial:
      terms: [{kind: sine, amplitude: 1.0, modes: [1]}]
    experiment:
      eps_list: [0.25, 0.125, 0.0625, 0.03125]
      samples: 64
      base_seed: 20260810
      dt: 0.001
      deltas: [0.1, 0.05]
      increment_deltas: [0.02, 0.01, 0.005]
      r_table: {points: 33}              # optional r_min / r_max
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import yaml

from .cell import CoefficientField
from .effective import NoiseChannel, NoiseTerm
from .problem import InitialData, InitialTerm, ProblemSpec
from .profiles import ScalarProfile
from .reaction import ReactionTerm
from .spde import DomainSpec
from .trig import FrequencyModule, TrigPoly

SCHEMA = "apshom-config-v1"
TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Parsed configuration plus experiment parameters and provenance."""

    problem: ProblemSpec
    samples: int
    base_seed: int
    dt: float
    deltas: tuple
    increment_deltas: tuple
    r_points: int
    r_min: float = None
    r_max: float = None
    out_dir: str = None
    config_hash: str = ""
    raw: dict = field(default_factory=dict)
    path: str = ""

    def r_range(self):
        lo, hi = self.problem.default_r_range()
        return (self.r_min if self.r_min is not None else lo,
                self.r_max if self.r_max is not None else hi)


def _build_poly(module, spec, scale=1.0):
    if spec is None:
        return TrigPoly.zero(module)
    poly = TrigPoly.zero(module)
    if "constant" in spec:
        poly = poly + TrigPoly.constant(module, float(spec["constant"]) * scale)
    for rec in spec.get("cos", ()):
        poly = poly + TrigPoly.cosine(
            module, rec["spatial"], rec["temporal"],
            amplitude=float(rec.get("amplitude", 1.0)) * scale,
            phase=float(rec.get("phase", 0.0)))
    for rec in spec.get("sin", ()):
        poly = poly + TrigPoly.sine(
            module, rec["spatial"], rec["temporal"],
            amplitude=float(rec.get("amplitude", 1.0)) * scale)
    if "terms" in spec:
        poly = poly + (TrigPoly.from_records(module, spec["terms"]) * scale)
    return poly


def _build_module(d, cutoff_override=None):
    scale = TWO_PI if d.get("scale_2pi", False) else 1.0
    spatial = [[scale * float(x) for x in g] for g in d["spatial_generators"]]
    temporal = [scale * float(g) for g in d["temporal_generators"]]
    cutoff = int(cutoff_override if cutoff_override is not None
                 else d["cutoff"])
    return FrequencyModule(spatial, temporal, cutoff,
                           declared_independent=tuple(
                               tuple(p) for p in d.get("independent_pairs", ())))


def _build_coefficients(module, d):
    n = module.n_dims
    zero = TrigPoly.zero(module)
    rows = [[zero for _ in range(n)] for _ in range(n)]
    for entry in d.get("entries", ()):
        i, j = int(entry["row"]), int(entry["col"])
        rows[i][j] = _build_poly(module, entry)
    return CoefficientField(tuple(tuple(r) for r in rows),
                            ellipticity=float(d["ellipticity"]))


def _build_reaction(module, d):
    if d is None:
        return ReactionTerm(())
    terms = []
    for t in d.get("terms", ()):
        profile = ScalarProfile.from_dict(t["profile"])
        gamma = _build_poly(module, t.get("gamma"))
        terms.append((gamma, profile))
    return ReactionTerm(tuple(terms))


def _build_noise(module, d):
    if d is None:
        return NoiseTerm.empty()
    channels = []
    for ch in d.get("channels", ()):
        pairs = []
        for pr in ch.get("pairs", ()):
            profile = ScalarProfile.from_dict(pr["profile"])
            mu = _build_poly(module, pr.get("mu"))
            pairs.append((mu, profile))
        offset = (_build_poly(module, ch["offset"])
                  if ch.get("offset") is not None else None)
        channels.append(NoiseChannel(pairs=tuple(pairs), offset=offset))
    return NoiseTerm(channels=tuple(channels),
                     bound=float(d.get("bound", 1.0)))


def _build_initial(d, dimension):
    terms = []
    for t in d.get("terms", ()):
        terms.append(InitialTerm(
            kind=t["kind"], amplitude=float(t.get("amplitude", 1.0)),
            modes=tuple(t.get("modes", (1,) * dimension)),
            powers=tuple(t.get("powers", (1,) * dimension))))
    return InitialData(tuple(terms))


def load_config(path, cutoff_override=None, seed_override=None):
    with open(path, "rb") as fh:
        raw_bytes = fh.read()
    data = yaml.safe_load(raw_bytes)
    if not isinstance(data, dict) or data.get("schema") != SCHEMA:
        raise ConfigError(f"config must declare schema: {SCHEMA}")
    try:
        dom = data["domain"]
        domain = DomainSpec(dimension=int(dom["dimension"]),
                            grid_n=int(dom["grid_n"]), T=float(dom["T"]))
        module = _build_module(data["module"], cutoff_override)
        if module.n_dims != domain.dimension:
            raise ConfigError("module spatial dimension != domain dimension")
        a = _build_coefficients(module, data["coefficients"])
        g = _build_reaction(module, data.get("reaction"))
        noise = _build_noise(module, data.get("noise"))
        u0 = _build_initial(data.get("initial", {"terms": []}),
                            domain.dimension)
        exp = data.get("experiment", {})
        eps_list = tuple(float(e) for e in exp.get("eps_list", (0.1,)))
        problem = ProblemSpec(domain=domain, module=module, a=a, g=g,
                              noise=noise, u0=u0, eps_list=eps_list,
                              mode=data.get("mode", "auto"))
        samples = int(exp.get("samples", 1))
        if samples < 1:
            raise ConfigError("samples must be >= 1")
        rt = exp.get("r_table", {})
        cfg = RunConfig(
            problem=problem,
            samples=samples,
            base_seed=int(seed_override if seed_override is not None
                          else exp.get("base_seed", 0)),
            dt=float(exp.get("dt", 1e-3)),
            deltas=tuple(float(x) for x in exp.get("deltas", (0.1, 0.05))),
            increment_deltas=tuple(float(x) for x in
                                   exp.get("increment_deltas",
                                           (0.02, 0.01, 0.005))),
            r_points=int(rt.get("points", 33)),
            r_min=(float(rt["r_min"]) if "r_min" in rt else None),
            r_max=(float(rt["r_max"]) if "r_max" in rt else None),
            out_dir=exp.get("out"),
            config_hash=hashlib.sha256(raw_bytes).hexdigest(),
            raw=data,
            path=str(path),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key: {exc}") from exc
    return cfg
