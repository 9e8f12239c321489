"""Problem files: JSON validated against a published schema, then turned into model objects."""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Dict, List, Optional

import jsonschema
import numpy as np

from .exprparse import Expr, ExprError, depends_on_x, evaluate
from .funcmodel import (NO_ATOMS, AtomSequence, AtomUnion, CoefficientFunction, DCFunction, DiffusionSpec,
                        EndpointHints, FiniteAtoms, Interval, SignedMeasure, dc_from_derivative, lebesgue)
from .mc import ProbeSettings

SCHEMA_VERSION = 1


def load_schema() -> dict:
    text = resources.files("semimart").joinpath("data/problem.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


class ConfigError(ValueError):
    """All problems found in a problem file; ``errors`` holds "<json path>: <message>" strings."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("invalid problem description:\n  " + "\n  ".join(self.errors))


def _json_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def schema_errors(raw: Any) -> List[str]:
    validator = jsonschema.Draft202012Validator(load_schema())
    errs = sorted(validator.iter_errors(raw), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    return [f"{_json_path(e.absolute_path)}: {e.message}" for e in errs]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(raw: dict) -> str:
    return hashlib.sha256(canonical_json(raw).encode("utf-8")).hexdigest()


@dataclass
class ProblemConfig:
    raw: dict
    digest: str
    preset: Optional[str] = None
    label: str = ""
    mc: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return int(self.mc.get("seed", ProbeSettings.seed))


# ----------------------------------------------------------- expressions


class _Compiler:
    """Parses every expression up front so syntax errors are all reported together."""

    def __init__(self):
        self.errors: List[str] = []

    def expr(self, value, path):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            v = float(value)
            return None, v
        try:
            e = Expr(value)
        except ExprError as exc:
            self.errors.append(f"{_json_path(path)}: {exc}")
            return None, None
        if not depends_on_x(e.node):
            try:
                return e, float(evaluate(e.node, 0.0))
            except ExprError as exc:
                self.errors.append(f"{_json_path(path)}: {exc}")
                return None, None
        return e, None


def _fn(e: Optional[Expr], const: Optional[float]):
    if const is not None:
        return lambda x, v=const: np.full(np.shape(x), v)
    return lambda x: e(np.asarray(x, dtype=float))


def _coefficient(comp: _Compiler, value, path, name) -> Optional[CoefficientFunction]:
    e, const = comp.expr(value, path)
    if e is None and const is None:
        return None
    if const is not None:
        return CoefficientFunction.const(const, label=f"{name} = {const!r}")
    return CoefficientFunction(_fn(e, None), label=f"{name} = {e.text}")


def _edge(v) -> float:
    if v == "inf":
        return math.inf
    if v == "-inf":
        return -math.inf
    return float(v)


def spike_edge_atoms(exponent_in: float, exponent_out: float) -> AtomUnion:
    """Jumps of g' = x^p_in on [1/n - 1/n^4, 1/n + 1/n^4) (n >= 2) and x^p_out elsewhere,
    the same convention as the spikes(x, p_in, p_out) builtin."""

    def at_a(n):
        n = np.asarray(n, dtype=float)
        a = 1.0 / n - n ** -4
        return a, a ** exponent_in - a ** exponent_out

    def at_b(n):
        n = np.asarray(n, dtype=float)
        b = 1.0 / n + n ** -4
        return b, b ** exponent_out - b ** exponent_in

    return AtomUnion([AtomSequence(at_a, 2, label="a_n"), AtomSequence(at_b, 2, label="b_n")])


def _atoms(comp: _Compiler, spec, path):
    if spec is None:
        return NO_ATOMS, None
    if isinstance(spec, list):
        if not spec:
            return NO_ATOMS, None
        locs = [float(p[0]) for p in spec]
        if len(set(locs)) != len(locs):
            comp.errors.append(f"{_json_path(path)}: atom locations must be distinct")
        return FiniteAtoms(locs, [float(p[1]) for p in spec]), None
    atoms = spike_edge_atoms(float(spec["exponent_in"]), float(spec["exponent_out"]))

    def breakpoints(lo, hi, atoms=atoms):
        return atoms.in_range(lo, hi)[0]

    return atoms, breakpoints


def _hints(comp: _Compiler, spec, path) -> Dict[str, EndpointHints]:
    out = {}
    for side in ("l", "r"):
        h = (spec or {}).get(side)
        if h is None:
            continue
        phases = ()
        if "phase_scale" in h:
            e, const = comp.expr(h["phase_scale"], path + [side, "phase_scale"])
            if e is not None and const is None:
                phases = (_fn(e, None),)
            elif const is not None:
                comp.errors.append(f"{_json_path(path + [side, 'phase_scale'])}: a phase function must depend on x")
        out[side] = EndpointHints(h.get("power_exponent"), bool(h.get("oscillatory", False)) or bool(phases), phases)
    return out


# ---------------------------------------------------------------- loading


EXPRESSION_PATHS = (("mu",), ("sigma",), ("g", "value"), ("g", "dright"), ("g", "second_density"),
                    ("nu", "density"), ("hints", "l", "phase_scale"), ("hints", "r", "phase_scale"))


def expression_errors(raw: Any) -> List[str]:
    """Syntax errors of every expression string present, whatever else is wrong with the document."""
    out = []
    if not isinstance(raw, dict):
        return out
    for path in EXPRESSION_PATHS:
        node = raw
        for key in path:
            node = node.get(key) if isinstance(node, dict) else None
        if isinstance(node, str) and node:
            try:
                Expr(node)
            except ExprError as exc:
                out.append(f"{_json_path(path)}: {exc}")
    return out


def parse_config(raw: Any) -> ProblemConfig:
    """Validate a decoded JSON document; raises ConfigError listing every problem."""
    errs = schema_errors(raw) + expression_errors(raw)
    if isinstance(raw, dict):
        sched = (raw.get("mc") or {}).get("dt_schedule") if isinstance(raw.get("mc"), dict) else None
        if isinstance(sched, list) and all(isinstance(v, (int, float)) for v in sched):
            if any(b >= a for a, b in zip(sched, sched[1:])):
                errs.append("$.mc.dt_schedule: must be strictly decreasing")
        name = raw.get("preset")
        if isinstance(name, str):
            from .catalog import PRESETS
            if name not in PRESETS:
                errs.append(f"$.preset: unknown preset {name!r}; known presets: {', '.join(PRESETS)}")
            extra = sorted(set(raw) - {"preset", "label", "mc", "schema_version", "nu"})
            errs.extend(f"$.{k}: not allowed together with a preset" for k in extra)
    if errs:
        raise ConfigError(sorted(set(errs)))
    raw = copy.deepcopy(raw)
    cfg = ProblemConfig(raw, config_hash(raw), raw.get("preset"), raw.get("label", ""), dict(raw.get("mc", {})))
    if cfg.preset is None:
        build_problem(cfg)  # semantic checks (x0 inside the interval, sigma(x0) != 0, ...)
    return cfg


def load_config(path: str) -> ProblemConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"$: cannot read {path}: {exc.strerror}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"$: not valid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}"]) from exc
    return parse_config(raw)


def preset_config(name: str, mc: Optional[dict] = None) -> ProblemConfig:
    raw = {"schema_version": SCHEMA_VERSION, "preset": name}
    if mc:
        raw["mc"] = mc
    return parse_config(raw)


def build_problem(cfg: ProblemConfig):
    """(DiffusionSpec, DCFunction, SignedMeasure) described by the config."""
    raw = cfg.raw
    if cfg.preset is not None:
        from .catalog import PRESETS
        d, g, nu = PRESETS[cfg.preset].problem()
        if "nu" in raw:
            nu = _measure(_Compiler(), raw["nu"])
        return d, g, nu
    comp = _Compiler()
    iv = raw["interval"]
    mu = _coefficient(comp, raw["mu"], ["mu"], "mu")
    sigma = _coefficient(comp, raw["sigma"], ["sigma"], "sigma")
    gs = raw["g"]
    dr_e, dr_c = comp.expr(gs["dright"], ["g", "dright"])
    sd_e, sd_c = comp.expr(gs["second_density"], ["g", "second_density"])
    val = comp.expr(gs["value"], ["g", "value"]) if "value" in gs else None
    atoms, bps = _atoms(comp, gs.get("atoms"), ["g", "atoms"])
    hints = _hints(comp, raw.get("hints"), ["hints"])
    nu = _measure(comp, raw["nu"]) if "nu" in raw else lebesgue()
    d = g = None
    try:
        J = Interval(_edge(iv["l"]), _edge(iv["r"]))
    except ValueError as exc:
        comp.errors.append(f"$.interval: {exc}")
        J = None
    if J is not None and mu is not None and sigma is not None:
        x0 = float(raw["x0"])
        c = float(raw.get("c", x0))
        for key, v in (("x0", x0), ("c", c)):
            if not J.contains(v):
                comp.errors.append(f"$.{key}: {v!r} is not inside the interval")
        if not comp.errors:
            try:
                d = DiffusionSpec(J, mu, sigma, x0, c, label=cfg.label or raw.get("label", ""))
            except (ValueError, ExprError) as exc:
                comp.errors.append(f"$: {exc}")
    if comp.errors:
        raise ConfigError(comp.errors)
    if bps is not None:
        h = hints.get("l", EndpointHints())
        hints["l"] = h.merge(EndpointHints(breakpoints=(bps,)))
    dright, second = _fn(dr_e, dr_c), _fn(sd_e, sd_c)
    label = gs.get("value") if isinstance(gs.get("value"), str) else f"g' = {gs['dright']}"
    if val is not None:
        g = DCFunction(_fn(*val), dright, second, atoms, hints, gs.get("curvature"), str(label))
    else:
        g = dc_from_derivative(dright, second, atoms, anchor=d.c, anchor_value=float(gs.get("anchor_value", 0.0)),
                               hints=hints, curvature=gs.get("curvature"), label=str(label))
    return d, g, nu


def _measure(comp: _Compiler, spec) -> SignedMeasure:
    dens = spec.get("density", 0.0)
    e, const = comp.expr(dens, ["nu", "density"])
    atoms, _ = _atoms(comp, spec.get("atoms"), ["nu", "atoms"])
    if comp.errors:
        raise ConfigError(comp.errors)
    return SignedMeasure(_fn(e, const), atoms, tuple(spec.get("infinite_points", ())),
                         label=str(dens), zero_density=(const == 0.0))


def probe_settings(cfg: ProblemConfig, seed: Optional[int] = None, threads: Optional[int] = None) -> ProbeSettings:
    mc = cfg.mc
    st = ProbeSettings()
    if "dt" in mc:
        st.dt = float(mc["dt"])
    if "paths" in mc:
        st.paths = int(mc["paths"])
    if "horizon" in mc:
        st.horizon = float(mc["horizon"])
    st.seed = int(seed if seed is not None else mc.get("seed", st.seed))
    for k, v in mc.get("probe", {}).items():
        setattr(st, k, type(getattr(st, k))(v))
    st.threads = threads
    return st
