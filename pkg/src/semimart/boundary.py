"""Exit behaviour at the endpoints (Feller's test), the A/B/C/D cases and endpoint limits of g."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .funcmodel import DCFunction, DiffusionSpec, EvaluationError
from .quadrature import DEFAULT_ENGINE, QuadratureEngine
from .scale import ConvergenceVerdict, Status, l1loc_test, scale_function

YES, NO, INCONCLUSIVE = "yes", "no", "inconclusive"


@dataclass
class BoundaryReport:
    s_l: float
    s_r: float
    exits_at_l: str
    exits_at_r: str
    case: str
    g_limit_l: Optional[float] = None
    g_limit_r: Optional[float] = None
    behaviour_l: str = ""
    behaviour_r: str = ""
    evidence: List[ConvergenceVerdict] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def exit_sides(self):
        return [s for s, e in (("l", self.exits_at_l), ("r", self.exits_at_r)) if e == YES]

    def to_dict(self):
        return {
            "s_l": self.s_l, "s_r": self.s_r,
            "exits_at_l": self.exits_at_l, "exits_at_r": self.exits_at_r,
            "case": self.case,
            "g_limit_l": self.g_limit_l, "g_limit_r": self.g_limit_r,
            "behaviour_l": self.behaviour_l, "behaviour_r": self.behaviour_r,
            "notes": list(self.notes),
            "evidence": [v.to_dict() for v in self.evidence],
        }


def feller_exit_test(d: DiffusionSpec, endpoint: str, engine: QuadratureEngine = DEFAULT_ENGINE):
    """Return (answer, evidence) where answer is "yes", "no" or "inconclusive"."""
    sf = scale_function(d, engine)
    s_end, v_s = sf.limit(endpoint)
    evidence = [v_s]
    if v_s.status == Status.INCONCLUSIVE:
        return INCONCLUSIVE, evidence
    if v_s.status == Status.DIVERGENT:
        return NO, evidence
    end = d.J.endpoint(endpoint)

    def f(y):
        sig = d.sigma(y)
        return sf.dist(endpoint, y) / (sf.rho(y) * sig * sig)

    v = l1loc_test(f, None, end, d.c, engine, coords=sf.coordinates(), hints=d.hints(endpoint),
                   label=f"Feller exit test at {endpoint}: |s - s({endpoint})|/(rho sigma^2)")
    evidence.append(v)
    if v.status == Status.CONVERGENT:
        return YES, evidence
    if v.status == Status.DIVERGENT:
        return NO, evidence
    return INCONCLUSIVE, evidence


def default_probes(endpoint: float, z: float, n: int = 41):
    k = np.arange(n, dtype=float)
    if math.isfinite(endpoint):
        return endpoint + (z - endpoint) * np.exp2(-k)
    w = max(abs(z), 1.0)
    return z + math.copysign(1.0, endpoint) * w * (np.exp2(k) - 1.0)


def endpoint_limit_detail(g: DCFunction, endpoint: float, probe_sequence=None, z: float = 1.0,
                          abs_tol: float = 1e-13, window: int = 5):
    """Probe g towards the endpoint and report whether it settles.

    Two acceptance rules: the Cauchy rule (last ``window`` successive
    differences below abs_tol) and a geometric rule (the envelope of the
    differences shrinks by a steady factor <= 0.95, in which case the
    remaining change is bounded by a geometric tail).
    """
    probes = default_probes(endpoint, z) if probe_sequence is None else np.asarray(probe_sequence, dtype=float)
    if probes.size < 20:
        raise ValueError("need at least 20 probe points")
    try:
        vals = np.asarray(g(probes), dtype=float)
    except EvaluationError as exc:
        return {"limit": None, "method": "evaluation failed", "detail": str(exc)}
    if not np.all(np.isfinite(vals)):
        return {"limit": None, "method": "non-finite values"}
    diffs = np.abs(np.diff(vals))
    if np.all(diffs[-window:] < abs_tol):
        return {"limit": float(vals[-1]), "method": "cauchy", "bound": float(diffs[-window:].sum())}
    last = diffs[-window:]
    prev = diffs[-2 * window:-window]
    if np.max(prev) > 0:
        r = (np.max(last) / np.max(prev)) ** (1.0 / window)
        # every difference in the window must sit under the envelope of the one before it
        steady = np.all(diffs[-2 * window:] <= np.max(prev) * 1.0000001)
        if r <= 0.95 and steady:
            bound = float(last[-1] * r / (1 - r))
            signed = np.diff(vals)[-window:]
            value = float(vals[-1])
            if np.all(signed > 0) or np.all(signed < 0):
                rs = signed[1:] / signed[:-1]
                rg = float(np.exp(np.mean(np.log(rs))))
                if 0 < rg < 1:
                    value = float(vals[-1] + signed[-1] * rg / (1 - rg))
            if bound < 1e-2 * max(1.0, abs(value)):
                return {"limit": value, "method": "geometric", "bound": bound, "ratio": float(r)}
    return {"limit": None, "method": "no limit detected", "last_differences": diffs[-window:].tolist()}


def g_endpoint_limit(g: DCFunction, endpoint: float, probe_sequence=None, z: float = 1.0,
                     abs_tol: float = 1e-13) -> Optional[float]:
    return endpoint_limit_detail(g, endpoint, probe_sequence, z, abs_tol)["limit"]


def derivative_integrability(d: DiffusionSpec, g: DCFunction, side: str,
                             engine: QuadratureEngine = DEFAULT_ENGINE) -> ConvergenceVerdict:
    """Shell test of int |g'| near an endpoint; convergence gives a finite limit of g there."""
    end = d.J.endpoint(side)

    def f(y):
        return np.abs(g.d1(y))

    return l1loc_test(f, None, end, d.c, engine, hints=g.hints[side], label=f"|g'| near {side}")


def _behaviour(s_end: float, exits: str) -> str:
    if exits == YES:
        return "exits in finite time with positive probability"
    if exits == INCONCLUSIVE:
        return "undetermined"
    if math.isfinite(s_end):
        return "approached only as t -> infinity, with positive probability"
    return "not approached"


def classify_case(d: DiffusionSpec, g: Optional[DCFunction] = None, engine: QuadratureEngine = DEFAULT_ENGINE,
                  probes=None) -> BoundaryReport:
    sf = scale_function(d, engine)
    ex = {}
    evidence = []
    svals = {}
    for side in ("l", "r"):
        ans, ev = feller_exit_test(d, side, engine)
        ex[side] = ans
        evidence.extend(ev)
        svals[side] = sf.limit(side)[0]
    rep = BoundaryReport(svals["l"], svals["r"], ex["l"], ex["r"], "Inconclusive", evidence=evidence,
                         behaviour_l=_behaviour(svals["l"], ex["l"]), behaviour_r=_behaviour(svals["r"], ex["r"]))
    if INCONCLUSIVE in ex.values():
        rep.notes.append("an exit test was inconclusive")
        return rep
    exits = rep.exit_sides()
    if not exits:
        rep.case = "A"
        return rep
    missing = []
    for side in exits:
        end = d.J.endpoint(side)
        lim = None
        if g is not None:
            pr = None if probes is None else probes.get(side)
            lim = g_endpoint_limit(g, end, pr, d.c)
        if lim is None and g is not None:
            v = derivative_integrability(d, g, side, engine)
            rep.evidence.append(v)
            if v.status == Status.CONVERGENT:
                lim = math.nan
                rep.notes.append(f"g has a finite limit at {side} since int |g'| converges there; "
                                 "its value was not resolved by direct probing")
        if side == "l":
            rep.g_limit_l = lim
        else:
            rep.g_limit_r = lim
        if lim is None:
            missing.append(side)
    if missing:
        rep.case = "NotApplicable"
        rep.notes.append(f"no finite limit of g at exit endpoint(s) {', '.join(missing)}")
        return rep
    rep.case = {("l",): "B", ("r",): "C", ("l", "r"): "D"}[tuple(exits)]
    return rep
