"""Finiteness of the additive functional int_J L^y_t(Y) nu(dy) for a positive measure nu."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .funcmodel import DiffusionSpec, Interval, SignedMeasure
from .quadrature import DEFAULT_ENGINE, QuadratureEngine
from .scale import ConvergenceVerdict, Status, l1loc_test, scale_function

NOT_APPLICABLE = "NotApplicable"


@dataclass
class FinitenessSet:
    points: List[Union[str, float]]
    alpha: float
    beta: float
    degenerate: bool
    confirmations: dict = field(default_factory=dict)

    @property
    def reduced_interval(self):
        return None if self.degenerate else Interval(self.alpha, self.beta)


def _point_divergence(nu: SignedMeasure, p: float, J: Interval, engine):
    """Shell tests of nu near an interior point from both sides (f = 1)."""
    out = {}
    for side, other in (("left", J.l), ("right", J.r)):
        span = abs(p - other) if math.isfinite(other) else 1.0
        z = p - 0.5 * span if side == "left" else p + 0.5 * span
        out[side] = l1loc_test(lambda y: np.ones(np.shape(y)), nu, p, z, engine,
                               label=f"nu mass near {p:g} from the {side}")
    return out


def non_local_finiteness_set(nu: SignedMeasure, J: Interval, x0: float, confirm: bool = True,
                             engine: QuadratureEngine = DEFAULT_ENGINE) -> FinitenessSet:
    """D^nu = {l, r} plus the declared interior points where nu is not locally finite.

    Declared points are confirmed by shell tests (at least one side must
    diverge); unconfirmed declarations are kept but flagged.
    """
    inner = [p for p in nu.infinite_points if J.contains(p)]
    conf = {}
    if confirm:
        for p in inner:
            tests = _point_divergence(nu, p, J, engine)
            conf[p] = {
                "confirmed": any(v.status == Status.DIVERGENT for v in tests.values()),
                "left": tests["left"], "right": tests["right"],
            }
    points: List[Union[str, float]] = ["l", "r"] + inner
    if x0 in inner:
        return FinitenessSet(points, x0, x0, True, conf)
    alpha = max([J.l] + [p for p in inner if p < x0])
    beta = min([J.r] + [p for p in inner if p > x0])
    return FinitenessSet(points, alpha, beta, False, conf)


@dataclass
class AdditiveFunctionalReport:
    d_nu: List[Union[str, float]]
    reduced_interval: Optional[Interval]
    verdict_before: str
    verdict_after: str
    verdict_at_exit_l: Union[ConvergenceVerdict, str]
    verdict_at_exit_r: Union[ConvergenceVerdict, str]
    summary: str = ""
    notes: List[str] = field(default_factory=list)

    def to_dict(self):
        def v(x):
            return x if isinstance(x, str) else x.to_dict()
        return {
            "d_nu": list(self.d_nu),
            "reduced_interval": None if self.reduced_interval is None else self.reduced_interval.to_json(),
            "verdict_before": self.verdict_before,
            "verdict_after": self.verdict_after,
            "verdict_at_exit_l": v(self.verdict_at_exit_l),
            "verdict_at_exit_r": v(self.verdict_at_exit_r),
            "summary": self.summary,
            "notes": list(self.notes),
        }


def _restricted(d: DiffusionSpec, alpha: float, beta: float) -> DiffusionSpec:
    if alpha == d.J.l and beta == d.J.r:
        return d
    return DiffusionSpec(Interval(alpha, beta), d.mu, d.sigma, d.x0, d.x0, None, f"{d.label} on ({alpha}, {beta})")


def _nonzero(nu: SignedMeasure, J: Interval, engine) -> bool:
    if not nu.atoms.empty:
        return True
    if nu.zero_density:
        return False
    lo = J.l if math.isfinite(J.l) else -1e6
    hi = J.r if math.isfinite(J.r) else 1e6
    xs = np.linspace(lo, hi, 4003)[1:-1]
    return bool(np.any(np.asarray(nu.dens(xs)) > 0))


def classify_additive_functional(d: DiffusionSpec, nu: SignedMeasure,
                                 engine: QuadratureEngine = DEFAULT_ENGINE) -> AdditiveFunctionalReport:
    fs = non_local_finiteness_set(nu, d.J, d.x0, engine=engine)
    before = "finite on [0, tau_D) almost surely, tau_D the hitting time of D^nu"
    after = "infinite on (tau_D, zeta] almost surely"
    notes = []
    for p, c in fs.confirmations.items():
        if not c["confirmed"]:
            notes.append(f"declared non-local-finiteness point {p:g} was not confirmed by shell tests")
    if fs.degenerate:
        return AdditiveFunctionalReport(fs.points, None, before, after, NOT_APPLICABLE, NOT_APPLICABLE,
                                        "x0 lies in D^nu: tau_D = 0 and the functional vanishes at tau_D", notes)
    dr = _restricted(d, fs.alpha, fs.beta)
    sf = scale_function(dr, engine)
    s_l, v_l = sf.limit("l")
    s_r, v_r = sf.limit("r")
    if v_l.status == Status.INCONCLUSIVE or v_r.status == Status.INCONCLUSIVE:
        notes.append("a scale limit is inconclusive")
    if s_l == -math.inf and s_r == math.inf:
        nz = _nonzero(nu, dr.J, engine)
        summary = ("recurrent: L^y_zeta = inf for every y, so the functional is infinite at zeta almost surely"
                   if nz else "nu vanishes on the reduced interval; the functional is 0")
        return AdditiveFunctionalReport(fs.points, dr.J, before, after, NOT_APPLICABLE, NOT_APPLICABLE, summary, notes)
    verdicts = {}
    parts = []
    for side, (s_end, v_s) in (("l", (s_l, v_l)), ("r", (s_r, v_r))):
        if v_s.status == Status.INCONCLUSIVE:
            verdicts[side] = v_s
            parts.append(f"at {side}: scale limit inconclusive")
            continue
        if not math.isfinite(s_end):
            verdicts[side] = NOT_APPLICABLE
            parts.append(f"at {side}: s is infinite, Y does not converge there")
            continue
        end = dr.J.endpoint(side)

        def f(y, side=side):
            return sf.dist(side, y) / sf.rho(y)

        v = l1loc_test(f, nu, end, dr.c, engine, coords=sf.coordinates(),
                       label=f"|s - s({side})|/rho against nu")
        verdicts[side] = v
        word = {"Convergent": "finite", "Divergent": "infinite", "Inconclusive": "undetermined"}[v.status.value]
        parts.append(f"at {side}: {word} almost surely on the event that Y converges to {side}")
    return AdditiveFunctionalReport(fs.points, dr.J, before, after, verdicts["l"], verdicts["r"],
                                    "; ".join(parts), notes)


def brownian_local_time_criterion(nu: SignedMeasure, l: float = 0.0, z: Optional[float] = None,
                                  engine: QuadratureEngine = DEFAULT_ENGINE) -> ConvergenceVerdict:
    """(x - l) against nu at l+: decides int L^y_{tau_l}(B) nu(dy) < inf (zero-one law)."""
    z = l + 1.0 if z is None else z
    return l1loc_test(lambda x: np.asarray(x, dtype=float) - l, nu, l, z, engine, label="(x - l) against nu")
