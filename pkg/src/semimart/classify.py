"""Semimartingale classification of g(Y).

Decision chain per exit endpoint: sign-definite shortcut, then the necessary
condition ((s - s(l))/rho * g'^2 integrable), then the full condition
((s - s(l))/rho integrable against |nu_g|).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .boundary import BoundaryReport, classify_case, g_endpoint_limit
from .funcmodel import (AtomBudgetError, DCFunction, DiffusionSpec, SignedMeasure, _Mapped,
                        nu_g, variation_measure)
from .quadrature import DEFAULT_ENGINE, QuadratureEngine, integrate_panels, phase_panels
from .scale import ConvergenceVerdict, Status, _Geometry, l1loc_test, scale_function

SEMIMARTINGALE = "Semimartingale"
FIRST_KIND = "NonSemiFirstKind"
SECOND_KIND = "NonSemiSecondKind"
NOT_DETERMINED = "NotDetermined"
NOT_APPLICABLE = "NotApplicable"

APPLIES_POSITIVE = "applies_positive"
APPLIES_NEGATIVE = "applies_negative"
NOT_APPLICABLE_SHORTCUT = "not_applicable"


def _side_setup(d: DiffusionSpec, side: str, engine):
    sf = scale_function(d, engine)
    end = d.J.endpoint(side)

    def base(y):
        return sf.dist(side, y) / sf.rho(y)

    return sf, end, base


def necessary_condition(d: DiffusionSpec, g: DCFunction, side: str = "l",
                        engine: QuadratureEngine = DEFAULT_ENGINE) -> ConvergenceVerdict:
    sf, end, base = _side_setup(d, side, engine)

    def f(y):
        gp = g.d1(y)
        return base(y) * gp * gp

    hints = g.hints[side].merge(d.hints(side))
    return l1loc_test(f, None, end, d.c, engine, coords=sf.coordinates(), hints=hints,
                      label=f"necessary condition at {side}: |s - s({side})|/rho * g'^2")


def full_condition(d: DiffusionSpec, g: DCFunction, side: str = "l",
                   engine: QuadratureEngine = DEFAULT_ENGINE) -> ConvergenceVerdict:
    sf, end, base = _side_setup(d, side, engine)
    nu = variation_measure(nu_g(d, g))
    return l1loc_test(base, nu, end, d.c, engine, coords=sf.coordinates(),
                      label=f"full condition at {side}: |s - s({side})|/rho against |nu_g|")


def _shell_signs(geo: _Geometry, k: int, nu: SignedMeasure, hints, engine, max_samples: int):
    p_lo, p_hi = geo.shell_p(k)
    y_lo, y_hi = geo.y_range(k)
    if not (p_hi > p_lo and y_hi > y_lo):
        return "uncertain"
    base = np.linspace(p_lo, p_hi, 65)[1:-1]
    samples = [base]
    if hints.oscillatory and not hints.phase_scale:
        return "uncertain"
    if hints.phase_scale:
        phases = [(lambda ph: (lambda p: ph(geo.y_of_p(p))))(ph) for ph in hints.phase_scale]
        res = phase_panels(np.array([p_lo]), np.array([p_hi]), phases,
                           math.pi / max(engine.oscillation_panels_per_period, 1), max_samples // 3)
        if res is None:
            return "uncertain"
        lo, hi = res
        for t in (0.2, 0.5, 0.8):
            samples.append(lo + t * (hi - lo))
    for bp in hints.breakpoints:
        try:
            pts = np.asarray(bp(y_lo, y_hi), dtype=float)
        except AtomBudgetError:
            return "uncertain"
        if pts.size > max_samples:
            return "uncertain"
        if pts.size:
            pp = np.sort(np.concatenate([[p_lo, p_hi], geo.p_of_y(pts)]))
            samples.append(0.5 * (pp[:-1] + pp[1:]))
    p = np.concatenate(samples)
    y = geo.y_of_p(p)
    y = y[(y > y_lo) & (y < y_hi)]
    dens = np.asarray(nu.dens(y), dtype=float)
    closed = "right" if geo.side == "l" else "left"
    try:
        _, w = nu.atoms.in_range(y_lo, y_hi, closed)
    except AtomBudgetError:
        return "uncertain"
    vals = np.concatenate([dens, w])
    pos = bool(np.any(vals > 0))
    neg = bool(np.any(vals < 0))
    if pos and neg:
        return "mixed"
    if pos:
        return "pos"
    if neg:
        return "neg"
    return "zero"


def sign_definite_shortcut(d: DiffusionSpec, g: DCFunction, side: str = "l",
                           engine: QuadratureEngine = DEFAULT_ENGINE, k_scan: int = 24, certify: int = 8,
                           max_samples: int = 2 ** 15, detail: bool = False):
    """Certify that nu_g has one sign on (l, a) by sampling every shell below a.

    Shells are scanned from the deepest one outwards; the first mixed or
    unresolvable shell fixes how far out a sign-definite neighbourhood can
    reach, and at least ``certify`` consecutive clean shells are required.
    """
    sf = scale_function(d, engine)
    end = d.J.endpoint(side)
    nu = nu_g(d, g)
    hints = nu.hints[side]
    geo = _Geometry(end, d.c, side, sf.coordinates())
    seen = None
    k0 = None
    for k in range(k_scan, -1, -1):
        s = _shell_signs(geo, k, nu, hints, engine, max_samples)
        if s in ("mixed", "uncertain"):
            break
        if s != "zero":
            if seen is None:
                seen = s
            elif seen != s:
                break
        k0 = k
    status = NOT_APPLICABLE_SHORTCUT
    a = None
    if k0 is not None and k_scan - k0 + 1 >= certify:
        status = APPLIES_NEGATIVE if seen == "neg" else APPLIES_POSITIVE
        y_lo, y_hi = geo.y_range(k0)
        a = y_hi if side == "l" else y_lo
    if detail:
        return status, {"a": a, "first_clean_shell": k0, "sign": seen or "zero", "shells_scanned": k_scan + 1}
    return status


@dataclass
class SemimartingaleVerdict:
    verdict: str
    cond_necessary: Optional[ConvergenceVerdict]
    cond_full: Optional[ConvergenceVerdict]
    shortcut_used: bool
    case: BoundaryReport
    notes: List[str] = field(default_factory=list)
    per_endpoint: Dict[str, dict] = field(default_factory=dict)

    def to_dict(self):
        def v(x):
            return None if x is None else x.to_dict()
        return {
            "verdict": self.verdict,
            "shortcut_used": self.shortcut_used,
            "cond_necessary": v(self.cond_necessary),
            "cond_full": v(self.cond_full),
            "case": self.case.to_dict(),
            "notes": list(self.notes),
            "per_endpoint": {
                s: {"verdict": e["verdict"], "shortcut": e["shortcut"], "shortcut_detail": e.get("shortcut_detail"),
                    "necessary": v(e.get("necessary")), "full": v(e.get("full"))}
                for s, e in self.per_endpoint.items()},
        }


def _endpoint_verdict(d, g, side, engine):
    out = {"side": side}
    sc, info = sign_definite_shortcut(d, g, side, engine, detail=True)
    out["shortcut"] = sc
    out["shortcut_detail"] = info
    if sc != NOT_APPLICABLE_SHORTCUT:
        out["verdict"] = SEMIMARTINGALE
        return out
    nec = necessary_condition(d, g, side, engine)
    out["necessary"] = nec
    if nec.status == Status.DIVERGENT:
        out["verdict"] = SECOND_KIND
        return out
    full = full_condition(d, g, side, engine)
    out["full"] = full
    if full.status == Status.DIVERGENT:
        out["verdict"] = FIRST_KIND if nec.status == Status.CONVERGENT else NOT_DETERMINED
    elif full.status == Status.CONVERGENT:
        out["verdict"] = SEMIMARTINGALE
    else:
        out["verdict"] = NOT_DETERMINED
    return out


def classify(d: DiffusionSpec, g: DCFunction, engine: QuadratureEngine = DEFAULT_ENGINE,
             probes=None) -> SemimartingaleVerdict:
    case = classify_case(d, g, engine, probes)
    if case.case == "A":
        return SemimartingaleVerdict(SEMIMARTINGALE, None, None, False, case,
                                     ["Y exits at neither endpoint; nothing to test"])
    if case.case == "NotApplicable":
        return SemimartingaleVerdict(NOT_APPLICABLE, None, None, False, case, list(case.notes))
    if case.case == "Inconclusive":
        return SemimartingaleVerdict(NOT_DETERMINED, None, None, False, case, list(case.notes))
    per = {side: _endpoint_verdict(d, g, side, engine) for side in case.exit_sides()}
    kinds = [e["verdict"] for e in per.values()]
    notes = []
    if SECOND_KIND in kinds:
        verdict = SECOND_KIND
    elif NOT_DETERMINED in kinds:
        verdict = NOT_DETERMINED
    elif FIRST_KIND in kinds:
        verdict = FIRST_KIND
    else:
        verdict = SEMIMARTINGALE
    if len(per) > 1:
        notes.append("both endpoints are exits; the verdict combines the per-endpoint results")
    # evidence reported at top level: the endpoint that decided the verdict
    deciding = next((e for e in per.values() if e["verdict"] == verdict), next(iter(per.values())))
    return SemimartingaleVerdict(verdict, deciding.get("necessary"), deciding.get("full"),
                                 deciding["shortcut"] != NOT_APPLICABLE_SHORTCUT, case, notes, per)


# ------------------------------------------------------------ Brownian case


def brownian_conditions(g: DCFunction, l: float = 0.0, z: float = 1.0,
                        engine: QuadratureEngine = DEFAULT_ENGINE):
    """(x|g''| test including atoms, x g'^2 test) at l+, for Brownian motion on (l, inf)."""
    second = SignedMeasure(lambda x: np.abs(g.d2(x)), g.atoms.absolute(), (), g.hints, f"|g''| of {g.label}")
    full = l1loc_test(lambda x: np.asarray(x) - l, second, l, z, engine, label="(x - l)|g''|")

    def nec(x):
        gp = g.d1(x)
        return (np.asarray(x) - l) * gp * gp

    necessary = l1loc_test(nec, None, l, z, engine, hints=g.hints["l"], label="(x - l) g'^2")
    return full, necessary


class DecompositionRefused(ValueError):
    def __init__(self, verdict: ConvergenceVerdict):
        super().__init__(f"x|g''| is not integrable at the endpoint ({verdict.status.value}): "
                         f"{verdict.decision_note}")
        self.verdict = verdict


def _jordan_parts(g: DCFunction):
    d2 = g.second_density
    pos = SignedMeasure(lambda x: np.maximum(np.asarray(d2(x), dtype=float), 0.0),
                        _Mapped(g.atoms, lambda w: np.maximum(w, 0.0)), (), g.hints, "nu1")
    neg = SignedMeasure(lambda x: np.maximum(-np.asarray(d2(x), dtype=float), 0.0),
                        _Mapped(g.atoms, lambda w: np.maximum(-w, 0.0)), (), g.hints, "nu2")
    return pos, neg


def _segment_edges(g: DCFunction, a: float, b: float):
    pts = [np.array([a, b])]
    y, _ = g.atoms.in_range(a, b)
    pts.append(y)
    for side in ("l", "r"):
        for bp in g.hints[side].breakpoints:
            pts.append(np.asarray(bp(a, b), dtype=float))
    e = np.unique(np.concatenate(pts))
    return e[(e >= a) & (e <= b)]


class _ConvexPart:
    """H(x) = int_1^x k(t) dt + a x + b with k(x) = m((1, x]) (x >= 1), -m((x, 1]) (x < 1)."""

    def __init__(self, m: SignedMeasure, a: float, b: float, pivot: float, owner: DCFunction, engine):
        self.m = m
        self.a = a
        self.b = b
        self.pivot = pivot
        self.owner = owner
        self.engine = engine

    def _moments(self, x):
        """For each x: the m-mass between x and the pivot and the matching first moment,
        signed so that the value and slope formulas are uniform.

        The region spanned by x and the pivot is cut once at every query point,
        atom and breakpoint; each piece is integrated a single time and the
        per-point integrals are prefix sums of the pieces.
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        c = self.pivot
        lo_q = min(float(x.min()), c) if x.size else c
        hi_q = max(float(x.max()), c) if x.size else c
        mass = np.zeros(x.size)
        first = np.zeros(x.size)
        if hi_q > lo_q:
            edges = np.unique(np.concatenate([x, [c], _segment_edges(self.owner, lo_q, hi_q)]))
            lo, hi = edges[:-1], edges[1:]
            piece = np.arange(lo.size)
            phases = self.owner.hints["l"].phase_scale + self.owner.hints["r"].phase_scale
            if phases:
                step = math.pi / max(self.engine.oscillation_panels_per_period, 1)
                split = phase_panels(lo, hi, phases, step, 2 ** 22)
                if split is not None:
                    lo, hi = split
                    piece = np.searchsorted(edges, lo, side="right") - 1
            eng = self.engine.with_(max_subdivisions=max(self.engine.max_subdivisions, 2 ** 18))
            dens = self.m.dens
            r0 = integrate_panels(dens, lo, hi, piece, edges.size - 1, eng)
            r1 = integrate_panels(lambda t: np.asarray(t) * dens(t), lo, hi, piece, edges.size - 1, eng)
            P0 = np.concatenate([[0.0], np.cumsum(r0.value)])
            P1 = np.concatenate([[0.0], np.cumsum(r1.value)])
            ix = np.searchsorted(edges, x)
            ic = int(np.searchsorted(edges, c))
            mass = np.where(x < c, P0[ic] - P0[ix], P0[ix] - P0[ic])
            first = np.where(x < c, P1[ic] - P1[ix], P1[ix] - P1[ic])
        mass_atoms = np.zeros(x.size)
        mom_atoms = np.zeros(x.size)
        for i, xi in enumerate(x):
            if xi == c:
                continue
            a, b = (xi, c) if xi < c else (c, xi)
            # atoms: (x, c] for x < c and (c, x] for x > c
            y, w = self.m.atoms.in_range(a, b)
            mass_atoms[i] = np.sum(w)
            mom_atoms[i] = np.sum((y - xi) * w) if xi < c else np.sum((xi - y) * w)
        # int over (x, c] of (t - x) m(dt) = first - x*mass  (x < c)
        # int over (c, x] of (x - t) m(dt) = x*mass - first  (x > c)
        below = x < c
        value_part = np.where(below, first - x * mass, x * mass - first)
        value_part = value_part + mom_atoms
        slope_part = np.where(below, -(mass + mass_atoms), mass + mass_atoms)
        return value_part, slope_part

    def value(self, x):
        x_arr = np.asarray(x, dtype=float)
        v, _ = self._moments(x_arr)
        out = v + self.a * x_arr.reshape(-1) + self.b
        return out.reshape(x_arr.shape) if x_arr.ndim else float(out[0])

    def dright(self, x):
        x_arr = np.asarray(x, dtype=float)
        _, s = self._moments(x_arr)
        out = s + self.a
        return out.reshape(x_arr.shape) if x_arr.ndim else float(out[0])


def convex_decompose(g: DCFunction, l: float = 0.0, pivot: float = 1.0,
                     engine: QuadratureEngine = DEFAULT_ENGINE):
    """Split g = H1 - H2 with H1, H2 convex and finite at l+.

    The measure g'' is Jordan-split into nu1 - nu2 and each part is
    integrated twice from the pivot; a1 = g'(pivot), a2 = 0, b1 = g(pivot) - a1*pivot, b2 = 0.
    Refuses unless (x - l)|g''| is integrable at l+.
    """
    full, _ = brownian_conditions(g, l, pivot, engine)
    if full.status != Status.CONVERGENT:
        raise DecompositionRefused(full)
    nu1, nu2 = _jordan_parts(g)
    a1 = float(g.d1(np.array([pivot]))[0])
    b1 = float(g(np.array([pivot]))[0]) - a1 * pivot
    parts = []
    for m, a, b, name in ((nu1, a1, b1, "H1"), (nu2, 0.0, 0.0, "H2")):
        cp = _ConvexPart(m, a, b, pivot, g, engine)
        parts.append(DCFunction(cp.value, cp.dright, m.density, m.atoms, g.hints, "convex", f"{name}[{g.label}]"))
    return parts[0], parts[1], full


def check_decomposition(g: DCFunction, H1: DCFunction, H2: DCFunction, grid) -> dict:
    grid = np.asarray(grid, dtype=float)
    err = np.abs(H1(grid) - H2(grid) - g(grid))
    d1 = H1.d1(grid)
    d2 = H2.d1(grid)
    scale = 1e-10 * (1 + np.abs(d1[:-1]) + np.abs(d1[1:]))
    scale2 = 1e-10 * (1 + np.abs(d2[:-1]) + np.abs(d2[1:]))
    mono1 = bool(np.all(np.diff(d1) >= -scale))
    mono2 = bool(np.all(np.diff(d2) >= -scale2))
    return {"max_error": float(err.max()), "H1_convex": mono1, "H2_convex": mono2, "points": int(grid.size)}


# ---------------------------------------------------------- lemma checks


def lemma_implication_suite(battery, z: float = 1.0, engine: QuadratureEngine = DEFAULT_ENGINE) -> dict:
    """Check the two real-analysis implications on each g in ``battery``.

    (R1) x|g''| integrable at 0+  =>  finite g(0+) and x g'^2 integrable.
    (R2) g convex or concave with finite g(0+)  =>  x|g''| integrable.
    Inconclusive sub-results are reported as unverified, never as violations.
    """
    rows = []
    violations = []
    for g in battery:
        full, nec = brownian_conditions(g, 0.0, z, engine)
        lim = g_endpoint_limit(g, 0.0, z=z)
        row = {"g": g.label, "x|g''|": full.status.value, "x g'^2": nec.status.value,
               "limit": lim, "curvature": g.curvature, "R1": "precondition fails", "R2": "precondition fails"}
        if full.status == Status.CONVERGENT:
            if lim is None or nec.status == Status.DIVERGENT:
                row["R1"] = "VIOLATED"
                violations.append((g.label, "R1"))
            elif nec.status == Status.CONVERGENT:
                row["R1"] = "holds"
            else:
                row["R1"] = "unverified"
        if g.curvature in ("convex", "concave") and lim is not None:
            if full.status == Status.DIVERGENT:
                row["R2"] = "VIOLATED"
                violations.append((g.label, "R2"))
            elif full.status == Status.CONVERGENT:
                row["R2"] = "holds"
            else:
                row["R2"] = "unverified"
        rows.append(row)
    return {"rows": rows, "violations": violations}
