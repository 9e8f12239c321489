"""Scale density, scale function and the dyadic-shell convergence test.

``l1loc_test`` decides whether ``int |f| dnu`` converges near an endpoint by
integrating over shells that halve their distance to the endpoint (or double
it, at infinity) and looking at how the shell masses decay.
"""
from __future__ import annotations

import math
import threading
import weakref
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np

from .funcmodel import (AtomBudgetError, DiffusionSpec, EndpointHints, EvaluationError,
                        SignedMeasure, lebesgue)
from .quadrature import DEFAULT_ENGINE, QuadratureEngine, QuadratureError, integrate_panels, phase_panels


class Status(str, Enum):
    CONVERGENT = "Convergent"
    DIVERGENT = "Divergent"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class ConvergenceVerdict:
    status: Status
    estimate: float
    shells: List[Tuple[int, float]]
    cap_hit: bool
    decision_note: str
    interior: float = 0.0
    tail: float = 0.0
    endpoint: float = math.nan
    anchor: float = math.nan
    label: str = ""
    panels: int = 0

    @property
    def convergent(self):
        return self.status == Status.CONVERGENT

    @property
    def divergent(self):
        return self.status == Status.DIVERGENT

    def to_dict(self):
        return {
            "label": self.label,
            "status": self.status.value,
            "estimate": self.estimate,
            "tail": self.tail,
            "interior": self.interior,
            "cap_hit": self.cap_hit,
            "decision_note": self.decision_note,
            "endpoint": self.endpoint,
            "anchor": self.anchor,
            "shells": [[int(k), float(a)] for k, a in self.shells],
        }


def closed_form_verdict(status: Status, estimate: float, note: str, endpoint=math.nan, anchor=math.nan,
                        label="") -> ConvergenceVerdict:
    return ConvergenceVerdict(status, estimate if status == Status.CONVERGENT else math.nan, [], False,
                              note, endpoint=endpoint, anchor=anchor, label=label)


@dataclass(frozen=True)
class ShellRule:
    k_max: int = 60
    window: int = 10
    cap: float = 1e12
    diverge_ratio: float = 0.98
    converge_ratio: float = 0.975
    # a window is erratic when one ratio is this far (as a factor) from the window's geometric mean
    erratic_factor: float = 4.0


DEFAULT_RULE = ShellRule()


@dataclass(frozen=True)
class Coordinates:
    """A monotone increasing change of variable u = forward(y) used to lay out shells.

    ``dist(side, y)`` must return |forward(y) - u_end| and ``offset_inverse(side, t)``
    its inverse, both without cancellation near the endpoint.
    """

    forward: Callable
    inverse: Callable
    jacobian: Callable
    u_l: float
    u_r: float
    dist: Optional[Callable] = None
    offset_inverse: Optional[Callable] = None
    label: str = "u"

    def u_end(self, side):
        return self.u_l if side == "l" else self.u_r


class _Geometry:
    """Shell k is the parameter range between P(k) and P(k+1); y(p) maps back to the state."""

    def __init__(self, endpoint: float, z: float, side: str, coords: Optional[Coordinates]):
        self.side = side
        self.sign = -1.0 if side == "l" else 1.0  # direction from z towards the endpoint
        self.coords = coords
        self.endpoint = endpoint
        self.z = z
        if coords is None:
            self.u_e = endpoint
            self.u_z = z
        else:
            self.u_e = coords.u_end(side)
            self.u_z = float(coords.forward(np.array([z]))[0])
        self.finite = math.isfinite(self.u_e)
        if self.finite:
            self.span = abs(self.u_z - self.u_e)
        else:
            self.w = max(abs(self.u_z), 1.0)

    def P(self, k):
        k = np.asarray(k, dtype=float)
        if self.finite:
            return self.span * np.exp2(-k)
        return self.w * (np.exp2(k) - 1.0)

    def shell_p(self, k):
        a, b = self.P(k), self.P(k + 1)
        return (min(a, b), max(a, b))

    def y_of_p(self, p):
        p = np.asarray(p, dtype=float)
        c = self.coords
        if self.finite:
            if c is None:
                return self.endpoint - self.sign * p
            if c.offset_inverse is not None:
                return np.asarray(c.offset_inverse(self.side, p), dtype=float)
            return np.asarray(c.inverse(self.u_e - self.sign * p), dtype=float)
        if c is None:
            return self.z + self.sign * p
        return np.asarray(c.inverse(self.u_z + self.sign * p), dtype=float)

    def p_of_y(self, y):
        y = np.asarray(y, dtype=float)
        c = self.coords
        if self.finite:
            if c is None:
                return np.abs(y - self.endpoint)
            if c.dist is not None:
                return np.asarray(c.dist(self.side, y), dtype=float)
            return np.abs(np.asarray(c.forward(y), dtype=float) - self.u_e)
        if c is None:
            return np.abs(y - self.z)
        return np.abs(np.asarray(c.forward(y), dtype=float) - self.u_z)

    def dy_dp(self, y):
        if self.coords is None:
            return np.ones(np.shape(y))
        return 1.0 / np.asarray(self.coords.jacobian(y), dtype=float)

    def y_range(self, k):
        """State-space bounds (lo, hi) of shell k, with lo < hi."""
        ya, yb = self.y_of_p(np.array(self.shell_p(k)))
        return (min(ya, yb), max(ya, yb))


def _shell_pieces(geo: _Geometry, k: int, hints: EndpointHints, atoms, engine: QuadratureEngine, max_panels):
    """Initial panels (in p) for shell k, plus the atoms it contains."""
    p_lo, p_hi = geo.shell_p(k)
    y_lo, y_hi = geo.y_range(k)
    closed = "right" if geo.side == "l" else "left"
    ay, aw = atoms.in_range(y_lo, y_hi, closed) if atoms is not None else (np.empty(0), np.empty(0))
    cuts = [ay] if ay.size else []
    for bp in hints.breakpoints:
        pts = np.asarray(bp(y_lo, y_hi), dtype=float).reshape(-1)
        cuts.append(pts[(pts > y_lo) & (pts < y_hi)])
    if cuts:
        cy = np.concatenate(cuts)
        cp = geo.p_of_y(cy)
        cp = cp[(cp > p_lo) & (cp < p_hi)]
        edges = np.unique(np.concatenate([[p_lo], cp, [p_hi]]))
    else:
        edges = np.array([p_lo, p_hi])
    lo, hi = edges[:-1], edges[1:]
    if hints.phase_scale:
        phases = [(lambda ph: (lambda p: ph(geo.y_of_p(p))))(ph) for ph in hints.phase_scale]
        step = math.pi / max(engine.oscillation_panels_per_period, 1)
        res = phase_panels(lo, hi, phases, step, max_panels)
        if res is None:
            return None, ay, aw
        lo, hi = res
    if lo.size > max_panels:
        return None, ay, aw
    return (lo, hi), ay, aw


def _decide(masses, rule: ShellRule, engine: QuadratureEngine):
    """Apply the shell rule to masses a_0..a_k.

    Returns (kind, r_bar, note) with kind in {"diverge", "converge", "negligible", "erratic", None}.
    """
    W = rule.window
    if len(masses) < W + 1:
        return None, math.nan, ""
    win = np.asarray(masses[-(W + 1):], dtype=float)
    tiny = win <= engine.abs_tol
    if np.all(tiny):
        return "negligible", 0.0, f"last {W + 1} shell masses below abs_tol"
    if np.any(tiny):
        return "erratic", math.nan, "some shell masses in the window vanish"
    ratios = win[1:] / win[:-1]
    r_bar = float(np.exp(np.mean(np.log(ratios))))
    spread = float(np.max(np.abs(np.log(ratios) - math.log(r_bar))))
    if spread > math.log(rule.erratic_factor):
        return "erratic", r_bar, f"shell ratios erratic (spread factor {math.exp(spread):.3g})"
    if r_bar >= rule.diverge_ratio:
        return "diverge", r_bar, f"geometric shell ratio {r_bar:.4f} >= {rule.diverge_ratio}"
    if r_bar <= rule.converge_ratio:
        return "converge", r_bar, f"geometric shell ratio {r_bar:.4f} <= {rule.converge_ratio}"
    return None, r_bar, f"geometric shell ratio {r_bar:.4f} undecided"


def l1loc_test(f: Callable, nu: Optional[SignedMeasure], endpoint: float, z: float,
               engine: QuadratureEngine = DEFAULT_ENGINE, coords: Optional[Coordinates] = None,
               integrand_exponent: Optional[float] = None, hints: Optional[EndpointHints] = None,
               rule: ShellRule = DEFAULT_RULE, label: str = "") -> ConvergenceVerdict:
    """Decide whether int_(endpoint, z) |f| dnu is finite.

    ``endpoint`` is the location of the endpoint (it may be +-inf); the side is
    read off from its position relative to ``z``.  ``nu`` must be a positive
    measure (None means Lebesgue).
    """
    if nu is None:
        nu = lebesgue()
    side = "l" if endpoint < z else "r"
    h = nu.hints[side]
    if hints is not None:
        h = h.merge(hints)
    geo = _Geometry(endpoint, z, side, coords)
    atoms = None if nu.atoms.empty else nu.atoms

    def integrand(p):
        y = geo.y_of_p(p)
        fy = np.asarray(f(y), dtype=float)
        dens = nu.dens(y)
        out = np.abs(fy * dens) * geo.dy_dp(y)
        if nu.zero_density:
            out = np.zeros(np.shape(p))
        if not np.all(np.isfinite(out)):
            bad = ~np.isfinite(out)
            raise EvaluationError("integrand", float(np.asarray(y).reshape(-1)[np.argmax(bad.reshape(-1))]),
                                  "overflow" if np.all(np.isinf(out[bad])) else "not a number")
        return out

    masses: List[float] = []
    total = 0.0
    budget = engine.shell_panel_budget
    used = 0
    stop_note = ""
    outcome = None
    last = (None, math.nan, "")
    for k in range(rule.k_max + 1):
        p_lo, p_hi = geo.shell_p(k)
        if not (p_hi > p_lo) or not (p_lo > 0 or not geo.finite):
            stop_note = f"shell {k} is below floating-point resolution"
            break
        y_lo, y_hi = geo.y_range(k)
        if not (y_hi > y_lo):
            stop_note = f"shell {k} is below floating-point resolution in the state variable"
            break
        try:
            pieces, ay, aw = _shell_pieces(geo, k, h, atoms, engine, budget - used)
        except AtomBudgetError as exc:
            stop_note = f"shell {k}: {exc}"
            break
        if pieces is None:
            stop_note = f"panel budget reached at shell {k}"
            break
        lo, hi = pieces
        try:
            res = integrate_panels(integrand, lo, hi, engine=engine,
                                   max_subdivisions=max(budget - used - lo.size, 0), raise_on_fail=False)
            amass = 0.0
            if ay.size:
                fa = np.abs(np.asarray(f(ay), dtype=float) * aw)
                if not np.all(np.isfinite(fa)):
                    raise EvaluationError("integrand at atoms", float(ay[np.argmax(~np.isfinite(fa))]), "overflow")
                amass = float(np.sum(fa))
        except EvaluationError as exc:
            if "overflow" in str(exc):
                masses.append(math.inf)
                outcome = ("diverge_cap", f"integrand overflows in shell {k} ({exc})")
            else:
                stop_note = f"evaluation failed in shell {k}: {exc}"
            break
        except QuadratureError as exc:
            stop_note = f"quadrature failed in shell {k}: {exc}"
            break
        used += res.panels
        if not bool(res.converged[0]):
            stop_note = f"panel budget exhausted inside shell {k}"
            break
        a_k = float(res.value[0]) + amass
        masses.append(a_k)
        total += a_k
        if not math.isfinite(total) or total > rule.cap:
            outcome = ("diverge_cap", f"partial sum {total:.4g} exceeds cap {rule.cap:g} at shell {k}")
            break
        last = _decide(masses, rule, engine)
        kind, r_bar, note = last
        if kind == "diverge":
            outcome = ("diverge", note)
            break
        if kind == "negligible":
            outcome = ("converge", note, 0.0)
            break
        if kind == "converge":
            tail = masses[-1] * r_bar / (1.0 - r_bar)
            if tail <= engine.rel_tol * total or tail <= engine.abs_tol:
                outcome = ("converge", note + "; tail below tolerance", tail)
                break
    else:
        stop_note = f"reached K_max={rule.k_max}"

    shells = list(enumerate(masses))
    verdict = None
    if outcome is None:
        kind, r_bar, note = last
        if kind == "converge":
            tail = masses[-1] * r_bar / (1.0 - r_bar)
            outcome = ("converge", f"{note}; {stop_note}; geometric tail extrapolated", tail)
        else:
            reason = note or "too few shells"
            verdict = ConvergenceVerdict(Status.INCONCLUSIVE, math.nan, shells, False,
                                         f"{stop_note}; {reason}", endpoint=endpoint, anchor=z,
                                         label=label, panels=used)
    if verdict is None:
        if outcome[0] == "converge":
            tail = float(outcome[2])
            verdict = ConvergenceVerdict(Status.CONVERGENT, total + tail, shells, False, outcome[1],
                                         tail=tail, endpoint=endpoint, anchor=z, label=label, panels=used)
        else:
            verdict = ConvergenceVerdict(Status.DIVERGENT, math.nan, shells, outcome[0] == "diverge_cap",
                                         outcome[1], endpoint=endpoint, anchor=z, label=label, panels=used)

    if integrand_exponent is not None:
        p = float(integrand_exponent)
        conv = p > -1 if math.isfinite(endpoint) else p < -1
        note = f"integrand exponent hint p={p:g} decides ({'convergent' if conv else 'divergent'}); shells: {verdict.decision_note}"
        if conv:
            est = verdict.estimate if verdict.convergent else math.nan
            verdict = ConvergenceVerdict(Status.CONVERGENT, est, shells, False, note, verdict.interior,
                                         verdict.tail, endpoint, z, label, used)
        else:
            verdict = ConvergenceVerdict(Status.DIVERGENT, math.nan, shells, verdict.cap_hit, note,
                                         endpoint=endpoint, anchor=z, label=label, panels=used)
    return verdict


# ----------------------------------------------------------- scale function


class _GenericSide:
    """rho and s on the part of J between the anchor c and one endpoint."""

    def __init__(self, owner: "ScaleFunction", side: str):
        self.owner = owner
        d = owner.d
        self.side = side
        self.end = d.J.endpoint(side)
        self.geo = _Geometry(self.end, d.c, side, None)
        self.I_knot = [0.0]      # int_c^{y_k} q at knot k (knot 0 is c)
        self.masses: List[float] = []  # int of rho over shell k
        self.limit_verdict: Optional[ConvergenceVerdict] = None

    def knot(self, k):
        return float(self.geo.y_of_p(self.geo.P(k)))

    def shell_of(self, y):
        p = self.geo.p_of_y(y)
        geo = self.geo
        with np.errstate(divide="ignore"):
            if geo.finite:
                k = np.floor(-np.log2(p / geo.span))
            else:
                k = np.floor(np.log2(p / geo.w + 1.0))
        k = np.clip(k, 0, 1100).astype(np.int64)
        # guard against rounding at the knots
        pk = geo.P(k)
        if geo.finite:
            k = np.where(p > pk, k - 1, k)
            k = np.where(p < geo.P(k + 1), k + 1, k)
        else:
            k = np.where(p < pk, k - 1, k)
            k = np.where(p > geo.P(k + 1), k + 1, k)
        return np.maximum(k, 0)

    def _extend_I(self, kmax):
        q = self.owner.d.q
        eng = self.owner.engine
        while len(self.I_knot) <= kmax + 1:
            k0 = len(self.I_knot) - 1
            ks = np.arange(k0, min(k0 + 64, kmax + 2))
            a = np.array([self.knot(k) for k in ks])
            b = np.array([self.knot(k + 1) for k in ks])
            res = integrate_panels(q, a, b, np.arange(ks.size), ks.size, eng)
            cum = self.I_knot[-1] + np.cumsum(res.value)
            self.I_knot.extend(cum.tolist())

    def log_rho(self, y):
        y = np.asarray(y, dtype=float)
        k = self.shell_of(y)
        with self.owner.lock:
            self._extend_I(int(k.max()) if k.size else 0)
            I0 = np.array(self.I_knot)[k]
        a = np.array([self.knot(kk) for kk in np.unique(k)])
        knots = dict(zip(np.unique(k).tolist(), a.tolist()))
        start = np.array([knots[kk] for kk in k.tolist()])
        res = integrate_panels(self.owner.d.q, start, y, np.arange(y.size), y.size, self.owner.engine)
        return -(I0 + res.value)

    def _extend_masses(self, kmax):
        eng = self.owner.engine
        rho = self.owner.rho
        while len(self.masses) <= kmax:
            k0 = len(self.masses)
            ks = np.arange(k0, min(k0 + 16, kmax + 1))
            lo = np.array([min(self.knot(k), self.knot(k + 1)) for k in ks])
            hi = np.array([max(self.knot(k), self.knot(k + 1)) for k in ks])
            res = integrate_panels(rho, lo, hi, np.arange(ks.size), ks.size, eng)
            self.masses.extend(res.value.tolist())

    def limit(self):
        if self.limit_verdict is None:
            rho = self.owner.rho
            v = l1loc_test(rho, None, self.end, self.owner.d.c, self.owner.engine,
                           label=f"s({self.side}) via int rho")
            with self.owner.lock:
                if self.limit_verdict is None:
                    self.limit_verdict = v
                    if len(self.masses) < len(v.shells):
                        self.masses = [a for _, a in v.shells]
        v = self.limit_verdict
        if v.convergent:
            return self.geo.sign * v.estimate, v
        if v.divergent:
            return self.geo.sign * math.inf, v
        return math.nan, v

    def tail_after(self, K):
        """Estimated mass of shells K+1, K+2, ... from the last window of computed shells."""
        m = np.asarray(self.masses[:K + 1])
        W = min(10, m.size - 1)
        if W < 1 or m[-1] <= 0:
            return 0.0
        r = (m[-1] / m[-1 - W]) ** (1.0 / W) if m[-1 - W] > 0 else 0.0
        if r >= 1:
            return math.inf
        return float(m[-1] * r / (1 - r))

    def s_and_dist(self, y):
        """(s(y), |s(y) - s(end)|) for y on this side."""
        y = np.asarray(y, dtype=float)
        k = self.shell_of(y)
        lim, v = self.limit()
        need = int(k.max()) + 1 if k.size else 0
        with self.owner.lock:
            self._extend_masses(max(need, len(self.masses) - 1))
            m = np.array(self.masses)
        K = m.size - 1
        tail = self.tail_after(K) if v.convergent else math.inf
        suffix = np.concatenate([np.cumsum(m[::-1])[::-1], [0.0]]) + tail  # suffix[j] = sum_{i>=j}
        prefix = np.concatenate([[0.0], np.cumsum(m)])                     # prefix[j] = sum_{i<j}
        rho = self.owner.rho
        inner = np.array([self.knot(kk + 1) for kk in k.tolist()])
        outer = np.array([self.knot(kk) for kk in k.tolist()])
        # gap from the knot nearer the endpoint up to y, and from the knot nearer c down to y
        g_in = integrate_panels(rho, np.minimum(inner, y), np.maximum(inner, y), np.arange(y.size), y.size,
                                self.owner.engine).value
        g_out = integrate_panels(rho, np.minimum(outer, y), np.maximum(outer, y), np.arange(y.size), y.size,
                                 self.owner.engine).value
        s_abs = prefix[k] + g_out  # |s(y)| = int between c and y
        dist = suffix[k + 1] + g_in if v.convergent else np.full(y.shape, math.inf)
        return self.geo.sign * s_abs, dist


class ScaleFunction:
    """rho and s for one diffusion, with memoised knot tables (thread safe)."""

    def __init__(self, d: DiffusionSpec, engine: QuadratureEngine = DEFAULT_ENGINE):
        self.d = d
        self.engine = engine
        self.lock = threading.RLock()
        self._sides = {}
        self._limits = {}

    @property
    def kind(self):
        if self.d.scale_map is not None:
            return "map"
        if self.d.driftless:
            return "driftless"
        return "generic"

    def _side(self, side) -> _GenericSide:
        with self.lock:
            if side not in self._sides:
                self._sides[side] = _GenericSide(self, side)
            return self._sides[side]

    def _split(self, y):
        y = np.asarray(y, dtype=float)
        return y, y < self.d.c, y > self.d.c

    def rho(self, y):
        y_arr = np.asarray(y, dtype=float)
        flat = y_arr.reshape(-1)
        if self.kind == "map":
            out = np.asarray(self.d.scale_map.rho(flat), dtype=float)
        elif self.kind == "driftless":
            out = np.ones(flat.shape)
        else:
            out = np.zeros(flat.shape)
            for side, m in (("l", flat < self.d.c), ("r", flat > self.d.c)):
                if np.any(m):
                    out[m] = self._side(side).log_rho(flat[m])
            out = np.exp(out)
        return out.reshape(y_arr.shape) if y_arr.ndim else float(out[0])

    def s(self, y):
        y_arr = np.asarray(y, dtype=float)
        flat = y_arr.reshape(-1)
        if self.kind == "map":
            out = np.asarray(self.d.scale_map.s(flat), dtype=float)
        elif self.kind == "driftless":
            out = flat - self.d.c
        else:
            out = np.zeros(flat.shape)
            for side, m in (("l", flat < self.d.c), ("r", flat > self.d.c)):
                if np.any(m):
                    out[m] = self._side(side).s_and_dist(flat[m])[0]
        return out.reshape(y_arr.shape) if y_arr.ndim else float(out[0])

    def limit(self, side: str):
        """(s(endpoint), verdict)."""
        with self.lock:
            if side in self._limits:
                return self._limits[side]
        end = self.d.J.endpoint(side)
        sign = -1.0 if side == "l" else 1.0
        if self.kind == "map":
            val = self.d.scale_map.s_l if side == "l" else self.d.scale_map.s_r
            st = Status.CONVERGENT if math.isfinite(val) else Status.DIVERGENT
            out = (val, closed_form_verdict(st, abs(val), "closed-form scale map", end, self.d.c,
                                            f"s({side})"))
        elif self.kind == "driftless":
            if math.isfinite(end):
                out = (end - self.d.c, closed_form_verdict(Status.CONVERGENT, abs(end - self.d.c),
                                                           "rho = 1 (no drift)", end, self.d.c, f"s({side})"))
            else:
                out = (sign * math.inf, closed_form_verdict(Status.DIVERGENT, math.nan, "rho = 1 (no drift)",
                                                            end, self.d.c, f"s({side})"))
        else:
            out = self._side(side).limit()
        with self.lock:
            self._limits[side] = out
        return out

    def dist(self, side: str, y):
        """|s(y) - s(endpoint)|, accurate close to that endpoint; inf if s(endpoint) is infinite."""
        y_arr = np.asarray(y, dtype=float)
        flat = y_arr.reshape(-1)
        if self.kind == "map":
            m = self.d.scale_map
            if m.dist is not None:
                out = np.asarray(m.dist(side, flat), dtype=float)
            else:
                lim = m.s_l if side == "l" else m.s_r
                out = np.abs(np.asarray(m.s(flat), dtype=float) - lim)
        elif self.kind == "driftless":
            out = np.abs(flat - self.d.J.endpoint(side))
        else:
            lim, v = self.limit(side)
            if not v.convergent:
                out = np.full(flat.shape, math.inf)
            else:
                out = np.zeros(flat.shape)
                near = flat < self.d.c if side == "l" else flat > self.d.c
                if np.any(near):
                    out[near] = self._side(side).s_and_dist(flat[near])[1]
                if np.any(~near):
                    out[~near] = np.abs(lim) + np.abs(self.s(flat[~near]))
                    far = (flat[~near] == self.d.c)
                    if np.any(far):
                        tmp = out[~near]
                        tmp[far] = abs(lim)
                        out[~near] = tmp
        return out.reshape(y_arr.shape) if y_arr.ndim else float(out[0])

    def coordinates(self) -> Optional[Coordinates]:
        """Natural-scale coordinates when an exact scale map is known."""
        m = self.d.scale_map
        if m is None:
            return None
        return Coordinates(m.s, m.s_inv, m.rho, m.s_l, m.s_r, m.dist, m.offset_inverse, "s")


_cache = weakref.WeakKeyDictionary()
_cache_lock = threading.Lock()


def scale_function(d: DiffusionSpec, engine: QuadratureEngine = DEFAULT_ENGINE) -> ScaleFunction:
    with _cache_lock:
        per = _cache.get(d)
        if per is None:
            per = {}
            _cache[d] = per
        sf = per.get(engine)
        if sf is None:
            sf = ScaleFunction(d, engine)
            per[engine] = sf
        return sf


def rho(d: DiffusionSpec, x, engine: QuadratureEngine = DEFAULT_ENGINE):
    return scale_function(d, engine).rho(x)


def scale(d: DiffusionSpec, x, engine: QuadratureEngine = DEFAULT_ENGINE):
    sf = scale_function(d, engine)
    out = sf.s(x)
    xs = np.asarray(x, dtype=float).reshape(-1)
    if xs.size > 1:
        o = np.asarray(out).reshape(-1)
        order = np.argsort(xs, kind="stable")
        xo, so = xs[order], o[order]
        distinct = np.diff(xo) > 0
        if np.any(np.diff(so)[distinct] <= 0):
            raise ArithmeticError("computed scale function is not strictly increasing on the query set")
    return out


def scale_limit(d: DiffusionSpec, endpoint: str, engine: QuadratureEngine = DEFAULT_ENGINE):
    """(s(endpoint), ConvergenceVerdict); the value is nan when the verdict is Inconclusive."""
    return scale_function(d, engine).limit(endpoint)
