"""Coefficient functions, DC functions, measures and the measure nu_g."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .quadrature import DEFAULT_ENGINE, QuadratureEngine, QuadratureError, integrate_panels

SIDES = ("l", "r")


class EvaluationError(ValueError):
    """A coefficient or test function could not be evaluated at a queried point."""

    def __init__(self, what: str, x, detail: str = ""):
        msg = f"{what} is not finite at x={x!r}"
        if detail:
            msg = f"{what} failed at x={x!r}: {detail}"
        super().__init__(msg)
        self.what = what
        self.x = x


# ------------------------------------------------------------- interval


def _as_end(v) -> float:
    if isinstance(v, str):
        v = v.strip().lower()
        if v in ("inf", "+inf"):
            return math.inf
        if v == "-inf":
            return -math.inf
    return float(v)


@dataclass(frozen=True)
class Interval:
    l: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "l", _as_end(self.l))
        object.__setattr__(self, "r", _as_end(self.r))
        if math.isnan(self.l) or math.isnan(self.r) or not self.l < self.r:
            raise ValueError(f"need l < r, got ({self.l}, {self.r})")

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        out = (x > self.l) & (x < self.r)
        return bool(out) if out.ndim == 0 else out

    def endpoint(self, side: str) -> float:
        return self.l if side == "l" else self.r

    def to_json(self):
        def enc(v):
            if math.isinf(v):
                return "inf" if v > 0 else "-inf"
            return v
        return [enc(self.l), enc(self.r)]


# ---------------------------------------------------------------- hints


@dataclass(frozen=True)
class EndpointHints:
    """What is known about a function near one endpoint.

    ``phase_scale`` holds phase functions (``1/x`` for ``sin(1/x)``) used to
    pre-split shells; ``breakpoints`` holds callables ``(lo, hi) -> points``
    listing kinks or jumps inside ``(lo, hi)``.
    """

    power_exponent: Optional[float] = None
    oscillatory: bool = False
    phase_scale: Tuple[Callable, ...] = ()
    breakpoints: Tuple[Callable, ...] = ()

    def merge(self, other: "EndpointHints") -> "EndpointHints":
        return EndpointHints(
            power_exponent=None,
            oscillatory=self.oscillatory or other.oscillatory,
            phase_scale=self.phase_scale + other.phase_scale,
            breakpoints=self.breakpoints + other.breakpoints,
        )

    def mirrored(self) -> "EndpointHints":
        phases = tuple((lambda f: (lambda x: f(-np.asarray(x))))(p) for p in self.phase_scale)
        bps = tuple((lambda f: (lambda lo, hi: -np.asarray(f(-hi, -lo), dtype=float)))(b)
                    for b in self.breakpoints)
        return EndpointHints(self.power_exponent, self.oscillatory, phases, bps)


NO_HINTS = EndpointHints()


def _hints_dict(h) -> Dict[str, EndpointHints]:
    if h is None:
        return {"l": NO_HINTS, "r": NO_HINTS}
    out = {"l": NO_HINTS, "r": NO_HINTS}
    out.update(h)
    return out


def merge_hints(*items) -> Dict[str, EndpointHints]:
    out = {}
    for side in SIDES:
        acc = NO_HINTS
        for h in items:
            acc = acc.merge(_hints_dict(h)[side])
        out[side] = acc
    return out


def _checked(fn, what, x):
    try:
        with np.errstate(all="ignore"):
            val = np.asarray(fn(x), dtype=float)
    except EvaluationError:
        raise
    except Exception as exc:  # expression domain errors and the like
        xs = np.asarray(x)
        raise EvaluationError(what, xs.tolist() if xs.size == 1 else "array", str(exc)) from exc
    if val.shape != np.shape(x):
        val = np.broadcast_to(val, np.shape(x)).copy()
    if not np.all(np.isfinite(val)):
        xs = np.asarray(x, dtype=float)
        bad = ~np.isfinite(val)
        where = float(xs.reshape(-1)[np.argmax(bad.reshape(-1))]) if xs.ndim else float(xs)
        raise EvaluationError(what, where)
    return val


# --------------------------------------------------- coefficient function


@dataclass(frozen=True, eq=False)
class CoefficientFunction:
    fn: Callable
    hints: Dict[str, EndpointHints] = field(default_factory=lambda: _hints_dict(None))
    label: str = ""
    constant: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "hints", _hints_dict(self.hints))

    def __call__(self, x):
        if self.constant is not None:
            return np.full(np.shape(x), self.constant) if np.ndim(x) else float(self.constant)
        out = _checked(self.fn, self.label or "coefficient", x)
        return out if np.ndim(x) else float(out)

    @classmethod
    def const(cls, value: float, label: Optional[str] = None):
        value = float(value)
        return cls(lambda x, v=value: np.full(np.shape(x), v), None, label or repr(value), value)

    def hint(self, side: str) -> EndpointHints:
        return self.hints[side]

    def mirrored(self, sign: float = 1.0) -> "CoefficientFunction":
        fn = self.fn
        const = None if self.constant is None else sign * self.constant
        return CoefficientFunction(
            lambda x: sign * np.asarray(fn(-np.asarray(x, dtype=float)), dtype=float),
            {"l": self.hints["r"].mirrored(), "r": self.hints["l"].mirrored()},
            f"mirror({self.label})", const)


def power_hint_consistent(fn, endpoint: float, p: float, z: float, n: int = 200, C: float = 1e3) -> bool:
    """Sample |fn(x)| / |x - endpoint|^p between endpoint and z; True if it stays in [1/C, C]."""
    t = np.geomspace(1e-12, 1.0, n)
    if math.isinf(endpoint):
        x = z + np.sign(endpoint) * (1.0 / t - 1.0 + 1.0)
        dist = np.abs(x)
    else:
        x = endpoint + (z - endpoint) * t
        dist = np.abs(x - endpoint)
    with np.errstate(all="ignore"):
        q = np.abs(np.asarray(fn(x), dtype=float)) / dist ** p
    m = np.nanmax(q) / max(np.nanmin(q), 1e-300)
    return bool(np.all(np.isfinite(q)) and m <= C * C)


# ------------------------------------------------------------------ atoms


class AtomBudgetError(RuntimeError):
    pass


class Atoms:
    """A locally finite collection of point masses."""

    def in_range(self, lo: float, hi: float, closed: str = "right"):
        """Locations and weights with lo < y <= hi (closed="right") or lo <= y < hi ("left")."""
        raise NotImplementedError

    def scaled(self, c: float) -> "Atoms":
        return _Mapped(self, lambda w: c * w)

    def absolute(self) -> "Atoms":
        return _Mapped(self, np.abs)

    def mirrored(self) -> "Atoms":
        return _Mirror(self)

    @property
    def empty(self) -> bool:
        return False

    def describe(self) -> str:
        return type(self).__name__


class FiniteAtoms(Atoms):
    def __init__(self, locs=(), weights=()):
        locs = np.asarray(locs, dtype=float).reshape(-1)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if locs.shape != weights.shape:
            raise ValueError("atom locations and weights differ in length")
        order = np.argsort(locs, kind="stable")
        self.locs = locs[order]
        self.weights = weights[order]

    def in_range(self, lo, hi, closed="right"):
        if closed == "right":
            m = (self.locs > lo) & (self.locs <= hi)
        else:
            m = (self.locs >= lo) & (self.locs < hi)
        return self.locs[m], self.weights[m]

    @property
    def empty(self):
        return self.locs.size == 0

    def describe(self):
        return f"{self.locs.size} atoms"


NO_ATOMS = FiniteAtoms()


class AtomSequence(Atoms):
    """Atoms y_n, w_n (n = n_start, n_start+1, ...) with y_n strictly monotone in n.

    ``rule`` maps an integer array n to (y_n, w_n).  Locations within any
    range are found by bisection on n, so enumeration is exact and lazy.
    """

    def __init__(self, rule: Callable, n_start: int = 1, max_per_query: int = 2 ** 22, label: str = ""):
        self.rule = rule
        self.n_start = int(n_start)
        self.max_per_query = max_per_query
        self.label = label
        y0 = self._y(self.n_start)
        y1 = self._y(self.n_start + 1)
        self.decreasing = y1 < y0

    def _y(self, n) -> float:
        y, _ = self.rule(np.array([n], dtype=np.int64))
        return float(np.asarray(y)[0])

    def _first(self, pred) -> int:
        """Smallest n >= n_start with pred(y_n) true; pred must be monotone in n."""
        n = self.n_start
        if pred(self._y(n)):
            return n
        step = 1
        hi = n + step
        while not pred(self._y(hi)):
            n = hi
            step *= 2
            hi = n + step
            if hi > 2 ** 62:
                return 2 ** 62
        lo = n  # pred false at lo, true at hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if pred(self._y(mid)):
                hi = mid
            else:
                lo = mid
        return hi

    def in_range(self, lo, hi, closed="right"):
        if closed == "right":
            if self.decreasing:
                n1 = self._first(lambda y: y <= hi)
                n2 = self._first(lambda y: y <= lo)
            else:
                n1 = self._first(lambda y: y > lo)
                n2 = self._first(lambda y: y > hi)
        else:
            if self.decreasing:
                n1 = self._first(lambda y: y < hi)
                n2 = self._first(lambda y: y < lo)
            else:
                n1 = self._first(lambda y: y >= lo)
                n2 = self._first(lambda y: y >= hi)
        count = n2 - n1
        if count <= 0:
            return np.empty(0), np.empty(0)
        if count > self.max_per_query:
            raise AtomBudgetError(f"{count} atoms in ({lo}, {hi}] exceed the enumeration budget")
        n = np.arange(n1, n2, dtype=np.int64)
        y, w = self.rule(n)
        return np.asarray(y, dtype=float), np.asarray(w, dtype=float)

    def describe(self):
        return f"atom sequence {self.label}".strip()


class AtomUnion(Atoms):
    def __init__(self, parts):
        self.parts = [p for p in parts if not p.empty]

    def in_range(self, lo, hi, closed="right"):
        if not self.parts:
            return np.empty(0), np.empty(0)
        ys, ws = zip(*(p.in_range(lo, hi, closed) for p in self.parts))
        y = np.concatenate(ys)
        w = np.concatenate(ws)
        order = np.argsort(y, kind="stable")
        return y[order], w[order]

    @property
    def empty(self):
        return not self.parts

    def describe(self):
        return " + ".join(p.describe() for p in self.parts) or "no atoms"


class _Mapped(Atoms):
    def __init__(self, base, wmap):
        self.base = base
        self.wmap = wmap

    def in_range(self, lo, hi, closed="right"):
        y, w = self.base.in_range(lo, hi, closed)
        return y, np.asarray(self.wmap(w), dtype=float)

    @property
    def empty(self):
        return self.base.empty

    def describe(self):
        return self.base.describe()


class _Mirror(Atoms):
    def __init__(self, base):
        self.base = base

    def in_range(self, lo, hi, closed="right"):
        other = "left" if closed == "right" else "right"
        y, w = self.base.in_range(-hi, -lo, other)
        return -y[::-1], w[::-1]

    @property
    def empty(self):
        return self.base.empty


def combine_atoms(*items) -> Atoms:
    parts = [a for a in items if a is not None and not a.empty]
    if not parts:
        return NO_ATOMS
    if len(parts) == 1:
        return parts[0]
    return AtomUnion(parts)


# ------------------------------------------------------------ DC function


@dataclass(frozen=True, eq=False)
class DCFunction:
    """g given through its value, right derivative and second-derivative measure.

    ``curvature`` may be "convex" or "concave" when that is known by construction.
    """

    value: Callable
    dright: Callable
    second_density: Callable
    atoms: Atoms = NO_ATOMS
    hints: Dict[str, EndpointHints] = field(default_factory=lambda: _hints_dict(None))
    curvature: Optional[str] = None
    label: str = ""
    # optional x -> (g', g'') when both are cheaper together
    joint: Optional[Callable] = None
    # (a, b) when g(x) = a x + b exactly
    affine_form: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        object.__setattr__(self, "hints", _hints_dict(self.hints))
        if self.curvature not in (None, "convex", "concave"):
            raise ValueError(f"curvature must be convex, concave or None, got {self.curvature!r}")

    def __call__(self, x):
        return _checked(self.value, f"g ({self.label})", x)

    def d1(self, x):
        return _checked(self.dright, f"g' ({self.label})", x)

    def d2(self, x):
        return _checked(self.second_density, f"g'' ({self.label})", x)

    def derivatives(self, x):
        if self.joint is None:
            return self.d1(x), self.d2(x)
        d1, d2 = self.joint(x)
        return (_checked(lambda _: d1, f"g' ({self.label})", x),
                _checked(lambda _: d2, f"g'' ({self.label})", x))

    def affine(self, alpha: float, beta: float = 0.0) -> "DCFunction":
        v, d, s = self.value, self.dright, self.second_density
        curv = self.curvature
        if curv is not None and alpha < 0:
            curv = "concave" if curv == "convex" else "convex"
        return DCFunction(
            lambda x: alpha * np.asarray(v(x)) + beta,
            lambda x: alpha * np.asarray(d(x)),
            lambda x: alpha * np.asarray(s(x)),
            self.atoms.scaled(alpha), self.hints, curv if alpha != 0 else None,
            f"{alpha}*({self.label})+{beta}")

    def mirrored(self) -> "DCFunction":
        """x -> g(-x).  The right derivative of the mirror image equals minus the
        left derivative of g, which agrees with -g'(-x) away from atoms."""
        v, d, s = self.value, self.dright, self.second_density
        return DCFunction(
            lambda x: v(-np.asarray(x, dtype=float)),
            lambda x: -np.asarray(d(-np.asarray(x, dtype=float))),
            lambda x: s(-np.asarray(x, dtype=float)),
            self.atoms.mirrored(),
            {"l": self.hints["r"].mirrored(), "r": self.hints["l"].mirrored()},
            self.curvature, f"mirror({self.label})")


def linear_combination(a: float, g1: DCFunction, b: float, g2: DCFunction) -> DCFunction:
    return DCFunction(
        lambda x: a * np.asarray(g1.value(x)) + b * np.asarray(g2.value(x)),
        lambda x: a * np.asarray(g1.dright(x)) + b * np.asarray(g2.dright(x)),
        lambda x: a * np.asarray(g1.second_density(x)) + b * np.asarray(g2.second_density(x)),
        combine_atoms(g1.atoms.scaled(a), g2.atoms.scaled(b)),
        merge_hints(g1.hints, g2.hints), None,
        f"{a}*({g1.label}) + {b}*({g2.label})")


def dc_from_derivative(dright, second_density, atoms=NO_ATOMS, anchor=1.0, anchor_value=0.0,
                       hints=None, curvature=None, label="", engine: QuadratureEngine = DEFAULT_ENGINE):
    """Build g with g(anchor) = anchor_value by integrating the right derivative."""

    def value(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        lo = np.minimum(flat, anchor)
        hi = np.maximum(flat, anchor)
        edges_lo, edges_hi, grp = [], [], []
        for i, (a, b) in enumerate(zip(lo, hi)):
            if a == b:
                continue
            pts = [a, b]
            if not atoms.empty:
                y, _ = atoms.in_range(a, b)
                pts = np.concatenate([[a], y[(y > a) & (y < b)], [b]])
            pts = np.asarray(pts)
            edges_lo.append(pts[:-1])
            edges_hi.append(pts[1:])
            grp.append(np.full(pts.size - 1, i))
        out = np.zeros(flat.shape)
        if edges_lo:
            res = integrate_panels(dright, np.concatenate(edges_lo), np.concatenate(edges_hi),
                                   np.concatenate(grp), flat.size, engine)
            out = np.where(flat >= anchor, res.value, -res.value)
        out = anchor_value + out
        return out.reshape(x.shape) if x.ndim else float(out[0])

    return DCFunction(value, dright, second_density, atoms, hints, curvature, label)


# --------------------------------------------------------------- measures


@dataclass(frozen=True, eq=False)
class SignedMeasure:
    density: Callable
    atoms: Atoms = NO_ATOMS
    infinite_points: Tuple[float, ...] = ()
    hints: Dict[str, EndpointHints] = field(default_factory=lambda: _hints_dict(None))
    label: str = ""
    zero_density: bool = False

    def __post_init__(self):
        object.__setattr__(self, "hints", _hints_dict(self.hints))
        object.__setattr__(self, "infinite_points", tuple(sorted(float(p) for p in self.infinite_points)))

    def dens(self, x):
        if self.zero_density:
            return np.zeros(np.shape(x))
        return _checked(self.density, f"density of {self.label or 'measure'}", x)

    def mirrored(self) -> "SignedMeasure":
        d = self.density
        return SignedMeasure(lambda x: d(-np.asarray(x, dtype=float)), self.atoms.mirrored(),
                             tuple(-p for p in self.infinite_points),
                             {"l": self.hints["r"].mirrored(), "r": self.hints["l"].mirrored()},
                             f"mirror({self.label})", self.zero_density)


def lebesgue(label="Lebesgue") -> SignedMeasure:
    return SignedMeasure(lambda x: np.ones(np.shape(x)), label=label)


def density_measure(fn, hints=None, label="") -> SignedMeasure:
    return SignedMeasure(fn, hints=hints, label=label)


def zero_measure() -> SignedMeasure:
    return SignedMeasure(lambda x: np.zeros(np.shape(x)), label="zero", zero_density=True)


def variation_measure(m: SignedMeasure) -> SignedMeasure:
    dens = m.density
    return SignedMeasure(lambda x: np.abs(np.asarray(dens(x), dtype=float)), m.atoms.absolute(),
                         m.infinite_points, m.hints, f"|{m.label}|", m.zero_density)


# ------------------------------------------------------------- diffusions


@dataclass(frozen=True)
class ScaleMap:
    """Exact scale function, its inverse and density for diffusions built by a transform.

    ``offset_inverse(side, t)`` returns the state y with |s(y) - s(endpoint)| = t,
    computed without cancellation near that endpoint.
    """

    s: Callable
    s_inv: Callable
    rho: Callable
    s_l: float
    s_r: float
    offset_inverse: Optional[Callable] = None
    dist: Optional[Callable] = None  # dist(side, y) = |s(y) - s(endpoint)|


@dataclass(frozen=True, eq=False)
class DiffusionSpec:
    J: Interval
    mu: CoefficientFunction
    sigma: CoefficientFunction
    x0: float
    c: float
    scale_map: Optional[ScaleMap] = None
    label: str = ""

    def __post_init__(self):
        if not self.J.contains(self.x0):
            raise ValueError(f"x0={self.x0} is not inside {self.J}")
        if not self.J.contains(self.c):
            raise ValueError(f"c={self.c} is not inside {self.J}")
        for pt in (self.x0, self.c):
            if float(self.sigma(np.array([pt]))[0]) == 0.0:
                raise ValueError(f"sigma vanishes at {pt}")

    @classmethod
    def unchecked(cls, J: Interval, mu: CoefficientFunction, sigma: CoefficientFunction, x0: float,
                  c: Optional[float] = None, label: str = "") -> "DiffusionSpec":
        """Build without the nondegeneracy checks, e.g. sigma = 0 for ODE paths in simulation
        tests (pair with ``check_sigma=False``); not valid input for the classifiers."""
        obj = object.__new__(cls)
        for k, v in (("J", J), ("mu", mu), ("sigma", sigma), ("x0", float(x0)),
                     ("c", float(x0 if c is None else c)), ("scale_map", None), ("label", label)):
            object.__setattr__(obj, k, v)
        return obj

    @property
    def driftless(self) -> bool:
        return self.mu.constant == 0.0

    def q(self, y):
        """2 mu / sigma^2."""
        if self.driftless:
            return np.zeros(np.shape(y))
        s = self.sigma(y)
        return 2.0 * self.mu(y) / (s * s)

    def hints(self, side: str) -> EndpointHints:
        return self.mu.hint(side).merge(self.sigma.hint(side))

    def mirrored(self) -> "DiffusionSpec":
        sm = None
        if self.scale_map is not None:
            m = self.scale_map
            sm = ScaleMap(lambda y: -np.asarray(m.s(-np.asarray(y, dtype=float))),
                          lambda u: -np.asarray(m.s_inv(-np.asarray(u, dtype=float))),
                          lambda y: m.rho(-np.asarray(y, dtype=float)),
                          -m.s_r, -m.s_l,
                          None if m.offset_inverse is None else
                          (lambda side, t: -np.asarray(m.offset_inverse("r" if side == "l" else "l", t))),
                          None if m.dist is None else
                          (lambda side, y: m.dist("r" if side == "l" else "l", -np.asarray(y, dtype=float))))
        return DiffusionSpec(Interval(-self.J.r, -self.J.l), self.mu.mirrored(-1.0), self.sigma.mirrored(),
                             -self.x0, -self.c, sm, f"mirror({self.label})")


def engelbert_schmidt_report(d: DiffusionSpec, compacts=None, n_sample: int = 2001,
                             engine: QuadratureEngine = DEFAULT_ENGINE) -> dict:
    """Sample sigma != 0 and integrate 1/sigma^2 and mu/sigma^2 on compacts of J."""
    if compacts is None:
        compacts = []
        for frac in (0.5, 0.9, 0.99):
            lo = d.J.l + (d.c - d.J.l) * (1 - frac) if math.isfinite(d.J.l) else d.c - 10 * frac / (1 - frac)
            hi = d.J.r - (d.J.r - d.c) * (1 - frac) if math.isfinite(d.J.r) else d.c + 10 * frac / (1 - frac)
            compacts.append((lo, hi))
    rows = []
    ok = True
    for a, b in compacts:
        xs = np.linspace(a, b, n_sample)
        sig = d.sigma(xs)
        zero = bool(np.any(sig == 0))
        try:
            inv = integrate_panels(lambda y: 1.0 / d.sigma(y) ** 2, [a], [b], engine=engine).value[0]
            drift = integrate_panels(lambda y: np.abs(d.mu(y)) / d.sigma(y) ** 2, [a], [b], engine=engine).value[0]
            finite = bool(np.isfinite(inv) and np.isfinite(drift))
        except (QuadratureError, EvaluationError) as exc:
            inv = drift = float("nan")
            finite = False
            rows.append({"compact": [a, b], "error": str(exc)})
        rows.append({"compact": [a, b], "sigma_zero_sampled": zero, "int_inv_sigma2": inv,
                     "int_abs_mu_over_sigma2": drift})
        ok = ok and finite and not zero
    return {"ok": ok, "compacts": rows}


# ------------------------------------------------------------------ nu_g


def nu_g(d: DiffusionSpec, g: DCFunction) -> SignedMeasure:
    """Density g'mu/sigma^2 + g''/2 with atoms of weight w/2."""
    if d.driftless:
        def density(y):
            return 0.5 * g.d2(y)
    else:
        def density(y):
            s = d.sigma(y)
            return g.d1(y) * d.mu(y) / (s * s) + 0.5 * g.d2(y)
    return SignedMeasure(density, g.atoms.scaled(0.5), (),
                         merge_hints(g.hints, d.mu.hints, d.sigma.hints), f"nu_g[{g.label}]")


def dc_consistency_check(g: DCFunction, a: float, b: float, tol: float = 1e-8, abs_tol: float = 1e-12,
                         engine: QuadratureEngine = DEFAULT_ENGINE):
    """Check g'(b) - g'(a) = g''((a, b]) and g(b) - g(a) = int_a^b g'.

    Returns (ok, report).  Quadrature failure raises rather than returning False.
    """
    y, w = g.atoms.in_range(a, b)
    pts = np.concatenate([[a], y[(y > a) & (y < b)], [b]])
    bps = []
    for hp in (g.hints["l"].breakpoints + g.hints["r"].breakpoints):
        bps.append(np.asarray(hp(a, b), dtype=float))
    if bps:
        extra = np.concatenate(bps)
        pts = np.unique(np.concatenate([pts, extra[(extra > a) & (extra < b)]]))
    eng = engine.with_(rel_tol=min(engine.rel_tol, tol * 1e-2), max_subdivisions=2 ** 18)
    i2 = integrate_panels(g.d2, pts[:-1], pts[1:], engine=eng)
    i1 = integrate_panels(g.d1, pts[:-1], pts[1:], engine=eng)
    # quadrature tolerance is relative to the total variation of g' on (a, b]; with
    # large cancelling swings (spikes) the endpoint difference alone is far smaller
    var2 = float(np.sum(integrate_panels(lambda x: np.abs(g.d2(x)), pts[:-1], pts[1:], engine=eng).value)
                 + np.sum(np.abs(w)))
    var1 = float(np.sum(integrate_panels(lambda x: np.abs(g.d1(x)), pts[:-1], pts[1:], engine=eng).value))
    lhs2 = float(g.d1(np.array([b]))[0] - g.d1(np.array([a]))[0])
    rhs2 = float(np.sum(i2.value) + np.sum(w))
    lhs1 = float(g(np.array([b]))[0] - g(np.array([a]))[0])
    rhs1 = float(np.sum(i1.value))
    r2 = abs(lhs2 - rhs2)
    r1 = abs(lhs1 - rhs1)
    ok2 = r2 <= max(tol * max(abs(lhs2), abs(rhs2), var2), abs_tol)
    ok1 = r1 <= max(tol * max(abs(lhs1), abs(rhs1), var1), abs_tol)
    report = {"interval": [a, b], "derivative_residual": r2, "value_residual": r1,
              "atoms_in_range": int(y.size), "atom_mass": float(np.sum(w)),
              "variation": var2}
    return bool(ok1 and ok2), report
