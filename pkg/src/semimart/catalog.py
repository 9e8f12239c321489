"""Named diffusions, test functions g and the preset catalog.

All g's here come with closed-form (or table-plus-zeta-tail) values, so
that the boundary limit and the convex decomposition can be checked
against something independent of the shell integrator.
"""
from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy import special

from .funcmodel import (AtomBudgetError, AtomSequence, AtomUnion, CoefficientFunction, DCFunction,
                        DiffusionSpec, EndpointHints, FiniteAtoms, Interval, ScaleMap,
                        lebesgue)
from .quadrature import NODES, WEIGHTS_K, _rowdot

# breakpoint queries larger than this are refused rather than materialised
MAX_BREAKPOINTS = 2 ** 21


# ------------------------------------------------------------- diffusions


def brownian(l=0.0, r=math.inf, x0=1.0, c=None, label="BM") -> DiffusionSpec:
    return DiffusionSpec(Interval(l, r), CoefficientFunction.const(0.0), CoefficientFunction.const(1.0),
                         x0, x0 if c is None else c, label=label)


def bessel(delta: float, x0=1.0, label=None) -> DiffusionSpec:
    """Bessel process of dimension delta, absorbed at 0: mu = (delta-1)/(2y), sigma = 1."""
    k = 0.5 * (delta - 1.0)
    mu = CoefficientFunction(lambda y: k / np.asarray(y, dtype=float), label=f"({delta}-1)/(2y)")
    return DiffusionSpec(Interval(0.0, math.inf), mu, CoefficientFunction.const(1.0), x0, 1.0,
                         label=label or f"Bessel({delta})")


def squared_bessel(delta: float, x0=1.0, label=None) -> DiffusionSpec:
    """dY = delta dt + 2 sqrt(Y) dW on (0, inf), absorbed at 0."""
    sig = CoefficientFunction(lambda y: 2.0 * np.sqrt(np.asarray(y, dtype=float)), label="2 sqrt(y)")
    return DiffusionSpec(Interval(0.0, math.inf), CoefficientFunction.const(delta), sig, x0, 1.0,
                         label=label or f"BESQ({delta})")


# ------------------------------------------------------------- simple g's


def _arr(x):
    return np.asarray(x, dtype=float)


def g_identity() -> DCFunction:
    return DCFunction(lambda x: _arr(x), lambda x: np.ones(np.shape(x)), lambda x: np.zeros(np.shape(x)),
                      curvature="convex", label="x", affine_form=(1.0, 0.0))


def g_power(p: float) -> DCFunction:
    """x^p on (0, inf)."""
    curv = "convex" if (p >= 1 or p <= 0) else "concave"
    sign = 1.0
    if p < 0:
        curv = "convex"
    return DCFunction(lambda x: sign * _arr(x) ** p, lambda x: sign * p * _arr(x) ** (p - 1),
                      lambda x: sign * p * (p - 1) * _arr(x) ** (p - 2), curvature=curv, label=f"x^{p:g}")


def g_sqrt() -> DCFunction:
    return DCFunction(lambda x: np.sqrt(_arr(x)), lambda x: 0.5 / np.sqrt(_arr(x)),
                      lambda x: -0.25 * _arr(x) ** -1.5, curvature="concave", label="sqrt(x)")


def g_log() -> DCFunction:
    return DCFunction(lambda x: np.log(_arr(x)), lambda x: 1.0 / _arr(x), lambda x: -1.0 / _arr(x) ** 2,
                      curvature="concave", label="log(x)")


def g_xlogx() -> DCFunction:
    return DCFunction(lambda x: _arr(x) * np.log(_arr(x)), lambda x: np.log(_arr(x)) + 1.0,
                      lambda x: 1.0 / _arr(x), curvature="convex", label="x log(x)")


def g_kink(at=1.0, weight=2.0) -> DCFunction:
    """|x - at| scaled so that the atom of g'' at ``at`` has the given weight."""
    s = 0.5 * weight
    return DCFunction(lambda x: s * np.abs(_arr(x) - at), lambda x: s * np.where(_arr(x) >= at, 1.0, -1.0),
                      lambda x: np.zeros(np.shape(x)), FiniteAtoms([at], [weight]),
                      curvature="convex" if weight > 0 else "concave", label=f"|x-{at:g}|")


# ------------------------------------------------- sin(1/x) example


def _fresnel_F(u):
    """An antiderivative of sin(u) u^(-3/2):  -2 sin(u)/sqrt(u) + 2 sqrt(2 pi) C(sqrt(2u/pi))."""
    u = _arr(u)
    _, C = special.fresnel(np.sqrt(2.0 * u / math.pi))
    return -2.0 * np.sin(u) / np.sqrt(u) + 2.0 * math.sqrt(2.0 * math.pi) * C


_F1 = float(_fresnel_F(1.0))


def _phase_inv(x):
    return 1.0 / _arr(x)


def g_example41() -> DCFunction:
    """g' = h = (2 + sin(1/x))/sqrt(x), g(1) = 0."""

    def value(x):
        x = _arr(x)
        return 4.0 * np.sqrt(x) - 4.0 + _F1 - _fresnel_F(1.0 / x)

    def h(x):
        x = _arr(x)
        return (2.0 + np.sin(1.0 / x)) / np.sqrt(x)

    def dh(x):
        x = _arr(x)
        return -0.5 * x ** -1.5 * (2.0 + np.sin(1.0 / x)) - x ** -2.5 * np.cos(1.0 / x)

    hints = {"l": EndpointHints(oscillatory=True, phase_scale=(_phase_inv,))}
    return DCFunction(value, h, dh, hints=hints, label="int_1^x (2+sin(1/y))/sqrt(y) dy")


def _G36(u):
    """An antiderivative of sin(u) u^-3: -sin(u)/(2u^2) - cos(u)/(2u) - Si(u)/2."""
    u = _arr(u)
    si, _ = special.sici(u)
    return -np.sin(u) / (2 * u * u) - np.cos(u) / (2 * u) - 0.5 * si


_G36_1 = float(_G36(1.0))


def _phase_isqrt(x):
    return 1.0 / np.sqrt(_arr(x))


def g_remark36() -> DCFunction:
    """g' = 2 + sin(x^(-1/2)), g(1) = 0."""

    def value(x):
        x = _arr(x)
        return 2.0 * (x - 1.0) + 2.0 * (_G36_1 - _G36(1.0 / np.sqrt(x)))

    def d1(x):
        return 2.0 + np.sin(1.0 / np.sqrt(_arr(x)))

    def d2(x):
        x = _arr(x)
        return -0.5 * x ** -1.5 * np.cos(1.0 / np.sqrt(x))

    hints = {"l": EndpointHints(oscillatory=True, phase_scale=(_phase_isqrt,))}
    return DCFunction(value, d1, d2, hints=hints, label="int_1^x (2+sin(1/sqrt(y))) dy")


# ------------------------------------------------------ spike example


def spike_a(n):
    n = np.asarray(n, dtype=float)
    return 1.0 / n - n ** -4


def spike_b(n):
    n = np.asarray(n, dtype=float)
    return 1.0 / n + n ** -4


def spike_index(x):
    """n >= 2 with a_n <= x < b_n, or 0 outside every spike.

    A point of spike n satisfies |1/x - n| < 1/2, so n = rint(1/x) is the only candidate.
    """
    x = _arr(x)
    out = np.zeros(x.shape, dtype=np.int64)
    ok = (x > 1e-18) & (x < 0.6)
    if not np.any(ok):
        return out
    xs = x[ok]
    nn = np.maximum(np.rint(1.0 / xs), 2.0)
    inside = (spike_a(nn) <= xs) & (xs < spike_b(nn))
    out[ok] = np.where(inside, nn, 0).astype(np.int64)
    return out


def _n_above(x):
    """Number of the last spike lying entirely above x, i.e. the largest n >= 2 with a_n > x
    (spikes containing x excluded); 1 when there are none.  Returned as float to allow huge n."""
    x = _arr(x)
    out = np.ones(x.shape)
    small = x <= 1e-17
    out[small] = np.floor(1.0 / x[small])
    mid = ~small & (x < 0.4375)
    if np.any(mid):
        xs = x[mid]
        n0 = np.floor(1.0 / xs).astype(np.int64)
        best = np.ones(xs.shape, dtype=np.int64)
        for dn in (-2, -1, 0, 1, 2):
            n = n0 + dn
            valid = n >= 2
            nn = np.where(valid, n, 2)
            hit = valid & (spike_a(nn) > xs) & (nn > best)
            best = np.where(hit, nn, best)
        idx = spike_index(xs)
        best = np.where((idx > 0) & (best >= idx), idx - 1, best)
        out[mid] = best
    return out


def _stable_phi_integral(u, v):
    """int_u^v (t^-2 - t^-1/2) dt for 0 < u <= v, without cancellation."""
    u = _arr(u)
    v = _arr(v)
    w = v - u
    return w / (u * v) - 2.0 * w / (np.sqrt(u) + np.sqrt(v))


def _phi(t):
    t = _arr(t)
    return t ** -2 - t ** -0.5


def _smooth(t):
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def _dsmooth(t):
    return 30.0 * t * t * (1.0 - t) ** 2


def _gk(f, a, b):
    """Fixed 15-point Kronrod rule on each [a_i, b_i] (the ramp integrands are polynomial x smooth)."""
    a = _arr(a)
    b = _arr(b)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[..., None] + half[..., None] * NODES
    return half * _rowdot(f(x), WEIGHTS_K)


class SpikeTable:
    """Excess integrals c_n = int over spike n of (h - x^-1/2), their prefix sums and zeta tails.

    With ``smooth`` the spike indicator is replaced by a C^2 ramp of width
    (b_n - a_n)/8 at each side.
    """

    def __init__(self, smooth: bool, n_table: int = 2 ** 17):
        self.smooth = smooth
        self.n_table = n_table
        n = np.arange(2, n_table + 1, dtype=float)
        self.c = self.spike_excess(n)
        self.prefix = np.concatenate([[0.0, 0.0], np.cumsum(self.c)])  # prefix[m] = sum_{n=2}^m c_n
        self.total = float(self.prefix[-1] + self.tail(n_table + 1))

    def delta(self, n):
        return 0.125 * (spike_b(n) - spike_a(n))

    def ramp_up(self, n, upper=None):
        """int_a^{upper} S((x-a)/delta) phi(x) dx, upper defaulting to a + delta."""
        a = spike_a(n)
        d = self.delta(n)
        hi = a + d if upper is None else upper
        return _gk(lambda x: _smooth((x - a[..., None]) / d[..., None]) * _phi(x), a, hi)

    def ramp_down(self, n, lower=None):
        """int_{lower}^b S((b-x)/delta) phi(x) dx, lower defaulting to b - delta."""
        b = spike_b(n)
        d = self.delta(n)
        lo = b - d if lower is None else lower
        return _gk(lambda x: _smooth((b[..., None] - x) / d[..., None]) * _phi(x), lo, b)

    def spike_excess(self, n):
        n = np.asarray(n, dtype=float)
        a, b = spike_a(n), spike_b(n)
        if not self.smooth:
            # c_n = 2 n^-2/(1 - n^-6) - 2 n^-1/2 (sqrt(1+e) - sqrt(1-e)), e = n^-3
            e = n ** -3
            return 2.0 * n ** -2 / (1.0 - n ** -6) - 2.0 * n ** -0.5 * (2.0 * e / (np.sqrt(1 + e) + np.sqrt(1 - e)))
        d = self.delta(n)
        return self.ramp_up(n) + _stable_phi_integral(a + d, b - d) + self.ramp_down(n)

    def tail(self, N):
        """sum_{n >= N} c_n for N beyond the table, from Hurwitz zeta expansions."""
        N = np.asarray(N, dtype=float)
        z = special.zeta
        t = 2.0 * (z(2, N) + z(8, N) + z(14, N)) - 2.0 * (z(3.5, N) + z(9.5, N) / 8 + 7 * z(15.5, N) / 128)
        if self.smooth:
            t = t - 0.25 * (z(2, N) - z(3.5, N))
        return t

    def prefix_sum(self, M):
        """sum_{n=2}^{M} c_n for M >= 1 (float M allowed)."""
        M = _arr(M)
        out = np.empty(M.shape)
        inside = M <= self.n_table
        out[inside] = self.prefix[M[inside].astype(np.int64)]
        if np.any(~inside):
            out[~inside] = self.total - self.tail(M[~inside] + 1.0)
        return out

    def partial(self, x, m):
        """int_x^{b_m} (h - t^-1/2) dt for x inside spike m."""
        x = _arr(x)
        m = np.asarray(m, dtype=float)
        a, b = spike_a(m), spike_b(m)
        if not self.smooth:
            return _stable_phi_integral(x, b)
        d = self.delta(m)
        out = np.empty(x.shape)
        up = x < a + d
        dn = x > b - d
        pl = ~up & ~dn
        if np.any(dn):
            out[dn] = self.ramp_down(m[dn], lower=x[dn])
        if np.any(pl):
            out[pl] = self.ramp_down(m[pl]) + _stable_phi_integral(x[pl], (b - d)[pl])
        if np.any(up):
            mu_ = m[up]
            out[up] = (self.ramp_down(mu_) + _stable_phi_integral((a + d)[up], (b - d)[up])
                       + self.ramp_up(mu_) - self.ramp_up(mu_, upper=x[up]))
        return out

    def profile(self, x):
        """(P, P') of the spike indicator (or its smoothing) at x."""
        x = _arr(x)
        m = spike_index(x)
        P = (m > 0).astype(float)
        dP = np.zeros(x.shape)
        if self.smooth and np.any(m > 0):
            i = m > 0
            mm = m[i].astype(float)
            a, b, d = spike_a(mm), spike_b(mm), self.delta(mm)
            xs = x[i]
            tu = (xs - a) / d
            td = (b - xs) / d
            p = np.ones(xs.shape)
            dp = np.zeros(xs.shape)
            up = tu < 1
            dn = td < 1
            p[up] = _smooth(tu[up])
            dp[up] = _dsmooth(tu[up]) / d[up]
            p[dn] = _smooth(td[dn])
            dp[dn] = -_dsmooth(td[dn]) / d[dn]
            P[i] = p
            dP[i] = dp
        return P, dP

    def value(self, x):
        """g(x) = -int_x^1 h for x < 1 and 2 sqrt(x) - 2 above."""
        x = _arr(x)
        out = 2.0 * np.sqrt(x) - 2.0
        low = x < 0.6
        if np.any(low):
            xs = x[low]
            M = _n_above(xs)
            excess = self.prefix_sum(M)
            m = spike_index(xs)
            ins = m > 0
            if np.any(ins):
                excess[ins] += self.partial(xs[ins], m[ins])
            out[low] -= excess
        return out

    def limit(self):
        return -2.0 - self.total

    def breakpoints(self, lo, hi):
        lo = max(float(lo), 0.0)
        hi = float(hi)
        if hi <= lo or lo >= 0.6:
            return np.empty(0)
        n_hi = math.floor(1.0 / lo) + 2 if lo > 0 else math.inf
        n_lo = max(2, math.floor(1.0 / hi) - 1) if hi < 1e300 else 2
        if n_hi - n_lo > MAX_BREAKPOINTS:
            raise AtomBudgetError(f"{n_hi - n_lo} spikes in ({lo}, {hi}) exceed the breakpoint budget")
        n = np.arange(n_lo, n_hi + 1, dtype=float)
        a, b = spike_a(n), spike_b(n)
        pts = [a, b]
        if self.smooth:
            d = self.delta(n)
            pts += [a + d, b - d]
        p = np.concatenate(pts)
        return np.sort(p[(p > lo) & (p < hi)])


_tables: Dict[bool, SpikeTable] = {}
_tables_lock = threading.Lock()


def spike_table(smooth: bool) -> SpikeTable:
    with _tables_lock:
        if smooth not in _tables:
            _tables[smooth] = SpikeTable(smooth)
        return _tables[smooth]


def _spike_atoms():
    def at_a(n):
        a = spike_a(n)
        return a, a ** -2 - a ** -0.5

    def at_b(n):
        b = spike_b(n)
        return b, b ** -0.5 - b ** -2

    return AtomUnion([AtomSequence(at_a, 2, label="a_n"), AtomSequence(at_b, 2, label="b_n")])


def g_example42() -> DCFunction:
    """g' = x^-2 on the spikes [a_n, b_n) and x^-1/2 elsewhere, g(1) = 0."""
    tab = spike_table(False)

    def d1(x):
        x = _arr(x)
        return np.where(spike_index(x) > 0, x ** -2, x ** -0.5)

    def d2(x):
        x = _arr(x)
        return np.where(spike_index(x) > 0, -2.0 * x ** -3, -0.5 * x ** -1.5)

    def both(x):
        x = _arr(x)
        inside = spike_index(x) > 0
        r = x ** -0.5
        return np.where(inside, x ** -2, r), np.where(inside, -2.0 * x ** -3, -0.5 * r / x)

    hints = {"l": EndpointHints(breakpoints=(tab.breakpoints,))}
    return DCFunction(tab.value, d1, d2, _spike_atoms(), hints, label="spike example", joint=both)


def g_example42_smooth() -> DCFunction:
    """As the spike example, with C^2 ramps of width (b_n - a_n)/8 in place of the jumps of g'."""
    tab = spike_table(True)

    def d1(x):
        x = _arr(x)
        P, _ = tab.profile(x)
        return x ** -0.5 + P * _phi(x)

    def d2(x):
        x = _arr(x)
        P, dP = tab.profile(x)
        return -0.5 * x ** -1.5 + dP * _phi(x) + P * (-2.0 * x ** -3 + 0.5 * x ** -1.5)

    def both(x):
        x = _arr(x)
        P, dP = tab.profile(x)
        ph = _phi(x)
        r = x ** -0.5
        return r + P * ph, -0.5 * r / x + dP * ph + P * (-2.0 * x ** -3 + 0.5 * r / x)

    hints = {"l": EndpointHints(breakpoints=(tab.breakpoints,))}
    return DCFunction(tab.value, d1, d2, hints=hints, label="smoothed spike example", joint=both)


# ------------------------------------------------ transformed diffusions


class _InverseCache:
    """Remembers x for arrays y that were produced as g(x), so g^-1 is exact on them."""

    def __init__(self, size=8, max_points=2 ** 21):
        self.size = size
        self.items: "OrderedDict[tuple, tuple]" = OrderedDict()
        self.lock = threading.Lock()
        # sorted pointwise store, for breakpoint images that get regrouped before inversion
        self.max_points = max_points
        self.py = np.empty(0)
        self.px = np.empty(0)

    def put_points(self, y, x):
        with self.lock:
            py = np.concatenate([self.py, y.reshape(-1)])
            px = np.concatenate([self.px, x.reshape(-1)])
            if py.size > self.max_points:
                py, px = y.reshape(-1), x.reshape(-1)
            order = np.argsort(py, kind="stable")
            self.py, self.px = py[order], px[order]

    def lookup_points(self, y):
        """(found mask, x) for the entries of y present in the pointwise store."""
        with self.lock:
            py, px = self.py, self.px
        if py.size == 0:
            return np.zeros(y.shape, dtype=bool), np.zeros(y.shape)
        i = np.clip(np.searchsorted(py, y), 0, py.size - 1)
        found = py[i] == y
        return found, np.where(found, px[i], 0.0)

    @staticmethod
    def key(y):
        return (y.shape, hash(y.tobytes()))

    def put(self, y, x):
        with self.lock:
            self.items[self.key(y)] = (y.copy(), x)
            self.items.move_to_end(self.key(y))
            while len(self.items) > self.size:
                self.items.popitem(last=False)

    def get(self, y):
        k = self.key(y)
        with self.lock:
            hit = self.items.get(k)
        if hit is not None and np.array_equal(hit[0], y):
            return hit[1]
        return None


def invert_increasing(g: DCFunction, y, max_iter: int = 200):
    """Solve g(x) = y on (0, inf) by safeguarded Newton in w = sqrt(x)."""
    y = _arr(y)
    flat = y.reshape(-1)
    lo = np.zeros(flat.shape)
    hi = np.ones(flat.shape)
    for _ in range(1100):
        need = g(hi * hi) < flat
        if not np.any(need):
            break
        hi[need] *= 2.0
    w = 0.5 * (lo + hi)
    for _ in range(max_iter):
        x = w * w
        F = g(x) - flat
        lo = np.where(F < 0, w, lo)
        hi = np.where(F > 0, w, hi)
        dF = 2.0 * w * g.d1(x)
        with np.errstate(all="ignore"):
            w_new = w - F / dF
        bad = ~np.isfinite(w_new) | (w_new <= lo) | (w_new >= hi)
        w_new = np.where(bad, 0.5 * (lo + hi), w_new)
        done = (np.abs(w_new - w) <= 4e-16 * w) | (F == 0) | (hi - lo <= 4e-16 * hi)
        w = w_new
        if np.all(done):
            break
    return (w * w).reshape(y.shape)


def transformed_brownian(g: DCFunction, label: str, x_anchor: float = 1.0) -> DiffusionSpec:
    """The diffusion Y = g(B) for Brownian motion B on (0, inf) absorbed at 0, g increasing.

    mu_Y = g''(g^-1)/2 and sigma_Y = g'(g^-1); the scale function is known
    exactly, s_Y(y) = g'(1)(g^-1(y) - 1), and is supplied as a ScaleMap.
    """
    cache = _InverseCache()
    gl = None

    def ginv(y):
        y = _arr(y)
        hit = cache.get(y)
        if hit is not None:
            return hit
        found, x = cache.lookup_points(y)
        if not np.all(found):
            x[~found] = invert_increasing(g, y[~found])
        return x

    def forward(x):
        x = _arr(x)
        y = np.asarray(g(x), dtype=float)
        cache.put(y, x)
        return y

    h1 = float(g.d1(np.array([x_anchor]))[0])
    y_anchor = float(g(np.array([x_anchor]))[0])
    from .boundary import g_endpoint_limit
    gl = g_endpoint_limit(g, 0.0, z=x_anchor)
    if gl is None:
        raise ValueError(f"{g.label} has no finite limit at 0; Y = g(B) would not live on an interval")

    def mu(y):
        return 0.5 * g.d2(ginv(y))

    def sigma(y):
        return g.d1(ginv(y))

    def s(y):
        return h1 * (ginv(y) - x_anchor)

    def s_inv(u):
        return forward(x_anchor + _arr(u) / h1)

    def rho(y):
        return h1 / g.d1(ginv(y))

    def offset_inverse(side, t):
        if side != "l":
            raise ValueError("s(r) is infinite")
        return forward(_arr(t) / h1)

    def dist(side, y):
        if side != "l":
            return np.full(np.shape(y), math.inf)
        return h1 * ginv(y)

    def map_hint(hint: EndpointHints) -> EndpointHints:
        phases = tuple((lambda ph: (lambda y: ph(ginv(y))))(ph) for ph in hint.phase_scale)

        def mapped_bp(bp):
            def inner(lo, hi):
                xl, xh = invert_increasing(g, np.array([lo, hi]))
                pts = np.asarray(bp(xl, xh), dtype=float)
                if not pts.size:
                    return pts
                ys = np.asarray(g(pts), dtype=float)
                cache.put_points(ys, pts)
                return ys
            return inner

        return EndpointHints(None, hint.oscillatory, phases, tuple(mapped_bp(b) for b in hint.breakpoints))

    hints = {"l": map_hint(g.hints["l"]), "r": map_hint(g.hints["r"])}
    smap = ScaleMap(s, s_inv, rho, -h1 * x_anchor, math.inf, offset_inverse, dist)
    d = DiffusionSpec(Interval(gl, math.inf), CoefficientFunction(mu, hints, "g''(g^-1(y))/2"),
                      CoefficientFunction(sigma, hints, "g'(g^-1(y))"), y_anchor, y_anchor, smap, label)
    object.__setattr__(d, "base", (g, ginv))
    return d


# ---------------------------------------------------------------- presets


@dataclass
class Preset:
    name: str
    build: Callable
    expected: str
    description: str
    nu: Optional[Callable] = None
    mc: dict = field(default_factory=dict)

    def problem(self):
        d, g = self.build()
        nu = self.nu() if self.nu is not None else lebesgue()
        return d, g, nu


def _q2_first():
    return transformed_brownian(g_example41(), "Y = g(B), g of the sin(1/x) example"), g_identity()


def _q2_second():
    return transformed_brownian(g_example42_smooth(), "Y = g(B), g of the smoothed spike example"), g_identity()


PRESETS: Dict[str, Preset] = {p.name: p for p in [
    Preset("bm-identity", lambda: (brownian(), g_identity()), "Semimartingale",
           "Brownian motion on (0, inf) from 1, g(x) = x"),
    Preset("sqrt-bm", lambda: (brownian(), g_sqrt()), "Semimartingale",
           "Brownian motion on (0, inf) from 1, g(x) = sqrt(x)"),
    Preset("example-4.1", lambda: (brownian(), g_example41()), "NonSemiFirstKind",
           "Brownian motion on (0, inf), g' = (2 + sin(1/x))/sqrt(x)"),
    Preset("example-4.2", lambda: (brownian(), g_example42()), "NonSemiSecondKind",
           "Brownian motion on (0, inf), g' = x^-2 on spikes around 1/n, x^-1/2 elsewhere"),
    Preset("question-II-first-kind", _q2_first, "NonSemiFirstKind",
           "Y = g(B) with g of example-4.1 (mu = g''(g^-1)/2, sigma = g'(g^-1)), identity test function"),
    Preset("question-II-second-kind", _q2_second, "NonSemiSecondKind",
           "Y = g(B) with a C^2 smoothing of the example-4.2 g, identity test function"),
    Preset("bessel-half-stopped", lambda: (bessel(0.5), g_identity()), "Semimartingale",
           "Bessel process of dimension 1/2 absorbed at 0, g(x) = x"),
    Preset("besq-delta", lambda: (squared_bessel(0.5), g_sqrt()), "Semimartingale",
           "squared Bessel process of dimension 1/2 absorbed at 0, g(x) = sqrt(x)"),
    Preset("remark-3.6-ii", lambda: (brownian(), g_remark36()), "Semimartingale",
           "Brownian motion on (0, inf), g' = 2 + sin(x^-1/2)"),
    Preset("atom-kink", lambda: (brownian(0.0, 2.0, 0.5), g_kink(1.0, 2.0)), "Semimartingale",
           "Brownian motion on (0, 2) from 1/2, g(x) = |x - 1|"),
]}


def lemma_battery():
    """Test functions on (0, inf) for the real-analysis implication suite."""
    return [g_identity(), g_sqrt(), g_example41(), g_example42(), g_example42_smooth(), g_remark36(),
            g_power(1.5), g_power(0.25), g_power(-1.0), g_log(), g_xlogx(), g_kink(1.0, 2.0),
            g_sqrt().affine(-1.0, 0.0)]
