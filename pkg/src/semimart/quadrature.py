"""Vectorised adaptive Gauss-Kronrod (G7/K15) quadrature.

Many integrals are refined side by side: the caller hands over an array of
panels together with a group label per panel, and every group is integrated
to its own tolerance.  Panels are bisected in bulk, so one Python iteration
refines thousands of panels at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# 15-point Kronrod nodes on [-1, 1] (symmetric), with the embedded 7-point Gauss rule.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
WEIGHTS_K = np.concatenate([_WK[:-1], _WK[::-1]])
_wg_vec = np.zeros(15)
# Gauss nodes are _XK[1], _XK[3], _XK[5] and the centre; -_XK[j] sits at index j, +_XK[j] at 14 - j.
for j, w in zip((1, 3, 5), _WG[:3]):
    _wg_vec[j] = w
    _wg_vec[14 - j] = w
_wg_vec[7] = _WG[3]
WEIGHTS_G = _wg_vec


class QuadratureError(RuntimeError):
    """Raised when the panel budget is exhausted before the tolerance is met."""

    def __init__(self, message, lo=None, hi=None):
        super().__init__(message)
        self.lo = lo
        self.hi = hi


# Panels whose error estimate is within this factor of the abscissa-rounding floor are accepted.
NOISE_FACTOR = 16.0


@dataclass(frozen=True)
class QuadratureEngine:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 2 ** 15
    oscillation_panels_per_period: int = 4
    # total panels one shell test may spend before it gives up on deeper shells
    shell_panel_budget: int = 2 ** 17

    def with_(self, **kw) -> "QuadratureEngine":
        vals = dict(self.__dict__)
        vals.update(kw)
        return QuadratureEngine(**vals)


DEFAULT_ENGINE = QuadratureEngine()


def _rowdot(m, w):
    # BLAS matrix-vector products round differently depending on a row's position in
    # the batch; an elementwise product and row sum gives the same bits for any batch
    return (m * w).sum(axis=-1)


def gk15(f, a, b):
    """Kronrod estimate and |K-G| error for each panel [a_i, b_i]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(f(x.reshape(-1)), dtype=float).reshape(x.shape)
    k = half * _rowdot(fx, WEIGHTS_K)
    g = half * _rowdot(fx, WEIGHTS_G)
    return k, np.abs(k - g), fx


def _abscissa_noise(a, b, fx):
    """What rounding the 15 nodes to doubles alone can do to a panel's estimate:
    sum of w_i |f'(x_i)| ulp(x_i), with f' taken from neighbouring node differences.

    Narrow features far from the origin (a ramp of width 1e-20 at x = 1e-5) make
    this floor larger than any width-proportional share of the tolerance.
    """
    half = 0.5 * (b - a)
    x = 0.5 * (a + b)[:, None] + half[:, None] * NODES[None, :]
    with np.errstate(all="ignore"):
        slope = np.abs(np.diff(fx, axis=1)) / np.abs(np.diff(x, axis=1))
    slope = np.where(np.isfinite(slope), slope, 0.0)
    node_slope = np.maximum(np.pad(slope, ((0, 0), (1, 0))), np.pad(slope, ((0, 0), (0, 1))))
    return np.abs(half) * _rowdot(node_slope * np.spacing(np.abs(x)), WEIGHTS_K)


@dataclass
class GroupResult:
    value: np.ndarray
    error: np.ndarray
    l1: np.ndarray
    panels: int
    converged: np.ndarray = field(default=None)


def integrate_panels(f, lo, hi, group=None, n_groups=None, engine: QuadratureEngine = DEFAULT_ENGINE,
                     max_subdivisions=None, raise_on_fail=True) -> GroupResult:
    """Integrate ``f`` over the union of panels belonging to each group.

    A group is done when its summed error is within
    ``max(rel_tol * |integral of |f||, abs_tol)``; each panel is granted a share
    of that tolerance proportional to its width, which guarantees the bound
    for the group total.  For single-signed integrands this is exactly the
    ``max(rel_tol |value|, abs_tol)`` target.
    """
    lo = np.asarray(lo, dtype=float).reshape(-1)
    hi = np.asarray(hi, dtype=float).reshape(-1)
    if group is None:
        group = np.zeros(lo.shape, dtype=np.int64)
    group = np.asarray(group, dtype=np.int64).reshape(-1)
    if n_groups is None:
        n_groups = int(group.max()) + 1 if group.size else 0
    budget = engine.max_subdivisions if max_subdivisions is None else max_subdivisions

    width_total = np.bincount(group, weights=np.abs(hi - lo), minlength=n_groups)
    value = np.zeros(n_groups)
    error = np.zeros(n_groups)
    l1 = np.zeros(n_groups)

    act_lo, act_hi, act_g = lo, hi, group
    spent = 0
    panels = 0
    # accepted panels are folded into these sums as they retire
    while act_lo.size:
        k, e, fx = gk15(f, act_lo, act_hi)
        panels += act_lo.size
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(e))):
            bad = ~(np.isfinite(k) & np.isfinite(e))
            i = int(np.argmax(bad))
            raise QuadratureError(
                f"integrand is not finite on [{act_lo[i]!r}, {act_hi[i]!r}]", act_lo[i], act_hi[i])
        kabs = np.abs(act_hi - act_lo) * 0.5 * _rowdot(np.abs(fx), WEIGHTS_K)
        # running magnitude per group = accepted so far + currently active
        mag = l1 + np.bincount(act_g, weights=kabs, minlength=n_groups)
        tol_g = np.maximum(engine.rel_tol * mag, engine.abs_tol)
        share = tol_g[act_g] * np.abs(act_hi - act_lo) / np.where(width_total[act_g] > 0, width_total[act_g], 1.0)
        ok = e <= share
        # a group whose total error already meets its target retires all of its panels
        err_g = error + np.bincount(act_g, weights=e, minlength=n_groups)
        ok |= (err_g <= tol_g)[act_g]
        # panels that can no longer be split in floating point are accepted as they are
        mid = 0.5 * (act_lo + act_hi)
        tiny = (mid == act_lo) | (mid == act_hi)
        ok |= tiny
        ok |= e <= NOISE_FACTOR * _abscissa_noise(act_lo, act_hi, fx)
        if np.any(ok):
            value += np.bincount(act_g[ok], weights=k[ok], minlength=n_groups)
            error += np.bincount(act_g[ok], weights=e[ok], minlength=n_groups)
            l1 += np.bincount(act_g[ok], weights=kabs[ok], minlength=n_groups)
        split = ~ok
        n_split = int(split.sum())
        if n_split == 0:
            break
        if spent + n_split > budget:
            # fold the unresolved panels in and report which groups missed the target
            value += np.bincount(act_g[split], weights=k[split], minlength=n_groups)
            error += np.bincount(act_g[split], weights=e[split], minlength=n_groups)
            l1 += np.bincount(act_g[split], weights=kabs[split], minlength=n_groups)
            tol_g = np.maximum(engine.rel_tol * l1, engine.abs_tol)
            conv = error <= tol_g
            if raise_on_fail:
                i = int(np.argmax(e * split))
                raise QuadratureError(
                    f"subdivision budget ({budget}) exhausted near [{act_lo[i]!r}, {act_hi[i]!r}]",
                    act_lo[i], act_hi[i])
            return GroupResult(value, error, l1, panels, conv)
        spent += n_split
        s_lo, s_hi, s_g, s_mid = act_lo[split], act_hi[split], act_g[split], mid[split]
        act_lo = np.concatenate([s_lo, s_mid])
        act_hi = np.concatenate([s_mid, s_hi])
        act_g = np.concatenate([s_g, s_g])

    return GroupResult(value, error, l1, panels, np.ones(n_groups, dtype=bool))


def integrate(f, a, b, engine: QuadratureEngine = DEFAULT_ENGINE, breakpoints=None):
    """Integral of f over [a, b] (finite), returned as (value, error)."""
    pts = [a, b]
    if breakpoints is not None:
        bp = np.asarray(breakpoints, dtype=float)
        pts = np.concatenate([[a], np.sort(bp[(bp > min(a, b)) & (bp < max(a, b))]), [b]])
        if b < a:
            pts = np.concatenate([[a], np.sort(bp[(bp > b) & (bp < a)])[::-1], [b]])
    pts = np.asarray(pts, dtype=float)
    res = integrate_panels(f, pts[:-1], pts[1:], engine=engine)
    return float(res.value[0]), float(res.error[0])


def phase_panels(lo, hi, phases, step, max_panels):
    """Split the panels [lo_i, hi_i] until every phase function advances by at
    most ``step`` across each piece.

    Returns sorted (lo, hi) arrays, or None when more than ``max_panels``
    pieces would be needed.
    """
    act_lo = np.atleast_1d(np.asarray(lo, dtype=float))
    act_hi = np.atleast_1d(np.asarray(hi, dtype=float))
    done_lo, done_hi = [], []
    n_done = 0
    while act_lo.size:
        need = np.zeros(act_lo.shape, dtype=bool)
        for ph in phases:
            with np.errstate(all="ignore"):
                d = np.abs(np.asarray(ph(act_hi), dtype=float) - np.asarray(ph(act_lo), dtype=float))
            need |= ~(d <= step)
        mid = 0.5 * (act_lo + act_hi)
        need &= (mid > act_lo) & (mid < act_hi)
        done_lo.append(act_lo[~need])
        done_hi.append(act_hi[~need])
        n_done += int((~need).sum())
        if n_done + 2 * int(need.sum()) > max_panels:
            return None
        m = mid[need]
        act_lo, act_hi = np.concatenate([act_lo[need], m]), np.concatenate([m, act_hi[need]])
    lo_all = np.concatenate(done_lo)
    hi_all = np.concatenate(done_hi)
    order = np.argsort(lo_all, kind="stable")
    return lo_all[order], hi_all[order]
