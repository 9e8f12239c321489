"""Euler-Maruyama simulation, local times and path functionals.

Every path owns a counter-based Philox stream keyed by (seed, stream id)
and consumes its normals in fixed blocks, so a path's trajectory does not
depend on which batch or thread simulates it.  Batches are merged in
stream order.

Several step sizes can be run in one pass with common random numbers:
the coarse Brownian increments are sums of the fine ones.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .funcmodel import DCFunction, DiffusionSpec, EvaluationError

BLOCK = 512


def default_threads() -> int:
    env = os.environ.get("SEMIMART_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def path_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


# ------------------------------------------------------------------ model


@dataclass
class _Model:
    """What is stepped: a state x with drift and diffusion on (lo, hi), observed as y = to_y(x).

    ``mu_y``/``sigma_y`` give the coefficients of the observed diffusion at y = to_y(x).
    """

    lo: float
    hi: float
    x0: float
    mu: Callable
    sigma: Callable
    mu_const: Optional[float]
    sigma_const: Optional[float]
    to_y: Callable
    mu_y: Callable
    sigma_y: Callable
    reflect_at: Optional[float] = None
    identity: bool = True
    coefs_y: Optional[Callable] = None  # x -> (mu_y, sigma_y) in one evaluation


def model_of(d: DiffusionSpec, reflect_at: Optional[float] = None, check_sigma: bool = True) -> _Model:
    base = getattr(d, "base", None)
    if base is not None:
        g, ginv = base
        def coefs(x):
            d1, d2 = g.derivatives(x)
            return 0.5 * d2, d1

        return _Model(0.0, math.inf, float(ginv(np.array([d.x0]))[0]), None, None, 0.0, 1.0,
                      lambda x: g(x), lambda x: 0.5 * g.d2(x), lambda x: g.d1(x),
                      reflect_at, identity=False, coefs_y=coefs)
    mu_c = d.mu.constant
    sig_c = d.sigma.constant
    if check_sigma and sig_c == 0.0:
        raise ValueError("sigma is identically zero")
    return _Model(d.J.l, d.J.r, d.x0, d.mu, d.sigma, mu_c, sig_c, lambda x: x,
                  lambda x: d.mu(x), lambda x: d.sigma(x), reflect_at)


# ------------------------------------------------------------ accumulators


class Accumulator:
    """Per-path running sums fed, step by step, with the state at the left end of each step and
    its time weight (zero once the path is absorbed).  ``begin``/``end`` bracket one block of
    steps of one level on a fixed set of rows."""

    def start(self, n_paths: int, n_levels: int):
        raise NotImplementedError

    def begin(self, level: int, rows: np.ndarray):
        self.level, self.rows = level, rows

    def add(self, x: np.ndarray, w: np.ndarray):
        raise NotImplementedError

    def end(self):
        pass


class LocalTimes(Accumulator):
    """(1/2eps) sum 1{|y - level| < eps} sigma_y^2 dt for several levels (per path)."""

    def __init__(self, model: _Model, levels, eps):
        self.model = model
        self.levels = np.asarray(levels, dtype=float)
        self.eps = float(eps)
        lv = self.levels
        gaps = np.diff(lv)
        self.uniform = lv.size > 1 and bool(np.allclose(gaps, gaps[0], rtol=1e-12, atol=0)) and gaps[0] > 2 * eps
        self.const_s2 = None
        if model.identity and model.sigma_const is not None:
            self.const_s2 = model.sigma_const ** 2

    def start(self, n_paths, n_levels):
        self.L = np.zeros((n_levels, n_paths, self.levels.size))

    def begin(self, level, rows):
        super().begin(level, rows)
        self.buf = np.zeros((rows.size, self.levels.size))

    def end(self):
        self.L[self.level, self.rows] += self.buf / (2 * self.eps)

    def _s2(self, x):
        if self.const_s2 is not None:
            return self.const_s2
        s = np.asarray(self.model.sigma_y(x), dtype=float)
        return s * s

    def add(self, x, w):
        m = self.model
        y = x if m.identity else np.asarray(m.to_y(x), dtype=float)
        lv = self.levels
        if self.uniform:
            inv = 1.0 / (lv[1] - lv[0])
            r = (y - lv[0]) * inv
            hit = np.abs(r - np.rint(r)) < self.eps * inv
            if not hit.any():
                return
            idx = np.flatnonzero(hit)
            k = np.rint(r[idx]).astype(np.int64)
            keep = (k >= 0) & (k < lv.size)
            idx, k = idx[keep], k[keep]
            if idx.size:
                s2 = self._s2(x[idx])
                self.buf[idx, k] += s2 * w[idx]
            return
        for j, yy in enumerate(lv):
            hit = np.abs(y - yy) < self.eps
            if hit.any():
                idx = np.flatnonzero(hit)
                self.buf[idx, j] += self._s2(x[idx]) * w[idx]


class Functionals(Accumulator):
    """qv = int (g' sigma)^2, a = int (g' mu + g'' sigma^2/2), var_a = int |...| (per path),
    plus qv and var_a restricted to the boundary layers ``layers`` = [(lo, hi), ...] given in
    the simulated state."""

    def __init__(self, model: _Model, g: DCFunction, layers=()):
        self.model = model
        self.g = g
        self.layers = list(layers)

    def start(self, n_paths, n_levels):
        z = lambda: np.zeros((n_levels, n_paths))  # noqa: E731
        self.qv, self.a, self.var_a = z(), z(), z()
        self.qv_layer, self.var_a_layer = z(), z()

    def begin(self, level, rows):
        super().begin(level, rows)
        self.buf = np.zeros((5, rows.size))

    def end(self):
        L, r, bf = self.level, self.rows, self.buf
        self.qv[L, r] += bf[0]
        self.a[L, r] += bf[1]
        self.var_a[L, r] += bf[2]
        self.qv_layer[L, r] += bf[3]
        self.var_a_layer[L, r] += bf[4]

    def densities(self, x):
        m = self.model
        if self.g.affine_form is not None:
            gp, gpp = self.g.affine_form[0], 0.0
        else:
            y = x if m.identity else np.asarray(m.to_y(x), dtype=float)
            gp, gpp = self.g.derivatives(y)
        if m.coefs_y is not None:
            mu, sg = m.coefs_y(x)
        else:
            if m.identity and m.mu_const is not None:
                mu = m.mu_const
            else:
                mu = np.asarray(m.mu_y(x), dtype=float)
            if m.identity and m.sigma_const is not None:
                sg = m.sigma_const
            else:
                sg = np.asarray(m.sigma_y(x), dtype=float)
        q = np.broadcast_to((gp * sg) ** 2, x.shape)
        a = np.broadcast_to(gp * mu + 0.5 * gpp * sg * sg, x.shape)
        return q, a

    def add(self, x, w):
        live = w > 0
        if not live.all():
            idx = np.flatnonzero(live)
            if idx.size == 0:
                return
            x, w = x[idx], w[idx]
        else:
            idx = None
        q, a = self.densities(x)
        qa = q * w
        aa = a * w
        va = np.abs(aa)
        bf = self.buf
        if idx is None:
            bf[0] += qa
            bf[1] += aa
            bf[2] += va
        else:
            bf[0, idx] += qa
            bf[1, idx] += aa
            bf[2, idx] += va
        if self.layers:
            inl = np.zeros(x.shape, dtype=bool)
            for lo, hi in self.layers:
                inl |= (x > lo) & (x < hi)
            if inl.any():
                j = np.flatnonzero(inl)
                jj = j if idx is None else idx[j]
                bf[3, jj] += qa[j]
                bf[4, jj] += va[j]


# ------------------------------------------------------------------ engine


@dataclass
class BatchResult:
    absorbed: np.ndarray      # (levels, paths) bool
    exit_time: np.ndarray     # (levels, paths), horizon if not absorbed
    exit_side: np.ndarray     # (levels, paths) int8: -1 at lo, +1 at hi, 0 none
    final: np.ndarray         # (levels, paths) last state x


def _coef(fn, const, x, what):
    if const is not None:
        return const
    try:
        return np.asarray(fn(x), dtype=float)
    except EvaluationError as exc:
        raise EvaluationError(what, exc.x, f"during path simulation: {exc}") from exc


def _simulate(model: _Model, seed: int, streams: Sequence[int], dts: Sequence[float], horizon: float,
              accs: Sequence[Accumulator], block: int = BLOCK) -> BatchResult:
    """Simulate paths ``streams`` at the step sizes ``dts`` (integer multiples of the smallest).

    Level L uses the increments sum_{i < sub} Z_{k sub + i} sqrt(dt_min) of one
    fine normal stream per path, so all levels share their Brownian path.
    """
    dts = [float(v) for v in dts]
    dt_f = min(dts)
    subs = [int(round(v / dt_f)) for v in dts]
    for v, s in zip(dts, subs):
        if abs(s * dt_f - v) > 1e-9 * v:
            raise ValueError("step sizes must be integer multiples of the smallest one")
    smax = max(subs)
    block = smax * max(1, -(-block // smax))
    n = len(streams)
    nl = len(dts)
    for acc in accs:
        acc.start(n, nl)
    gens = [path_rng(seed, s) for s in streams]
    x = np.full((nl, n), float(model.x0))
    alive = np.ones((nl, n), dtype=bool)
    t_exit = np.full((nl, n), float(horizon))
    side = np.zeros((nl, n), dtype=np.int8)
    n_lv = [int(math.ceil(horizon / v - 1e-9)) for v in dts]
    sq = math.sqrt(dt_f)
    lo, hi = model.lo, model.hi
    has_lo, has_hi = math.isfinite(lo), math.isfinite(hi)
    H = model.reflect_at
    x_safe = float(model.x0)
    b = 0
    while True:
        pending = [L for L in range(nl) if b * block // subs[L] < n_lv[L]]
        if not pending:
            break
        active = np.flatnonzero(alive[pending].any(axis=0))
        if active.size == 0:
            break
        Zt = np.empty((active.size, block))
        for i, p in enumerate(active):
            Zt[i] = gens[p].standard_normal(block)
        for L in pending:
            pos = np.flatnonzero(alive[L, active])
            if pos.size == 0:
                continue
            rows = active[pos]
            sub = subs[L]
            inc = Zt[pos]
            if sub > 1:
                inc = inc.reshape(pos.size, block // sub, sub).sum(axis=2)
            D = np.ascontiguousarray(inc.T)
            D *= sq
            h_full = dts[L]
            k0 = b * block // sub
            nsteps = min(block // sub, n_lv[L] - k0)
            xl = x[L, rows].copy()
            live = np.ones(rows.size, dtype=bool)
            wlive = np.ones(rows.size)
            ndead = 0
            for acc in accs:
                acc.begin(L, rows)
            for j in range(nsteps):
                t_left = (k0 + j) * h_full
                h = min(h_full, horizon - t_left)
                dW = D[j] if h == h_full else D[j] * math.sqrt(h / h_full)
                if model.mu_const is None:
                    xn = xl + _coef(model.mu, None, xl, "drift") * h
                elif model.mu_const != 0.0:
                    xn = xl + model.mu_const * h
                else:
                    xn = xl.copy()
                if model.sigma_const is None:
                    xn += _coef(model.sigma, None, xl, "diffusion") * dW
                elif model.sigma_const == 1.0:
                    xn += dW
                else:
                    xn += model.sigma_const * dW
                if H is not None:
                    np.minimum(xn, 2 * H - xn, out=xn)
                w = wlive * h if ndead else np.full(rows.size, h)
                out = None
                if has_lo:
                    out = xn <= lo
                if has_hi:
                    out = (xn >= hi) if out is None else (out | (xn >= hi))
                if out is not None:
                    if ndead:
                        out &= live
                    if out.any():
                        idx = np.flatnonzero(out)
                        xo, xi = xl[idx], xn[idx]
                        at_lo = (xi <= lo) if has_lo else np.zeros(idx.size, dtype=bool)
                        edge = np.where(at_lo, lo, hi)
                        with np.errstate(all="ignore"):
                            theta = (xo - edge) / (xo - xi)
                        theta = np.clip(np.nan_to_num(theta, nan=1.0), 0.0, 1.0)
                        w[idx] *= theta
                        r = rows[idx]
                        t_exit[L, r] = t_left + theta * h
                        side[L, r] = np.where(at_lo, -1, 1)
                        x[L, r] = edge
                        alive[L, r] = False
                        live[idx] = False
                        wlive[idx] = 0.0
                        ndead += idx.size
                for acc in accs:
                    acc.add(xl, w)
                if ndead:
                    xn[~live] = x_safe
                xl = xn
            for acc in accs:
                acc.end()
            x[L, rows[live]] = xl[live]
        b += 1
    return BatchResult(~alive & (side != 0), t_exit, side, x)


def run_paths(model: _Model, seed: int, n_paths: int, dts, horizon: float, make_accs: Callable,
              threads: Optional[int] = None, batch: int = 8192, stream_offset: int = 0):
    """Split paths into fixed batches (by stream id), run them, merge in stream order.

    ``make_accs`` builds fresh accumulators per batch.  Returns (BatchResult, accumulators) lists.
    """
    threads = threads or default_threads()
    starts = list(range(0, n_paths, batch))

    def job(s0):
        streams = list(range(stream_offset + s0, stream_offset + min(s0 + batch, n_paths)))
        accs = make_accs()
        res = _simulate(model, seed, streams, dts, horizon, accs)
        return res, accs

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            out = list(ex.map(job, starts))
    else:
        out = [job(s0) for s0 in starts]
    return out


def _cat(parts, attr):
    return np.concatenate([getattr(p, attr) for p in parts], axis=-1)


# ------------------------------------------------------------- single path


@dataclass
class PathSample:
    times: np.ndarray
    values: np.ndarray
    absorbed_at: Optional[tuple]
    seed: int
    stream_id: int
    dt: float
    states: Optional[np.ndarray] = None  # simulated state when it differs from values (transformed models)


class _Recorder(Accumulator):
    def start(self, n_paths, n_levels):
        self.xs = []

    def add(self, x, w):
        if w[0] > 0:
            self.xs.append(float(x[0]))


def simulate_path(d: DiffusionSpec, dt: float, horizon: float, seed: int, stream: int = 0,
                  check_sigma: bool = True, reflect_at: Optional[float] = None) -> PathSample:
    """One Euler-Maruyama path on the grid k*dt, held at the endpoint after absorption."""
    if not (dt > 0 and horizon > 0):
        raise ValueError("dt and horizon must be positive")
    model = model_of(d, reflect_at, check_sigma)
    rec = _Recorder()
    res = _simulate(model, seed, [stream], [dt], horizon, [rec])
    n = int(math.ceil(horizon / dt - 1e-9))
    xs = np.empty(n + 1)
    k = len(rec.xs)
    xs[:k] = rec.xs
    xs[k:] = res.final[0, 0]
    times = np.minimum(np.arange(n + 1) * dt, horizon)
    absorbed = None
    if res.absorbed[0, 0]:
        absorbed = (float(res.exit_time[0, 0]), "l" if res.exit_side[0, 0] < 0 else "r")
    ys = xs if model.identity else np.asarray(model.to_y(xs), dtype=float)
    return PathSample(times, ys, absorbed, seed, stream, dt, None if model.identity else xs)


def _path_weights(path: PathSample, t: Optional[float] = None):
    """Time weight of each left grid point up to min(t, absorption)."""
    n = path.values.size - 1
    end = path.times[-1] if t is None else min(t, path.times[-1])
    if path.absorbed_at is not None:
        end = min(end, path.absorbed_at[0])
    left = path.times[:-1]
    w = np.clip(end - left, 0.0, path.dt)
    w = np.minimum(w, np.diff(path.times))
    return w[:n]


def estimate_local_time(path: PathSample, y: float, eps: float, d: Optional[DiffusionSpec] = None,
                        t: Optional[float] = None) -> float:
    """(1/2eps) sum 1{|Y - y| < eps} sigma^2(Y) dt up to min(t, absorption); sigma = 1 without d."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    w = _path_weights(path, t)
    yl = path.values[:-1]
    hit = np.abs(yl - y) < eps
    if not np.any(hit):
        return 0.0
    s2 = 1.0
    if d is not None:
        s2 = np.asarray(d.sigma(yl[hit]), dtype=float) ** 2
    return float(np.sum(s2 * w[hit]) / (2 * eps))


@dataclass
class PathFunctionals:
    qv: np.ndarray
    a_path: np.ndarray
    var_a: np.ndarray
    g_path: np.ndarray
    m_path: np.ndarray


def path_functionals(path: PathSample, d: DiffusionSpec, g: DCFunction, eps: Optional[float] = None) -> PathFunctionals:
    """Running Riemann sums of (g' sigma)^2 and of the drift of g(Y); atoms of g'' enter through
    local-time estimates at their locations, weighted by half the atom mass."""
    w = _path_weights(path)
    y = path.values[:-1]
    gp = g.d1(y)
    gpp = g.d2(y)
    mu = d.mu(y)
    sg = d.sigma(y)
    dq = (gp * sg) ** 2 * w
    da = (gp * mu + 0.5 * gpp * sg * sg) * w
    lo, hi = float(np.min(path.values)), float(np.max(path.values))
    ay, aw = g.atoms.in_range(lo - 1e-300, hi) if not g.atoms.empty else (np.empty(0), np.empty(0))
    if ay.size:
        e = eps if eps is not None else math.sqrt(path.dt) / 2
        for yi, wi in zip(ay, aw):
            hit = np.abs(y - yi) < e
            da = da + np.where(hit, 0.5 * wi * sg * sg * w / (2 * e), 0.0)
    qv = np.concatenate([[0.0], np.cumsum(dq)])
    a = np.concatenate([[0.0], np.cumsum(da)])
    var_a = np.concatenate([[0.0], np.cumsum(np.abs(da))])
    gy = g(path.values)
    m = gy - gy[0] - a
    return PathFunctionals(qv, a, var_a, gy, m)


def occupation_identity_check(path: PathSample, y_grid, eps: Optional[float] = None,
                              t: Optional[float] = None) -> dict:
    """|sum_y L^y_t h - t ^ zeta| for a sigma = 1 path (h = grid spacing)."""
    y_grid = np.asarray(y_grid, dtype=float)
    end = path.times[-1] if t is None else min(t, path.times[-1])
    if path.absorbed_at is not None:
        end = min(end, path.absorbed_at[0])
    if end <= 0:
        return {"target": 0.0, "sum": 0.0, "residual": 0.0, "relative": 0.0}
    h = float(y_grid[1] - y_grid[0])
    e = eps if eps is not None else h
    total = sum(estimate_local_time(path, yy, e, t=t) for yy in y_grid) * h
    return {"target": float(end), "sum": float(total), "residual": abs(total - end),
            "relative": abs(total - end) / end}


# -------------------------------------------------------------- statistics


def absorption_probability(d: DiffusionSpec, t: float, n_paths: int, dt: float, seed: int = 0,
                           threads: Optional[int] = None) -> dict:
    model = model_of(d)
    parts = run_paths(model, seed, n_paths, [dt], t, lambda: [], threads)
    absorbed = np.concatenate([res.absorbed[0] for res, _ in parts])
    p = float(absorbed.mean())
    return {"p": p, "stderr": math.sqrt(p * (1 - p) / n_paths), "paths": n_paths, "dt": dt, "t": t,
            "bias_note": "discrete monitoring misses crossings between grid points; the estimate is biased "
                         "low by about 0.5826*sigma*sqrt(dt) in starting distance (Broadie-Glasserman correction)"}


def ray_knight_check(x0: float = 1.0, l: float = 0.0, levels=(0.25, 0.5, 0.75, 1.0), N: int = 10 ** 5,
                     dt: float = 1e-4, eps: Optional[float] = None, seed: int = 0, threads=None,
                     reflect_at: Optional[float] = None, horizon: float = 1e3) -> dict:
    """Local times of Brownian motion from x0 at the levels l + u, at the hitting time of l.

    By the first Ray-Knight theorem u -> L^{l+u} is a BESQ(2) process up to u = x0 - l, so
    the level-u local time has mean 2u and variance 4u^2.  The path is reflected at
    ``reflect_at`` (default x0 + (x0 - l)/10) above every level: excursions above it
    do not touch the levels, so the joint law of the level local times is unchanged
    while the expected hitting time of l becomes finite.
    """
    from .catalog import brownian
    levels = np.asarray(levels, dtype=float)
    if np.any(levels <= 0) or np.any(l + levels > x0 + 1e-12):
        raise ValueError("levels must lie in (0, x0 - l]")
    eps = math.sqrt(dt) / 2 if eps is None else eps
    H = x0 + 0.1 * (x0 - l) if reflect_at is None else reflect_at
    d = brownian(l, math.inf, x0)
    model = model_of(d, reflect_at=H)
    lv = l + levels
    parts = run_paths(model, seed, N, [dt], horizon, lambda: [LocalTimes(model, lv, eps)], threads)
    L = np.concatenate([accs[0].L[0] for _, accs in parts], axis=0)
    absorbed = np.concatenate([res.absorbed[0] for res, _ in parts])
    rows = []
    for j, u in enumerate(levels):
        v = L[:, j]
        mean = float(v.mean())
        var = float(v.var(ddof=1))
        se_mean = math.sqrt(var / N)
        m4 = float(np.mean((v - mean) ** 4))
        se_var = math.sqrt(max(m4 - var * var, 0.0) / N)
        rows.append({"u": float(u), "mean": mean, "expected_mean": 2 * u, "z_mean": (mean - 2 * u) / se_mean
                     if se_mean > 0 else 0.0, "rel_err_mean": (mean - 2 * u) / (2 * u),
                     "var": var, "expected_var": 4 * u * u, "z_var": (var - 4 * u * u) / se_var if se_var > 0 else 0.0,
                     "rel_err_var": (var - 4 * u * u) / (4 * u * u)})
    return {"levels": rows, "paths": N, "dt": dt, "eps": eps, "reflect_at": H,
            "absorbed_fraction": float(absorbed.mean()), "horizon": horizon}


def bessel_zero_occupation(delta: float = 0.5, x0: float = 1.0, horizon: float = 1.0, dt: float = 1e-4,
                           bands=(0.1, 0.03, 0.01, 0.003), n_paths: int = 200, seed: int = 0) -> dict:
    """Time a Bessel process of dimension delta spends in [0, eps) for shrinking eps.

    The squared process Z = x0^2 + delta t + int 2 sqrt(Z) dW is stepped with
    full truncation at 0 and rho = sqrt(Z) is observed.  For delta in (0, 1)
    the occupation of {0} itself is null, so the band occupations should fall
    to 0 with eps (roughly like eps^delta).
    """
    n = int(round(horizon / dt))
    z = np.full(n_paths, float(x0) ** 2)
    normals = np.stack([path_rng(seed, i).standard_normal(n) for i in range(n_paths)], axis=1)
    bands = np.asarray(bands, dtype=float)
    occ = np.zeros((bands.size, n_paths))
    sq = math.sqrt(dt)
    for k in range(n):
        rho = np.sqrt(z)
        occ += (rho[None, :] < bands[:, None]) * dt
        z = np.maximum(z + delta * dt + 2.0 * rho * sq * normals[k], 0.0)
    means = occ.mean(axis=1)
    return {"bands": bands.tolist(), "mean_occupation": means.tolist(),
            "stderr": (occ.std(axis=1, ddof=1) / math.sqrt(n_paths)).tolist(),
            "delta": delta, "horizon": horizon, "dt": dt, "paths": n_paths}


# ---------------------------------------------------------- divergence probe


@dataclass
class ProbeSettings:
    dt: float = 1e-3
    factor: int = 4
    levels: int = 3
    paths: int = 2000
    horizon: float = 4.0
    seed: int = 12345
    layer_fraction: float = 0.25
    use_layer: bool = True
    stable_ratio: float = 1.1
    growth_ratio: float = 1.2
    threads: Optional[int] = None

    def schedule(self):
        return [self.dt / self.factor ** k for k in range(self.levels)]


def _layers(d: DiffusionSpec, model: _Model, exits: Sequence[str], fraction: float):
    """Boundary layers {y : |s(y) - s(e)| < fraction |s(x0) - s(e)|} at the exit endpoints e.

    Defined through the scale function, so they do not depend on the coordinate in which the
    diffusion is written.  Returned in y and, for the accumulators, in the simulated state.
    """
    from scipy.optimize import brentq
    from .scale import scale_function
    sf = scale_function(d)
    base = getattr(d, "base", None)
    y_layers, x_layers = [], []
    for side in exits:
        e = d.J.endpoint(side)
        if not math.isfinite(e):
            continue
        target = fraction * float(sf.dist(side, np.array([d.x0]))[0])

        def f(y):
            return float(sf.dist(side, np.array([y]))[0]) - target

        near = d.x0
        for k in range(1, 80):
            near = e + (d.x0 - e) * 2.0 ** -k
            if f(near) < 0:
                break
        else:
            continue
        ystar = brentq(f, near, d.x0, xtol=1e-14, rtol=1e-12)
        xstar = float(base[1](np.array([ystar]))[0]) if base is not None else ystar
        if side == "l":
            y_layers.append((e, ystar))
            x_layers.append((-math.inf, xstar))
        else:
            y_layers.append((ystar, e))
            x_layers.append((xstar, math.inf))
    return y_layers, x_layers


def divergence_probe(d: DiffusionSpec, g: DCFunction, dt_schedule: Optional[Sequence[float]] = None,
                     N: Optional[int] = None, settings: Optional[ProbeSettings] = None,
                     exits: Optional[Sequence[str]] = None) -> dict:
    """Empirical kind from the refinement trend of qv(zeta) and var_a(zeta).

    Medians are taken over paths absorbed before the horizon at every level.
    The trend is read from successive ratios of the medians:
    Semimartingale-like when both stay below ``stable_ratio``; SecondKind-like
    when qv does not stabilize (every ratio at least ``stable_ratio``, medians
    increasing); FirstKind-like when qv is stable and var_a grows with every
    ratio above ``growth_ratio``.  The functionals are restricted to boundary
    layers at the exit endpoints (see ``_layers``).  These are heuristics;
    they never override a deterministic verdict.
    """
    st = settings or ProbeSettings()
    sched = list(dt_schedule) if dt_schedule is not None else st.schedule()
    if any(b >= a for a, b in zip(sched, sched[1:])):
        raise ValueError("dt_schedule must be strictly decreasing")
    n = N or st.paths
    model = model_of(d)
    if exits is None:
        from .boundary import classify_case
        exits = classify_case(d).exit_sides()
    y_layers, layers = _layers(d, model, exits, st.layer_fraction) if st.use_layer else ([], [])
    parts = run_paths(model, st.seed, n, sched, st.horizon, lambda: [Functionals(model, g, layers)], st.threads)
    absorbed = np.concatenate([res.absorbed for res, _ in parts], axis=1)
    f = [accs[0] for _, accs in parts]
    qv = np.concatenate([a.qv_layer if layers else a.qv for a in f], axis=1)
    va = np.concatenate([a.var_a_layer if layers else a.var_a for a in f], axis=1)
    use = absorbed.all(axis=0)
    if use.sum() < 20:
        use = np.ones(use.shape, dtype=bool)
    med_q = [float(np.median(qv[k, use])) for k in range(len(sched))]
    med_a = [float(np.median(va[k, use])) for k in range(len(sched))]

    def ratios(m):
        out = []
        for a, b in zip(m, m[1:]):
            if a <= 1e-12 and b <= 1e-12:
                out.append(1.0)
            elif a <= 0:
                out.append(math.inf)
            else:
                out.append(b / a)
        return out

    rq, ra = ratios(med_q), ratios(med_a)
    stable_q = all(r < st.stable_ratio for r in rq)
    stable_a = all(r < st.stable_ratio for r in ra)
    increasing = lambda m: all(b > a for a, b in zip(m, m[1:]))  # noqa: E731
    if all(r >= st.stable_ratio for r in rq) and increasing(med_q):
        kind = "SecondKind-like"
    elif stable_q and stable_a:
        kind = "Semimartingale-like"
    elif stable_q and all(r > st.growth_ratio for r in ra) and increasing(med_a):
        kind = "FirstKind-like"
    else:
        kind = "Inconclusive"
    return {"kind": kind, "dt_schedule": sched, "paths": n, "paths_used": int(use.sum()),
            "median_qv": med_q, "median_var_a": med_a, "qv_ratios": rq, "var_a_ratios": ra,
            "layers": [list(p) for p in y_layers], "horizon": st.horizon, "seed": st.seed,
            "thresholds": {"stable_ratio": st.stable_ratio, "growth_ratio": st.growth_ratio},
            "note": "empirical heuristic; thresholds are configuration"}
