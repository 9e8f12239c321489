"""Command-line front end: classify | boundary | addfun | simulate | verify."""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from importlib import metadata
from typing import Optional, Tuple

import numpy as np

from . import mc
from .addfun import classify_additive_functional
from .boundary import classify_case
from .catalog import PRESETS
from .classify import FIRST_KIND, NOT_DETERMINED, SECOND_KIND, SEMIMARTINGALE, classify
from .config import (SCHEMA_VERSION, ConfigError, ProblemConfig, build_problem, load_config, preset_config,
                     probe_settings)
from .funcmodel import EvaluationError

EXIT_OK = 0
EXIT_FIRST_KIND = 10
EXIT_SECOND_KIND = 11
EXIT_NOT_DETERMINED = 20
EXIT_EVALUATION = 21
EXIT_CONFIG = 2
EXIT_DISAGREE = 1

VERDICT_EXIT = {SEMIMARTINGALE: EXIT_OK, FIRST_KIND: EXIT_FIRST_KIND, SECOND_KIND: EXIT_SECOND_KIND,
                NOT_DETERMINED: EXIT_NOT_DETERMINED}

EMPIRICAL_OF = {SEMIMARTINGALE: "Semimartingale-like", FIRST_KIND: "FirstKind-like",
                SECOND_KIND: "SecondKind-like"}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def _problem_block(cfg: ProblemConfig, d, g):
    return {"preset": cfg.preset, "label": cfg.label or d.label, "interval": d.J.to_json(), "x0": d.x0,
            "c": d.c, "mu": d.mu.label, "sigma": d.sigma.label, "g": g.label}


def _report(command: str, cfg: ProblemConfig, d, g, seed: Optional[int]):
    return {"schema_version": SCHEMA_VERSION, "command": command, "problem": _problem_block(cfg, d, g),
            "verdicts": {}, "mc": None,
            "provenance": {"config_hash": cfg.digest, "seed": seed, "version": _version()},
            "timings": {}}


class _Timer:
    def __init__(self, rep, key):
        self.rep, self.key = rep, key

    def __enter__(self):
        self.t = time.perf_counter()

    def __exit__(self, *exc):
        self.rep["timings"][self.key] = round(time.perf_counter() - self.t, 6)


# ---------------------------------------------------------------- commands


def cmd_boundary(cfg: ProblemConfig, seed=None, threads=None) -> Tuple[dict, int]:
    d, g, _ = build_problem(cfg)
    rep = _report("boundary", cfg, d, g, None)
    with _Timer(rep, "boundary"):
        rep["verdicts"]["boundary"] = classify_case(d, g).to_dict()
    return rep, EXIT_OK


def cmd_classify(cfg: ProblemConfig, seed=None, threads=None) -> Tuple[dict, int]:
    d, g, _ = build_problem(cfg)
    rep = _report("classify", cfg, d, g, None)
    with _Timer(rep, "classify"):
        v = classify(d, g)
    rep["verdicts"]["boundary"] = v.case.to_dict()
    rep["verdicts"]["semimartingale"] = v.to_dict()
    return rep, VERDICT_EXIT.get(v.verdict, EXIT_NOT_DETERMINED)


def cmd_addfun(cfg: ProblemConfig, seed=None, threads=None) -> Tuple[dict, int]:
    d, g, nu = build_problem(cfg)
    rep = _report("addfun", cfg, d, g, None)
    with _Timer(rep, "addfun"):
        rep["verdicts"]["addfun"] = classify_additive_functional(d, nu).to_dict()
    rep["problem"]["nu"] = nu.label
    return rep, EXIT_OK


def _summary(v: np.ndarray) -> dict:
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return {"n": 0}
    q = np.quantile(v, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {"n": int(v.size), "mean": float(v.mean()), "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
            "q05": float(q[0]), "q25": float(q[1]), "median": float(q[2]), "q75": float(q[3]), "q95": float(q[4])}


def cmd_simulate(cfg: ProblemConfig, seed=None, threads=None) -> Tuple[dict, int]:
    d, g, _ = build_problem(cfg)
    st = probe_settings(cfg, seed, threads)
    dt = float(cfg.mc.get("dt", 1e-3))
    n = int(cfg.mc.get("paths", 1000))
    horizon = float(cfg.mc.get("horizon", st.horizon))
    rep = _report("simulate", cfg, d, g, st.seed)
    with _Timer(rep, "simulate"):
        model = mc.model_of(d)
        parts = mc.run_paths(model, st.seed, n, [dt], horizon, lambda: [mc.Functionals(model, g)], threads)
        absorbed = np.concatenate([r.absorbed[0] for r, _ in parts])
        t_exit = np.concatenate([r.exit_time[0] for r, _ in parts])
        side = np.concatenate([r.exit_side[0] for r, _ in parts])
        fs = [a[0] for _, a in parts]
        qv = np.concatenate([f.qv[0] for f in fs])
        av = np.concatenate([f.a[0] for f in fs])
        va = np.concatenate([f.var_a[0] for f in fs])
        path = mc.simulate_path(d, dt, horizon, st.seed, 0)
    stride = max(1, path.values.size // 1000)
    rep["mc"] = {
        "paths": n, "dt": dt, "horizon": horizon,
        "absorbed_fraction": float(absorbed.mean()),
        "absorbed_at_l": int(np.sum(side < 0)), "absorbed_at_r": int(np.sum(side > 0)),
        "exit_time": _summary(t_exit[absorbed]),
        "qv_at_end": _summary(qv), "a_at_end": _summary(av), "var_a_at_end": _summary(va),
        "sample_path": {"stream": 0, "stride": stride, "t": path.times[::stride], "y": path.values[::stride],
                        "absorbed_at": list(path.absorbed_at) if path.absorbed_at else None},
        "note": "Euler-Maruyama with interpolated absorption; functionals are Riemann sums up to min(zeta, horizon)",
    }
    return rep, EXIT_OK


def cmd_verify(cfg: ProblemConfig, seed=None, threads=None) -> Tuple[dict, int]:
    d, g, _ = build_problem(cfg)
    st = probe_settings(cfg, seed, threads)
    rep = _report("verify", cfg, d, g, st.seed)
    with _Timer(rep, "classify"):
        v = classify(d, g)
    rep["verdicts"]["boundary"] = v.case.to_dict()
    rep["verdicts"]["semimartingale"] = v.to_dict()
    with _Timer(rep, "probe"):
        probe = mc.divergence_probe(d, g, settings=st, exits=v.case.exit_sides())
    rep["mc"] = {"divergence_probe": probe}
    expected = PRESETS[cfg.preset].expected if cfg.preset in PRESETS else None
    want = EMPIRICAL_OF.get(v.verdict)
    agree = want is not None and probe["kind"] == want
    rep["agreement"] = {"deterministic": v.verdict, "empirical": probe["kind"], "agree": agree,
                        "documented": expected, "documented_match": expected is None or expected == v.verdict}
    ok = agree and rep["agreement"]["documented_match"]
    return rep, EXIT_OK if ok else EXIT_DISAGREE


COMMANDS = {"classify": cmd_classify, "boundary": cmd_boundary, "addfun": cmd_addfun,
            "simulate": cmd_simulate, "verify": cmd_verify}


# ------------------------------------------------------------------ output


def report_body(rep: dict) -> dict:
    """The part of a report that is reproducible: everything except wall-clock timings."""
    return {k: v for k, v in rep.items() if k != "timings"}


def to_json(rep: dict) -> str:
    return json.dumps(_clean(rep), sort_keys=True, indent=2, allow_nan=False) + "\n"


def to_text(rep: dict) -> str:
    p = rep["problem"]
    lines = [f"{rep['command']}: {p.get('preset') or p.get('label') or 'problem'}",
             f"  interval {p['interval']}, x0 = {p['x0']}, mu: {p['mu']}, sigma: {p['sigma']}, g: {p['g']}"]
    b = rep["verdicts"].get("boundary")
    if b:
        lines.append(f"  case {b['case']}: exits at l {b['exits_at_l']}, at r {b['exits_at_r']}; "
                     f"s(l) = {b['s_l']}, s(r) = {b['s_r']}")
    s = rep["verdicts"].get("semimartingale")
    if s:
        lines.append(f"  verdict: {s['verdict']}" + (" (sign-definite shortcut)" if s["shortcut_used"] else ""))
        for key in ("cond_necessary", "cond_full"):
            c = s.get(key)
            if c:
                lines.append(f"    {key}: {c['status']} ({c['label']}; {c['decision_note']})")
    a = rep["verdicts"].get("addfun")
    if a:
        lines.append(f"  additive functional: {a['summary']}")
        lines.append(f"    D^nu = {a['d_nu']}, reduced interval {a['reduced_interval']}")
    m = rep.get("mc")
    if m and "divergence_probe" in m:
        pr = m["divergence_probe"]
        lines.append(f"  divergence probe: {pr['kind']} (median qv {pr['median_qv']}, median var_a {pr['median_var_a']})")
    elif m:
        lines.append(f"  simulation: {m['paths']} paths, dt {m['dt']}, absorbed fraction {m['absorbed_fraction']:.4f}")
    if "agreement" in rep:
        ag = rep["agreement"]
        lines.append(f"  agreement: {'yes' if ag['agree'] else 'NO'} "
                     f"(deterministic {ag['deterministic']}, empirical {ag['empirical']})")
    lines.append(f"  config hash {rep['provenance']['config_hash'][:16]}, version {rep['provenance']['version']}")
    return "\n".join(lines) + "\n"


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semimart", description="Semimartingale classification of g(Y) for "
                                 "one-dimensional diffusions, with Monte Carlo corroboration.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="PATH", help="JSON problem file (see docs/problem.schema.json)")
    src.add_argument("--preset", metavar="NAME", help="named catalog problem: " + ", ".join(PRESETS))
    ap.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    ap.add_argument("--seed", type=int, help="Monte Carlo seed (overrides the config)")
    ap.add_argument("--threads", type=int, help="Monte Carlo worker threads (default: $SEMIMART_THREADS or 1)")
    ap.add_argument("--format", choices=("json", "text"), default="json")
    return ap


def run(argv=None) -> Tuple[Optional[dict], int, str]:
    """Parse arguments and execute; returns (report, exit code, rendered output)."""
    args = _parser().parse_args(argv)
    try:
        if args.preset is not None:
            if args.preset not in PRESETS:
                msg = f"unknown preset {args.preset!r}; known presets:\n  " + "\n  ".join(PRESETS) + "\n"
                return None, EXIT_CONFIG, msg
            cfg = preset_config(args.preset)
        else:
            cfg = load_config(args.config)
    except ConfigError as exc:
        return None, EXIT_CONFIG, str(exc) + "\n"
    threads = args.threads if args.threads is not None else mc.default_threads()
    if threads < 1:
        return None, EXIT_CONFIG, "--threads must be at least 1\n"
    try:
        rep, code = COMMANDS[args.command](cfg, args.seed, threads)
    except ConfigError as exc:
        return None, EXIT_CONFIG, str(exc) + "\n"
    except EvaluationError as exc:
        return None, EXIT_EVALUATION, f"evaluation failed: {exc}\n"
    text = to_json(rep) if args.format == "json" else to_text(rep)
    return rep, code, text


def main(argv=None) -> int:
    args_list = sys.argv[1:] if argv is None else argv
    rep, code, text = run(args_list)
    if rep is None:
        sys.stderr.write(text)
        return code
    out_path = _parser().parse_args(args_list).out
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
