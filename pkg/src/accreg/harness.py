"""Experiment harness: JSON configs in, validator reports, traces and summaries out.

CLI::

    accreg solve <config.json> [--out DIR] [--strict] [--threads N]
    accreg validate <config.json> [--strict]
    accreg compare <trace1.csv> <trace2.csv> ...

Exit codes: 0 ok, 1 solver failure, 2 config error, 3 strict-validator failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .diagnostics import NoOracle, fit_rate, min_norm_oracle, stagnation_floor
from .errors import ConfigError, ContractViolation, NoAdmissibleIndex, StepError
from .inner import InnerConfig
from .newton import NewtonConfig, make_source_anchors, run_newton, run_newton_noisy
from .operators import NoiseSpec
from .pirm import noise_levels, run_explicit, run_implicit, run_implicit_noisy
from .problems import SystemProblem, problem_from_dict, seeded_start, stable_hash
from .schedules import (
    GAMMA,
    ALPHA,
    VIOLATED,
    preset,
    schedule_from_dict,
    validate_explicit,
    validate_implicit,
    validate_newton,
    validate_noisy_coupling,
)
from .trace import read_csv

log = logging.getLogger("accreg")

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_STRICT = 0, 1, 2, 3
METHODS = ("implicit", "explicit", "newton")
_UNHASHED = ("output",)


@dataclass
class ExperimentConfig:
    raw: dict
    method: str
    problem: SystemProblem
    alpha: object
    gamma: Optional[object]
    seed: Optional[int]
    n_iters: int
    n_cap: int
    x0: np.ndarray
    noise: Optional[dict] = None
    inner: Optional[InnerConfig] = None
    method_config: dict = field(default_factory=dict)
    strict: bool = False
    threads: int = 1
    out_dir: str = "."
    formats: tuple = ("csv", "json")
    validate_horizon: int = 10 ** 5
    oracle: Optional[dict] = None

    @property
    def config_hash(self):
        return stable_hash({k: v for k, v in self.raw.items() if k not in _UNHASHED})


def _need(d, key, where):
    if key not in d:
        raise ConfigError(f"missing field {where}{key}")
    return d[key]


def load_config(path):
    """Parse and validate a JSON experiment config; errors name the offending field."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw)


def parse_config(raw):
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = copy.deepcopy(raw)
    method = _need(raw, "method", "")
    if method not in METHODS:
        raise ConfigError(f"field method: unknown method {method!r}; expected one of {', '.join(METHODS)}")
    run = raw.get("run", {})
    noise = raw.get("noise")
    seed = run.get("seed")
    prob_d = _need(raw, "problem", "")
    x0_d = run.get("x0", {"distance": 1.0} if seed is not None else None)
    random_construction = "generator" in prob_d or isinstance(x0_d, dict)
    if seed is None and noise is not None:
        raise ConfigError("missing field run.seed (required when noise is present)")
    if seed is None and random_construction:
        raise ConfigError("missing field run.seed (required for seeded problem or start construction)")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise ConfigError("field run.seed must be an integer")

    try:
        problem = problem_from_dict(prob_d, seed)
    except (ContractViolation, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"field problem: {exc}") from exc

    mcfg = raw.get("method_config", {})
    alpha, gamma = _schedules(raw.get("schedules"), method, problem)
    inner = None
    if "inner" in mcfg:
        try:
            inner = InnerConfig(**mcfg["inner"])
        except (ContractViolation, TypeError) as exc:
            raise ConfigError(f"field method_config.inner: {exc}") from exc

    oracle = None
    if problem.known_solution is None:
        try:
            res = min_norm_oracle(problem)
            problem = SystemProblem(problem.space, problem.equations, res.x, problem.solution_oracle,
                                    problem.name, problem.meta)
            oracle = res.to_dict()
        except (NoOracle, ContractViolation) as exc:
            oracle = {"route": None, "note": str(exc)}

    if x0_d is None:
        x0 = np.zeros(problem.dim)
    elif isinstance(x0_d, dict):
        if problem.known_solution is None:
            raise ConfigError("field run.x0: a seeded start needs a known or oracle solution")
        x0 = seeded_start(problem, float(x0_d.get("distance", 1.0)), seed)
    else:
        try:
            x0 = problem.space.check(x0_d, "x0")
        except ContractViolation as exc:
            raise ConfigError(f"field run.x0: {exc}") from exc

    if noise is not None:
        for key in ("h", "delta"):
            if key not in noise:
                raise ConfigError(f"missing field noise.{key}")
    n_iters = int(run.get("n_iters", 1000))
    if n_iters < 0:
        raise ConfigError("field run.n_iters must be >= 0")
    out = raw.get("output", {})
    return ExperimentConfig(
        raw=raw, method=method, problem=problem, alpha=alpha, gamma=gamma, seed=seed, n_iters=n_iters,
        n_cap=int(run.get("n_cap", 10 ** 6)), x0=x0, noise=noise, inner=inner, method_config=mcfg,
        strict=bool(raw.get("strict", False)), threads=int(run.get("threads", 1)),
        out_dir=out.get("dir", "."), formats=tuple(out.get("formats", ("csv", "json"))),
        validate_horizon=int(run.get("validate_horizon", 10 ** 5)), oracle=oracle)


def _schedules(d, method, problem):
    if d is None:
        raise ConfigError("missing field schedules")
    try:
        if "preset" in d:
            p = problem.space.p
            return preset(d["preset"], p, d.get("k"))
        alpha = schedule_from_dict(_need(d, "alpha", "schedules."), ALPHA)
        gamma = None
        if method != "newton":
            gamma = schedule_from_dict(_need(d, "gamma", "schedules."), GAMMA)
        return alpha, gamma
    except ContractViolation as exc:
        raise ConfigError(f"field schedules: {exc}") from exc
    except KeyError as exc:
        raise ConfigError(f"missing field schedules.{exc.args[0]}") from exc


def _noise_value(v):
    if isinstance(v, dict):
        return schedule_from_dict(v, ALPHA)
    return float(v)


# validators ----------------------------------------------------------------------


def run_validators(cfg):
    sp = cfg.problem.space
    H = cfg.validate_horizon
    reports = []
    if cfg.method == "implicit":
        R = cfg.method_config.get("R")
        if R is None:
            xs = cfg.problem.known_solution
            R = 2.0 * sp.norm(xs) if xs is not None and sp.norm(xs) > 0 else 1.0
        reports += validate_implicit(sp, cfg.alpha, cfg.gamma, float(R), H)
        if cfg.noise is not None:
            reports.append(validate_noisy_coupling(cfg.alpha, _noise_value(cfg.noise["h"]),
                                                   _noise_value(cfg.noise["delta"]), H))
    elif cfg.method == "explicit":
        reports += validate_explicit(sp, cfg.alpha, cfg.gamma, float(cfg.method_config.get("d", 0.5)), H)
    else:
        reports.append(validate_newton(cfg.alpha, H))
    return reports


# running ---------------------------------------------------------------------------


def _newton_config(cfg):
    mc = cfg.method_config
    prob = cfg.problem
    src = mc.get("source", {"scale": 0.0})
    if "anchors" in src:
        anchors = [prob.space.check(a, "anchor") for a in src["anchors"]]
    else:
        if prob.known_solution is None:
            raise ConfigError("field method_config.source: source anchors need a known or oracle solution")
        rng = np.random.default_rng([cfg.seed or 0, 11])
        scale = float(src.get("scale", 0.0))
        vs = []
        for _ in range(prob.N):
            v = rng.standard_normal(prob.dim)
            vs.append(scale * v / prob.space.norm(v))
        anchors = make_source_anchors(prob, prob.known_solution, vs)
    return NewtonConfig(anchors, cfg.alpha, eta=float(mc.get("eta", 1.0)), inner=cfg.inner)


def _execute(cfg, meta):
    prob = cfg.problem
    if cfg.method == "implicit":
        if cfg.noise is None:
            return run_implicit(prob, cfg.alpha, cfg.gamma, cfg.x0, cfg.n_iters, cfg.inner, cfg.threads,
                                keep_subs=False, meta=meta), {}
        levels = noise_levels(_noise_value(cfg.noise["h"]), _noise_value(cfg.noise["delta"]), cfg.seed,
                              tuple(cfg.noise.get("growth", (1.0, 1.0))))
        return run_implicit_noisy(prob, levels, cfg.alpha, cfg.gamma, cfg.x0, cfg.n_iters, cfg.inner,
                                  cfg.threads, keep_subs=False, meta=meta), {}
    if cfg.method == "explicit":
        return run_explicit(prob, cfg.alpha, cfg.gamma, cfg.x0, cfg.n_iters, cfg.threads,
                            check_collapse=bool(cfg.method_config.get("check_collapse", False)),
                            keep_subs=False, meta=meta), {}
    ncfg = _newton_config(cfg)
    if cfg.noise is None:
        tr = run_newton(prob, ncfg, cfg.x0, cfg.n_iters, cfg.threads, keep_subs=False, meta=meta)
        return tr, {"gate": tr.gate.to_dict()}
    noise = NoiseSpec(float(cfg.noise["h"]), float(cfg.noise["delta"]), cfg.seed,
                      tuple(cfg.noise.get("growth", (1.0, 1.0))))
    tr, n_star = run_newton_noisy(prob, noise, ncfg, cfg.x0, cfg.n_cap, cfg.threads, keep_subs=False, meta=meta)
    return tr, {"gate": tr.gate.to_dict(), "n_star": n_star}


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _finite(v):
    return v if (v is not None and math.isfinite(v)) else None


def run_experiment(cfg, out_dir=None, strict=None, threads=None):
    """Validate, run and write artifacts. Returns ``(exit_code, summary)``."""
    out_dir = out_dir or cfg.out_dir
    strict = cfg.strict if strict is None else strict
    if threads is not None:
        cfg.threads = threads
    os.makedirs(out_dir, exist_ok=True)
    chash = cfg.config_hash
    phash = cfg.problem.problem_hash()
    reports = run_validators(cfg)
    _write_json(os.path.join(out_dir, "validators.json"),
                {"config_hash": chash, "problem_hash": phash, "reports": [r.to_dict() for r in reports]})
    violated = [r.condition for r in reports if r.verdict == VIOLATED]
    summary = {"config_hash": chash, "problem_hash": phash, "seed": cfg.seed, "method": cfg.method,
               "violated_conditions": violated, "oracle": cfg.oracle}
    if strict and violated:
        summary["status"] = "strict_validator_failure"
        _write_json(os.path.join(out_dir, "summary.json"), summary)
        log.error("strict mode: violated conditions: %s", "; ".join(violated))
        return EXIT_STRICT, summary

    meta = {"config_hash": chash, "seed": cfg.seed}
    t0 = time.perf_counter()
    code = EXIT_OK
    extra = {}
    try:
        trace, extra = _execute(cfg, meta)
        summary["status"] = "ok"
    except StepError as exc:
        trace = getattr(exc, "trace", None)
        summary["status"] = f"solver_failure: {exc}"
        code = EXIT_SOLVER
    except NoAdmissibleIndex as exc:
        trace = None
        summary["status"] = f"solver_failure: {exc}"
        code = EXIT_SOLVER
    summary["wall_time"] = time.perf_counter() - t0
    summary.update(extra)
    if trace is not None:
        if "csv" in cfg.formats:
            trace.write_csv(os.path.join(out_dir, "trace.csv"))
        if "json" in cfg.formats:
            trace.write_json(os.path.join(out_dir, "trace.json"))
        errs = trace.error_array()
        summary["n_steps"] = trace.n_steps
        summary["final_error"] = _finite(trace.final_error)
        summary["floor"] = _finite(stagnation_floor(errs)) if errs.size else None
        summary["fitted_slope"] = None
        if trace.n_steps >= 10 and np.all(errs[1:] > 0):
            try:
                summary["fitted_slope"] = fit_rate(errs[1:], np.asarray(trace.alphas)).slope
            except ContractViolation:
                pass
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    return code, summary


# comparison -----------------------------------------------------------------------


def compare_runs(paths):
    """Final errors, floors and consecutive error ratios for traces of one problem."""
    if len(paths) < 2:
        raise ContractViolation("compare needs at least two traces")
    traces = [read_csv(p) for p in paths]
    hashes = {t.meta.get("problem_hash") for t in traces}
    if len(hashes) != 1 or None in hashes:
        raise ContractViolation(f"traces come from different problems (problem hashes {sorted(map(str, hashes))})")
    rows = []
    prev = None
    for p, t in zip(paths, traces):
        err = t.column("error")
        fe = float(err[-1])
        rows.append({"path": p, "final_error": fe, "floor": stagnation_floor(err),
                     "delta": t.meta.get("delta"), "h": t.meta.get("h"), "n_steps": int(err.size - 1),
                     "ratio": None if prev is None else prev / fe})
        prev = fe
    return {"problem_hash": hashes.pop(), "rows": rows}


# CLI ------------------------------------------------------------------------------


def _parser():
    ap = argparse.ArgumentParser(prog="accreg", description="Parallel regularization experiments.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    s = sub.add_parser("solve", help="validate schedules, run a method and write artifacts")
    s.add_argument("config")
    s.add_argument("--out", default=None)
    s.add_argument("--strict", action="store_true")
    s.add_argument("--threads", type=int, default=None)
    v = sub.add_parser("validate", help="run the schedule validators only")
    v.add_argument("config")
    v.add_argument("--strict", action="store_true")
    c = sub.add_parser("compare", help="compare final errors across traces")
    c.add_argument("traces", nargs="+")
    return ap


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "compare":
            report = compare_runs(args.traces)
            print(json.dumps(report, indent=2, default=_json_default))
            return EXIT_OK
        cfg = load_config(args.config)
        if args.cmd == "validate":
            reports = run_validators(cfg)
            print(json.dumps([r.to_dict() for r in reports], indent=2, default=_json_default))
            strict = args.strict or cfg.strict
            return EXIT_STRICT if strict and any(r.verdict == VIOLATED for r in reports) else EXIT_OK
        code, summary = run_experiment(cfg, args.out, args.strict or None, args.threads)
        print(json.dumps(summary, indent=2, default=_json_default))
        return code
    except (ConfigError, ContractViolation, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
