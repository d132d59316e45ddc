"""Parallel regularized Newton-type method with source-condition anchors.

Step: for each equation solve
``(A_i'(x_n) + (alpha_n/N) I) s_i = -A_i(x_n) - (alpha_n/N)(x_n - x_i^0)``,
set ``x_n^i = x_n + s_i`` and average. With ``omega_n = N |x_n - xhat| / alpha_n``
the error obeys ``omega_{n+1} <= a + b omega_n + c omega_n^2``; the rate gate
checks that this recursion stays bounded.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractViolation, NoAdmissibleIndex
from .inner import InnerConfig, coupled_tol, solve_shifted_linear
from .parallel import map_equations, ordered_mean
from .pirm import Step, _drive, _record, _start_trace, perturbed_equations
from .schedules import ALPHA, PowerLaw, Table, validate_newton

DEFAULT_N_CAP = 10 ** 6


@dataclass
class SourceAnchors:
    """Anchors ``x_i^0 = xhat + A_i'(xhat) v_i`` and ``sum_i |v_i|``."""

    points: list
    v_norm_sum: float

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]


def make_source_anchors(problem, xhat, v):
    if len(v) != problem.N:
        raise ContractViolation(f"need {problem.N} source vectors, got {len(v)}")
    sp = problem.space
    xhat = sp.check(xhat, "xhat")
    vs = [sp.check(vi, "v") for vi in v]
    points = [xhat + op.derivative_apply(xhat, vi) for op, vi in zip(problem.equations, vs)]
    return SourceAnchors(points, float(sum(sp.norm(vi) for vi in vs)))


@dataclass
class NewtonConfig:
    anchors: SourceAnchors
    alpha: object
    rho_cert: Optional[float] = None
    eta: float = 1.0
    inner: Optional[InnerConfig] = None
    K: Optional[float] = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ContractViolation("eta must be > 0")
        if self.rho_cert is None:
            self.rho_cert = validate_newton(self.alpha, N_max=1000).extra["rho"]
        if not isinstance(self.anchors, SourceAnchors):
            self.anchors = SourceAnchors(list(self.anchors), math.nan)


def problem_K(problem, box_radius=2.0):
    """Largest derivative Lipschitz constant over the equations (sampled for nonlinear ones)."""
    return max(op.lipschitz_derivative_constant(box_radius) for op in problem.equations)


def newton_step(problem, x_n, alpha, anchors, inner=None, threads=1, ops=None):
    if not alpha > 0:
        raise ContractViolation(f"alpha must be > 0, got {alpha}")
    sp = problem.space
    x_n = sp.check(x_n, "x_n")
    ops = problem.equations if ops is None else ops
    N = len(ops)
    if len(anchors) != N:
        raise ContractViolation(f"need {N} anchors, got {len(anchors)}")
    a_N = alpha / N

    def solve(i):
        r = -ops[i].apply(x_n) - a_N * (x_n - anchors[i])
        cfg = inner or InnerConfig(tol=coupled_tol(alpha, float(np.linalg.norm(r))))
        return solve_shifted_linear(ops[i].jacobian(x_n, strict=True), a_N, r, cfg, sp)

    steps = map_equations(solve, N, threads)
    subs = [x_n + s for s in steps]
    return Step(ordered_mean(subs), subs)


# rate gate ---------------------------------------------------------------------


@dataclass
class GateReport:
    a: float
    b: float
    c: float
    passed: bool
    M_plus: float
    M_minus: float
    omega0: Optional[float] = None
    start: str = "unverifiable"
    ball_radius: Optional[float] = None

    @property
    def rate_claim(self):
        return self.passed and self.start == "ok"

    def to_dict(self):
        return {k: getattr(self, k) for k in ("a", "b", "c", "passed", "M_plus", "M_minus", "omega0",
                                              "start", "ball_radius")}


def recursion_constants(K, rho, v_norm_sum, N, eta=None, alpha0=None):
    """``(a, b, c)`` of the omega recursion; the noisy variant when ``eta`` is given."""
    s = 2.0 * v_norm_sum / N
    if eta is None:
        a = rho * s
    else:
        a = rho * (s * (alpha0 * eta + 1.0) + eta)
    return a, rho * K * s, 0.5 * K * rho


def rate_gate(K, rho, v_norm_sum, N, omega0=None, alpha0=None, eta=None):
    """Check ``b + 2 sqrt(ac) < 1`` and, when ``omega0`` is known, ``omega0 <= M_+``."""
    a, b, c = recursion_constants(K, rho, v_norm_sum, N, eta, alpha0)
    passed = bool(b + 2.0 * math.sqrt(a * c) < 1.0)
    if c == 0:
        M_plus = math.inf
        M_minus = a / (1.0 - b) if b < 1 else math.inf
    else:
        disc = (1.0 - b) ** 2 - 4.0 * a * c
        root = math.sqrt(disc) if disc >= 0 else math.nan
        M_plus = (1.0 - b + root) / (2.0 * c)
        M_minus = (1.0 - b - root) / (2.0 * c)
    start = "unverifiable"
    ball = None
    if omega0 is not None:
        start = "ok" if (passed and omega0 <= M_plus) else "violated"
        if passed and alpha0 is not None:
            ball = max(omega0, M_minus) * alpha0 / N
    return GateReport(a, b, c, passed, M_plus, M_minus, omega0, start, ball)


def omega(problem, x, alpha):
    return problem.N * problem.error(x) / alpha


# runs --------------------------------------------------------------------------


def _gate_for(problem, cfg, x0, noisy_eta=None):
    K = cfg.K if cfg.K is not None else problem_K(problem)
    a0 = cfg.alpha(0)
    om0 = omega(problem, x0, a0) if problem.known_solution is not None else None
    return rate_gate(K, cfg.rho_cert, cfg.anchors.v_norm_sum, problem.N, om0, a0, noisy_eta), K


def _newton_loop(problem, cfg, x0, n_iters, threads, keep_subs, method, ops, gate, meta):
    trace = _start_trace(problem, method, x0, keep_subs, meta)
    trace.meta.update({"K": gate[1], "rho": cfg.rho_cert, "eta": cfg.eta})
    rep = gate[0]
    known = problem.known_solution is not None

    def step(n, x):
        a = cfg.alpha(n)
        st = newton_step(problem, x, a, cfg.anchors, cfg.inner, threads, ops)
        trace.record_step(a, None, st.subs)
        _record(trace, problem, st.x_next)
        if known:
            a_next = cfg.alpha(n + 1)
            om = omega(problem, x, a)
            tol = cfg.inner.tol if cfg.inner else coupled_tol(a)
            trace.add_column("omega", omega(problem, st.x_next, a_next))
            trace.add_column("envelope_bound", rep.a + rep.b * om + rep.c * om * om + 10.0 * tol / a_next)
        return st.x_next

    return _drive(trace, n_iters, step)


def run_newton(problem, cfg, x0, n_iters, threads=1, keep_subs=True, meta=None):
    """Fixed-length Newton run; ``trace.meta['gate']`` holds the rate-gate report."""
    if n_iters < 0:
        raise ContractViolation("n_iters must be >= 0")
    x0 = problem.space.check(x0, "x0")
    gate = _gate_for(problem, cfg, x0)
    trace = _newton_loop(problem, cfg, x0, n_iters, threads, keep_subs, "newton", None, gate, meta)
    trace.meta["gate_passed"] = gate[0].passed
    trace.meta["gate_start"] = gate[0].start
    trace.gate = gate[0]
    return trace


class StoppingIndex(int):
    """Stopping index; ``clamped`` is set when the admissible set was cut at ``n_cap``."""

    clamped: bool = False

    def __new__(cls, value, clamped=False):
        obj = super().__new__(cls, value)
        obj.clamped = clamped
        return obj


_REL = 1e-12


def stopping_index(delta, h, eta, alpha, n_cap=DEFAULT_N_CAP):
    """Largest ``n <= n_cap`` with ``alpha_n^2 >= (delta + h) / eta``."""
    if delta < 0 or h < 0:
        raise ContractViolation("noise levels must be >= 0")
    if not eta > 0:
        raise ContractViolation("eta must be > 0")
    if n_cap < 0:
        raise ContractViolation("n_cap must be >= 0")
    s = (delta + h) / eta

    def ok(n):
        return alpha(n) ** 2 >= s * (1.0 - _REL)

    if s == 0:
        warnings.warn("delta + h = 0: stopping index clamped at n_cap", stacklevel=2)
        return StoppingIndex(n_cap, clamped=True)
    if not ok(0):
        raise NoAdmissibleIndex(
            f"noise exceeds regularization range: (delta+h)/eta = {s:.6g} > alpha_0^2 = {alpha(0) ** 2:.6g}")
    if isinstance(alpha, PowerLaw) and alpha.role == ALPHA and alpha.k > 0:
        est = (alpha.c0 ** 2 / s) ** (1.0 / (2.0 * alpha.k)) - 1.0
        n = int(min(max(math.floor(est), 0), n_cap))
        while n < n_cap and ok(n + 1):
            n += 1
        while n > 0 and not ok(n):
            n -= 1
        return StoppingIndex(n, clamped=(n == n_cap and ok(n_cap)))
    limit = n_cap if not isinstance(alpha, Table) else min(n_cap, len(alpha.table) - 1)
    n = 0
    while n < limit and ok(n + 1):
        n += 1
    return StoppingIndex(n, clamped=(n == n_cap))


def run_newton_noisy(problem, noise, cfg, x0, n_cap=DEFAULT_N_CAP, threads=1, keep_subs=True, meta=None):
    """Newton iteration on the perturbed system up to ``n_star = N(delta, h) + 1``.

    Returns ``(trace, n_star)``. With zero noise the run is clamped at ``n_cap``
    iterations and follows the exact run.
    """
    x0 = problem.space.check(x0, "x0")
    N_idx = stopping_index(noise.delta, noise.h, cfg.eta, cfg.alpha, n_cap)
    n_star = int(N_idx) if N_idx.clamped else int(N_idx) + 1
    ops = perturbed_equations(problem, noise)
    eta = None if (noise.h == 0 and noise.delta == 0) else cfg.eta
    gate = _gate_for(problem, cfg, x0, eta)
    method = "newton" if eta is None else "newton_noisy"
    trace = _newton_loop(problem, cfg, x0, n_star, threads, keep_subs, method, ops, gate, meta)
    trace.extra["n_star_marker"] = [0.0] * n_star + [1.0]
    trace.meta.update({"n_star": n_star, "stop_clamped": N_idx.clamped, "delta": noise.delta, "h": noise.h,
                       "gate_passed": gate[0].passed, "gate_start": gate[0].start})
    trace.gate = gate[0]
    return trace, n_star
