"""Parallel iterative regularization: implicit (exact and noisy) and explicit schemes.

Implicit step: solve ``A_i(x^i) + (alpha/N + gamma) x^i = gamma x_n`` for every
``i`` and average. Explicit step: ``z^i = z - tau (A_i(z) + (alpha/N) z)`` with
``tau = 1/gamma``, then average. Sub-problems are independent and may run on
a thread pool; the average is always a fixed-order sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import ContractViolation, InnerSolveError, StepError
from .inner import InnerConfig, coupled_tol, solve_regularized
from .operators import AffineResidual, ResidualOfNonexpansive, perturb
from .parallel import map_equations, ordered_mean, ordered_sum
from .trace import RunTrace


@dataclass
class Step:
    """Result of one outer step; unpacks as ``(x_next, subs)``."""

    x_next: np.ndarray
    subs: list
    inner_iters: Optional[list] = None
    inner_residuals: Optional[list] = None
    values: Optional[list] = None

    def __iter__(self):
        return iter((self.x_next, self.subs))


def _check_params(alpha, gamma):
    if not alpha > 0:
        raise ContractViolation(f"alpha must be > 0, got {alpha}")
    if not gamma > 0:
        raise ContractViolation(f"gamma must be > 0, got {gamma}")


def _inner_for(inner, alpha, b_scale):
    if inner is None:
        return InnerConfig(tol=coupled_tol(alpha, b_scale))
    return inner


def implicit_step(problem, x_n, alpha, gamma, inner=None, threads=1, ops=None):
    """One implicit step; ``inner=None`` couples the inner tolerance to ``alpha``."""
    _check_params(alpha, gamma)
    x_n = problem.space.check(x_n, "x_n")
    ops = problem.equations if ops is None else ops
    N = len(ops)
    c = alpha / N + gamma
    b = gamma * x_n
    cfg = _inner_for(inner, alpha, float(np.max(np.abs(b))) if b.size else 1.0)

    def solve(i):
        return solve_regularized(ops[i], c, b, cfg, x0=x_n, space=problem.space)

    results = map_equations(solve, N, threads)
    subs = [r.x for r in results]
    return Step(ordered_mean(subs), subs, [r.iters for r in results], [r.residual for r in results])


def _start_trace(problem, method, x0, keep_subs, meta=None):
    trace = RunTrace(method, problem.N, keep_subs=keep_subs)
    trace.meta.update({"method": method, "problem_hash": problem.problem_hash()})
    if meta:
        trace.meta.update(meta)
    _record(trace, problem, x0)
    return trace


def _record(trace, problem, x):
    trace.record_iterate(x, problem.residual_norms(x), problem.error(x))


def _drive(trace, n_iters, step_fn):
    """Run ``step_fn(n, x_n) -> Step`` for ``n < n_iters``; attach the partial trace on failure."""
    x = trace.iterates[-1]
    for n in range(n_iters):
        try:
            x = step_fn(n, x)
        except StepError as exc:
            trace.failure = f"step {n}: {exc}"
            exc.trace = trace
            raise
    return trace


def run_implicit(problem, alpha, gamma, x0, n_iters, inner=None, threads=1, keep_subs=True, meta=None):
    """Fixed-length implicit run from ``x0``."""
    if n_iters < 0:
        raise ContractViolation("n_iters must be >= 0")
    x0 = problem.space.check(x0, "x0")
    trace = _start_trace(problem, "implicit", x0, keep_subs, meta)

    def step(n, x):
        a, g = alpha(n), gamma(n)
        st = implicit_step(problem, x, a, g, inner, threads)
        trace.record_step(a, g, st.subs, st.inner_iters, st.inner_residuals)
        _record(trace, problem, st.x_next)
        return st.x_next

    return _drive(trace, n_iters, step)


def noise_levels(h, delta, seed, growth=(1.0, 1.0)):
    """Level-indexed noise family ``n -> NoiseSpec(h(n), delta(n), seed)``.

    ``h`` and ``delta`` are callables, schedules, sequences or constants.
    """
    from .operators import NoiseSpec

    def as_fn(v):
        if callable(v):
            return v
        if np.isscalar(v):
            return lambda n: float(v)
        arr = np.asarray(v, dtype=float)
        return lambda n: float(arr[n])

    hf, df = as_fn(h), as_fn(delta)
    return lambda n: NoiseSpec(hf(n), df(n), seed, tuple(growth))


def perturbed_equations(problem, noise):
    """Equations with level noise; equation ``i`` uses noise stream ``i``."""
    return tuple(perturb(op, noise, problem.space, stream=i) for i, op in enumerate(problem.equations))


def run_implicit_noisy(problem, noise_per_level, alpha, gamma, z0, n_iters, inner=None, threads=1,
                       keep_subs=True, meta=None):
    """Implicit run where step ``n`` uses the operators perturbed at level ``n``.

    ``noise_per_level`` is a callable ``n -> NoiseSpec`` or a sequence of them.
    Residuals and errors in the trace are measured against the exact system.
    """
    if n_iters < 0:
        raise ContractViolation("n_iters must be >= 0")
    level = noise_per_level if callable(noise_per_level) else noise_per_level.__getitem__
    z0 = problem.space.check(z0, "z0")
    trace = _start_trace(problem, "implicit_noisy", z0, keep_subs, meta)

    def step(n, z):
        noise = level(n)
        a, g = alpha(n), gamma(n)
        ops = perturbed_equations(problem, noise)
        st = implicit_step(problem, z, a, g, inner, threads, ops)
        trace.record_step(a, g, st.subs, st.inner_iters, st.inner_residuals)
        _record(trace, problem, st.x_next)
        trace.add_column("noise_h", noise.h)
        trace.add_column("noise_delta", noise.delta)
        return st.x_next

    return _drive(trace, n_iters, step)


# explicit scheme ---------------------------------------------------------------


def explicit_step(problem, z_n, alpha, gamma, threads=1, ops=None):
    """``z^i = z_n - tau (A_i(z_n) + (alpha/N) z_n)``, ``z_next`` = mean of the ``z^i``."""
    if not alpha >= 0:
        raise ContractViolation(f"alpha must be >= 0, got {alpha}")
    if not gamma > 0:
        raise ContractViolation(f"gamma must be > 0, got {gamma}")
    z_n = problem.space.check(z_n, "z_n")
    ops = problem.equations if ops is None else ops
    N = len(ops)
    tau = 1.0 / gamma
    shift = (alpha / N) * z_n
    values = map_equations(lambda i: ops[i].apply(z_n), N, threads)
    subs = [z_n - tau * (v + shift) for v in values]
    return Step(ordered_mean(subs), subs, values=values)


def _collapsed(z_n, values, alpha, gamma):
    N = len(values)
    return z_n - (1.0 / (N * gamma)) * (ordered_sum(values) + alpha * z_n)


def explicit_collapse_check(problem, z_n, alpha, gamma):
    """``|explicit step - collapsed form|`` where the collapsed form is
    ``z_n - (sum_i A_i(z_n) + alpha z_n) / (N gamma)``.
    """
    st = explicit_step(problem, z_n, alpha, gamma)
    return problem.space.norm(st.x_next - _collapsed(np.asarray(z_n, float), st.values, alpha, gamma))


def run_explicit(problem, alpha, gamma, z0, n_iters, threads=1, check_collapse=False, keep_subs=True,
                 meta=None):
    """Fixed-length explicit run; ``check_collapse`` records the collapse deviation per step."""
    if n_iters < 0:
        raise ContractViolation("n_iters must be >= 0")
    z0 = problem.space.check(z0, "z0")
    trace = _start_trace(problem, "explicit", z0, keep_subs, meta)

    def step(n, z):
        a, g = alpha(n), gamma(n)
        st = explicit_step(problem, z, a, g, threads)
        trace.record_step(a, g, st.subs)
        if check_collapse:
            dev = problem.space.norm(st.x_next - _collapsed(z, st.values, a, g))
            trace.add_column("collapse_deviation", dev / max(1.0, problem.space.norm(z)))
        _record(trace, problem, st.x_next)
        return st.x_next

    return _drive(trace, n_iters, step)


# sum equation and regularized path ------------------------------------------------


def phi_inverse(op, space, s, u):
    """``t`` with ``phi_op(s, t) = u``; ``inf`` when the operator has no modulus."""
    base = op.base if isinstance(op, AffineResidual) else op
    if isinstance(base, ResidualOfNonexpansive):
        return float(space.phi_inverse_function(s, u))
    if u == 0:
        return 0.0
    if op.phi(space, s, 1.0) is None:
        return math.inf
    f = lambda t: op.phi(space, s, t) - u
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    return float(brentq(f, 0.0, hi, xtol=1e-300, rtol=1e-14))


@dataclass
class SumEquivalenceReport:
    sum_residual: float
    individual: list
    max_individual: float
    bounds: list
    tol: float
    applicable: bool
    passed: Optional[bool]
    radius: float

    def to_dict(self):
        return {k: getattr(self, k) for k in ("sum_residual", "individual", "max_individual", "bounds",
                                              "tol", "applicable", "passed", "radius")}


def check_sum_equivalence(problem, y, tol, solution=None):
    """Compare ``|sum_i A_i(y)|`` with the individual residuals ``|A_i(y)|``.

    When the sum residual is within ``tol`` every individual residual must
    respect ``phi_R^{-1}(|sum A_i(y)| |y - z|)`` for a solution ``z`` and
    ``R = max(|y|, |z|)``: pairing the sum with ``J(y - z)`` and using
    inverse uniform accretivity of each equation gives this bound.
    """
    sp = problem.space
    y = sp.check(y, "y")
    z = solution
    if z is None:
        z = problem.known_solution if problem.known_solution is not None else problem.meta.get("feasible_point")
    individual = problem.residual_norms(y)
    sum_res = sp.norm(problem.sum_operator().apply(y))
    applicable = bool(sum_res <= tol) and z is not None
    R = max(sp.norm(y), sp.norm(z)) if z is not None else math.nan
    bounds, passed = [], None
    if applicable:
        R = max(R, 1e-300)
        u = sum_res * sp.norm(y - z)
        bounds = [phi_inverse(op, sp, R, u) for op in problem.equations]
        passed = bool(all(r <= b * (1 + 1e-9) + 1e-15 for r, b in zip(individual, bounds)))
    return SumEquivalenceReport(sum_res, individual.tolist(), float(np.max(individual)), bounds, tol,
                                applicable, passed, R)


def solve_sum_regularized(problem, alpha, inner=None, x0=None):
    """Solve ``sum_i A_i(x) + alpha x = 0``.

    Nonlinear sums at small ``alpha`` are reached by continuation: decade steps
    down from ``alpha = 1``, each warm-started from the previous solution, since
    a cold Newton start can cycle between the pieces of a nonsmooth operator.
    """
    cfg = inner or InnerConfig(tol=1e-13, max_iter=500)
    A = problem.sum_operator()
    b = np.zeros(problem.dim)
    if A.is_affine or alpha >= 0.1:
        return solve_regularized(A, alpha, b, cfg, x0=x0, space=problem.space)
    try:
        return solve_regularized(A, alpha, b, cfg, x0=x0, space=problem.space)
    except InnerSolveError:
        pass
    x = x0
    n_dec = int(math.ceil(-math.log10(alpha)))
    for a in np.geomspace(1.0, alpha, n_dec + 1):
        res = solve_regularized(A, float(a), b, cfg, x0=x, space=problem.space)
        x = res.x
    return res


@dataclass
class PathReport:
    alphas: list
    norms: list
    increments: list
    increment_bounds: list
    residuals: list
    residual_bounds: list
    norm_bound: float
    slack: float
    norm_ok: bool
    increment_ok: bool
    residual_ok: bool
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.norm_ok and self.increment_ok and self.residual_ok


def regularized_path_checks(problem, alphas, slack=1e-6, inner=None, R=None):
    """Check the regularized path ``x_a`` solving ``sum A_i(x) + a x = 0`` on a grid of ``a``.

    Checks ``|x_a| <= 2|xhat|``, ``|x_a - x_b| <= 2|xhat| |a - b| / a`` for
    consecutive grid points and ``|A_i(x_a)| <= phi_R^{-1}(6 a |xhat|^2)`` with
    ``R >= 2|xhat|``, each within ``slack``.
    """
    if problem.known_solution is None:
        raise ContractViolation("path checks need the minimum-norm solution")
    sp = problem.space
    xn = sp.norm(problem.known_solution)
    R = 2.0 * xn if R is None else R
    if R < 2.0 * xn:
        raise ContractViolation("R must be >= 2 |xhat|")
    alphas = [float(a) for a in alphas]
    path, norms, residuals, rbounds = [], [], [], []
    x = None
    for a in alphas:
        x = solve_sum_regularized(problem, a, inner, x0=x).x
        path.append(x)
        norms.append(sp.norm(x))
        residuals.append(problem.residual_norms(x).tolist())
        rbounds.append([phi_inverse(op, sp, max(R, 1e-300), 6.0 * a * xn * xn) for op in problem.equations])
    incs, ibounds = [], []
    for k in range(len(alphas) - 1):
        incs.append(sp.norm(path[k] - path[k + 1]))
        ibounds.append(2.0 * xn * abs(alphas[k + 1] - alphas[k]) / alphas[k])
    norm_ok = all(v <= 2.0 * xn + slack for v in norms)
    inc_ok = all(v <= b + slack for v, b in zip(incs, ibounds))
    res_ok = all(r <= b + slack for rs, bs in zip(residuals, rbounds) for r, b in zip(rs, bs))
    return PathReport(alphas, norms, incs, ibounds, residuals, rbounds, 2.0 * xn, slack,
                      norm_ok, inc_ok, res_ok)


def boundedness_radius(problem, x0):
    """``max(|x0 - xhat|, |xhat|) + |xhat|``, the bound on ``|x_n - xhat|`` along runs."""
    sp = problem.space
    xh = problem.known_solution
    return max(sp.norm(x0 - xh), sp.norm(xh)) + sp.norm(xh)
