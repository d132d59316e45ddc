"""Oracles for the minimum-norm solution and post-hoc run analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractViolation
from .inner import InnerConfig
from .operators import AffineResidual, PsdLinear

CROSS_CHECK_ALPHA = 1e-8
CROSS_CHECK_TOL = 1e-4


class NoOracle(Exception):
    """No route to the minimum-norm solution is available for this problem."""


@dataclass
class OracleResult:
    x: np.ndarray
    route: str
    cross_check: Optional[float] = None
    cross_checked: bool = False
    note: str = ""

    def to_dict(self):
        return {"route": self.route, "cross_check": self.cross_check, "cross_checked": self.cross_checked,
                "note": self.note, "norm": float(np.linalg.norm(self.x))}


def _linear_parts(problem):
    """Stacked ``(M_i, f_i)`` with ``A_i(x) = M_i x - f_i`` when every equation is PSD-linear based."""
    out = []
    for op in problem.equations:
        if isinstance(op, PsdLinear):
            out.append((op.matrix, np.zeros(op.dim)))
        elif isinstance(op, AffineResidual) and isinstance(op.base, PsdLinear):
            out.append((op.base.matrix, np.asarray(op.data)))
        else:
            return None
    return out


def tiny_alpha_solution(problem, alpha=CROSS_CHECK_ALPHA, tol=1e-13):
    from .pirm import solve_sum_regularized

    return solve_sum_regularized(problem, alpha, InnerConfig(tol=tol, max_iter=500)).x


def _declared_set(problem):
    d = problem.solution_oracle
    if d and d.get("kind") == "affine_set":
        return np.asarray(d["point"], float), np.asarray(d["basis"], float)
    return None


def min_norm_oracle(problem, cross_check=True):
    """Minimum-norm solution of the system.

    Routes: ``pseudoinverse`` (Hilbert space, all equations PSD-linear),
    ``declared_set`` (projection of 0 onto a declared affine solution set,
    Hilbert only) and ``tiny_alpha`` (regularized sum-equation solve at
    ``alpha = 1e-8``; used alone for l^p and flagged as not cross-checked).
    """
    sp = problem.space
    parts = _linear_parts(problem)
    declared = _declared_set(problem)
    if sp.euclidean and parts is not None:
        M = np.vstack([m for m, _ in parts])
        f = np.concatenate([g for _, g in parts])
        x = np.linalg.pinv(M, rcond=1e-10) @ f
        res = OracleResult(x, "pseudoinverse")
    elif sp.euclidean and declared is not None:
        p, B = declared
        Qb = np.linalg.qr(B)[0] if B.size else np.zeros((sp.dim, 0))
        x = p - Qb @ (Qb.T @ p)
        res = OracleResult(x, "declared_set")
    else:
        try:
            x = tiny_alpha_solution(problem)
        except Exception as exc:  # noqa: BLE001
            raise NoOracle(f"no oracle route: {exc}") from exc
        return OracleResult(x, "tiny_alpha", note="no independent cross-check")
    if cross_check:
        y = tiny_alpha_solution(problem)
        dev = sp.norm(y - res.x) / max(1.0, sp.norm(res.x))
        res.cross_check = dev
        res.cross_checked = True
        if dev > CROSS_CHECK_TOL:
            res.note = f"cross-check deviation {dev:.3e} exceeds {CROSS_CHECK_TOL:g}"
    return res


@dataclass
class VIReport:
    max_value: float
    values: list
    tol: float
    passed: bool


def variational_inequality_check(space, xhat, solution_samples, tol=1e-8):
    """``max_k <xhat, J(xhat - x_k)>`` over solutions ``x_k``; passes when ``<= tol``."""
    xhat = space.check(xhat, "xhat")
    vals = [space.dual_pair(xhat, space.duality_map(xhat - space.check(s, "sample"))) for s in solution_samples]
    m = max(vals) if vals else -math.inf
    return VIReport(float(m), vals, tol, bool(m <= tol))


def sample_solution_set(problem, n_samples=20, seed=0, scale=1.0):
    """Random points of a declared affine solution set."""
    declared = _declared_set(problem)
    if declared is None:
        raise ContractViolation("problem declares no solution set")
    p, B = declared
    rng = np.random.default_rng(seed)
    return [p + B @ (scale * rng.standard_normal(B.shape[1])) for _ in range(n_samples)]


@dataclass
class RateFit:
    slope: float
    intercept: float
    residual: float
    n_points: int

    def __iter__(self):
        return iter((self.slope, self.intercept, self.residual))

    @property
    def constant(self):
        return math.exp(self.intercept)


def fit_rate(errors, alphas, tail_fraction=0.5):
    """Least-squares slope of ``log error`` against ``log alpha`` over the trailing fraction."""
    e = np.asarray(errors, dtype=float)
    a = np.asarray(alphas, dtype=float)
    if e.shape != a.shape:
        raise ContractViolation("errors and alphas differ in length")
    if not 0 < tail_fraction <= 1:
        raise ContractViolation("tail_fraction must lie in (0, 1]")
    n_tail = int(math.ceil(tail_fraction * e.size))
    e, a = e[e.size - n_tail:], a[a.size - n_tail:]
    if e.size < 5:
        raise ContractViolation("rate fit needs at least 5 tail points")
    if np.any(e <= 0) or np.any(a <= 0):
        raise ContractViolation("rate fit needs positive errors and alphas")
    X = np.column_stack([np.log(a), np.ones(e.size)])
    y = np.log(e)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    return RateFit(float(coef[0]), float(coef[1]), resid, int(e.size))


def stagnation_floor(errors):
    """Minimum over the trailing window of ``max(10, 5%)`` entries."""
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise ContractViolation("stagnation_floor needs a nonempty sequence")
    w = max(10, int(math.ceil(0.05 * e.size)))
    return float(np.min(e[-w:]))


def ripple_nonincreasing(values, band=0.05):
    """True when every value is at most ``(1 + band)`` times the running minimum before it."""
    v = np.asarray(values, dtype=float)
    run_min = np.minimum.accumulate(v)
    return bool(np.all(v[1:] <= (1.0 + band) * run_min[:-1]))
