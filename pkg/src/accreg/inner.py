"""Inner solvers: the resolvent solve ``A(x) + c x = b`` and ``(alpha I + L) s = r``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractViolation, InnerSolveError
from .operators import AffineResidual, PsdLinear, ResidualOfNonexpansive
from .space import SpaceSpec, as_vector

CONTRACTION = "contraction"
DAMPED_NEWTON = "damped_newton"
DIRECT = "direct"
_METHODS = (CONTRACTION, DAMPED_NEWTON, DIRECT)
_MAX_HALVINGS = 30


@dataclass(frozen=True)
class InnerConfig:
    """``method=None`` picks a method from the operator structure."""

    tol: float = 1e-10
    max_iter: int = 500
    method: Optional[str] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ContractViolation("inner tol must be > 0")
        if self.max_iter < 1:
            raise ContractViolation("inner max_iter must be >= 1")
        if self.method is not None and self.method not in _METHODS:
            raise ContractViolation(f"unknown inner method {self.method!r}")

    def with_tol(self, tol):
        return InnerConfig(tol, self.max_iter, self.method)


def coupled_tol(alpha, b_scale=1.0):
    """Inner tolerance tied to the regularization level.

    ``min(1e-10, 1e-3 alpha^2)``, floored at a few ulps of the right-hand side
    so the request stays attainable in double precision.
    """
    return max(min(1e-10, 1e-3 * alpha * alpha), 1e-14 * max(1.0, b_scale))


@dataclass
class InnerResult:
    x: np.ndarray
    residual: float
    iters: int
    method: str

    def __iter__(self):
        return iter((self.x, self.residual, self.iters))


def _nonexpansive_part(op):
    """Return ``(T, shift)`` with ``A(x) = x - T(x) - shift`` or ``None``."""
    if isinstance(op, ResidualOfNonexpansive):
        return op.T, None
    if isinstance(op, AffineResidual) and isinstance(op.base, ResidualOfNonexpansive):
        return op.base.T, op.data
    return None


def _pick_method(op, c, cfg):
    if cfg.method is not None:
        return cfg.method
    if op.is_affine:
        return DIRECT
    if _nonexpansive_part(op) is not None:
        # iterations needed for a 1e-16 relative reduction at factor 1/(1+c)
        needed = 37.0 / math.log1p(c)
        return CONTRACTION if needed <= cfg.max_iter else DAMPED_NEWTON
    return DAMPED_NEWTON


def solve_regularized(op, c, b, cfg=InnerConfig(), x0=None, space=None):
    """Solve ``A(x) + c x = b`` to ``|residual| <= cfg.tol``.

    The residual is measured in the norm of ``space`` (Euclidean if omitted).
    Returns an :class:`InnerResult` that also unpacks as ``(x, residual, iters)``.
    """
    if not c > 0:
        raise ContractViolation(f"regularization constant must be > 0, got {c}")
    b = as_vector(b, op.dim, "b")
    norm = _norm_for(space)
    method = _pick_method(op, c, cfg)
    if method == DIRECT:
        return _direct(op, c, b, cfg, norm)
    if method == CONTRACTION:
        return _contraction(op, c, b, cfg, x0, norm)
    return _damped_newton(op, c, b, cfg, x0, norm)


def _norm_for(space):
    if space is None or space.euclidean:
        return lambda v: float(np.linalg.norm(v))
    return space.norm


def _residual(op, c, b, x):
    return op.apply(x) + c * x - b


def _direct(op, c, b, cfg, norm):
    base = op.base if isinstance(op, AffineResidual) else op
    if isinstance(base, PsdLinear):
        rhs = b + op.data if isinstance(op, AffineResidual) else b
        x = base.solve_shifted(c, rhs)
    else:
        parts = op.affine_parts()
        if parts is None:
            raise ContractViolation("direct solve needs an affine operator")
        M, shift = parts
        x = np.linalg.solve(M + c * np.eye(op.dim), b - shift)
    r = norm(_residual(op, c, b, x))
    if not r <= cfg.tol:
        # one step of iterative refinement
        x = x - _direct_correction(op, c, _residual(op, c, b, x))
        r = norm(_residual(op, c, b, x))
    if not r <= cfg.tol:
        raise InnerSolveError(f"direct solve residual {r:.3e} > tol {cfg.tol:.1e}", r, 1)
    return InnerResult(x, r, 1, DIRECT)


def _direct_correction(op, c, res):
    base = op.base if isinstance(op, AffineResidual) else op
    if isinstance(base, PsdLinear):
        return base.solve_shifted(c, res)
    M, _ = op.affine_parts()
    return np.linalg.solve(M + c * np.eye(op.dim), res)


def _contraction(op, c, b, cfg, x0, norm):
    part = _nonexpansive_part(op)
    if part is None:
        raise ContractViolation("contraction iteration needs an operator of the form I - T")
    T, shift = part
    rhs = b if shift is None else b + shift
    # (1 + c) x = rhs + T(x); the map has Lipschitz constant 1/(1+c)
    x = rhs / (1.0 + c) if x0 is None else as_vector(x0, op.dim, "x0").copy()
    r = math.inf
    Tx = T(x)
    for k in range(1, cfg.max_iter + 1):
        x = (rhs + Tx) / (1.0 + c)
        Tx = T(x)
        # residual A(x) + c x - b at the new iterate
        r = norm((1.0 + c) * x - Tx - rhs)
        if r <= cfg.tol:
            return InnerResult(x, r, k, CONTRACTION)
    raise InnerSolveError(f"contraction did not converge in {cfg.max_iter} iterations "
                          f"(residual {r:.3e})", r, cfg.max_iter)


def _damped_newton(op, c, b, cfg, x0, norm):
    x = b / (1.0 + c) if x0 is None else as_vector(x0, op.dim, "x0").copy()
    res = _residual(op, c, b, x)
    r = norm(res)
    eye = np.eye(op.dim)
    for k in range(1, cfg.max_iter + 1):
        if r <= cfg.tol:
            return InnerResult(x, r, k - 1, DAMPED_NEWTON)
        Jm = op.jacobian(x, strict=False) + c * eye
        found = _halving_search(op, c, b, x, r, np.linalg.solve(Jm, res), norm)
        # at a kink the chosen Jacobian element may not give descent; shift
        # towards the residual direction, which does for a monotone operator
        mu = 1e-8 * max(1.0, float(np.max(np.abs(np.diag(Jm)))))
        while found is None and mu < 1e8:
            found = _halving_search(op, c, b, x, r, np.linalg.solve(Jm + mu * eye, res), norm)
            mu *= 100.0
        if found is None:
            raise InnerSolveError(f"damped Newton stalled after {_MAX_HALVINGS} halvings "
                                  f"(residual {r:.3e})", r, k)
        x, res, r = found
    if r <= cfg.tol:
        return InnerResult(x, r, cfg.max_iter, DAMPED_NEWTON)
    raise InnerSolveError(f"damped Newton did not converge in {cfg.max_iter} iterations "
                          f"(residual {r:.3e})", r, cfg.max_iter)


def _halving_search(op, c, b, x, r, step, norm):
    t = 1.0
    for _ in range(_MAX_HALVINGS + 1):
        x_try = x - t * step
        res_try = _residual(op, c, b, x_try)
        r_try = norm(res_try)
        if r_try < r:
            return x_try, res_try, r_try
        t *= 0.5
    return None


def _as_matrix(L, dim):
    if callable(L) and not isinstance(L, np.ndarray):
        return np.column_stack([L(e) for e in np.eye(dim)])
    return np.asarray(L, dtype=float)


def solve_shifted_linear(L, alpha, r, cfg=InnerConfig(), space=None):
    """Solve ``(alpha I + L) s = r`` for an accretive linear ``L``.

    ``L`` is a matrix or a callable ``v -> L v``. The resolvent bound
    ``|s| <= |r| / alpha`` is asserted after the solve.
    """
    if not alpha > 0:
        raise ContractViolation(f"alpha must be > 0, got {alpha}")
    r = as_vector(r, name="r")
    dim = r.shape[0]
    space = space or SpaceSpec.hilbert(dim)
    Lm = _as_matrix(L, dim)
    A = Lm + alpha * np.eye(dim)
    s = np.linalg.solve(A, r)
    res = float(np.linalg.norm(A @ s - r))
    if not res <= cfg.tol:
        s = s + np.linalg.solve(A, r - A @ s)
        res = float(np.linalg.norm(A @ s - r))
    if not res <= cfg.tol:
        raise InnerSolveError(f"shifted solve residual {res:.3e} > tol {cfg.tol:.1e}", res, 2)
    bound = (space.norm(r) + cfg.tol) / alpha
    ns = space.norm(s)
    if ns > bound * (1.0 + 1e-9):
        raise InnerSolveError(f"resolvent bound violated: |s| = {ns:.6e} > |r|/alpha = {bound:.6e}; "
                              "is L accretive?", res, 1)
    return s
