"""Systems of operator equations and the generators used in tests and configs."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractViolation, DimensionMismatch
from .operators import (
    AffineResidual,
    BallProjection,
    BoxProjection,
    Compose,
    DiagonalMonotone,
    LinearMap,
    PsdLinear,
    ResidualOfNonexpansive,
    ScalarMonotone,
    SumOperator,
)
from .space import SpaceSpec, as_vector

CONSISTENCY_TOL = 1e-8


@dataclass
class SystemProblem:
    """``A_i(x) = 0`` for ``i = 1..N`` on a common space.

    ``solution_oracle`` optionally describes the solution set for the
    diagnostics module, e.g. ``{"kind": "affine_set", "point": p, "basis": B}``
    for ``S = p + range(B)``.
    """

    space: SpaceSpec
    equations: tuple
    known_solution: Optional[np.ndarray] = None
    solution_oracle: Optional[dict] = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.equations = tuple(self.equations)
        if not self.equations:
            raise ContractViolation("a system needs at least one equation")
        for i, op in enumerate(self.equations):
            if op.dim != self.space.dim:
                raise DimensionMismatch(f"equation {i} has dimension {op.dim}, space has {self.space.dim}")
        if self.known_solution is not None:
            xs = self.space.check(self.known_solution, "known_solution").copy()
            xs.setflags(write=False)
            self.known_solution = xs
            res = self.residual_norms(xs)
            scale = max(1.0, self.space.norm(xs))
            if np.max(res) > CONSISTENCY_TOL * scale:
                raise ContractViolation(
                    f"known solution is not a solution: max residual {np.max(res):.3e}")

    @property
    def N(self):
        return len(self.equations)

    @property
    def dim(self):
        return self.space.dim

    def residual_norms(self, x):
        x = self.space.check(x)
        return np.array([self.space.norm(op.apply(x)) for op in self.equations])

    def sum_operator(self):
        return SumOperator(self.equations)

    def error(self, x):
        if self.known_solution is None:
            return float("nan")
        return self.space.norm(np.asarray(x) - self.known_solution)

    def with_equations(self, equations, keep_solution=True):
        return SystemProblem(self.space, tuple(equations),
                             self.known_solution if keep_solution else None,
                             self.solution_oracle if keep_solution else None, self.name, dict(self.meta))

    def describe(self):
        d = {"space": self.space.describe(), "equations": [op.describe() for op in self.equations]}
        if self.known_solution is not None:
            d["known_solution"] = self.known_solution.tolist()
        return d

    def problem_hash(self):
        return stable_hash(self.describe())


def stable_hash(obj):
    """sha256 of a canonical JSON dump (sorted keys, repr-exact floats)."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def shared_nullspace_psd(dim=20, n_eq=3, null_dim=5, spectrum=(3.5, 4.0), solution_norm=0.25, seed=0):
    """Consistent singular PSD system ``M_i x = M_i xhat`` with a common nullspace.

    The matrices split one operator ``S`` on the complement of a random
    ``null_dim``-dimensional subspace: ``M_i = Q_R S^{1/2} V_i V_i^T S^{1/2} Q_R^T``
    where the ``V_i`` partition an orthonormal basis. Each ``M_i`` is singular,
    the ``M_i`` do not commute, ``sum M_i`` has its nonzero spectrum in
    ``spectrum``, and the solution set is ``xhat + span(Q_null)``. ``xhat`` is
    orthogonal to that span, hence the minimum-norm solution.
    """
    rank = dim - null_dim
    if rank < n_eq or rank % n_eq:
        raise ContractViolation("dim - null_dim must be a positive multiple of n_eq")
    rng = np.random.default_rng(seed)
    Q = _orthogonal(rng, dim)
    Q_null, Q_R = Q[:, :null_dim], Q[:, null_dim:]
    U = _orthogonal(rng, rank)
    s = rng.uniform(spectrum[0], spectrum[1], rank)
    S_half = (U * np.sqrt(s)) @ U.T
    V = _orthogonal(rng, rank)
    block = rank // n_eq
    mats = []
    for i in range(n_eq):
        Vi = V[:, i * block:(i + 1) * block]
        B = S_half @ Vi @ Vi.T @ S_half
        M = Q_R @ B @ Q_R.T
        mats.append(0.5 * (M + M.T))
    c = rng.standard_normal(rank)
    xhat = Q_R @ (solution_norm * c / np.linalg.norm(c))
    eqs = [AffineResidual(PsdLinear(M), M @ xhat) for M in mats]
    oracle = {"kind": "affine_set", "point": xhat, "basis": Q_null}
    return SystemProblem(SpaceSpec.hilbert(dim), eqs, xhat, oracle, name="shared_nullspace_psd",
                         meta={"seed": seed, "null_dim": null_dim})


def projection_system(dim=6, seed=0):
    """Three ``I - P`` equations (subspace, box, ball) with a common solution away from 0.

    Solutions are the points of ``L cap box cap ball``, where ``L`` is a random
    subspace. The box excludes 0, so the minimum-norm solution is nonzero.
    """
    rng = np.random.default_rng(seed)
    k = max(2, dim // 2)
    B = np.linalg.qr(rng.standard_normal((dim, k)))[0]
    P = B @ B.T
    anchor = B @ rng.uniform(1.0, 2.0, k)
    while np.max(np.abs(anchor)) < 0.6:
        anchor = B @ rng.uniform(1.0, 2.0, k)
    lower = anchor - rng.uniform(0.2, 0.5, dim)
    upper = anchor + rng.uniform(0.2, 0.5, dim)
    center = anchor + 0.1 * rng.standard_normal(dim)
    radius = float(np.linalg.norm(anchor - center)) + 0.3
    space = SpaceSpec.hilbert(dim)
    eqs = [ResidualOfNonexpansive(LinearMap(P), space),
           ResidualOfNonexpansive(BoxProjection(lower, upper), space),
           ResidualOfNonexpansive(BallProjection(center, radius), space)]
    prob = SystemProblem(space, eqs, name="projection_system", meta={"seed": seed})
    res = prob.residual_norms(anchor)
    if np.max(res) > 1e-12:
        # anchor lies in L, the box and the ball by construction
        raise AssertionError("projection system lost its common point")
    prob.meta["feasible_point"] = anchor
    return prob


def operator_catalog(dim=6, seed=0, space=None):
    """Named catalog operators for the accretiveness suite."""
    space = space or SpaceSpec.hilbert(dim)
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((dim, dim))
    psd = G @ G.T / dim
    theta = 0.7
    rot = np.eye(dim)
    rot[:2, :2] = [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    contraction = 0.8 * _orthogonal(rng, dim)
    lo = -rng.uniform(0.5, 1.5, dim)
    hi = rng.uniform(0.5, 1.5, dim)
    data = rng.standard_normal(dim)
    ops = {}
    if space.euclidean:
        ops["psd_linear"] = PsdLinear(psd)
        ops["affine_psd"] = AffineResidual(PsdLinear(psd), data)
        ops["residual_rotation"] = ResidualOfNonexpansive(LinearMap(rot), space)
        ops["residual_contraction"] = ResidualOfNonexpansive(LinearMap(contraction), space)
        ops["residual_ball"] = ResidualOfNonexpansive(BallProjection(np.full(dim, 0.3), 1.0), space)
        ops["residual_box_then_ball"] = ResidualOfNonexpansive(
            Compose([BoxProjection(lo, hi), BallProjection(np.zeros(dim), 1.2)]), space)
    ops["residual_box"] = ResidualOfNonexpansive(BoxProjection(lo, hi), space)
    ops["residual_half_identity"] = ResidualOfNonexpansive(LinearMap(0.5 * np.eye(dim)), space)
    ops["affine_residual_box"] = AffineResidual(ResidualOfNonexpansive(BoxProjection(lo, hi), space), data)
    ops["diagonal_cubic"] = DiagonalMonotone(ScalarMonotone("cubic", 1.0, 0.5), dim)
    ops["diagonal_mixed"] = DiagonalMonotone(
        [ScalarMonotone(("tanh", "arctan", "linear", "cubic")[i % 4], 1.0 + 0.1 * i) for i in range(dim)])
    return ops


def seeded_start(problem, distance=1.0, seed=0):
    """``xhat + distance * u`` with ``u`` a seeded unit vector."""
    if problem.known_solution is None:
        raise ContractViolation("seeded_start needs a known solution")
    rng = np.random.default_rng([int(seed), 7])
    u = rng.standard_normal(problem.dim)
    return problem.known_solution + distance * u / problem.space.norm(u)


def problem_from_dict(d, seed=None):
    """Build a problem from a config section (``generator`` or explicit ``equations``)."""
    from .operators import operator_from_dict

    gen = d.get("generator")
    if gen is not None:
        params = dict(d.get("params", {}))
        if seed is not None:
            params.setdefault("seed", seed)
        if gen == "shared_nullspace_psd":
            return shared_nullspace_psd(**params)
        if gen == "projection_system":
            return projection_system(**params)
        raise ContractViolation(f"unknown problem generator {gen!r}")
    space = space_from_dict(d["space"])
    eqs = [operator_from_dict(e, space) for e in d["equations"]]
    xs = d.get("known_solution")
    return SystemProblem(space, eqs, None if xs is None else as_vector(xs, space.dim, "known_solution"))


def space_from_dict(d):
    kind = d.get("kind")
    if kind == "hilbert":
        return SpaceSpec.hilbert(d["dim"])
    if kind == "lp":
        return SpaceSpec.lp(d["p"], d["dim"])
    raise ContractViolation(f"unknown space kind {kind!r}")
