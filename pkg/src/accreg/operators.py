"""Catalog of accretive operators, noise perturbations and sampled checks.

Every operator maps ``R^d -> R^d`` and is immutable after construction.
Operators expose ``apply``, ``derivative_apply`` and a dense ``jacobian``
(desk-scale dimensions only), plus ``affine_parts`` when they are affine so
that inner solvers can use a direct factorization.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, ContractViolation, DimensionMismatch
from .space import SpaceSpec, as_vector, row_duality, row_norms

_N_CONSTRUCTION_SAMPLES = 200
_DERIV_SAFETY = 1.5


class Operator:
    """Base class; subclasses set ``dim`` and implement ``_apply``."""

    dim: int

    def apply(self, x):
        return self._apply(as_vector(x, self.dim))

    __call__ = apply

    def derivative_apply(self, x, v):
        x = as_vector(x, self.dim)
        v = as_vector(v, self.dim, "v")
        return self.jacobian(x, strict=True) @ v

    def jacobian(self, x, strict=False):
        """Dense derivative at ``x``.

        With ``strict=False`` nonsmooth maps return one element of the
        generalized Jacobian instead of raising at a kink.
        """
        raise CapabilityError(f"{type(self).__name__} is not differentiable")

    def affine_parts(self):
        """``(M, c)`` with ``A(x) = M x + c`` for affine operators, else ``None``."""
        return None

    @property
    def is_affine(self):
        return self.affine_parts() is not None

    def lipschitz_derivative_constant(self, box_radius=2.0):
        raise CapabilityError(f"{type(self).__name__} has no derivative Lipschitz bound")

    def phi(self, space, s, t):
        """Inverse-uniform-accretivity modulus, or ``None`` when unknown."""
        return None

    def describe(self):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# PSD linear


class PsdLinear(Operator):
    """``A(x) = M x`` with ``M`` symmetric positive semidefinite."""

    def __init__(self, matrix, check=True):
        M = np.array(matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ContractViolation("matrix has non-finite entries")
        self.dim = M.shape[0]
        scale = max(1.0, float(np.max(np.abs(M))))
        asym = float(np.max(np.abs(M - M.T)))
        if check and asym > 1e-12 * scale:
            raise ContractViolation(f"matrix not symmetric (max |M - M^T| = {asym:.3e})")
        M = 0.5 * (M + M.T)
        evals, evecs = np.linalg.eigh(M)
        if check and evals[0] < -1e-12 * scale:
            raise ContractViolation(f"matrix not PSD (min eigenvalue {evals[0]:.3e})")
        M.setflags(write=False)
        self.matrix = M
        self.eigenvalues = evals
        self.eigenvectors = evecs

    def _apply(self, x):
        return self.matrix @ x

    def derivative_apply(self, x, v):
        as_vector(x, self.dim)
        return self.matrix @ as_vector(v, self.dim, "v")

    def jacobian(self, x, strict=False):
        return self.matrix

    def affine_parts(self):
        return self.matrix, np.zeros(self.dim)

    def lipschitz_derivative_constant(self, box_radius=2.0):
        return 0.0

    def solve_shifted(self, c, rhs):
        """Solve ``(M + c I) x = rhs`` through the cached eigendecomposition."""
        Q = self.eigenvectors
        return Q @ ((Q.T @ rhs) / (self.eigenvalues + c))

    def phi(self, space, s, t):
        if not space.euclidean:
            return None
        lam = float(self.eigenvalues[-1])
        if lam <= 0:
            return None
        # <Mh, h> >= |Mh|^2 / lambda_max in Hilbert space
        return t * t / lam

    def describe(self):
        return {"type": "psd_linear", "matrix": self.matrix.tolist()}


# ---------------------------------------------------------------------------
# nonexpansive maps


class LinearMap:
    """``T(x) = T x``."""

    def __init__(self, matrix):
        T = np.array(matrix, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got {T.shape}")
        T.setflags(write=False)
        self.matrix = T
        self.dim = T.shape[0]

    def __call__(self, x):
        return self.matrix @ x

    def jacobian(self, x, strict=False):
        return self.matrix

    @property
    def is_linear(self):
        return True

    def norm_certificate(self, space):
        """True when the operator norm in ``space`` is provably <= 1."""
        T = self.matrix
        if space.euclidean:
            return np.linalg.norm(T, 2) <= 1.0 + 1e-12
        # Riesz-Thorin: |T|_p <= |T|_1^{1/p} |T|_inf^{1-1/p}
        n1 = np.linalg.norm(T, 1)
        ninf = np.linalg.norm(T, np.inf)
        return n1 ** (1.0 / space.p) * ninf ** (1.0 - 1.0 / space.p) <= 1.0 + 1e-12

    def describe(self):
        return {"form": "linear", "matrix": self.matrix.tolist()}


class BoxProjection:
    """Coordinatewise clipping; nonexpansive in every l^p."""

    def __init__(self, lower, upper):
        lo = np.array(lower, dtype=float).ravel()
        hi = np.array(upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise DimensionMismatch("box bounds differ in dimension")
        if np.any(lo > hi):
            raise ContractViolation("box lower bound exceeds upper bound")
        self.lower, self.upper = lo, hi
        self.dim = lo.shape[0]

    def __call__(self, x):
        return np.clip(x, self.lower, self.upper)

    def jacobian(self, x, strict=False):
        on_face = (x == self.lower) | (x == self.upper)
        if strict and np.any(on_face & (self.lower < self.upper)):
            raise CapabilityError("box projection is not differentiable on the box faces")
        return np.diag(((x > self.lower) & (x < self.upper)).astype(float))

    @property
    def is_linear(self):
        return False

    def norm_certificate(self, space):
        return True

    def describe(self):
        return {"form": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


class BallProjection:
    """Radial retraction onto the Euclidean ball (the metric projection in Hilbert space)."""

    def __init__(self, center, radius):
        self.center = np.array(center, dtype=float).ravel()
        self.radius = float(radius)
        if not self.radius > 0:
            raise ContractViolation("ball radius must be positive")
        self.dim = self.center.shape[0]

    def __call__(self, x):
        d = x - self.center
        nd = float(np.linalg.norm(d))
        if nd <= self.radius:
            return x.copy()
        return self.center + (self.radius / nd) * d

    def jacobian(self, x, strict=False):
        d = x - self.center
        nd = float(np.linalg.norm(d))
        if strict and nd == self.radius:
            raise CapabilityError("ball projection is not differentiable on the sphere")
        if nd <= self.radius:
            return np.eye(self.dim)
        u = d / nd
        return (self.radius / nd) * (np.eye(self.dim) - np.outer(u, u))

    @property
    def is_linear(self):
        return False

    def norm_certificate(self, space):
        return space.euclidean

    def describe(self):
        return {"form": "ball", "center": self.center.tolist(), "radius": self.radius}


class Compose:
    """``T = T_k o ... o T_1`` (maps applied left to right)."""

    def __init__(self, maps):
        if not maps:
            raise ContractViolation("composition needs at least one map")
        dims = {m.dim for m in maps}
        if len(dims) != 1:
            raise DimensionMismatch("composed maps differ in dimension")
        self.maps = tuple(maps)
        self.dim = dims.pop()

    def __call__(self, x):
        for m in self.maps:
            x = m(x)
        return x

    def jacobian(self, x, strict=False):
        Jt = np.eye(self.dim)
        for m in self.maps:
            Jt = m.jacobian(x, strict) @ Jt
            x = m(x)
        return Jt

    @property
    def is_linear(self):
        return all(m.is_linear for m in self.maps)

    def norm_certificate(self, space):
        return all(m.norm_certificate(space) for m in self.maps)

    def describe(self):
        return {"form": "compose", "maps": [m.describe() for m in self.maps]}


class ResidualOfNonexpansive(Operator):
    """``A(x) = x - T(x)`` for a nonexpansive ``T``.

    Nonexpansiveness is certified exactly where possible (spectral norm,
    Riesz-Thorin bound, box clipping) and otherwise sampled on 200 seeded
    pairs; a sampled violation rejects the map.
    """

    def __init__(self, T, space=None, check=True, seed=0):
        self.T = T
        self.dim = T.dim
        space = space or SpaceSpec.hilbert(self.dim)
        if space.dim != self.dim:
            raise DimensionMismatch("space and map differ in dimension")
        self.certified = bool(T.norm_certificate(space))
        if check and not self.certified:
            ratio = _sampled_lipschitz(T, space, _N_CONSTRUCTION_SAMPLES, seed)
            if ratio > 1.0 + 1e-10:
                raise ContractViolation(
                    f"map is not nonexpansive in {space.describe()} (sampled ratio {ratio:.6f})")

    def _apply(self, x):
        return x - self.T(x)

    def jacobian(self, x, strict=False):
        return np.eye(self.dim) - self.T.jacobian(x, strict)

    def affine_parts(self):
        if self.T.is_linear:
            return np.eye(self.dim) - self.T.jacobian(np.zeros(self.dim)), np.zeros(self.dim)
        return None

    def lipschitz_derivative_constant(self, box_radius=2.0):
        if self.T.is_linear:
            return 0.0
        raise CapabilityError("projection-based maps have discontinuous derivatives")

    def phi(self, space, s, t):
        return space.phi_inverse_uniform(s, t)

    def describe(self):
        return {"type": "residual_nonexpansive", "map": self.T.describe()}


def _sampled_lipschitz(T, space, n, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        x = rng.standard_normal(space.dim) * 3.0
        y = x + rng.standard_normal(space.dim) * rng.choice([1e-2, 1.0, 3.0])
        nd = space.norm(x - y)
        if nd > 0:
            worst = max(worst, space.norm(T(x) - T(y)) / nd)
    return worst


# ---------------------------------------------------------------------------
# diagonal monotone


@dataclass(frozen=True)
class ScalarMonotone:
    """A nondecreasing scalar function ``g`` from a small closed family.

    kinds: ``linear`` (a t), ``cubic`` (a t^3 + b t), ``tanh`` (a tanh t),
    ``arctan`` (a atan t); ``a, b >= 0``.
    """

    kind: str
    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "cubic", "tanh", "arctan"):
            raise ContractViolation(f"unknown scalar function kind {self.kind!r}")
        if self.a < 0 or self.b < 0:
            raise ContractViolation("scalar function coefficients must be >= 0")

    def value(self, t):
        a, b = self.a, self.b
        if self.kind == "linear":
            return a * t
        if self.kind == "cubic":
            return a * t ** 3 + b * t
        if self.kind == "tanh":
            return a * np.tanh(t)
        return a * np.arctan(t)

    def d1(self, t):
        a, b = self.a, self.b
        if self.kind == "linear":
            return a * np.ones_like(t)
        if self.kind == "cubic":
            return 3.0 * a * t ** 2 + b
        if self.kind == "tanh":
            # sech^2 without overflowing cosh for large |t|
            e = np.exp(-2.0 * np.abs(t))
            return 4.0 * a * e / (1.0 + e) ** 2
        return a / (1.0 + t * t)

    def d2(self, t):
        a = self.a
        if self.kind == "linear":
            return np.zeros_like(t)
        if self.kind == "cubic":
            return 6.0 * a * t
        if self.kind == "tanh":
            return -2.0 * a * np.tanh(t) / np.cosh(t) ** 2
        return -2.0 * a * t / (1.0 + t * t) ** 2

    def describe(self):
        return {"kind": self.kind, "a": self.a, "b": self.b}


class DiagonalMonotone(Operator):
    """``A(x)_i = g_i(x_i)``; accretive in every l^p since ``J`` preserves signs."""

    def __init__(self, functions, dim=None):
        if isinstance(functions, ScalarMonotone):
            if dim is None:
                raise ContractViolation("dim is required with a single scalar function")
            functions = [functions] * dim
        self.functions = tuple(functions)
        self.dim = len(self.functions)
        grid = np.linspace(-10.0, 10.0, 401)
        for g in self.functions:
            if np.any(np.diff(g.value(grid)) < -1e-12):
                raise ContractViolation(f"{g} is not nondecreasing")
        self._uniform = len(set(self.functions)) == 1

    def _eval(self, method, x):
        if self._uniform:
            return getattr(self.functions[0], method)(x)
        return np.array([getattr(g, method)(xi) for g, xi in zip(self.functions, x)], dtype=float)

    def _apply(self, x):
        return self._eval("value", x)

    def derivative_apply(self, x, v):
        x = as_vector(x, self.dim)
        return self._eval("d1", x) * as_vector(v, self.dim, "v")

    def jacobian(self, x, strict=False):
        return np.diag(self._eval("d1", np.asarray(x, dtype=float)))

    def affine_parts(self):
        if all(g.kind == "linear" for g in self.functions):
            return np.diag([g.a for g in self.functions]), np.zeros(self.dim)
        return None

    def lipschitz_derivative_constant(self, box_radius=2.0):
        """Sampled sup |g_i''| over ``[-box_radius, box_radius]`` times a 1.5 safety factor."""
        grid = np.linspace(-box_radius, box_radius, 2001)
        worst = max(float(np.max(np.abs(g.d2(grid)))) for g in set(self.functions))
        return _DERIV_SAFETY * worst

    def describe(self):
        return {"type": "diagonal_monotone", "functions": [g.describe() for g in self.functions]}


# ---------------------------------------------------------------------------
# affine residual, perturbations, sums


class AffineResidual(Operator):
    """``A(x) = F(x) - f``."""

    def __init__(self, base, data):
        self.base = base
        self.dim = base.dim
        self.data = as_vector(data, self.dim, "data").copy()
        self.data.setflags(write=False)

    def _apply(self, x):
        return self.base.apply(x) - self.data

    def derivative_apply(self, x, v):
        return self.base.derivative_apply(x, v)

    def jacobian(self, x, strict=False):
        return self.base.jacobian(x, strict)

    def affine_parts(self):
        parts = self.base.affine_parts()
        if parts is None:
            return None
        M, c = parts
        return M, c - self.data

    def lipschitz_derivative_constant(self, box_radius=2.0):
        return self.base.lipschitz_derivative_constant(box_radius)

    def phi(self, space, s, t):
        return self.base.phi(space, s, t)

    def describe(self):
        return {"type": "affine_residual", "base": self.base.describe(), "data": self.data.tolist()}


class NoiseBump(Operator):
    """Fixed accretive perturbation direction with ``|B(x)| <= a + b |x|``.

    ``B(x) = (b/2) D x + (a/2) (w + tanh(x)/d)`` with ``D`` diagonal in
    ``[0, 1]`` and ``|w|_1 = 1``. Each piece is accretive in every l^p and the
    l^1 normalisation bounds every l^p norm, so the growth bound holds in
    any of the modelled spaces. ``|B'(x)| <= (b + a/d)/2``.
    """

    def __init__(self, diag, offset, a=1.0, b=1.0):
        self.diag = np.asarray(diag, dtype=float)
        self.offset = np.asarray(offset, dtype=float)
        self.dim = self.diag.shape[0]
        self.a, self.b = float(a), float(b)

    def _apply(self, x):
        return 0.5 * self.b * self.diag * x + 0.5 * self.a * (self.offset + np.tanh(x) / self.dim)

    def jacobian(self, x, strict=False):
        x = np.asarray(x, dtype=float)
        return np.diag(0.5 * self.b * self.diag + 0.5 * self.a / (self.dim * np.cosh(x) ** 2))

    def derivative_apply(self, x, v):
        x = as_vector(x, self.dim)
        v = as_vector(v, self.dim, "v")
        return (0.5 * self.b * self.diag + 0.5 * self.a / (self.dim * np.cosh(x) ** 2)) * v

    def lipschitz_derivative_constant(self, box_radius=2.0):
        # sup |tanh''| = 4 / (3 sqrt 3)
        return 0.5 * self.a / self.dim * 4.0 / (3.0 * math.sqrt(3.0))

    def describe(self):
        return {"type": "noise_bump", "diag": self.diag.tolist(), "offset": self.offset.tolist(),
                "a": self.a, "b": self.b}


class Perturbed(Operator):
    """``F_h(x) = F(x) + h B(x)``."""

    def __init__(self, base, bump, h):
        if base.dim != bump.dim:
            raise DimensionMismatch("bump dimension differs from operator")
        self.base, self.bump, self.h = base, bump, float(h)
        self.dim = base.dim

    def _apply(self, x):
        return self.base.apply(x) + self.h * self.bump.apply(x)

    def jacobian(self, x, strict=False):
        return self.base.jacobian(x, strict) + self.h * self.bump.jacobian(x, strict)

    def derivative_apply(self, x, v):
        return self.base.derivative_apply(x, v) + self.h * self.bump.derivative_apply(x, v)

    def lipschitz_derivative_constant(self, box_radius=2.0):
        return (self.base.lipschitz_derivative_constant(box_radius)
                + self.h * self.bump.lipschitz_derivative_constant(box_radius))

    def describe(self):
        return {"type": "perturbed", "base": self.base.describe(), "bump": self.bump.describe(),
                "h": self.h}


class SumOperator(Operator):
    """``A(x) = sum_i A_i(x)``, summed in list order."""

    def __init__(self, ops):
        if not ops:
            raise ContractViolation("sum of zero operators")
        dims = {op.dim for op in ops}
        if len(dims) != 1:
            raise DimensionMismatch("summands differ in dimension")
        self.ops = tuple(ops)
        self.dim = dims.pop()

    def _apply(self, x):
        out = self.ops[0].apply(x)
        for op in self.ops[1:]:
            out = out + op.apply(x)
        return out

    def jacobian(self, x, strict=False):
        out = np.array(self.ops[0].jacobian(x, strict), dtype=float)
        for op in self.ops[1:]:
            out = out + op.jacobian(x, strict)
        return out

    def derivative_apply(self, x, v):
        out = self.ops[0].derivative_apply(x, v)
        for op in self.ops[1:]:
            out = out + op.derivative_apply(x, v)
        return out

    def affine_parts(self):
        parts = [op.affine_parts() for op in self.ops]
        if any(p is None for p in parts):
            return None
        return sum(p[0] for p in parts), sum(p[1] for p in parts)

    def lipschitz_derivative_constant(self, box_radius=2.0):
        return sum(op.lipschitz_derivative_constant(box_radius) for op in self.ops)

    def describe(self):
        return {"type": "sum", "ops": [op.describe() for op in self.ops]}


# ---------------------------------------------------------------------------
# noise


@dataclass(frozen=True)
class NoiseSpec:
    """Noise levels ``h`` (operator) and ``delta`` (data).

    ``growth = (a, b)`` encodes ``g(t) = a + b t`` (default ``1 + t``).
    """

    h: float = 0.0
    delta: float = 0.0
    seed: int = 0
    growth: tuple = field(default=(1.0, 1.0))

    def __post_init__(self):
        if not (math.isfinite(self.h) and math.isfinite(self.delta)):
            raise ContractViolation("noise levels must be finite")
        if self.h < 0 or self.delta < 0:
            raise ContractViolation("noise levels must be >= 0")
        a, b = self.growth
        if a < 0 or b < 0:
            raise ContractViolation("growth coefficients must be >= 0")

    def g(self, t):
        a, b = self.growth
        return a + b * t


@functools.lru_cache(maxsize=256)
def _noise_directions(seed, stream, dim):
    rng = np.random.default_rng([int(seed), int(stream)])
    diag = rng.uniform(0.0, 1.0, dim)
    w = rng.standard_normal(dim)
    w /= np.sum(np.abs(w))
    u = rng.standard_normal(dim)
    for arr in (diag, w, u):
        arr.setflags(write=False)
    return diag, w, u


def perturb(op, noise, space=None, stream=0):
    """Return ``F + h B`` with data ``f + delta u`` for an affine residual ``F - f``.

    ``B`` and ``u`` depend only on ``(noise.seed, stream, dim)``, so a family
    of noise levels shares one perturbation direction. ``u`` is a unit vector
    in the norm of ``space`` (Hilbert by default). With ``h = delta = 0`` the
    operator is returned unchanged.
    """
    if not isinstance(op, AffineResidual):
        raise ContractViolation("perturb needs an AffineResidual operator")
    if noise.h == 0.0 and noise.delta == 0.0:
        return op
    space = space or SpaceSpec.hilbert(op.dim)
    diag, w, u = _noise_directions(noise.seed, stream, op.dim)
    base = op.base
    if noise.h != 0.0:
        a, b = noise.growth
        base = Perturbed(op.base, NoiseBump(diag, w, a, b), noise.h)
    data = op.data
    if noise.delta != 0.0:
        data = op.data + noise.delta * (u / space.norm(u))
    out = AffineResidual(base, data)
    out.noise_direction = u / space.norm(u)
    return out


# ---------------------------------------------------------------------------
# sampled property checks


@dataclass
class AccretiveReport:
    min_value: float
    passed: bool
    n_samples: int
    scale: float
    exhaustive: bool = False


def _apply_rows(op, X):
    return np.array([op.apply(x) for x in X])


def check_accretive(op, space, n_samples=1000, seed=0):
    """Sample ``min <A(x)-A(y), J(x-y)>`` over seeded Gaussian pairs."""
    if n_samples < 1:
        raise ContractViolation("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_samples, op.dim)) * 2.0
    steps = rng.choice([1e-3, 0.3, 2.0], size=(n_samples, 1))
    Y = X + rng.standard_normal((n_samples, op.dim)) * steps
    dA = _apply_rows(op, X) - _apply_rows(op, Y)
    D = X - Y
    vals = np.einsum("ij,ij->i", dA, row_duality(space, D))
    scale = max(1.0, float(np.max(row_norms(space, dA) * row_norms(space, D))))
    m = float(vals.min())
    return AccretiveReport(m, bool(m >= -1e-12 * scale), n_samples, scale)


@dataclass
class InverseUniformReport:
    min_slack: float
    passed: bool
    radius: float
    n_samples: int
    scale: float


def check_inverse_uniform_accretive(op, space, R, n_samples=1000, seed=0):
    """Sample ``<A(x)-A(y), J(x-y)> - phi(R, |A(x)-A(y)|)`` inside the ball of radius ``R``.

    Even samples pair two random points of the ball, odd samples a point with
    a nearby one (pulled back onto the ball if it leaves it).
    """
    inner = op.base if isinstance(op, AffineResidual) else op
    if not isinstance(inner, ResidualOfNonexpansive):
        raise CapabilityError("inverse uniform accretivity is checked for I - T operators only")
    if not R > 0:
        raise ContractViolation("R must be positive")
    rng = np.random.default_rng(seed)
    d = op.dim

    def in_ball(n):
        Z = rng.standard_normal((n, d))
        radii = R * rng.uniform(size=n) ** (1.0 / d)
        return Z * (radii / row_norms(space, Z))[:, None]

    X = in_ball(n_samples)
    Y = in_ball(n_samples)
    near = np.arange(n_samples) % 2 == 1
    Y[near] = X[near] + 1e-2 * R * rng.standard_normal((int(near.sum()), d)) / math.sqrt(d)
    ny = row_norms(space, Y)
    Y *= np.where(ny > R, R / np.where(ny > 0, ny, 1.0), 1.0)[:, None]
    dA = _apply_rows(op, X) - _apply_rows(op, Y)
    D = X - Y
    lhs = np.einsum("ij,ij->i", dA, row_duality(space, D))
    ndA = row_norms(space, dA)
    slack = float(np.min(lhs - space.phi_inverse_uniform(R, ndA)))
    scale = max(1.0, float(np.max(ndA * row_norms(space, D))))
    return InverseUniformReport(slack, bool(slack >= -1e-12 * scale), float(R), n_samples, scale)


# ---------------------------------------------------------------------------
# construction from plain dicts (harness configs)


def map_from_dict(d):
    form = d.get("form")
    if form == "linear":
        return LinearMap(d["matrix"])
    if form == "box":
        return BoxProjection(d["lower"], d["upper"])
    if form == "ball":
        return BallProjection(d["center"], d["radius"])
    if form == "compose":
        return Compose([map_from_dict(m) for m in d["maps"]])
    raise ContractViolation(f"unknown nonexpansive map form {form!r}")


def operator_from_dict(d, space=None):
    kind = d.get("type")
    if kind == "psd_linear":
        op = PsdLinear(d["matrix"])
    elif kind == "residual_nonexpansive":
        op = ResidualOfNonexpansive(map_from_dict(d["map"]), space=space)
    elif kind == "diagonal_monotone":
        fns = [ScalarMonotone(f["kind"], f.get("a", 1.0), f.get("b", 0.0)) for f in d["functions"]]
        op = DiagonalMonotone(fns)
    elif kind == "affine_residual":
        return AffineResidual(operator_from_dict(d["base"], space), d["data"])
    else:
        raise ContractViolation(f"unknown operator type {kind!r}")
    if "data" in d:
        return AffineResidual(op, d["data"])
    return op
