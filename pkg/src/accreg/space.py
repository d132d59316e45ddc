"""Finite-dimensional models of Hilbert space and coordinate-truncated l^p.

All functions are pure. Vectors are 1-D float ``numpy`` arrays; the duality
pairing is the coordinate dot product, so ``X*`` is identified with ``R^d``
carrying the conjugate l^q norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DimensionMismatch

# Figiel constant, upper end of (1, 1.7): makes every modulus bound conservative.
FIGIEL_L = 1.7

HILBERT = "hilbert"
LP = "lp"


def as_vector(x, dim=None, name="x"):
    """Return ``x`` as a finite 1-D float array, checking its dimension."""
    v = x if type(x) is np.ndarray and x.dtype == np.float64 else np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"{name} has dimension {v.shape[0]}, expected {dim}")
    if not np.isfinite(v).all():
        raise ContractViolation(f"{name} has non-finite entries")
    return v


@dataclass(frozen=True)
class SpaceSpec:
    """Space model: ``kind`` is ``"hilbert"`` or ``"lp"`` with exponent ``p``."""

    kind: str
    dim: int
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in (HILBERT, LP):
            raise ContractViolation(f"unknown space kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ContractViolation("dim must be a positive integer")
        if self.kind == HILBERT:
            object.__setattr__(self, "p", 2.0)
        elif not (1.0 < self.p < math.inf):
            # p = 1 and p = inf are not uniformly smooth
            raise ContractViolation(f"l^p needs 1 < p < inf, got p={self.p}")

    @classmethod
    def hilbert(cls, dim):
        return cls(HILBERT, int(dim))

    @classmethod
    def lp(cls, p, dim):
        return cls(LP, int(dim), float(p))

    @property
    def q(self):
        """Conjugate exponent of the dual space."""
        return self.p / (self.p - 1.0)

    @property
    def euclidean(self):
        return self.kind == HILBERT or self.p == 2.0

    def describe(self):
        if self.kind == HILBERT:
            return {"kind": HILBERT, "dim": self.dim}
        return {"kind": LP, "p": self.p, "dim": self.dim}

    def check(self, x, name="x"):
        return as_vector(x, self.dim, name)

    # norms and duality ------------------------------------------------------

    def norm(self, x):
        x = self.check(x)
        if self.euclidean:
            # hypot rescales internally, so tiny and huge entries do not under/overflow
            return math.hypot(*x)
        return _lp_norm(x, self.p)

    def dual_norm(self, f):
        f = self.check(f, "f")
        if self.euclidean:
            return math.hypot(*f)
        return _lp_norm(f, self.q)

    def duality_map(self, x):
        """Normalized duality mapping; ``J(0) = 0``."""
        x = self.check(x)
        if self.euclidean:
            return x.copy()
        nx = _lp_norm(x, self.p)
        if nx == 0.0:
            return np.zeros_like(x)
        # ||x||^{2-p} |x_i|^{p-1} sign(x_i), written to avoid overflow
        return nx * np.power(np.abs(x) / nx, self.p - 1.0) * np.sign(x)

    def dual_pair(self, x, f):
        return dual_pair(self.check(x), self.check(f, "f"))

    # geometric moduli -----------------------------------------------------

    def modulus_smoothness_bound(self, tau):
        """Upper bound for the modulus of smoothness rho_X(tau)."""
        tau = _nonneg(tau, "tau")
        if self.kind == HILBERT:
            return np.sqrt(1.0 + tau * tau) - 1.0
        if self.p >= 2.0:
            return (self.p - 1.0) * tau * tau
        return tau ** self.p / self.p

    def smoothness_ratio_bound(self, tau):
        """h_X(tau) = rho_X(tau) / tau from the smoothness bound; 0 at tau = 0."""
        tau = _nonneg(tau, "tau")
        t = np.asarray(tau, dtype=float)
        safe = np.where(t > 0, t, 1.0)
        out = np.where(t > 0, self.modulus_smoothness_bound(safe) / safe, 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def modulus_convexity_bound(self, eps):
        """Lower bound for the modulus of convexity delta_X(eps), eps in [0, 2]."""
        e = np.asarray(eps, dtype=float)
        if np.any(e < 0) or np.any(e > 2) or not np.all(np.isfinite(e)):
            raise ContractViolation("eps must lie in [0, 2]")
        p = self.p
        if p < 2.0:
            out = (p - 1.0) * e * e / 16.0
        else:
            out = e ** p / (p * 2.0 ** p)
        return float(out) if np.ndim(out) == 0 else out

    def phi_inverse_uniform(self, s, t):
        """Modulus phi(s, t) of inverse uniform accretivity of ``I - T``."""
        s = _positive(s, "s")
        t = _nonneg(t, "t")
        p = self.p
        if p >= 2.0:
            return t ** p / (p * FIGIEL_L * 8.0 ** p * s ** (p - 2.0))
        return self.inverse_strong_constant() * t * t

    def phi_inverse_function(self, s, u):
        """Inverse of ``phi_inverse_uniform`` in its second argument."""
        s = _positive(s, "s")
        u = _nonneg(u, "u")
        p = self.p
        if p >= 2.0:
            return (u * p * FIGIEL_L * 8.0 ** p * s ** (p - 2.0)) ** (1.0 / p)
        return np.sqrt(u / self.inverse_strong_constant())

    def inverse_strong_constant(self):
        """c = (p-1)/(256 L) for the 1 < p < 2 branch."""
        return (self.p - 1.0) / (256.0 * FIGIEL_L)

    def phi_exponents(self):
        """(exponent of h_X(tau) ~ tau^a, exponent of phi^{-1}(u) ~ u^b) as tau, u -> 0."""
        p = self.p
        if self.kind == HILBERT or p >= 2.0:
            return 1.0, 1.0 / p
        return p - 1.0, 0.5


def dual_pair(x, f):
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if x.shape != f.shape:
        raise DimensionMismatch(f"pairing of shapes {x.shape} and {f.shape}")
    return float(np.dot(x, f))


def _lp_norm(x, p):
    a = np.abs(x)
    m = float(a.max()) if x.size else 0.0
    if m == 0.0:
        return 0.0
    return m * float(((a / m) ** p).sum()) ** (1.0 / p)


def row_norms(space, X, dual=False):
    """Norms of the rows of ``X`` (dual norms when ``dual``); used by the sampled checks."""
    X = np.abs(np.asarray(X, dtype=float))
    r = 2.0 if space.euclidean else (space.q if dual else space.p)
    m = X.max(axis=1)
    safe = np.where(m > 0, m, 1.0)
    return np.where(m > 0, safe * (((X / safe[:, None]) ** r).sum(axis=1)) ** (1.0 / r), 0.0)


def row_duality(space, X):
    """Duality map applied to each row of ``X``."""
    X = np.asarray(X, dtype=float)
    if space.euclidean:
        return X.copy()
    n = row_norms(space, X)
    safe = np.where(n > 0, n, 1.0)[:, None]
    return safe * np.power(np.abs(X) / safe, space.p - 1.0) * np.sign(X)


def _nonneg(v, name):
    a = np.asarray(v, dtype=float)
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ContractViolation(f"{name} must be finite and >= 0")
    return float(a) if a.ndim == 0 else a


def _positive(v, name):
    a = np.asarray(v, dtype=float)
    if np.any(a <= 0) or not np.all(np.isfinite(a)):
        raise ContractViolation(f"{name} must be finite and > 0")
    return float(a) if a.ndim == 0 else a
