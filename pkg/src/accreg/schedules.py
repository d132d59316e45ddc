"""Parameter sequences and validators for their convergence hypotheses.

Power-law families are checked symbolically by exponent arithmetic; tables
are checked numerically over a finite horizon. Validators use the upper
bounds for the smoothness modulus, so a satisfied smoothness condition is
sufficient but not necessary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractViolation

ALPHA = "alpha"
GAMMA = "gamma"

SATISFIED = "SatisfiedSymbolically"
TRENDS_TO_ZERO = "TrendsToZeroNumerically"
VIOLATED = "Violated"

DEFAULT_HORIZON = 10 ** 5


class Schedule:
    role: str

    def value(self, n):
        raise NotImplementedError

    def values(self, n_max):
        """Values for ``n = 0 .. n_max - 1``."""
        return np.array([self.value(n) for n in range(n_max)], dtype=float)

    def __call__(self, n):
        return self.value(n)


@dataclass(frozen=True)
class PowerLaw(Schedule):
    """``c0 (n+1)^{-k}`` for the alpha role, ``c0 (n+1)^{k}`` for the gamma role."""

    c0: float = 1.0
    k: float = 0.5
    role: str = ALPHA

    def __post_init__(self):
        if not self.c0 > 0:
            raise ContractViolation("power-law coefficient must be > 0")
        if self.role not in (ALPHA, GAMMA):
            raise ContractViolation(f"unknown schedule role {self.role!r}")

    @property
    def exponent(self):
        """Signed exponent ``e`` with value ``c0 (n+1)^e``."""
        return -self.k if self.role == ALPHA else self.k

    def value(self, n):
        if n < 0:
            raise ContractViolation("schedule index must be >= 0")
        return self.c0 * (n + 1.0) ** self.exponent

    def values(self, n_max):
        return self.c0 * np.arange(1.0, n_max + 1.0) ** self.exponent

    def describe(self):
        return {"family": "power_law", "c0": self.c0, "k": self.k, "role": self.role}


@dataclass(frozen=True)
class Table(Schedule):
    table: tuple = ()
    role: str = ALPHA

    def __post_init__(self):
        vals = tuple(float(v) for v in self.table)
        if not vals:
            raise ContractViolation("empty schedule table")
        if any(not (v > 0 and math.isfinite(v)) for v in vals):
            raise ContractViolation("schedule values must be finite and > 0")
        object.__setattr__(self, "table", vals)

    def value(self, n):
        if n < 0:
            raise ContractViolation("schedule index must be >= 0")
        if n >= len(self.table):
            raise ContractViolation(f"schedule table exhausted at n={n} (length {len(self.table)})")
        return self.table[n]

    def values(self, n_max):
        if n_max > len(self.table):
            raise ContractViolation(f"schedule table exhausted at n={len(self.table)}")
        return np.array(self.table[:n_max])

    def describe(self):
        return {"family": "table", "values": list(self.table), "role": self.role}


def schedule_from_dict(d, role):
    fam = d.get("family", "power_law")
    if fam == "power_law":
        return PowerLaw(float(d.get("c0", 1.0)), float(d["k"]), role)
    if fam == "table":
        return Table(tuple(d["values"]), role)
    raise ContractViolation(f"unknown schedule family {fam!r}")


# presets --------------------------------------------------------------------

PRESETS = ("example4-hilbert", "example5-lp", "example6-lp")


def preset(name, p=2.0, k=None):
    """Return ``(alpha, gamma)`` for a named preset; ``gamma = (n+1)^{1/2}`` always."""
    if name == "example4-hilbert":
        k = 0.25 if k is None else k
        if not 0 < k < 0.5:
            raise ContractViolation("example4-hilbert preset needs 0 < k < 1/2")
    elif name == "example5-lp":
        if p < 2:
            raise ContractViolation("example5-lp preset needs p >= 2")
        k = 0.25 if k is None else k
        if not 0 < k < 0.5:
            raise ContractViolation("example5-lp preset needs 0 < k < 1/2")
    elif name == "example6-lp":
        if not 1 < p < 2:
            raise ContractViolation("example6-lp preset needs 1 < p < 2")
        kmax = min(0.5, p - 1.0)
        k = 0.5 * kmax if k is None else k
        if not 0 < k < kmax:
            raise ContractViolation(f"example6-lp preset needs 0 < k < {kmax}")
    else:
        raise ContractViolation(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return PowerLaw(1.0, k, ALPHA), PowerLaw(1.0, 0.5, GAMMA)


# reports ----------------------------------------------------------------------


@dataclass
class ScheduleReport:
    condition: str
    horizon: int
    trace: list
    verdict: str
    first_violation: Optional[int] = None
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.verdict != VIOLATED

    def to_dict(self):
        return {"condition": self.condition, "horizon": self.horizon, "verdict": self.verdict,
                "first_violation": self.first_violation, "note": self.note,
                "trace_head": self.trace[:5], "trace_tail": self.trace[-5:], **self.extra}


def _thin(arr, n_keep=200):
    """Log-spaced subsample of a long trace for the report."""
    arr = np.asarray(arr, dtype=float)
    if arr.size <= n_keep:
        return arr.tolist()
    idx = np.unique(np.geomspace(1, arr.size, n_keep).astype(int) - 1)
    return arr[idx].tolist()


def _last_decade(n_max):
    return max(0, n_max // 10), n_max


def trends_to_zero(values):
    """Last decade monotonically nonincreasing and below 1% of the initial value."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return False
    if np.all(v == 0):
        return True
    lo, hi = _last_decade(v.size)
    tail = v[lo:hi]
    return bool(np.all(np.diff(tail) <= 0) and tail[-1] <= 1e-2 * abs(v[0]))


def _first_nonmonotone(values, lo):
    d = np.diff(values[lo:])
    bad = np.nonzero(d > 0)[0]
    return int(lo + bad[0] + 1) if bad.size else int(lo)


def series_diverges(terms):
    """Partial sums still growing: last-decade increment at least 90% of the previous one."""
    t = np.asarray(terms, dtype=float)
    n = t.size
    if n < 100:
        return False
    last = t[n // 10:].sum()
    prev = t[n // 100:n // 10].sum()
    return bool(last >= 0.9 * prev)


def _limit_report(name, values, symbolic, note="", exponent=None):
    """Report for a ``quantity -> 0`` condition."""
    values = np.asarray(values, dtype=float)
    extra = {} if exponent is None else {"asymptotic_exponent": exponent}
    if symbolic is not None:
        if symbolic:
            return ScheduleReport(name, values.size, _thin(values), SATISFIED, note=note, extra=extra)
        lo, _ = _last_decade(values.size)
        return ScheduleReport(name, values.size, _thin(values), VIOLATED,
                              _first_nonmonotone(values, lo) if trends_to_zero(values) is False else 0,
                              note, extra)
    if trends_to_zero(values):
        return ScheduleReport(name, values.size, _thin(values), TRENDS_TO_ZERO, note=note, extra=extra)
    lo, _ = _last_decade(values.size)
    return ScheduleReport(name, values.size, _thin(values), VIOLATED,
                          _first_nonmonotone(values, lo), note, extra)


def _divergent_sum_report(name, terms, symbolic, note=""):
    terms = np.asarray(terms, dtype=float)
    partial = np.cumsum(terms)
    if symbolic is not None:
        verdict = SATISFIED if symbolic else VIOLATED
    else:
        verdict = TRENDS_TO_ZERO if series_diverges(terms) else VIOLATED
    first = None if verdict != VIOLATED else int(terms.size - 1)
    return ScheduleReport(name, terms.size, _thin(partial), verdict, first, note)


def _bound_report(name, values, bound, symbolic_growth=None, note=""):
    """Report for ``quantity_n <= bound`` for all n (checked over the horizon)."""
    values = np.asarray(values, dtype=float)
    bad = np.nonzero(values > bound)[0]
    if bad.size:
        return ScheduleReport(name, values.size, _thin(values), VIOLATED, int(bad[0]), note,
                              {"bound": bound})
    if symbolic_growth is not None and symbolic_growth > 0:
        # unbounded growth beyond the horizon
        return ScheduleReport(name, values.size, _thin(values), VIOLATED, values.size, note,
                              {"bound": bound})
    verdict = SATISFIED if symbolic_growth is not None else TRENDS_TO_ZERO
    return ScheduleReport(name, values.size, _thin(values), verdict, None, note, {"bound": bound})


def _powerlaw_pair(alpha, gamma):
    if isinstance(alpha, PowerLaw) and isinstance(gamma, PowerLaw):
        return alpha.k, gamma.k
    return None


# validators -----------------------------------------------------------------


def validate_implicit(space, alpha, gamma, R, N_max=DEFAULT_HORIZON):
    """Reports for the three parameter conditions of implicit PIRM convergence.

    i) alpha -> 0, gamma -> inf; ii) gamma |alpha_{n+1} - alpha_n| / alpha_n^2 -> 0 and
    sum alpha/gamma = inf; iii) h_X(tau) phi_R^{-1}(R1 alpha) / alpha -> 0 with
    R1 = 3 R^2 / 2, tau = 1/gamma.
    """
    if not R > 0:
        raise ContractViolation("R must be > 0")
    if N_max < 100:
        raise ContractViolation("N_max must be >= 100")
    a = alpha.values(N_max + 1)
    g = gamma.values(N_max)
    a_n, a_next = a[:-1], a[1:]
    tau = 1.0 / g
    R1 = 1.5 * R * R
    pl = _powerlaw_pair(alpha, gamma)
    eh, ephi = space.phi_exponents()

    sym_i = sym_ii_a = sym_ii_b = sym_iii = None
    exp_ii = exp_iii = None
    if pl is not None:
        k, m = pl
        sym_i = k > 0 and m > 0
        exp_ii = m + k - 1.0
        sym_ii_a = k == 0 or exp_ii < 0
        sym_ii_b = k + m <= 1.0
        exp_iii = -m * eh + k * (1.0 - ephi)
        sym_iii = exp_iii < 0

    reports = []
    if pl is not None:
        rep = ScheduleReport("i) alpha_n -> 0, gamma_n -> inf", N_max, _thin(a_n),
                             SATISFIED if sym_i else VIOLATED, None if sym_i else 0)
    else:
        ok = trends_to_zero(a_n) and trends_to_zero(tau)
        rep = ScheduleReport("i) alpha_n -> 0, gamma_n -> inf", N_max, _thin(a_n),
                             TRENDS_TO_ZERO if ok else VIOLATED, None if ok else 0)
    reports.append(rep)

    q_ii = g * np.abs(a_next - a_n) / a_n ** 2
    ra = _limit_report("ii-a) gamma_n |alpha_{n+1} - alpha_n| / alpha_n^2 -> 0", q_ii, sym_ii_a,
                       exponent=exp_ii)
    rb = _divergent_sum_report("ii-b) sum alpha_n / gamma_n = inf", a_n / g, sym_ii_b)
    reports += [ra, rb]

    q_iii = (space.smoothness_ratio_bound(tau) * space.phi_inverse_function(R, R1 * a_n) / a_n)
    reports.append(_limit_report("iii) h_X(tau_n) phi_R^{-1}(R1 alpha_n) / alpha_n -> 0", q_iii, sym_iii,
                                 note="uses the upper bound of rho_X; satisfied is sufficient",
                                 exponent=exp_iii))
    return reports


def validate_explicit(space, alpha, gamma, d, N_max=DEFAULT_HORIZON):
    """Reports for the boundedness and convergence conditions of explicit PIRM."""
    if not 0 < d < 1:
        raise ContractViolation("d must lie in (0, 1)")
    a = alpha.values(N_max + 1)
    g = gamma.values(N_max)
    a_n, a_next = a[:-1], a[1:]
    tau = 1.0 / g
    rho_ratio = space.modulus_smoothness_bound(tau) / (tau * a_n)
    pl = _powerlaw_pair(alpha, gamma)
    eh, _ = space.phi_exponents()

    sym = {}
    if pl is not None:
        k, m = pl
        sym["tau_bound"] = -m
        sym["rho_bound"] = -m * eh + k
        sym["sum"] = k + m <= 1.0
        sym["tau_over_alpha"] = (k - m) < 0
        sym["alpha_diff"] = k == 0 or (m + k - 1.0) < 0
        sym["rho_limit"] = (-m * eh + k) < 0

    reports = [
        _bound_report("step bound: tau_n <= d", tau, d, sym.get("tau_bound")),
        _bound_report("smoothness bound: rho_X(tau_n) / (tau_n alpha_n) <= d^2", rho_ratio, d * d,
                      sym.get("rho_bound"), note="uses the upper bound of rho_X"),
        _divergent_sum_report("divergent sum: sum alpha_n tau_n = inf", a_n * tau, sym.get("sum")),
        _limit_report("step ratio: tau_n / alpha_n -> 0", tau / a_n, sym.get("tau_over_alpha")),
        _limit_report("alpha variation: |alpha_n - alpha_{n+1}| / (tau_n alpha_n^2) -> 0",
                      np.abs(a_n - a_next) / (tau * a_n ** 2), sym.get("alpha_diff")),
        _limit_report("smoothness limit: rho_X(tau_n) / (tau_n alpha_n) -> 0", rho_ratio, sym.get("rho_limit"),
                      note="uses the upper bound of rho_X; satisfied is sufficient"),
    ]
    bad_a = np.nonzero(a_n > 1.0)[0]
    bad_g = np.nonzero(g < 1.0)[0]
    first = min([int(x[0]) for x in (bad_a, bad_g) if x.size], default=None)
    reports.append(ScheduleReport("range: alpha_n <= 1, gamma_n >= 1", N_max, _thin(a_n),
                                  VIOLATED if first is not None else
                                  (SATISFIED if pl is not None else TRENDS_TO_ZERO), first))
    return reports


def validate_newton(alpha, N_max=DEFAULT_HORIZON):
    """Check ``alpha_n > 0, alpha_n -> 0, 1 <= alpha_n/alpha_{n+1} <= rho`` and certify rho."""
    if N_max < 2:
        raise ContractViolation("N_max must be >= 2")
    a = alpha.values(N_max + 1)
    ratio = a[:-1] / a[1:]
    if isinstance(alpha, PowerLaw) and alpha.role == ALPHA:
        k = alpha.k
        rho = 2.0 ** k if k > 0 else 1.0
        ok = k > 0
        verdict = SATISFIED if ok else VIOLATED
        first = None if ok else 0
    else:
        rho = float(np.max(ratio))
        below = np.nonzero(ratio < 1.0)[0]
        ok = below.size == 0 and trends_to_zero(a)
        verdict = TRENDS_TO_ZERO if ok else VIOLATED
        first = None if ok else (int(below[0]) if below.size else 0)
    return ScheduleReport("newton ratio: alpha_n -> 0, 1 <= alpha_n/alpha_{n+1} <= rho", N_max, _thin(ratio),
                          verdict, first, extra={"rho": rho})


def _sequence_values(seq, n_max):
    if seq is None:
        return np.zeros(n_max)
    if isinstance(seq, Schedule):
        return seq.values(n_max)
    if callable(seq):
        return np.array([seq(n) for n in range(n_max)], dtype=float)
    if np.isscalar(seq):
        return np.full(n_max, float(seq))
    arr = np.asarray(seq, dtype=float)
    if arr.size < n_max:
        raise ContractViolation(f"noise sequence shorter than horizon {n_max}")
    return arr[:n_max]


def validate_noisy_coupling(alpha, h_seq, delta_seq, N_max=DEFAULT_HORIZON):
    """Check ``(h_n + delta_n) / alpha_n -> 0``."""
    h = _sequence_values(h_seq, N_max)
    dl = _sequence_values(delta_seq, N_max)
    if np.any(h < 0) or np.any(dl < 0):
        raise ContractViolation("noise levels must be >= 0")
    q = (h + dl) / alpha.values(N_max)
    name = "(h_n + delta_n) / alpha_n -> 0"
    if np.all(q == 0):
        return ScheduleReport(name, N_max, _thin(q), SATISFIED, note="noise-free")
    return _limit_report(name, q, None)
