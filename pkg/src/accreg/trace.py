"""Per-iteration run records and their CSV / JSON serialization."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractViolation

JSON_VECTOR_MAX_DIM = 50


@dataclass
class RunTrace:
    """Iterates ``x_0..x_n`` plus per-step data for steps ``0..n-1``.

    Row ``n`` of ``iterates``/``residuals``/``errors`` refers to ``x_n``; row
    ``n`` of ``alphas``/``gammas``/``inner_*``/``subs`` to the step producing
    ``x_{n+1}``.
    """

    method: str
    n_equations: int
    iterates: list = field(default_factory=list)
    subs: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    gammas: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    inner_iters: list = field(default_factory=list)
    inner_residuals: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    keep_subs: bool = True
    failure: Optional[str] = None

    def record_iterate(self, x, residuals, error):
        self.iterates.append(np.array(x, dtype=float))
        self.residuals.append(np.asarray(residuals, dtype=float))
        self.errors.append(float(error))

    def record_step(self, alpha, gamma, subs, inner_iters=None, inner_residuals=None):
        self.alphas.append(float(alpha))
        self.gammas.append(float("nan") if gamma is None else float(gamma))
        if self.keep_subs:
            self.subs.append(np.array(subs, dtype=float))
        N = self.n_equations
        self.inner_iters.append(np.zeros(N, int) if inner_iters is None else np.asarray(inner_iters, int))
        self.inner_residuals.append(np.zeros(N) if inner_residuals is None
                                    else np.asarray(inner_residuals, dtype=float))

    def add_column(self, name, value):
        """Append ``value`` to an extra per-step column, padding earlier rows with NaN."""
        col = self.extra.setdefault(name, [])
        while len(col) < self.n_steps - 1:
            col.append(float("nan"))
        col.append(float(value))

    @property
    def n_steps(self):
        return len(self.alphas)

    @property
    def final(self):
        return self.iterates[-1]

    @property
    def final_error(self):
        return self.errors[-1] if self.errors else float("nan")

    def error_array(self):
        return np.asarray(self.errors, dtype=float)

    def residual_array(self):
        return np.vstack(self.residuals) if self.residuals else np.zeros((0, self.n_equations))

    # serialization ----------------------------------------------------

    def columns(self):
        N = self.n_equations
        cols = ["n", "alpha", "gamma"] + [f"residual_{i}" for i in range(N)] + ["error"]
        cols += [f"inner_iters_{i}" for i in range(N)]
        cols += sorted(self.extra)
        return cols

    def rows(self):
        """One row per iterate; step columns of the last row are blank."""
        N = self.n_equations
        names = sorted(self.extra)
        for n in range(len(self.iterates)):
            step = n < self.n_steps
            row = [n, self.alphas[n] if step else None, self.gammas[n] if step else None]
            row += list(self.residuals[n]) + [self.errors[n]]
            row += list(self.inner_iters[n]) if step else [None] * N
            for name in names:
                col = self.extra[name]
                row.append(col[n] if n < len(col) else None)
            yield row

    def to_csv(self):
        buf = io.StringIO()
        header = " ".join(f"{k}={self.meta[k]}" for k in sorted(self.meta) if _scalar(self.meta[k]))
        buf.write(f"# {header}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns())
        for row in self.rows():
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    def to_json(self):
        d = {"method": self.method, "n_equations": self.n_equations, "meta": _jsonable(self.meta),
             "columns": self.columns(), "rows": [[_json_num(v) for v in r] for r in self.rows()]}
        if self.iterates and self.iterates[0].shape[0] <= JSON_VECTOR_MAX_DIM:
            d["iterates"] = [x.tolist() for x in self.iterates]
            if self.subs:
                d["subs"] = [s.tolist() for s in self.subs]
        if self.failure:
            d["failure"] = self.failure
        return json.dumps(d, sort_keys=True)

    def write_json(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())


def _scalar(v):
    return isinstance(v, (str, int, float, bool)) or v is None


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def _json_num(v):
    if v is None:
        return None
    if isinstance(v, (int, np.integer)):
        return int(v)
    f = float(v)
    return f if np.isfinite(f) else repr(f)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


@dataclass
class TraceFile:
    """A trace read back from CSV."""

    meta: dict
    columns: list
    data: dict

    def column(self, name):
        return np.asarray(self.data[name], dtype=float)

    @property
    def final_error(self):
        err = self.column("error")
        return float(err[-1]) if err.size else float("nan")


def read_csv(path):
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ContractViolation(f"{path}: missing metadata comment line")
        meta = dict(tok.split("=", 1) for tok in first[1:].split() if "=" in tok)
        reader = csv.reader(fh)
        cols = next(reader)
        data = {c: [] for c in cols}
        for row in reader:
            for c, v in zip(cols, row):
                data[c].append(float(v) if v != "" else float("nan"))
    return TraceFile(meta, cols, data)
