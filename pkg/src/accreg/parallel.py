"""Ordered fan-out over equations and a fixed-order mean."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import StepError


def map_equations(fn, n, threads=1):
    """``[fn(0), ..., fn(n-1)]``; failures are re-raised as :class:`StepError` for index ``i``.

    Results come back in index order whatever the worker count, so the
    caller's reduction is independent of scheduling.
    """

    def call(i):
        try:
            return fn(i)
        except StepError:
            raise
        except Exception as exc:  # noqa: BLE001 - tagged and re-raised
            raise StepError(str(exc), i, exc) from exc

    if threads is None or threads <= 1 or n == 1:
        return [call(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=min(threads, n)) as pool:
        futures = [pool.submit(call, i) for i in range(n)]
        return [f.result() for f in futures]


def ordered_sum(vectors):
    acc = np.array(vectors[0], dtype=float, copy=True)
    for v in vectors[1:]:
        acc += v
    return acc


def ordered_mean(vectors):
    """Sum in list order, then a single division by the count."""
    return ordered_sum(vectors) / len(vectors)
