"""Composite Gauss-Legendre rules with per-point interval endpoints."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import QuadratureConvergenceError


@lru_cache(maxsize=64)
def _unit_rule(panels: int, order: int):
    x, w = leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    h = np.diff(edges)[:, None]
    nodes = (edges[:-1, None] + h * (x + 1) / 2).ravel()
    weights = (h * w / 2).ravel()
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def panel_rule(lo, hi, panels: int, order: int):
    """Nodes and weights on ``[lo, hi]``, broadcasting over array endpoints.

    The result has shape ``broadcast(lo, hi).shape + (panels * order,)``.
    Empty intervals (``hi <= lo``) get zero weight.
    """
    u, wu = _unit_rule(panels, order)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    width = np.maximum(hi - lo, 0.0)
    return lo + width * u, width * wu


def panel_edges(a: float, b: float, panels: int):
    edges = np.linspace(a, b, panels + 1)
    return list(zip(edges[:-1], edges[1:]))


def refine(evaluate, rel_tol: float, abs_tol: float, max_refinements: int, what: str):
    """Run ``evaluate(level)`` for increasing levels until two successive
    estimates agree to ``max(abs_tol, rel_tol*|I|)``; return the finer one."""
    previous = evaluate(0)
    diff = math.inf
    for level in range(1, max_refinements + 1):
        current = evaluate(level)
        diff = abs(current - previous)
        if diff <= max(abs_tol, rel_tol * abs(current)):
            return current
        previous = current
    raise QuadratureConvergenceError(f"{what} did not converge", previous, diff)
