"""Adaptive Simpson quadrature for smooth scalar integrands."""

from __future__ import annotations

from typing import Callable

import numpy as np


class QuadratureError(RuntimeError):
    pass


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-12, max_depth: int = 40) -> tuple[float, float]:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    Returns ``(value, error_estimate)``.  Raises ``QuadratureError`` when the
    recursion depth is exhausted before the local error test passes.
    """
    if a == b:
        return 0.0, 0.0
    if a > b:
        val, err = adaptive_simpson(f, b, a, tol, max_depth)
        return -val, err

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0

    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total, err_total = 0.0, 0.0
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
        delta = left + right - s
        if abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
            err_total += abs(delta) / 15.0
        elif depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson did not converge on [{lo}, {hi}]")
        else:
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
    return total, err_total


def cumulative_simpson(f: Callable[[float], float], nodes: np.ndarray, tol: float) -> tuple[np.ndarray, float]:
    """Running integral of ``f`` from ``nodes[0]`` to every node.

    Each of the ``len(nodes) - 1`` panels gets an equal share of ``tol``.
    """
    nodes = np.asarray(nodes, dtype=float)
    share = tol / max(len(nodes) - 1, 1)
    out = np.zeros_like(nodes)
    err = 0.0
    for i in range(1, len(nodes)):
        val, e = adaptive_simpson(f, nodes[i - 1], nodes[i], share)
        out[i] = out[i - 1] + val
        err += e
    return out, err
