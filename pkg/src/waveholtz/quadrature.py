"""Composite Simpson rules used by the transfer-function machinery."""

from __future__ import annotations

import numpy as np

from .errors import DomainError, QuadratureError


def simpson_weights(steps: int, length: float) -> np.ndarray:
    """Weights of the composite Simpson rule with ``steps`` (even) intervals."""
    if steps < 2 or steps % 2:
        raise DomainError(f"Simpson needs an even number of intervals >= 2, got {steps}")
    w = np.ones(steps + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (length / steps / 3.0)


def adaptive_simpson(func, a: float, b: float, tol: float = 1e-10,
                     start: int = 64, max_intervals: int = 2**22) -> tuple[float, float]:
    """Integrate a vectorised ``func`` over [a, b] by interval doubling.

    The number of Simpson intervals doubles until the Richardson error
    estimate |S_2m - S_m| / 15 drops below ``tol``.  Returns
    ``(value, error_estimate)``.

    Raises
    ------
    QuadratureError
        If ``max_intervals`` is reached first; the exception carries the
        best estimate and its error.
    """
    if b <= a:
        return 0.0, 0.0
    m = start + (start % 2)
    x = np.linspace(a, b, m + 1)
    fx = np.asarray(func(x), dtype=float)
    prev = float(simpson_weights(m, b - a) @ fx)
    while True:
        # reuse old nodes: new nodes sit at the midpoints
        mid = 0.5 * (x[:-1] + x[1:])
        fmid = np.asarray(func(mid), dtype=float)
        x_new = np.empty(2 * m + 1)
        f_new = np.empty(2 * m + 1)
        x_new[0::2], x_new[1::2] = x, mid
        f_new[0::2], f_new[1::2] = fx, fmid
        m *= 2
        x, fx = x_new, f_new
        cur = float(simpson_weights(m, b - a) @ fx)
        err = abs(cur - prev) / 15.0
        if err <= tol:
            return cur + (cur - prev) / 15.0, err
        if m >= max_intervals:
            raise QuadratureError(
                f"Simpson on [{a}, {b}] did not reach tol={tol:g}",
                estimate=cur, error=err)
        prev = cur
