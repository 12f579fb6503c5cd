"""Dual-subproblem machinery.

Each agent's local dual objective at round t is a strongly concave function

    d(y) = s(y) - h(y),    s(y) = f_i(x_i, y) - (L sqrt(m) / 2) <lam_tilde_i, y>,

maximized either in closed form (when the problem exposes an exact oracle)
or by an accelerated proximal gradient loop stopped by a checkable
stationarity certificate: the algorithm accepts y as soon as it can exhibit
a subgradient of -d at y with norm at most delta.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log, sqrt
from typing import Callable, Optional

import numpy as np


class SubsolverError(RuntimeError):
    pass


def project_simplex(z: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort-and-threshold: sort z descending, take the largest k with
    z_(k) - (sum of top k - 1)/k > 0, subtract that average, clip at zero.
    O(N log N), exact up to floating point.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("z must be a nonempty vector")
    if not np.all(np.isfinite(z)):
        raise ValueError("z must be finite")
    srt = np.sort(z)[::-1]
    csum = np.cumsum(srt) - 1.0
    ks = np.arange(1, z.size + 1)
    mask = srt - csum / ks > 0.0
    k = int(np.nonzero(mask)[0][-1]) + 1
    tau = csum[k - 1] / k
    return np.maximum(z - tau, 0.0)


@dataclass
class DualSubproblem:
    """Strongly concave composite objective d(y) = s(y) - h(y).

    ``grad_smooth`` evaluates the gradient of the concave smooth part s;
    ``prox_h`` is the proximal map (z, eta) -> argmin_y h(y) + ||y-z||^2/(2 eta).
    ``mu`` and ``l_y`` are the strong-concavity and smoothness moduli of s.
    """

    grad_smooth: Callable[[np.ndarray], np.ndarray]
    prox_h: Callable[[np.ndarray, float], np.ndarray]
    mu: float
    l_y: float


@dataclass
class SubsolveResult:
    y: np.ndarray
    certified_residual: float
    iterations_used: int
    converged: bool
    budget_s_t: Optional[int] = None


def apg_maximize(sub: DualSubproblem, y0: np.ndarray, delta: float,
                 max_iters: int = 100_000) -> SubsolveResult:
    """Maximize d = s - h by accelerated proximal gradient on -d.

    Non-adaptive scheme: step 1/L_y, momentum (1 - sqrt(mu/L_y)) /
    (1 + sqrt(mu/L_y)).  After the prox step from extrapolation point z,

        xi = L_y (z - y+) + grad_q(y+) - grad_q(z),      q = -s,

    is an exact element of the subdifferential of -d at y+, so ||xi|| is a
    certified upper bound on dist(0, partial d(y+)).  Returns the first
    iterate whose certificate is at most delta; on budget exhaustion,
    returns the best iterate seen with ``converged=False``.
    """
    if not (sub.l_y >= sub.mu > 0.0):
        raise ValueError("need L_y >= mu > 0")
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    ratio = sqrt(sub.mu / sub.l_y)
    beta = (1.0 - ratio) / (1.0 + ratio)
    step = 1.0 / sub.l_y

    y_prev = np.asarray(y0, dtype=float)
    y_cur = y_prev
    best_y, best_res = y_prev, np.inf
    for k in range(max_iters):
        z = y_cur + beta * (y_cur - y_prev) if k > 0 else y_cur
        grad_z = -sub.grad_smooth(z)
        if not np.all(np.isfinite(grad_z)):
            raise SubsolverError("non-finite gradient in dual subproblem")
        y_next = sub.prox_h(z - step * grad_z, step)
        xi = sub.l_y * (z - y_next) + (-sub.grad_smooth(y_next)) - grad_z
        res = float(np.linalg.norm(xi))
        if res < best_res:
            best_y, best_res = y_next, res
        if res <= delta:
            return SubsolveResult(y_next, res, k + 1, True)
        y_prev, y_cur = y_cur, y_next
    return SubsolveResult(best_y, best_res, max_iters, False)


def theoretical_budget_s_t(l_y: float, kappa_y: float, gap_estimate: float,
                           delta_t: float) -> int:
    """Iteration count ceil(sqrt(kappa_y) * ln(16 L_y gap / delta_t^2)).

    Reporting only; the runtime stopping rule is the certificate in
    ``apg_maximize``, which does not need the (unknown) optimality gap.
    """
    if delta_t <= 0.0 or gap_estimate <= 0.0:
        raise ValueError("delta_t and gap_estimate must be positive")
    if l_y <= 0.0 or kappa_y <= 0.0:
        raise ValueError("l_y and kappa_y must be positive")
    return ceil(sqrt(kappa_y) * log(16.0 * l_y * gap_estimate / delta_t**2))
