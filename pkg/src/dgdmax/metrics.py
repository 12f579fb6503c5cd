"""Stationarity and consensus measures reported every round.

Three quantities drive stopping and plots, evaluated at the network average
x_avg with the current multiplier block Lambda:

  * the composite gradient mapping of the reformulated objective,
    (1/eta) ||x_avg - prox_{eta g}(x_avg - eta grad_x)||, where grad_x is
    the mean of per-agent x-gradients at the (exact or surrogate) dual
    maximizers;
  * the consensus error ||X_perp||_F, reported both scaled by L/sqrt(m) and
    by 1/sqrt(m);
  * the multiplier gradient (L / (2 sqrt(m))) ||(W - I) Yhat||_F.

When the problem has no closed-form dual oracle, the current dual iterates
stand in for the exact maximizers and the row is flagged as a surrogate.
The same gradient-mapping norm for the original problem (pooled inner
maximization) is emitted when a pooled oracle exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .graphs import MixingMatrix
from .problems import MinimaxProblem

TRACE_COLUMNS = (
    "t", "prox_grad_P", "prox_grad_p", "consensus_x", "consensus_x_scaled",
    "lambda_grad", "lambda_grad_is_surrogate", "tracking_residual",
    "subsolver_iters", "delta_t",
)


def deviation(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split agent rows into the consensus part and the deviation part.

    Returns (X_avg, X_perp) with X_avg the rank-one matrix of row means and
    X_perp = X - X_avg, so X = X_avg + X_perp and 1' X_perp = 0.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    avg = np.tile(x.mean(axis=0), (x.shape[0], 1))
    return avg, x - avg


def prox_grad_mapping(prox_g, x: np.ndarray, eta: float,
                      grad: np.ndarray) -> float:
    """Composite stationarity residual (1/eta)||x - prox_{eta g}(x - eta grad)||."""
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    return float(np.linalg.norm(x - prox_g(x - eta * grad, eta)) / eta)


def dual_maximizers(problem: MinimaxProblem, mix: MixingMatrix,
                    x_avg: np.ndarray, lam: np.ndarray,
                    y_current: np.ndarray | None = None):
    """Per-agent maximizers at the consensus point, or the surrogate rows.

    Exact mode evaluates each agent's oracle at (x_avg, lam_tilde_i) with
    lam_tilde = W' Lambda - Lambda; surrogate mode substitutes the current
    dual iterates and flags the result.
    """
    m = problem.m
    lam_tilde = mix.weights.T @ lam - lam
    rows = []
    for i in range(m):
        y_i = problem.exact_dual(i, x_avg, lam_tilde[i])
        if y_i is None:
            if y_current is None:
                raise ValueError("no exact dual oracle and no surrogate rows")
            return np.asarray(y_current, dtype=float), True
        rows.append(y_i)
    return np.stack(rows), False


def lambda_grad(problem: MinimaxProblem, mix: MixingMatrix, x_avg: np.ndarray,
                lam: np.ndarray, y_current: np.ndarray | None = None,
                exact: bool = True) -> tuple[float, bool]:
    """Multiplier-gradient norm (L/(2 sqrt m))||(W - I) Yhat||_F.

    Returns (value, surrogate_flag); ``exact=False`` forces the surrogate.
    """
    if exact:
        y_hat, surrogate = dual_maximizers(problem, mix, x_avg, lam, y_current)
    else:
        if y_current is None:
            raise ValueError("surrogate mode needs the current dual rows")
        y_hat, surrogate = np.asarray(y_current, dtype=float), True
    m = problem.m
    w = mix.weights
    value = (problem.smoothness / (2.0 * sqrt(m))) * np.linalg.norm(
        w @ y_hat - y_hat)
    return float(value), surrogate


def grad_x_reformulation(problem: MinimaxProblem, x_avg: np.ndarray,
                         y_hat: np.ndarray) -> np.ndarray:
    """Mean x-gradient over agents at the consensus point."""
    total = np.zeros(problem.n1)
    for i in range(problem.m):
        total += problem.grad_x(i, x_avg, y_hat[i])
    return total / problem.m


def prox_grad_original(problem: MinimaxProblem, x: np.ndarray,
                       eta: float) -> float:
    """Gradient mapping of the original objective p + g at x.

    Uses the pooled exact inner maximization; NaN when the problem does not
    expose one.
    """
    y_star = problem.pooled_dual(x)
    if y_star is None:
        return float("nan")
    grad = np.zeros(problem.n1)
    for i in range(problem.m):
        grad += problem.grad_x(i, x, y_star)
    grad /= problem.m
    return prox_grad_mapping(problem.prox_g, x, eta, grad)


def tracking_residual(v: np.ndarray, problem: MinimaxProblem, x: np.ndarray,
                      y: np.ndarray) -> float:
    """Gap between the tracker average and the true mean x-gradient."""
    mean_grad = np.zeros(problem.n1)
    for i in range(problem.m):
        mean_grad += problem.grad_x(i, x[i], y[i])
    mean_grad /= problem.m
    return float(np.linalg.norm(v.mean(axis=0) - mean_grad))


@dataclass(frozen=True)
class StationarityReport:
    prox_grad_P: float
    prox_grad_p: float
    consensus_x: float          # (L / sqrt m) ||X_perp||_F
    consensus_x_scaled: float   # ||X_perp||_F / sqrt m
    lambda_grad: float
    lambda_grad_is_surrogate: bool
    tracking_residual: float


def stationarity_report(problem: MinimaxProblem, mix: MixingMatrix, state,
                        eta: float) -> StationarityReport:
    """Full per-round report for a network state snapshot."""
    m = problem.m
    x_avg = state.x.mean(axis=0)
    _, x_perp = deviation(state.x)
    perp_norm = float(np.linalg.norm(x_perp))

    y_hat, surrogate = dual_maximizers(problem, mix, x_avg, state.lam, state.y)
    grad_p_ref = grad_x_reformulation(problem, x_avg, y_hat)
    w = mix.weights
    lam_value = (problem.smoothness / (2.0 * sqrt(m))) * float(
        np.linalg.norm(w @ y_hat - y_hat))

    return StationarityReport(
        prox_grad_P=prox_grad_mapping(problem.prox_g, x_avg, eta, grad_p_ref),
        prox_grad_p=prox_grad_original(problem, x_avg, eta),
        consensus_x=problem.smoothness / sqrt(m) * perp_norm,
        consensus_x_scaled=perp_norm / sqrt(m),
        lambda_grad=lam_value,
        lambda_grad_is_surrogate=surrogate,
        tracking_residual=tracking_residual(state.v, problem, state.x, state.y),
    )


def report_row(report: StationarityReport, t: int, subsolver_iters: int,
               delta_t: float) -> dict:
    return {
        "t": t,
        "prox_grad_P": report.prox_grad_P,
        "prox_grad_p": report.prox_grad_p,
        "consensus_x": report.consensus_x,
        "consensus_x_scaled": report.consensus_x_scaled,
        "lambda_grad": report.lambda_grad,
        "lambda_grad_is_surrogate": int(report.lambda_grad_is_surrogate),
        "tracking_residual": report.tracking_residual,
        "subsolver_iters": subsolver_iters,
        "delta_t": delta_t,
    }


def centralized_row(t: int, norm_p: float, subsolver_iters: int,
                    delta_t: float) -> dict:
    """Trace row for single-agent baselines (no network quantities)."""
    return {
        "t": t,
        "prox_grad_P": norm_p,
        "prox_grad_p": norm_p,
        "consensus_x": 0.0,
        "consensus_x_scaled": 0.0,
        "lambda_grad": 0.0,
        "lambda_grad_is_surrogate": 0,
        "tracking_residual": 0.0,
        "subsolver_iters": subsolver_iters,
        "delta_t": delta_t,
    }
