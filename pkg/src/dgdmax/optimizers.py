"""Algorithms over the simulated synchronous gossip network.

One network step = one communication round.  Every agent, from the shared
round-t snapshot:

  1. averages neighbors' x and takes a proximal step along its tracked
     gradient:      x_i <- prox_{eta_x g}(sum_j w_ij x_j - eta_x v_i);
  2. ascends its multiplier along the local y-disagreement:
         lam_i <- lam_i + (L eta_lam / (2 sqrt(m))) (sum_j w_ij y_j - y_i),
     and forms lam_tilde_i = sum_j w_ji lam_j - lam_i (column weights);
  3. (approximately) maximizes its local dual objective to tolerance
     delta_{t+1}, warm-started from its previous y;
  4. refreshes the gradient tracker:
         v_i <- sum_j w_ij v_j + grad_x f_i(new) - grad_x f_i(old).

Writes go to a fresh round-(t+1) buffer, so per-agent work could fan out to
parallel workers; all reductions are ordinary matrix products with a fixed
agent order, which keeps traces bit-identical to sequential execution.

With m = 1 the mixing collapses and the loop reduces to the centralized
gradient-descent-maximization (GDMax) iteration; a two-timescale GDA
baseline with simultaneous updates is provided for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, sqrt
from typing import Callable, Optional

import numpy as np

from . import metrics
from .graphs import MixingMatrix
from .problems import MinimaxProblem
from .subsolvers import DualSubproblem, apg_maximize

DIVERGENCE_LIMIT = 1e8


class DivergenceError(RuntimeError):
    def __init__(self, round_index: int):
        super().__init__(f"iterate norm exceeded {DIVERGENCE_LIMIT:g} "
                         f"at round {round_index}")
        self.round_index = round_index


class SubsolverBudgetError(RuntimeError):
    def __init__(self, round_index: int, agent: int, residual: float):
        super().__init__(
            f"dual subsolver budget exhausted at round {round_index}, "
            f"agent {agent} (best certificate {residual:.3e})")
        self.round_index = round_index
        self.agent = agent


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

def default_stepsizes(l_smooth: float, kappa: float, rho: float) -> tuple[float, float]:
    """Default primal/multiplier stepsizes.

    eta_x = (1-rho)^2 / (5 L sqrt(1 + 6 kappa^2)),
    eta_lambda = (1-rho)^2 / (L (9 kappa + 2)).
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must be in [0, 1)")
    if l_smooth <= 0.0 or kappa < 1.0:
        raise ValueError("need L > 0 and kappa >= 1")
    eta_x = (1.0 - rho) ** 2 / (5.0 * l_smooth * sqrt(1.0 + 6.0 * kappa**2))
    eta_lam = (1.0 - rho) ** 2 / (l_smooth * (9.0 * kappa + 2.0))
    return eta_x, eta_lam


def default_delta(t: int, rho: float, kappa: float) -> float:
    """Summable-square subsolver tolerance (1-rho)^2 / (8 kappa (1+t))."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return (1.0 - rho) ** 2 / (8.0 * kappa * (1.0 + t))


def iteration_budget_T(epsilon: float, l_smooth: float, kappa: float,
                       rho: float, phi0: float) -> int:
    """Round budget guaranteeing an epsilon-stationary point on average.

    ceil of (1/eps^2) * max of
        64 (10 L kappa (phi0 + 1) + 1) / (1-rho)^2,
        4096 L kappa / (1-rho),
        800,
    where phi0 is the initial objective gap.  Reporting only; runs stop on
    the configured round budget or a measured stationarity target.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must be in [0, 1)")
    inner = max(
        64.0 * (10.0 * l_smooth * kappa * (phi0 + 1.0) + 1.0) / (1.0 - rho) ** 2,
        4096.0 * l_smooth * kappa / (1.0 - rho),
        800.0,
    )
    return ceil(inner / epsilon**2)


@dataclass(frozen=True)
class Schedule:
    """Stepsizes plus the per-round subsolver tolerance t -> delta_t."""

    eta_x: float
    eta_lambda: float
    delta_fn: Callable[[int], float]

    @classmethod
    def paper_default(cls, l_smooth: float, kappa: float, rho: float) -> "Schedule":
        eta_x, eta_lam = default_stepsizes(l_smooth, kappa, rho)
        return cls(eta_x, eta_lam,
                   lambda t: default_delta(t, rho, kappa))


# ---------------------------------------------------------------------------
# network state and the decentralized loop
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NetworkState:
    """Immutable round-t snapshot (rows are agents)."""

    t: int
    x: np.ndarray        # m x n1
    y: np.ndarray        # m x n2
    lam: np.ndarray      # m x n2
    lam_tilde: np.ndarray  # m x n2
    v: np.ndarray        # m x n1


@dataclass(frozen=True)
class StepInfo:
    subsolver_iters: int
    delta_used: float


def _solve_dual(problem: MinimaxProblem, i: int, x_i: np.ndarray,
                lam_tilde_i: np.ndarray, warm: np.ndarray, delta: float,
                round_index: int, max_iters: int):
    """One agent's dual maximizer: exact oracle if present, else APG."""
    y = problem.exact_dual(i, x_i, lam_tilde_i)
    if y is not None:
        return y, 0, 0.0
    coef = problem.smoothness * sqrt(problem.m) / 2.0
    sub = DualSubproblem(
        grad_smooth=lambda yy: problem.grad_y(i, x_i, yy) - coef * lam_tilde_i,
        prox_h=problem.prox_h,
        mu=problem.strong_concavity,
        l_y=problem.dual_smoothness,
    )
    res = apg_maximize(sub, warm, delta, max_iters)
    if not res.converged:
        raise SubsolverBudgetError(round_index, i, res.certified_residual)
    return res.y, res.iterations_used, delta


def _grad_x_rows(problem: MinimaxProblem, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.stack([problem.grad_x(i, x[i], y[i]) for i in range(problem.m)])


def _guard(round_index: int, *mats: np.ndarray) -> None:
    for mat in mats:
        if not np.all(np.isfinite(mat)) or np.max(np.abs(mat)) > DIVERGENCE_LIMIT:
            raise DivergenceError(round_index)


def dgdmax_init(problem: MinimaxProblem, mix: MixingMatrix, x0: np.ndarray,
                schedule: Schedule, max_subsolver_iters: int = 100_000
                ) -> tuple[NetworkState, StepInfo]:
    """Round-0 state: shared x0, zero multipliers, delta_0-accurate duals."""
    m = problem.m
    x = np.tile(np.asarray(x0, dtype=float), (m, 1))
    lam = np.zeros((m, problem.n2))
    lam_tilde = np.zeros((m, problem.n2))
    delta0 = schedule.delta_fn(0)
    y = np.empty((m, problem.n2))
    iters = 0
    delta_used = 0.0
    warm = problem.initial_dual()
    for i in range(m):
        y[i], it, delta_used = _solve_dual(
            problem, i, x[i], lam_tilde[i], warm, delta0, 0, max_subsolver_iters)
        iters += it
    v = _grad_x_rows(problem, x, y)
    _guard(0, x, y, v)
    return NetworkState(0, x, y, lam, lam_tilde, v), StepInfo(iters, delta_used)


def dgdmax_step(state: NetworkState, problem: MinimaxProblem, mix: MixingMatrix,
                schedule: Schedule, max_subsolver_iters: int = 100_000,
                grads_prev: Optional[np.ndarray] = None
                ) -> tuple[NetworkState, StepInfo, np.ndarray]:
    """One synchronous round; returns the next state, subsolver effort, and
    the new gradient rows (pass back in as ``grads_prev`` to avoid a
    recomputation)."""
    w = mix.weights
    m = problem.m
    l_smooth = problem.smoothness
    t_next = state.t + 1

    x_mixed = w @ state.x
    drift = x_mixed - schedule.eta_x * state.v
    x_next = np.stack([problem.prox_g(drift[i], schedule.eta_x) for i in range(m)])

    lam_next = state.lam + (l_smooth * schedule.eta_lambda / (2.0 * sqrt(m))) * (
        w @ state.y - state.y)
    lam_tilde_next = w.T @ lam_next - lam_next

    delta_next = schedule.delta_fn(t_next)
    y_next = np.empty_like(state.y)
    iters = 0
    delta_used = 0.0
    for i in range(m):
        y_next[i], it, delta_used = _solve_dual(
            problem, i, x_next[i], lam_tilde_next[i], state.y[i], delta_next,
            t_next, max_subsolver_iters)
        iters += it

    if grads_prev is None:
        grads_prev = _grad_x_rows(problem, state.x, state.y)
    grads_next = _grad_x_rows(problem, x_next, y_next)
    v_next = w @ state.v + grads_next - grads_prev

    _guard(t_next, x_next, y_next, lam_next, v_next)
    nxt = NetworkState(t_next, x_next, y_next, lam_next, lam_tilde_next, v_next)
    return nxt, StepInfo(iters, delta_used), grads_next


def dgdmax_run(problem: MinimaxProblem, mix: MixingMatrix, x0: np.ndarray,
               schedule: Schedule, t_max: int, target_eps: float | None = None,
               max_subsolver_iters: int = 100_000,
               row_hook: Optional[Callable[[dict], None]] = None):
    """Drive t_max rounds, emitting one metric row per executed round.

    Rows describe post-step states t = 1..t_max.  With ``target_eps`` set,
    the loop stops early once all three stationarity quantities (composite
    gradient mapping, scaled consensus error, multiplier gradient) fall
    below the target.
    """
    state, _ = dgdmax_init(problem, mix, x0, schedule, max_subsolver_iters)
    grads = None
    rows = []
    for _ in range(t_max):
        state, info, grads = dgdmax_step(
            state, problem, mix, schedule, max_subsolver_iters, grads)
        report = metrics.stationarity_report(problem, mix, state, schedule.eta_x)
        row = metrics.report_row(report, state.t, info.subsolver_iters,
                                 info.delta_used)
        rows.append(row)
        if row_hook is not None:
            row_hook(row)
        if target_eps is not None and max(
                report.prox_grad_P, report.consensus_x, report.lambda_grad
        ) < target_eps:
            break
    return rows, state


# ---------------------------------------------------------------------------
# centralized baselines (m = 1)
# ---------------------------------------------------------------------------

def gdmax_step(problem: MinimaxProblem, x: np.ndarray, eta_x: float,
               delta: float = 1e-10, round_index: int = 0,
               max_subsolver_iters: int = 100_000, warm=None):
    """x <- prox_{eta_x g}(x - eta_x grad_x f(x, y*(x))) with y* the
    (delta-accurate) maximizer of f(x, .) - h."""
    if problem.m != 1:
        raise ValueError("gdmax requires a single-agent problem")
    if warm is None:
        warm = problem.initial_dual()
    y, iters, _ = _solve_dual(problem, 0, x, np.zeros(problem.n2), warm,
                              delta, round_index, max_subsolver_iters)
    x_next = problem.prox_g(x - eta_x * problem.grad_x(0, x, y), eta_x)
    _guard(round_index, x_next, y)
    return x_next, y, iters


def gdmax_run(problem: MinimaxProblem, x0: np.ndarray, eta_x: float, t_max: int,
              target_tol: float | None = None,
              delta_fn: Callable[[int], float] | None = None,
              max_subsolver_iters: int = 100_000):
    """Centralized run; per-iteration rows carry the primal gradient-mapping
    norm of p + g at the current x (measured with the exact inner max)."""
    x = np.asarray(x0, dtype=float)
    warm = problem.initial_dual()
    rows = []
    for t in range(1, t_max + 1):
        delta = delta_fn(t - 1) if delta_fn is not None else 1e-10
        x, warm, iters = gdmax_step(problem, x, eta_x, delta, t,
                                    max_subsolver_iters, warm)
        norm_p = metrics.prox_grad_original(problem, x, eta_x)
        rows.append(metrics.centralized_row(t, norm_p, iters,
                                            0.0 if iters == 0 else delta))
        if target_tol is not None and norm_p <= target_tol:
            break
    return rows, x


@dataclass
class GdaState:
    x: np.ndarray
    y: np.ndarray
    eta_x: float
    eta_y: float


def gda_step(problem: MinimaxProblem, state: GdaState, round_index: int = 0) -> GdaState:
    """Simultaneous two-timescale update from the round-t pair:
    x via a proximal descent step, y via a proximal ascent step."""
    if problem.m != 1:
        raise ValueError("the GDA baseline requires a single-agent problem")
    gx = problem.grad_x(0, state.x, state.y)
    gy = problem.grad_y(0, state.x, state.y)
    x_next = problem.prox_g(state.x - state.eta_x * gx, state.eta_x)
    y_next = problem.prox_h(state.y + state.eta_y * gy, state.eta_y)
    _guard(round_index, x_next, y_next)
    return GdaState(x_next, y_next, state.eta_x, state.eta_y)


def gda_run(problem: MinimaxProblem, x0: np.ndarray, y0: np.ndarray,
            eta_x: float, eta_y: float, t_max: int,
            target_tol: float | None = None):
    """GDA baseline; rows carry the same primal gradient-mapping metric so
    curves are directly comparable with the maximization-based method."""
    state = GdaState(np.asarray(x0, dtype=float), np.asarray(y0, dtype=float),
                     eta_x, eta_y)
    rows = []
    for t in range(1, t_max + 1):
        state = gda_step(problem, state, t)
        norm_p = metrics.prox_grad_original(problem, state.x, eta_x)
        rows.append(metrics.centralized_row(t, norm_p, 0, 0.0))
        if target_tol is not None and norm_p <= target_tol:
            break
    return rows, state
