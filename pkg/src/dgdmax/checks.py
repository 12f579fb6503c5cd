"""Self-contained property suites behind ``dgdmax check --suite ...``.

``invariants`` exercises the exact-algebra contracts (mixing conditions,
projection, deviation split, conservation laws); ``paper-properties`` spot
checks the analytical bounds and schedule formulas the solver relies on.
Each check returns (name, passed, detail).
"""

from __future__ import annotations

from math import ceil, log, sqrt

import numpy as np

from . import metrics, optimizers
from .graphs import (gen_erdos_renyi, laplacian_mixing, ring_graph,
                     spectral_radius_deviation, validate_mixing)
from .problems import (DrlrInstance, gen_synthetic, minty_condition_violated,
                       partition_dataset, verify_gradients)
from .subsolvers import (DualSubproblem, apg_maximize, project_simplex,
                         theoretical_budget_s_t)


def _fixture(m: int = 4, n: int = 8, n_samples: int = 48, beta_y: float = 0.5,
             seed: int = 11) -> DrlrInstance:
    ds = gen_synthetic(n, n_samples, 0.1, seed, feature_scale=0.8)
    parts = partition_dataset(ds, m, seed + 1)
    return DrlrInstance(ds, parts, alpha=10.0, beta_x=1e-3, beta_y=beta_y,
                        l_radius=3.0)


def run_invariants() -> list[tuple[str, bool, str]]:
    out = []
    rng = np.random.default_rng(3)

    worst = ""
    ok = True
    for trial in range(8):
        m = int(rng.integers(2, 25))
        g = gen_erdos_renyi(m, 0.4, int(rng.integers(1 << 30)))
        mix = laplacian_mixing(g)
        report = validate_mixing(mix, g)
        sym = float(np.max(np.abs(mix.weights - mix.weights.T)))
        if not report.all_passed or sym != 0.0:
            ok, worst = False, f"graph m={m}: {report}"
            break
    out.append(("mixing matrices satisfy all four conditions", ok, worst))

    errs = []
    for _ in range(20):
        m = int(rng.integers(2, 30))
        w = laplacian_mixing(gen_erdos_renyi(m, 0.5, int(rng.integers(1 << 30)))).weights
        dense = float(np.linalg.svd(w - np.ones((m, m)) / m, compute_uv=False)[0])
        errs.append(abs(dense - spectral_radius_deviation(w)))
    out.append(("power iteration matches dense SVD to 1e-8",
                max(errs) <= 1e-8, f"max err {max(errs):.2e}"))

    ok = True
    for _ in range(200):
        z = rng.standard_normal(int(rng.integers(1, 12))) * 3.0
        y = project_simplex(z)
        y2 = project_simplex(y)
        if (abs(y.sum() - 1.0) > 1e-12 or y.min() < 0.0
                or np.max(np.abs(y - y2)) > 1e-12):
            ok = False
            break
    out.append(("simplex projection feasible and idempotent", ok, ""))

    x = rng.standard_normal((5, 3))
    avg, perp = metrics.deviation(x)
    ok = (np.max(np.abs(avg + perp - x)) == 0.0
          and np.max(np.abs(perp.sum(axis=0))) <= 1e-12)
    out.append(("deviation split is exact and mean-free", ok, ""))

    problem = _fixture()
    mix = laplacian_mixing(ring_graph(problem.m))
    schedule = optimizers.Schedule.paper_default(
        problem.smoothness, problem.kappa, mix.rho)
    state, _ = optimizers.dgdmax_init(problem, mix, np.zeros(problem.n1), schedule)
    grads = None
    worst_track, worst_lam = 0.0, 0.0
    for _ in range(50):
        state, _, grads = optimizers.dgdmax_step(state, problem, mix, schedule,
                                                 grads_prev=grads)
        worst_track = max(worst_track, metrics.tracking_residual(
            state.v, problem, state.x, state.y))
        worst_lam = max(worst_lam, float(np.max(np.abs(state.lam.sum(axis=0)))))
    out.append(("gradient tracking conserved over 50 rounds",
                worst_track <= 1e-10, f"max residual {worst_track:.2e}"))
    out.append(("multiplier columns sum to zero over 50 rounds",
                worst_lam <= 1e-10, f"max |1'Lam| {worst_lam:.2e}"))
    return out


def run_paper_properties() -> list[tuple[str, bool, str]]:
    out = []
    rng = np.random.default_rng(5)

    ok = True
    for _ in range(10):
        l_sm = float(rng.uniform(0.5, 20.0))
        kappa = float(rng.uniform(1.0, 40.0))
        rho = float(rng.uniform(0.0, 0.95))
        ex = (1.0 - rho) ** 2 / (5.0 * l_sm * sqrt(1.0 + 6.0 * kappa**2))
        el = (1.0 - rho) ** 2 / (l_sm * (9.0 * kappa + 2.0))
        if optimizers.default_stepsizes(l_sm, kappa, rho) != (ex, el):
            ok = False
        t = int(rng.integers(0, 500))
        if optimizers.default_delta(t, rho, kappa) != \
                (1.0 - rho) ** 2 / (8.0 * kappa * (1 + t)):
            ok = False
    out.append(("stepsize and tolerance schedules match their formulas", ok, ""))

    ok = theoretical_budget_s_t(2.0, 100.0, np.e / 32.0, 1.0) == ceil(10.0 * 1.0)
    out.append(("subsolver budget formula", ok, ""))

    problem = _fixture(beta_y=0.4)
    mu = problem.strong_concavity
    worst = 0.0
    for _ in range(25):
        i = int(rng.integers(problem.m))
        x = rng.standard_normal(problem.n1) * 0.5
        lam_tilde = rng.standard_normal(problem.n2) * 0.05
        y_star = problem.exact_dual(i, x, lam_tilde)
        coef = problem.smoothness * sqrt(problem.m) / 2.0
        sub = DualSubproblem(
            lambda yy: problem.grad_y(i, x, yy) - coef * lam_tilde,
            problem.prox_h, mu, problem.dual_smoothness)
        res = apg_maximize(sub, problem.initial_dual(), 1e-8)
        worst = max(worst, float(np.linalg.norm(res.y - y_star)) - 1e-8 / mu)
    out.append(("approximate maximizer within delta/mu of the exact one",
                worst <= 0.0, f"worst slack {worst:.2e}"))

    kappa = problem.kappa
    ok = True
    lam = rng.standard_normal((problem.m, problem.n2)) * 0.01
    mix = laplacian_mixing(ring_graph(problem.m))
    lam_tilde = mix.weights.T @ lam - lam
    for _ in range(25):
        xa = rng.standard_normal(problem.n1) * 0.5
        xb = xa + rng.standard_normal(problem.n1) * 0.1
        ya = np.stack([problem.exact_dual(i, xa, lam_tilde[i])
                       for i in range(problem.m)])
        yb = np.stack([problem.exact_dual(i, xb, lam_tilde[i])
                       for i in range(problem.m)])
        lhs = np.linalg.norm(ya - yb)
        rhs = kappa * sqrt(problem.m) * np.linalg.norm(xa - xb)
        if lhs > rhs * (1.0 + 1e-12):
            ok = False
    out.append(("dual argmax map is kappa-Lipschitz in the primal", ok, ""))

    out.append(("scalar counterexample defeats the Minty condition",
                minty_condition_violated(), ""))

    pts = [(int(rng.integers(problem.m)), rng.standard_normal(problem.n1),
            rng.random(problem.n2)) for _ in range(10)]
    try:
        gap = verify_gradients(problem, pts)
        out.append(("gradients match central differences", True,
                    f"worst rel gap {gap:.2e}"))
    except AssertionError as err:
        out.append(("gradients match central differences", False, str(err)))
    return out


SUITES = {"invariants": run_invariants, "paper-properties": run_paper_properties}


def run_suite(name: str) -> bool:
    results = SUITES[name]()
    all_ok = True
    for check_name, ok, detail in results:
        mark = "PASS" if ok else "FAIL"
        extra = f"  ({detail})" if detail else ""
        print(f"[{mark}] {check_name}{extra}")
        all_ok &= ok
    return all_ok
