import numpy as np
import pytest

import dgdmax as d

DESK_SEED = 20240901


def build_desk_problem():
    """Desk-scale network fixture: N=200, n=20, m=5 agents on a ring.

    Feature scale, the dual proximity weight, and the smoothness region are
    chosen so the default schedules make visible progress at desk scale;
    iterates stay well inside the declared radius (asserted in tests).
    """
    ds = d.gen_synthetic(20, 200, 0.15, DESK_SEED, feature_scale=0.4)
    parts = d.partition_dataset(ds, 5, DESK_SEED + 1)
    inst = d.DrlrInstance(ds, parts, alpha=10.0, beta_x=0.25, beta_y=100.0,
                          l_radius=2.0)
    mix = d.laplacian_mixing(d.ring_graph(5), 1.0)
    return inst, mix


@pytest.fixture(scope="session")
def desk():
    inst, mix = build_desk_problem()
    schedule = d.Schedule.paper_default(inst.smoothness, inst.kappa, mix.rho)
    return inst, mix, schedule


@pytest.fixture(scope="session")
def small_drlr():
    """Cheap 3-agent instance for unit-level checks."""
    ds = d.gen_synthetic(6, 24, 0.15, 99, feature_scale=0.7)
    parts = d.partition_dataset(ds, 3, 100)
    inst = d.DrlrInstance(ds, parts, alpha=10.0, beta_x=1e-2, beta_y=0.5,
                          l_radius=2.0)
    mix = d.laplacian_mixing(d.ring_graph(3), 0.8)
    return inst, mix


@pytest.fixture(scope="session")
def single_agent_drlr():
    ds = d.gen_synthetic(8, 40, 0.15, 55, feature_scale=0.6)
    parts = d.partition_dataset(ds, 1, 56)
    return d.DrlrInstance(ds, parts, alpha=10.0, beta_x=1e-3, beta_y=0.5,
                          l_radius=2.0)


def brute_force_simplex(z: np.ndarray) -> np.ndarray:
    """Simplex projection by exhaustive active-set enumeration (N <= ~12).

    For every candidate support S the equality-constrained minimizer is
    y_S = z_S - (sum(z_S) - 1)/|S|; keep the feasible candidate closest to z.
    """
    n = z.size
    best, best_dist = None, np.inf
    for mask in range(1, 1 << n):
        support = [k for k in range(n) if mask >> k & 1]
        zs = z[support]
        y = np.zeros(n)
        y[support] = zs - (zs.sum() - 1.0) / len(support)
        if np.min(y[support]) < -1e-12:
            continue
        dist = float(np.sum((y - z) ** 2))
        if dist < best_dist:
            best, best_dist = y, dist
    return best
