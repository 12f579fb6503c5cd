"""Minimax problem abstraction and concrete instances.

The network solves  min_x max_y  (1/m) sum_i f_i(x, y) + g(x) - h(y)  where
each f_i is smooth and strongly concave in y.  A problem object exposes
per-agent gradient evaluators, the proximal maps of g and h, the moduli
(L, mu, L_y), and optional closed-form dual maximizers.

The shipped instance is distributionally robust logistic regression (DRLR):

    f_i(x, y) = m * sum_{j in J_i} y_j * log(1 + exp(-b_j a_j' x))
                + V_x(x) - V_y(y),
    V_x(x) = beta_x * sum_k alpha x_k^2 / (1 + alpha x_k^2),
    V_y(y) = (beta_y / 2) * ||y - 1/N||^2,
    g = 0,  h = indicator of the probability simplex.

The adversarial weights y live on the simplex; beta_y controls how far the
worst case may drift from the uniform distribution.  Since f_i is linear in
y apart from -V_y, the y-subproblem reduces to one simplex projection and
mu = L_y = beta_y exactly.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .rng import SplitMix64
from .subsolvers import project_simplex


class LibsvmFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Sparse feature matrix (rows are samples) with +-1 labels."""

    features: sp.csr_matrix
    labels: np.ndarray

    def __post_init__(self):
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("feature/label count mismatch")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must be in {-1, +1}")

    @property
    def sample_count(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]


def parse_libsvm(stream, zero_one_labels: bool = False,
                 n_features: int | None = None) -> Dataset:
    """Read LIBSVM text: one `<label> <idx>:<val> ...` line per sample.

    Indices are 1-based and must be strictly ascending within a line.
    Labels must be +-1; files labeled {0, 1} are accepted with
    ``zero_one_labels=True`` (0 maps to -1).  The feature dimension is the
    largest index seen unless ``n_features`` overrides it.  Errors carry the
    offending line number.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    labels, rows, cols, vals = [], [], [], []
    max_idx = 0
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise LibsvmFormatError(f"line {lineno}: bad label {tokens[0]!r}")
        if zero_one_labels and label == 0.0:
            label = -1.0
        if label not in (-1.0, 1.0):
            raise LibsvmFormatError(
                f"line {lineno}: label {tokens[0]!r} outside the accepted set")
        prev_idx = 0
        for tok in tokens[1:]:
            try:
                idx_s, val_s = tok.split(":")
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise LibsvmFormatError(f"line {lineno}: malformed token {tok!r}")
            if idx < 1:
                raise LibsvmFormatError(f"line {lineno}: index {idx} < 1")
            if idx <= prev_idx:
                raise LibsvmFormatError(
                    f"line {lineno}: indices not ascending at {tok!r}")
            if not np.isfinite(val):
                raise LibsvmFormatError(f"line {lineno}: non-finite value {tok!r}")
            prev_idx = idx
            rows.append(len(labels))
            cols.append(idx - 1)
            vals.append(val)
        max_idx = max(max_idx, prev_idx)
        labels.append(label)
    if not labels:
        raise LibsvmFormatError("empty dataset")
    n = n_features if n_features is not None else max_idx
    if max_idx > n:
        raise LibsvmFormatError(f"feature index {max_idx} exceeds n_features={n}")
    mat = sp.csr_matrix(
        (vals, (rows, cols)), shape=(len(labels), max(n, 1)), dtype=float)
    return Dataset(mat, np.array(labels))


def save_libsvm(ds: Dataset, path) -> None:
    with open(path, "w") as fh:
        csr = ds.features.tocsr()
        for i in range(ds.sample_count):
            lab = "+1" if ds.labels[i] > 0 else "-1"
            start, end = csr.indptr[i], csr.indptr[i + 1]
            feats = " ".join(
                f"{csr.indices[k] + 1}:{csr.data[k]!r}" for k in range(start, end))
            fh.write(f"{lab} {feats}".rstrip() + "\n")


def partition_dataset(ds: Dataset, m: int, seed: int) -> list[np.ndarray]:
    """Split sample indices into m near-equal chunks of a seeded shuffle.

    Chunk sizes are ceil(N/m) for the first N mod m agents and floor(N/m)
    for the rest; the shuffle is a splitmix64-driven Fisher-Yates, so the
    partition is a pure function of (N, m, seed).
    """
    n_samples = ds.sample_count
    if not 1 <= m <= n_samples:
        raise ValueError(f"need 1 <= m <= N, got m={m}, N={n_samples}")
    perm = np.arange(n_samples)
    SplitMix64(seed).shuffle(perm)
    base, extra = divmod(n_samples, m)
    parts, start = [], 0
    for i in range(m):
        size = base + (1 if i < extra else 0)
        parts.append(np.sort(perm[start:start + size]))
        start += size
    return parts


def save_partition(parts, path) -> None:
    """One whitespace-separated line of sample indices per agent."""
    with open(path, "w") as fh:
        for idx in parts:
            fh.write(" ".join(str(int(i)) for i in idx) + "\n")


def load_partition(path) -> list[np.ndarray]:
    with open(path) as fh:
        return [np.array([int(t) for t in line.split()], dtype=int)
                for line in fh if line.strip()]


def gen_synthetic(n: int, n_samples: int, flip_noise: float, seed: int,
                  feature_scale: float = 1.0) -> Dataset:
    """Gaussian features with labels from a random hyperplane.

    Rows are drawn N(0, feature_scale^2/n * I) so a typical row norm is
    ``feature_scale``; labels are sign(a_j' w) for a random w, then flipped
    independently with probability ``flip_noise``.  flip_noise = 0 yields a
    linearly separable dataset (almost surely).
    """
    if n_samples < 2 or n < 1:
        raise ValueError("need n_samples >= 2 and n >= 1")
    rng = np.random.default_rng(seed)
    feats = rng.standard_normal((n_samples, n)) * (feature_scale / np.sqrt(n))
    w = rng.standard_normal(n)
    labels = np.where(feats @ w >= 0.0, 1.0, -1.0)
    if flip_noise > 0.0:
        flips = rng.random(n_samples) < flip_noise
        labels[flips] *= -1.0
    return Dataset(sp.csr_matrix(feats), labels)


# ---------------------------------------------------------------------------
# problem interface
# ---------------------------------------------------------------------------

class MinimaxProblem:
    """Capability contract shared by all problem instances.

    Subclasses set ``m``, ``n1``, ``n2``, the moduli ``smoothness`` (L),
    ``strong_concavity`` (mu) and ``dual_smoothness`` (L_y), and implement
    the evaluators below.  The optional closed-form oracles return None when
    unavailable, in which case the iterative subsolver is used.
    """

    m: int
    n1: int
    n2: int
    smoothness: float
    strong_concavity: float
    dual_smoothness: float
    h_kind: str = "zero"  # "simplex" | "quadratic" | "zero"

    @property
    def kappa(self) -> float:
        return self.smoothness / self.strong_concavity

    @property
    def kappa_y(self) -> float:
        return self.dual_smoothness / self.strong_concavity

    def value(self, i: int, x: np.ndarray, y: np.ndarray) -> float:
        raise NotImplementedError

    def grad_x(self, i: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_y(self, i: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def prox_g(self, z: np.ndarray, eta: float) -> np.ndarray:
        return z  # g = 0 unless overridden

    def prox_h(self, z: np.ndarray, eta: float) -> np.ndarray:
        return z  # h = 0 unless overridden

    def initial_dual(self) -> np.ndarray:
        return np.zeros(self.n2)

    def exact_dual(self, i: int, x: np.ndarray, lam_tilde: np.ndarray):
        """Maximizer of f_i(x, .) - h - (L sqrt(m)/2) <lam_tilde, .>, or None."""
        return None

    def pooled_dual(self, x: np.ndarray):
        """Maximizer of (1/m) sum_i f_i(x, .) - h, or None if unavailable."""
        return None


class DrlrInstance(MinimaxProblem):
    """Distributionally robust logistic regression over a sample partition."""

    h_kind = "simplex"

    def __init__(self, dataset: Dataset, partitions, alpha: float,
                 beta_x: float, beta_y: float, l_radius: float = 10.0,
                 smoothness: float | None = None):
        if beta_y <= 0.0:
            raise ValueError("beta_y must be positive")
        if beta_x < 0.0:
            raise ValueError("beta_x must be nonnegative")
        cover = np.sort(np.concatenate(partitions))
        if not np.array_equal(cover, np.arange(dataset.sample_count)):
            raise ValueError("partitions must disjointly cover all samples")
        self.dataset = dataset
        self.partitions = [np.asarray(p, dtype=int) for p in partitions]
        self.alpha = float(alpha)
        self.beta_x = float(beta_x)
        self.beta_y = float(beta_y)
        self.l_radius = float(l_radius)
        self.m = len(partitions)
        self.n1 = dataset.feature_dim
        self.n2 = dataset.sample_count
        self.strong_concavity = self.beta_y
        self.dual_smoothness = self.beta_y
        self._uniform = np.full(self.n2, 1.0 / self.n2)
        self._blocks = [dataset.features[p] for p in self.partitions]
        self._block_labels = [dataset.labels[p] for p in self.partitions]
        self.smoothness = (float(smoothness) if smoothness is not None
                           else drlr_estimate_L(self, l_radius))
        if self.smoothness < self.dual_smoothness:
            raise ValueError("smoothness constant below the dual modulus")

    # -- pieces ------------------------------------------------------------

    def losses(self, x: np.ndarray, i: int | None = None) -> np.ndarray:
        """Per-sample logistic losses log(1 + exp(-b a'x)) (agent i or all)."""
        if i is None:
            margins = self.dataset.labels * (self.dataset.features @ x)
        else:
            margins = self._block_labels[i] * (self._blocks[i] @ x)
        return np.logaddexp(0.0, -margins)

    def _vx(self, x: np.ndarray) -> float:
        ax2 = self.alpha * x * x
        return self.beta_x * float(np.sum(ax2 / (1.0 + ax2)))

    def _grad_vx(self, x: np.ndarray) -> np.ndarray:
        denom = 1.0 + self.alpha * x * x
        return self.beta_x * 2.0 * self.alpha * x / (denom * denom)

    # -- problem contract ---------------------------------------------------

    def value(self, i, x, y):
        prox_term = 0.5 * self.beta_y * float(np.sum((y - self._uniform) ** 2))
        return (self.m * float(self.losses(x, i) @ y[self.partitions[i]])
                + self._vx(x) - prox_term)

    def grad_x(self, i, x, y):
        blk, lab = self._blocks[i], self._block_labels[i]
        sig = expit(-lab * (blk @ x))
        weights = -self.m * y[self.partitions[i]] * lab * sig
        return np.asarray(blk.T @ weights).ravel() + self._grad_vx(x)

    def grad_y(self, i, x, y):
        out = -self.beta_y * (y - self._uniform)
        out[self.partitions[i]] += self.m * self.losses(x, i)
        return out

    def prox_h(self, z, eta):
        return project_simplex(z)

    def initial_dual(self):
        return self._uniform.copy()

    def exact_dual(self, i, x, lam_tilde):
        """argmax of d_i: one simplex projection of 1/N + c/beta_y where
        c collects the agent's scaled losses and the multiplier term."""
        c = -(self.smoothness * np.sqrt(self.m) / 2.0) * lam_tilde
        c[self.partitions[i]] += self.m * self.losses(x, i)
        return project_simplex(self._uniform + c / self.beta_y)

    def pooled_dual(self, x):
        return project_simplex(self._uniform + self.losses(x) / self.beta_y)

    def pooled_objective(self, x: np.ndarray, y: np.ndarray) -> float:
        """(1/m) sum_i f_i(x, y) = sum_j y_j loss_j + V_x - V_y."""
        prox_term = 0.5 * self.beta_y * float(np.sum((y - self._uniform) ** 2))
        return float(self.losses(x) @ y) + self._vx(x) - prox_term

    def primal_value(self, x: np.ndarray) -> float:
        """p(x): pooled objective at its exact inner maximizer."""
        return self.pooled_objective(x, self.pooled_dual(x))

    def hessian_vec(self, i: int, x: np.ndarray, y: np.ndarray,
                    vx: np.ndarray, vy: np.ndarray):
        """Product of the full (x,y)-Hessian of f_i with (vx, vy)."""
        blk, lab = self._blocks[i], self._block_labels[i]
        part = self.partitions[i]
        margins = lab * (blk @ x)
        sig = expit(-margins)
        curv = sig * (1.0 - sig)
        av = np.asarray(blk @ vx).ravel()
        # xx block: m * sum_j y_j curv_j a_j a_j' + diag(V_x'')
        denom = 1.0 + self.alpha * x * x
        vxx_diag = (2.0 * self.alpha * self.beta_x
                    * (1.0 - 3.0 * self.alpha * x * x) / denom**3)
        hx = (np.asarray(blk.T @ (self.m * y[part] * curv * av)).ravel()
              + vxx_diag * vx)
        # xy block: columns m * grad loss_j = -m b_j sig_j a_j
        hx += np.asarray(blk.T @ (-self.m * lab * sig * vy[part])).ravel()
        hy = -self.beta_y * vy
        hy[part] += -self.m * lab * sig * av
        return hx, hy


def drlr_estimate_L(inst: DrlrInstance, radius: float | None = None,
                    hessian_samples: int = 6) -> float:
    """Smoothness constant for a DRLR instance.

    Analytic upper bound per agent,

        m * max_j ||a_j||^2 / 4 + 2 alpha beta_x
        + m * max_j ||a_j|| * (1 + max_j loss_bound_j),

    with loss_bound_j = log(1 + exp(||a_j|| * R)) evaluated over the x-ball
    of radius R (no clipping beyond overflow-safe evaluation), cross-checked
    by power iteration on the exact Hessian at sampled (x, y) points; the
    larger of the two estimates is returned.
    """
    r = inst.l_radius if radius is None else float(radius)
    analytic = 0.0
    for i, blk in enumerate(inst._blocks):
        if blk.shape[0] == 0:
            raise ValueError(f"agent {i} owns no samples")
        row_norms = np.sqrt(np.asarray(blk.multiply(blk).sum(axis=1)).ravel())
        top = float(row_norms.max())
        loss_bound = float(np.logaddexp(0.0, row_norms * r).max())
        analytic = max(
            analytic,
            inst.m * top**2 / 4.0
            + 2.0 * inst.alpha * inst.beta_x
            + inst.m * top * (1.0 + loss_bound),
        )

    rng = np.random.default_rng(0xD61D)
    sampled = 0.0
    for i in range(inst.m):
        for _ in range(hessian_samples):
            x = rng.standard_normal(inst.n1)
            x *= rng.random() * r / max(np.linalg.norm(x), 1e-30)
            y = project_simplex(rng.random(inst.n2))
            vx = rng.standard_normal(inst.n1)
            vy = rng.standard_normal(inst.n2)
            lam = 0.0
            for _ in range(60):
                # power iteration on H^2 so the indefinite block is handled
                hx, hy = inst.hessian_vec(i, x, y, vx, vy)
                hx, hy = inst.hessian_vec(i, x, y, hx, hy)
                norm = np.sqrt(np.linalg.norm(hx) ** 2 + np.linalg.norm(hy) ** 2)
                if norm == 0.0:
                    break
                lam_new = norm
                vx, vy = hx / norm, hy / norm
                if abs(lam_new - lam) <= 1e-9 * max(1.0, lam_new):
                    lam = lam_new
                    break
                lam = lam_new
            sampled = max(sampled, np.sqrt(lam))
    return max(analytic, sampled, inst.beta_y)


def verify_gradients(problem: MinimaxProblem, points, rel_tol: float = 1e-6,
                     step: float = 1e-6) -> float:
    """Worst relative gap between analytic gradients and central differences.

    ``points`` yields (i, x, y) triples; the value of f_i is probed
    coordinate-wise with symmetric steps.
    """
    worst = 0.0
    for i, x, y in points:
        gx = problem.grad_x(i, x, y)
        gy = problem.grad_y(i, x, y)
        fd_x = np.empty_like(gx)
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = step
            fd_x[k] = (problem.value(i, x + e, y)
                       - problem.value(i, x - e, y)) / (2.0 * step)
        fd_y = np.empty_like(gy)
        for k in range(y.size):
            e = np.zeros_like(y)
            e[k] = step
            fd_y[k] = (problem.value(i, x, y + e)
                       - problem.value(i, x, y - e)) / (2.0 * step)
        gap_x = np.linalg.norm(gx - fd_x) / (1.0 + np.linalg.norm(gx))
        gap_y = np.linalg.norm(gy - fd_y) / (1.0 + np.linalg.norm(gy))
        worst = max(worst, gap_x, gap_y)
    if worst > rel_tol:
        raise AssertionError(f"gradient check failed: {worst:.3e} > {rel_tol:.1e}")
    return worst


# ---------------------------------------------------------------------------
# scalar counterexample for the Minty variational-inequality condition
# ---------------------------------------------------------------------------

class ToyMintyInstance:
    """Fixed scalar instance f(x, y) = -x^2 y + y^2 / 2 on x in [-1, 1].

    Note the y-curvature of this function as printed is +1, i.e. it is
    convex (not concave) in y; y = x^2 is its stationary point in y.  The
    operator below is kept exactly as defined so the grid scan reproduces
    the documented failure of the Minty condition.
    """

    @staticmethod
    def fx(x: float, y: float) -> float:
        return -2.0 * x * y

    @staticmethod
    def fy(x: float, y: float) -> float:
        return -x * x + y


def minty_operator(x: float, y: float) -> tuple[float, float]:
    """(f_x, -f_y) = (-2xy, x^2 - y) for the scalar toy instance."""
    return -2.0 * x * y, x * x - y


def minty_condition_violated(grid_pts: int = 21,
                             x_range=(-1.0, 1.0), y_range=(-5.0, 5.0),
                             test_point=(1.0, -1000.0)) -> bool:
    """Certify that no grid candidate satisfies the Minty condition.

    For every candidate (xb, yb) on the grid, the inner product
    <operator(x, y), (x, y) - (xb, yb)> must be negative at the test point;
    returns True when that holds for all candidates.
    """
    tx, ty = test_point
    gx, gy = minty_operator(tx, ty)
    for xb in np.linspace(*x_range, grid_pts):
        for yb in np.linspace(*y_range, grid_pts):
            if gx * (tx - xb) + gy * (ty - yb) >= 0.0:
                return False
    return True
