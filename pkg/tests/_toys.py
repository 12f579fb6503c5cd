"""Quadratic saddle test problems with closed-form inner maximizers."""

import numpy as np

from dgdmax.problems import MinimaxProblem


class QuadraticSaddle(MinimaxProblem):
    """f_i(x, y) = 0.5 x'Q_i x + x'B_i y - 0.5 y'D_i y + c_i'y with g = h = 0.

    Each D_i is positive definite, so the dual is strongly concave with
    mu = min eig and L_y = max eig; setting ``with_oracle=False`` hides the
    closed form to exercise the iterative subsolver path.
    """

    h_kind = "zero"

    def __init__(self, qs, bs, ds, cs, with_oracle=True):
        self.qs = [np.asarray(q, dtype=float) for q in qs]
        self.bs = [np.asarray(b, dtype=float) for b in bs]
        self.ds = [np.asarray(dd, dtype=float) for dd in ds]
        self.cs = [np.asarray(c, dtype=float) for c in cs]
        self.m = len(qs)
        self.n1 = self.qs[0].shape[0]
        self.n2 = self.ds[0].shape[0]
        self.with_oracle = with_oracle
        eigs = np.concatenate([np.linalg.eigvalsh(dd) for dd in self.ds])
        self.strong_concavity = float(eigs.min())
        self.dual_smoothness = float(eigs.max())
        hess_norms = []
        for q, b, dd in zip(self.qs, self.bs, self.ds):
            h = np.block([[q, b], [b.T, -dd]])
            hess_norms.append(np.linalg.norm(h, 2))
        self.smoothness = float(max(max(hess_norms), self.dual_smoothness))

    @classmethod
    def random(cls, m, n1, n2, mu, l_y, seed, with_oracle=True):
        rng = np.random.default_rng(seed)
        qs, bs, ds, cs = [], [], [], []
        for _ in range(m):
            a = rng.standard_normal((n1, n1))
            qs.append((a + a.T) / 2.0)
            bs.append(rng.standard_normal((n1, n2)))
            u, _ = np.linalg.qr(rng.standard_normal((n2, n2)))
            spectrum = np.linspace(mu, l_y, n2)
            ds.append(u @ np.diag(spectrum) @ u.T)
            cs.append(rng.standard_normal(n2))
        return cls(qs, bs, ds, cs, with_oracle)

    def value(self, i, x, y):
        return float(0.5 * x @ self.qs[i] @ x + x @ self.bs[i] @ y
                     - 0.5 * y @ self.ds[i] @ y + self.cs[i] @ y)

    def grad_x(self, i, x, y):
        return self.qs[i] @ x + self.bs[i] @ y

    def grad_y(self, i, x, y):
        return self.bs[i].T @ x - self.ds[i] @ y + self.cs[i]

    def exact_dual(self, i, x, lam_tilde):
        if not self.with_oracle:
            return None
        rhs = (self.bs[i].T @ x + self.cs[i]
               - 0.5 * self.smoothness * np.sqrt(self.m) * lam_tilde)
        return np.linalg.solve(self.ds[i], rhs)

    def pooled_dual(self, x):
        d_bar = sum(self.ds) / self.m
        rhs = sum(b.T @ x + c for b, c in zip(self.bs, self.cs)) / self.m
        return np.linalg.solve(d_bar, rhs)
