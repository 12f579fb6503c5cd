"""Communication graphs and gossip mixing matrices.

A mixing matrix W must satisfy four conditions to drive consensus:

  (i)   w_ij = 0 whenever (i, j) is not an edge and i != j,
  (ii)  rho := ||W - (1/m) 1 1^T||_2 < 1,
  (iii) Null(W - I) = Span{1} and W^T 1 = 1,
  (iv)  ||W - I||_2 <= 2.

The shipped constructor is the Laplacian scheme W = I - scale * L / lmax(L),
which is symmetric and doubly stochastic by construction.  Asymmetric W
satisfying (iii) is accepted everywhere downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import SplitMix64

EXACT_TOL = 1e-12
NULLSPACE_TOL = 1e-10


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes 0..m-1."""

    node_count: int
    edges: frozenset = field(default_factory=frozenset)
    connected: bool = False

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.node_count, self.node_count))
        for i, j in self.edges:
            a[i, j] = 1.0
            a[j, i] = 1.0
        return a

    def laplacian(self) -> np.ndarray:
        a = self.adjacency()
        return np.diag(a.sum(axis=1)) - a


@dataclass(frozen=True)
class MixingMatrix:
    """Gossip weights with cached spectral quantities."""

    weights: np.ndarray
    rho: float
    op_norm_w_minus_i: float

    @property
    def m(self) -> int:
        return self.weights.shape[0]


def _normalize_edges(node_count: int, edges) -> frozenset:
    out = set()
    for i, j in edges:
        if i == j:
            raise GraphError(f"self-loop at node {i}")
        if not (0 <= i < node_count and 0 <= j < node_count):
            raise GraphError(f"edge ({i}, {j}) outside [0, {node_count})")
        out.add((min(i, j), max(i, j)))
    return frozenset(out)


def _is_connected(node_count: int, edges) -> bool:
    # breadth-first reachability from node 0
    if node_count <= 1:
        return True
    adj = [[] for _ in range(node_count)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * node_count
    seen[0] = True
    queue = [0]
    while queue:
        u = queue.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return all(seen)


def make_graph(node_count: int, edges) -> Graph:
    """Build a Graph, normalizing edges and computing connectivity."""
    if node_count < 1:
        raise GraphError("node_count must be >= 1")
    es = _normalize_edges(node_count, edges)
    return Graph(node_count, es, _is_connected(node_count, es))


def gen_erdos_renyi(m: int, p: float, seed: int, max_retries: int = 1000) -> Graph:
    """Sample a connected Erdos-Renyi graph G(m, p), retrying until connected.

    Each unordered pair (i < j), visited in row-major order, receives an edge
    when the next splitmix64 double is below p.  Rejected (disconnected)
    samples continue the same stream, so the result is a pure function of
    (m, p, seed).
    """
    if m < 1:
        raise GraphError("m must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise GraphError("edge probability must be in [0, 1]")
    if m == 1:
        return make_graph(1, [])
    stream = SplitMix64(seed)
    for _ in range(max_retries):
        edges = [
            (i, j)
            for i in range(m)
            for j in range(i + 1, m)
            if stream.next_double() < p
        ]
        g = make_graph(m, edges)
        if g.connected:
            return g
    raise GraphError(
        f"no connected sample in {max_retries} tries (m={m}, p={p}); "
        "increase the edge probability"
    )


def ring_graph(m: int) -> Graph:
    if m == 1:
        return make_graph(1, [])
    if m == 2:
        return make_graph(2, [(0, 1)])
    return make_graph(m, [(i, (i + 1) % m) for i in range(m)])


def complete_graph(m: int) -> Graph:
    return make_graph(m, [(i, j) for i in range(m) for j in range(i + 1, m)])


def _top_eigenvalue_psd(b: np.ndarray, tol: float, max_iters: int) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by block power iteration.

    A block of size 2 keeps convergence fast when the top eigenvalue is
    (near-)degenerate, which happens for symmetric graphs.
    """
    m = b.shape[0]
    if m == 1:
        return float(b[0, 0])
    k = min(2, m)
    # fixed seeded start so results are reproducible
    q = np.random.default_rng(0x5EED5EED).standard_normal((m, k))
    q, _ = np.linalg.qr(q)
    lam = 0.0
    for _ in range(max_iters):
        z = b @ q
        q, _ = np.linalg.qr(z)
        small = q.T @ (b @ q)
        lam_new = float(np.max(np.linalg.eigvalsh((small + small.T) / 2.0)))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


def spectral_radius_deviation(w: np.ndarray, tol: float = 1e-10,
                              max_iters: int = 10_000) -> float:
    """rho = ||W - (1/m) 1 1^T||_2, the consensus contraction factor.

    Computed as the square root of the top eigenvalue of A^T A with
    A = W - 1 1^T / m, by power iteration to relative tolerance ``tol``.
    """
    w = np.asarray(w, dtype=float)
    m = w.shape[0]
    if w.shape != (m, m):
        raise ValueError("W must be square")
    a = w - np.ones((m, m)) / m
    lam = _top_eigenvalue_psd(a.T @ a, tol * tol, max_iters)
    return float(np.sqrt(max(lam, 0.0)))


def operator_norm(a: np.ndarray, tol: float = 1e-12, max_iters: int = 10_000) -> float:
    """Spectral norm via power iteration on A^T A."""
    a = np.asarray(a, dtype=float)
    lam = _top_eigenvalue_psd(a.T @ a, tol, max_iters)
    return float(np.sqrt(max(lam, 0.0)))


def laplacian_mixing(g: Graph, scale: float = 0.8) -> MixingMatrix:
    """Mixing matrix W = I - scale * L / lmax(L) for a connected graph.

    lmax(L) is found by power iteration (tolerance 1e-12, at most 10000
    iterations).  The result is symmetric and doubly stochastic; rho < 1
    exactly when the graph is connected.
    """
    if not 0.0 < scale <= 1.0:
        raise GraphError("scale must be in (0, 1]")
    m = g.node_count
    if m == 1:
        return MixingMatrix(np.ones((1, 1)), 0.0, 0.0)
    if not g.connected:
        raise GraphError("graph must be connected for a valid mixing matrix")
    lap = g.laplacian()
    lam_max = _top_eigenvalue_psd(lap, 1e-12, 10_000)
    w = np.eye(m) - (scale / lam_max) * lap
    w = (w + w.T) / 2.0  # enforce exact symmetry
    rho = spectral_radius_deviation(w)
    return MixingMatrix(w, rho, operator_norm(w - np.eye(m)))


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            extra = f"  [{c.detail}]" if c.detail else ""
            lines.append(f"{status}  {c.name}  residual={c.residual:.3e}{extra}")
        return "\n".join(lines)


def validate_mixing(w, g: Graph) -> ValidationReport:
    """Check the four mixing-matrix conditions against a graph.

    Failures are reported, never raised.  The null-space condition is
    verified through the second-smallest singular value of W - I, which must
    exceed 1e-10 when Null(W - I) is exactly Span{1}.
    """
    mat = w.weights if isinstance(w, MixingMatrix) else np.asarray(w, dtype=float)
    m = g.node_count
    if mat.shape != (m, m):
        raise ValueError(f"matrix shape {mat.shape} does not match m={m}")

    checks = []

    edge_set = {(i, j) for i, j in g.edges} | {(j, i) for i, j in g.edges}
    offenders = [
        (i, j)
        for i in range(m)
        for j in range(m)
        if i != j and (i, j) not in edge_set and mat[i, j] != 0.0
    ]
    worst = max((abs(mat[i, j]) for i, j in offenders), default=0.0)
    checks.append(ConditionCheck(
        "sparsity matches graph", not offenders, worst,
        f"nonzero at non-edges {offenders[:5]}" if offenders else "",
    ))

    rho = spectral_radius_deviation(mat)
    checks.append(ConditionCheck("rho < 1", rho < 1.0, rho))

    row = float(np.max(np.abs(mat @ np.ones(m) - 1.0)))
    col = float(np.max(np.abs(mat.T @ np.ones(m) - 1.0)))
    stoch_res = max(row, col)
    stoch_ok = stoch_res <= EXACT_TOL
    if m == 1:
        null_ok, second_sv = True, float("inf")
    else:
        svals = np.linalg.svd(mat - np.eye(m), compute_uv=False)
        second_sv = float(np.sort(svals)[1])
        null_ok = second_sv > NULLSPACE_TOL
    checks.append(ConditionCheck(
        "Null(W - I) = Span{1}, W^T 1 = 1 and W 1 = 1",
        stoch_ok and null_ok,
        stoch_res if not stoch_ok else (0.0 if m == 1 else second_sv),
        "" if null_ok else "null space of W - I larger than Span{1}",
    ))

    opn = operator_norm(mat - np.eye(m))
    checks.append(ConditionCheck("||W - I||_2 <= 2", opn <= 2.0 + EXACT_TOL, opn))

    return ValidationReport(tuple(checks))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_mixing(mix: MixingMatrix, path) -> None:
    """Dense CSV, row-major, with a `# m=<m> rho=<rho>` header comment."""
    with open(path, "w") as fh:
        fh.write(f"# m={mix.m} rho={mix.rho!r}\n")
        for row in mix.weights:
            fh.write(",".join(repr(v) for v in row) + "\n")


def load_mixing(path) -> MixingMatrix:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# m="):
            raise GraphError(f"{path}: missing '# m=<m> rho=<rho>' header")
        fields = dict(tok.split("=", 1) for tok in header[2:].split())
        m = int(fields["m"])
        rho = float(fields["rho"])
        rows = [
            [float(tok) for tok in line.strip().split(",")]
            for line in fh
            if line.strip() and not line.startswith("#")
        ]
    w = np.array(rows)
    if w.shape != (m, m):
        raise GraphError(f"{path}: expected {m}x{m} matrix, got {w.shape}")
    return MixingMatrix(w, rho, operator_norm(w - np.eye(m)))


def save_graph(g: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# m={g.node_count} edges={len(g.edges)}\n")
        for i, j in sorted(g.edges):
            fh.write(f"{i},{j}\n")


def load_graph(path) -> Graph:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# m="):
            raise GraphError(f"{path}: missing '# m=<m>' header")
        fields = dict(tok.split("=", 1) for tok in header[2:].split())
        m = int(fields["m"])
        edges = []
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            i, j = line.split(",")
            edges.append((int(i), int(j)))
    return make_graph(m, edges)
