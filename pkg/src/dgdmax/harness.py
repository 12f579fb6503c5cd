"""Experiment configuration, orchestration, and trace persistence.

Config files are flat ``key = value`` text with dotted section prefixes and
``#`` comments, e.g.::

    seed = 7
    problem.kind = synthetic
    problem.samples = 200
    problem.beta_y = 0.1
    graph.kind = ring
    algorithm.kind = dgdmax
    algorithm.t_max = 5000
    output.trace = run.csv

Traces are CSV with one row per executed round (the row labeled t describes
the state after t rounds) plus ``#``-prefixed header comments carrying the
fully resolved configuration, derived constants, and a config hash.  All
randomness flows from the single ``seed`` through named sub-seeds (graph,
partition, data, init), so overriding one block's seed leaves the other
blocks' draws unchanged.
"""

from __future__ import annotations

import hashlib
import itertools
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics, optimizers
from .graphs import (MixingMatrix, complete_graph, gen_erdos_renyi,
                     laplacian_mixing, load_mixing, ring_graph)
from .optimizers import (DivergenceError, Schedule, SubsolverBudgetError,
                         default_delta, default_stepsizes)
from .problems import (Dataset, DrlrInstance, gen_synthetic, load_partition,
                       parse_libsvm, partition_dataset)
from .rng import substream

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_BUDGET = 4


class ConfigError(ValueError):
    pass


# key -> (type, default); None default means "unset"
_SCHEMA = {
    "seed": (int, 0),
    "problem.kind": (str, "synthetic"),
    "problem.path": (str, None),
    "problem.zero_one_labels": (bool, False),
    "problem.n": (int, 20),
    "problem.samples": (int, 200),
    "problem.feature_scale": (float, 1.0),
    "problem.flip_noise": (float, 0.1),
    "problem.alpha": (float, 10.0),
    "problem.beta_x": (float, 1e-3),
    "problem.beta_y": (float, 0.1),
    "problem.agents": (int, 1),
    "problem.partition_seed": (int, None),
    "problem.partition_file": (str, None),
    "problem.l_radius": (float, 10.0),
    "problem.x0": (str, "zeros"),
    "graph.kind": (str, "ring"),
    "graph.edge_prob": (float, 0.3),
    "graph.seed": (int, None),
    "graph.scale": (float, 0.8),
    "graph.matrix_file": (str, None),
    "algorithm.kind": (str, "dgdmax"),
    "algorithm.eta_x": ("stepsize", "paper-default"),
    "algorithm.eta_lambda": ("stepsize", "paper-default"),
    "algorithm.eta_y": (float, 0.1),
    "algorithm.delta": ("stepsize", "paper-default"),
    "algorithm.t_max": (int, 1000),
    "algorithm.target_eps": (float, None),
    "algorithm.max_subsolver_iters": (int, 100_000),
    "output.trace": (str, "trace.csv"),
    "output.flush_every": (int, 100),
}


def _coerce(key: str, raw: str):
    kind, _ = _SCHEMA[key]
    raw = raw.strip()
    try:
        if kind is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind == "stepsize":
            return raw if raw == "paper-default" else float(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}")


@dataclass
class RunConfig:
    """Validated flat configuration with schema defaults applied."""

    values: dict = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        values = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = _coerce(key, raw)
        return cls(values)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def get(self, key: str):
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        return self.values.get(key, _SCHEMA[key][1])

    def override(self, **pairs) -> "RunConfig":
        vals = dict(self.values)
        vals.update(pairs)
        return RunConfig(vals)

    def validate(self) -> None:
        kind = self.get("problem.kind")
        if kind not in ("synthetic", "libsvm"):
            raise ConfigError(f"problem.kind must be synthetic|libsvm, got {kind!r}")
        if kind == "libsvm" and not self.get("problem.path"):
            raise ConfigError("problem.kind=libsvm requires problem.path")
        if kind == "synthetic" and self.get("problem.path"):
            raise ConfigError("exactly one problem source: drop problem.path "
                              "or set problem.kind=libsvm")
        if self.get("problem.beta_y") <= 0.0:
            raise ConfigError("problem.beta_y must be positive")
        if self.get("algorithm.t_max") < 1:
            raise ConfigError("algorithm.t_max must be >= 1")
        if self.get("algorithm.kind") not in ("dgdmax", "gdmax", "gda"):
            raise ConfigError("algorithm.kind must be dgdmax|gdmax|gda")
        if self.get("algorithm.kind") in ("gdmax", "gda") and \
                self.get("problem.agents") != 1:
            raise ConfigError("centralized baselines require problem.agents = 1")
        if self.get("graph.kind") not in ("ring", "complete", "erdos", "file"):
            raise ConfigError("graph.kind must be ring|complete|erdos|file")
        if self.get("graph.kind") == "file" and not self.get("graph.matrix_file"):
            raise ConfigError("graph.kind=file requires graph.matrix_file")
        if self.get("problem.x0") not in ("zeros", "gauss"):
            raise ConfigError("problem.x0 must be zeros|gauss")


@dataclass
class Experiment:
    """Everything resolved from a config: problem, network, schedule."""

    config: RunConfig
    problem: DrlrInstance
    mix: MixingMatrix
    schedule: Schedule
    x0: np.ndarray
    resolved: dict


def resolve_experiment(cfg: RunConfig) -> Experiment:
    cfg.validate()
    seed = cfg.get("seed")
    sub = lambda tag: substream(seed, tag).next_u64()

    data_seed = sub("data")
    partition_seed = cfg.get("problem.partition_seed")
    if partition_seed is None:
        partition_seed = sub("partition")
    graph_seed = cfg.get("graph.seed")
    if graph_seed is None:
        graph_seed = sub("graph")
    init_seed = sub("init")

    if cfg.get("problem.kind") == "synthetic":
        dataset = gen_synthetic(
            cfg.get("problem.n"), cfg.get("problem.samples"),
            cfg.get("problem.flip_noise"), data_seed,
            cfg.get("problem.feature_scale"))
    else:
        with open(cfg.get("problem.path")) as fh:
            dataset = parse_libsvm(fh, cfg.get("problem.zero_one_labels"))

    m = cfg.get("problem.agents")
    if cfg.get("problem.partition_file"):
        partitions = load_partition(cfg.get("problem.partition_file"))
        if len(partitions) != m:
            raise ConfigError("partition file does not match problem.agents")
    else:
        partitions = partition_dataset(dataset, m, partition_seed)

    problem = DrlrInstance(
        dataset, partitions, cfg.get("problem.alpha"),
        cfg.get("problem.beta_x"), cfg.get("problem.beta_y"),
        cfg.get("problem.l_radius"))

    gkind = cfg.get("graph.kind")
    if gkind == "file":
        mix = load_mixing(cfg.get("graph.matrix_file"))
        if mix.m != m:
            raise ConfigError("mixing matrix size does not match problem.agents")
    else:
        if gkind == "ring":
            graph = ring_graph(m)
        elif gkind == "complete":
            graph = complete_graph(m)
        else:
            graph = gen_erdos_renyi(m, cfg.get("graph.edge_prob"), graph_seed)
        mix = laplacian_mixing(graph, cfg.get("graph.scale"))

    l_smooth, kappa, rho = problem.smoothness, problem.kappa, mix.rho
    eta_x = cfg.get("algorithm.eta_x")
    eta_lam = cfg.get("algorithm.eta_lambda")
    default_x, default_lam = default_stepsizes(l_smooth, kappa, rho)
    eta_x = default_x if eta_x == "paper-default" else float(eta_x)
    eta_lam = default_lam if eta_lam == "paper-default" else float(eta_lam)
    delta_cfg = cfg.get("algorithm.delta")
    if delta_cfg == "paper-default":
        delta_fn = lambda t: default_delta(t, rho, kappa)
    else:
        delta_fn = lambda t: float(delta_cfg)
    schedule = Schedule(eta_x, eta_lam, delta_fn)

    if cfg.get("problem.x0") == "zeros":
        x0 = np.zeros(problem.n1)
    else:
        x0 = np.random.default_rng(init_seed).standard_normal(problem.n1)

    resolved = {key: cfg.get(key) for key in _SCHEMA}
    resolved.update({
        "derived.data_seed": data_seed,
        "derived.partition_seed": partition_seed,
        "derived.graph_seed": graph_seed,
        "derived.init_seed": init_seed,
        "derived.L": l_smooth,
        "derived.mu": problem.strong_concavity,
        "derived.kappa": kappa,
        "derived.kappa_y": problem.kappa_y,
        "derived.rho": rho,
        "derived.eta_x": eta_x,
        "derived.eta_lambda": eta_lam,
        "derived.n1": problem.n1,
        "derived.n2": problem.n2,
    })
    return Experiment(cfg, problem, mix, schedule, x0, resolved)


# ---------------------------------------------------------------------------
# trace CSV
# ---------------------------------------------------------------------------

def config_hash(resolved: dict) -> str:
    text = "\n".join(f"{k}={resolved[k]!r}" for k in sorted(resolved))
    return hashlib.sha256(text.encode()).hexdigest()


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


class TraceWriter:
    """Incremental CSV writer; flushes every ``flush_every`` rows."""

    def __init__(self, path, resolved: dict, flush_every: int = 100):
        self.path = path
        self.flush_every = flush_every
        self._fh = open(path, "w")
        for key in sorted(resolved):
            self._fh.write(f"# cfg {key}={resolved[key]!r}\n")
        self._fh.write(f"# config_hash={config_hash(resolved)}\n")
        self._fh.write(",".join(metrics.TRACE_COLUMNS + ("wall_ms",)) + "\n")
        self._count = 0

    def write_row(self, row: dict, wall_ms: float) -> None:
        vals = [_fmt(row[c]) for c in metrics.TRACE_COLUMNS] + [repr(wall_ms)]
        self._fh.write(",".join(vals) + "\n")
        self._count += 1
        if self._count % self.flush_every == 0:
            self._fh.flush()

    def finish(self, status: str) -> None:
        self._fh.write(f"# status={status}\n")
        self._fh.close()


@dataclass
class TraceData:
    config: dict
    config_hash: str
    rows: list
    status: str


_INT_COLUMNS = {"t", "lambda_grad_is_surrogate", "subsolver_iters"}


def parse_trace(path) -> TraceData:
    config, rows, status, stored_hash = {}, [], "", ""
    header = None
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# cfg "):
                key, val = line[len("# cfg "):].split("=", 1)
                config[key] = val
            elif line.startswith("# config_hash="):
                stored_hash = line.split("=", 1)[1]
            elif line.startswith("# status="):
                status = line.split("=", 1)[1]
            elif line.startswith("#") or not line.strip():
                continue
            elif header is None:
                header = line.split(",")
            else:
                parts = line.split(",")
                row = {}
                for col, tok in zip(header, parts):
                    row[col] = int(tok) if col in _INT_COLUMNS else float(tok)
                rows.append(row)
    return TraceData(config, stored_hash, rows, status)


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    exit_code: int
    status: str
    trace_path: str
    rows: list
    resolved: dict


def _nan_row(t: int) -> dict:
    row = {c: float("nan") for c in metrics.TRACE_COLUMNS}
    row.update({"t": t, "lambda_grad_is_surrogate": 0, "subsolver_iters": 0,
                "delta_t": 0.0})
    return row


def run_experiment(cfg: RunConfig, trace_path=None) -> RunResult:
    """Build the experiment from a config and run it to completion.

    Returns exit code 0 on success (round budget or stationarity target
    reached), 3 on divergence, 4 on subsolver budget exhaustion; the trace
    is written in all three cases.  Config errors raise before any output.
    """
    exp = resolve_experiment(cfg)
    path = trace_path or cfg.get("output.trace")
    writer = TraceWriter(path, exp.resolved, cfg.get("output.flush_every"))
    algo = cfg.get("algorithm.kind")
    t_max = cfg.get("algorithm.t_max")
    target = cfg.get("algorithm.target_eps")
    max_sub = cfg.get("algorithm.max_subsolver_iters")
    rows = []
    status, code = "ok", EXIT_OK
    clock = time.perf_counter
    try:
        if algo == "dgdmax":
            state, _ = optimizers.dgdmax_init(
                exp.problem, exp.mix, exp.x0, exp.schedule, max_sub)
            grads = None
            for _ in range(t_max):
                start = clock()
                state, info, grads = optimizers.dgdmax_step(
                    state, exp.problem, exp.mix, exp.schedule, max_sub, grads)
                report = metrics.stationarity_report(
                    exp.problem, exp.mix, state, exp.schedule.eta_x)
                row = metrics.report_row(report, state.t,
                                         info.subsolver_iters, info.delta_used)
                rows.append(row)
                writer.write_row(row, (clock() - start) * 1e3)
                if target is not None and max(
                        report.prox_grad_P, report.consensus_x,
                        report.lambda_grad) < target:
                    status = "target-reached"
                    break
        elif algo == "gdmax":
            x = exp.x0
            warm = exp.problem.initial_dual()
            for t in range(1, t_max + 1):
                start = clock()
                x, warm, iters = optimizers.gdmax_step(
                    exp.problem, x, exp.schedule.eta_x,
                    exp.schedule.delta_fn(t - 1), t, max_sub, warm)
                norm_p = metrics.prox_grad_original(exp.problem, x,
                                                    exp.schedule.eta_x)
                row = metrics.centralized_row(
                    t, norm_p, iters, 0.0 if iters == 0 else
                    exp.schedule.delta_fn(t - 1))
                rows.append(row)
                writer.write_row(row, (clock() - start) * 1e3)
                if target is not None and norm_p <= target:
                    status = "target-reached"
                    break
        else:  # gda
            state = optimizers.GdaState(
                exp.x0, exp.problem.initial_dual(), exp.schedule.eta_x,
                cfg.get("algorithm.eta_y"))
            for t in range(1, t_max + 1):
                start = clock()
                state = optimizers.gda_step(exp.problem, state, t)
                norm_p = metrics.prox_grad_original(exp.problem, state.x,
                                                    state.eta_x)
                row = metrics.centralized_row(t, norm_p, 0, 0.0)
                rows.append(row)
                writer.write_row(row, (clock() - start) * 1e3)
                if target is not None and norm_p <= target:
                    status = "target-reached"
                    break
    except DivergenceError as err:
        row = _nan_row(err.round_index)
        rows.append(row)
        writer.write_row(row, 0.0)
        status, code = f"diverged t={err.round_index}", EXIT_DIVERGED
    except SubsolverBudgetError as err:
        status, code = (f"subsolver-budget t={err.round_index} "
                        f"agent={err.agent}"), EXIT_BUDGET
    writer.finish(status)
    return RunResult(code, status, str(path), rows, exp.resolved)


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------

_GRID_KEYS = {"eta_x": "algorithm.eta_x", "eta_lambda": "algorithm.eta_lambda",
              "eta_y": "algorithm.eta_y"}


def parse_grid_spec(spec: str) -> dict:
    """Parse 'eta_x=0.5,0.1;eta_y=0.5' into an ordered grid mapping."""
    grid = {}
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ConfigError(f"bad grid chunk {chunk!r}")
        key, vals = chunk.split("=", 1)
        key = key.strip()
        if key not in _GRID_KEYS:
            raise ConfigError(f"grid key must be one of {sorted(_GRID_KEYS)}")
        grid[key] = [float(v) for v in vals.split(",") if v.strip()]
        if not grid[key]:
            raise ConfigError(f"empty grid for {key}")
    if not grid:
        raise ConfigError("empty grid spec")
    return grid


def grid_search(base: RunConfig, grid: dict, out_dir=".") -> list[dict]:
    """Run every grid cell and rank by final prox-gradient norm.

    Cells run sequentially in grid order; a diverged or budget-exhausted
    cell is flagged and ranked last, never aborting the sweep.  Returns the
    summary rows (one per cell, ``best`` marking the winner) and writes
    ``grid_summary.csv`` plus per-cell traces under ``out_dir``.
    """
    keys = sorted(grid)
    cells = list(itertools.product(*(grid[k] for k in keys)))
    summary = []
    for index, cell in enumerate(cells):
        overrides = {_GRID_KEYS[k]: v for k, v in zip(keys, cell)}
        cfg = base.override(**overrides)
        trace_path = os.path.join(out_dir, f"grid_cell_{index:03d}.csv")
        try:
            result = run_experiment(cfg, trace_path)
        except ConfigError:
            raise
        final = float("inf")
        if result.exit_code == EXIT_OK and result.rows:
            last = result.rows[-1]
            final = last["prox_grad_p"]
            if not np.isfinite(final):
                final = last["prox_grad_P"]
        entry = {"cell": index, "status": result.status,
                 "rounds": len(result.rows), "final_prox_grad": final,
                 "trace": trace_path}
        entry.update({k: v for k, v in zip(keys, cell)})
        summary.append(entry)
    order = sorted(range(len(summary)),
                   key=lambda i: (not np.isfinite(summary[i]["final_prox_grad"]),
                                  summary[i]["final_prox_grad"], i))
    for rank, i in enumerate(order):
        summary[i]["rank"] = rank
        summary[i]["best"] = int(rank == 0)
    out_path = os.path.join(out_dir, "grid_summary.csv")
    cols = ["cell"] + keys + ["status", "rounds", "final_prox_grad", "rank",
                              "best", "trace"]
    with open(out_path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for entry in summary:
            fh.write(",".join(_fmt(entry[c]) for c in cols) + "\n")
    return summary
