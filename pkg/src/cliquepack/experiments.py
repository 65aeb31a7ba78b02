"""Seeded replication, zeta Monte Carlo and trajectory-adherence statistics."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from math import comb, log
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .cliques import DEFAULT_INDEX_CAP, CapacityError
from .graph import Seed, as_generator, sample_gnp
from .process import (
    DEFAULT_TRACKED_EDGES,
    ProcessTrace,
    detect_stopping_times,
    initial_checks,
    run_removal_process,
    verify_packing,
)
from .theory import (
    TOLERANCES,
    TheoryParams,
    TrajectorySchedule,
    find_k0,
    theorem_lower_bound,
)

logger = logging.getLogger(__name__)

HORIZON_POLICIES = ("m_star", "exhaustion")


class ConfigError(ValueError):
    """Invalid experiment or CLI configuration."""


@dataclass
class ExperimentConfig:
    n: int
    p: float
    k: int | None = None
    C: int | None = None
    replicas: int = 1
    master_seed: int = 0
    horizon: str | int = "exhaustion"
    adherence_threshold: float = TOLERANCES.adherence_threshold
    init_exponent_slack: float = 1.0
    window_fraction: float = 0.5
    observe_Y: bool = True
    tracked_edges: int = DEFAULT_TRACKED_EDGES
    cap: int = DEFAULT_INDEX_CAP
    paranoid: bool = False
    jobs: int = 1
    out_dir: str | None = None
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if (self.k is None) == (self.C is None):
            raise ConfigError("supply exactly one of k or C")
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if not 0 < self.p < 1:
            raise ConfigError(f"p must lie in (0, 1), got {self.p}")
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master seed must be a 64-bit unsigned integer")
        if isinstance(self.horizon, str) and self.horizon not in HORIZON_POLICIES:
            raise ConfigError(f"horizon must be an integer or one of {HORIZON_POLICIES}")
        if not isinstance(self.horizon, str) and self.horizon < 0:
            raise ConfigError("horizon must be non-negative")
        if self.jobs < 1 or self.tracked_edges < 0 or self.cap < 1:
            raise ConfigError("jobs and cap must be >= 1 and tracked_edges >= 0")
        if not 0 <= self.window_fraction <= 1:
            raise ConfigError("window_fraction must lie in [0, 1]")
        if self.k is None:
            self.k = find_k0(self.n, self.p) - self.C
        if not 2 <= self.k <= self.n:
            raise ConfigError(f"resolved k={self.k} must satisfy 2 <= k <= n")
        if self.k < math.log(self.n) / math.log(1 / self.p):
            self.warnings.append("k < log_{1/p} n: outside the near-maximal regime")
        self.params = TheoryParams.from_npk(self.n, self.p, self.k)
        if self.params.gamma <= 2:
            self.warnings.append(f"gamma={self.params.gamma:.4f} <= 2: outside the trajectory regime")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out_dir")
        d.pop("jobs")
        return d

    def horizon_steps(self) -> int | None:
        if self.horizon == "exhaustion":
            return None
        if self.horizon == "m_star":
            return self.params.m_star
        return int(self.horizon)


# ------------------------------------------------------------------ adherence
def window_steps(e0: int, k: int, fraction: float = 0.5) -> int:
    """Steps needed to consume ``fraction`` of the initial edges."""
    return int(math.floor(fraction * e0)) // comb(k, 2)


def _trace_adherence(trace: ProcessTrace, schedule: TrajectorySchedule, window: int, m_star: int) -> dict:
    last = min(window, trace.M, schedule.m_max)
    dev_q = 0.0
    dev_q_bulk = 0.0
    dev_y = 0.0
    for r in trace.records[: last + 1]:
        qt = schedule.Qt[r.m]
        dev_q = max(dev_q, abs(r.Q_m / qt - 1))
        if qt >= trace.n:
            dev_q_bulk = max(dev_q_bulk, abs(r.Q_m / qt - 1))
        yt = schedule.Yt[r.m]
        if r.tracked and yt > 0:
            dev_y = max(dev_y, max(abs(v / yt - 1) for v in r.tracked))
    inside_q = inside_y = True
    for r in trace.records[: min(m_star, trace.M + 1, schedule.m_max + 1)]:
        qt, gq = schedule.Qt[r.m], schedule.gQ[r.m]
        if not (1 - gq) * qt <= r.Q_m <= (1 + gq) * qt:
            inside_q = False
        yt, gy = schedule.Yt[r.m], schedule.gY[r.m]
        if any(not (1 - gy) * yt <= v <= (1 + gy) * yt for v in r.tracked):
            inside_y = False
    return {"window": window, "steps_compared": last + 1 if trace.records else 0,
            "max_dev_Q": dev_q, "max_dev_Y": dev_y, "max_dev_Q_while_Qtilde_at_least_n": dev_q_bulk,
            "inside_Q_band_before_m_star": inside_q, "inside_Y_band_before_m_star": inside_y}


def adherence_stats(
    traces: Sequence[ProcessTrace],
    schedule: TrajectorySchedule | None = None,
    *,
    window: int | None = None,
    window_fraction: float = 0.5,
    m_star: int | None = None,
) -> dict:
    """Per-trace max relative deviation of Q from Qt (and tracked Y from Yt) over a step window.

    The window defaults to the steps consuming ``window_fraction`` of each trace's
    initial edges. ``schedule=None`` uses each trace's own schedule.
    """
    per = []
    for tr in traces:
        sched = schedule if schedule is not None else tr.schedule
        if sched is None:
            raise ValueError("trace has no schedule")
        if sched.k != tr.k or sched.n != tr.n:
            raise ValueError(f"schedule (n={sched.n}, k={sched.k}) does not match trace (n={tr.n}, k={tr.k})")
        w = window if window is not None else window_steps(tr.e0, tr.k, window_fraction)
        ms = m_star if m_star is not None else (tr.params.m_star if tr.params else 0)
        per.append(_trace_adherence(tr, sched, w, ms))
    devs = [d["max_dev_Q"] for d in per]
    return {
        "per_trace": per,
        "median_max_dev_Q": statistics.median(devs) if devs else 0.0,
        "fraction_inside_Q_band": sum(d["inside_Q_band_before_m_star"] for d in per) / len(per) if per else 1.0,
        "fraction_inside_Y_band": sum(d["inside_Y_band_before_m_star"] for d in per) / len(per) if per else 1.0,
    }


# ------------------------------------------------------------------- replicas
@dataclass
class ReplicaResult:
    replica: int
    seed: int
    M: int
    e0: int
    Q0: int
    exhausted: bool
    max_dev_Q: float
    max_dev_Y: float
    init_checks_passed: bool
    tau: int
    packing_valid: bool
    meets_theorem_bound: bool
    adherence: dict
    stopping: dict
    initial: dict
    trace_jsonl: str
    packing_lines: str
    graph_edgelist: str


def run_replica(config: ExperimentConfig, replica: int) -> ReplicaResult:
    seed = Seed(config.master_seed, replica)
    params = config.params
    k = config.k
    g0 = sample_gnp(config.n, config.p, seed)
    window = window_steps(g0.edge_count, k, config.window_fraction)
    trace = run_removal_process(
        g0, k, config.horizon_steps(), seed.child(0).generator(), config.observe_Y,
        params=params, tracked_edges=config.tracked_edges, cap=config.cap, paranoid=config.paranoid,
        schedule_steps=window,
    )
    init = initial_checks(g0, k, params, config.init_exponent_slack, rng=seed.child(1).generator())
    stopping = detect_stopping_times(trace, initial_checks_passed=init["passed"])
    trace.stopping = stopping
    adh = _trace_adherence(trace, trace.schedule, window, params.m_star)
    check = verify_packing(g0, trace.packing, k)
    lower = theorem_lower_bound(config.n, config.p, k)
    return ReplicaResult(
        replica=replica, seed=replica, M=trace.M, e0=trace.e0, Q0=trace.Q0,
        exhausted=trace.exhausted, max_dev_Q=adh["max_dev_Q"], max_dev_Y=adh["max_dev_Y"],
        init_checks_passed=init["passed"], tau=stopping.tau, packing_valid=check.passed,
        meets_theorem_bound=trace.M >= lower, adherence=adh, stopping=stopping.to_dict(),
        initial=init, trace_jsonl=trace.to_jsonl(),
        packing_lines="".join(" ".join(map(str, c)) + "\n" for c in trace.packing),
        graph_edgelist=g0.to_edgelist(),
    )


def _run_star(args):
    return run_replica(*args)


@dataclass
class AggregateReport:
    config: dict
    version: str
    params: dict
    replicas: list[dict]
    summary: dict
    failed: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replica", "seed", "M", "max_dev_Q", "max_dev_Y", "init_checks_passed"])
        for r in self.replicas:
            w.writerow([r["replica"], r["seed"], r["M"], repr(r["max_dev_Q"]), repr(r["max_dev_Y"]),
                        int(r["init_checks_passed"])])
        return buf.getvalue()


def replicate(config: ExperimentConfig, *, keep_traces: bool = False) -> AggregateReport:
    """Run ``config.replicas`` independent replicas; replica r uses ``Seed(master, r)``.

    Results are folded in replica order, so the report does not depend on ``jobs``.
    A capacity failure stops aggregation and is recorded in ``failed``.
    """
    ids = range(config.replicas)
    results: list[ReplicaResult] = []
    failed: list[dict] = []
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(run_replica, config, r) for r in ids]
            for r, fut in zip(ids, futures):
                try:
                    results.append(fut.result())
                except CapacityError as exc:
                    logger.warning("replica %d: %s", r, exc)
                    failed.append({"replica": r, "error": str(exc)})
    else:
        for r in ids:
            try:
                results.append(run_replica(config, r))
            except CapacityError as exc:
                logger.warning("replica %d: %s; stopping", r, exc)
                failed.append({"replica": r, "error": str(exc)})
                break

    rows = []
    for res in results:
        d = asdict(res)
        for key in ("trace_jsonl", "packing_lines", "graph_edgelist"):
            d.pop(key)
        rows.append(d)
    Ms = [r.M for r in results]
    devs = [r.max_dev_Q for r in results]
    p, n, k = config.p, config.n, config.k
    summary = {
        "M_values": Ms,
        "M_median": statistics.median(Ms) if Ms else None,
        "M_min": min(Ms, default=None),
        "M_max": max(Ms, default=None),
        "median_max_dev_Q": statistics.median(devs) if devs else None,
        "median_max_dev_Q_while_Qtilde_at_least_n": (
            statistics.median(r.adherence["max_dev_Q_while_Qtilde_at_least_n"] for r in results) if results else None),
        "adherence_threshold": config.adherence_threshold,
        "adherence_passed": bool(devs) and bool(statistics.median(devs) <= config.adherence_threshold),
        "init_checks_pass_count": sum(r.init_checks_passed for r in results),
        "packings_valid": all(r.packing_valid for r in results),
        "theorem_lower_bound": theorem_lower_bound(n, p, k),
        "theorem_bound_met": all(r.meets_theorem_bound for r in results),
        "partial": bool(failed),
    }
    report = AggregateReport(
        config=config.to_dict(), version=__version__, params=config.params.to_dict(),
        replicas=rows, summary=summary, failed=failed,
    )
    if config.out_dir:
        write_outputs(report, results, Path(config.out_dir))
    if keep_traces:
        report._results = results  # type: ignore[attr-defined]
    return report


def write_outputs(report: AggregateReport, results: Sequence[ReplicaResult], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    (out / "replicas.csv").write_text(report.to_csv())
    for sub in ("traces", "packings", "graphs"):
        (out / sub).mkdir(exist_ok=True)
    for res in results:
        name = f"replica_{res.replica:04d}"
        (out / "traces" / f"{name}.jsonl").write_text(res.trace_jsonl)
        (out / "packings" / f"{name}.txt").write_text(res.packing_lines)
        (out / "graphs" / f"{name}.edges").write_text(res.graph_edgelist)


# ------------------------------------------------------------------------ zeta
def zeta_monte_carlo(n: int, k: int, t: int, trials: int, seed=0, chunk: int = 8192) -> tuple[float, float]:
    """Estimate the probability that t independent uniform k-subsets of [n] are pairwise edge-disjoint.

    Two k-sets are edge-disjoint exactly when they share at most one vertex.
    Returns (proportion, binomial standard error).
    """
    if t < 1 or trials < 1:
        raise ValueError("t and trials must be >= 1")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if t == 1:
        return 1.0, 0.0
    rng = as_generator(seed)
    hits = 0
    done = 0
    off_diag = ~np.eye(t, dtype=bool)
    while done < trials:
        b = min(chunk, trials - done)
        keys = rng.random((b, t, n))
        members = np.argpartition(keys, k - 1, axis=2)[:, :, :k] if k < n else np.broadcast_to(
            np.arange(n), (b, t, n))
        inc = np.zeros((b, t, n), dtype=np.int16)
        np.put_along_axis(inc, members, 1, axis=2)
        overlap = np.einsum("bin,bjn->bij", inc, inc)
        ok = np.all((overlap <= 1) | ~off_diag, axis=(1, 2))
        hits += int(ok.sum())
        done += b
    est = hits / trials
    return est, math.sqrt(est * (1 - est) / trials)


def zeta_sweep(n: int, k: int, ts: Sequence[int], trials: int, seed=0, beta: float = 0.25) -> list[dict]:
    """Estimates for several t with the heuristic -beta t^2 k^4 / n^2 curve alongside."""
    rows = []
    for i, t in enumerate(ts):
        est, se = zeta_monte_carlo(n, k, t, trials, Seed(int(seed), i))
        rows.append({
            "t": t, "estimate": est, "stderr": se,
            "log_estimate": log(est) if est > 0 else None,
            "heuristic_log": -beta * t * t * k**4 / (n * n),
        })
    return rows
