"""The k-clique removal process: step driver, stopping times and packing verification."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from math import comb
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cliques import (
    DEFAULT_INDEX_CAP,
    Clique,
    CliqueIndex,
    build_clique_index,
    count_cliques,
    y_edge,
    y_set,
)
from .graph import Edge, GraphState, as_generator, remove_edges
from .theory import TheoryParams, TrajectorySchedule, expected_y, nominal_schedule

DEFAULT_TRACKED_EDGES = 64


class ParanoidMismatch(AssertionError):
    """The incremental clique index disagrees with a from-scratch recount."""


@dataclass
class StepRecord:
    m: int
    e_m: int
    Q_m: int
    Y_min: int
    Y_max: int
    Y_sum: int
    removed: Clique | None = None
    destroyed: int = 0
    tracked: tuple[int, ...] = ()

    @property
    def Y_bar(self) -> float:
        return self.Y_sum / self.e_m if self.e_m else 0.0


@dataclass
class StoppingReport:
    m_star: int
    first_Q_plus: int | None
    first_Q_minus: int | None
    first_Y_plus: int | None
    first_Y_minus: int | None
    tau_Q_plus: int
    tau_Q_minus: int
    tau_Y_plus: int | None
    tau_Y_minus: int | None
    tau: int
    initial_checks_passed: bool | None
    first_violating_edge: Edge | None = None
    degenerate_horizon: bool = False
    steps_checked: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def tau_Q(self) -> int:
        return min(self.tau_Q_plus, self.tau_Q_minus)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tau_Q"] = self.tau_Q
        return d


@dataclass
class ProcessTrace:
    n: int
    k: int
    records: list[StepRecord]
    params: TheoryParams | None = None
    schedule: TrajectorySchedule | None = None
    tracked_edges: list[Edge] = field(default_factory=list)
    exhausted: bool = False
    stopping: StoppingReport | None = None

    @property
    def M(self) -> int:
        return len(self.records) - 1

    @property
    def e0(self) -> int:
        return self.records[0].e_m

    @property
    def Q0(self) -> int:
        return self.records[0].Q_m

    @property
    def steps(self) -> list[StepRecord]:
        return self.records[1:]

    @property
    def packing(self) -> list[Clique]:
        return [r.removed for r in self.records[1:]]

    def Q(self) -> np.ndarray:
        return np.array([r.Q_m for r in self.records], dtype=float)

    def step_dict(self, r: StepRecord) -> dict:
        s = self.schedule
        inside = s is not None and r.m <= s.m_max

        def sched(arr):
            if not inside:
                return None
            v = float(arr[r.m])
            return v if math.isfinite(v) else None

        return {
            "m": r.m,
            "e": r.e_m,
            "Q": r.Q_m,
            "Qtilde": sched(s.Qt) if s is not None else None,
            "gQ": sched(s.gQ) if s is not None else None,
            "Ymin": r.Y_min,
            "Ymax": r.Y_max,
            "Ybar": r.Y_bar,
            "Ytilde": sched(s.Yt) if s is not None else None,
            "gY": sched(s.gY) if s is not None else None,
            "destroyed": r.destroyed,
            "removed_vertices": list(r.removed) if r.removed is not None else None,
        }

    def to_jsonl(self) -> str:
        """One JSON line per executed step (the initial state is not a step)."""
        return "".join(json.dumps(self.step_dict(r)) + "\n" for r in self.steps)

    def write_jsonl(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    def summary(self) -> dict:
        return {
            "n": self.n, "k": self.k, "M": self.M, "e0": self.e0, "Q0": self.Q0,
            "exhausted": self.exhausted,
            "initial": self.step_dict(self.records[0]),
            "params": self.params.to_dict() if self.params else None,
            "stopping": self.stopping.to_dict() if self.stopping else None,
        }


def _y_stats(index: CliqueIndex, e_m: int) -> tuple[int, int, int]:
    sizes = [len(s) for s in index.edge_map.values()]
    total = sum(sizes)
    y_max = max(sizes, default=0)
    y_min = min(sizes, default=0) if len(sizes) == e_m else 0
    return y_min, y_max, total


def _tracked_values(g: GraphState, index: CliqueIndex, k: int, edges: Sequence[Edge]) -> tuple[int, ...]:
    out = []
    for e in edges:
        if g.has_edge(*e):
            out.append(index.y(e))
        else:
            out.append(y_edge(g, k, e))
    return tuple(out)


def _pick_tracked(n: int, count: int, rng: np.random.Generator) -> list[Edge]:
    total = comb(n, 2)
    if count <= 0 or total == 0:
        return []
    pairs = list(itertools.combinations(range(n), 2)) if total <= 200_000 else None
    chosen = sorted(rng.choice(total, size=min(count, total), replace=False).tolist())
    if pairs is not None:
        return [pairs[i] for i in chosen]
    iu, ju = np.triu_indices(n, 1)
    return [(int(iu[i]), int(ju[i])) for i in chosen]


def _paranoid_check(g: GraphState, index: CliqueIndex, k: int) -> None:
    q = count_cliques(g, k)
    if q != index.live_count:
        raise ParanoidMismatch(f"index Q={index.live_count} but recount gives {q}")
    for e in g.edges():
        y = y_edge(g, k, e)
        if y != index.y(e):
            raise ParanoidMismatch(f"edge {e}: index Y={index.y(e)} but recount gives {y}")


def destroyed_bounds(g: GraphState, index: CliqueIndex, k: int, clique: Clique,
                     triple_weight: int = 2) -> tuple[int, int]:
    """(sum Y_e - w sum Y_S, sum Y_e) over edges e and triples S of ``clique`` in the current graph.

    A clique meeting ``clique`` in j >= 2 vertices is destroyed once but appears
    C(j,2) times in the edge sum and C(j,3) times in the triple sum. Since
    C(j,2) - 2 C(j,3) <= 1 for every j >= 2, weight 2 gives a true lower bound;
    weight 1 does not (j = 3 contributes 3 - 1 = 2).
    """
    upper = sum(index.y(e) for e in itertools.combinations(clique, 2))
    triples = sum(y_set(g, k, s) for s in itertools.combinations(clique, 3))
    return upper - triple_weight * triples, upper


def run_removal_process(
    G0: GraphState,
    k: int,
    horizon: int | None = None,
    rng=None,
    observe_Y: bool = True,
    *,
    params: TheoryParams | None = None,
    paranoid: bool = False,
    check_sandwich: bool = False,
    tracked_edges: int = DEFAULT_TRACKED_EDGES,
    cap: int = DEFAULT_INDEX_CAP,
    seed_realized_Q0: bool = False,
    schedule_steps: int | None = None,
) -> ProcessTrace:
    """Remove uniformly random k-cliques from a copy of ``G0`` for up to ``horizon`` steps.

    ``horizon=None`` runs until no k-clique is left. When ``params`` is given a
    trajectory schedule is built from the realized initial edge count, with
    ``Qt(0) = E_p(n,k)`` (or the realized clique count if ``seed_realized_Q0``).
    ``paranoid`` recounts Q and every Y_e from scratch after each step.
    """
    if horizon is not None and horizon < 0:
        raise ValueError("horizon must be >= 0")
    if k < 2:
        raise ValueError("the removal process needs k >= 2")
    rng = as_generator(rng)
    g = G0.copy()
    index = build_clique_index(g, k, cap)
    ck = comb(k, 2)

    tracked: list[Edge] = []
    if observe_Y and tracked_edges:
        # spawned child stream: tracking never perturbs the clique draws
        tracked = _pick_tracked(g.n, tracked_edges, rng.spawn(1)[0])

    def observe(m: int, removed, destroyed) -> StepRecord:
        if observe_Y:
            y_min, y_max, y_sum = _y_stats(index, g.edge_count)
            tv = _tracked_values(g, index, k, tracked)
        else:
            y_min = y_max = 0
            y_sum = ck * index.live_count
            tv = ()
        return StepRecord(m, g.edge_count, index.live_count, y_min, y_max, y_sum, removed, destroyed, tv)

    records = [observe(0, None, 0)]
    if paranoid:
        _paranoid_check(g, index, k)
    m = 0
    while (horizon is None or m < horizon) and index.live_count > 0:
        cid = index.sample(rng)
        clique = index.cliques[cid]
        if check_sandwich:
            lo, hi = destroyed_bounds(g, index, k, clique)
        report = index.remove(cid)
        remove_edges(g, report.removed_edges, inplace=True)
        m += 1
        if check_sandwich and not lo <= report.destroyed <= hi:
            raise ParanoidMismatch(f"step {m}: destroyed={report.destroyed} outside [{lo}, {hi}]")
        records.append(observe(m, clique, report.destroyed))
        if paranoid:
            _paranoid_check(g, index, k)
            index.check_identity()

    schedule = None
    if params is not None:
        q0 = float(records[0].Q_m) if seed_realized_Q0 else None
        steps = max(m, params.m_star, schedule_steps or 0)
        schedule = nominal_schedule(params, steps, e0=float(records[0].e_m), Q0=q0)
    return ProcessTrace(
        n=G0.n, k=k, records=records, params=params, schedule=schedule,
        tracked_edges=tracked, exhausted=index.live_count == 0,
    )


def detect_stopping_times(
    trace: ProcessTrace,
    schedule: TrajectorySchedule | None = None,
    m_star: int | None = None,
    initial_checks_passed: bool | None = None,
) -> StoppingReport:
    """First band exits of Q and Y, each capped at ``m_star``.

    Y exits are detected from the per-step extremes over current edges and the
    tracked pairs. ``tau`` is 0 when ``initial_checks_passed`` is False.
    """
    schedule = schedule if schedule is not None else trace.schedule
    if schedule is None:
        raise ValueError("a trajectory schedule is required")
    if m_star is None:
        if trace.params is None:
            raise ValueError("m_star is required when the trace carries no parameters")
        m_star = trace.params.m_star
    if schedule.m_max < trace.M:
        raise ValueError(f"schedule covers m <= {schedule.m_max} but the trace has {trace.M} steps")

    q_plus = q_minus = y_plus = y_minus = None
    witness: Edge | None = None
    for r in trace.records:
        m = r.m
        qt, gq = schedule.Qt[m], schedule.gQ[m]
        if q_plus is None and r.Q_m > (1 + gq) * qt:
            q_plus = m
        if q_minus is None and r.Q_m < (1 - gq) * qt:
            q_minus = m
        yt, gy = schedule.Yt[m], schedule.gY[m]
        hi_val, lo_val = (1 + gy) * yt, (1 - gy) * yt
        values = list(r.tracked)
        if r.e_m > 0:
            values += [r.Y_min, r.Y_max]
        if y_plus is None and any(v > hi_val for v in values):
            y_plus = m
            witness = witness or _witness(trace, r, lambda v: v > hi_val)
        if y_minus is None and any(v < lo_val for v in values):
            y_minus = m
            witness = witness or _witness(trace, r, lambda v: v < lo_val)

    def cap(x: int | None) -> int:
        return m_star if x is None else min(x, m_star)

    y_observed = any(r.tracked or r.Y_max for r in trace.records)
    tau_q_plus, tau_q_minus = cap(q_plus), cap(q_minus)
    tau_y_plus = cap(y_plus) if y_observed else None
    tau_y_minus = cap(y_minus) if y_observed else None
    candidates = [tau_q_plus, tau_q_minus] + [t for t in (tau_y_plus, tau_y_minus) if t is not None]
    tau = 0 if initial_checks_passed is False else min(candidates)
    notes = []
    if m_star == 0:
        notes.append("m_star = 0: the trajectory guarantee is vacuous at these parameters")
    if trace.M > m_star:
        notes.append(f"steps {m_star}..{trace.M} lie beyond m_star and are outside the guarantee")
    if not y_observed:
        notes.append("Y not observed: Y stopping times unavailable")
    return StoppingReport(
        m_star=m_star,
        first_Q_plus=q_plus, first_Q_minus=q_minus, first_Y_plus=y_plus, first_Y_minus=y_minus,
        tau_Q_plus=tau_q_plus, tau_Q_minus=tau_q_minus,
        tau_Y_plus=tau_y_plus, tau_Y_minus=tau_y_minus, tau=tau,
        initial_checks_passed=initial_checks_passed,
        first_violating_edge=witness, degenerate_horizon=m_star == 0,
        steps_checked=len(trace.records), notes=notes,
    )


def _witness(trace: ProcessTrace, r: StepRecord, bad) -> Edge | None:
    for e, v in zip(trace.tracked_edges, r.tracked):
        if bad(v):
            return e
    return None


# ------------------------------------------------------------------ packings
@dataclass
class PackingReport:
    passed: bool
    checked: int
    reason: str | None = None
    clique_index: int | None = None
    witness: Edge | tuple[int, ...] | None = None
    other_index: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def verify_packing(G0: GraphState, packing: Iterable[Sequence[int]], k: int) -> PackingReport:
    """Check every clique has k distinct vertices, is complete in ``G0``, and no edge is reused."""
    owner: dict[Edge, int] = {}
    count = 0
    for i, clique in enumerate(packing):
        count += 1
        vs = tuple(sorted(clique))
        if len(vs) != k or len(set(vs)) != k:
            return PackingReport(False, count, "wrong clique size", i, vs)
        if vs[0] < 0 or vs[-1] >= G0.n:
            return PackingReport(False, count, "vertex out of range", i, vs)
        for e in itertools.combinations(vs, 2):
            if not G0.has_edge(*e):
                return PackingReport(False, count, "missing edge", i, e)
            if e in owner:
                return PackingReport(False, count, "shared edge", i, e, owner[e])
            owner[e] = i
    return PackingReport(True, count)


@dataclass
class PackingResult:
    k: int
    cliques: list[Clique]
    e0: int
    final_clique_count: int
    verification: PackingReport

    @property
    def M(self) -> int:
        return len(self.cliques)

    def to_dict(self) -> dict:
        return {
            "k": self.k, "M": self.M, "e0": self.e0,
            "final_clique_count": self.final_clique_count,
            "cliques": [list(c) for c in self.cliques],
            "verification": self.verification.to_dict(),
        }

    def to_lines(self) -> str:
        return "".join(" ".join(map(str, c)) + "\n" for c in self.cliques)


def run_to_exhaustion(G0: GraphState, k: int, rng=None, **kwargs) -> tuple[PackingResult, ProcessTrace]:
    """Run the process until no k-clique is left; verify the packing against a fresh recount."""
    trace = run_removal_process(G0, k, None, rng, **kwargs)
    packing = trace.packing
    final = remove_edges(G0, [e for c in packing for e in itertools.combinations(c, 2)])
    result = PackingResult(
        k=k, cliques=packing, e0=G0.edge_count,
        final_clique_count=count_cliques(final, k) if k <= G0.n else 0,
        verification=verify_packing(G0, packing, k),
    )
    return result, trace


def parse_packing(text: str, k: int | None = None) -> list[Clique]:
    """Parse lines of whitespace-separated vertex ids; errors carry 1-based line numbers."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            vs = tuple(int(x) for x in line.split())
        except ValueError:
            raise ValueError(f"line {lineno}: expected integers, got {line!r}") from None
        if k is not None and len(vs) != k:
            raise ValueError(f"line {lineno}: expected {k} vertices, got {len(vs)}")
        out.append(vs)
    return out


# ------------------------------------------------------------ initial checks
def initial_checks(
    G0: GraphState,
    k: int,
    params: TheoryParams | None,
    exponent_slack: float = 1.0,
    *,
    p: float | None = None,
    rng=None,
    edge_samples: int = 64,
    triple_samples: int = 64,
    index: CliqueIndex | None = None,
) -> dict:
    """Compare the initial graph with the four whp properties of G(n, p).

    (1) |e0 - p C(n,2)| <= n^{3/2}; (2) |Q/Qt(0) - 1| <= n^{-delta*slack};
    (3) sampled edges have |Y_e/Yt(0) - 1| <= n^{-delta*slack};
    (4) sampled triples have Y_S <= n^{delta*slack} max(1, E Y_S).
    At p in {0, 1} items 1-3 are degenerate and skipped.
    """
    n = G0.n
    p = params.p if params is not None else p
    if p is None:
        raise ValueError("need params or p")
    rng = as_generator(rng)
    report: dict = {"n": n, "k": k, "p": p, "exponent_slack": exponent_slack, "items": {}}
    items = report["items"]
    degenerate = p <= 0 or p >= 1
    e0 = G0.edge_count

    if degenerate:
        for name in ("edges", "Q", "Y_edges"):
            items[name] = {"skipped": True, "reason": "p in {0, 1}: no randomness to check"}
        delta = params.delta if params is not None else 0.0
    else:
        delta = params.delta if params is not None else TheoryParams.from_npk(n, p, k).delta
        dev = abs(e0 - p * comb(n, 2))
        items["edges"] = {"deviation": dev, "bound": n**1.5, "passed": dev <= n**1.5}
        if index is None:
            q = count_cliques(G0, k)
        else:
            q = index.live_count
        qt0 = math.exp(expected_y(n, k, p, 0))
        band = n ** (-delta * exponent_slack)
        rel = abs(q / qt0 - 1)
        items["Q"] = {"Q0": q, "Qtilde0": qt0, "relative_deviation": rel, "band": band, "passed": rel <= band}
        yt0 = comb(k, 2) * qt0 / e0 if e0 else math.nan
        worst = 0.0
        total = comb(n, 2)
        picks = rng.choice(total, size=min(edge_samples, total), replace=False)
        iu, ju = np.triu_indices(n, 1)
        for i in sorted(picks.tolist()):
            e = (int(iu[i]), int(ju[i]))
            y = y_edge(G0, k, e)
            worst = max(worst, abs(y / yt0 - 1))
        items["Y_edges"] = {"sampled": int(len(picks)), "Ytilde0": yt0, "max_relative_deviation": worst,
                            "band": band, "passed": worst <= band}

    mean_ys = math.exp(expected_y(n, k, p, 3)) if k >= 3 and p > 0 else 0.0
    limit = n ** (max(delta, 0.0) * exponent_slack) * max(1.0, mean_ys)
    worst_ys = 0
    if n >= 3 and k >= 3:
        for _ in range(triple_samples):
            s = tuple(sorted(rng.choice(n, size=3, replace=False).tolist()))
            worst_ys = max(worst_ys, y_set(G0, k, s))
    items["Y_triples"] = {"sampled": triple_samples, "max_Y_S": worst_ys, "expected_Y_S": mean_ys,
                          "bound": limit, "passed": worst_ys <= limit}
    checked = [v["passed"] for v in items.values() if not v.get("skipped")]
    report["passed"] = all(checked)
    return report
