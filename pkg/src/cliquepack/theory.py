"""Closed-form quantities for near-maximal clique packings in G(n, p).

Everything large is computed in the natural-log domain through ``lgamma``; logs
without an explicit base are natural throughout (see ``LOG_BASE``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import comb, lgamma, log
from typing import NamedTuple

import numpy as np

LOG_BASE = math.e
# Values above this are reported as infinite (used for t0 as p -> 1).
INFINITY_CAP = 1e300


@dataclass(frozen=True)
class Tolerances:
    """Named stand-ins for the o(1) / n^{o(1)} slack in asymptotic statements."""

    ratio_band: tuple[float, float] = (0.8, 1.2)
    ai_slack_exponent: float = 0.5
    adherence_threshold: float = 0.2
    log_compare: float = 1e-9


TOLERANCES = Tolerances()


class RegimeWarning(UserWarning):
    """Parameters fall outside the regime gamma > 2 where the asymptotic results apply."""


def _check_p_open(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")


_EXACT_BINOM_LIMIT = 256


def log_binom(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    if min(k, n - k) <= _EXACT_BINOM_LIMIT:
        # exact integer binomial: lgamma differences lose ~1e-9 at n ~ 1e6
        return math.log(comb(n, k))
    return lgamma(n + 1) - lgamma(k + 1) - lgamma(n - k + 1)


def log_expected_cliques(n: int, k: int, p: float) -> float:
    """ln of C(n,k) p^{C(k,2)}, the expected number of k-cliques in G(n,p)."""
    _check_p_open(p)
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    return log_binom(n, k) + comb(k, 2) * log(p)


def _log_expected_mp(n: int, k: int, p: float):
    import mpmath

    with mpmath.workdps(50):
        return mpmath.log(mpmath.binomial(n, k)) + comb(k, 2) * mpmath.log(mpmath.mpf(p))


def find_k0(n: int, p: float) -> int:
    """Least k whose expected clique count in G(n,p) is below 1."""
    if n < 2:
        raise ValueError("n must be >= 2")
    _check_p_open(p)

    def below_one(k: int) -> bool:
        val = log_expected_cliques(n, k, p)
        if abs(val) < 1e-6:
            return bool(_log_expected_mp(n, k, p) < 0)
        return val < 0

    k = 1
    while k <= n and not below_one(k):
        k += 1
    return k


class GammaDelta(NamedTuple):
    gamma: float
    delta: float
    below_two: bool


def gamma_delta(n: int, k: int, p: float) -> GammaDelta:
    """gamma = ln E_p(n,k) / ln n and delta = min(gamma - 2, 1) / 10.

    ``below_two`` flags gamma < 2, where delta is negative and the trajectory
    results say nothing.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    gamma = log_expected_cliques(n, k, p) / log(n)
    return GammaDelta(gamma, delta_from_gamma(gamma), gamma < 2)


def delta_from_gamma(gamma: float) -> float:
    return min(gamma - 2.0, 1.0) / 10.0


def m_star(n: int, p: float, k: int, delta: float) -> int:
    """Step horizon min{floor(delta p n^2 ln n / (4 k^4)), floor(p n^2 / (2 k^2))}."""
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    first = math.floor(delta * p * n * n * log(n) / (4 * k**4))
    second = math.floor(p * n * n / (2 * k * k))
    return int(min(first, second))


@dataclass(frozen=True)
class TheoryParams:
    n: int
    p: float
    k: int
    k0: int
    gamma: float
    delta: float
    m_star: int
    e0_nominal: float

    @classmethod
    def from_npk(cls, n: int, p: float, k: int) -> TheoryParams:
        gd = gamma_delta(n, k, p)
        if gd.below_two:
            warnings.warn(f"gamma={gd.gamma:.4f} < 2: outside the trajectory regime", RegimeWarning, stacklevel=2)
        ms = m_star(n, p, k, gd.delta) if gd.delta >= 0 else 0
        return cls(n, p, k, find_k0(n, p), gd.gamma, gd.delta, ms, p * comb(n, 2))

    @classmethod
    def from_offset(cls, n: int, p: float, c: int) -> TheoryParams:
        """Parameters for k = k0 - c."""
        k = find_k0(n, p) - c
        if k < 1:
            raise ValueError(f"k0 - C = {k} is not a valid clique size")
        return cls.from_npk(n, p, k)

    @property
    def log_expected(self) -> float:
        return log_expected_cliques(self.n, self.k, self.p)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrajectorySchedule:
    """Predicted trajectories and error envelopes, indexed by step m = 0..m_max."""

    n: int
    k: int
    delta: float
    e: np.ndarray
    Qt: np.ndarray
    gQ: np.ndarray
    Yt: np.ndarray
    gY: np.ndarray
    m_max: int
    truncated: bool = False
    notes: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.m_max + 1


def build_schedule(
    e0: float, k: int, Q0: float, delta: float, m_max: int, n: int
) -> TrajectorySchedule:
    """Run the one-step recurrences for the clique trajectory and its envelopes.

    With ``a(m) = C(k,2)^2 / e(m)`` and ``e(m) = e0 - m C(k,2)``::

        Qt(m+1) = Qt(m) (1 - a(m))      gQ(m+1) = gQ(m) (1 + a(m))
        gY(m+1) = gY(m) (1 + 2 a(m))     Yt(m)   = C(k,2) Qt(m) / e(m)

    starting from ``Qt(0) = Q0``, ``gQ(0) = 2 n^-delta``, ``gY(0) = 10 n^-delta``.
    If ``1 - a(m)`` stops being positive the arrays are cut at ``m`` and
    ``truncated`` is set.
    """
    if m_max < 0:
        raise ValueError("m_max must be non-negative")
    ck = comb(k, 2)
    ck2 = float(ck * ck)
    base = n ** (-delta)
    e = [float(e0)]
    Qt = [float(Q0)]
    gQ = [2.0 * base]
    gY = [10.0 * base]
    truncated = False
    notes: list[str] = []
    for m in range(m_max):
        em = e[m]
        if em <= 0:
            truncated = True
            notes.append(f"edge count non-positive at m={m}")
            break
        a = ck2 / em
        if 1.0 - a <= 0.0:
            truncated = True
            notes.append(f"bracket 1 - C(k,2)^2/e(m) non-positive at m={m}")
            break
        Qt.append(Qt[m] * (1.0 - a))
        gQ.append(gQ[m] * (1.0 + a))
        gY.append(gY[m] * (1.0 + 2.0 * a))
        e.append(float(e0) - (m + 1) * ck)
    e_arr = np.array(e)
    Qt_arr = np.array(Qt)
    with np.errstate(divide="ignore", invalid="ignore"):
        Yt = np.where(e_arr > 0, ck * Qt_arr / e_arr, np.nan)
    return TrajectorySchedule(
        n=n, k=k, delta=delta, e=e_arr, Qt=Qt_arr, gQ=np.array(gQ), Yt=Yt,
        gY=np.array(gY), m_max=len(e) - 1, truncated=truncated, notes=notes,
    )


def nominal_schedule(params: TheoryParams, m_max: int, e0: float | None = None,
                     Q0: float | None = None) -> TrajectorySchedule:
    """Schedule with ``Qt(0) = E_p(n,k)`` unless ``Q0`` is given; ``e0`` defaults to p C(n,2)."""
    e0 = params.e0_nominal if e0 is None else e0
    Q0 = math.exp(params.log_expected) if Q0 is None else Q0
    ck = comb(params.k, 2)
    # keep e(m) positive over the whole horizon
    m_max = min(m_max, max(int(math.ceil(e0 / ck)) - 1, 0))
    return build_schedule(e0, params.k, Q0, params.delta, m_max, params.n)


def first_step_below(e0: float, k: int, Q0: float, threshold: float, chunk: int = 1 << 20) -> tuple[int, float]:
    """First m with Qt(m) <= threshold, scanning ln Qt in vectorised chunks.

    Returns ``(m, ln Qt(m))``. If the bracket ``1 - C(k,2)^2/e(m)`` turns
    non-positive first, the last valid index is returned.
    """
    ck = comb(k, 2)
    ck2 = float(ck * ck)
    log_q = math.log(Q0)
    log_thr = math.log(threshold)
    if log_q <= log_thr:
        return 0, log_q
    start = 0
    while True:
        m = np.arange(start, start + chunk, dtype=float)
        with np.errstate(divide="ignore"):
            a = ck2 / (e0 - m * ck)
        bad = np.nonzero((a >= 1.0) | (a <= 0.0))[0]
        stop = int(bad[0]) if bad.size else chunk
        steps = np.cumsum(np.log1p(-a[:stop]))
        hits = np.nonzero(log_q + steps <= log_thr)[0]
        if hits.size:
            j = int(hits[0])
            return start + j + 1, float(log_q + steps[j])
        if stop < chunk:
            return start + stop, float(log_q + (steps[-1] if stop else 0.0))
        log_q += float(steps[-1])
        start += chunk


def heuristic_duration(n: int, p: float, k: int) -> tuple[float, int]:
    """(conjectured packing size 2(gamma-2) p n^2 ln n / k^4, first m with Qt(m) <= n^2).

    The trajectory scan uses nominal e0 = p C(n,2) and Qt(0) = E_p(n,k).
    """
    gd = gamma_delta(n, k, p)
    if gd.gamma <= 2:
        raise ValueError(f"gamma={gd.gamma:.4f} <= 2: no heuristic duration")
    m_conj = 2 * (gd.gamma - 2) * p * n * n * log(n) / k**4
    e0 = p * comb(n, 2)
    Q0 = math.exp(log_expected_cliques(n, k, p))
    m_traj, _ = first_step_below(e0, k, Q0, float(n * n))
    return m_conj, m_traj


def theorem_lower_bound(n: int, p: float, k: int, gamma: float | None = None) -> float:
    """Packing size guaranteed whp: p n^2 ln n / (40 k^4), or the min{...} form if gamma is given."""
    if gamma is None:
        return p * n * n * log(n) / (40 * k**4)
    return min(min(gamma - 2, 1) * p * n * n * log(n) / (40 * k**4), p * n * n / (2 * k * k))


# --------------------------------------------------------------------- zeta / overlap
def exact_zeta2(n: int, k: int) -> Fraction:
    """Probability that two independent uniform k-subsets of [n] share at most one vertex."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    return Fraction(comb(n - k, k) + k * comb(n - k, k - 1), comb(n, k))


def overlap_asymptotic(n: int, k: int) -> float:
    return k**4 / (2 * n * n)


def t0_threshold(n: int, p: float, k: int, gamma: float) -> float:
    """5 (gamma - 2) / (1 - p) * p n^2 ln n / k^4; ``inf`` beyond ``INFINITY_CAP``."""
    if p >= 1:
        raise ValueError("t0 is undefined for p = 1")
    value = 5 * (gamma - 2) / (1 - p) * p * n * n * log(n) / k**4
    return math.inf if value > INFINITY_CAP else value


def upper_bound_t(n: int, p: float, k: int, beta: float, eps: float, gamma: float) -> float:
    """(gamma-2)(4+eps) / (1 + (4 beta - 1) p) * p n^2 ln n / k^4."""
    denom = 1 + (4 * beta - 1) * p
    if denom <= 0:
        raise ValueError(f"1 + (4 beta - 1) p = {denom} must be positive")
    return (gamma - 2) * (4 + eps) / denom * p * n * n * log(n) / k**4


def log_first_moment_bound(
    n: int, p: float, k: int, t: float, beta: float, gamma: float
) -> tuple[float, float]:
    """(log bound, bracket) for the expected number of t edge-disjoint k-cliques in G(n, m+).

    bracket = t k^4 (1 + (4 beta - 1) p) / (4 p n^2) - gamma ln n + ln t and the bound
    is exp(-t * bracket). The o(1) inside the first term is dropped, so this is not a
    rigorous bound.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    bracket = t * k**4 * (1 + (4 * beta - 1) * p) / (4 * p * n * n) - gamma * log(n) + log(t)
    return -t * bracket, bracket


@dataclass
class UpperBoundReport:
    t0: float
    beta: float
    epsilon: float
    t_threshold: float
    log_first_moment: float
    bracket_value: float
    bracket_target: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return with_linear(asdict(self))


def upper_bound_report(n: int, p: float, k: int, beta: float, eps: float,
                       gamma: float | None = None) -> UpperBoundReport:
    if gamma is None:
        gamma = gamma_delta(n, k, p).gamma
    notes = ["o(1) terms dropped: values are diagnostics, not rigorous bounds"]
    if not 0 <= beta <= 0.25:
        notes.append(f"beta={beta} outside the assumed range [0, 1/4]")
    t = upper_bound_t(n, p, k, beta, eps, gamma)
    t0 = t0_threshold(n, p, k, gamma)
    if t > t0:
        notes.append("t exceeds t0: the assumed zeta bound is not known to cover t")
    log_bound, bracket = log_first_moment_bound(n, p, k, max(t, 1.0), beta, gamma)
    target = eps * (gamma - 2) * log(n) / 6
    if bracket < target:
        notes.append("bracket below eps (gamma-2) ln n / 6 at this n")
    return UpperBoundReport(t0, beta, eps, t, log_bound, bracket, target, notes)


def prob_fixed_edges_gnm(n: int, m: int, r: int) -> float:
    """ln P(r fixed edges all lie in G(n, m)) = ln (m)_r / (N)_r; ``-inf`` when r > m."""
    if r < 0:
        raise ValueError("r must be non-negative")
    N = comb(n, 2)
    if r > m:
        return -math.inf
    if m > N:
        raise ValueError(f"m={m} exceeds C(n,2)={N}")
    return (lgamma(m + 1) - lgamma(m - r + 1)) - (lgamma(N + 1) - lgamma(N - r + 1))


# ------------------------------------------------------------ initial-value quantities
def expected_y(n: int, k: int, p: float, s: int) -> float:
    """ln of C(n-s, k-s) p^{C(k,2) - C(s,2)}, the mean of Y_S for |S| = s. ``p = 1`` allowed."""
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if not 0 <= s <= k:
        raise ValueError(f"need 0 <= s <= k, got s={s}, k={k}")
    return log_binom(n - s, k - s) + (comb(k, 2) - comb(s, 2)) * log(p)


def xi_sequence(n: int, k: int, p: float, s: int) -> np.ndarray:
    """ln xi_i for i = s..k, with xi_i = n^{k-i} / (k-i)! * p^{C(k,2) - C(i,2)}."""
    if not 0 <= s <= k:
        raise ValueError(f"need 0 <= s <= k, got s={s}, k={k}")
    ln_n, ln_p = log(n), log(p)
    return np.array(
        [(k - i) * ln_n - lgamma(k - i + 1) + (comb(k, 2) - comb(i, 2)) * ln_p for i in range(s, k + 1)]
    )


def valley_index(values, tol: float = 0.0) -> int | None:
    """Index j with values non-increasing up to j and non-decreasing after, else None."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return None
    j = int(np.argmin(v))
    left, right = np.diff(v[: j + 1]), np.diff(v[j:])
    if np.all(left <= tol) and np.all(right >= -tol):
        return j
    return None


def xi_lemma_checks(n: int, k: int, p: float, s: int, tol: float = 1e-9) -> dict:
    """Scan the log-xi array for the three monotonicity properties of the xi sequence.

    (1) xi_i <= n^{-(i-s)/2} xi_s for s <= i <= floor(k/8);
    (2) xi_b <= max(xi_a, xi_c) for s <= a <= b <= c <= k - D, D = ceil(1/(1-p) + 1);
    (3) xi_i <= n^{-(k-i)/8} max(xi_s, xi_k) for ceil(7k/8) <= i <= k.
    """
    lx = xi_sequence(n, k, p, s)
    ln_n = log(n)
    at = lambda i: lx[i - s]  # noqa: E731
    item1 = all(at(i) <= at(s) - (i - s) / 2 * ln_n + tol for i in range(s, k // 8 + 1))
    d = math.ceil(1 / (1 - p) + 1)
    mid = lx[: max(k - d - s + 1, 0)]
    item2 = _no_interior_peak(mid, tol)
    top = max(at(s), at(k))
    item3 = all(at(i) <= top - (k - i) / 8 * ln_n + tol for i in range(math.ceil(7 * k / 8), k + 1))
    return {
        "n": n, "k": k, "p": p, "s": s, "D": d,
        "log_xi_k": float(at(k)),
        "item1_small_i": bool(item1),
        "item2_no_interior_peak": bool(item2),
        "item3_large_i": bool(item3),
        "passed": bool(item1 and item2 and item3),
    }


def _no_interior_peak(values: np.ndarray, tol: float) -> bool:
    # v[b] <= max(v[a], v[c]) for all a <= b <= c fails iff some v[b] exceeds
    # both the minimum before it and the minimum after it.
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return True
    prefix_min = np.minimum.accumulate(v)[:-2]
    suffix_min = np.minimum.accumulate(v[::-1])[::-1][2:]
    inner = v[1:-1]
    return not np.any((inner > prefix_min + tol) & (inner > suffix_min + tol))


def ai_sequence(n: int, k: int, p: float) -> tuple[np.ndarray, float]:
    """ln a_i for i = 1..k-2 and ln Delta-bar.

    a_i = C(k-2, i) C(n-k, k-2-i) p^{C(k,2) - C(i+2,2)} and
    Delta-bar = C(n, k-2) p^{C(k,2) - 1} * sum_i a_i.
    """
    if k < 3:
        raise ValueError("k must be >= 3")
    ln_p = log(p)
    la = np.array(
        [log_binom(k - 2, i) + log_binom(n - k, k - 2 - i) + (comb(k, 2) - comb(i + 2, 2)) * ln_p
         for i in range(1, k - 1)]
    )
    finite = la[np.isfinite(la)]
    top = finite.max() if finite.size else -math.inf
    log_sum = top + math.log(np.exp(finite - top).sum()) if finite.size else -math.inf
    log_delta_bar = log_binom(n, k - 2) + (comb(k, 2) - 1) * ln_p + log_sum
    return la, float(log_delta_bar)


def ai_shape_check(n: int, k: int, p: float, slack_exponent: float = TOLERANCES.ai_slack_exponent,
                   tol: float = 1e-9) -> dict:
    """Valley shape of a_i on [D, k-D], D = ceil(1/(1 - p^{1/4})) + 1, and the max bound."""
    la, log_db = ai_sequence(n, k, p)
    d = math.ceil(1 / (1 - p ** 0.25)) + 1
    at = lambda i: la[i - 1]  # noqa: E731
    lo, hi = d, k - d
    if lo <= hi:
        window = la[lo - 1 : hi]
        j = valley_index(window, tol)
        valley = j is not None
        j = None if j is None else j + lo
    else:
        valley, j = True, None
    log_max = float(la.max())
    bound = slack_exponent * log(n) + max(at(1), at(k - 2))
    return {
        "n": n, "k": k, "p": p, "D": d, "window": [lo, hi], "valley_index": j,
        "valley_shape": bool(valley),
        "log_max_a": log_max, "log_bound": float(bound),
        "max_bound_ok": bool(log_max <= bound + tol),
        "log_delta_bar": log_db,
        "passed": bool(valley and log_max <= bound + tol),
    }


def appendix_a_ratio_check(n: int, p: float, c_max: int,
                           band: tuple[float, float] = TOLERANCES.ratio_band) -> dict:
    """r_C = ln(E(k0-C) / E(k0-C+1)) / ln n for C = 1..c_max, flagged outside ``band``.

    Also reports gamma_C = ln E(k0-C) / ln n, which should sit near [C-1, C].
    """
    if n < 100:
        raise ValueError("n must be >= 100")
    k0 = find_k0(n, p)
    ln_n = log(n)
    ratios, gammas, flags = [], [], []
    for c in range(1, c_max + 1):
        k = k0 - c
        if k < 1:
            break
        r = (log_expected_cliques(n, k, p) - log_expected_cliques(n, k + 1, p)) / ln_n
        ratios.append(r)
        gammas.append(log_expected_cliques(n, k, p) / ln_n)
        flags.append(not band[0] <= r <= band[1])
    return {
        "n": n, "p": p, "k0": k0,
        "k0_expectation_below_one": log_expected_cliques(n, k0, p) < 0,
        "ratios": ratios, "gamma_by_C": gammas, "out_of_band": flags, "band": list(band),
        "passed": not any(flags),
        "notes": ["o(1) replaced by the fixed band"],
    }


def with_linear(d: dict) -> dict:
    """Add ``name`` next to every finite ``log_name`` entry whose exponential fits a float."""
    out = dict(d)
    for key, val in d.items():
        if key.startswith("log_") and isinstance(val, (int, float)) and math.isfinite(val) and val < 700:
            out[key[4:]] = math.exp(val)
    return out
