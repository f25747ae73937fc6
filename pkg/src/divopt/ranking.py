"""Coverage-aware DCG ranking: exact semantics, LP relaxation, and a PTAS.

A ranking instance asks for one permutation of range(n).  Each demand set S
with threshold k_S is "covered" at the first position t whose prefix holds
k_S members of S, and contributes gain(t) to the objective.  The LP
relaxation assigns elements fractionally to positions and pays for sets via
monotone coverage variables constrained by a knapsack-cover family that is
separated on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import GuardExceeded, InstanceError, RngState, SetSystemInstance
from .lp import Constraint, CutLoopResult, LinearProgram, solve_with_cuts

__all__ = [
    "GainFunction",
    "DCG_STANDARD",
    "Ranking",
    "RoundingParams",
    "cover_time",
    "dcg_value",
    "DcgLpLayout",
    "build_dcg_lp",
    "dcg_separation",
    "KnapsackCut",
    "solve_dcg_lp",
    "round_lp",
    "tstar_bound",
    "tau",
    "ptas_dcg",
    "RankSolution",
    "brute_force_dcg",
]

SEP_TOL = 1e-9


@dataclass(frozen=True)
class GainFunction:
    """Non-increasing position gain with values in (0, 1].

    kind "dcg": gain(t) = 1 / log2(t + shift + 1), the usual DCG discount
    evaluated shift positions later (shift=0 gives 1/log2(t+1), so gain(1)=1).
    kind "constant": gain(t) = value everywhere.
    The closed forms extend beyond any instance size, which the tau
    diagnostic relies on.
    """

    kind: str = "dcg"
    shift: int = 0
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("dcg", "constant"):
            raise InstanceError(f"unknown gain kind {self.kind!r}")
        if self.kind == "constant" and not 0.0 < self.value <= 1.0:
            raise InstanceError("constant gain must lie in (0, 1]")
        if self.shift < 0:
            raise InstanceError("shift must be non-negative")

    def __call__(self, t) -> float:
        if self.kind == "constant":
            return self.value
        t = max(float(t), 1.0)
        return 1.0 / math.log2(t + self.shift + 1.0)

    def shifted(self, extra: int) -> "GainFunction":
        if self.kind == "constant":
            return self
        return GainFunction("dcg", self.shift + int(extra), self.value)


DCG_STANDARD = GainFunction("dcg")


def cover_time(order: Sequence[int], members: Iterable[int], k: int) -> int:
    """1-based position of the k-th appearance of ``members`` in ``order``."""
    members = frozenset(members)
    if not 1 <= k <= len(members):
        raise InstanceError(f"need 1 <= k <= |members|, got k={k}")
    seen = 0
    for pos, e in enumerate(order, start=1):
        if e in members:
            seen += 1
            if seen == k:
                return pos
    raise InstanceError("order does not contain k members of the set")


@dataclass(frozen=True)
class Ranking:
    order: tuple
    cover_times: tuple

    @classmethod
    def from_order(cls, order: Sequence[int], inst: SetSystemInstance) -> "Ranking":
        order = tuple(int(e) for e in order)
        if sorted(order) != list(range(inst.n)):
            raise InstanceError("order must be a permutation of range(n)")
        times = tuple(cover_time(order, S, k) for S, k in inst.sets)
        return cls(order, times)


def dcg_value(ranking, inst: SetSystemInstance, f: GainFunction) -> float:
    """Sum of gain(cover time) over the instance's demand sets."""
    if isinstance(ranking, Ranking):
        return float(sum(f(t) for t in ranking.cover_times))
    order = tuple(ranking)
    return float(sum(f(cover_time(order, S, k)) for S, k in inst.sets))


# ---------------------------------------------------------------------------
# LP relaxation


@dataclass(frozen=True)
class DcgLpLayout:
    """Variable layout: x[e,t] then y[s,t], positions t stored 0-based."""

    n: int
    m: int

    @property
    def n_vars(self) -> int:
        return self.n * self.n + self.m * self.n

    def x_index(self, e: int, t: int) -> int:
        return e * self.n + (t - 1)

    def y_index(self, s: int, t: int) -> int:
        return self.n * self.n + s * self.n + (t - 1)

    def unpack(self, flat: np.ndarray):
        n, m = self.n, self.m
        x = np.asarray(flat[: n * n], dtype=float).reshape(n, n)
        y = np.asarray(flat[n * n :], dtype=float).reshape(m, n) if m else np.zeros((0, n))
        return x, y


def build_dcg_lp(inst: SetSystemInstance, f: GainFunction):
    """Assignment LP whose objective telescopes coverage steps against gains.

    Objective: sum over sets of sum_t (y[s,t] - y[s,t-1]) * f(t) with
    y[s,0] = 0, written per-variable as f(t) - f(t+1) (and f(n) at t=n).
    Both telescoped coefficients are non-negative because f is non-increasing.
    The knapsack-cover family is added lazily via dcg_separation.
    """
    n, m = inst.n, inst.m
    layout = DcgLpLayout(n, m)
    nv = layout.n_vars
    obj = np.zeros(nv)
    for s in range(m):
        for t in range(1, n + 1):
            coeff = f(t) - f(t + 1) if t < n else f(n)
            obj[layout.y_index(s, t)] = coeff
    upper = np.full(nv, np.inf)
    # x <= 1 follows from the assignment equalities; only y needs the cap.
    upper[n * n :] = 1.0
    lp = LinearProgram(nv, obj, upper=upper)
    for t in range(1, n + 1):
        row = np.zeros(nv)
        for e in range(n):
            row[layout.x_index(e, t)] = 1.0
        lp.add_constraint(row, "==", 1.0, key=("slot", t))
    for e in range(n):
        row = np.zeros(nv)
        for t in range(1, n + 1):
            row[layout.x_index(e, t)] = 1.0
        lp.add_constraint(row, "==", 1.0, key=("elem", e))
    for s in range(m):
        for t in range(2, n + 1):
            row = np.zeros(nv)
            row[layout.y_index(s, t)] = 1.0
            row[layout.y_index(s, t - 1)] = -1.0
            lp.add_constraint(row, ">=", 0.0, key=("mono", s, t))
    return lp, layout


@dataclass(frozen=True)
class KnapsackCut:
    """Violated cover constraint for (set_index, t) at witness subset A."""

    set_index: int
    t: int
    A: tuple
    violation: float = 0.0

    def to_constraint(self, inst: SetSystemInstance, layout: DcgLpLayout) -> Constraint:
        members, k = inst.sets[self.set_index]
        coeffs = np.zeros(layout.n_vars)
        for e in sorted(members - set(self.A)):
            for tp in range(1, self.t + 1):
                coeffs[layout.x_index(e, tp)] += 1.0
        coeffs[layout.y_index(self.set_index, self.t)] = -(k - len(self.A))
        return Constraint(coeffs, ">=", 0.0, key=("kc", self.set_index, self.t, self.A))


def dcg_separation(x: np.ndarray, y: np.ndarray, inst: SetSystemInstance, tol: float = SEP_TOL):
    """Find violated knapsack-cover constraints at the point (x, y).

    With z_e(t) = sum of x[e, t'] over prefix positions t' <= t, the family
    over all A subseteq S reduces to the single tightest witness
    A = {e in S : z_e(t) > y[s,t]}; (s, t) is violated exactly when
    sum_{e in S} min(z_e(t), y[s,t]) < k_S * y[s,t] - tol.
    Returned cuts are deduplicated by (set index, t, A).
    """
    n = inst.n
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float) if inst.m else np.zeros((0, n))
    z = np.cumsum(x, axis=1)
    cuts = []
    seen = set()
    for s, (members, k) in enumerate(inst.sets):
        idx = sorted(members)
        zE = z[idx, :]
        Y = y[s]
        slack = np.minimum(zE, Y[None, :]).sum(axis=0) - k * Y
        for t0 in np.nonzero(slack < -tol)[0]:
            A = tuple(e for li, e in enumerate(idx) if zE[li, t0] > Y[t0])
            sig = (s, int(t0) + 1, A)
            if sig in seen:
                continue
            seen.add(sig)
            cuts.append(KnapsackCut(s, int(t0) + 1, A, float(-slack[t0])))
    return cuts


@dataclass
class DcgLpResult:
    x: np.ndarray
    y: np.ndarray
    objective: float
    layout: DcgLpLayout
    loop: CutLoopResult


def solve_dcg_lp(inst: SetSystemInstance, f: GainFunction, max_rounds: int = 80) -> DcgLpResult:
    """Build the relaxation and run constraint generation to completion."""
    lp, layout = build_dcg_lp(inst, f)

    def oracle(flat):
        x, y = layout.unpack(flat)
        return [c.to_constraint(inst, layout) for c in dcg_separation(x, y, inst)]

    loop = solve_with_cuts(lp, oracle, max_rounds=max_rounds)
    if loop.solution.status != "optimal":
        raise InstanceError(f"relaxation unexpectedly {loop.solution.status}")
    x, y = layout.unpack(loop.solution.x)
    return DcgLpResult(x, y, float(loop.solution.objective), layout, loop)


# ---------------------------------------------------------------------------
# rounding


@dataclass(frozen=True)
class RoundingParams:
    gamma: float
    eta: float
    trials: int = 200

    def __post_init__(self):
        if not self.gamma > 0:
            raise InstanceError("gamma must be positive")
        if self.eta < 2.0 * self.gamma:
            raise InstanceError("need eta >= 2 * gamma")
        if self.trials < 1:
            raise InstanceError("trials must be a positive integer")


def _check_assignment(x: np.ndarray, n: int, tol: float = 1e-6):
    if x.shape != (n, n):
        raise InstanceError(f"x must be {n}x{n}")
    if x.min(initial=0.0) < -tol or x.max(initial=0.0) > 1.0 + tol:
        raise InstanceError("x entries must lie in [0, 1]")
    if np.abs(x.sum(axis=0) - 1.0).max(initial=0.0) > tol:
        raise InstanceError("each position must receive total mass 1")
    if np.abs(x.sum(axis=1) - 1.0).max(initial=0.0) > tol:
        raise InstanceError("each element must place total mass 1")


def round_lp(
    xstar: np.ndarray,
    ystar: np.ndarray,
    inst: SetSystemInstance,
    f: GainFunction,
    params: RoundingParams,
    rng: RngState,
) -> Ranking:
    """One randomized rounding pass over doubling prefixes.

    Phase i targets t_i = min(n, 2^i); element e joins the phase's block
    independently with probability min(1, z_{e,i} / (gamma * f(t_i))) where
    z_{e,i} is e's LP mass on the first t_i positions.  Blocks are
    concatenated (ascending index inside a block, repeats skipped) and any
    leftover elements are appended in ascending order, so the output is
    always a full permutation.
    """
    n = inst.n
    xstar = np.asarray(xstar, dtype=float)
    _check_assignment(xstar, n)
    phases = max(0, math.ceil(math.log2(n))) if n > 1 else 0
    placed = []
    in_order = set()
    for i in range(1, phases + 1):
        t_i = min(n, 2**i)
        z = xstar[:, :t_i].sum(axis=1)
        p = np.minimum(1.0, z / (params.gamma * f(t_i)))
        draws = rng.gen.random(n)
        for e in range(n):
            if draws[e] < p[e] and e not in in_order:
                placed.append(e)
                in_order.add(e)
    for e in range(n):
        if e not in in_order:
            placed.append(e)
            in_order.add(e)
    return Ranking.from_order(placed, inst)


def tstar_bound(ystar: np.ndarray, inst: SetSystemInstance, f: GainFunction, eta: float) -> float:
    """Sum of f(t*(S)) where t*(S) is the largest t with y[s, t-1] <= eta * f(t).

    (y[s,0] is taken as 0, so t*=1 always qualifies.)  The LP objective never
    exceeds (1 + eta) times this bound; tests hold every solved fixture to it.
    """
    n = inst.n
    total = 0.0
    for s in range(inst.m):
        tstar = 1
        for t in range(1, n + 1):
            yprev = 0.0 if t == 1 else float(ystar[s, t - 2])
            if yprev <= eta * f(t) + 1e-12:
                tstar = t
        total += f(tstar)
    return float(total)


def tau(f: GainFunction, alpha: float, n: int, C: float = 1.0) -> float:
    """Worst-case gain ratio f(stretch * t / f(t)) / f(t) over t in [n].

    stretch = C * ln(1/alpha) / alpha.  Diagnostic only: it reports how much
    of the gain survives the rounding's prefix inflation.  The constant C is
    configurable because the analysis leaves it unspecified; natural log to
    match the gamma default.
    """
    if not 0.0 < alpha < 1.0:
        raise InstanceError("alpha must lie in (0, 1)")
    if n < 1:
        raise InstanceError("n must be at least 1")
    stretch = C * math.log(1.0 / alpha) / alpha
    best = math.inf
    for t in range(1, n + 1):
        val = f(stretch * t / f(t)) / f(t)
        best = min(best, val)
    return float(best)


# ---------------------------------------------------------------------------
# PTAS driver


@dataclass
class RankSolution:
    ranking: Ranking
    value: float
    lp_bound: float | None
    diagnostics: dict = field(default_factory=dict)


def _prefix_state(inst: SetSystemInstance, prefix: tuple, f: GainFunction):
    """Fixed gain of sets covered inside the prefix plus the residual instance."""
    fixed = 0.0
    residual_sets = []
    prefix_set = set(prefix)
    for members, k in inst.sets:
        hits = 0
        covered_at = None
        for pos, e in enumerate(prefix, start=1):
            if e in members:
                hits += 1
                if hits == k:
                    covered_at = pos
                    break
        if covered_at is not None:
            fixed += f(covered_at)
        else:
            got = len(members & prefix_set)
            residual_sets.append((members - prefix_set, k - got))
    rest = sorted(set(range(inst.n)) - prefix_set)
    to_local = {e: i for i, e in enumerate(rest)}
    local_sets = tuple(
        (frozenset(to_local[e] for e in members), k) for members, k in residual_sets
    )
    res_inst = SetSystemInstance(len(rest), local_sets) if rest else None
    return fixed, res_inst, rest


def ptas_dcg(
    inst: SetSystemInstance,
    epsilon: float,
    rng: RngState,
    *,
    u: int | None = None,
    gamma: float | None = None,
    eta: float | None = None,
    trials: int | None = None,
    prefix_cap: int = 100_000,
    max_cut_rounds: int = 80,
    f: GainFunction = DCG_STANDARD,
) -> RankSolution:
    """Enumerate short ordered prefixes, solve the residual LP, round, keep best.

    Defaults derived from epsilon: eta = epsilon, gamma = eta / (6 ln(1/eta)),
    u = 2, trials = 200.  Small epsilon is the analyzed regime; larger values
    are accepted only together with explicit overrides.  Per-trial randomness
    comes from child streams keyed by (prefix index, trial index), so results
    do not depend on evaluation order.
    """
    n = inst.n
    if not 0.0 < epsilon < 1.0:
        raise InstanceError("epsilon must lie in (0, 1)")
    overridden = any(v is not None for v in (u, gamma, eta, trials))
    if epsilon >= 0.1 and not overridden:
        raise InstanceError("epsilon >= 0.1 requires explicit parameter overrides")
    eta = epsilon if eta is None else float(eta)
    if not 0.0 < eta < 1.0:
        raise InstanceError("eta must lie in (0, 1)")
    gamma = eta / (6.0 * math.log(1.0 / eta)) if gamma is None else float(gamma)
    params = RoundingParams(gamma=gamma, eta=eta, trials=200 if trials is None else int(trials))
    u = 2 if u is None else int(u)
    if u < 1:
        raise InstanceError("u must be at least 1")

    u_eff = min(u, n)
    cap_hit = False

    def prefix_count(length: int) -> int:
        return math.perm(n, length)

    while u_eff > 1 and prefix_count(u_eff) > prefix_cap:
        u_eff -= 1
        cap_hit = True

    diagnostics = {
        "u_requested": u,
        "u_used": u_eff,
        "prefix_cap": prefix_cap,
        "prefix_cap_hit": cap_hit,
        "eta": eta,
        "gamma": gamma,
        "trials": params.trials,
        "u_theory_log10": (100.0 / epsilon) * math.log10(4.0 / epsilon),
        "cut_rounds": 0,
        "cut_clean": True,
        "prefixes": prefix_count(u_eff),
    }

    best_order: tuple | None = None
    best_value = -math.inf
    lp_bound = -math.inf

    if u_eff >= n:
        for perm in permutations(range(n)):
            val = dcg_value(perm, inst, f)
            if val > best_value or (val == best_value and (best_order is None or perm < best_order)):
                best_value, best_order = val, perm
        ranking = Ranking.from_order(best_order, inst)
        diagnostics["mode"] = "exhaustive"
        return RankSolution(ranking, best_value, best_value, diagnostics)

    lp_cache: dict[frozenset, tuple] = {}
    res_gain = f.shifted(u_eff)
    for pidx, prefix in enumerate(permutations(range(n), u_eff)):
        fixed, res_inst, rest = _prefix_state(inst, prefix, f)
        key = frozenset(prefix)
        if key not in lp_cache:
            if res_inst is None or res_inst.m == 0:
                lp_cache[key] = (None, 0.0)
            else:
                res = solve_dcg_lp(res_inst, res_gain, max_rounds=max_cut_rounds)
                diagnostics["cut_rounds"] += res.loop.rounds
                diagnostics["cut_clean"] = diagnostics["cut_clean"] and res.loop.clean
                lp_cache[key] = (res, res.objective)
        res, res_obj = lp_cache[key]
        lp_bound = max(lp_bound, fixed + res_obj)

        if res is None:
            candidates = [tuple(prefix) + tuple(rest)]
        else:
            candidates = []
            for trial in range(params.trials):
                trial_rng = rng.child(pidx, trial)
                local = round_lp(res.x, res.y, res_inst, res_gain, params, trial_rng)
                candidates.append(tuple(prefix) + tuple(rest[i] for i in local.order))
        for order in candidates:
            val = dcg_value(order, inst, f)
            if val > best_value or (val == best_value and (best_order is None or order < best_order)):
                best_value, best_order = val, order

    ranking = Ranking.from_order(best_order, inst)
    diagnostics["mode"] = "prefix-lp-rounding"
    return RankSolution(ranking, best_value, float(lp_bound), diagnostics)


def brute_force_dcg(inst: SetSystemInstance, f: GainFunction = DCG_STANDARD, guard: int = 9):
    """Exact optimum by permutation enumeration; refuses n beyond the guard."""
    if inst.n > guard:
        raise GuardExceeded(f"brute force refuses n={inst.n} > {guard}")
    best_val = -math.inf
    best_order = None
    for perm in permutations(range(inst.n)):
        val = dcg_value(perm, inst, f)
        if val > best_val:
            best_val, best_order = val, perm
    return Ranking.from_order(best_order, inst), float(best_val)
