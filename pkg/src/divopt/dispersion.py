"""Max-sum dispersion: pick p points maximizing the sum of pairwise distances.

The approximation scheme guesses a center u and a witness v, keeps the ball
of radius delta* = 20 d(u,v) / epsilon around u, forces the ring between
radius delta and delta*, scales pair distances into [0, 1] edge weights, and
delegates the remaining choice to the density solver.  Every ordered pair is
tried (largest distance first) and the best candidate is kept, never worse
than the pair-greedy baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .core import (
    DksInstance,
    GuardExceeded,
    InstanceError,
    MetricInstance,
    RngState,
    disp,
    disp_cross,
)
from .dks import dks_additive

__all__ = [
    "PairInadmissible",
    "BallDecomposition",
    "build_dks_from_ball",
    "LemmaCheck",
    "check_structural_lemma",
    "DispersionResult",
    "qptas_dispersion",
    "greedy_dispersion",
    "brute_force_dispersion",
]


class PairInadmissible(Exception):
    """A (center, witness) pair cannot produce a candidate; carries the reason."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class BallDecomposition:
    """Geometry of one (center, witness) guess.

    nodes: sorted members of B(u, delta*), the density instance's ground set
    (local index = position).  forced: the ring B(u, delta*) minus B(u, delta),
    global ids.  outside: points beyond delta*, automatically included in the
    final selection.  k: how many of ``nodes`` the candidate must contain.
    """

    center: int
    witness: int
    delta: float
    delta_star: float
    nodes: tuple
    forced: tuple
    outside: tuple
    k: int


def build_dks_from_ball(
    inst: MetricInstance, p: int, u: int, v: int, epsilon: float
) -> tuple[DksInstance, BallDecomposition]:
    """Reduce one (u, v) guess to a forced-set density instance.

    Edge weights are min(1, 0.5 d(y,z) / delta*); inside the ball distances
    never exceed 2 delta*, so the clamp is inactive there and
    disp(J) = k (k-1) delta* den(J) holds exactly for size-k supersets of the
    forced ring.  Raises PairInadmissible when the guess cannot host a
    candidate (gate |outside B(u, delta)| >= p, k < |ring|, or k < 2).
    """
    if u == v:
        raise PairInadmissible("identical-endpoints")
    d_u = inst.dist[u]
    delta = float(d_u[v])
    if delta <= 0.0:
        raise PairInadmissible("zero-delta")
    delta_star = 20.0 * delta / epsilon
    outside_core = int((d_u > delta).sum())
    if outside_core >= p:
        raise PairInadmissible("outside-core-holds-p")
    nodes = tuple(int(z) for z in np.nonzero(d_u <= delta_star)[0])
    outside = tuple(int(z) for z in np.nonzero(d_u > delta_star)[0])
    k = p - len(outside)
    ring = tuple(z for z in nodes if d_u[z] > delta)
    if k < len(ring):
        raise PairInadmissible("ring-exceeds-k")
    if k < 2:
        raise PairInadmissible("k-below-two")
    sub = inst.dist[np.ix_(nodes, nodes)]
    W = np.minimum(1.0, 0.5 * sub / delta_star)
    np.fill_diagonal(W, 0.0)
    local = {g: i for i, g in enumerate(nodes)}
    dks = DksInstance(
        n=len(nodes),
        weights=W,
        forced=frozenset(local[g] for g in ring),
        k=k,
    )
    return dks, BallDecomposition(u, v, delta, delta_star, nodes, ring, outside, k)


@dataclass(frozen=True)
class LemmaCheck:
    ratio: float
    center: int
    witness: int | None


def check_structural_lemma(inst: MetricInstance, p: int, Sopt) -> LemmaCheck:
    """Min over witnesses v of disp(S) / (p (p-1) d(u_min, v) / 16).

    u_min is the member of S with the smallest distance sum to S (ties to the
    lowest index).  On an optimal S the ratio is provably >= 1; witnesses at
    distance zero count as infinitely safe.
    """
    S = sorted(set(int(x) for x in Sopt))
    p = int(p)
    if len(S) != p or p < 2:
        raise InstanceError("Sopt must have exactly p >= 2 distinct points")
    if p == inst.n:
        raise InstanceError("no witness exists when p = n")
    u_min, best = S[0], math.inf
    for cand in S:
        val = disp_cross([cand], S, inst)
        if val < best:
            u_min, best = cand, val
    base = disp(S, inst)
    ratio, witness = math.inf, None
    members = set(S)
    for v in range(inst.n):
        if v in members:
            continue
        denom = p * (p - 1) * inst.d(u_min, v) / 16.0
        r = math.inf if denom <= 0.0 else base / denom
        if r < ratio:
            ratio, witness = r, v
    return LemmaCheck(float(ratio), u_min, witness)


@dataclass
class DispersionResult:
    selection: tuple
    value: float
    origin: str
    diagnostics: dict = field(default_factory=dict)


def _ordered_pairs(inst: MetricInstance):
    pairs = [(u, v) for u in range(inst.n) for v in range(inst.n) if u != v]
    pairs.sort(key=lambda uv: (-inst.dist[uv[0], uv[1]], uv[0], uv[1]))
    return pairs


def qptas_dispersion(
    inst: MetricInstance,
    p: int,
    epsilon: float,
    rng: RngState,
    *,
    inner_mode: str = "exact",
    enum_cap: int = 200_000,
    inner_gamma: float | None = None,
    exact_budget: int = 1_000_000,
) -> DispersionResult:
    """Ball-decomposition scheme for max-sum dispersion.

    Tries every ordered (center, witness) pair in descending-distance order,
    solves the reduced density instance with additive accuracy
    0.00005 epsilon^2 (overridable), lifts the team back, and returns the
    best candidate, or the pair-greedy baseline when that is strictly better
    or no pair is admissible.
    """
    if not 0.0 < epsilon < 1.0:
        raise InstanceError("epsilon must lie in (0, 1)")
    if not 2 <= p <= inst.n:
        raise InstanceError("need 2 <= p <= n")
    diagnostics: dict = {
        "inner_epsilon": inner_gamma if inner_gamma is not None else 0.00005 * epsilon**2,
        "inner_epsilon_theory": 0.00005 * epsilon**2,
        "inner_mode": inner_mode,
        "theory_parameters": inner_gamma is None,
        "skip_reasons": {},
        "pairs_admissible": 0,
    }
    if p == inst.n:
        sel = tuple(range(inst.n))
        diagnostics["pairs_total"] = 0
        return DispersionResult(sel, disp(sel, inst), "trivial", diagnostics)

    eps_inner = diagnostics["inner_epsilon"]
    pairs = _ordered_pairs(inst)
    diagnostics["pairs_total"] = len(pairs)
    best_sel: tuple | None = None
    best_val = -math.inf
    for idx, (u, v) in enumerate(pairs):
        try:
            dks, ball = build_dks_from_ball(inst, p, u, v, epsilon)
        except PairInadmissible as skip:
            diagnostics["skip_reasons"][skip.reason] = (
                diagnostics["skip_reasons"].get(skip.reason, 0) + 1
            )
            continue
        diagnostics["pairs_admissible"] += 1
        res = dks_additive(
            dks,
            eps_inner,
            rng.child("pair", idx),
            mode=inner_mode,
            enum_cap=enum_cap,
            exact_budget=exact_budget,
        )
        sel = tuple(sorted(set(ball.outside) | {ball.nodes[i] for i in res.nodes}))
        val = disp(sel, inst)
        if val > best_val or (val == best_val and (best_sel is None or sel < best_sel)):
            best_val, best_sel = val, sel

    greedy_sel = greedy_dispersion(inst, p)
    greedy_val = disp(greedy_sel, inst)
    diagnostics["greedy_value"] = greedy_val
    if best_sel is None:
        diagnostics["fallback"] = "no-admissible-pair"
        return DispersionResult(greedy_sel, greedy_val, "greedy", diagnostics)
    if greedy_val > best_val:
        return DispersionResult(greedy_sel, greedy_val, "greedy", diagnostics)
    return DispersionResult(best_sel, best_val, "ball-candidate", diagnostics)


def greedy_dispersion(inst: MetricInstance, p: int) -> tuple:
    """Pair greedy: repeatedly take the farthest remaining pair; if one slot
    stays open, add the point with the largest distance sum to the chosen."""
    if not 0 <= p <= inst.n:
        raise InstanceError("need 0 <= p <= n")
    chosen: list[int] = []
    remaining = set(range(inst.n))
    while len(chosen) + 2 <= p:
        best_pair, best_d = None, -math.inf
        for i, j in combinations(sorted(remaining), 2):
            d = inst.dist[i, j]
            if d > best_d:
                best_pair, best_d = (i, j), d
        chosen.extend(best_pair)
        remaining.discard(best_pair[0])
        remaining.discard(best_pair[1])
    if len(chosen) < p:
        best_x, best_val = None, -math.inf
        for x in sorted(remaining):
            val = disp_cross([x], chosen, inst)
            if val > best_val:
                best_x, best_val = x, val
        chosen.append(best_x)
    return tuple(sorted(chosen))


def brute_force_dispersion(inst: MetricInstance, p: int, guard: int = 1_000_000):
    """Exact dispersion optimum by subset enumeration (lex-first tie-break)."""
    count = math.comb(inst.n, p)
    if count > guard:
        raise GuardExceeded(f"brute force refuses {count} > {guard} subsets")
    best_sel, best_val = None, -math.inf
    for combo in combinations(range(inst.n), p):
        val = disp(combo, inst)
        if val > best_val:
            best_sel, best_val = combo, val
    return best_sel, float(best_val)
