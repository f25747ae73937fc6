"""Max-sum diversification: maximize disp(S) + f(S) over |S| = p.

Reuses the dispersion ball loop; the only new ingredient is that the bonus
function rides into the density solver as a rescaled value oracle over the
ball's ground set, with the points outside the core ball fixed inside every
evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import (
    InstanceError,
    GuardExceeded,
    MetricInstance,
    RngState,
    SubmodularSpec,
    as_value_oracle,
    disp,
    disp_cross,
    dive,
)
from .dispersion import (
    LemmaCheck,
    PairInadmissible,
    _ordered_pairs,
    build_dks_from_ball,
)
from .dks import SubDksParams, submodular_dks

from itertools import combinations

__all__ = [
    "DiversificationInstance",
    "DiversificationResult",
    "diversify",
    "check_div_structural_lemma",
    "greedy_diversification",
    "brute_force_diversification",
]


@dataclass
class DiversificationInstance:
    metric: MetricInstance
    f: SubmodularSpec
    p: int

    def __post_init__(self):
        if isinstance(self.f, SubmodularSpec) and self.f.n != self.metric.n:
            raise InstanceError("bonus function ground set must match the metric")
        if not 1 <= self.p <= self.metric.n:
            raise InstanceError("need 1 <= p <= n")


@dataclass
class DiversificationResult:
    selection: tuple
    value: float
    disp_value: float
    f_value: float
    origin: str
    diagnostics: dict = field(default_factory=dict)


def diversify(
    dinst: DiversificationInstance,
    epsilon: float,
    rng: RngState,
    *,
    inner_mode: str = "exact",
    enum_cap: int = 200_000,
    inner_gamma: float | None = None,
    exact_budget: int = 1_000_000,
) -> DiversificationResult:
    """Ball-decomposition scheme for dispersion plus a submodular bonus.

    Per admissible (center, witness) pair the bonus enters the density solver
    as h(C) = f(points outside the core ball, plus C) / (k (k-1) delta*), so
    the solver's h + den value is exactly dive(candidate) rescaled.  Expected
    guarantee (1 - eps) disp(OPT) + (1 - 1/e - eps) f(OPT); with the bonus
    identically zero the run matches qptas_dispersion seed for seed.
    """
    inst, f, p = dinst.metric, dinst.f, dinst.p
    oracle = as_value_oracle(f)
    if not 0.0 < epsilon < 1.0:
        raise InstanceError("epsilon must lie in (0, 1)")
    if not 2 <= p <= inst.n:
        raise InstanceError("need 2 <= p <= n for the scheme")
    gamma = inner_gamma if inner_gamma is not None else 0.00005 * epsilon**2
    diagnostics: dict = {
        "inner_gamma": gamma,
        "inner_gamma_theory": 0.00005 * epsilon**2,
        "inner_mode": inner_mode,
        "theory_parameters": inner_gamma is None,
        "skip_reasons": {},
        "pairs_admissible": 0,
    }
    if p == inst.n:
        sel = tuple(range(inst.n))
        diagnostics["pairs_total"] = 0
        return DiversificationResult(
            sel, dive(sel, inst, oracle), disp(sel, inst), float(oracle(frozenset(sel))),
            "trivial", diagnostics,
        )

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
        fixed_outside = frozenset(ball.outside) | frozenset(ball.forced)
        scale = ball.k * (ball.k - 1) * ball.delta_star
        nodes = ball.nodes

        def bonus(C, _fixed=fixed_outside, _scale=scale, _nodes=nodes):
            return oracle(_fixed | frozenset(_nodes[i] for i in C)) / _scale

        params = SubDksParams(
            gamma=gamma, mode=inner_mode, enum_cap=enum_cap, exact_budget=exact_budget
        )
        res = submodular_dks(dks, bonus, params, rng.child("pair", idx))
        sel = tuple(sorted(set(ball.outside) | {nodes[i] for i in res.nodes}))
        val = dive(sel, inst, oracle)
        if val > best_val or (val == best_val and (best_sel is None or sel < best_sel)):
            best_val, best_sel = val, sel

    greedy_sel = greedy_diversification(dinst)
    greedy_val = dive(greedy_sel, inst, oracle)
    diagnostics["greedy_value"] = greedy_val
    if best_sel is None:
        diagnostics["fallback"] = "no-admissible-pair"
        best_sel, best_val, origin = greedy_sel, greedy_val, "greedy"
    elif greedy_val > best_val:
        best_sel, best_val, origin = greedy_sel, greedy_val, "greedy"
    else:
        origin = "ball-candidate"
    return DiversificationResult(
        best_sel,
        best_val,
        disp(best_sel, inst),
        float(oracle(frozenset(best_sel))),
        origin,
        diagnostics,
    )


def check_div_structural_lemma(dinst: DiversificationInstance, Sopt) -> LemmaCheck:
    """Min over witnesses v of dive(S) / (p (p-1) d(u_min, v) / 16).

    u_min minimizes the dispersion part only (distance sum to S, ties to the
    lowest index); the bonus strengthens the numerator.
    """
    inst, p = dinst.metric, dinst.p
    S = sorted(set(int(x) for x in Sopt))
    if len(S) != p or p < 2:
        raise InstanceError("Sopt must have exactly p >= 2 distinct points")
    if p == inst.n:
        raise InstanceError("no witness exists when p = n")
    u_min, best = S[0], math.inf
    for cand in S:
        val = disp_cross([cand], S, inst)
        if val < best:
            u_min, best = cand, val
    base = dive(S, inst, dinst.f)
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


def greedy_diversification(dinst: DiversificationInstance) -> tuple:
    """Marginal greedy on bonus gain plus distance sum to the chosen set."""
    inst, p = dinst.metric, dinst.p
    oracle = as_value_oracle(dinst.f)
    chosen: list[int] = []
    current_f = float(oracle(frozenset()))
    for _ in range(p):
        best_x, best_gain = None, -math.inf
        for x in range(inst.n):
            if x in chosen:
                continue
            gain = (
                float(oracle(frozenset(chosen) | {x})) - current_f
                + disp_cross([x], chosen, inst)
            )
            if gain > best_gain:
                best_x, best_gain = x, gain
        chosen.append(best_x)
        current_f = float(oracle(frozenset(chosen)))
    return tuple(sorted(chosen))


def brute_force_diversification(dinst: DiversificationInstance, guard: int = 1_000_000):
    """Exact dive optimum; returns (selection, dive, disp part, bonus part)."""
    inst, p = dinst.metric, dinst.p
    oracle = as_value_oracle(dinst.f)
    count = math.comb(inst.n, p)
    if count > guard:
        raise GuardExceeded(f"brute force refuses {count} > {guard} subsets")
    best = None
    for combo in combinations(range(inst.n), p):
        d = disp(combo, inst)
        fv = float(oracle(frozenset(combo)))
        val = d + fv
        if best is None or val > best[1]:
            best = (combo, val, d, fv)
    sel, val, d, fv = best
    return sel, float(val), float(d), float(fv)
