"""Tests for density helpers, the partition matroid step, and the DkS solvers."""

import itertools
import math

import numpy as np
import pytest

from divopt.core import (
    DksInstance,
    GuardExceeded,
    InstanceError,
    RngState,
    as_value_oracle,
)
from divopt.dks import (
    SubDksParams,
    brute_force_subdks,
    candidate_admit,
    den,
    dks_additive,
    matroid_maximize,
    profile_vectors,
    submodular_dks,
)
from divopt.generators import gen_planted_dks, gen_random_dks, gen_submodular


def tiny_instance() -> DksInstance:
    w = np.zeros((3, 3))
    w[0, 1] = w[1, 0] = 1.0
    w[0, 2] = w[2, 0] = 0.5
    return DksInstance(n=3, weights=w, forced=(), k=2)


class TestDensityHelpers:
    def test_den_hand_values(self):
        inst = tiny_instance()
        assert den((0, 1), inst) == pytest.approx(1.0)
        assert den((0, 2), inst) == pytest.approx(0.5)
        assert den((1, 2), inst) == pytest.approx(0.0)
        assert den((0, 1, 2), inst) == pytest.approx(1.5 / 3.0)

    def test_den_needs_two_nodes(self):
        inst = tiny_instance()
        with pytest.raises(InstanceError):
            den((0,), inst)
        with pytest.raises(InstanceError):
            den((), inst)

    def test_profile_vectors_hand(self):
        inst = tiny_instance()
        ow, oind = profile_vectors((0, 1), inst)
        assert ow == pytest.approx([0.5, 0.5, 0.25])
        assert oind == pytest.approx([0.5, 0.5, 0.0])
        with pytest.raises(InstanceError):
            profile_vectors((), inst)

    def test_candidate_admit_self_and_reference(self):
        # Compare against a direct restatement of the two conditions.
        inst = gen_random_dks(8, 4, seed=3)
        rng = RngState(12)
        subs = [
            tuple(sorted(rng.child(i).gen.choice(8, size=3, replace=False)))
            for i in range(12)
        ]
        for U in subs:
            assert candidate_admit(U, U, inst, 1e-12)
        for U in subs:
            for Q in subs:
                for gp in (0.001, 0.01, 0.05, 0.2):
                    owU, oiU = profile_vectors(U, inst)
                    owQ, oiQ = profile_vectors(Q, inst)
                    want = bool(
                        np.max(np.abs(owU - owQ)) <= 2.0 * gp
                        and abs(float(oiU @ owQ) - float(oiQ @ owQ)) <= 4.0 * gp
                    )
                    assert candidate_admit(U, Q, inst, gp) is want

    def test_candidate_admit_boundary_is_nonstrict(self):
        # Two isolated node pairs whose profiles differ by exactly 2 gamma'.
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = 1.0
        w[2, 3] = w[3, 2] = 0.96
        inst = DksInstance(n=4, weights=w, forced=(), k=2)
        owU, _ = profile_vectors((0, 1), inst)
        owQ, _ = profile_vectors((2, 3), inst)
        gap = float(np.max(np.abs(owU - owQ)))
        assert candidate_admit((0, 1), (2, 3), inst, gap / 2.0)
        assert not candidate_admit((0, 1), (2, 3), inst, gap / 2.0 - 1e-9)


class TestMatroidMaximize:
    def modular(self, weights):
        def obj(sel):
            return float(sum(weights[c] for c in sel if c is not None))

        return obj

    def test_exact_matches_product_enumeration(self):
        rng = RngState(31)
        for trial in range(20):
            g = rng.child(trial).gen
            pools = []
            weights = {}
            for i in range(3):
                pool = []
                for j in range(int(g.integers(1, 4))):
                    cand = (i * 10 + j,)
                    weights[cand] = float(g.random())
                    pool.append(cand)
                pools.append(pool)
            obj = self.modular(weights)
            res = matroid_maximize(pools, obj, mode="exact")
            best = max(
                obj(combo) for combo in itertools.product(*pools)
            )
            assert res.value == pytest.approx(best)
            assert res.mode_used == "exact"
            assert not res.fell_back

    def test_greedy_half_bound_on_coverage(self):
        # Coverage objectives are monotone submodular, so greedy is a
        # half-approximation of the exact enumeration.
        rng = RngState(77)
        for trial in range(20):
            g = rng.child(trial).gen
            pools = []
            for i in range(3):
                pool = []
                for j in range(int(g.integers(1, 4))):
                    items = tuple(sorted(g.choice(10, size=3, replace=False)))
                    pool.append(items)
                pools.append(pool)

            def obj(sel):
                covered = set()
                for c in sel:
                    if c is not None:
                        covered.update(c)
                return float(len(covered))

            exact = matroid_maximize(pools, obj, mode="exact")
            greedy = matroid_maximize(pools, obj, mode="greedy")
            assert greedy.value >= 0.5 * exact.value - 1e-9
            assert greedy.value <= exact.value + 1e-9

    def test_budget_falls_back_to_greedy(self):
        pools = [[(1,), (2,)], [(3,), (4,)]]
        obj = self.modular({(1,): 1.0, (2,): 2.0, (3,): 3.0, (4,): 4.0})
        res = matroid_maximize(pools, obj, mode="exact", exact_budget=3)
        assert res.fell_back
        assert res.mode_used == "greedy"
        # Modular objective, so greedy still lands on the optimum here.
        assert res.value == pytest.approx(6.0)

    def test_tie_break_prefers_larger_secondary(self):
        pools = [[(0,), (1,)]]
        obj = lambda sel: 0.0
        tie = lambda sel: 1.0 if sel[0] == (1,) else 0.0
        res = matroid_maximize(pools, obj, mode="exact", tie_break=tie)
        assert res.chosen == ((1,),)
        res_g = matroid_maximize(pools, obj, mode="greedy", tie_break=tie)
        assert res_g.chosen == ((1,),)

    def test_empty_pools_and_bad_mode(self):
        res = matroid_maximize([[], []], lambda sel: 0.0, mode="exact")
        assert res.chosen == (None, None)
        with pytest.raises(InstanceError):
            matroid_maximize([], lambda sel: 0.0, mode="split")


def desk_params(**over) -> SubDksParams:
    base = dict(gamma=1.0, s=1, enum_cap=10**6, mode="exact")
    base.update(over)
    return SubDksParams(**base)


def reference_fast_path(inst: DksInstance, h, gamma: float):
    """Uncapped restatement of the one-cell anchored scan."""
    horacle = as_value_oracle(h)
    I = sorted(inst.forced)
    kp = inst.k - len(I)
    Vp = sorted(set(range(inst.n)) - set(I))
    gp = 0.01 * gamma
    hi_anchor = math.floor((1.0 + gp) * kp + 1e-9)

    def stats(members):
        T = tuple(sorted(set(I) | set(members)))
        hv = float(horacle(frozenset(T)))
        dv = den(T, inst) if len(T) >= 2 else 0.0
        return T, hv, dv

    cands = list(itertools.combinations(Vp, kp))
    cstats = [stats(c) for c in cands]
    best = None

    def consider(entry):
        nonlocal best
        T, hv, dv = entry
        val = hv + dv
        if best is None or val > best[0] or (val == best[0] and T < best[1]):
            best = (val, T, hv, dv)

    fallback = stats(Vp[:kp])
    missing = False
    for size in range(1, hi_anchor + 1):
        for Q in itertools.combinations(Vp, size):
            admitted = [
                i for i, c in enumerate(cands) if candidate_admit(c, Q, inst, gp)
            ]
            if not admitted:
                missing = True
                continue
            win = min(admitted, key=lambda i: (-cstats[i][1], -cstats[i][2], i))
            consider(cstats[win])
    if missing:
        consider(fallback)
    return best


class TestSubmodularDks:
    def test_planted_recovery(self):
        for seed in range(8):
            inst = gen_planted_dks(10, 4, seed=seed)
            res = submodular_dks(inst, None, desk_params(), RngState(seed))
            assert res.den_value == pytest.approx(1.0)
            assert res.nodes == tuple(inst.meta["planted"])
            assert res.diagnostics["fast_path"] is True

    def test_one_cell_density_matches_brute(self):
        for seed in range(10):
            inst = gen_random_dks(9, 4, seed=40 + seed, forced_count=seed % 2)
            res = dks_additive(inst, 1.0, RngState(seed), mode="exact", enum_cap=10**6, s=1)
            _, opt = brute_force_subdks(inst)
            assert res.value == pytest.approx(opt, abs=1e-9)
            assert set(inst.forced) <= set(res.nodes)
            assert len(res.nodes) == inst.k

    def test_fast_path_matches_reference(self):
        for seed in range(6):
            inst = gen_random_dks(7, 3, seed=60 + seed)
            h = gen_submodular(7, "coverage", seed=60 + seed, universe=6)
            res = submodular_dks(inst, h, desk_params(), RngState(seed))
            assert res.diagnostics["fast_path"] is True
            want = reference_fast_path(inst, h, 1.0)
            assert res.value == pytest.approx(want[0], abs=1e-12)
            assert res.nodes == want[1]
            assert res.h_value == pytest.approx(want[2])
            assert res.den_value == pytest.approx(want[3])

    def test_value_decomposition_and_size(self):
        inst = gen_random_dks(10, 5, seed=5, forced_count=2)
        h = gen_submodular(10, "coverage", seed=5, universe=8)
        res = submodular_dks(inst, h, desk_params(), RngState(0))
        assert res.value == pytest.approx(res.h_value + res.den_value)
        assert len(res.nodes) == 5
        assert set(inst.forced) <= set(res.nodes)
        assert res.h_value == pytest.approx(h.value(frozenset(res.nodes)))
        assert res.den_value == pytest.approx(den(res.nodes, inst))

    def test_forced_equal_k_is_trivial(self):
        inst = gen_random_dks(6, 3, seed=9)
        forced_inst = DksInstance(
            n=6, weights=inst.weights, forced=(1, 3, 5), k=3
        )
        res = submodular_dks(forced_inst, None, desk_params(), RngState(0))
        assert res.nodes == (1, 3, 5)
        assert res.diagnostics.get("trivial") is True

    def test_multi_cell_invariants(self):
        # Force two cells with an explicit per-cell size target.
        for seed in range(5):
            inst = gen_random_dks(10, 4, seed=80 + seed)
            params = SubDksParams(
                gamma=1.0, s=2, t=2.0, enum_cap=10**5, mode="exact"
            )
            res = submodular_dks(inst, None, params, RngState(seed))
            assert res.diagnostics["fast_path"] is False
            assert res.diagnostics["s"] == 2
            assert len(res.nodes) == 4
            assert res.value == pytest.approx(den(res.nodes, inst))
            again = submodular_dks(inst, None, params, RngState(seed))
            assert again.nodes == res.nodes

    def test_theory_cell_count_formula(self):
        inst = gen_random_dks(12, 6, seed=11)
        params = SubDksParams(gamma=1.0, enum_cap=10**4, mode="greedy")
        res = submodular_dks(inst, None, params, RngState(2))
        gp = 0.01
        want_s = max(1, math.floor(0.001 * gp * gp * 6 / math.log(12)))
        assert res.diagnostics["s"] == want_s
        assert res.diagnostics["gamma_prime"] == pytest.approx(gp)

    def test_params_validation(self):
        with pytest.raises(InstanceError):
            SubDksParams(gamma=0.0)
        with pytest.raises(InstanceError):
            SubDksParams(gamma=1.5)
        with pytest.raises(InstanceError):
            SubDksParams(gamma=0.5, mode="fastest")
        with pytest.raises(InstanceError):
            SubDksParams(gamma=0.5, s=0)
        with pytest.raises(InstanceError):
            SubDksParams(gamma=0.5, enum_cap=0)


class TestBruteForce:
    def test_matches_exhaustive_with_bonus(self):
        inst = gen_random_dks(7, 3, seed=21)
        h = gen_submodular(7, "coverage", seed=21, universe=5)
        T, val = brute_force_subdks(inst, h)
        best = max(
            h.value(frozenset(c)) + den(c, inst)
            for c in itertools.combinations(range(7), 3)
        )
        assert val == pytest.approx(best)
        assert val == pytest.approx(h.value(frozenset(T)) + den(T, inst))

    def test_guard(self):
        inst = gen_random_dks(12, 6, seed=2)
        with pytest.raises(GuardExceeded):
            brute_force_subdks(inst, guard=10)
