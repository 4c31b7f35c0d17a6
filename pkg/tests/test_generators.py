import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracle import straight_schedule

from tsptw_transfer import Instance, constraint_violation
from tsptw_transfer.generators import (
    DegenerateInstanceError,
    ExpansionParams,
    GenerationFailed,
    PreconditionError,
    SwapParams,
    TaskSequence,
    build_sequence,
    expand_windows,
    selection_bounds,
    sequence_from_json,
    sequence_to_json,
    swap_additive_windows,
)
from tsptw_transfer.instances import random_dumas_instance


def contains(outer: Instance, inner: Instance) -> bool:
    return bool(np.all(outer.a <= inner.a) and np.all(inner.b <= outer.b))


class TestExpansion:
    @pytest.mark.parametrize("n,bounds", [(20, (2, 3)), (30, (3, 4)), (40, (4, 6)), (5, (1, 1)), (12, (2, 2)), (3, (1, 1))])
    def test_selection_bounds(self, n, bounds):
        assert selection_bounds(n, ExpansionParams()) == bounds

    def test_zero_rate_changes_nothing(self, make_instance):
        inst, _ = make_instance(20, seed=1)
        res = expand_windows(inst, ExpansionParams(rho=0.0), rng_seed=3)
        assert res.instance == inst

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1))
    def test_windows_only_widen(self, seed):
        inst, _ = random_dumas_instance(20, seed=seed % 97)
        res = expand_windows(inst, ExpansionParams(), rng_seed=seed)
        assert contains(res.instance, inst)

    def test_selected_count_on_twenty_cities(self):
        inst, _ = random_dumas_instance(20, width=30, seed=2)
        assert np.all(inst.b > inst.a)
        for seed in range(30):
            res = expand_windows(inst, ExpansionParams(), rng_seed=seed)
            changed = np.flatnonzero((res.instance.a != inst.a) | (res.instance.b != inst.b))
            assert len(res.selected) in (2, 3)
            assert sorted(changed.tolist()) == list(res.selected)
            assert inst.depot not in res.selected

    def test_degenerate(self):
        d = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(DegenerateInstanceError):
            expand_windows(Instance(d, [0, 0], [5, 5]), rng_seed=0)

    def test_depot_adjustment_keeps_reference_feasible(self):
        inst, tour = random_dumas_instance(15, seed=4)
        tight = inst.with_windows(inst.a, np.where(np.arange(15) == 0, 0.0, inst.b))
        assert constraint_violation(tight, tour) == 0  # depot visited first, at time 0
        res = expand_windows(tight, rng_seed=1, reference=tour)
        assert res.depot_adjustment >= 0
        assert res.instance.b[0] >= tight.b[0]
        assert constraint_violation(res.instance, tour) == 0

    @settings(max_examples=100)
    @given(st.integers(0, 10_000), st.data())
    def test_lateness_never_increases(self, seed, data):
        inst, _ = random_dumas_instance(12, seed=seed)
        res = expand_windows(inst, ExpansionParams(rho=0.5), rng_seed=seed)
        perm = data.draw(st.permutations(range(12)))
        assert constraint_violation(res.instance, perm) <= constraint_violation(inst, perm)


class TestSwap:
    def test_no_swap_recentres_on_reference(self, make_instance):
        inst, tour = make_instance(8, seed=2)
        res = swap_additive_windows(tour, inst, SwapParams(k=0, delta=10.0), rng_seed=0)
        tau = straight_schedule(inst.d, inst.a, inst.b, tour)[0]
        assert res.swapped == tour
        for pos, city in enumerate(tour):
            assert res.instance.a[city] == max(0.0, tau[pos] - 10)
            assert res.instance.b[city] == tau[pos] + 10
        assert constraint_violation(res.instance, tour) == 0

    @settings(max_examples=100)
    @given(
        st.integers(0, 10_000),
        st.integers(0, 4),
        st.one_of(st.none(), st.floats(0, 50)),
        st.booleans(),
    )
    def test_swapped_tour_is_feasible_on_its_windows(self, seed, k, delta, wait):
        inst, tour = random_dumas_instance(10, seed=seed)
        res = swap_additive_windows(tour, inst, SwapParams(k=k, delta=delta, wait=wait), rng_seed=seed)
        assert constraint_violation(res.instance, res.swapped) == 0
        assert sorted(res.swapped) == list(range(10))

    def test_delta_is_population_std_of_arrivals(self):
        inst, tour = random_dumas_instance(20, seed=8)
        res = swap_additive_windows(tour, inst, SwapParams(), rng_seed=5)
        tau = straight_schedule(inst.d, inst.a, inst.b, res.swapped)[0]
        assert res.times == pytest.approx(tau)
        mean = sum(tau) / len(tau)
        sigma = (sum((t - mean) ** 2 for t in tau) / len(tau)) ** 0.5
        assert res.delta == pytest.approx(sigma, rel=1e-12)

    def test_without_waiting_uses_travel_prefix_sums(self):
        inst, tour = random_dumas_instance(10, seed=1)
        res = swap_additive_windows(tour, inst, SwapParams(wait=False), rng_seed=2)
        o = res.swapped
        prefix = [0.0]
        for p, c in zip(o, o[1:]):
            prefix.append(prefix[-1] + inst.d[p, c])
        assert res.times == pytest.approx(prefix)

    def test_rejects_infeasible_reference(self, make_instance):
        inst, tour = make_instance(6, seed=1)
        strict = inst.with_windows(np.zeros(6), np.zeros(6))
        with pytest.raises(PreconditionError):
            swap_additive_windows(tour, strict, rng_seed=0)

    def test_swaps_can_hit_first_position(self):
        inst, tour = random_dumas_instance(6, seed=0)
        firsts = {swap_additive_windows(tour, inst, rng_seed=s).swapped[0] for s in range(60)}
        assert len(firsts) > 1

    def test_exactly_one_transposition(self):
        inst, tour = random_dumas_instance(12, seed=3)
        for s in range(20):
            res = swap_additive_windows(tour, inst, SwapParams(k=1), rng_seed=s)
            assert sum(x != y for x, y in zip(res.swapped, tour)) == 2


class TestSequences:
    def test_expansion_sequence(self):
        base, ref = random_dumas_instance(30, seed=6, name="b30")
        seq = build_sequence(base, "expansion", seed=9, reference=ref)
        assert len(seq.tasks) == 5
        assert seq.tasks[0].name == "b30.T1"
        assert np.array_equal(seq.tasks[0].a, base.a)
        for prev, nxt in zip(seq.tasks, seq.tasks[1:]):
            assert contains(nxt, prev)
            assert np.all(nxt.b - nxt.a >= prev.b - prev.a)
            assert nxt.d is seq.tasks[0].d
        assert all(adj is not None and adj >= 0 for adj in seq.depot_adjustments)

    def test_feasibility_carries_forward(self):
        # wide windows so random permutations are feasible often enough
        base, ref = random_dumas_instance(8, width=150, seed=1, name="w8")
        seq = build_sequence(base, "expansion", seed=2, reference=ref)
        rng = np.random.default_rng(0)
        checked = 0
        while checked < 100:
            perm = rng.permutation(8).tolist()
            for prev, nxt in zip(seq.tasks, seq.tasks[1:]):
                if constraint_violation(prev, perm) == 0:
                    assert constraint_violation(nxt, perm) == 0
                    checked += 1

    def test_swap_sequence(self):
        base, ref = random_dumas_instance(20, seed=3, name="s20")
        seq = build_sequence(base, "swap", seed=4, reference=ref)
        assert len(seq.tasks) == 5
        assert all(t.d is seq.tasks[0].d for t in seq.tasks)
        assert len(seq.swap_tours) == 4
        for task, carrier in zip(seq.tasks[1:], seq.swap_tours):
            assert constraint_violation(task, carrier) == 0

    def test_swap_sequence_finds_its_own_reference(self):
        base, _ = random_dumas_instance(8, width=40, seed=5, name="f8")
        seq = build_sequence(base, "swap", seed=1, reference_budget=5000)
        assert constraint_violation(base, seq.reference) == 0

    def test_swap_without_any_feasible_tour_fails(self):
        d = np.full((4, 4), 5.0)
        np.fill_diagonal(d, 0)
        hopeless = Instance(d, np.zeros(4), np.zeros(4), name="x")
        with pytest.raises(GenerationFailed):
            build_sequence(hopeless, "swap", seed=0, reference_budget=300)
        with pytest.raises(GenerationFailed):
            build_sequence(hopeless, "swap", seed=0, find_reference=lambda inst: None)

    @pytest.mark.parametrize("env", ["expansion", "swap"])
    def test_deterministic_and_round_trips(self, env):
        base, ref = random_dumas_instance(25, seed=2, name="d25")
        one = sequence_to_json(build_sequence(base, env, seed=17, reference=ref))
        two = sequence_to_json(build_sequence(base, env, seed=17, reference=ref))
        assert one == two
        back = sequence_from_json(one)
        assert sequence_to_json(back) == one
        assert all(t.d is back.tasks[0].d for t in back.tasks)
        other = sequence_to_json(build_sequence(base, env, seed=18, reference=ref))
        assert other != one

    def test_sequence_validation(self, make_instance):
        inst, _ = make_instance(5)
        other, _ = make_instance(5, seed=1)
        with pytest.raises(ValueError):
            TaskSequence([inst] * 4, "expansion", "x", 0)
        with pytest.raises(ValueError):
            TaskSequence([inst] * 4 + [other], "expansion", "x", 0)
        with pytest.raises(ValueError):
            TaskSequence([inst] * 5, "shuffle", "x", 0)
