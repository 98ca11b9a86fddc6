import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qordsearch import teamsearch as ts
from qordsearch.oracle import OrderedInstance, enumerate_instances
from qordsearch.qcore import SparseState, TeamLabel, diff_norm

HALF = 0.5
S2H = math.sqrt(2.0) / 2.0

# The size-8 run with answer index 5: every stage of the combine round,
# derived by hand from the operator definitions (0-based labels, normalized
# amplitudes). Stage 2 keeps marker 1 on the interval [4,7]: V leaves
# length-4 intervals alone under size 8, and stage 3 would lose half its
# mass otherwise.
WORKED_STAGES = [
    {(0, 0, 7): HALF, (1, 4, 7): HALF, (1, 4, 5): S2H},
    {(0, 0, 7): HALF, (1, 4, 7): -HALF, (1, 4, 5): S2H},
    {(0, 4, 7): HALF, (1, 4, 7): -HALF, (1, 4, 5): S2H},
    {(1, 4, 7): S2H, (1, 4, 5): S2H},
    {(0, 4, 5): S2H, (1, 4, 5): S2H},
    {(0, 4, 5): 1.0},
    {(0, 5, 5): 1.0},
]


def team_state(entries):
    return SparseState({TeamLabel(*key): amp for key, amp in entries.items()})


def assert_stage(state, expected, tol=1e-12):
    assert diff_norm(state, team_state(expected)) < tol


class TestInterval:
    def test_midpoint_and_halves(self):
        block = ts.Interval(4, 7)
        assert block.length == 4
        assert block.midpoint == 5
        assert block.lower_half() == ts.Interval(4, 5)
        assert block.upper_half() == ts.Interval(6, 7)

    def test_aligned_block(self):
        assert ts.Interval.aligned_block(5, 2) == ts.Interval(4, 5)
        assert ts.Interval.aligned_block(5, 8) == ts.Interval(0, 7)
        assert ts.Interval.aligned_block(13, 4) == ts.Interval(12, 15)

    def test_validation(self):
        with pytest.raises(ValueError):
            ts.Interval(2, 5)  # misaligned
        with pytest.raises(ValueError):
            ts.Interval(0, 2)  # length 3
        with pytest.raises(ValueError):
            ts.Interval(0, 0).midpoint


class TestCombineOperator:
    def test_marker_zero_splits_into_plus_pair(self):
        out = ts.apply_combine(team_state({(0, 0, 7): 1.0}), 8)
        assert_stage(out, {(0, 0, 7): S2H, (1, 0, 7): S2H})

    def test_non_matching_length_unchanged(self):
        state = team_state({(1, 4, 5): 1.0})
        assert diff_norm(ts.apply_combine(state, 8), state) == 0.0

    def test_self_inverse_on_matching_labels(self):
        state = team_state({(0, 0, 3): 0.6, (1, 0, 3): 0.8})
        twice = ts.apply_combine(ts.apply_combine(state, 4), 4)
        assert diff_norm(twice, state) < 1e-12

    def test_rejects_bad_sizes(self):
        state = team_state({(0, 0, 1): 1.0})
        with pytest.raises(ValueError):
            ts.apply_combine(state, 3)
        with pytest.raises(ValueError):
            ts.apply_combine(state, 1)


class TestRefineOperator:
    def test_marker_one_takes_lower_half(self):
        out = ts.apply_refine(team_state({(1, 0, 7): 1.0}), 8)
        assert_stage(out, {(0, 0, 3): 1.0})

    def test_marker_zero_takes_upper_half(self):
        out = ts.apply_refine(team_state({(0, 0, 7): 1.0}), 8)
        assert_stage(out, {(0, 4, 7): 1.0})

    def test_length_mismatch_unchanged(self):
        state = team_state({(0, 0, 3): 1.0})
        assert diff_norm(ts.apply_refine(state, 8), state) == 0.0

    def test_collision_is_a_hard_error(self):
        state = team_state({(1, 0, 3): S2H, (0, 0, 1): S2H})
        with pytest.raises(ts.CollisionError):
            ts.apply_refine(state, 4)  # image of (1,[0,3]) hits (0,[0,1])


class TestTeamQuery:
    def test_worked_opening_to_post_query(self):
        inst = OrderedInstance(8, 5)
        out = ts.apply_team_query(team_state(WORKED_STAGES[0]), inst)
        assert_stage(out, WORKED_STAGES[1])

    def test_all_probed_bits_zero_leaves_state_unchanged(self):
        # Answer 7 sits above every probed midpoint (3, 5, 4).
        inst = OrderedInstance(8, 7)
        state = team_state(WORKED_STAGES[0])
        out = ts.apply_team_query(state, inst)
        assert diff_norm(out, state) < 1e-12

    def test_double_application_restores_the_state(self):
        inst = OrderedInstance(8, 5)
        state = team_state(WORKED_STAGES[0])
        twice = ts.apply_team_query(ts.apply_team_query(state, inst), inst)
        assert diff_norm(twice, state) < 1e-12

    def test_costs_exactly_one_oracle_call(self, monkeypatch):
        from qordsearch import oracle as oracle_mod

        calls = []
        real = oracle_mod.apply_query

        def counting(state, inst):
            calls.append(1)
            return real(state, inst)

        monkeypatch.setattr(ts.oracle_mod, "apply_query", counting)
        ts.apply_team_query(team_state(WORKED_STAGES[0]), OrderedInstance(8, 5))
        assert len(calls) == 1

    def test_rejects_undefined_query_index(self):
        inst = OrderedInstance(8, 5)
        with pytest.raises(ValueError):
            ts.apply_team_query(team_state({(0, 5, 5): 1.0}), inst)

    def test_rejects_general_labels(self):
        from qordsearch.qcore import GenLabel

        inst = OrderedInstance(8, 5)
        with pytest.raises(TypeError):
            ts.apply_team_query(SparseState.unit(GenLabel(0, 0)), inst)


class TestCombineRound:
    def test_worked_trace_stage_by_stage(self):
        inst = OrderedInstance(8, 5)
        final, stages = ts.run_combine_round(
            team_state(WORKED_STAGES[0]), inst, record_stages=True
        )
        assert len(stages) == len(WORKED_STAGES)
        for got, expected in zip(stages, WORKED_STAGES):
            assert_stage(got, expected)
        assert_stage(final, WORKED_STAGES[-1])

    @pytest.mark.parametrize("n", [2, 4, 8, 32])
    def test_exhaustive_exactness(self, n):
        r = ts.default_team_size(n)
        for inst in enumerate_instances(n):
            final = ts.run_combine_round(ts.opening_state(inst, r), inst)
            labels = final.labels()
            assert len(labels) == 1
            label = labels[0]
            assert (label.lo, label.hi) == (inst.answer, inst.answer)
            assert abs(abs(final.amplitude(label)) - 1.0) < 1e-12

    @pytest.mark.parametrize("n", [8, 32])
    def test_norm_preserved_at_every_stage(self, n):
        for inst in enumerate_instances(n):
            opening = ts.opening_state(inst, ts.default_team_size(n))
            _, stages = ts.run_combine_round(opening, inst, record_stages=True)
            for stage in stages:
                assert abs(stage.squared_norm() - 1.0) < 1e-12

    def test_stage_files_round_trip(self, tmp_path):
        inst = OrderedInstance(8, 5)
        _, stages = ts.run_combine_round(
            team_state(WORKED_STAGES[0]), inst, record_stages=True
        )
        paths = ts.write_stage_files(stages, tmp_path / "trace")
        assert [p.name for p in paths] == [f"stage_{k:02d}.txt" for k in range(7)]
        assert paths[0].read_text() == stages[0].dump()
        assert paths[-1].read_text() == "0|5,5\t0.99999999999999989\t0\n"


class TestOpeningState:
    def test_worked_example_opening(self):
        opening = ts.opening_state(OrderedInstance(8, 5), 4)
        assert_stage(opening, WORKED_STAGES[0])

    def test_single_computer_opening(self):
        opening = ts.opening_state(OrderedInstance(2, 1), 1)
        assert_stage(opening, {(0, 0, 1): 1.0})

    def test_level_masses_are_one_over_r(self):
        opening = ts.opening_state(OrderedInstance(32, 13), 4)
        masses = sorted(abs(a) ** 2 for _, a in opening.items())
        assert len(masses) == 3
        assert abs(masses[0] - 1 / 4) < 1e-12
        assert abs(masses[1] - 1 / 4) < 1e-12
        assert abs(masses[2] - 2 / 4) < 1e-12

    def test_intervals_nest_down_to_the_answer(self):
        inst = OrderedInstance(32, 13)
        opening = ts.opening_state(inst, 4)
        intervals = sorted(
            ((l.lo, l.hi) for l in opening.labels()), key=lambda t: t[0] - t[1]
        )
        assert intervals == [(8, 15), (12, 15), (12, 13)]
        for lo, hi in intervals:
            assert lo <= inst.answer <= hi


def deduced_interval(known_positions, inst):
    """0-based candidate interval for the answer given known bit values."""
    lo, hi = 0, None
    for position in sorted(known_positions):
        index = position - 1
        if inst.bit(index) == 0:
            lo = index + 1
        elif hi is None:
            hi = index
    return lo, hi


class TestLayout:
    def test_figure_counts_for_four_computers(self):
        layout = ts.build_layout(4, 32)
        assert layout.bit_counts() == [11, 11, 11, 11]
        assert layout.computers[0] == frozenset(
            {8, 12, 16, 18, 20, 22, 24, 26, 28, 30, 32}
        )

    def test_single_computer_knows_only_the_last_bit(self):
        layout = ts.build_layout(1, 2)
        assert layout.computers == (frozenset({2}),)

    def test_two_computers_know_three_bits_each(self):
        layout = ts.build_layout(2, 8)
        assert layout.bit_counts() == [3, 3]
        assert layout.computers[0] == frozenset({4, 6, 8})
        assert layout.computers[1] == frozenset({2, 4, 8})

    @pytest.mark.parametrize("r", [1, 2, 4, 8])
    def test_knowledge_size_formula(self, r):
        layout = ts.build_layout(r, 2 * r * r)
        expected = ts.team_knowledge_size(r)
        assert all(count == expected for count in layout.bit_counts())

    def test_rejects_bad_combinations(self):
        with pytest.raises(ValueError):
            ts.build_layout(3, 18)
        with pytest.raises(ValueError):
            ts.build_layout(4, 16)

    def test_jsonable_shape(self):
        data = ts.build_layout(2, 8).to_jsonable()
        assert data == {
            "r": 2,
            "n_list": 8,
            "computers": [[4, 6, 8], [2, 4, 8]],
        }

    def test_layout_knowledge_reproduces_the_opening_intervals(self):
        # Reading each computer's known bits off any instance pins exactly
        # the interval its level holds in the opening superposition.
        r, n = 4, 32
        layout = ts.build_layout(r, n)
        for inst in enumerate_instances(n):
            opening = ts.opening_state(inst, r)
            opening_intervals = []
            for label, amp in opening.items():
                copies = round(abs(amp) ** 2 * r)
                opening_intervals += [(label.lo, label.hi)] * copies
            deduced = sorted(
                deduced_interval(bits, inst) for bits in layout.computers
            )
            assert deduced == sorted(opening_intervals)


class TestSteppableAlgorithms:
    @pytest.mark.parametrize("n", [2, 4, 8, 16])
    def test_binary_search_is_exact(self, n):
        algo = ts.BinarySearchAlgorithm(n)
        assert algo.num_queries == n.bit_length() - 1
        for inst in enumerate_instances(n):
            result = ts.run_algorithm(algo, inst)
            assert result.answer == inst.answer
            assert abs(result.probability - 1.0) < 1e-12
            assert result.queries == algo.num_queries

    def test_binary_search_rejects_non_powers(self):
        with pytest.raises(ValueError):
            ts.BinarySearchAlgorithm(6)

    @pytest.mark.parametrize("n", [2, 8, 32])
    def test_team_combine_matches_direct_round(self, n):
        algo = ts.TeamCombineAlgorithm(n)
        for inst in enumerate_instances(n):
            stepped = algo.advance(0, algo.initial_state(inst), inst)
            direct = ts.run_combine_round(
                ts.opening_state(inst, algo.r), inst
            )
            assert diff_norm(stepped, direct) < 1e-12

    def test_team_combine_uses_one_query(self):
        assert ts.TeamCombineAlgorithm(8).num_queries == 1

    def test_unsupported_team_sizes_rejected(self):
        with pytest.raises(ValueError):
            ts.TeamCombineAlgorithm(16)  # not 2*r*r for a power-of-two r
        with pytest.raises(ValueError):
            ts.TeamCombineAlgorithm(6)

    def test_answer_of_rejects_unfinished_labels(self):
        algo = ts.TeamCombineAlgorithm(8)
        with pytest.raises(ValueError):
            algo.answer_of(TeamLabel(0, 4, 5))


def brute_force_known_bits(n, j):
    """Independent oracle for explicit knowledge after j classical queries.

    A 1-based position is explicitly known if, for every instance, all
    instances consistent with that instance's first j query answers agree on
    the bit there.
    """
    instances = enumerate_instances(n)
    known = set(range(1, n + 1))
    for inst in instances:
        trace = ts.classical_binary_search(inst)
        observed = [(q, inst.bit(q)) for q in trace.queried[:j]]
        consistent = [
            other
            for other in instances
            if all(other.bit(q) == v for q, v in observed)
        ]
        deduced = {
            p
            for p in range(1, n + 1)
            if len({other.bit(p - 1) for other in consistent}) == 1
        }
        known &= deduced
    return frozenset(known)


class TestClassicalReference:
    def test_query_counts(self):
        for inst in enumerate_instances(8):
            assert len(ts.classical_binary_search(inst).queried) == 3
        assert len(ts.classical_binary_search(OrderedInstance(2, 0)).queried) == 1

    def test_answers(self):
        for n in (1, 2, 16):
            for inst in enumerate_instances(n):
                assert ts.classical_binary_search(inst).answer == inst.answer

    def test_known_bits_after_two_queries_on_eight(self):
        trace = ts.classical_binary_search(OrderedInstance(8, 5))
        assert trace.known[2] == frozenset({2, 4, 6, 8})

    @pytest.mark.parametrize("n,j", [(8, 0), (8, 1), (8, 2), (8, 3), (16, 2), (16, 4)])
    def test_known_bits_formula_matches_brute_force_deduction(self, n, j):
        assert ts.known_bits_after(n, j) == brute_force_known_bits(n, j)

    @pytest.mark.parametrize("exponent", range(0, 17))
    def test_known_set_sizes_double_each_query(self, exponent):
        n = 1 << exponent
        for j in range(exponent + 1):
            assert len(ts.known_bits_after(n, j)) == 1 << j


class TestDecomposition:
    def test_digit_values(self):
        assert [ts.base_value(k) for k in range(6)] == [1, 3, 11, 43, 171, 683]

    def test_unit(self):
        assert ts.decompose(1).digits == (1,)

    def test_eleven_is_a_pure_digit(self):
        assert ts.decompose(11).digits == (0, 0, 1)

    def test_fourteen_greedy_takes_the_largest_values_first(self):
        # 14 = 11 + 3; the greedy rule prefers the value-3 digit over three
        # value-1 units.
        decomposition = ts.decompose(14)
        assert decomposition.digits == (0, 1, 1)
        assert decomposition.value() == 14

    @given(st.integers(1, 10**9))
    @settings(max_examples=200, deadline=None)
    def test_round_trip_and_digit_cap(self, m):
        decomposition = ts.decompose(m)
        assert decomposition.value() == m
        assert all(0 <= d <= 3 for d in decomposition.digits)
        assert decomposition.digits[-1] != 0

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            ts.decompose(0)


class TestExpansion:
    def test_figure_anchor_eleven_to_thirty_two(self):
        step = ts.expansion(11)
        assert step.m_next == 32
        assert step.factor == 32 / 11

    def test_single_bit_doubles(self):
        assert ts.expansion(1) == (2, 2.0)

    def test_pure_form_683(self):
        step = ts.expansion(683)
        assert step.m_next == 2048
        assert abs(step.factor - float(Fraction(2048, 683))) < 1e-15

    @given(st.integers(1, 10**7))
    @settings(max_examples=200, deadline=None)
    def test_factor_respects_the_guaranteed_floor(self, m):
        step = ts.expansion(m)
        floor = ts.expansion_floor(ts.decompose(m).top)
        assert step.factor >= floor - 1e-12

    def test_factor_approaches_three(self):
        assert ts.expansion(ts.base_value(10)).factor > 2.99999


class TestQueryCountModel:
    def test_two_costs_one_query(self):
        assert ts.query_count_model(2) == (1, (1, 2))

    def test_seeded_from_figure_layout(self):
        result = ts.query_count_model(32, start=11)
        assert result.queries == 1
        assert result.trace == (11, 32)

    def test_ceil_log3_matches_powers(self):
        for q in range(12):
            assert ts.ceil_log3(3**q) == q
            assert ts.ceil_log3(3**q + 1) == q + 1

    @pytest.mark.parametrize("exponent", [1, 5, 10, 20])
    def test_overhead_is_small(self, exponent):
        n = 1 << exponent
        result = ts.query_count_model(n)
        assert result.queries <= ts.ceil_log3(n) + 3
        assert result.trace[-1] >= n
