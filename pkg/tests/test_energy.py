from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrfkit import (
    CompositionError,
    EnergyFunction,
    InvalidLabelingError,
    MissingNeighborError,
    PartialLabeling,
    compose,
    condition,
    delta_energy,
    evaluate,
    evaluate_many,
    expansion_subproblem,
    instance_from_dict,
    instance_to_dict,
    is_submodular,
    load_instance,
    neighborhood,
    save_instance,
)
from mrfkit.errors import DomainError

from conftest import potts


def small_instance(seed: int, n_max: int = 6, l_max: int = 3) -> EnergyFunction:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, n_max + 1))
    counts = rng.integers(1, l_max + 1, size=n)
    unaries = [rng.uniform(-2, 2, size=c) for c in counts]
    edges, tables = [], []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < 0.5:
                edges.append((u, v))
                tables.append(rng.uniform(-2, 2, size=(counts[u], counts[v])))
    return EnergyFunction(counts, unaries, edges, tables)


def all_labelings(energy: EnergyFunction):
    return itertools.product(*[range(int(c)) for c in energy.label_counts])


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def test_evaluate_worked_examples(two_node_chain):
    assert evaluate(two_node_chain, [0, 0]) == 0.0
    assert evaluate(two_node_chain, [1, 1]) == pytest.approx(3.0)


def test_evaluate_all_zero_tables():
    energy = EnergyFunction([2, 3], [[0, 0], [0, 0, 0]], [(0, 1)], [np.zeros((2, 3))])
    for x in all_labelings(energy):
        assert evaluate(energy, list(x)) == 0.0


def test_evaluate_rejects_bad_labelings(two_node_chain):
    with pytest.raises(InvalidLabelingError):
        evaluate(two_node_chain, [0])
    with pytest.raises(InvalidLabelingError):
        evaluate(two_node_chain, [0, 2])


def test_evaluate_many_matches_scalar():
    energy = small_instance(3)
    xs = np.array(list(all_labelings(energy)))
    batch = evaluate_many(energy, xs)
    for row, e in zip(xs, batch):
        assert e == pytest.approx(evaluate(energy, row))


# ---------------------------------------------------------------------------
# compose
# ---------------------------------------------------------------------------


def test_compose_disjoint_union():
    out = compose(PartialLabeling({1: 0}), PartialLabeling({2: 1}))
    assert dict(out.items()) == {1: 0, 2: 1}


def test_compose_identity():
    out = compose(PartialLabeling({}), PartialLabeling({2: 1}))
    assert dict(out.items()) == {2: 1}


def test_compose_overlap_rejected():
    with pytest.raises(CompositionError):
        compose(PartialLabeling({1: 0}), PartialLabeling({1: 1}))


@given(st.data())
@settings(max_examples=30, deadline=None)
def test_compose_associative_on_disjoint_supports(data):
    nodes = list(range(9))
    labels = data.draw(st.lists(st.integers(0, 3), min_size=9, max_size=9))
    split = data.draw(st.lists(st.integers(0, 2), min_size=9, max_size=9))
    parts = [{}, {}, {}]
    for i, (lab, grp) in enumerate(zip(labels, split)):
        parts[grp][i] = lab
    a, b, c = (PartialLabeling(p) for p in parts)
    left = compose(compose(a, b), c)
    right = compose(a, compose(b, c))
    assert left == right


# ---------------------------------------------------------------------------
# delta_energy
# ---------------------------------------------------------------------------


def test_delta_energy_worked_examples(two_node_chain):
    assert delta_energy(two_node_chain, 0, 0, 1, {1: 0}) == pytest.approx(2.0)
    assert delta_energy(two_node_chain, 0, 0, 1, {1: 1}) == pytest.approx(0.0)


def test_delta_energy_self_substitution_is_zero():
    energy = small_instance(11)
    for i in range(energy.num_nodes):
        z = {j: 0 for j in energy.neighbors(i)}
        assert delta_energy(energy, i, 0, 0, z) == 0.0


def test_delta_energy_requires_full_neighborhood(two_node_chain):
    with pytest.raises(MissingNeighborError):
        delta_energy(two_node_chain, 0, 0, 1, {})


@given(st.integers(0, 400))
@settings(max_examples=40, deadline=None)
def test_delta_energy_matches_full_energy_difference(seed):
    energy = small_instance(seed)
    rng = np.random.default_rng(seed + 1)
    i = int(rng.integers(energy.num_nodes))
    L_i = int(energy.label_counts[i])
    x_i, y_i = int(rng.integers(L_i)), int(rng.integers(L_i))
    full = np.array([rng.integers(c) for c in energy.label_counts])
    z = {j: int(full[j]) for j in energy.neighbors(i)}

    with_x = full.copy()
    with_x[i] = x_i
    with_y = full.copy()
    with_y[i] = y_i
    expected = evaluate(energy, with_y) - evaluate(energy, with_x)
    assert delta_energy(energy, i, x_i, y_i, z) == pytest.approx(expected, abs=1e-9)


# ---------------------------------------------------------------------------
# neighborhood
# ---------------------------------------------------------------------------


def test_neighborhood_chain_cases(three_node_chain):
    assert neighborhood(three_node_chain, {1}) == {0, 2}
    assert neighborhood(three_node_chain, {0, 1, 2}) == frozenset()
    assert neighborhood(three_node_chain, {0}) == {1}


# ---------------------------------------------------------------------------
# condition
# ---------------------------------------------------------------------------


def test_condition_folds_cross_edges(two_node_chain):
    cond = condition(two_node_chain, PartialLabeling({0: 0}))
    assert cond.energy.num_nodes == 1
    assert cond.energy.unaries[0] == pytest.approx([0.0, 3.0])
    assert cond.constant == pytest.approx(0.0)


def test_condition_empty_is_identity(two_node_chain):
    cond = condition(two_node_chain, PartialLabeling({}))
    assert cond.energy.num_nodes == 2
    assert cond.constant == 0.0
    for x in all_labelings(two_node_chain):
        assert evaluate(cond.energy, list(x)) == pytest.approx(evaluate(two_node_chain, list(x)))


def test_condition_everything_leaves_constant(two_node_chain):
    cond = condition(two_node_chain, PartialLabeling({0: 0, 1: 0}))
    assert cond.energy.num_nodes == 0
    assert cond.constant == pytest.approx(0.0)
    cond2 = condition(two_node_chain, PartialLabeling({0: 1, 1: 1}))
    assert cond2.constant == pytest.approx(3.0)


@given(st.integers(0, 400))
@settings(max_examples=40, deadline=None)
def test_condition_round_trip(seed):
    energy = small_instance(seed)
    rng = np.random.default_rng(seed + 7)
    fixed = {}
    for i in range(energy.num_nodes):
        if rng.random() < 0.5:
            fixed[i] = int(rng.integers(energy.label_counts[i]))
    part = PartialLabeling(fixed)
    cond = condition(energy, part)
    for y in itertools.product(*[range(int(energy.label_counts[i])) for i in cond.kept]):
        full = cond.full_labeling(list(y))
        assert evaluate(cond.energy, list(y)) + cond.constant == pytest.approx(
            evaluate(energy, full), abs=1e-9
        )


# ---------------------------------------------------------------------------
# expansion_subproblem
# ---------------------------------------------------------------------------


def test_expansion_degenerate_move():
    energy = EnergyFunction([2, 2], [[0.0, 1.0], [2.0, 0.0]], [(0, 1)], [potts(0.7)])
    current = [1, 1]
    sub = expansion_subproblem(energy, current, 1)
    t = sub.energy.pairwise[0]
    assert np.allclose(t, t[0, 0])
    assert evaluate(sub.energy, [0, 0]) + sub.constant == pytest.approx(evaluate(energy, current))


def test_expansion_worked_example(two_node_chain):
    sub = expansion_subproblem(two_node_chain, [1, 1], 0)
    assert evaluate(sub.energy, [1, 1]) + sub.constant == pytest.approx(0.0)
    assert evaluate(sub.energy, [0, 0]) + sub.constant == pytest.approx(3.0)


def test_expansion_potts_edge_gives_potts_table():
    energy = EnergyFunction(
        [3, 3], [[0.0] * 3, [0.0] * 3], [(0, 1)], [potts(2.5, labels=3)]
    )
    sub = expansion_subproblem(energy, [1, 1], 0)
    assert sub.energy.pairwise[0] == pytest.approx(np.array([[0.0, 2.5], [2.5, 0.0]]))


@given(st.integers(0, 400))
@settings(max_examples=40, deadline=None)
def test_expansion_round_trip(seed):
    energy = small_instance(seed)
    rng = np.random.default_rng(seed + 13)
    current = [int(rng.integers(c)) for c in energy.label_counts]
    alpha = int(rng.integers(energy.max_labels))
    sub = expansion_subproblem(energy, current, alpha)
    for b in itertools.product([0, 1], repeat=len(sub.active)):
        full = sub.to_full(list(b))
        assert evaluate(sub.energy, list(b)) + sub.constant == pytest.approx(
            evaluate(energy, full), abs=1e-9
        )


def test_expansion_skips_nodes_without_alpha():
    energy = EnergyFunction(
        [3, 2],
        [[0.0, 1.0, 2.0], [0.0, 1.0]],
        [(0, 1)],
        [np.arange(6, dtype=float).reshape(3, 2)],
    )
    sub = expansion_subproblem(energy, [0, 0], 2)
    assert sub.active == (0,)
    for b in ([0], [1]):
        assert evaluate(sub.energy, b) + sub.constant == pytest.approx(
            evaluate(energy, sub.to_full(b))
        )


# ---------------------------------------------------------------------------
# is_submodular
# ---------------------------------------------------------------------------


def test_potts_tables_are_submodular():
    energy = EnergyFunction([2, 2], [[0, 0], [0, 0]], [(0, 1)], [potts(1.5)])
    assert is_submodular(energy)


def test_diagonal_reward_is_not_submodular():
    energy = EnergyFunction(
        [2, 2], [[0, 0], [0, 0]], [(0, 1)], [np.array([[0.0, 0.0], [0.0, 1.0]])]
    )
    assert not is_submodular(energy)


def test_edge_free_energy_is_submodular():
    assert is_submodular(EnergyFunction([2], [[0, 1]]))


def test_submodularity_requires_binary():
    energy = EnergyFunction([3], [[0, 0, 0]])
    with pytest.raises(DomainError):
        is_submodular(energy)


# ---------------------------------------------------------------------------
# construction invariants and interchange format
# ---------------------------------------------------------------------------


def test_duplicate_edges_rejected():
    with pytest.raises(ValueError):
        EnergyFunction(
            [2, 2], [[0, 0], [0, 0]], [(0, 1), (1, 0)], [potts(1.0), potts(1.0)]
        )


def test_self_loops_rejected():
    with pytest.raises(ValueError):
        EnergyFunction([2, 2], [[0, 0], [0, 0]], [(1, 1)], [potts(1.0)])


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        EnergyFunction([2, 3], [[0, 0], [0, 0, 0]], [(0, 1)], [np.zeros((2, 2))])


def test_non_finite_values_rejected():
    with pytest.raises(ValueError):
        EnergyFunction([2], [[0.0, np.inf]])


def test_edge_orientation_is_normalized():
    t = np.array([[1.0, 2.0], [3.0, 4.0]])
    a = EnergyFunction([2, 2], [[0, 0], [0, 0]], [(1, 0)], [t])
    assert a.edges == [(0, 1)]
    assert a.pair_table(0, 1) == pytest.approx(t.T)
    assert a.pair_table(1, 0) == pytest.approx(t)


def test_adjacency_is_symmetric_and_sorted():
    energy = small_instance(21)
    for i, nbs in enumerate(energy.adjacency):
        assert nbs == sorted(nbs)
        for j in nbs:
            assert i in energy.adjacency[j]


def test_json_round_trip(tmp_path):
    energy = small_instance(5)
    data = instance_to_dict(energy)
    back = instance_from_dict(json.loads(json.dumps(data)))
    assert back.num_nodes == energy.num_nodes
    assert back.edges == energy.edges
    for x in all_labelings(energy):
        assert evaluate(back, list(x)) == pytest.approx(evaluate(energy, list(x)))

    path = tmp_path / "inst.json"
    save_instance(energy, path)
    again = load_instance(path)
    assert instance_to_dict(again) == data
