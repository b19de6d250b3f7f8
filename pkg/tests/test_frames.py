import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from cartframes.errors import (
    EnumerationCapError,
    UnknownIdentifierError,
    ValidationError,
)
from cartframes.frames import (
    OPERATORS,
    CartesianFrame,
    controls,
    ensures,
    enumerate_operator,
    image,
    inevitable,
    observes,
    operator_table,
    outcome,
    prevents,
)

W9 = {f"w{i}" for i in range(1, 10)}


def tiny_frame():
    return CartesianFrame.build(["a"], ["e"], [["w"]])


def empty_action_frame():
    return CartesianFrame.build([], ["e1", "e2"], [], worlds=["w1", "w2"])


# -- construction and lookup ---------------------------------------------------


def test_outcome_matches_matrix(grid3):
    assert outcome(grid3, "a1", "e2") == "w2"
    assert outcome(grid3, "a3", "e1") == "w7"


def test_outcome_single_cell():
    assert outcome(tiny_frame(), "a", "e") == "w"


@pytest.mark.parametrize("action,env", [("nope", "e1"), ("a1", "nope")])
def test_outcome_unknown_identifier_is_named(grid3, action, env):
    with pytest.raises(UnknownIdentifierError) as err:
        outcome(grid3, action, env)
    assert "nope" in str(err.value)


def test_build_rejects_partial_outcome_map():
    with pytest.raises(ValidationError):
        CartesianFrame.build(["a1", "a2"], ["e1"], {("a1", "e1"): "w1"})


def test_build_rejects_foreign_outcome_value():
    with pytest.raises(ValidationError):
        CartesianFrame.build(["a1"], ["e1"], [["w1"]], worlds=["w2"])


def test_build_requires_envs():
    with pytest.raises(ValidationError):
        CartesianFrame.build(["a1"], [], [[]])


def test_matrix_is_readonly(grid3):
    with pytest.raises(ValueError):
        grid3.matrix[0, 0] = 3


# -- image ----------------------------------------------------------------------


def test_image_all_distinct(grid3):
    assert image(grid3) == W9


def test_image_empty_without_actions():
    assert image(empty_action_frame()) == frozenset()


def test_image_constant_matrix():
    f = CartesianFrame.build(
        ["a1", "a2"], ["e1", "e2"], [["w1", "w1"], ["w1", "w1"]]
    )
    assert image(f) == {"w1"}


# -- membership predicates -------------------------------------------------------


def test_ensures_examples(grid3):
    assert ensures(grid3, {"w1", "w2", "w3"}) is True
    assert ensures(grid3, {"w1", "w2"}) is False


def test_ensure_count_from_brute_force(grid3, grid3_raw):
    actions, envs, worlds, out = grid3_raw
    oracle_count = sum(
        oracles.o_ensures(actions, envs, out, s) for s in oracles.all_subsets(worlds)
    )
    assert oracle_count == 169
    impl_count = sum(
        ensures(grid3, s) for s in oracles.all_subsets(grid3.worlds)
    )
    assert impl_count == oracle_count


def test_prevents_examples(grid3):
    assert prevents(grid3, {"w1", "w2", "w3"}) is True
    assert prevents(grid3, {"w1", "w4", "w7"}) is False
    assert prevents(grid3, set()) is True


def test_controls_examples(grid3):
    assert controls(grid3, {"w1", "w2", "w3"}) is True
    assert controls(grid3, set()) is False
    assert controls(grid3, W9) is False


def test_observes_trivial_sets(grid3):
    assert observes(grid3, W9) is True
    assert observes(grid3, set()) is True


def test_observes_diagonal_fixed_by_brute_force(grid3, grid3_raw):
    actions, envs, worlds, out = grid3_raw
    diagonal = {"w1", "w5", "w9"}
    oracle = oracles.o_observes(actions, envs, out, diagonal)
    assert oracle is False  # frozen from the oracle
    assert observes(grid3, diagonal) is oracle


def test_inevitable_examples(grid3):
    assert inevitable(grid3, W9) is True
    assert inevitable(grid3, W9 - {"w9"}) is False
    assert inevitable(empty_action_frame(), {"w1", "w2"}) is False


def test_predicates_reject_foreign_world(grid3):
    for pred in (ensures, prevents, controls, observes, inevitable):
        with pytest.raises(ValidationError):
            pred(grid3, {"w1", "zz"})


def test_observes_vacuous_when_no_actions():
    f = empty_action_frame()
    assert observes(f, {"w1"}) is True
    assert ensures(f, {"w1"}) is False
    assert prevents(f, {"w1"}) is False


# -- enumeration -----------------------------------------------------------------


def test_enumerate_ensure_family_size(grid3):
    assert len(enumerate_operator(grid3, "ensure")) == 169


def test_enumerate_single_cell_frame():
    fam = enumerate_operator(tiny_frame(), "ensure")
    assert fam == [frozenset({"w"})]


def test_enumerate_control_is_intersection(grid3):
    ens = set(map(frozenset, enumerate_operator(grid3, "ensure")))
    pre = set(map(frozenset, enumerate_operator(grid3, "prevent")))
    ctrl = list(enumerate_operator(grid3, "control"))
    assert set(ctrl) == ens & pre


def test_enumerate_order_is_by_mask(grid3):
    fam = enumerate_operator(grid3, "ensure")
    masks = [grid3.subset_mask(s) for s in fam]
    assert masks == sorted(masks)


def test_enumerate_cap():
    worlds = [f"w{i}" for i in range(17)]
    f = CartesianFrame.build(["a"], ["e"], [["w0"]], worlds=worlds)
    with pytest.raises(EnumerationCapError) as err:
        enumerate_operator(f, "ensure")
    assert "membership" in str(err.value)
    # a raised cap unblocks it
    assert enumerate_operator(f, "inevitable", cap=17)


def test_enumerate_unknown_operator(grid3):
    with pytest.raises(ValidationError):
        enumerate_operator(grid3, "ensures")


def test_enumerate_matches_membership_on_random_frames():
    rng = random.Random(20240)
    for _ in range(25):
        actions, envs, worlds, out = oracles.random_frame(rng, max_worlds=6)
        frame = CartesianFrame.build(actions, envs, out, worlds=worlds)
        for op in OPERATORS:
            family = set(enumerate_operator(frame, op))
            oracle = set(oracles.o_family(actions, envs, out, worlds, op))
            assert family == oracle, f"{op} family mismatch"


def test_operator_table_empty_actions():
    f = empty_action_frame()
    assert not operator_table(f, "ensure").any()
    assert not operator_table(f, "inevitable").any()
    assert operator_table(f, "observe").all()


# -- invariants ------------------------------------------------------------------


def _random_frames(seed, count, **kw):
    rng = random.Random(seed)
    for _ in range(count):
        actions, envs, worlds, out = oracles.random_frame(rng, **kw)
        yield CartesianFrame.build(actions, envs, out, worlds=worlds), worlds


def test_duality_prevent_is_ensure_of_complement():
    for frame, worlds in _random_frames(7, 50, max_worlds=7):
        for s in oracles.all_subsets(worlds):
            assert prevents(frame, s) == ensures(frame, set(worlds) - s)


def test_ensure_monotone_upward():
    rng = random.Random(11)
    for frame, worlds in _random_frames(13, 30, max_worlds=6):
        for s in oracles.all_subsets(worlds):
            if not ensures(frame, s):
                continue
            extra = [w for w in worlds if w not in s]
            if extra:
                bigger = set(s) | {rng.choice(extra)}
                assert ensures(frame, bigger)


def test_controls_is_conjunction_exhaustive():
    for frame, worlds in _random_frames(23, 30, max_worlds=6):
        for s in oracles.all_subsets(worlds):
            assert controls(frame, s) == (ensures(frame, s) and prevents(frame, s))


def test_inevitable_against_independent_image():
    for frame, worlds in _random_frames(31, 30, max_worlds=6):
        img = image(frame)
        for s in oracles.all_subsets(worlds):
            assert inevitable(frame, s) == (bool(frame.actions) and img <= s)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_observes_full_and_empty_always_true(seed):
    rng = random.Random(seed)
    actions, envs, worlds, out = oracles.random_frame(rng, max_worlds=8)
    frame = CartesianFrame.build(actions, envs, out, worlds=worlds)
    assert observes(frame, set(worlds)) is True
    assert observes(frame, set()) is True


def test_frame_equality_and_hash(grid3):
    again = CartesianFrame.build(
        ["a1", "a2", "a3"],
        ["e1", "e2", "e3"],
        [["w1", "w2", "w3"], ["w4", "w5", "w6"], ["w7", "w8", "w9"]],
    )
    assert again == grid3
    assert hash(again) == hash(grid3)
    assert again != tiny_frame()


def test_backends_agree_on_tables(grid3, monkeypatch):
    tables = {}
    for backend in ("numpy", "numba"):
        monkeypatch.setenv("CARTFRAMES_BACKEND", backend)
        tables[backend] = {op: operator_table(grid3, op) for op in OPERATORS}
    for op in OPERATORS:
        assert np.array_equal(tables["numpy"][op], tables["numba"][op])
