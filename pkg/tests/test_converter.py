import itertools
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indexrl.converter import (
    IDX,
    NOOP,
    PAD,
    RewardModel,
    Scheme,
    Vocabulary,
    action_space_size,
    decode_compact,
    decode_permutation,
    permutation_order,
    to_flat_state,
    to_matrix_state,
    to_reward,
)
from indexrl.dbsim import IndexSet, create_index, reset
from indexrl.schema import Index, load_schema, sample_query

from conftest import q

L = "LINEITEM"


@pytest.fixture(scope="module")
def vocab():
    return Vocabulary.from_schema(load_schema())


def perm_matrix(order):
    """Hard matrix placing slot order[j] at position j."""
    n = len(order)
    P = np.zeros((n, n))
    P[list(order), np.arange(n)] = 1.0
    return P


def test_vocabulary_bijection(vocab):
    assert vocab[PAD] == 0
    assert len(vocab) == 6 + 2 * 16
    assert sorted(vocab.token_to_id.values()) == list(range(len(vocab)))
    assert vocab.decode(vocab.ids(["L_PARTKEY", "=", "L_PARTKEY_idx"])) == ["L_PARTKEY", "=", "L_PARTKEY_idx"]


def test_vocabulary_requires_pad_first():
    with pytest.raises(ValueError):
        Vocabulary(["IDX", PAD])


def test_flat_state_query_tokens(vocab, lineitem):
    query = q(L, ("L_PARTKEY", "="), ("L_ORDERKEY", "="))
    ctx = IndexSet(L, ())
    st_ = to_flat_state(query, ctx, vocab)
    expected = vocab.ids(["L_PARTKEY", "=", "L_ORDERKEY", "="])
    assert list(st_.token_ids[:4]) == expected
    assert np.all(st_.token_ids[4:] == 0) and len(st_.token_ids) == 32


def test_flat_state_context_filter(vocab):
    query = q(L, ("L_PARTKEY", "="), ("L_ORDERKEY", "="))
    shared = Index(L, ("L_SHIPINSTRUCT", "L_ORDERKEY"))
    unrelated = Index(L, ("L_TAX",))
    st_ = to_flat_state(query, IndexSet(L, (shared, unrelated)), vocab)
    toks = [t for t in vocab.decode(st_.token_ids) if t != PAD]
    assert toks == ["L_PARTKEY", "=", "L_ORDERKEY", "=", IDX, "L_SHIPINSTRUCT_idx", "L_ORDERKEY_idx"]


def test_flat_state_overflow_truncates(vocab, caplog):
    query = q(L, ("L_PARTKEY", "="), ("L_ORDERKEY", "="))
    ctx = IndexSet(L, tuple(Index(L, ("L_PARTKEY", a)) for a in
                            ("L_TAX", "L_SUPPKEY", "L_QUANTITY", "L_DISCOUNT", "L_SHIPMODE",
                             "L_COMMENT", "L_SHIPDATE", "L_RECEIPTDATE")))
    st_ = to_flat_state(query, ctx, vocab, length=16)
    assert st_.truncated and len(st_.token_ids) == 16 and np.all(st_.token_ids != 0)


def test_matrix_state_worked_example(vocab):
    # relevance rule: context runs appear in the row of every attribute the index contains
    query = q(L, ("L_PARTKEY", "="), ("L_ORDERKEY", "="))
    ctx = IndexSet(L, (Index(L, ("L_SHIPINSTRUCT", "L_ORDERKEY")),))
    m = to_matrix_state(query, ctx, vocab)
    rows = [[t for t in vocab.decode(r)] for r in m.rows]
    assert rows[0] == ["L_PARTKEY", "="] + [PAD] * 6
    assert rows[1] == ["L_ORDERKEY", "=", IDX, "L_SHIPINSTRUCT_idx", "L_ORDERKEY_idx"] + [PAD] * 3
    assert rows[2] == [PAD] * 8
    assert rows[3] == [NOOP] + [PAD] * 7


def test_matrix_state_single_predicate(vocab):
    m = to_matrix_state(q(L, ("L_TAX", "<")), IndexSet(L, ()), vocab)
    assert m.rows.shape == (4, 8) and m.n_predicates == 1
    assert vocab.decode(m.rows[0][:2]) == ["L_TAX", "<"]
    assert np.all(m.rows[1:3] == 0)
    assert m.rows[3, 0] == vocab[NOOP]


def test_matrix_state_two_runs_in_one_row(vocab):
    query = q(L, ("L_PARTKEY", "="))
    ctx = IndexSet(L, (Index(L, ("L_PARTKEY",)), Index(L, ("L_TAX", "L_PARTKEY"))))
    row = vocab.decode(to_matrix_state(query, ctx, vocab).rows[0])
    assert row == ["L_PARTKEY", "=", IDX, "L_PARTKEY_idx", IDX, "L_TAX_idx", "L_PARTKEY_idx", PAD]


def test_matrix_state_rejects_too_many_predicates(vocab):
    query = q(L, ("L_PARTKEY", "="), ("L_TAX", "="), ("L_SUPPKEY", "="), ("L_QUANTITY", "="))
    with pytest.raises(ValueError):
        to_matrix_state(query, IndexSet(L, ()), vocab, n_max=3)


def test_decode_compact_examples():
    query = q(L, ("L_PARTKEY", "="), ("L_ORDERKEY", "="))
    assert decode_compact((1, 0, 0), query).keys == ("L_PARTKEY",)
    assert decode_compact((0, 0, 0), query) is None
    assert decode_compact((1, 1, 2), query).keys == ("L_PARTKEY", "L_ORDERKEY")
    assert decode_compact((3, 0, 0), query) is None  # nonexistent attribute: stream no-op
    assert decode_compact((3, 2, 0), query).keys == ("L_ORDERKEY",)


def test_decode_permutation_examples():
    query = q(L, ("L_PARTKEY", "="), ("L_ORDERKEY", "="))
    assert decode_permutation(np.eye(4), query).keys == ("L_PARTKEY", "L_ORDERKEY")
    assert decode_permutation(perm_matrix([3, 0, 1, 2]), query) is None
    assert decode_permutation(perm_matrix([1, 3, 0, 2]), query).keys == ("L_ORDERKEY",)
    # a pad slot ends the prefix like the no-op slot
    assert decode_permutation(perm_matrix([1, 2, 0, 3]), query).keys == ("L_ORDERKEY",)


def test_permutation_order_rejects_non_permutation():
    with pytest.raises(ValueError):
        permutation_order(np.full((3, 3), 1 / 3))


def test_action_space_sizes():
    assert action_space_size(3, Scheme.COMBINATORIAL) == 16
    assert action_space_size(4, Scheme.COMBINATORIAL) == 65
    assert action_space_size(3, Scheme.COMPACT, 3) == 64
    assert action_space_size(0) == 1


def _prefixes_of_permutations(attrs):
    out = {None}
    for perm in itertools.permutations(attrs):
        for k in range(1, len(perm) + 1):
            out.add(tuple(perm[:k]))
    return out


def test_permutation_outcomes_equal_combinatorial_space():
    query = q(L, ("L_PARTKEY", "="), ("L_ORDERKEY", "="), ("L_TAX", "<"))
    outcomes = set()
    for order in itertools.permutations(range(4)):
        ix = decode_permutation(perm_matrix(order), query)
        outcomes.add(None if ix is None else ix.keys)
    assert len(outcomes) == 16
    assert outcomes == _prefixes_of_permutations(query.attributes)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), choices=st.lists(st.integers(0, 3), min_size=3, max_size=3))
def test_decoders_emit_legal_indices(seed, choices):
    s = load_schema()
    rng = np.random.default_rng(seed)
    query = sample_query(s, rng)
    legal = _prefixes_of_permutations(query.attributes)
    ix = decode_compact(choices, query)
    assert ix is None or (len(set(ix.keys)) == len(ix.keys) and set(ix.keys) <= set(query.attributes))
    order = rng.permutation(4)
    jx = decode_permutation(perm_matrix(order), query)
    assert (None if jx is None else jx.keys) in legal


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_encoding_is_deterministic_and_in_vocab(seed):
    s = load_schema()
    v = Vocabulary.from_schema(s)
    rng = np.random.default_rng(seed)
    ctx = reset(s)
    for _ in range(3):
        ctx, _ = create_index(ctx, Index(L, tuple(sample_query(s, rng).attributes)), s)
    query = sample_query(s, rng)
    a, b = to_flat_state(query, ctx, v), to_flat_state(query, ctx, v)
    assert np.array_equal(a.token_ids, b.token_ids)
    m = to_matrix_state(query, ctx, v)
    assert m.rows.max() < len(v) and a.token_ids.max() < len(v)
    for i, p in enumerate(query.predicates):
        assert m.rows[i, 0] == v[p.attribute]


def test_reward_examples(lineitem):
    model = RewardModel.for_schema(lineitem)
    assert to_reward(0, 0, model) == 0.0
    S, Lat = 7_200_000, 1234.0
    diff = to_reward(S, Lat, model) - to_reward(0, Lat, model)
    assert diff == pytest.approx(-model.w_size * S / model.size_scale)
    m2 = RewardModel(model.w_size, 2 * model.w_latency, model.size_scale, model.latency_scale)
    assert (to_reward(0, Lat, m2)) == pytest.approx(2 * to_reward(0, Lat, model))
    assert model.latency_scale == 600000
    with pytest.raises(ValueError):
        to_reward(-1, 0, model)
    with pytest.raises(ValueError):
        to_reward(0, -1, model)
