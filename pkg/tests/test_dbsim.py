import csv
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indexrl.dbsim import (
    FULL_SCAN,
    CostModel,
    IndexSet,
    cost,
    cost_matrix,
    create_index,
    index_bytes,
    index_set_bytes,
    reset,
    usable_prefix,
    write_reports_csv,
)
from indexrl.schema import Index, Op, Predicate, Query, SchemaError

from conftest import q, tiny_schema

L = "LINEITEM"


def oracle_prefix(index, query):
    """Largest p with keys[:p] a prefix of some permutation of the query attributes,
    all but the last matched key carrying EQ."""
    ops = {p.attribute: p.op for p in query.predicates}
    best = 0
    for perm in itertools.permutations(query.attributes):
        for k in range(1, len(perm) + 1):
            if tuple(perm[:k]) != tuple(index.keys[:k]):
                break
            if all(ops[a] is Op.EQ for a in perm[: k - 1]):
                best = max(best, k)
    return best


def test_usable_prefix_examples():
    ab = Index("T", ("A", "B"))
    assert usable_prefix(ab, q("T", ("B", "="), ("A", "="))) == 2
    assert usable_prefix(ab, q("T", ("B", "="))) == 0
    abc = Index("T", ("A", "B", "C"))
    assert usable_prefix(abc, q("T", ("A", "="), ("B", "<"))) == 2
    assert usable_prefix(abc, q("T", ("A", "<"), ("B", "="))) == 1


def test_usable_prefix_matches_brute_force_exhaustively():
    attrs = "ABCD"
    ops = list(Op)
    queries = []
    for n in range(1, 4):
        for names in itertools.permutations(attrs, n):
            for os_ in itertools.product(ops, repeat=n):
                queries.append(Query("T", tuple(Predicate(a, o, 0) for a, o in zip(names, os_))))
    indices = [Index("T", k) for n in range(1, 4) for k in itertools.permutations(attrs, n)]
    checked = 0
    for query in queries:
        for ix in indices:
            assert usable_prefix(ix, query) == oracle_prefix(ix, query), (ix, query)
            checked += 1
    assert checked == 768 * 40  # every query with <= 3 predicates x every index with <= 3 keys


def test_selective_single_key_index_beats_scan(lineitem):
    s = reset(lineitem)
    ix = Index(L, ("L_SHIPINSTRUCT",))
    s, _ = create_index(s, ix, lineitem)
    query = q(L, ("L_SHIPINSTRUCT", "="))
    rep = cost(query, s, lineitem)
    # c_probe log2 R + c_fetch R / 4 + c_op
    expected = 50 * math.log2(600000) + 2 * 600000 / 4 + 100
    assert rep.chosen_path == ix
    assert rep.latency == pytest.approx(expected)
    assert rep.latency < 600000


def test_full_scan_when_nothing_usable(lineitem):
    rep = cost(q(L, ("L_TAX", "="), ("L_SHIPMODE", "=")), reset(lineitem), lineitem)
    assert rep.chosen_path == FULL_SCAN
    assert rep.usable_prefix_len == 0
    assert rep.latency == 600000


def test_longer_prefix_candidate_beats_default(lineitem):
    s = reset(lineitem)
    cand = Index(L, ("L_ORDERKEY", "L_SUPPKEY"))
    s, _ = create_index(s, cand, lineitem)
    rep = cost(q(L, ("L_ORDERKEY", "="), ("L_SUPPKEY", "=")), s, lineitem)
    assert rep.chosen_path == cand
    assert rep.usable_prefix_len == 2


def test_tie_break_prefers_fewer_keys_then_lexicographic():
    s = tiny_schema()
    query = q("T", ("A", "="), ("B", "<"))
    two = Index("T", ("A", "C"))  # only A usable: same cost as [A]
    one = Index("T", ("A",))
    iset = IndexSet("T", (two, one))
    assert cost(query, iset, s).chosen_path == one
    x = Index("T", ("B", "A"))
    y = Index("T", ("B", "C"))
    query2 = q("T", ("B", "="))
    assert cost(query2, IndexSet("T", (y, x)), s).chosen_path == x


def test_tie_with_scan_prefers_index():
    s = tiny_schema(row_count=1000, distinct=(1, 2, 3, 4))
    model = CostModel(c_seq=1.0, c_probe=0.0, c_fetch=1.0, c_op=0.0)
    ix = Index("T", ("A",))
    rep = cost(q("T", ("A", "=")), IndexSet("T", (ix,)), s, model)
    assert rep.latency == pytest.approx(1000.0)
    assert rep.chosen_path == ix


def test_report_invariant_scan_iff_zero_prefix(lineitem, rng):
    from indexrl.schema import sample_query
    s = reset(lineitem)
    for a in ("L_PARTKEY", "L_SHIPDATE", "L_QUANTITY"):
        s, _ = create_index(s, Index(L, (a,)), lineitem)
    for _ in range(300):
        rep = cost(sample_query(lineitem, rng), s, lineitem)
        assert (rep.chosen_path == FULL_SCAN) == (rep.usable_prefix_len == 0)


def test_create_index_sizes(lineitem):
    s = reset(lineitem)
    ix = Index(L, ("L_PARTKEY",))
    s2, d = create_index(s, ix, lineitem)
    assert d == 600000 * (4 + 8) == 7_200_000
    s3, d2 = create_index(s2, ix, lineitem)
    assert d2 == 0 and s3 == s2
    s4, d3 = create_index(s2, None, lineitem)
    assert d3 == 0 and s4 == s2


def test_create_index_rejects_unknown_key(lineitem):
    with pytest.raises(SchemaError):
        create_index(reset(lineitem), Index(L, ("L_NOPE",)), lineitem)


def test_reset(lineitem):
    a = reset(lineitem)
    assert a.indices == (lineitem.default_index,)
    assert index_set_bytes(a, lineitem) == index_bytes(lineitem.default_index, lineitem)
    b, _ = create_index(a, Index(L, ("L_TAX",)), lineitem)
    assert reset(lineitem) == a


def test_index_set_rejects_duplicates():
    with pytest.raises(SchemaError):
        IndexSet("T", (Index("T", ("A",)), Index("T", ("A",))))


def test_noise_needs_rng(lineitem):
    model = CostModel(noise_sigma=0.1)
    query = q(L, ("L_TAX", "="))
    with pytest.raises(ValueError):
        cost(query, reset(lineitem), lineitem, model)
    a = cost(query, reset(lineitem), lineitem, model, np.random.default_rng(0))
    b = cost(query, reset(lineitem), lineitem, model, np.random.default_rng(0))
    assert a == b and a.latency != 600000


def test_reports_csv(tmp_path, lineitem):
    rep = cost(q(L, ("L_ORDERKEY", "=")), reset(lineitem), lineitem)
    write_reports_csv(tmp_path / "r.csv", [(7, rep)])
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert rows[0]["query_id"] == "7"
    assert rows[0]["chosen_path"] == "[L_ORDERKEY, L_LINENUMBER]"
    assert float(rows[0]["latency"]) == rep.latency


def test_cost_matrix_agrees_with_cost(lineitem, rng):
    from indexrl.schema import sample_query
    queries = [sample_query(lineitem, rng) for _ in range(200)]
    names = lineitem.attribute_names
    indices = [lineitem.default_index] + [
        Index(L, tuple(rng.choice(names, size=int(rng.integers(1, 4)), replace=False)))
        for _ in range(30)
    ]
    indices = list({ix.keys: ix for ix in indices}.values())
    mat = cost_matrix(queries, indices, lineitem)
    cols = list(range(len(indices)))
    lat = mat.latencies(cols)
    iset = IndexSet(L, tuple(indices))
    for i, query in enumerate(queries):
        assert lat[i] == pytest.approx(cost(query, iset, lineitem).latency, rel=1e-12)


ATTRS = st.sampled_from(["L_ORDERKEY", "L_PARTKEY", "L_SUPPKEY", "L_QUANTITY", "L_SHIPDATE",
                         "L_SHIPMODE", "L_TAX", "L_LINENUMBER"])


@st.composite
def queries(draw):
    names = draw(st.lists(ATTRS, min_size=1, max_size=3, unique=True))
    preds = []
    for a in names:
        op = Op.EQ if a == "L_SHIPMODE" else draw(st.sampled_from(list(Op)))
        preds.append(Predicate(a, op, 0))
    return Query(L, tuple(preds))


indices = st.lists(ATTRS, min_size=1, max_size=3, unique=True).map(lambda k: Index(L, tuple(k)))


@settings(max_examples=200, deadline=None)
@given(query=queries(), base=st.lists(indices, max_size=4), extra=indices)
def test_adding_an_index_never_slows_a_query(query, base, extra):
    from indexrl.schema import load_schema
    s = load_schema()
    iset = reset(s)
    for ix in base:
        iset, _ = create_index(iset, ix, s)
    before = cost(query, iset, s)
    after_set, delta = create_index(iset, extra, s)
    after = cost(query, after_set, s)
    assert after.latency <= before.latency
    assert (delta > 0) == (extra not in iset)
    assert cost(query, iset, s) == before  # deterministic
