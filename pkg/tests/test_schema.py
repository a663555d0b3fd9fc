import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indexrl.schema import (
    AttributeStats,
    Index,
    Op,
    Query,
    SchemaError,
    TableSchema,
    build_workloads,
    dump_workloads,
    load_schema,
    load_workloads,
    sample_query,
    selectivity,
    validate_query,
)

from conftest import q, tiny_schema


def test_lineitem_orderkey_selectivity(lineitem):
    assert selectivity(lineitem, "L_ORDERKEY") == pytest.approx(0.24)


def test_shipinstruct_selectivity(lineitem):
    assert selectivity(lineitem, "L_SHIPINSTRUCT") == pytest.approx(4 / 600000)


def test_all_distinct_attribute_has_selectivity_one():
    s = TableSchema("T", 50, (AttributeStats("A", 50),), Index("T", ("A",)))
    assert selectivity(s, "A") == 1.0


def test_unknown_attribute_raises(lineitem):
    with pytest.raises(SchemaError):
        selectivity(lineitem, "L_NOPE")


def test_default_index(lineitem):
    assert lineitem.default_index.keys == ("L_ORDERKEY", "L_LINENUMBER")


def test_all_selectivities_in_unit_interval(lineitem):
    for a in lineitem.attribute_names:
        assert 0 < selectivity(lineitem, a) <= 1


@pytest.mark.parametrize("bad", [
    dict(distinct=(0,)),
])
def test_attribute_validation(bad):
    with pytest.raises(SchemaError):
        AttributeStats("A", bad["distinct"][0])


def test_table_rejects_distinct_above_rows():
    with pytest.raises(SchemaError):
        TableSchema("T", 10, (AttributeStats("A", 11),), Index("T", ("A",)))


def test_table_rejects_foreign_default_index_keys():
    with pytest.raises(SchemaError):
        TableSchema("T", 10, (AttributeStats("A", 5),), Index("T", ("B",)))


def test_schema_dict_round_trip(lineitem):
    assert TableSchema.from_dict(json.loads(json.dumps(lineitem.to_dict()))) == lineitem


def test_schema_file_override(tmp_path):
    s = tiny_schema()
    p = tmp_path / "s.json"
    p.write_text(json.dumps(s.to_dict()))
    assert load_schema(p) == s


def test_query_rejects_duplicate_attributes():
    with pytest.raises(SchemaError):
        q("T", ("A", "="), ("A", "<"))


def test_validate_query_rejects_range_on_unordered(lineitem):
    with pytest.raises(SchemaError):
        validate_query(q("LINEITEM", ("L_SHIPMODE", "<")), lineitem)


def test_n_max_one_gives_one_predicate(lineitem, rng):
    for _ in range(200):
        assert len(sample_query(lineitem, rng, n_max=1).predicates) == 1


def test_predicate_count_uniform(lineitem, rng):
    counts = np.bincount([len(sample_query(lineitem, rng).predicates) for _ in range(6000)],
                         minlength=4)[1:]
    assert np.all(np.abs(counts / 6000 - 1 / 3) < 0.03)


def test_eq_fraction_monte_carlo(rng):
    # all attributes ordered, so the operator draw is never forced to EQ
    s = tiny_schema(distinct=(10, 100, 1000, 5))
    ops = [p.op for _ in range(10000) for p in sample_query(s, rng, n_max=1).predicates]
    frac = np.mean([o is Op.EQ for o in ops])
    assert abs(frac - 0.70) <= 0.02
    lt = sum(o is Op.LT for o in ops)
    gt = sum(o is Op.GT for o in ops)
    assert abs(lt - gt) / (lt + gt) < 0.06


def test_sampled_queries_are_valid(lineitem, rng):
    for _ in range(2000):
        query = sample_query(lineitem, rng)
        validate_query(query, lineitem, n_max=3)
        for p in query.predicates:
            assert 0 <= p.value < lineitem.attribute(p.attribute).distinct_count


def test_build_workloads_shape_and_determinism(lineitem):
    a = build_workloads(lineitem, 100, 25, seed=3)
    b = build_workloads(lineitem, 100, 25, seed=3)
    assert len(a) == 100 and all(len(w) == 25 for w in a)
    assert a == b
    c = build_workloads(lineitem, 3, 25, seed=4)
    assert c[0] != a[0]


def test_workload_json_round_trip(lineitem, tmp_path):
    ws = build_workloads(lineitem, 3, 25, seed=9)
    dump_workloads(ws, tmp_path / "w.json")
    assert load_workloads(tmp_path / "w.json") == ws


def test_to_sql_shape():
    sql = q("LINEITEM", ("L_PARTKEY", "="), ("L_ORDERKEY", "=")).to_sql()
    assert sql.startswith("SELECT COUNT(*) FROM lineitem WHERE L_PARTKEY = ")


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_max=st.integers(1, 5))
def test_sampling_reproducible_and_well_formed(seed, n_max):
    s = load_schema()
    a = sample_query(s, np.random.default_rng(seed), n_max)
    b = sample_query(s, np.random.default_rng(seed), n_max)
    assert a == b
    assert 1 <= len(a.predicates) <= n_max
    validate_query(a, s, n_max)
