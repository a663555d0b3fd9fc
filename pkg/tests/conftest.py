import numpy as np
import pytest

from indexrl.schema import AttributeStats, Index, Op, Predicate, Query, TableSchema, load_schema


@pytest.fixture(scope="session")
def lineitem():
    return load_schema()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SYMBOLS = {"=": Op.EQ, "<": Op.LT, ">": Op.GT}


def q(table, *preds):
    """Build a query from (attribute, op) pairs; values are irrelevant to costs."""
    return Query(table, tuple(Predicate(a, SYMBOLS.get(o, o), 0) for a, o in preds))


def tiny_schema(row_count=1000, distinct=(10, 100, 1000, 5), ordered=True):
    names = "ABCD"[: len(distinct)]
    attrs = tuple(AttributeStats(n, d, ordered, 4) for n, d in zip(names, distinct))
    return TableSchema("T", row_count, attrs, Index("T", (names[-1],)))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
