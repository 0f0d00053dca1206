import pytest

from groupset import variants
from groupset.dsl import parse_group_expr


@pytest.fixture(scope="session")
def catalog_by_id():
    return {v.id: v for v in variants.catalog()}


@pytest.fixture(scope="session")
def small_group_exprs():
    """Groups of order <= 60, checked exhaustively in axiom tests."""
    return ["C1", "C2", "C3", "C4", "C5", "S3", "S4", "A4", "A5", "S3 x C2",
            "C2 wr S3", "C2 x S4", "S3^2", "C3 wr S2"]


@pytest.fixture(scope="session")
def small_groups(small_group_exprs):
    return [parse_group_expr(e) for e in small_group_exprs]
