import pytest

from satfolio.core.cnf import CnfInstance


@pytest.fixture
def t1() -> CnfInstance:
    """(x1 or not x2) and (not x1 or x2 or x3) and not x1"""
    return CnfInstance(num_vars=3, clauses=[[1, -2], [-1, 2, 3], [-1]], source_id="t1")
