import json
import os

import numpy as np
import pytest

from codes import builtin_code


def pytest_collection_modifyitems(config, items):
    if os.environ.get("QSYND_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="desk-scale run; set QSYND_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def rep3():
    """[[13,1,3]] hypergraph product of the length-3 repetition code."""
    return builtin_code("hgp_rep3")


@pytest.fixture(scope="session")
def lp_tanner():
    return builtin_code("lp_tanner")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def rep3_base_file(tmp_path):
    path = tmp_path / "rep3.json"
    path.write_text(json.dumps({"L": 1, "rows": 2, "cols": 3, "exponents": [[0, 0, -1], [-1, 0, 0]]}))
    return path


@pytest.fixture
def trivial_base_file(tmp_path):
    path = tmp_path / "trivial.json"
    path.write_text(json.dumps({"L": 1, "rows": 1, "cols": 1, "exponents": [[0]]}))
    return path
