import numpy as np
import pytest

from wrsol.sparse import Example, SparseVector, WeightVector


def sv(pairs) -> SparseVector:
    """Sparse vector from {index: value} or [(index, value)]."""
    if isinstance(pairs, dict):
        pairs = sorted(pairs.items())
    return SparseVector.from_pairs(pairs)


def wv(values) -> WeightVector:
    """Weight vector initialized from a dense list."""
    arr = np.asarray(values, dtype=np.float64)
    out = WeightVector(arr.shape[0])
    out.data[:] = arr
    return out


def random_sparse(rng, dim, max_nnz=8) -> SparseVector:
    nnz = int(rng.integers(0, max_nnz + 1))
    if nnz == 0:
        return SparseVector([], [])
    idx = np.sort(rng.choice(dim, size=min(nnz, dim), replace=False))
    val = rng.standard_normal(idx.shape[0])
    val[val == 0.0] = 1.0
    return SparseVector(idx, val)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL/SKIP line per acceptance criterion, when any ran."""
    rank = {"passed": 0, "skipped": 1, "failed": 2}
    label = {"passed": "PASS", "skipped": "SKIP", "failed": "FAIL"}
    rows: dict = {}
    for outcome in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            if name not in rows or rank[outcome] > rank[rows[name]]:
                rows[name] = outcome
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(rows):
        terminalreporter.write_line("%s %s" % (label[rows[name]], name))
