import pytest

from qpdlog.gf import field_ctx_create
from qpdlog.rep import find_sparse_rep, make_log_context


@pytest.fixture(scope="session")
def ctx9():
    return field_ctx_create(3, 2)


@pytest.fixture(scope="session")
def rep97(ctx9):
    return find_sparse_rep(ctx9, 7)


@pytest.fixture(scope="session")
def lc97(rep97):
    return make_log_context(rep97)


@pytest.fixture(scope="session")
def db97(rep97, lc97):
    from qpdlog.descent import compute_base
    return compute_base(rep97, lc97)


@pytest.fixture(scope="session")
def db97_2(rep97, lc97):
    from qpdlog.descent import compute_base
    return compute_base(rep97, lc97, 2)


@pytest.fixture(scope="session")
def db137_2(rep137, lc137):
    from qpdlog.descent import compute_base
    return compute_base(rep137, lc137, 2)


@pytest.fixture(scope="session")
def rep95(ctx9):
    return find_sparse_rep(ctx9, 5)


@pytest.fixture(scope="session")
def ctx13():
    return field_ctx_create(13, 1)


@pytest.fixture(scope="session")
def rep137(ctx13):
    return find_sparse_rep(ctx13, 7)


@pytest.fixture(scope="session")
def lc137(rep137):
    return make_log_context(rep137)


@pytest.fixture(scope="session")
def ctx53():
    return field_ctx_create(53, 1)


@pytest.fixture(scope="session")
def rep53(ctx53):
    return find_sparse_rep(ctx53, 53, delta_max=2)


@pytest.fixture(scope="session")
def lc53(rep53):
    return make_log_context(rep53, ell=5324593)
