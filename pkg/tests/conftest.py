import pytest

from ttrealize.core import Graph
from ttrealize.realize import build_graph, realize, validate_and_classify


@pytest.fixture(scope="session")
def even_instance():
    """Rank 7, index list [1/2,1,1/2,1,1]: the even-case workhorse."""
    return realize(7, (1, 2, 1, 2, 2))


@pytest.fixture(scope="session")
def odd_instance():
    """Rank 3, index list [1/2]: the smallest admissible input (odd case)."""
    return realize(3, (1,))


@pytest.fixture(scope="session")
def max_odd_instance():
    """Rank 6, index list [1,1,1/2,1,1]: maximal odd case."""
    return realize(6, (2, 2, 1, 2, 2))


@pytest.fixture(scope="session")
def even_graph():
    bp = validate_and_classify(7, (1, 2, 1, 2, 2))
    return build_graph(bp)


@pytest.fixture()
def rose2():
    return Graph(["v1"], [("a", "v1", "v1"), ("b", "v1", "v1")])
