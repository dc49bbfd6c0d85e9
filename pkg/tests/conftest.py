import pytest

from coxwalk.interchange import build_interchange_graph, enumerate_fiber


@pytest.fixture(scope="session")
def fiber_graph():
    cache = {}

    def get(root_type, n, score):
        key = (root_type, n, tuple(score))
        if key not in cache:
            cache[key] = build_interchange_graph(enumerate_fiber(root_type, n, score))
        return cache[key]

    return get
