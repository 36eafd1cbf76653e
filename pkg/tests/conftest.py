import pytest
from hypothesis import HealthCheck, settings

from mpcmst import generate_instance, parse_edge_list

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SMALL_TEXT = "4\n0 1 5 T\n1 2 1 T\n1 3 7 T\n2 3 4 N\n0 2 2 N\n"


@pytest.fixture
def small_graph():
    return parse_edge_list(SMALL_TEXT)


@pytest.fixture
def triangle():
    # a-b:1, b-c:2 in the tree, chord a-c:3
    return parse_edge_list("3\n0 1 1 T\n1 2 2 T\n0 2 3 N\n")


@pytest.fixture(scope="session")
def planted():
    return generate_instance("random_graph_with_mst", {"n": 400, "m": 1200, "D": 30}, 11)
