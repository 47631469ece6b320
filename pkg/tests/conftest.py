import math

import pytest

from shortpathlab.instances import Graph, InstanceSpec, gen_graph


def er_graph(n: int, seed: int, p: float | None = None) -> Graph:
    spec = InstanceSpec(
        graph_model="erdos-renyi", cost_kind="maxcut-hamming", seed=seed, n=n,
        p_edge=p if p is not None else min(1.0, 2 * math.log(n) / n),
    )
    return gen_graph(spec)


@pytest.fixture
def k2_graph() -> Graph:
    return Graph(n=2, edges=((0, 1),))


@pytest.fixture
def path3_graph() -> Graph:
    return Graph(n=3, edges=((0, 1), (1, 2)))


@pytest.fixture
def triangle_graph() -> Graph:
    return Graph(n=3, edges=((0, 1), (0, 2), (1, 2)))
