import numpy as np
import pytest

import oscnet as on

PAPER_STATES = (
    on.SqueezedSpec(-1.8, 2.9, "q"),
    on.SqueezedSpec(-1.3, 2.4, "p"),
)


def bundled_graph(name: str) -> on.CouplingGraph:
    from oscnet.cli import bundled_config_path

    return on.load_graph(bundled_config_path(name).read_text())


def paper_networks() -> dict[int, on.CouplingGraph]:
    """The five environment networks with their bundled probe attachments.

    Networks 4 and 5 come from the frozen instance documents shipped with the
    package (seeded generator output, pinned against RNG stream drift).
    """
    return {
        1: on.build_linear_chain(16, [0.1, 0.05], 0.25).with_probe(8, 0.01, 0.58),
        2: on.build_linear_chain(16, [0.1, 0.1, 0.05], 0.25).with_probe(8, 0.01, 0.45),
        3: on.build_linear_chain(16, [0.1, 0.05, 0.025], 0.25).with_probe(8, 0.01, 0.45),
        4: bundled_graph("network4.json").with_probe(1, 0.02, 0.75),
        5: bundled_graph("network5.json").with_probe(1, 0.004, 0.65),
    }


@pytest.fixture(scope="session")
def networks():
    return paper_networks()


@pytest.fixture(scope="session")
def net1(networks):
    return networks[1]


@pytest.fixture(scope="session")
def net1_model(net1):
    return on.assemble_model(net1)


def random_stable_graph(rng: np.random.Generator, max_nodes: int = 10) -> on.CouplingGraph:
    """Random connected network plus probe, guaranteed stable."""
    for _ in range(50):
        n = int(rng.integers(2, max_nodes + 1))
        omega0 = float(rng.uniform(0.2, 1.0))
        edges = [(i + 1, i + 2, float(rng.uniform(0.01, 0.2))) for i in range(n - 1)]
        extra = int(rng.integers(0, n))
        for _ in range(extra):
            i, j = sorted(rng.choice(n, 2, replace=False) + 1)
            if i != j and not any(e[0] == i and e[1] == j for e in edges):
                edges.append((int(i), int(j), float(rng.uniform(0.01, 0.2))))
        g = on.build_explicit(n, omega0, edges).with_probe(
            int(rng.integers(1, n + 1)), float(rng.uniform(0.0, 0.05)), float(rng.uniform(0.2, 1.2))
        )
        try:
            on.assemble_model(g)
            return g
        except on.StabilityError:
            continue
    raise RuntimeError("failed to draw a stable random network")
