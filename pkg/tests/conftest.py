import pytest

from support import fresh_market


@pytest.fixture
def market():
    """A deployed market: (chain, [trader0, trader1]) both registered."""
    return fresh_market(2)


@pytest.fixture
def market3():
    return fresh_market(3)


@pytest.fixture
def node_market():
    """A running HTTP node over a deployed two-trader market."""
    from anka.node import Node, NodeConfig

    chain, traders = fresh_market(2)
    node = Node(chain, NodeConfig(host="127.0.0.1", port=0))
    node.start()
    try:
        yield node, chain, traders
    finally:
        node.stop()
