import numpy as np
import pytest

import cache_rl as cr


@pytest.fixture(scope="session")
def small_net():
    g_chain, l_chain = cr.small_network_chains()
    return g_chain, l_chain


@pytest.fixture(scope="session")
def small_space(small_net):
    g_chain, l_chain = small_net
    return cr.StateSpace(g_chain, l_chain, 2)


@pytest.fixture(scope="session")
def tiny_instance():
    """|S| = 12 instance with well-separated optimal actions."""
    gs = (cr.zipf_profile(3, 3.0), cr.zipf_profile(3, 3.0, (3, 2, 1)))
    ls = (cr.zipf_profile(3, 2.5, (2, 3, 1)), cr.zipf_profile(3, 2.5, (3, 1, 2)))
    g_chain = cr.MarkovChain(states=gs, transition=np.array([[0.8, 0.2], [0.3, 0.7]]))
    l_chain = cr.MarkovChain(states=ls, transition=np.array([[0.7, 0.3], [0.2, 0.8]]))
    return cr.StateSpace(g_chain, l_chain, 1)
