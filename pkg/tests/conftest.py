import pytest

from gridroute import env


@pytest.fixture
def board():
    """Default 7x7 board with a fixed, hand-picked landmark set."""
    return env.default_instance((5, 45, 11, 19, 20), name="fixed")


@pytest.fixture
def open_board():
    """Wall-free 5x5 board, depot centered, two landmarks."""
    return env.ProblemInstance(
        rows=5, cols=5, walls=frozenset(), depot=12, landmarks=(0, 24), num_agents=2, name="open"
    )
