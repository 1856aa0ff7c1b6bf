"""Multi-agent gridworld routing: a from-scratch DQN planner, an exact
brute-force oracle, and the training/evaluation tooling around them."""

__version__ = "0.1.0"
