"""State and action encodings between the environment and the Q-network.

A state is flattened to ``[agent cells | landmark cells | visited flags]``
(13 numbers for the default 3-agent, 5-landmark setup). The Q output holds
one contiguous 4-slot block per agent in Left, Right, Up, Down order.
"""

import numpy as np

from .env import Move
from .errors import InvariantViolation

NUM_MOVES = 4


def encode_state(state, instance):
    """Raw feature vector: agent cells, landmark cells, 0/1 visited flags."""
    return np.array(
        list(state.agent_cells)
        + list(instance.landmarks)
        + [1.0 if v else 0.0 for v in state.visited],
        dtype=np.float64,
    )


def normalize(raw, instance):
    """Scale cell entries into [0, 1]; visited flags pass through.

    Accepts a single vector or a batch with vectors as rows.
    """
    raw = np.asarray(raw, dtype=np.float64)
    cells = instance.num_agents + instance.num_landmarks
    out = raw.copy()
    out[..., :cells] /= instance.num_cells - 1
    return out


def decode_joint_action(q, num_agents):
    """Per-agent argmax over its 4-slot block; ties go to the lowest slot."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (NUM_MOVES * num_agents,):
        raise InvariantViolation(
            f"Q vector has shape {q.shape}, expected ({NUM_MOVES * num_agents},)"
        )
    if np.isnan(q).any():
        raise InvariantViolation("Q vector contains NaN")
    heads = q.reshape(num_agents, NUM_MOVES)
    return tuple(Move(int(np.argmax(head))) for head in heads)
