"""Deterministic gridworld dynamics for cooperative landmark visiting.

All agents start at the depot, move simultaneously one cell per step, and the
episode ends when every landmark has been visited (or a step limit runs out).
A move into a wall or off the board leaves the agent in place but still
consumes the step.
"""

import functools
from dataclasses import dataclass
from enum import IntEnum

from . import grid
from .errors import InvariantViolation


class Move(IntEnum):
    """The four unit moves, encoded in a fixed order."""

    LEFT = 0
    RIGHT = 1
    UP = 2
    DOWN = 3

    @property
    def letter(self):
        return "LRUD"[self.value]


# (row delta, col delta) per move; row 0 is the top row.
MOVE_DELTAS = {
    Move.LEFT: (0, -1),
    Move.RIGHT: (0, 1),
    Move.UP: (-1, 0),
    Move.DOWN: (1, 0),
}

# Default board: 7x7, six interior walls placed symmetrically around the
# central depot. Landmark positions vary per problem; walls and depot do not.
DEFAULT_ROWS = 7
DEFAULT_COLS = 7
DEFAULT_WALLS = frozenset({8, 12, 22, 26, 36, 40})
DEFAULT_DEPOT = 24
DEFAULT_NUM_AGENTS = 3
DEFAULT_NUM_LANDMARKS = 5


@dataclass(frozen=True)
class ProblemInstance:
    """One routing problem: a board plus an ordered set of landmark cells."""

    rows: int = DEFAULT_ROWS
    cols: int = DEFAULT_COLS
    walls: frozenset = DEFAULT_WALLS
    depot: int = DEFAULT_DEPOT
    landmarks: tuple = ()
    num_agents: int = DEFAULT_NUM_AGENTS
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "walls", frozenset(self.walls))
        object.__setattr__(self, "landmarks", tuple(self.landmarks))
        if self.rows < 1 or self.cols < 1:
            raise InvariantViolation("grid dimensions must be positive")
        if self.num_agents < 1:
            raise InvariantViolation("num_agents must be positive")
        n = self.rows * self.cols
        for label, cells in (("wall", self.walls), ("depot", (self.depot,)), ("landmark", self.landmarks)):
            for c in cells:
                if not (0 <= c < n):
                    raise InvariantViolation(f"{label} cell {c} out of range [0, {n - 1}]")
        if self.depot in self.walls:
            raise InvariantViolation("depot is a wall cell")
        for c in self.landmarks:
            if c in self.walls:
                raise InvariantViolation(f"landmark {c} is a wall cell")
            if c == self.depot:
                raise InvariantViolation(f"landmark {c} coincides with the depot")
        if len(set(self.landmarks)) != len(self.landmarks):
            raise InvariantViolation("landmarks are not pairwise distinct")
        dist, _ = grid.grid_bfs(self.rows, self.cols, self.walls, self.depot)
        for c in range(n):
            if c not in self.walls and dist[c] == grid.UNREACHABLE:
                raise InvariantViolation(f"free cell {c} unreachable from depot")

    @property
    def num_cells(self):
        return self.rows * self.cols

    @property
    def num_landmarks(self):
        return len(self.landmarks)


def default_instance(landmarks, num_agents=DEFAULT_NUM_AGENTS, name=None):
    """A problem on the default board with the given landmark cells."""
    return ProblemInstance(landmarks=tuple(landmarks), num_agents=num_agents, name=name)


@dataclass(frozen=True)
class EnvState:
    """Mutable truth of one episode, advanced functionally by ``step``."""

    agent_cells: tuple
    visited: tuple
    step_count: int = 0

    @property
    def all_visited(self):
        return all(self.visited)


def reset(instance):
    """Fresh episode state: every agent at the depot, nothing visited."""
    return EnvState(
        agent_cells=(instance.depot,) * instance.num_agents,
        visited=(False,) * instance.num_landmarks,
        step_count=0,
    )


def apply_move(cell, move, instance):
    """Target cell of a unit move; blocked moves (wall/boundary) stay put."""
    row, col = divmod(cell, instance.cols)
    dr, dc = MOVE_DELTAS[Move(move)]
    row, col = row + dr, col + dc
    if not (0 <= row < instance.rows and 0 <= col < instance.cols):
        return cell
    target = instance.cols * row + col
    if target in instance.walls:
        return cell
    return target


def compute_reward(state, instance):
    """Negated sum, over unvisited landmarks, of the closest agent's L1 distance.

    Zero exactly when every landmark is visited. Distances deliberately
    ignore walls.
    """
    total = 0
    for j, cell in enumerate(instance.landmarks):
        if state.visited[j]:
            continue
        total += min(
            grid.manhattan(a, cell, instance.rows, instance.cols) for a in state.agent_cells
        )
    return -float(total)


def compute_reward_bfs(state, instance):
    """Wall-respecting variant of the reward, offered for experimentation only."""
    total = 0
    for j, cell in enumerate(instance.landmarks):
        if state.visited[j]:
            continue
        dist = _bfs_from(instance, cell)
        total += min(dist[a] for a in state.agent_cells)
    return -float(total)


def step(state, action, instance, max_steps, reward_fn=compute_reward):
    """Advance one simultaneous step.

    Returns ``(new_state, reward, terminal)``. Terminal when all landmarks
    are visited (reward exactly 0) or the step budget is exhausted.
    """
    if state.all_visited or state.step_count >= max_steps:
        raise InvariantViolation("cannot step a terminal state")
    if len(action) != instance.num_agents:
        raise InvariantViolation(
            f"joint action has {len(action)} moves for {instance.num_agents} agents"
        )
    cells = tuple(apply_move(c, m, instance) for c, m in zip(state.agent_cells, action))
    occupied = set(cells)
    visited = tuple(
        was or (cell in occupied) for was, cell in zip(state.visited, instance.landmarks)
    )
    new_state = EnvState(agent_cells=cells, visited=visited, step_count=state.step_count + 1)
    reward = reward_fn(new_state, instance)
    terminal = new_state.all_visited or new_state.step_count >= max_steps
    return new_state, reward, terminal


@functools.lru_cache(maxsize=256)
def _depot_field(instance):
    return grid.grid_bfs(instance.rows, instance.cols, instance.walls, instance.depot)


@functools.lru_cache(maxsize=4096)
def _bfs_from(instance, source):
    dist, _ = grid.grid_bfs(instance.rows, instance.cols, instance.walls, source)
    return dist


def tail_return_route(agent_cell, instance):
    """Wall-respecting route from ``agent_cell`` back to the depot.

    Greedily steps along the axis that reduces L1 distance to the depot
    (horizontal preferred when both axes do), falling back to a BFS shortest
    path for the remainder as soon as the greedy step is blocked, fails to
    reduce the true distance twice in a row, or would put the route length
    guarantee (BFS distance + 4) at risk.
    """
    dist, parents = _depot_field(instance)
    if not (0 <= agent_cell < instance.num_cells) or dist[agent_cell] == grid.UNREACHABLE:
        raise InvariantViolation(f"cell {agent_cell} cannot reach the depot")
    depot_row, depot_col = divmod(instance.depot, instance.cols)
    budget = dist[agent_cell] + 4
    route = [agent_cell]
    cur = agent_cell
    stalls = 0
    while cur != instance.depot:
        row, col = divmod(cur, instance.cols)
        if depot_col != col:
            move = Move.RIGHT if depot_col > col else Move.LEFT
        else:
            move = Move.DOWN if depot_row > row else Move.UP
        nxt = apply_move(cur, move, instance)
        taken = len(route) - 1
        # A greedy step can add 2 to taken + bfs_distance; bail out while the
        # BFS remainder still fits the budget.
        if nxt == cur or stalls >= 2 or taken + dist[cur] + 2 > budget:
            remainder = grid.walk_parents(parents, cur)  # depot -> cur
            route.extend(reversed(remainder[:-1]))
            return route
        stalls = 0 if dist[nxt] < dist[cur] else stalls + 1
        route.append(nxt)
        cur = nxt
    return route


def total_distance(positions, tail_routes):
    """Total traveled distance of a finished episode.

    ``positions`` holds the per-step agent cell tuples including the reset
    row; ``tail_routes`` the per-agent return routes. Only actual
    displacements count, so blocked moves contribute nothing.
    """
    if not positions:
        raise InvariantViolation("episode trace is empty")
    num_agents = len(positions[0])
    if tail_routes is None or len(tail_routes) != num_agents:
        raise InvariantViolation("trace is missing tail routes")
    for agent, route in enumerate(tail_routes):
        if not route or route[0] != positions[-1][agent]:
            raise InvariantViolation(f"tail route of agent {agent} does not start at its final cell")
    moved = sum(
        1
        for before, after in zip(positions, positions[1:])
        for b, a in zip(before, after)
        if b != a
    )
    tails = sum(len(route) - 1 for route in tail_routes)
    return moved + tails
