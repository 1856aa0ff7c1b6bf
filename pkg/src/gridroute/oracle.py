"""Exact routing oracle: true shortest-path distances plus brute force.

Solves an instance to optimality by enumerating every assignment of
landmarks to agents and every visiting order, with tour legs costed by
wall-respecting BFS distances. This is the ground truth the learned policy
is measured against; it relaxes the simultaneous-movement constraint, which
is sound because blocked moves let an agent wait at zero distance cost.
"""

import itertools
from dataclasses import dataclass

from . import grid
from .errors import InvariantViolation


@dataclass(frozen=True)
class DistanceField:
    """Shortest wall-respecting path length from one source to every cell."""

    source: int
    distances: tuple
    parents: tuple

    def __getitem__(self, cell):
        return self.distances[cell]

    def path_to(self, cell):
        """A shortest cell route source -> cell."""
        if self.distances[cell] == grid.UNREACHABLE:
            raise InvariantViolation(f"cell {cell} unreachable from {self.source}")
        return grid.walk_parents(list(self.parents), cell)


@dataclass(frozen=True)
class OptimalSolution:
    """Minimal-distance routes; orders hold landmark slot indices per agent."""

    total_distance: int
    orders: tuple
    routes: tuple

    def to_doc(self, instance=None):
        doc = {
            "total_distance": self.total_distance,
            "agent_orders": [list(o) for o in self.orders],
            "agent_routes": [list(r) for r in self.routes],
        }
        if instance is not None and instance.name is not None:
            doc["instance"] = instance.name
        return doc


def bfs_distances(instance, source):
    """Exact shortest path lengths from ``source``, walls respected."""
    if not (0 <= source < instance.num_cells):
        raise InvariantViolation(f"source cell {source} out of range")
    if source in instance.walls:
        raise InvariantViolation(f"source cell {source} is a wall")
    dist, parent = grid.grid_bfs(instance.rows, instance.cols, instance.walls, source)
    return DistanceField(source=source, distances=tuple(dist), parents=tuple(parent))


def _best_order_per_subset(num_landmarks, leg_cost):
    """Cheapest visiting order for every landmark subset (as a bitmask).

    ``leg_cost(i, j)`` uses -1 for the depot. Ties keep the lexicographically
    smallest order, which permutations() yields first.
    """
    best = {0: (0, ())}
    slots = range(num_landmarks)
    for size in range(1, num_landmarks + 1):
        for subset in itertools.combinations(slots, size):
            mask = sum(1 << s for s in subset)
            best_cost, best_seq = None, None
            for order in itertools.permutations(subset):
                cost = leg_cost(-1, order[0])
                for a, b in zip(order, order[1:]):
                    cost += leg_cost(a, b)
                cost += leg_cost(order[-1], -1)
                if best_cost is None or cost < best_cost:
                    best_cost, best_seq = cost, order
            best[mask] = (best_cost, best_seq)
    return best


def solve_exact(instance):
    """Optimal assignment and visiting orders by exhaustive enumeration.

    Enumerates all num_agents**L assignments; per-agent tours reuse the
    cheapest order of each landmark subset. Ties break toward the
    lexicographically smallest (assignment, order) encoding.
    """
    depot_field = bfs_distances(instance, instance.depot)
    landmark_fields = []
    for cell in instance.landmarks:
        if depot_field[cell] == grid.UNREACHABLE:
            raise InvariantViolation(f"landmark {cell} unreachable from depot")
        landmark_fields.append(bfs_distances(instance, cell))

    def leg_cost(i, j):
        src = depot_field if i == -1 else landmark_fields[i]
        dst = instance.depot if j == -1 else instance.landmarks[j]
        return int(src[dst])

    num = instance.num_landmarks
    per_subset = _best_order_per_subset(num, leg_cost)

    best_total, best_assignment = None, None
    for assignment in itertools.product(range(instance.num_agents), repeat=num):
        masks = [0] * instance.num_agents
        for slot, agent in enumerate(assignment):
            masks[agent] |= 1 << slot
        total = sum(per_subset[m][0] for m in masks)
        if best_total is None or total < best_total:
            best_total, best_assignment = total, assignment

    orders, routes = [], []
    for agent in range(instance.num_agents):
        mask = 0
        for slot, owner in enumerate(best_assignment):
            if owner == agent:
                mask |= 1 << slot
        _, order = per_subset[mask]
        orders.append(order)
        route = [instance.depot]
        at = -1
        for slot in list(order) + [-1]:
            src = depot_field if at == -1 else landmark_fields[at]
            dst = instance.depot if slot == -1 else instance.landmarks[slot]
            route.extend(src.path_to(dst)[1:])
            at = slot
        routes.append(tuple(route))

    return OptimalSolution(
        total_distance=int(best_total),
        orders=tuple(orders),
        routes=tuple(routes),
    )
