import itertools
import time

import numpy as np
import pytest

from gridroute import env, grid, oracle
from gridroute.errors import InvariantViolation
from gridroute.problems import GeneratorConfig, generate, rng_from_seed

from reference_impls import floyd_warshall_distances, solve_by_ordered_partitions


def random_small_instance(rng, max_landmarks=3):
    config = GeneratorConfig(num_landmarks=int(rng.integers(1, max_landmarks + 1)),
                             num_agents=int(rng.integers(1, 4)),
                             seed=int(rng.integers(0, 2**32)))
    return generate(config)


# --- bfs distance fields ---

def test_bfs_source_distance_zero_and_neighbor_lipschitz(board):
    field = oracle.bfs_distances(board, board.depot)
    assert field[board.depot] == 0
    for cell in range(board.num_cells):
        if cell in board.walls:
            continue
        for n in grid.grid_neighbors(cell, board.rows, board.cols):
            if n in board.walls:
                continue
            assert abs(field[cell] - field[n]) <= 1


def test_bfs_equals_manhattan_without_walls():
    open_board = env.ProblemInstance(rows=7, cols=7, walls=frozenset(), depot=24,
                                     landmarks=(0,), num_agents=1)
    for source in (0, 24, 48):
        field = oracle.bfs_distances(open_board, source)
        sr, sc = divmod(source, 7)
        for cell in range(49):
            r, c = divmod(cell, 7)
            assert field[cell] == abs(r - sr) + abs(c - sc)


def test_bfs_matches_floyd_warshall_on_default_board(board):
    reference = floyd_warshall_distances(board.rows, board.cols, board.walls)
    for source in (24, 0, 21):
        field = oracle.bfs_distances(board, source)
        for cell in range(board.num_cells):
            expected = reference[source][cell]
            got = field[cell]
            if expected is None:
                assert got == grid.UNREACHABLE
            else:
                assert got == expected


def test_bfs_triangle_inequality_sampled(board):
    rng = rng_from_seed(5)
    free = [c for c in range(board.num_cells) if c not in board.walls]
    fields = {c: oracle.bfs_distances(board, c) for c in free}
    for _ in range(200):
        a, b, c = (free[int(i)] for i in rng.integers(0, len(free), size=3))
        assert fields[a][c] <= fields[a][b] + fields[b][c]


def test_bfs_rejects_wall_or_out_of_range_source(board):
    wall = next(iter(board.walls))
    with pytest.raises(InvariantViolation):
        oracle.bfs_distances(board, wall)
    with pytest.raises(InvariantViolation):
        oracle.bfs_distances(board, 49)


def test_path_to_walks_a_shortest_route(board):
    field = oracle.bfs_distances(board, board.depot)
    for cell in (0, 6, 42, 48, 20):
        path = field.path_to(cell)
        assert path[0] == board.depot and path[-1] == cell
        assert len(path) - 1 == field[cell]
        for a, b in zip(path, path[1:]):
            assert b in grid.grid_neighbors(a, board.rows, board.cols)
            assert b not in board.walls


# --- solve_exact hand cases ---

def test_solve_zero_landmarks_costs_nothing():
    instance = env.default_instance(())
    solution = oracle.solve_exact(instance)
    assert solution.total_distance == 0
    assert solution.routes == ((24,), (24,), (24,))
    assert solution.orders == ((), (), ())


def test_solve_single_adjacent_landmark_is_out_and_back():
    instance = env.default_instance((25,))
    solution = oracle.solve_exact(instance)
    assert solution.total_distance == 2
    busy = [r for r in solution.routes if len(r) > 1]
    assert busy == [(24, 25, 24)]


def test_solve_two_landmarks_two_agents_closed_form():
    # the full space is tiny: both landmarks chained by one agent (either
    # order) or one landmark each; the solver must hit the minimum of those
    instance = env.default_instance((21, 27), num_agents=2)
    d_depot = oracle.bfs_distances(instance, instance.depot)
    d_21 = oracle.bfs_distances(instance, 21)
    chain = d_depot[21] + d_21[27] + d_depot[27]
    split = 2 * d_depot[21] + 2 * d_depot[27]
    solution = oracle.solve_exact(instance)
    assert solution.total_distance == min(chain, split)
    assert solution.total_distance == solve_by_ordered_partitions(instance)


def test_solve_one_agent_chains_landmarks():
    instance = env.default_instance((25, 27), num_agents=1)
    solution = oracle.solve_exact(instance)
    assert solution.total_distance == solve_by_ordered_partitions(instance)
    assert solution.orders == ((0, 1),)


# --- structural invariants of solutions ---

def assert_solution_well_formed(instance, solution):
    claimed = sorted(itertools.chain.from_iterable(solution.orders))
    assert claimed == list(range(instance.num_landmarks))
    total = 0
    for order, route in zip(solution.orders, solution.routes):
        assert route[0] == instance.depot and route[-1] == instance.depot
        for a, b in zip(route, route[1:]):
            assert b in grid.grid_neighbors(a, instance.rows, instance.cols)
            assert b not in instance.walls
        for slot in order:
            assert instance.landmarks[slot] in route
        total += len(route) - 1
    assert total == solution.total_distance


def test_solution_routes_cover_and_account(board):
    solution = oracle.solve_exact(board)
    assert_solution_well_formed(board, solution)


def test_solution_routes_well_formed_on_random_instances():
    rng = rng_from_seed(11)
    for _ in range(25):
        instance = random_small_instance(rng)
        assert_solution_well_formed(instance, oracle.solve_exact(instance))


# --- exactness against the independent enumerator ---

def test_solve_matches_ordered_partition_reference():
    rng = rng_from_seed(3)
    for _ in range(40):
        instance = random_small_instance(rng, max_landmarks=3)
        assert oracle.solve_exact(instance).total_distance == \
            solve_by_ordered_partitions(instance)


def test_solve_matches_reference_on_full_size_instance(board):
    assert oracle.solve_exact(board).total_distance == solve_by_ordered_partitions(board)


def test_landmark_relabeling_preserves_total(board):
    reversed_board = env.default_instance(tuple(reversed(board.landmarks)))
    assert oracle.solve_exact(reversed_board).total_distance == \
        oracle.solve_exact(board).total_distance


def test_more_agents_never_cost_more():
    rng = rng_from_seed(23)
    for _ in range(8):
        config = GeneratorConfig(num_landmarks=3, num_agents=1,
                                 seed=int(rng.integers(0, 2**32)))
        base = generate(config)
        totals = []
        for agents in (1, 2, 3):
            instance = env.ProblemInstance(
                rows=base.rows, cols=base.cols, walls=base.walls, depot=base.depot,
                landmarks=base.landmarks, num_agents=agents)
            totals.append(oracle.solve_exact(instance).total_distance)
        assert totals[0] >= totals[1] >= totals[2]


# --- scale and serialization ---

def test_default_size_solve_under_50ms(board):
    oracle.solve_exact(board)  # warm caches
    start = time.perf_counter()
    oracle.solve_exact(board)
    elapsed = time.perf_counter() - start
    assert elapsed < 0.050


def test_solution_document_shape(board):
    solution = oracle.solve_exact(board)
    doc = solution.to_doc(board)
    assert doc["total_distance"] == solution.total_distance
    assert doc["agent_orders"] == [list(o) for o in solution.orders]
    assert doc["agent_routes"] == [list(r) for r in solution.routes]
    assert doc["instance"] == "fixed"
    assert "instance" not in solution.to_doc()
