"""Board geometry: cell enumeration, Manhattan distance, wall-aware BFS.

Cells are enumerated row-major with row 0 at the top, so on a 7x7 board the
indices run 0..48, the top-left corner is 0 and the center is 24.
"""

from collections import deque

from .errors import InvariantViolation

UNREACHABLE = float("inf")


def cell_index(row, col, rows, cols):
    """Encode (row, col) as a row-major cell index."""
    if not (0 <= row < rows and 0 <= col < cols):
        raise InvariantViolation(f"cell ({row}, {col}) out of range for {rows}x{cols} grid")
    return cols * row + col


def cell_rowcol(index, rows, cols):
    """Decode a row-major cell index into (row, col)."""
    if not (0 <= index < rows * cols):
        raise InvariantViolation(f"cell {index} out of range for {rows}x{cols} grid")
    return divmod(index, cols)


def manhattan(a, b, rows, cols):
    """L1 distance between two cell indices, ignoring walls."""
    ra, ca = cell_rowcol(a, rows, cols)
    rb, cb = cell_rowcol(b, rows, cols)
    return abs(ra - rb) + abs(ca - cb)


def grid_neighbors(index, rows, cols):
    """4-neighbors of a cell that stay on the board, in L, R, U, D order."""
    row, col = divmod(index, cols)
    out = []
    if col > 0:
        out.append(index - 1)
    if col < cols - 1:
        out.append(index + 1)
    if row > 0:
        out.append(index - cols)
    if row < rows - 1:
        out.append(index + cols)
    return out


def grid_bfs(rows, cols, walls, source):
    """Shortest wall-respecting path lengths from ``source`` to every cell.

    Returns ``(distances, parents)`` as lists indexed by cell. Walls and
    disconnected cells get distance ``UNREACHABLE`` and parent ``None``;
    ``parents[source]`` is ``None``. Following parents from any reachable
    cell walks a shortest path back to the source.
    """
    n = rows * cols
    if not (0 <= source < n):
        raise InvariantViolation(f"cell {source} out of range for {rows}x{cols} grid")
    if source in walls:
        raise InvariantViolation(f"BFS source {source} is a wall cell")
    dist = [UNREACHABLE] * n
    parent = [None] * n
    dist[source] = 0
    queue = deque([source])
    while queue:
        cur = queue.popleft()
        for nxt in grid_neighbors(cur, rows, cols):
            if nxt in walls or dist[nxt] != UNREACHABLE:
                continue
            dist[nxt] = dist[cur] + 1
            parent[nxt] = cur
            queue.append(nxt)
    return dist, parent


def walk_parents(parents, target):
    """Path from the BFS source to ``target``, inclusive, using parent links."""
    path = [target]
    while parents[path[-1]] is not None:
        path.append(parents[path[-1]])
    path.reverse()
    return path
