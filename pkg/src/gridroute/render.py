"""Plain-text playback of episode traces.

Frames mode draws one grid per step (walls ``#``, depot ``D``, unvisited
landmark ``F``, visited ``f``, agents as digits); summary mode prints each
agent's move string, tails included, plus the distance totals.
"""

from .errors import InvariantViolation

RENDER_MODES = ("frames", "summary")


def _frame_lines(instance, agent_cells, visited):
    cells = [["."] * instance.cols for _ in range(instance.rows)]

    def put(cell, glyph):
        r, c = divmod(cell, instance.cols)
        cells[r][c] = glyph

    for w in sorted(instance.walls):
        put(w, "#")
    put(instance.depot, "D")
    for slot, cell in enumerate(instance.landmarks):
        put(cell, "f" if visited[slot] else "F")
    for agent, cell in enumerate(agent_cells):
        put(cell, str(agent))
    return ["".join(row) for row in cells]


def _legend(instance):
    top = instance.num_agents - 1
    agents = "0" if top == 0 else f"0-{top}"
    return (
        f"legend: # wall, D depot, F unvisited landmark, f visited landmark, "
        f"{agents} agents (highest agent index shown on shared cells)"
    )


def _tail_letters(route, instance):
    letters = []
    for a, b in zip(route, route[1:]):
        delta = b - a
        if delta == -1:
            letters.append("L")
        elif delta == 1:
            letters.append("R")
        elif delta == -instance.cols:
            letters.append("U")
        elif delta == instance.cols:
            letters.append("D")
        else:
            raise InvariantViolation(f"tail route jumps from cell {a} to {b}")
    return "".join(letters)


def render_trace(trace, mode="frames"):
    """Render an EpisodeTrace to text; never mutates the trace."""
    if mode not in RENDER_MODES:
        raise InvariantViolation(f"unknown render mode {mode!r}, expected one of {RENDER_MODES}")
    if trace.instance.num_agents > 10:
        raise InvariantViolation("rendering supports at most 10 agents")
    header = (
        f"trace: {trace.policy_name} policy on {trace.instance.name or 'unnamed instance'}, "
        f"seed {trace.seed}"
    )
    footer = [
        f"termination: {trace.termination} after {trace.steps} steps "
        f"({'success' if trace.success else 'failure'})",
        f"total distance: {trace.total_distance}",
        f"reward sum: {trace.reward_sum}",
    ]
    if mode == "summary":
        lines = [header]
        for agent in range(trace.instance.num_agents):
            episode = "".join(r.moves[agent].letter for r in trace.records)
            tail = _tail_letters(trace.tail_routes[agent], trace.instance)
            lines.append(f"agent {agent}: {episode or '-'} | tail {tail or '-'}")
        lines.extend(footer)
        return "\n".join(lines) + "\n"

    lines = [header, _legend(trace.instance)]
    no_visits = (False,) * trace.instance.num_landmarks
    lines.append("")
    lines.append("step 0 (reset)")
    lines.extend(_frame_lines(trace.instance, trace.initial_cells, no_visits))
    for i, record in enumerate(trace.records, start=1):
        moves = "".join(m.letter for m in record.moves)
        lines.append("")
        lines.append(f"step {i}: moves {moves}, reward {record.reward}")
        lines.extend(_frame_lines(trace.instance, record.agent_cells, record.visited))
    lines.append("")
    lines.extend(footer)
    return "\n".join(lines) + "\n"
