"""Policy rollouts on single instances and aggregated evaluation suites.

A rollout drives the environment with a frozen policy (no exploration),
attaches the heuristic return-to-depot tails, and accounts for total traveled
distance so the result can be compared against the exact oracle.
"""

import math
import statistics
from dataclasses import dataclass

from . import codec, env, oracle
from .errors import GridRouteError, InvariantViolation
from .net import forward
from .problems import derive_seed, generate, instance_from_doc, instance_to_doc, rng_from_seed
from .trainer import guided_subaction

# spawn_key namespaces under the master seed (training owns 0-3)
_KEY_EVAL = 4
_KEY_ROLLOUT = 5

TERMINATION_VISITED = "all-visited"
TERMINATION_STEP_LIMIT = "step-limit"

_MOVES_BY_LETTER = {m.letter: m for m in env.Move}


class NetworkPolicy:
    """Greedy argmax policy over a trained Q-network (epsilon 0, heuristic 0)."""

    name = "network"

    def __init__(self, network):
        self.network = network

    def select_moves(self, state, instance, rng):
        sizes = self.network.layer_sizes
        want_in = instance.num_agents + 2 * instance.num_landmarks
        want_out = codec.NUM_MOVES * instance.num_agents
        if sizes[0] != want_in or sizes[-1] != want_out:
            raise InvariantViolation(
                f"network expects {sizes[0]}->{sizes[-1]} but instance needs "
                f"{want_in}->{want_out}"
            )
        q = forward(self.network, codec.normalize(codec.encode_state(state, instance), instance))
        return codec.decode_joint_action(q, instance.num_agents)


class RandomPolicy:
    """Uniform random move per agent; the untrained baseline."""

    name = "random"

    def select_moves(self, state, instance, rng):
        return tuple(
            env.Move(int(rng.integers(codec.NUM_MOVES))) for _ in range(instance.num_agents)
        )


class GreedyLandmarkPolicy:
    """Always take the guided subaction; random move when the heuristic abstains."""

    name = "greedy-landmark"

    def select_moves(self, state, instance, rng):
        moves = []
        for agent in range(instance.num_agents):
            move = guided_subaction(agent, state, instance)
            if move is None:
                move = env.Move(int(rng.integers(codec.NUM_MOVES)))
            moves.append(move)
        return tuple(moves)


@dataclass(frozen=True)
class StepRecord:
    """State of the episode right after one simultaneous step."""

    moves: tuple
    agent_cells: tuple
    visited: tuple
    reward: float


@dataclass(frozen=True)
class EpisodeTrace:
    """Everything one rollout produced, including the return tails."""

    instance: env.ProblemInstance
    policy_name: str
    seed: int
    max_steps: int
    records: tuple
    tail_routes: tuple
    termination: str

    @property
    def success(self):
        return self.termination == TERMINATION_VISITED

    @property
    def steps(self):
        return len(self.records)

    @property
    def reward_sum(self):
        return float(sum(r.reward for r in self.records))

    @property
    def initial_cells(self):
        return (self.instance.depot,) * self.instance.num_agents

    @property
    def positions(self):
        """Joint agent cells over time, starting with the reset row."""
        return [self.initial_cells] + [r.agent_cells for r in self.records]

    @property
    def total_distance(self):
        return env.total_distance(self.positions, self.tail_routes)


def rollout(policy, instance, max_steps=50, seed=0):
    """Run one full episode and attach per-agent tail routes.

    Deterministic given (policy parameters, instance, seed). Tails are
    attached whether or not the episode succeeded, so failed episodes still
    report a comparable traveled distance.
    """
    if max_steps < 0:
        raise InvariantViolation("max_steps must be non-negative")
    rng = rng_from_seed(seed)
    state = env.reset(instance)
    records = []
    terminal = state.all_visited or state.step_count >= max_steps
    while not terminal:
        moves = policy.select_moves(state, instance, rng)
        state, reward, terminal = env.step(state, moves, instance, max_steps)
        records.append(
            StepRecord(
                moves=tuple(env.Move(m) for m in moves),
                agent_cells=state.agent_cells,
                visited=state.visited,
                reward=reward,
            )
        )
    tails = tuple(tuple(env.tail_return_route(c, instance)) for c in state.agent_cells)
    return EpisodeTrace(
        instance=instance,
        policy_name=policy.name,
        seed=seed,
        max_steps=max_steps,
        records=tuple(records),
        tail_routes=tails,
        termination=TERMINATION_VISITED if state.all_visited else TERMINATION_STEP_LIMIT,
    )


def optimality_gap(policy_distance, oracle_distance):
    """policy / oracle distance ratio; 1.0 when both are zero."""
    if policy_distance < 0 or oracle_distance < 0:
        raise InvariantViolation("distances must be non-negative")
    if oracle_distance == 0:
        if policy_distance == 0:
            return 1.0
        raise InvariantViolation("oracle distance 0 with nonzero policy distance")
    return policy_distance / oracle_distance


@dataclass(frozen=True)
class EvalConfig:
    max_steps: int = 50
    master_seed: int = 0

    def __post_init__(self):
        if self.max_steps < 0:
            raise InvariantViolation("max_steps must be non-negative")


@dataclass(frozen=True)
class SuiteRow:
    """One evaluated instance; ``gap`` is None for failed episodes, and all
    quality fields are None when the rollout itself errored."""

    instance_name: str
    seed: int
    success: bool = False
    steps: int | None = None
    reward_sum: float | None = None
    policy_distance: int | None = None
    oracle_distance: int | None = None
    gap: float | None = None
    error: str | None = None


@dataclass(frozen=True)
class SuiteReport:
    policy_name: str
    rows: tuple

    @property
    def num_instances(self):
        return len(self.rows)

    @property
    def num_errors(self):
        return sum(1 for r in self.rows if r.error is not None)

    @property
    def success_rate(self):
        if not self.rows:
            return 0.0
        return sum(1 for r in self.rows if r.success) / len(self.rows)

    @property
    def median_gap(self):
        gaps = [r.gap for r in self.rows if r.success and r.gap is not None]
        return statistics.median(gaps) if gaps else None

    @property
    def median_success_distance(self):
        dists = [r.policy_distance for r in self.rows if r.success]
        return statistics.median(dists) if dists else None

    @property
    def mean_steps(self):
        steps = [r.steps for r in self.rows if r.error is None]
        return float(statistics.fmean(steps)) if steps else None

    def aggregates(self):
        return {
            "policy": self.policy_name,
            "num_instances": self.num_instances,
            "num_errors": self.num_errors,
            "success_rate": self.success_rate,
            "median_gap": self.median_gap,
            "median_success_distance": self.median_success_distance,
            "mean_steps": self.mean_steps,
        }

    def to_doc(self):
        rows = []
        for r in self.rows:
            rows.append(
                {
                    "instance": r.instance_name,
                    "seed": r.seed,
                    "success": r.success,
                    "steps": r.steps,
                    "reward_sum": r.reward_sum,
                    "policy_distance": r.policy_distance,
                    "oracle_distance": r.oracle_distance,
                    "gap": r.gap,
                    "error": r.error,
                }
            )
        return {"rows": rows, "aggregates": self.aggregates()}

    def rows_to_csv(self):
        header = "instance,seed,success,steps,reward_sum,policy_distance,oracle_distance,gap,error"
        lines = [header]
        for r in self.rows:
            lines.append(
                ",".join(
                    (
                        r.instance_name,
                        str(r.seed),
                        "1" if r.success else "0",
                        _csv_cell(r.steps),
                        _csv_cell(r.reward_sum),
                        _csv_cell(r.policy_distance),
                        _csv_cell(r.oracle_distance),
                        _csv_cell(r.gap),
                        r.error.replace(",", ";") if r.error else "",
                    )
                )
            )
        return "\n".join(lines) + "\n"


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def evaluate_suite(policy, instances, config=EvalConfig()):
    """One seeded rollout plus oracle solve per instance.

    Per-instance failures land in their row's ``error`` field; the suite
    always completes.
    """
    instances = list(instances)
    if not instances:
        raise InvariantViolation("evaluation suite is empty")
    rows = []
    for i, instance in enumerate(instances):
        name = instance.name or f"instance-{i:02d}"
        seed = derive_seed(config.master_seed, _KEY_ROLLOUT, i)
        try:
            trace = rollout(policy, instance, config.max_steps, seed)
            best = oracle.solve_exact(instance)
            distance = trace.total_distance
            rows.append(
                SuiteRow(
                    instance_name=name,
                    seed=seed,
                    success=trace.success,
                    steps=trace.steps,
                    reward_sum=trace.reward_sum,
                    policy_distance=distance,
                    oracle_distance=best.total_distance,
                    gap=optimality_gap(distance, best.total_distance) if trace.success else None,
                )
            )
        except GridRouteError as exc:
            rows.append(SuiteRow(instance_name=name, seed=seed, error=str(exc)))
    return SuiteReport(policy_name=policy.name, rows=tuple(rows))


def unseen_instances(count, generator_config, master_seed=0, exclude_landmark_sets=()):
    """Fresh evaluation instances whose landmark sets avoid ``exclude_landmark_sets``.

    Walks the evaluation seed partition until ``count`` instances are found,
    so training and evaluation problems can never coincide.
    """
    if count < 1:
        raise InvariantViolation("count must be positive")
    excluded = {frozenset(s) for s in exclude_landmark_sets}
    out = []
    j = 0
    while len(out) < count:
        seed = derive_seed(master_seed, _KEY_EVAL, j)
        inst = generate(generator_config.with_seed(seed), name=f"eval-{j:02d}")
        j += 1
        if frozenset(inst.landmarks) in excluded:
            continue
        out.append(inst)
    return out


def trace_to_doc(trace):
    doc = {
        "format": "gridroute-trace",
        "instance": instance_to_doc(trace.instance),
        "policy": trace.policy_name,
        "seed": trace.seed,
        "max_steps": trace.max_steps,
        "initial_cells": list(trace.initial_cells),
        "steps": [
            {
                "moves": "".join(m.letter for m in r.moves),
                "agent_cells": list(r.agent_cells),
                "visited": list(r.visited),
                "reward": r.reward,
            }
            for r in trace.records
        ],
        "termination": trace.termination,
        "success": trace.success,
        "tail_routes": [list(t) for t in trace.tail_routes],
        "total_distance": trace.total_distance,
        "reward_sum": trace.reward_sum,
    }
    return doc


def trace_from_doc(doc):
    """Parse and cross-check a trace document; inconsistent traces are rejected."""
    if not isinstance(doc, dict) or doc.get("format") != "gridroute-trace":
        raise InvariantViolation("not a trace document")
    try:
        instance = instance_from_doc(doc["instance"])
        termination = doc["termination"]
        max_steps = int(doc["max_steps"])
        records = []
        for step in doc["steps"]:
            moves = tuple(_MOVES_BY_LETTER[ch] for ch in step["moves"])
            records.append(
                StepRecord(
                    moves=moves,
                    agent_cells=tuple(int(c) for c in step["agent_cells"]),
                    visited=tuple(bool(v) for v in step["visited"]),
                    reward=float(step["reward"]),
                )
            )
        trace = EpisodeTrace(
            instance=instance,
            policy_name=str(doc["policy"]),
            seed=int(doc["seed"]),
            max_steps=max_steps,
            records=tuple(records),
            tail_routes=tuple(tuple(int(c) for c in t) for t in doc["tail_routes"]),
            termination=termination,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantViolation(f"malformed trace document: {exc}") from exc
    if termination not in (TERMINATION_VISITED, TERMINATION_STEP_LIMIT):
        raise InvariantViolation(f"unknown termination cause {termination!r}")
    if len(trace.records) > max_steps:
        raise InvariantViolation("trace has more steps than max_steps")
    for r in trace.records:
        if len(r.moves) != instance.num_agents or len(r.agent_cells) != instance.num_agents:
            raise InvariantViolation("step record does not match the agent count")
        if len(r.visited) != instance.num_landmarks:
            raise InvariantViolation("step record does not match the landmark count")
    declared = int(doc["total_distance"])
    actual = trace.total_distance  # also validates tail routes
    if declared != actual:
        raise InvariantViolation(f"trace declares distance {declared} but moves sum to {actual}")
    if bool(doc["success"]) != trace.success:
        raise InvariantViolation("trace success flag contradicts its termination cause")
    if not math.isclose(float(doc["reward_sum"]), trace.reward_sum, abs_tol=1e-9):
        raise InvariantViolation("trace reward_sum does not match its step rewards")
    return trace
