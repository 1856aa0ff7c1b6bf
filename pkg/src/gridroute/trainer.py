"""DQN training: replay-driven updates with annealed, heuristic-guided exploration.

A single "meta-agent" network consumes the joint state and emits one 4-slot
Q head per agent. TD targets follow r + gamma * max Q_target(s', .) per head,
sharing the scalar team reward; the schedule runs a fixed number of random
problems for a fixed number of episodes each and logs one record per episode.
"""

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import codec, env, net as qnet
from .errors import InvariantViolation, NumericalAbort
from .problems import RNG_ALGORITHM, GeneratorConfig, derive_seed, generate, rng_from_seed
from .replay import ReplayMemory, Transition

# spawn_key namespaces under the master seed
_KEY_NET = 0
_KEY_EXPLORE = 1
_KEY_REPLAY = 2
_KEY_PROBLEM = 3

METRICS_COLUMNS = (
    "episode",
    "problem_id",
    "steps",
    "reward_sum",
    "mean_loss",
    "epsilon",
    "heuristic_p",
    "success",
)


@dataclass(frozen=True)
class AnnealSchedule:
    """Linear interpolation start -> end over ``episodes``, clamped after."""

    start: float
    end: float
    episodes: int

    def __post_init__(self):
        if self.episodes < 1:
            raise InvariantViolation("anneal episodes must be positive")
        if self.end > self.start:
            raise InvariantViolation("anneal schedules must be non-increasing")

    def value(self, episode_index):
        if episode_index < 0:
            raise InvariantViolation("episode index must be non-negative")
        if episode_index >= self.episodes:
            return self.end
        frac = episode_index / self.episodes
        return self.start + (self.end - self.start) * frac


@dataclass(frozen=True)
class TrainerConfig:
    """Hyperparameters and schedule for one training run."""

    generator: GeneratorConfig = GeneratorConfig()
    gamma: float = 0.95
    learning_rate: float = 0.001
    replay_capacity: int = 10_000
    batch_size: int = 32
    learn_start: int = 500
    target_sync_interval: int = 200
    epsilon: AnnealSchedule = AnnealSchedule(1.0, 0.05, 300)
    heuristic: AnnealSchedule = AnnealSchedule(0.5, 0.05, 300)
    num_problems: int = 20
    episodes_per_problem: int = 30
    max_steps: int = 50
    master_seed: int = 42
    hidden_sizes: tuple = (512, 512)
    grad_clip_norm: float = 10.0
    reward_metric: str = "manhattan"

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))
        if not (0.0 <= self.gamma < 1.0):
            raise InvariantViolation("gamma must lie in [0, 1)")
        if self.learning_rate <= 0.0:
            raise InvariantViolation("learning rate must be positive")
        for name in ("replay_capacity", "batch_size", "learn_start", "target_sync_interval",
                     "num_problems", "episodes_per_problem", "max_steps"):
            if getattr(self, name) < 1:
                raise InvariantViolation(f"{name} must be positive")
        if self.learn_start < self.batch_size or self.replay_capacity < self.batch_size:
            raise InvariantViolation("batch_size cannot exceed learn_start or capacity")
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise InvariantViolation("hidden_sizes must be positive")
        if self.reward_metric not in ("manhattan", "bfs"):
            raise InvariantViolation("reward_metric must be 'manhattan' or 'bfs'")

    @property
    def layer_sizes(self):
        g = self.generator
        input_dim = g.num_agents + 2 * g.num_landmarks
        return (input_dim, *self.hidden_sizes, codec.NUM_MOVES * g.num_agents)

    @property
    def total_episodes(self):
        return self.num_problems * self.episodes_per_problem

    @property
    def reward_fn(self):
        return env.compute_reward if self.reward_metric == "manhattan" else env.compute_reward_bfs


@dataclass(frozen=True)
class EpisodeRecord:
    """One row of the training metrics; episode indices are 1-based and global."""

    episode: int
    problem_id: int
    steps: int
    reward_sum: float
    mean_loss: float
    epsilon: float
    heuristic_p: float
    success: bool


@dataclass
class TrainingResult:
    network: qnet.QNetwork
    adam: qnet.AdamState
    records: list
    metadata: dict

    def checkpoint_doc(self):
        return qnet.checkpoint_to_doc(self.network, self.adam, self.metadata)

    def metrics_csv(self):
        return records_to_csv(self.records)


def guided_subaction(agent_index, state, instance):
    """Heuristic move toward the nearest unvisited landmark, or None.

    Prefers the axis with the larger coordinate gap (horizontal on ties) and
    falls back to the other axis when the preferred move is blocked.
    """
    agent = state.agent_cells[agent_index]
    best = None
    for slot, cell in enumerate(instance.landmarks):
        if state.visited[slot]:
            continue
        d = grid_manhattan(agent, cell, instance)
        if best is None or d < best[0]:
            best = (d, cell)
    if best is None:
        return None
    ar, ac = divmod(agent, instance.cols)
    lr, lc = divmod(best[1], instance.cols)
    dr, dc = lr - ar, lc - ac
    horizontal = env.Move.RIGHT if dc > 0 else env.Move.LEFT
    vertical = env.Move.DOWN if dr > 0 else env.Move.UP
    if abs(dc) >= abs(dr):
        first, second = (horizontal, vertical if dr != 0 else None)
    else:
        first, second = (vertical, horizontal if dc != 0 else None)
    for move in (first, second):
        if move is not None and env.apply_move(agent, move, instance) != agent:
            return move
    return None


def grid_manhattan(a, b, instance):
    ra, ca = divmod(a, instance.cols)
    rb, cb = divmod(b, instance.cols)
    return abs(ra - rb) + abs(ca - cb)


def select_joint_action(network, state, instance, epsilon, heuristic_p, rng):
    """Per-agent mix of guided, uniform-random, and greedy moves."""
    q = qnet.forward(network, codec.normalize(codec.encode_state(state, instance), instance))
    greedy = codec.decode_joint_action(q, instance.num_agents)
    moves = []
    for agent in range(instance.num_agents):
        move = None
        if rng.random() < heuristic_p:
            move = guided_subaction(agent, state, instance)
        if move is None:
            if rng.random() < epsilon:
                move = env.Move(int(rng.integers(codec.NUM_MOVES)))
            else:
                move = greedy[agent]
        moves.append(move)
    return tuple(moves)


def td_targets(batch, target_net, gamma, instance):
    """Per-transition, per-agent-head regression targets from the Bellman backup.

    Terminal transitions regress every head to the stored reward; otherwise
    each head adds gamma times its own max over the target network's output
    for the next state.
    """
    if not batch:
        raise InvariantViolation("cannot build targets for an empty batch")
    num_agents = instance.num_agents
    rewards = np.array([t.reward for t in batch])
    terminal = np.array([t.terminal for t in batch])
    next_states = codec.normalize(np.stack([t.next_state for t in batch]), instance)
    q_next = qnet.forward(target_net, next_states).reshape(len(batch), num_agents, codec.NUM_MOVES)
    head_max = q_next.max(axis=2)
    targets = rewards[:, None] + gamma * head_max
    targets[terminal] = rewards[terminal, None]
    return targets


def train_step(network, target_net, adam, batch, gamma, instance, grad_clip_norm=10.0):
    """One squared-error update on the chosen-action slots; returns pre-update loss."""
    num_agents = instance.num_agents
    states = codec.normalize(np.stack([t.state for t in batch]), instance)
    actions = np.array([t.action for t in batch])
    q = qnet.forward(network, states)
    rows = np.arange(len(batch))[:, None]
    slots = codec.NUM_MOVES * np.arange(num_agents)[None, :] + actions
    chosen = q[rows, slots]
    targets = td_targets(batch, target_net, gamma, instance)
    diff = chosen - targets
    loss = float(np.mean(diff**2))
    if not math.isfinite(loss):
        raise NumericalAbort(f"non-finite training loss {loss!r}")
    grad_out = np.zeros_like(q)
    grad_out[rows, slots] = 2.0 * diff / diff.size
    grads = qnet.backward(network, states, grad_out)
    grads = qnet.clip_gradients(grads, grad_clip_norm)
    qnet.adam_step(network, grads, adam)
    return loss


def training_instances(config):
    """The schedule's problem sequence, derived deterministically from the master seed."""
    out = []
    for p in range(config.num_problems):
        seed = derive_seed(config.master_seed, _KEY_PROBLEM, p)
        out.append(generate(config.generator.with_seed(seed), name=f"train-{p:02d}"))
    return out


def run_schedule(config, progress=None):
    """Train over the full problem schedule and return the result bundle.

    ``progress`` may be a callable taking each EpisodeRecord as it is made.
    On numerical blowup the raised NumericalAbort carries the last-good
    checkpoint document and the records collected so far.
    """
    explore_rng = rng_from_seed(derive_seed(config.master_seed, _KEY_EXPLORE))
    replay_rng = rng_from_seed(derive_seed(config.master_seed, _KEY_REPLAY))
    network = qnet.init_network(config.layer_sizes, seed=derive_seed(config.master_seed, _KEY_NET))
    target = qnet.sync_target(network)
    adam = qnet.AdamState.for_network(network, learning_rate=config.learning_rate)
    memory = ReplayMemory(config.replay_capacity)
    metadata = _run_metadata(config)
    records = []
    train_steps = 0
    episode = 0
    try:
        for problem_id, instance in enumerate(training_instances(config)):
            for _ in range(config.episodes_per_problem):
                eps = config.epsilon.value(episode)
                hp = config.heuristic.value(episode)
                state = env.reset(instance)
                rewards = []
                losses = []
                terminal = False
                while not terminal:
                    action = select_joint_action(network, state, instance, eps, hp, explore_rng)
                    nxt, reward, terminal = env.step(
                        state, action, instance, config.max_steps, reward_fn=config.reward_fn
                    )
                    memory.push(
                        Transition(
                            state=codec.encode_state(state, instance),
                            action=tuple(int(m) for m in action),
                            reward=reward,
                            next_state=codec.encode_state(nxt, instance),
                            terminal=terminal,
                        )
                    )
                    rewards.append(reward)
                    if len(memory) >= config.learn_start:
                        batch = memory.sample(config.batch_size, replay_rng)
                        losses.append(
                            train_step(
                                network, target, adam, batch, config.gamma, instance,
                                config.grad_clip_norm,
                            )
                        )
                        train_steps += 1
                        if train_steps % config.target_sync_interval == 0:
                            target = qnet.sync_target(network)
                    state = nxt
                episode += 1
                record = EpisodeRecord(
                    episode=episode,
                    problem_id=problem_id,
                    steps=state.step_count,
                    reward_sum=float(sum(rewards)),
                    mean_loss=float(np.mean(losses)) if losses else math.nan,
                    epsilon=eps,
                    heuristic_p=hp,
                    success=state.all_visited,
                )
                records.append(record)
                if progress is not None:
                    progress(record)
    except NumericalAbort as abort:
        abort.checkpoint = qnet.checkpoint_to_doc(network, adam, metadata)
        abort.records = records
        raise
    return TrainingResult(network=network, adam=adam, records=records, metadata=metadata)


def _run_metadata(config):
    doc = json.dumps(config_to_doc(config), sort_keys=True)
    return {
        "master_seed": config.master_seed,
        "rng_algorithm": RNG_ALGORITHM,
        "numpy_version": np.__version__,
        "config_sha256": hashlib.sha256(doc.encode()).hexdigest(),
        "layer_sizes": list(config.layer_sizes),
    }


def records_to_csv(records):
    """Metrics CSV; float fields use repr so equal runs are byte-identical."""
    lines = [",".join(METRICS_COLUMNS)]
    for r in records:
        lines.append(
            ",".join(
                (
                    str(r.episode),
                    str(r.problem_id),
                    str(r.steps),
                    repr(r.reward_sum),
                    repr(r.mean_loss),
                    repr(r.epsilon),
                    repr(r.heuristic_p),
                    "1" if r.success else "0",
                )
            )
        )
    return "\n".join(lines) + "\n"


def config_to_doc(config):
    return {
        "generator": {
            "rows": config.generator.rows,
            "cols": config.generator.cols,
            "walls": sorted(config.generator.walls),
            "depot": config.generator.depot,
            "num_landmarks": config.generator.num_landmarks,
            "num_agents": config.generator.num_agents,
            "seed": config.generator.seed,
        },
        "gamma": config.gamma,
        "learning_rate": config.learning_rate,
        "replay_capacity": config.replay_capacity,
        "batch_size": config.batch_size,
        "learn_start": config.learn_start,
        "target_sync_interval": config.target_sync_interval,
        "epsilon": _schedule_to_doc(config.epsilon),
        "heuristic": _schedule_to_doc(config.heuristic),
        "num_problems": config.num_problems,
        "episodes_per_problem": config.episodes_per_problem,
        "max_steps": config.max_steps,
        "master_seed": config.master_seed,
        "hidden_sizes": list(config.hidden_sizes),
        "grad_clip_norm": config.grad_clip_norm,
        "reward_metric": config.reward_metric,
    }


def config_from_doc(doc):
    """Build a TrainerConfig from a (possibly partial) JSON document."""
    if not isinstance(doc, dict):
        raise InvariantViolation("trainer config document is not a JSON object")
    defaults = config_to_doc(TrainerConfig())
    unknown = set(doc) - set(defaults)
    if unknown:
        raise InvariantViolation(f"trainer config has unknown fields {sorted(unknown)}")
    merged = {**defaults, **doc}
    gen = {**defaults["generator"], **(merged["generator"] or {})}
    try:
        return TrainerConfig(
            generator=GeneratorConfig(
                rows=gen["rows"],
                cols=gen["cols"],
                walls=frozenset(gen["walls"]),
                depot=gen["depot"],
                num_landmarks=gen["num_landmarks"],
                num_agents=gen["num_agents"],
                seed=gen["seed"],
            ),
            gamma=merged["gamma"],
            learning_rate=merged["learning_rate"],
            replay_capacity=merged["replay_capacity"],
            batch_size=merged["batch_size"],
            learn_start=merged["learn_start"],
            target_sync_interval=merged["target_sync_interval"],
            epsilon=_schedule_from_doc(merged["epsilon"]),
            heuristic=_schedule_from_doc(merged["heuristic"]),
            num_problems=merged["num_problems"],
            episodes_per_problem=merged["episodes_per_problem"],
            max_steps=merged["max_steps"],
            master_seed=merged["master_seed"],
            hidden_sizes=tuple(merged["hidden_sizes"]),
            grad_clip_norm=merged["grad_clip_norm"],
            reward_metric=merged["reward_metric"],
        )
    except (KeyError, TypeError) as exc:
        raise InvariantViolation(f"malformed trainer config: {exc}") from exc


def _schedule_to_doc(schedule):
    return {"start": schedule.start, "end": schedule.end, "episodes": schedule.episodes}


def _schedule_from_doc(doc):
    if isinstance(doc, AnnealSchedule):
        return doc
    try:
        return AnnealSchedule(start=doc["start"], end=doc["end"], episodes=doc["episodes"])
    except (KeyError, TypeError) as exc:
        raise InvariantViolation(f"malformed anneal schedule: {exc}") from exc
