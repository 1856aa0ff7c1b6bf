"""Random problem generation and instance documents.

Walls and the depot stay fixed; only landmark positions vary between
problems. Randomness comes from numpy's counter-based Philox generator so a
seed fully determines an instance; the numpy version is recorded in training
checkpoints because numpy only guarantees stream stability per version.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from .env import (
    DEFAULT_COLS,
    DEFAULT_DEPOT,
    DEFAULT_NUM_AGENTS,
    DEFAULT_NUM_LANDMARKS,
    DEFAULT_ROWS,
    DEFAULT_WALLS,
    ProblemInstance,
)
from .errors import InvariantViolation

RNG_ALGORITHM = "numpy.random.Philox"


def derive_seed(master_seed, *key):
    """Stable 64-bit child seed for a purpose-keyed stream of ``master_seed``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])


def rng_from_seed(seed):
    """Philox generator for one reproducible stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class GeneratorConfig:
    """Board layout plus sampling parameters for random problems."""

    rows: int = DEFAULT_ROWS
    cols: int = DEFAULT_COLS
    walls: frozenset = DEFAULT_WALLS
    depot: int = DEFAULT_DEPOT
    num_landmarks: int = DEFAULT_NUM_LANDMARKS
    num_agents: int = DEFAULT_NUM_AGENTS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "walls", frozenset(self.walls))
        if self.num_landmarks < 1:
            raise InvariantViolation("num_landmarks must be positive")
        # Structural board checks are shared with ProblemInstance.
        ProblemInstance(
            rows=self.rows,
            cols=self.cols,
            walls=self.walls,
            depot=self.depot,
            landmarks=(),
            num_agents=self.num_agents,
        )

    def with_seed(self, seed):
        return replace(self, seed=seed)


def generate(config, name=None):
    """Sample one problem: landmarks uniform without replacement over free cells."""
    free = sorted(set(range(config.rows * config.cols)) - config.walls - {config.depot})
    if config.num_landmarks > len(free):
        raise InvariantViolation(
            f"cannot place {config.num_landmarks} landmarks on {len(free)} free cells"
        )
    rng = rng_from_seed(config.seed)
    picks = rng.choice(len(free), size=config.num_landmarks, replace=False)
    landmarks = tuple(free[int(i)] for i in picks)
    return ProblemInstance(
        rows=config.rows,
        cols=config.cols,
        walls=config.walls,
        depot=config.depot,
        landmarks=landmarks,
        num_agents=config.num_agents,
        name=name if name is not None else f"seed-{config.seed}",
    )


def instance_to_doc(instance):
    """Canonical JSON-able document; walls sorted, landmark order preserved."""
    doc = {
        "rows": instance.rows,
        "cols": instance.cols,
        "walls": sorted(instance.walls),
        "depot": instance.depot,
        "landmarks": list(instance.landmarks),
        "num_agents": instance.num_agents,
    }
    if instance.name is not None:
        doc["name"] = instance.name
    return doc


def instance_from_doc(doc):
    """Parse and fully validate an instance document."""
    if not isinstance(doc, dict):
        raise InvariantViolation("instance document is not a JSON object")
    required = ("rows", "cols", "walls", "depot", "landmarks", "num_agents")
    for key in required:
        if key not in doc:
            raise InvariantViolation(f"instance document missing field '{key}'")
    unknown = set(doc) - set(required) - {"name"}
    if unknown:
        raise InvariantViolation(f"instance document has unknown fields {sorted(unknown)}")
    for key in ("rows", "cols", "depot", "num_agents"):
        if not isinstance(doc[key], int) or isinstance(doc[key], bool):
            raise InvariantViolation(f"field '{key}' must be an integer")
    for key in ("walls", "landmarks"):
        if not isinstance(doc[key], list) or any(
            not isinstance(c, int) or isinstance(c, bool) for c in doc[key]
        ):
            raise InvariantViolation(f"field '{key}' must be a list of integers")
    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise InvariantViolation("field 'name' must be a string")
    return ProblemInstance(
        rows=doc["rows"],
        cols=doc["cols"],
        walls=frozenset(doc["walls"]),
        depot=doc["depot"],
        landmarks=tuple(doc["landmarks"]),
        num_agents=doc["num_agents"],
        name=name,
    )


def dump_instance(instance):
    return json.dumps(instance_to_doc(instance), indent=2) + "\n"


def load_instance(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvariantViolation(f"malformed instance document: {exc}") from exc
    return instance_from_doc(doc)
