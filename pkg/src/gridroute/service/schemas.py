"""Request/response models for the HTTP service.

Nested documents (instances, checkpoints, traces, trainer configs) are typed
as plain dicts here; their semantic validation lives with the core codecs so
the service and any file-based workflow enforce identical rules.
"""

from pydantic import BaseModel, ConfigDict, Field

from .. import env


class HealthResponse(BaseModel):
    status: str
    version: str


class GenerateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    count: int = Field(default=1, ge=1, le=10_000)
    rows: int = env.DEFAULT_ROWS
    cols: int = env.DEFAULT_COLS
    walls: list[int] = Field(default_factory=lambda: sorted(env.DEFAULT_WALLS))
    depot: int = env.DEFAULT_DEPOT
    num_landmarks: int = env.DEFAULT_NUM_LANDMARKS
    num_agents: int = env.DEFAULT_NUM_AGENTS
    seed: int = 0


class GenerateResponse(BaseModel):
    instances: list[dict]


class ValidateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    instance: dict


class ValidateResponse(BaseModel):
    valid: bool
    instance: dict


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    instance: dict


class SolveResponse(BaseModel):
    total_distance: int
    agent_orders: list[list[int]]
    agent_routes: list[list[int]]
    instance: str | None = None
    elapsed_ms: float


class TrainRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict = Field(default_factory=dict)


class TrainResponse(BaseModel):
    metrics_csv: str
    checkpoint: dict
    summary: dict


class RolloutRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    instance: dict
    policy: str = "network"
    checkpoint: dict | None = None
    seed: int = 0
    max_steps: int = Field(default=50, ge=0)


class RolloutResponse(BaseModel):
    trace: dict


class EvaluateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    policy: str = "network"
    checkpoint: dict | None = None
    instances: list[dict] | None = None
    count: int | None = Field(default=None, ge=1)
    trainer_config: dict = Field(default_factory=dict)
    master_seed: int = 0
    max_steps: int = Field(default=50, ge=0)


class EvaluateResponse(BaseModel):
    report: dict
    rows_csv: str


class RenderRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trace: dict
    mode: str = "frames"


class RenderResponse(BaseModel):
    text: str
