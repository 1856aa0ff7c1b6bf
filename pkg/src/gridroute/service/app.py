"""FastAPI application: one endpoint per core operation.

Domain errors map to structured JSON: invariant violations become 422
responses, numerical training failures become 500 responses that carry the
last-good checkpoint and partial metrics when available.
"""

import time

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import evaluation, oracle, render, trainer
from ..errors import InvariantViolation, NumericalAbort
from ..problems import GeneratorConfig, generate, instance_from_doc, instance_to_doc
from ..net import checkpoint_from_doc
from .schemas import (
    EvaluateRequest,
    EvaluateResponse,
    GenerateRequest,
    GenerateResponse,
    HealthResponse,
    RenderRequest,
    RenderResponse,
    RolloutRequest,
    RolloutResponse,
    SolveRequest,
    SolveResponse,
    TrainRequest,
    TrainResponse,
    ValidateRequest,
    ValidateResponse,
)


def _build_policy(name, checkpoint_doc):
    if name == "random":
        return evaluation.RandomPolicy()
    if name == "greedy-landmark":
        return evaluation.GreedyLandmarkPolicy()
    if name == "network":
        if checkpoint_doc is None:
            raise InvariantViolation("network policy requires a checkpoint")
        network, _, _ = checkpoint_from_doc(checkpoint_doc)
        return evaluation.NetworkPolicy(network)
    raise InvariantViolation(
        f"unknown policy {name!r}, expected network, random, or greedy-landmark"
    )


def create_app():
    from .. import __version__

    app = FastAPI(title="gridroute", version=__version__)

    @app.exception_handler(InvariantViolation)
    async def handle_invariant(request, exc):
        return JSONResponse(status_code=422, content={"error": "validation", "detail": str(exc)})

    @app.exception_handler(NumericalAbort)
    async def handle_numerical(request, exc):
        payload = {"error": "numerical", "detail": str(exc)}
        if exc.checkpoint is not None:
            payload["checkpoint"] = exc.checkpoint
        if exc.records is not None:
            payload["metrics_csv"] = trainer.records_to_csv(exc.records)
        return JSONResponse(status_code=500, content=payload)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/instances/generate", response_model=GenerateResponse)
    def generate_instances(req: GenerateRequest):
        base = GeneratorConfig(
            rows=req.rows,
            cols=req.cols,
            walls=frozenset(req.walls),
            depot=req.depot,
            num_landmarks=req.num_landmarks,
            num_agents=req.num_agents,
            seed=req.seed,
        )
        docs = []
        for j in range(req.count):
            inst = generate(base.with_seed(req.seed + j))
            docs.append(instance_to_doc(inst))
        return GenerateResponse(instances=docs)

    @app.post("/instances/validate", response_model=ValidateResponse)
    def validate_instance(req: ValidateRequest):
        inst = instance_from_doc(req.instance)
        return ValidateResponse(valid=True, instance=instance_to_doc(inst))

    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest):
        inst = instance_from_doc(req.instance)
        t0 = time.perf_counter()
        solution = oracle.solve_exact(inst)
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        return SolveResponse(**solution.to_doc(inst), elapsed_ms=elapsed_ms)

    @app.post("/train", response_model=TrainResponse)
    def train(req: TrainRequest):
        config = trainer.config_from_doc(req.config)
        t0 = time.perf_counter()
        result = trainer.run_schedule(config)
        elapsed = time.perf_counter() - t0
        last = result.records[-100:]
        summary = {
            "episodes": len(result.records),
            "elapsed_seconds": elapsed,
            "success_rate_last_100": sum(r.success for r in last) / len(last),
            "mean_steps_last_100": sum(r.steps for r in last) / len(last),
        }
        return TrainResponse(
            metrics_csv=result.metrics_csv(),
            checkpoint=result.checkpoint_doc(),
            summary=summary,
        )

    @app.post("/rollout", response_model=RolloutResponse)
    def run_rollout(req: RolloutRequest):
        inst = instance_from_doc(req.instance)
        policy = _build_policy(req.policy, req.checkpoint)
        trace = evaluation.rollout(policy, inst, req.max_steps, req.seed)
        return RolloutResponse(trace=evaluation.trace_to_doc(trace))

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate(req: EvaluateRequest):
        if (req.instances is None) == (req.count is None):
            raise InvariantViolation("provide exactly one of 'instances' or 'count'")
        config = trainer.config_from_doc(req.trainer_config)
        if req.instances is not None:
            instances = [instance_from_doc(d) for d in req.instances]
        else:
            seen = [inst.landmarks for inst in trainer.training_instances(config)]
            instances = evaluation.unseen_instances(
                req.count, config.generator, req.master_seed, seen
            )
        policy = _build_policy(req.policy, req.checkpoint)
        eval_config = evaluation.EvalConfig(max_steps=req.max_steps, master_seed=req.master_seed)
        report = evaluation.evaluate_suite(policy, instances, eval_config)
        return EvaluateResponse(report=report.to_doc(), rows_csv=report.rows_to_csv())

    @app.post("/render", response_model=RenderResponse)
    def render_trace(req: RenderRequest):
        trace = evaluation.trace_from_doc(req.trace)
        return RenderResponse(text=render.render_trace(trace, req.mode))

    return app


app = create_app()
