"""App agent: the observe/decide/act loop that executes a global plan.

Each round the agent gets a fresh observation and sensor read, decides one
command (or finishes), and the result is appended to an immutable memory log.
The loop stops on FINISH, on the step budget, or on the round budget; FINISH
is taken at face value here and judged against ground truth by the harness.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple

from .host import build_host_prompt, plan_with_raw, render_sensors
from .llm import (
    AgentTemplate,
    BackendConfig,
    AppDecision,
    Prompt,
    assemble_prompt,
    load_agent_template,
    make_backend,
    parse_app_decision,
    serialize_host_decision,
    with_retry,
)
from .model import (
    CaroboError,
    GlobalPlan,
    MemoryLog,
    Observation,
    Round,
    SensorData,
    Status,
    UserRequest,
    append_round,
    canonical_json,
    render_memory,
)

APP_MEMORY_WINDOW = 10  # rounds shown to the executor; the host sees everything


class Verdict(Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"


class FailureReason(Enum):
    STEP_LIMIT = "StepLimit"
    FALSE_COMPLETION = "FalseCompletion"
    BACKEND_ERROR = "BackendError"


@dataclass(frozen=True)
class EpisodeLimits:
    max_steps: int = 20
    max_rounds: Optional[int] = None  # defaults to max_steps + 5

    def __post_init__(self):
        if self.max_steps < 1:
            raise CaroboError("max_steps must be >= 1")
        if self.max_rounds is None:
            object.__setattr__(self, "max_rounds", self.max_steps + 5)
        if self.max_rounds < self.max_steps:
            raise CaroboError("max_rounds must be >= max_steps")

    def to_dict(self) -> dict:
        return {"max_steps": self.max_steps, "max_rounds": self.max_rounds}

    @classmethod
    def from_dict(cls, data: dict) -> "EpisodeLimits":
        return cls(
            max_steps=int(data.get("max_steps", 20)),
            max_rounds=int(data["max_rounds"]) if data.get("max_rounds") is not None else None,
        )


@dataclass(frozen=True)
class EpisodeResult:
    request_id: str
    verdict: Verdict
    failure_reason: Optional[FailureReason]
    steps: int
    rounds: int
    trace: MemoryLog
    final_world_digest: Optional[str]

    def __post_init__(self):
        if self.steps > self.rounds:
            raise CaroboError("steps cannot exceed rounds")

    def summary(self) -> str:
        tail = f" ({self.failure_reason.value})" if self.failure_reason else ""
        return (
            f"{self.request_id}: {self.verdict.value}{tail}"
            f" after {self.steps} steps / {self.rounds} rounds"
        )


def build_app_prompt(
    request: UserRequest,
    global_plan: GlobalPlan,
    obs: Observation,
    sensors: SensorData,
    memory: MemoryLog,
    template: Optional[AgentTemplate] = None,
    memory_window: int = APP_MEMORY_WINDOW,
) -> Prompt:
    """Blocks: request, plan, observation, sensors, memory (last `memory_window` rounds)."""
    template = template or load_agent_template("app")
    memory_text = render_memory(memory, memory_window) or "(empty)"
    return assemble_prompt(
        template,
        {
            "request": request.text,
            "plan": global_plan.render(),
            "observation": obs.free_text,
            "sensors": render_sensors(sensors),
            "memory": memory_text,
        },
        image_attachment=obs.image_attachment,
    )


def decide(
    request: UserRequest,
    global_plan: GlobalPlan,
    obs: Observation,
    sensors: SensorData,
    memory: MemoryLog,
    backend_cfg: BackendConfig,
    backend=None,
    template: Optional[AgentTemplate] = None,
) -> AppDecision:
    decision, _raw, _digest = decide_with_raw(
        request, global_plan, obs, sensors, memory, backend_cfg, backend=backend, template=template
    )
    return decision


def decide_with_raw(
    request: UserRequest,
    global_plan: GlobalPlan,
    obs: Observation,
    sensors: SensorData,
    memory: MemoryLog,
    backend_cfg: BackendConfig,
    backend=None,
    template: Optional[AgentTemplate] = None,
) -> Tuple[AppDecision, str, str]:
    backend = backend or make_backend(backend_cfg)
    prompt = build_app_prompt(request, global_plan, obs, sensors, memory, template=template)
    raw_holder = {}

    def attempt():
        raw = backend.complete(prompt)
        raw_holder["raw"] = raw
        return parse_app_decision(raw)

    decision = with_retry(attempt, backend_cfg.max_retries)
    return decision, raw_holder.get("raw", ""), prompt.digest()


def render_trace(records: list) -> str:
    """One JSON record per line; no wall-clock anywhere, so traces are comparable."""
    return "\n".join(canonical_json(rec) for rec in records) + "\n"


def write_trace(records: list, path) -> None:
    Path(path).write_text(render_trace(records), encoding="utf-8")


def read_trace(path) -> list:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]


def run_episode(
    request: UserRequest,
    world_handle,
    backend_cfg_host: BackendConfig,
    backend_cfg_app: BackendConfig,
    limits: Optional[EpisodeLimits] = None,
    *,
    replan_after_errors: int = 3,
    trace_path=None,
    host_backend=None,
    app_backend=None,
    host_template: Optional[AgentTemplate] = None,
    app_template: Optional[AgentTemplate] = None,
) -> EpisodeResult:
    """Run one full episode against a robot handle.

    The handle is anything with connect() -> (sensors, observation) and
    execute(command) -> (exec_result, sensors, observation); both the direct
    simulator and the message bridge satisfy it.

    The host plans once up front. If the app agent's decisions fail
    `replan_after_errors` times in a row the host is consulted one more time;
    a second streak aborts the episode as a backend failure.
    """
    limits = limits or EpisodeLimits()
    if host_backend is None:
        host_backend = make_backend(backend_cfg_host)
    if app_backend is None:
        # a shared replay trace interleaves host and app calls on one cursor
        app_backend = host_backend if backend_cfg_app == backend_cfg_host else make_backend(backend_cfg_app)

    records = [
        {
            "type": "episode",
            "request_id": request.id,
            "request_text": request.text,
            "world": world_handle.world_doc(),
            "limits": limits.to_dict(),
        }
    ]

    def finish(verdict, reason, steps, rounds, memory):
        result = EpisodeResult(
            request_id=request.id,
            verdict=verdict,
            failure_reason=reason,
            steps=steps,
            rounds=rounds,
            trace=memory,
            final_world_digest=world_handle.world_digest(),
        )
        records.append(
            {
                "type": "result",
                "verdict": verdict.value,
                "failure_reason": reason.value if reason else None,
                "steps": steps,
                "rounds": rounds,
                "final_world_digest": result.final_world_digest,
            }
        )
        if trace_path is not None:
            write_trace(records, trace_path)
        return result

    sensors, obs = world_handle.connect()
    memory = MemoryLog()
    steps = 0
    rounds = 0

    try:
        host_decision, host_raw, host_digest = plan_with_raw(
            request, obs, sensors, memory, backend_cfg_host,
            backend=host_backend, template=host_template,
        )
    except CaroboError:
        return finish(Verdict.FAILURE, FailureReason.BACKEND_ERROR, steps, rounds, memory)
    records.append(
        {
            "type": "host",
            "prompt_digest": host_digest,
            "raw": host_raw,
            "decision": json.loads(serialize_host_decision(host_decision)),
        }
    )
    global_plan = host_decision.global_plan
    pending_thoughts: Optional[str] = host_decision.thoughts

    consecutive_errors = 0
    replans_used = 0
    while rounds < limits.max_rounds:
        rounds += 1
        try:
            decision, raw, digest = decide_with_raw(
                request, global_plan, obs, sensors, memory, backend_cfg_app,
                backend=app_backend, template=app_template,
            )
        except CaroboError as exc:
            consecutive_errors += 1
            records.append(
                {
                    "type": "round_error",
                    "round": rounds - 1,
                    "error": f"{type(exc).__name__}: {exc}",
                }
            )
            if consecutive_errors >= replan_after_errors > 0:
                if replans_used == 0:
                    try:
                        host_decision, host_raw, host_digest = plan_with_raw(
                            request, obs, sensors, memory, backend_cfg_host,
                            backend=host_backend, template=host_template,
                        )
                    except CaroboError:
                        return finish(Verdict.FAILURE, FailureReason.BACKEND_ERROR, steps, rounds, memory)
                    records.append(
                        {"type": "host", "prompt_digest": host_digest, "raw": host_raw,
                         "decision": json.loads(serialize_host_decision(host_decision))}
                    )
                    global_plan = host_decision.global_plan
                    replans_used = 1
                    consecutive_errors = 0
                else:
                    return finish(Verdict.FAILURE, FailureReason.BACKEND_ERROR, steps, rounds, memory)
            continue
        consecutive_errors = 0

        thoughts = pending_thoughts if len(memory) == 0 else None
        if decision.status is Status.FINISH:
            rnd = Round(
                index=len(memory),
                observation=obs,
                thoughts=thoughts,
                comment=decision.comment,
                status=Status.FINISH,
            )
            memory = append_round(memory, rnd)
            records.append(_round_record(rnd, raw, digest))
            return finish(Verdict.SUCCESS, None, steps, rounds, memory)

        exec_result, sensors_next, obs_next = world_handle.execute(decision.command)
        steps += 1
        rnd = Round(
            index=len(memory),
            observation=obs,
            thoughts=thoughts,
            comment=decision.comment,
            action=decision.command,
            exec_result=exec_result,
            status=Status.CONTINUE,
        )
        memory = append_round(memory, rnd)
        records.append(_round_record(rnd, raw, digest))
        obs, sensors = obs_next, sensors_next
        if steps >= limits.max_steps:
            break

    return finish(Verdict.FAILURE, FailureReason.STEP_LIMIT, steps, rounds, memory)


def _round_record(rnd: Round, raw: str, prompt_digest: str) -> dict:
    return {
        "type": "round",
        "index": rnd.index,
        "prompt_digest": prompt_digest,
        "raw": raw,
        "round": rnd.to_dict(),
    }
