"""Benchmark harness: scenario loading, ground-truth judging, suite runs.

A suite file lists scenarios (request, world, goal, limits). Each scenario is
run as a full episode, then judged against its goal predicate using the final
simulator state, the executed path and every round comment. Judgments fold
into per-domain and overall success rates.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

from . import sim
from .app import (
    EpisodeLimits,
    EpisodeResult,
    FailureReason,
    Verdict,
    run_episode,
)
from .bridge import BridgeRobot, TcpRobotServer, start_local_robot, tcp_connect
from .llm import BackendConfig, ReplayConfig, ScriptedConfig
from .model import CaroboError, UserRequest
from .suite_data import DOMAINS

DATA_DIR = Path(__file__).parent / "data"


class CountError(CaroboError):
    """A suite does not have the required per-domain scenario counts."""


# ---------------------------------------------------------------------------
# Goal predicates

@dataclass(frozen=True)
class JudgeContext:
    """Everything a goal atom may inspect after an episode."""

    world: sim.WorldState
    comments: Tuple[str, ...]
    path_length: float


def build_context(result: EpisodeResult, world: sim.WorldState) -> JudgeContext:
    comments = tuple(r.comment for r in result.trace.rounds)
    path = sum(r.exec_result.distance_travelled for r in result.trace.rounds if r.exec_result)
    return JudgeContext(world=world, comments=comments, path_length=path)


class GoalPredicate:
    def evaluate(self, ctx: JudgeContext) -> bool:  # pragma: no cover - interface
        raise NotImplementedError

    def to_dict(self) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class Near(GoalPredicate):
    """Robot center within `within` meters of the object's boundary."""

    object_id: str
    within: float

    def evaluate(self, ctx: JudgeContext) -> bool:
        obj = ctx.world.object_by_id(self.object_id)
        return obj.shape.distance_from(ctx.world.robot.position) <= self.within

    def to_dict(self) -> dict:
        return {"op": "near", "object_id": self.object_id, "within": self.within}


_CMP = {
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
    "==": lambda a, b: a == b,
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
}


@dataclass(frozen=True)
class BuzzerCount(GoalPredicate):
    cmp: str
    count: int

    def __post_init__(self):
        if self.cmp not in _CMP:
            raise sim.SchemaError(f"unknown comparison: {self.cmp!r}")

    def evaluate(self, ctx: JudgeContext) -> bool:
        return _CMP[self.cmp](len(ctx.world.buzzer_events), self.count)

    def to_dict(self) -> dict:
        return {"op": "buzzer_count", "cmp": self.cmp, "count": self.count}


@dataclass(frozen=True)
class PoseWithin(GoalPredicate):
    x: float
    y: float
    tol: float

    def evaluate(self, ctx: JudgeContext) -> bool:
        rx, ry = ctx.world.robot.position
        return ((rx - self.x) ** 2 + (ry - self.y) ** 2) ** 0.5 <= self.tol

    def to_dict(self) -> dict:
        return {"op": "pose_within", "x": self.x, "y": self.y, "tol": self.tol}


@dataclass(frozen=True)
class HeadingWithin(GoalPredicate):
    deg: float
    tol: float

    def evaluate(self, ctx: JudgeContext) -> bool:
        diff = abs((ctx.world.robot.heading - self.deg + 180.0) % 360.0 - 180.0)
        return diff <= self.tol

    def to_dict(self) -> dict:
        return {"op": "heading_within", "deg": self.deg, "tol": self.tol}


@dataclass(frozen=True)
class CommentMatches(GoalPredicate):
    """Some round comment matches the regular expression."""

    pattern: str

    def evaluate(self, ctx: JudgeContext) -> bool:
        rx = re.compile(self.pattern)
        return any(rx.search(c) for c in ctx.comments)

    def to_dict(self) -> dict:
        return {"op": "comment_matches", "pattern": self.pattern}


@dataclass(frozen=True)
class PathLengthAtLeast(GoalPredicate):
    meters: float

    def evaluate(self, ctx: JudgeContext) -> bool:
        return ctx.path_length >= self.meters

    def to_dict(self) -> dict:
        return {"op": "path_length_at_least", "meters": self.meters}


@dataclass(frozen=True)
class CameraPitchAtLeast(GoalPredicate):
    deg: float

    def evaluate(self, ctx: JudgeContext) -> bool:
        return ctx.world.robot.camera_pitch >= self.deg

    def to_dict(self) -> dict:
        return {"op": "camera_pitch_at_least", "deg": self.deg}


@dataclass(frozen=True)
class And(GoalPredicate):
    clauses: Tuple[GoalPredicate, ...]

    def evaluate(self, ctx: JudgeContext) -> bool:
        return all(c.evaluate(ctx) for c in self.clauses)

    def to_dict(self) -> dict:
        return {"op": "and", "clauses": [c.to_dict() for c in self.clauses]}


@dataclass(frozen=True)
class Or(GoalPredicate):
    clauses: Tuple[GoalPredicate, ...]

    def evaluate(self, ctx: JudgeContext) -> bool:
        return any(c.evaluate(ctx) for c in self.clauses)

    def to_dict(self) -> dict:
        return {"op": "or", "clauses": [c.to_dict() for c in self.clauses]}


@dataclass(frozen=True)
class Not(GoalPredicate):
    clause: GoalPredicate

    def evaluate(self, ctx: JudgeContext) -> bool:
        return not self.clause.evaluate(ctx)

    def to_dict(self) -> dict:
        return {"op": "not", "clause": self.clause.to_dict()}


def parse_goal(doc: dict) -> GoalPredicate:
    if not isinstance(doc, dict) or "op" not in doc:
        raise sim.SchemaError("goal must be an object with an 'op' field")
    op = doc["op"]
    try:
        if op == "and":
            return And(tuple(parse_goal(c) for c in doc["clauses"]))
        if op == "or":
            return Or(tuple(parse_goal(c) for c in doc["clauses"]))
        if op == "not":
            return Not(parse_goal(doc["clause"]))
        if op == "near":
            return Near(str(doc["object_id"]), float(doc["within"]))
        if op == "buzzer_count":
            return BuzzerCount(str(doc["cmp"]), int(doc["count"]))
        if op == "pose_within":
            return PoseWithin(float(doc["x"]), float(doc["y"]), float(doc["tol"]))
        if op == "heading_within":
            return HeadingWithin(float(doc["deg"]), float(doc["tol"]))
        if op == "comment_matches":
            return CommentMatches(str(doc["pattern"]))
        if op == "path_length_at_least":
            return PathLengthAtLeast(float(doc["meters"]))
        if op == "camera_pitch_at_least":
            return CameraPitchAtLeast(float(doc["deg"]))
    except KeyError as exc:
        raise sim.SchemaError(f"goal op {op!r} is missing field {exc}") from None
    raise sim.SchemaError(f"unknown goal op: {op!r}")


# ---------------------------------------------------------------------------
# Suite loading

@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    domain: str
    request_text: str
    world_file: Path
    goal: GoalPredicate
    limits: EpisodeLimits

    def load_world(self) -> sim.WorldState:
        return sim.load_world(json.loads(self.world_file.read_text(encoding="utf-8")))


def default_suite_path() -> Path:
    return DATA_DIR / "suite.json"


def bundled_trace_dir(model: str) -> Path:
    return DATA_DIR / "traces" / model


def load_benchmark(path) -> Tuple[ScenarioSpec, ...]:
    """Load and validate a suite: exactly five scenarios in each domain."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise sim.SchemaError(f"cannot read suite {path}: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("scenarios"), list):
        raise sim.SchemaError("suite must be an object with a 'scenarios' list")
    specs = []
    seen = set()
    for entry in doc["scenarios"]:
        try:
            sid = str(entry["id"])
            domain = str(entry["domain"])
            spec = ScenarioSpec(
                id=sid,
                domain=domain,
                request_text=str(entry["request_text"]),
                world_file=(path.parent / entry["world_file"]).resolve(),
                goal=parse_goal(entry["goal"]),
                limits=EpisodeLimits(**entry.get("limits", {})),
            )
        except (KeyError, TypeError) as exc:
            raise sim.SchemaError(f"bad scenario entry: {exc}") from exc
        if domain not in DOMAINS:
            raise sim.SchemaError(f"unknown domain {domain!r} in scenario {sid!r}")
        if sid in seen:
            raise sim.SchemaError(f"duplicate scenario id {sid!r}")
        seen.add(sid)
        if not spec.world_file.exists():
            raise sim.SchemaError(f"world file missing for {sid!r}: {spec.world_file}")
        specs.append(spec)
    counts = {d: sum(1 for s in specs if s.domain == d) for d in DOMAINS}
    if any(c != 5 for c in counts.values()) or len(specs) != 20:
        raise CountError(f"suite must hold 5 scenarios per domain, got {counts}")
    return tuple(specs)


# ---------------------------------------------------------------------------
# Judging

@dataclass(frozen=True)
class Judgment:
    verdict: Verdict
    failure_reason: Optional[FailureReason]
    goal_met: bool


def judge(result: EpisodeResult, world: sim.WorldState, goal: GoalPredicate) -> Judgment:
    """Fold an episode outcome and the goal check into a final judgment.

    Finishing with the goal met is the only success; finishing without it is a
    false completion. Episodes that never finish keep their own failure reason.
    """
    ctx = build_context(result, world)
    met = goal.evaluate(ctx)
    if result.verdict is Verdict.SUCCESS:
        if met:
            return Judgment(Verdict.SUCCESS, None, True)
        return Judgment(Verdict.FAILURE, FailureReason.FALSE_COMPLETION, False)
    return Judgment(Verdict.FAILURE, result.failure_reason, met)


# ---------------------------------------------------------------------------
# Suite runs and reports

@dataclass(frozen=True)
class Row:
    scenario_id: str
    domain: str
    verdict: str
    failure_reason: Optional[str]
    steps: int
    rounds: int

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "domain": self.domain,
            "verdict": self.verdict,
            "failure_reason": self.failure_reason,
            "steps": self.steps,
            "rounds": self.rounds,
        }


@dataclass(frozen=True)
class Report:
    rows: Tuple[Row, ...]
    domain_rates: Dict[str, float] = field(default_factory=dict)
    overall_rate: float = 0.0

    def row(self, scenario_id: str) -> Row:
        for r in self.rows:
            if r.scenario_id == scenario_id:
                return r
        raise KeyError(scenario_id)

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "domain_rates": dict(self.domain_rates),
            "overall_rate": self.overall_rate,
        }

    def to_text(self) -> str:
        lines = [f"{'scenario':<10} {'domain':<22} {'verdict':<8} {'reason':<16} {'steps':>5} {'rounds':>6}"]
        for r in self.rows:
            lines.append(
                f"{r.scenario_id:<10} {r.domain:<22} {r.verdict:<8}"
                f" {r.failure_reason or '-':<16} {r.steps:>5} {r.rounds:>6}"
            )
        lines.append("")
        for domain in DOMAINS:
            if domain in self.domain_rates:
                n = sum(1 for r in self.rows if r.domain == domain)
                k = sum(1 for r in self.rows if r.domain == domain and r.verdict == Verdict.SUCCESS.value)
                lines.append(f"{domain:<22} {self.domain_rates[domain]:5.1f}% ({k}/{n})")
        total = len(self.rows)
        wins = sum(1 for r in self.rows if r.verdict == Verdict.SUCCESS.value)
        lines.append(f"{'overall':<22} {self.overall_rate:5.1f}% ({wins}/{total})")
        return "\n".join(lines)


def make_report(rows) -> Report:
    rows = tuple(rows)
    rates = {}
    for domain in DOMAINS:
        group = [r for r in rows if r.domain == domain]
        if group:
            wins = sum(1 for r in group if r.verdict == Verdict.SUCCESS.value)
            rates[domain] = wins * 100.0 / len(group)
    overall = (
        sum(1 for r in rows if r.verdict == Verdict.SUCCESS.value) * 100.0 / len(rows)
        if rows
        else 0.0
    )
    return Report(rows=rows, domain_rates=rates, overall_rate=overall)


BackendPair = Callable[[ScenarioSpec], Tuple[BackendConfig, BackendConfig]]


def scripted_pair(policy_id: str) -> BackendPair:
    def pick(_spec: ScenarioSpec):
        cfg = BackendConfig(kind=ScriptedConfig(policy_id=policy_id))
        return cfg, cfg

    return pick


def replay_pair(trace_dir) -> BackendPair:
    """Host and app share one recorded completion stream per scenario."""
    trace_dir = Path(trace_dir)

    def pick(spec: ScenarioSpec):
        cfg = BackendConfig(kind=ReplayConfig(trace_path=str(trace_dir / f"{spec.id}.jsonl")))
        return cfg, cfg

    return pick


def fixed_pair(host_cfg: BackendConfig, app_cfg: Optional[BackendConfig] = None) -> BackendPair:
    def pick(_spec: ScenarioSpec):
        return host_cfg, app_cfg or host_cfg

    return pick


def _open_robot(world: sim.WorldState, transport: str):
    """Build a robot handle plus (world getter, cleanup) for one episode."""
    if transport == "direct":
        handle = sim.SimRobot(world)
        return handle, (lambda: handle.world), handle.close
    if transport in ("local", "local:"):
        client, service, shutdown = start_local_robot(world)
        handle = BridgeRobot(client, world_getter=lambda: service.world)
        return handle, (lambda: service.world), shutdown
    if transport in ("tcp", "tcp:"):
        server = TcpRobotServer(world).start()
        conn = tcp_connect(server.host, server.port)
        handle = BridgeRobot(conn, world_getter=lambda: server.service.world)

        def cleanup():
            handle.close()
            server.stop()

        return handle, (lambda: server.service.world), cleanup
    raise CaroboError(
        f"benchmark transport must be direct, local: or tcp: (judging needs the world), got {transport!r}"
    )


def run_scenario(
    spec: ScenarioSpec,
    backends: BackendPair,
    transport: str = "direct",
    trace_path=None,
) -> Tuple[Row, EpisodeResult]:
    host_cfg, app_cfg = backends(spec)
    world = spec.load_world()
    handle, get_world, cleanup = _open_robot(world, transport)
    try:
        result = run_episode(
            UserRequest(text=spec.request_text, id=spec.id),
            handle,
            host_cfg,
            app_cfg,
            limits=spec.limits,
            trace_path=trace_path,
        )
        judgment = judge(result, get_world(), spec.goal)
    finally:
        cleanup()
    row = Row(
        scenario_id=spec.id,
        domain=spec.domain,
        verdict=judgment.verdict.value,
        failure_reason=judgment.failure_reason.value if judgment.failure_reason else None,
        steps=result.steps,
        rounds=result.rounds,
    )
    return row, result


def run_suite(
    specs,
    backends: BackendPair,
    transport: str = "direct",
    traces_dir=None,
) -> Report:
    rows = []
    for spec in specs:
        trace_path = None
        if traces_dir is not None:
            traces_dir = Path(traces_dir)
            traces_dir.mkdir(parents=True, exist_ok=True)
            trace_path = traces_dir / f"{spec.id}.jsonl"
        row, _result = run_scenario(spec, backends, transport=transport, trace_path=trace_path)
        rows.append(row)
    return make_report(rows)
