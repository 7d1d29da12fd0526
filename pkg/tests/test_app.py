"""App agent and the episode loop: rounds, steps, limits, replans, traces."""
import json

import pytest

from carobo.app import (
    EpisodeLimits,
    FailureReason,
    Verdict,
    build_app_prompt,
    read_trace,
    run_episode,
)
from carobo.llm import BackendConfig, ReplayConfig, ScriptedConfig
from carobo.model import (
    CaroboError,
    GlobalPlan,
    MemoryLog,
    Observation,
    SensorData,
    Status,
    UserRequest,
)
from carobo.sim import SimRobot, load_world


def empty_world():
    return load_world({"robot": {"x": 0, "y": 0, "heading": 0, "camera_pitch": 0}, "objects": []})


def scripted(policy_id, **kw):
    return BackendConfig(kind=ScriptedConfig(policy_id=policy_id), **kw)


HOST_LINE = json.dumps({"observation": "o", "thoughts": "think", "plan": ["p"], "comment": "c"})
FINISH_LINE = json.dumps({"observation": "o", "comment": "all done", "status": "FINISH"})


def forward_line(d=0.5):
    return json.dumps({
        "observation": "o", "comment": "go", "status": "CONTINUE",
        "command": {"name": "car_forward", "args": {"distance": d}},
    })


def replay_cfg(tmp_path, lines, name="trace.jsonl", max_retries=3):
    p = tmp_path / name
    p.write_text("\n".join(json.dumps(l) for l in lines) + "\n", encoding="utf-8")
    return BackendConfig(kind=ReplayConfig(trace_path=str(p)), max_retries=max_retries)


# ---------------------------------------------------------------------------
# Prompt

def test_app_prompt_carries_plan_and_window():
    request = UserRequest(text="r")
    prompt = build_app_prompt(
        request,
        GlobalPlan(steps=("a", "b")),
        Observation.from_items(()),
        SensorData(ultrasonic_clearance=1, ir_left=False, ir_right=False),
        MemoryLog(),
    )
    assert [b.kind for b in prompt.user_blocks] == [
        "request", "plan", "observation", "sensors", "memory",
    ]
    assert "1. a" in prompt.block("plan").text


# ---------------------------------------------------------------------------
# Episode outcomes

def test_finish_on_first_round_counts_no_steps(tmp_path):
    cfg = replay_cfg(tmp_path, [HOST_LINE, FINISH_LINE])
    result = run_episode(UserRequest(text="r"), SimRobot(empty_world()), cfg, cfg)
    assert result.verdict is Verdict.SUCCESS
    assert result.failure_reason is None
    assert (result.steps, result.rounds) == (0, 1)
    assert len(result.trace) == 1
    assert result.trace.rounds[0].status is Status.FINISH
    # the host's thoughts ride on the first decided round
    assert result.trace.rounds[0].thoughts == "think"


def test_step_limit_failure(tmp_path):
    cfg = replay_cfg(tmp_path, [HOST_LINE] + [forward_line(0.1)] * 10)
    result = run_episode(
        UserRequest(text="r"), SimRobot(empty_world()), cfg, cfg,
        limits=EpisodeLimits(max_steps=4),
    )
    assert result.verdict is Verdict.FAILURE
    assert result.failure_reason is FailureReason.STEP_LIMIT
    assert (result.steps, result.rounds) == (4, 4)


def test_steps_count_only_dispatched_commands(tmp_path):
    cfg = replay_cfg(tmp_path, [HOST_LINE, forward_line(), forward_line(), FINISH_LINE])
    result = run_episode(UserRequest(text="r"), SimRobot(empty_world()), cfg, cfg)
    assert result.verdict is Verdict.SUCCESS
    assert (result.steps, result.rounds) == (2, 3)
    assert [r.status for r in result.trace.rounds] == [
        Status.CONTINUE, Status.CONTINUE, Status.FINISH,
    ]
    assert result.trace.rounds[1].thoughts is None


def test_retry_consumes_garbage_within_a_round(tmp_path):
    # with retries in budget, a bad completion is retried inside the same
    # round; the next line serves as the retry's answer
    cfg = replay_cfg(tmp_path, [HOST_LINE, "garbage", forward_line(), FINISH_LINE])
    result = run_episode(UserRequest(text="r"), SimRobot(empty_world()), cfg, cfg)
    assert result.verdict is Verdict.SUCCESS
    assert (result.steps, result.rounds) == (1, 2)


def test_round_errors_are_rounds_but_not_steps(tmp_path):
    cfg = replay_cfg(
        tmp_path, [HOST_LINE, "garbage", forward_line(), FINISH_LINE], max_retries=0,
    )
    trace_path = tmp_path / "episode.jsonl"
    result = run_episode(
        UserRequest(text="r"), SimRobot(empty_world()), cfg, cfg, trace_path=trace_path,
    )
    assert result.verdict is Verdict.SUCCESS
    assert (result.steps, result.rounds) == (1, 3)
    assert len(result.trace) == 2  # the memory log holds only decided rounds
    records = read_trace(trace_path)
    kinds = [r["type"] for r in records]
    assert kinds == ["episode", "host", "round_error", "round", "round", "result"]


def test_three_consecutive_errors_trigger_one_replan(tmp_path):
    lines = [HOST_LINE, "x", "x", "x", HOST_LINE, FINISH_LINE]
    cfg = replay_cfg(tmp_path, lines, max_retries=0)
    trace_path = tmp_path / "episode.jsonl"
    result = run_episode(
        UserRequest(text="r"), SimRobot(empty_world()), cfg, cfg, trace_path=trace_path,
    )
    assert result.verdict is Verdict.SUCCESS
    assert result.rounds == 4  # three failed decides plus the finish
    records = read_trace(trace_path)
    assert [r["type"] for r in records] == [
        "episode", "host", "round_error", "round_error", "round_error",
        "host", "round", "result",
    ]


def test_second_error_streak_aborts(tmp_path):
    lines = [HOST_LINE, "x", "x", "x", HOST_LINE, "x", "x", "x"]
    cfg = replay_cfg(tmp_path, lines, max_retries=0)
    result = run_episode(UserRequest(text="r"), SimRobot(empty_world()), cfg, cfg)
    assert result.verdict is Verdict.FAILURE
    assert result.failure_reason is FailureReason.BACKEND_ERROR
    assert result.steps == 0


def test_errors_interleaved_with_progress_do_not_replan(tmp_path):
    lines = [HOST_LINE, "x", "x", forward_line(), "x", "x", forward_line(), FINISH_LINE]
    cfg = replay_cfg(tmp_path, lines, max_retries=0)
    trace_path = tmp_path / "episode.jsonl"
    result = run_episode(
        UserRequest(text="r"), SimRobot(empty_world()), cfg, cfg, trace_path=trace_path,
    )
    assert result.verdict is Verdict.SUCCESS
    assert result.steps == 2
    records = read_trace(trace_path)
    assert sum(1 for r in records if r["type"] == "host") == 1


def test_host_failure_is_backend_error(tmp_path):
    cfg = replay_cfg(tmp_path, ["garbage"] * 8)
    result = run_episode(UserRequest(text="r"), SimRobot(empty_world()), cfg, cfg)
    assert result.verdict is Verdict.FAILURE
    assert result.failure_reason is FailureReason.BACKEND_ERROR
    assert (result.steps, result.rounds) == (0, 0)


def test_round_limit_backstops_decide_loops(tmp_path):
    # alternating bad and good completions: rounds outpace steps, so the
    # round budget trips first
    lines = [HOST_LINE, "x", forward_line(0.05), "x", forward_line(0.05), "x", forward_line(0.05)]
    cfg = replay_cfg(tmp_path, lines, max_retries=0)
    result = run_episode(
        UserRequest(text="r"), SimRobot(empty_world()), cfg, cfg,
        limits=EpisodeLimits(max_steps=5, max_rounds=6),
    )
    assert result.verdict is Verdict.FAILURE
    assert result.failure_reason is FailureReason.STEP_LIMIT
    assert (result.steps, result.rounds) == (3, 6)


def test_limits_validation():
    with pytest.raises(CaroboError):
        EpisodeLimits(max_steps=0)
    with pytest.raises(CaroboError):
        EpisodeLimits(max_steps=10, max_rounds=5)
    assert EpisodeLimits(max_steps=8).max_rounds == 13


def test_episode_trace_has_no_wall_clock(tmp_path):
    cfg = replay_cfg(tmp_path, [HOST_LINE, forward_line(), FINISH_LINE])
    trace_path = tmp_path / "episode.jsonl"
    run_episode(UserRequest(text="r"), SimRobot(empty_world()), cfg, cfg, trace_path=trace_path)
    text = trace_path.read_text(encoding="utf-8")
    assert "timestamp" not in text
    header = json.loads(text.splitlines()[0])
    assert header["type"] == "episode"
    assert header["request_text"] == "r"
    assert "world" in header and "limits" in header


def test_spin_policy_runs_to_step_limit():
    cfg = scripted("spin")
    result = run_episode(
        UserRequest(text="whatever"), SimRobot(empty_world()), cfg, cfg,
        limits=EpisodeLimits(max_steps=5),
    )
    assert result.failure_reason is FailureReason.STEP_LIMIT
    assert result.steps == 5


def test_shared_backend_for_equal_configs(tmp_path):
    # host consumes line one, app continues on the same cursor: a single
    # stream only works if both agents share the backend instance
    cfg = replay_cfg(tmp_path, [HOST_LINE, FINISH_LINE])
    result = run_episode(UserRequest(text="r"), SimRobot(empty_world()), cfg, cfg)
    assert result.verdict is Verdict.SUCCESS


def test_distinct_configs_get_distinct_cursors(tmp_path):
    host_cfg = replay_cfg(tmp_path, [HOST_LINE], name="host.jsonl")
    app_cfg = replay_cfg(tmp_path, [FINISH_LINE], name="app.jsonl")
    result = run_episode(UserRequest(text="r"), SimRobot(empty_world()), host_cfg, app_cfg)
    assert result.verdict is Verdict.SUCCESS
    assert result.rounds == 1
