"""Prompt assembly, decision parsing, retry behavior, backends."""
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from carobo.llm import (
    BLOCK_ORDER,
    AppDecision,
    BackendConfig,
    Block,
    HttpChatConfig,
    MalformedDecision,
    Prompt,
    ReplayBackend,
    ReplayConfig,
    ReplayExhausted,
    ScriptedConfig,
    TransportError,
    assemble_prompt,
    load_agent_template,
    make_backend,
    parse_app_decision,
    parse_host_decision,
    parse_template,
    serialize_app_decision,
    serialize_host_decision,
    with_retry,
)
from carobo.model import Command, InvariantViolation, Status, UnknownStatus


def blocks(**texts):
    fill = {"request": "r", "observation": "o", "sensors": "s", "memory": "m"}
    fill.update(texts)
    return tuple(Block(kind=k, text=v) for k, v in fill.items())


# ---------------------------------------------------------------------------
# Prompt invariants

def test_prompt_requires_exactly_one_request_block():
    with pytest.raises(InvariantViolation):
        Prompt(system="s", few_shot=(), user_blocks=(Block("observation", "o"),))
    doubled = blocks() + (Block("request", "again"),)
    with pytest.raises(InvariantViolation):
        Prompt(system="s", few_shot=(), user_blocks=doubled)


def test_prompt_requires_observation_sensors_memory():
    missing = tuple(b for b in blocks() if b.kind != "sensors")
    with pytest.raises(InvariantViolation):
        Prompt(system="s", few_shot=(), user_blocks=missing)


def test_prompt_enforces_block_order():
    shuffled = tuple(reversed(blocks()))
    with pytest.raises(InvariantViolation):
        Prompt(system="s", few_shot=(), user_blocks=shuffled)


def test_prompt_plan_block_is_optional_but_ordered():
    with_plan = (
        Block("request", "r"), Block("plan", "p"), Block("observation", "o"),
        Block("sensors", "s"), Block("memory", "m"),
    )
    p = Prompt(system="sys", few_shot=(), user_blocks=with_plan)
    assert [b.kind for b in p.user_blocks] == list(BLOCK_ORDER)
    assert p.block("plan").text == "p"
    assert p.user_text() == "r\n\np\n\no\n\ns\n\nm"


def test_prompt_digest_tracks_content():
    a = Prompt(system="s", few_shot=(), user_blocks=blocks())
    b = Prompt(system="s", few_shot=(), user_blocks=blocks(memory="different"))
    assert a.digest() != b.digest()
    assert a.digest() == Prompt(system="s", few_shot=(), user_blocks=blocks()).digest()


# ---------------------------------------------------------------------------
# Templates

def test_bundled_templates_parse():
    host = load_agent_template("host")
    app = load_agent_template("app")
    assert host.system and app.system
    assert len(host.examples) >= 1 and len(app.examples) >= 1
    assert "plan" in app.block_formats and "plan" not in host.block_formats


def test_assemble_prompt_fills_block_formats():
    app = load_agent_template("app")
    prompt = assemble_prompt(
        app,
        {"request": "do it", "plan": "1. go", "observation": "box ahead",
         "sensors": "clear", "memory": "(empty)"},
    )
    assert prompt.block("request").text.endswith("do it")
    assert "1. go" in prompt.block("plan").text
    assert prompt.few_shot == app.examples


def test_parse_template_rejects_missing_system():
    with pytest.raises(Exception) as err:
        parse_template("== example input ==\nhello\n== example output ==\nworld\n")
    assert "system" in str(err.value)


def test_parse_template_rejects_orphan_output():
    text = "== system ==\nsys\n== example output ==\nno input\n"
    with pytest.raises(Exception):
        parse_template(text)


def test_parse_template_sections():
    text = (
        "== system ==\nsys text\n"
        "== example input ==\nin\n"
        "== example output ==\nout\n"
        "== block request ==\nUser request:\n{request}\n"
    )
    tpl = parse_template(text)
    assert tpl.system == "sys text"
    assert tpl.examples == (("in", "out"),)
    assert tpl.block_formats["request"] == "User request:\n{request}"


# ---------------------------------------------------------------------------
# Decision parsing

def test_parse_host_decision_happy_path():
    raw = json.dumps({
        "observation": "a box",
        "thoughts": "approach it",
        "plan": ["go forward", "stop"],
        "comment": "ok",
    })
    d = parse_host_decision(raw)
    assert d.global_plan.steps == ("go forward", "stop")
    assert json.loads(serialize_host_decision(d))["plan"] == ["go forward", "stop"]


def test_parse_host_decision_wants_a_list_plan():
    raw = json.dumps({"observation": "o", "thoughts": "t", "plan": "just walk", "comment": "c"})
    with pytest.raises(MalformedDecision):
        parse_host_decision(raw)
    raw = json.dumps({"observation": "o", "thoughts": "t", "plan": [], "comment": "c"})
    with pytest.raises(MalformedDecision):
        parse_host_decision(raw)


def test_parse_app_decision_continue_and_finish():
    cont = json.dumps({
        "observation": "o", "comment": "c", "status": "CONTINUE",
        "command": {"name": "car_forward", "args": {"distance": 0.5}},
    })
    d = parse_app_decision(cont)
    assert d.status is Status.CONTINUE and d.command == Command.forward(0.5)

    fin = json.dumps({"observation": "o", "comment": "done", "status": "finish"})
    d = parse_app_decision(fin)
    assert d.status is Status.FINISH and d.command is None


def test_parse_app_decision_extracts_json_from_prose():
    raw = 'Sure! Here is my decision:\n{"observation": "o", "comment": "done", "status": "FINISH"}\nHope that helps.'
    assert parse_app_decision(raw).status is Status.FINISH


def test_continue_without_command_always_rejected():
    raw = json.dumps({"observation": "o", "comment": "c", "status": "CONTINUE"})
    with pytest.raises(MalformedDecision):
        parse_app_decision(raw)
    with pytest.raises(MalformedDecision):
        AppDecision(observation_desc="o", comment="c", status=Status.CONTINUE, command=None)


def test_parse_app_decision_bad_status_and_command():
    with pytest.raises(UnknownStatus):
        parse_app_decision(json.dumps({"observation": "o", "comment": "c", "status": "HALT"}))
    raw = json.dumps({
        "observation": "o", "comment": "c", "status": "CONTINUE",
        "command": {"name": "car_forward", "args": {"distance": 99}},
    })
    from carobo.model import ArgOutOfRange
    with pytest.raises(ArgOutOfRange):
        parse_app_decision(raw)


def test_parse_app_decision_rejects_non_json():
    with pytest.raises(MalformedDecision):
        parse_app_decision("no json here at all")
    with pytest.raises(MalformedDecision):
        parse_app_decision('{"unclosed": ')


_commands = st.one_of(
    st.builds(Command.forward, st.floats(0.01, 10.0)),
    st.builds(Command.back, st.floats(0.01, 10.0)),
    st.builds(Command.left, st.floats(0.01, 360.0)),
    st.builds(Command.right, st.floats(0.01, 360.0)),
    st.builds(Command.camera, st.floats(-30.0, 60.0)),
    st.builds(Command.buzz, st.floats(0.01, 10.0)),
)

_texts = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), min_size=0, max_size=40
)


@given(obs=_texts, comment=_texts, command=_commands, finish=st.booleans())
def test_app_decision_roundtrip_property(obs, comment, command, finish):
    if finish:
        d = AppDecision(observation_desc=obs, comment=comment, status=Status.FINISH, command=None)
    else:
        d = AppDecision(observation_desc=obs, comment=comment, status=Status.CONTINUE, command=command)
    again = parse_app_decision(serialize_app_decision(d))
    assert again == d


@given(obs=_texts, thoughts=_texts, comment=_texts,
       plan=st.lists(st.text(min_size=1, max_size=20).filter(str.strip), min_size=1, max_size=5))
def test_host_decision_roundtrip_property(obs, thoughts, comment, plan):
    raw = json.dumps({"observation": obs, "thoughts": thoughts, "plan": plan, "comment": comment})
    d = parse_host_decision(raw)
    assert parse_host_decision(serialize_host_decision(d)) == d


# ---------------------------------------------------------------------------
# Retry

class CountingBackend:
    def __init__(self, fail_with, succeed_after=None):
        self.calls = 0
        self.fail_with = fail_with
        self.succeed_after = succeed_after

    def attempt(self):
        self.calls += 1
        if self.succeed_after is not None and self.calls > self.succeed_after:
            return "ok"
        raise self.fail_with


def test_with_retry_total_attempts_is_one_plus_retries():
    backend = CountingBackend(TransportError("down"))
    with pytest.raises(TransportError):
        with_retry(backend.attempt, 3)
    assert backend.calls == 4


def test_with_retry_stops_on_first_success():
    backend = CountingBackend(MalformedDecision("junk"), succeed_after=2)
    assert with_retry(backend.attempt, 5) == "ok"
    assert backend.calls == 3


def test_with_retry_zero_retries_means_single_attempt():
    backend = CountingBackend(UnknownStatus("?"))
    with pytest.raises(UnknownStatus):
        with_retry(backend.attempt, 0)
    assert backend.calls == 1


def test_with_retry_does_not_swallow_other_errors():
    def boom():
        raise ValueError("not retryable")

    with pytest.raises(ValueError):
        with_retry(boom, 3)


# ---------------------------------------------------------------------------
# Backends

def test_make_backend_dispatch():
    assert make_backend(BackendConfig(kind=ScriptedConfig(policy_id="oracle"))).policy_id == "oracle"
    http = make_backend(BackendConfig(kind=HttpChatConfig(endpoint="http://x", model_name="m")))
    assert http.cfg.model_name == "m"


def test_replay_backend_line_formats(tmp_path):
    trace = tmp_path / "t.jsonl"
    decision = {"observation": "o", "comment": "c", "status": "FINISH"}
    lines = [
        json.dumps(json.dumps(decision)),          # JSON-string quoted completion
        json.dumps(decision),                      # bare decision object
        "verbatim not-json completion",            # raw line
        json.dumps({"type": "round", "raw": json.dumps(decision), "round": {}}),  # episode record
        json.dumps({"type": "result", "verdict": "Success"}),  # no raw: skipped
    ]
    trace.write_text("\n".join(lines) + "\n", encoding="utf-8")
    backend = ReplayBackend(ReplayConfig(trace_path=str(trace)))
    assert backend.complete(None) == json.dumps(decision)
    assert backend.complete(None) == json.dumps(decision)
    assert backend.complete(None) == "verbatim not-json completion"
    assert backend.complete(None) == json.dumps(decision)
    with pytest.raises(ReplayExhausted):
        backend.complete(None)


def test_replay_backend_missing_file():
    with pytest.raises(TransportError):
        ReplayBackend(ReplayConfig(trace_path="/nonexistent/nope.jsonl"))


def test_scripted_backend_unknown_policy():
    from carobo.llm import PolicyUnknown
    backend = make_backend(BackendConfig(kind=ScriptedConfig(policy_id="no_such")))
    prompt = Prompt(system="s", few_shot=(), user_blocks=blocks())
    with pytest.raises(PolicyUnknown):
        backend.complete(prompt)
