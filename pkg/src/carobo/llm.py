"""Language-model plumbing: prompt assembly, backends, decision parsing, retry.

Three interchangeable backends produce completions: an HTTP chat endpoint, a
deterministic scripted policy, and a replay cursor over a recorded trace.
Completions are parsed strictly; variance from a live model is absorbed by
bounded retries, never by loosening the schema.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import requests

from .model import (
    CaroboError,
    Command,
    GlobalPlan,
    InvalidCommand,
    InvariantViolation,
    Status,
    UnknownStatus,
    canonical_json,
    parse_status,
)


class MalformedDecision(CaroboError):
    """Completion does not contain the expected JSON decision object."""


class TransportError(CaroboError):
    """The completion request could not be served (network, HTTP, payload)."""


class ReplayExhausted(CaroboError):
    """The replay trace has no more completions."""


class PolicyUnknown(CaroboError):
    """No scripted policy is registered under the requested id."""


# ---------------------------------------------------------------------------
# Prompts

BLOCK_ORDER = ("request", "plan", "observation", "sensors", "memory")
REQUIRED_BLOCKS = ("request", "observation", "sensors", "memory")


@dataclass(frozen=True)
class Block:
    kind: str
    text: str
    image_attachment: Optional[bytes] = None


@dataclass(frozen=True)
class Prompt:
    """System text, few-shot pairs, and ordered user blocks.

    Exactly one request block, blocks in the fixed order
    (request, plan?, observation, sensors, memory).
    """

    system: str
    few_shot: Tuple[Tuple[str, str], ...] = ()
    user_blocks: Tuple[Block, ...] = ()

    def __post_init__(self):
        kinds = [b.kind for b in self.user_blocks]
        if kinds.count("request") != 1:
            raise InvariantViolation("prompt must carry exactly one request block")
        expected = [k for k in BLOCK_ORDER if k in kinds]
        if kinds != expected or any(k not in BLOCK_ORDER for k in kinds):
            raise InvariantViolation(f"prompt blocks out of order: {kinds}")
        missing = [k for k in REQUIRED_BLOCKS if k not in kinds]
        if missing:
            raise InvariantViolation(f"prompt blocks missing: {missing}")

    def block(self, kind: str) -> Optional[Block]:
        for b in self.user_blocks:
            if b.kind == kind:
                return b
        return None

    def user_text(self) -> str:
        return "\n\n".join(b.text for b in self.user_blocks)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.system.encode("utf-8"))
        for a, b in self.few_shot:
            h.update(b"\x00" + a.encode("utf-8") + b"\x00" + b.encode("utf-8"))
        for blk in self.user_blocks:
            h.update(b"\x00" + blk.kind.encode("ascii") + b"\x1f" + blk.text.encode("utf-8"))
        return h.hexdigest()


# ---------------------------------------------------------------------------
# Agent templates (plain text files, editable without touching code)

_TEMPLATE_DIR = Path(__file__).parent / "templates"


@dataclass(frozen=True)
class AgentTemplate:
    system: str
    examples: Tuple[Tuple[str, str], ...]
    block_formats: dict  # kind -> format string with a single {kind} placeholder


def parse_template(text: str) -> AgentTemplate:
    """Split a template file into sections marked by '== name ==' lines."""
    sections: list[tuple[str, list[str]]] = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("==") and stripped.endswith("==") and len(stripped) > 4:
            sections.append((stripped.strip("= ").lower(), []))
        elif sections:
            sections[-1][1].append(line)
    system = ""
    examples = []
    pending_input = None
    block_formats = {}
    for name, lines in sections:
        body = "\n".join(lines).strip()
        if name == "system":
            system = body
        elif name == "example input":
            pending_input = body
        elif name == "example output":
            if pending_input is None:
                raise CaroboError("example output without a preceding example input")
            examples.append((pending_input, body))
            pending_input = None
        elif name.startswith("block "):
            kind = name.split(None, 1)[1]
            if kind not in BLOCK_ORDER:
                raise CaroboError(f"template declares unknown block kind {kind!r}")
            block_formats[kind] = body
    if not system:
        raise CaroboError("template has no system section")
    return AgentTemplate(system=system, examples=tuple(examples), block_formats=block_formats)


def load_agent_template(role: str, template_dir: Optional[Path] = None) -> AgentTemplate:
    """Load host_agent.tmpl / app_agent.tmpl from the given directory (or bundled)."""
    base = Path(template_dir) if template_dir else _TEMPLATE_DIR
    path = base / f"{role}_agent.tmpl"
    return parse_template(path.read_text(encoding="utf-8"))


def assemble_prompt(
    template: AgentTemplate,
    pieces: dict,
    image_attachment: Optional[bytes] = None,
) -> Prompt:
    """Fill the template's block formats with content, in canonical block order."""
    blocks = []
    for kind in BLOCK_ORDER:
        if kind not in pieces:
            continue
        fmt = template.block_formats.get(kind, kind.capitalize() + ":\n{" + kind + "}")
        text = fmt.format(**{kind: pieces[kind]})
        attachment = image_attachment if kind == "observation" else None
        blocks.append(Block(kind=kind, text=text, image_attachment=attachment))
    return Prompt(system=template.system, few_shot=template.examples, user_blocks=tuple(blocks))


# ---------------------------------------------------------------------------
# Backend configuration

@dataclass(frozen=True)
class HttpChatConfig:
    endpoint: str
    model_name: str
    timeout_s: float = 30.0
    api_key_env: str = "CAROBO_API_KEY"
    supports_vision: bool = False


@dataclass(frozen=True)
class ScriptedConfig:
    policy_id: str


@dataclass(frozen=True)
class ReplayConfig:
    trace_path: str


@dataclass(frozen=True)
class BackendConfig:
    kind: Union[HttpChatConfig, ScriptedConfig, ReplayConfig]
    max_retries: int = 3
    temperature: float = 0.0


class HttpChatBackend:
    """POSTs an OpenAI-style chat payload and extracts the first choice."""

    def __init__(self, cfg: HttpChatConfig, temperature: float = 0.0):
        self.cfg = cfg
        self.temperature = temperature

    def _messages(self, prompt: Prompt) -> list:
        messages = [{"role": "system", "content": prompt.system}]
        for user, assistant in prompt.few_shot:
            messages.append({"role": "user", "content": user})
            messages.append({"role": "assistant", "content": assistant})
        attachments = [b.image_attachment for b in prompt.user_blocks if b.image_attachment]
        if self.cfg.supports_vision and attachments:
            import base64

            content = [{"type": "text", "text": prompt.user_text()}]
            for blob in attachments:
                uri = "data:image/png;base64," + base64.b64encode(blob).decode("ascii")
                content.append({"type": "image_url", "image_url": {"url": uri}})
            messages.append({"role": "user", "content": content})
        else:
            messages.append({"role": "user", "content": prompt.user_text()})
        return messages

    def complete(self, prompt: Prompt) -> str:
        headers = {}
        key = os.environ.get(self.cfg.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.cfg.model_name,
            "messages": self._messages(prompt),
            "temperature": self.temperature,
        }
        try:
            resp = requests.post(
                self.cfg.endpoint, json=body, headers=headers, timeout=self.cfg.timeout_s
            )
        except requests.RequestException as exc:
            raise TransportError(f"chat endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"chat endpoint returned HTTP {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"chat endpoint returned an unexpected payload: {exc}") from exc


class ScriptedBackend:
    """Looks up a registered deterministic policy and applies it to the prompt."""

    def __init__(self, cfg: ScriptedConfig):
        self.policy_id = cfg.policy_id

    def complete(self, prompt: Prompt) -> str:
        from .policies import get_policy  # late import: policies build prompts too

        policy = get_policy(self.policy_id)
        return policy(prompt)


class ReplayBackend:
    """Feeds back recorded completions, one per call, in call order.

    Accepts either a plain trace (one completion per line, JSON-string quoted
    or verbatim) or an episode trace whose records carry a ``raw`` field.
    """

    def __init__(self, cfg: ReplayConfig):
        self.trace_path = cfg.trace_path
        try:
            lines = Path(cfg.trace_path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise TransportError(f"cannot read replay trace {cfg.trace_path!r}: {exc}") from exc
        self.completions = []
        for line in lines:
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError:
                self.completions.append(line)
                continue
            if isinstance(doc, str):
                self.completions.append(doc)
            elif isinstance(doc, dict):
                if isinstance(doc.get("raw"), str):
                    self.completions.append(doc["raw"])
                elif "type" not in doc:
                    # a bare decision object on its own line is itself the completion
                    self.completions.append(line)
        self.cursor = 0

    def complete(self, prompt: Prompt) -> str:
        if self.cursor >= len(self.completions):
            raise ReplayExhausted(
                f"replay trace {self.trace_path!r} exhausted after {self.cursor} completions"
            )
        out = self.completions[self.cursor]
        self.cursor += 1
        return out


def make_backend(cfg: BackendConfig):
    if isinstance(cfg.kind, HttpChatConfig):
        return HttpChatBackend(cfg.kind, temperature=cfg.temperature)
    if isinstance(cfg.kind, ScriptedConfig):
        return ScriptedBackend(cfg.kind)
    if isinstance(cfg.kind, ReplayConfig):
        return ReplayBackend(cfg.kind)
    raise CaroboError(f"unknown backend kind: {cfg.kind!r}")


def complete(prompt: Prompt, backend) -> str:
    """Run one completion; `backend` is anything with a complete(prompt) method."""
    return backend.complete(prompt)


# ---------------------------------------------------------------------------
# Decision parsing

@dataclass(frozen=True)
class HostDecision:
    observation_desc: str
    thoughts: str
    global_plan: GlobalPlan
    comment: str


@dataclass(frozen=True)
class AppDecision:
    observation_desc: str
    comment: str
    status: Status
    command: Optional[Command] = None

    def __post_init__(self):
        if self.status is Status.CONTINUE and self.command is None:
            raise MalformedDecision("a continuing decision must carry a command")


def _extract_json_object(raw: str) -> dict:
    """Parse the outermost {...} in the completion; anything around it is prose."""
    start = raw.find("{")
    end = raw.rfind("}")
    if start < 0 or end <= start:
        raise MalformedDecision("completion contains no JSON object")
    try:
        doc = json.loads(raw[start : end + 1])
    except json.JSONDecodeError as exc:
        raise MalformedDecision(f"completion JSON does not parse: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDecision("completion JSON is not an object")
    return doc


def _require_str(doc: dict, key: str) -> str:
    if key not in doc or not isinstance(doc[key], str):
        raise MalformedDecision(f"decision field {key!r} missing or not a string")
    return doc[key]


def parse_host_decision(raw: str) -> HostDecision:
    doc = _extract_json_object(raw)
    plan = doc.get("plan")
    if not isinstance(plan, list) or not plan or any(not isinstance(s, str) for s in plan):
        raise MalformedDecision("host decision needs a non-empty list of plan steps")
    return HostDecision(
        observation_desc=_require_str(doc, "observation"),
        thoughts=_require_str(doc, "thoughts"),
        global_plan=GlobalPlan(steps=tuple(plan)),
        comment=_require_str(doc, "comment"),
    )


def parse_app_decision(raw: str) -> AppDecision:
    doc = _extract_json_object(raw)
    status = doc.get("status")
    if not isinstance(status, str):
        raise MalformedDecision("app decision needs a status string")
    parsed_status = parse_status(status)  # UnknownStatus propagates
    command = None
    if doc.get("command") is not None:
        command = Command.from_dict(doc["command"])  # UnknownCommand/ArgOutOfRange propagate
    if parsed_status is Status.CONTINUE and command is None:
        raise MalformedDecision("CONTINUE decision without a command")
    return AppDecision(
        observation_desc=_require_str(doc, "observation"),
        comment=_require_str(doc, "comment"),
        status=parsed_status,
        command=command,
    )


def serialize_host_decision(decision: HostDecision) -> str:
    return canonical_json(
        {
            "observation": decision.observation_desc,
            "thoughts": decision.thoughts,
            "plan": list(decision.global_plan.steps),
            "comment": decision.comment,
        }
    )


def serialize_app_decision(decision: AppDecision) -> str:
    doc = {
        "observation": decision.observation_desc,
        "comment": decision.comment,
        "status": decision.status.value,
    }
    if decision.command is not None:
        doc["command"] = decision.command.to_dict()
    return canonical_json(doc)


# errors worth retrying: the model said something bad or the wire hiccuped
RETRYABLE_ERRORS = (
    TransportError,
    MalformedDecision,
    UnknownStatus,
    InvalidCommand,  # covers UnknownCommand and ArgOutOfRange
)


def with_retry(attempt: Callable[[], object], max_retries: int):
    """Call `attempt` up to 1 + max_retries times; re-raise the last failure."""
    last: Optional[Exception] = None
    for _ in range(1 + max_retries):
        try:
            return attempt()
        except RETRYABLE_ERRORS as exc:
            last = exc
    assert last is not None
    raise last
