"""Deterministic scripted policies for the mock backend.

A policy is a pure function from an assembled prompt to a completion string.
The bundled ones:

- ``oracle``: completes every bundled benchmark request with a known-good
  command script, reading its own progress out of the memory block.
- ``finish_now``: declares the request complete on the very first round.
- ``spin``: turns left forever, never finishing (useful for limit handling).
"""
from __future__ import annotations

import json
import re
from typing import Callable

from .llm import PolicyUnknown, Prompt
from .model import COMMAND_SPECS
from .suite_data import normalize_request, oracle_table

Policy = Callable[[Prompt], str]

_ROUND_MARK = re.compile(r"\[round (\d+)\]")


def _is_host(prompt: Prompt) -> bool:
    return prompt.block("plan") is None


def _rounds_so_far(prompt: Prompt) -> int:
    """Recover how many rounds have been decided from the memory block."""
    block = prompt.block("memory")
    if block is None:
        return 0
    marks = _ROUND_MARK.findall(block.text)
    if not marks:
        return 0
    return int(marks[-1]) + 1


def _dumps(doc: dict) -> str:
    return json.dumps(doc, ensure_ascii=False)


def _host_doc(plan, comment: str) -> str:
    return _dumps(
        {
            "observation": "Scripted survey of the scene.",
            "thoughts": "Following the rehearsed route for this request.",
            "plan": list(plan),
            "comment": comment,
        }
    )


def _continue_doc(name: str, value: float, comment: str) -> str:
    arg_name = COMMAND_SPECS[name][0]
    return _dumps(
        {
            "observation": "Scripted check of the scene.",
            "comment": comment,
            "command": {"name": name, "args": {arg_name: value}},
            "status": "CONTINUE",
        }
    )


def _finish_doc(comment: str) -> str:
    return _dumps(
        {
            "observation": "Scripted check of the scene.",
            "comment": comment,
            "status": "FINISH",
        }
    )


def _lookup_script(prompt: Prompt):
    block = prompt.block("request")
    if block is None:
        raise PolicyUnknown("prompt carries no request block")
    haystack = normalize_request(block.text)
    for key, entry in oracle_table().items():
        if key in haystack:
            return entry
    raise PolicyUnknown(f"oracle policy has no script for: {block.text!r}")


def oracle_policy(prompt: Prompt) -> str:
    plan, commands, comment = _lookup_script(prompt)
    if _is_host(prompt):
        return _host_doc(plan, "Plan ready; handing over to the executor.")
    idx = _rounds_so_far(prompt)
    if idx < len(commands):
        name, value = commands[idx]
        return _continue_doc(name, value, f"Step {idx + 1}: {name}.")
    return _finish_doc(comment)


def finish_now_policy(prompt: Prompt) -> str:
    if _is_host(prompt):
        return _host_doc(["Declare the request complete"], "Nothing left to do.")
    return _finish_doc("Request complete.")


def spin_policy(prompt: Prompt) -> str:
    if _is_host(prompt):
        return _host_doc(["Keep turning left"], "Spinning indefinitely.")
    return _continue_doc("car_left", 30.0, "Turning left again.")


POLICIES: dict[str, Policy] = {
    "oracle": oracle_policy,
    "finish_now": finish_now_policy,
    "spin": spin_policy,
}


def get_policy(policy_id: str) -> Policy:
    try:
        return POLICIES[policy_id]
    except KeyError:
        raise PolicyUnknown(f"unknown policy: {policy_id!r}") from None
