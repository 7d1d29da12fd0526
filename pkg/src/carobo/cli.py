"""Command line front end: run episodes, benchmark suites, replays, servers."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import sim
from .app import EpisodeLimits, read_trace, run_episode
from .bench import (
    bundled_trace_dir,
    default_suite_path,
    fixed_pair,
    load_benchmark,
    replay_pair,
    run_suite,
    scripted_pair,
)
from .bridge import BridgeRobot, TcpRobotServer, serve_robot, start_local_robot, tcp_connect
from .llm import BackendConfig, HttpChatConfig, ReplayConfig, ScriptedConfig
from .model import CaroboError, UserRequest, render_memory


def _load_world_file(path) -> sim.WorldState:
    return sim.load_world(json.loads(Path(path).read_text(encoding="utf-8")))


def _backend_cfg(args) -> BackendConfig:
    if args.backend == "mock":
        return BackendConfig(kind=ScriptedConfig(policy_id=args.policy), max_retries=args.max_retries)
    if args.backend == "replay":
        if not args.replay_trace:
            raise CaroboError("--backend replay needs --replay-trace FILE")
        return BackendConfig(kind=ReplayConfig(trace_path=args.replay_trace), max_retries=args.max_retries)
    if args.backend == "http":
        if not args.endpoint or not args.model:
            raise CaroboError("--backend http needs --endpoint and --model")
        return BackendConfig(
            kind=HttpChatConfig(
                endpoint=args.endpoint, model_name=args.model, supports_vision=args.vision
            ),
            max_retries=args.max_retries,
        )
    raise CaroboError(f"unknown backend {args.backend!r}")


def _open_run_robot(args):
    """Robot handle for `run`: owns a world unless pointed at a remote server."""
    transport = args.transport
    if transport.startswith("tcp:") and len(transport) > len("tcp:"):
        host, sep, port_s = transport[len("tcp:"):].rpartition(":")
        if not sep or not port_s.isdigit():
            raise CaroboError(f"transport {transport!r} needs the form tcp:HOST:PORT")
        conn = tcp_connect(host or "127.0.0.1", int(port_s))
        handle = BridgeRobot(conn)
        return handle, handle.close
    if not args.world:
        raise CaroboError(f"transport {transport!r} needs --world FILE")
    world = _load_world_file(args.world)
    if transport == "direct":
        handle = sim.SimRobot(world)
        return handle, handle.close
    if transport in ("local", "local:"):
        client, service, shutdown = start_local_robot(world)
        return BridgeRobot(client, world_getter=lambda: service.world), shutdown
    if transport in ("tcp", "tcp:"):
        server = TcpRobotServer(world).start()
        conn = tcp_connect(server.host, server.port)
        handle = BridgeRobot(conn, world_getter=lambda: server.service.world)

        def cleanup():
            handle.close()
            server.stop()

        return handle, cleanup
    raise CaroboError(f"unknown transport {transport!r}")


def cmd_run(args) -> int:
    cfg = _backend_cfg(args)
    limits = EpisodeLimits(max_steps=args.max_steps, max_rounds=args.max_rounds)
    handle, cleanup = _open_run_robot(args)
    try:
        result = run_episode(
            UserRequest(text=args.request, id=args.request_id),
            handle,
            cfg,
            cfg,
            limits=limits,
            trace_path=args.trace,
        )
    finally:
        cleanup()
    history = render_memory(result.trace, len(result.trace))
    if history:
        print(history)
    print(result.summary())
    if args.trace:
        print(f"trace written to {args.trace}")
    return 0 if result.failure_reason is None else 1


def cmd_bench(args) -> int:
    specs = load_benchmark(args.suite)
    if args.backend == "mock":
        pair = scripted_pair(args.policy)
    elif args.backend == "replay":
        if not args.replay_dir:
            raise CaroboError("--backend replay needs --replay-dir DIR (or a bundled model name)")
        replay_dir = Path(args.replay_dir)
        if not replay_dir.is_dir():
            bundled = bundled_trace_dir(args.replay_dir)
            if bundled.is_dir():
                replay_dir = bundled
            else:
                raise CaroboError(f"no replay directory at {args.replay_dir!r}")
        pair = replay_pair(replay_dir)
    else:
        pair = fixed_pair(_backend_cfg(args))
    report = run_suite(specs, pair, transport=args.transport, traces_dir=args.traces_dir)
    print(report.to_text())
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        print(f"report written to {args.out}")
    return 0


def cmd_replay(args) -> int:
    """Re-run a recorded episode from its own trace and check it reproduces."""
    records = read_trace(args.trace)
    if not records or records[0].get("type") != "episode":
        raise CaroboError(f"{args.trace} is not an episode trace")
    header = records[0]
    recorded = records[-1]
    if recorded.get("type") != "result":
        raise CaroboError(f"{args.trace} has no result record; episode was cut short")
    world = sim.load_world(header["world"])
    cfg = BackendConfig(kind=ReplayConfig(trace_path=args.trace))
    result = run_episode(
        UserRequest(text=header["request_text"], id=header["request_id"]),
        sim.SimRobot(world),
        cfg,
        cfg,
        limits=EpisodeLimits(**header["limits"]),
        trace_path=args.out,
    )
    print(result.summary())
    checks = (
        ("verdict", recorded["verdict"], result.verdict.value),
        ("steps", recorded["steps"], result.steps),
        ("rounds", recorded["rounds"], result.rounds),
        ("final world digest", recorded["final_world_digest"], result.final_world_digest),
    )
    ok = True
    for name, want, got in checks:
        match = want == got
        ok = ok and match
        print(f"{name}: {'match' if match else f'MISMATCH (recorded {want!r}, replayed {got!r})'}")
    return 0 if ok else 1


def cmd_serve(args) -> int:
    world = _load_world_file(args.world)
    print(f"serving robot world {args.world} on {args.listen}", flush=True)
    serve_robot(world, args.listen)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carobo",
        description="Two-agent robot control with a deterministic 2D simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one episode for a natural language request")
    run.add_argument("--request", required=True, help="natural language request text")
    run.add_argument("--request-id", default="adhoc")
    run.add_argument("--world", help="world JSON file (not needed for a remote tcp server)")
    run.add_argument("--backend", choices=("mock", "replay", "http"), default="mock")
    run.add_argument("--policy", default="oracle", help="scripted policy for the mock backend")
    run.add_argument("--replay-trace", help="completion JSONL for the replay backend")
    run.add_argument("--endpoint", help="chat completions URL for the http backend")
    run.add_argument("--model", help="model name for the http backend")
    run.add_argument("--vision", action="store_true", help="send camera frames to the http backend")
    run.add_argument("--max-retries", type=int, default=3)
    run.add_argument(
        "--transport",
        default="direct",
        help="direct | local: | tcp: (self-hosted) | tcp:HOST:PORT (remote server)",
    )
    run.add_argument("--max-steps", type=int, default=20)
    run.add_argument("--max-rounds", type=int, default=None)
    run.add_argument("--trace", help="write the episode trace JSONL here")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="run a benchmark suite and report success rates")
    bench.add_argument("--suite", default=str(default_suite_path()))
    bench.add_argument("--backend", choices=("mock", "replay", "http"), default="mock")
    bench.add_argument("--policy", default="oracle")
    bench.add_argument(
        "--replay-dir",
        help="directory of per-scenario completion traces, or a bundled model name",
    )
    bench.add_argument("--endpoint")
    bench.add_argument("--model")
    bench.add_argument("--vision", action="store_true")
    bench.add_argument("--max-retries", type=int, default=3)
    bench.add_argument("--transport", default="direct", help="direct | local: | tcp:")
    bench.add_argument("--traces-dir", help="write per-scenario episode traces here")
    bench.add_argument("--out", help="write the report as JSON here")
    bench.set_defaults(func=cmd_bench)

    replay = sub.add_parser("replay", help="re-run a recorded episode trace and verify it")
    replay.add_argument("--trace", required=True, help="episode trace JSONL written by run")
    replay.add_argument("--out", help="write the regenerated trace here for diffing")
    replay.set_defaults(func=cmd_replay)

    serve = sub.add_parser("serve", help="serve a world over TCP for remote episodes")
    serve.add_argument("--world", required=True)
    serve.add_argument("--listen", default="127.0.0.1:7450", help="HOST:PORT")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CaroboError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
