"""Topic-based message bridge between the agents and the robot.

Four fixed topics carry typed payloads; envelopes are newline-delimited
``topic|seq|timestamp|payload`` lines so the same bytes flow through the
in-process transport and a TCP socket. Sequence numbers increase by one per
(connection, topic) and receivers audit the gaps.

Protocol served by a robot: on connect the server publishes one sensor and one
vision envelope; for every command it publishes exec, then sensor, then vision.
"""
from __future__ import annotations

import socket
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

from .model import CaroboError, Command, ExecResult, Observation, SensorData, canonical_json
from . import sim


class ConnectionClosed(CaroboError):
    """The peer went away (or close() was called here)."""


class TopicPayloadMismatch(CaroboError):
    """Payload type does not belong on this topic."""


class BridgeTimeout(CaroboError):
    """No envelope arrived on the topic within the deadline."""


class ProtocolError(CaroboError):
    """Malformed envelope line, sequence gap, or an error envelope from the peer."""


TOPIC_CMD = "/carobo/cmd"
TOPIC_VISION = "/carobo/vision"
TOPIC_SENSOR = "/carobo/sensor"
TOPIC_EXEC = "/carobo/exec"
TOPICS = (TOPIC_CMD, TOPIC_VISION, TOPIC_SENSOR, TOPIC_EXEC)

PAYLOAD_TYPES = {
    TOPIC_CMD: Command,
    TOPIC_VISION: Observation,
    TOPIC_SENSOR: SensorData,
    TOPIC_EXEC: ExecResult,
}


@dataclass(frozen=True)
class Envelope:
    topic: str
    seq: int
    timestamp: int  # milliseconds; excluded from every determinism comparison
    payload: object


def encode_line(topic: str, seq: int, timestamp: int, payload_doc: dict) -> str:
    return f"{topic}|{seq}|{timestamp}|{canonical_json(payload_doc)}"


def decode_line(line: str) -> Tuple[str, int, int, dict]:
    parts = line.split("|", 3)
    if len(parts) != 4:
        raise ProtocolError(f"envelope line needs 4 fields: {line!r}")
    topic, seq_s, ts_s, payload_s = parts
    if topic not in TOPICS:
        raise ProtocolError(f"unknown topic: {topic!r}")
    try:
        seq = int(seq_s)
        timestamp = int(ts_s)
    except ValueError:
        raise ProtocolError(f"bad seq/timestamp in envelope: {line!r}")
    import json

    try:
        doc = json.loads(payload_s)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"bad payload JSON: {exc}")
    if not isinstance(doc, dict):
        raise ProtocolError("payload must be a JSON object")
    return topic, seq, timestamp, doc


def _decode_payload(topic: str, doc: dict):
    if "error" in doc and set(doc) == {"error"}:
        raise ProtocolError(f"peer reported: {doc['error']}")
    return PAYLOAD_TYPES[topic].from_dict(doc)


class _Inbox:
    """Per-connection receive side: FIFO per topic with sequence auditing."""

    def __init__(self):
        self._queues = {t: deque() for t in TOPICS}
        self._expected = {t: 0 for t in TOPICS}
        self._cond = threading.Condition()
        self._closed = False
        self._error: Optional[str] = None

    def put(self, topic: str, seq: int, timestamp: int, doc: dict):
        with self._cond:
            self._queues[topic].append((seq, timestamp, doc))
            self._cond.notify_all()

    def close(self, error: Optional[str] = None):
        with self._cond:
            self._closed = True
            if error and not self._error:
                self._error = error
            self._cond.notify_all()

    def next(self, topic: str, timeout_ms: Optional[float]) -> Envelope:
        if topic not in TOPICS:
            raise TopicPayloadMismatch(f"unknown topic: {topic!r}")
        deadline = None if timeout_ms is None else time.monotonic() + timeout_ms / 1000.0
        with self._cond:
            while not self._queues[topic]:
                if self._closed:
                    raise ConnectionClosed(self._error or "connection closed")
                if deadline is None:
                    self._cond.wait(0.5)
                else:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        raise BridgeTimeout(f"no message on {topic} within {timeout_ms} ms")
                    self._cond.wait(remaining)
            seq, timestamp, doc = self._queues[topic].popleft()
            expected = self._expected[topic]
            if seq != expected:
                raise ProtocolError(f"sequence gap on {topic}: expected {expected}, got {seq}")
            self._expected[topic] = expected + 1
        return Envelope(topic=topic, seq=seq, timestamp=timestamp, payload=_decode_payload(topic, doc))


def _now_ms() -> int:
    return int(time.time() * 1000)


class _ConnectionBase:
    """Shared publish bookkeeping; subclasses provide _send_line and close."""

    def __init__(self):
        self._inbox = _Inbox()
        self._out_seq = {t: 0 for t in TOPICS}
        self._send_lock = threading.Lock()
        self._closed = False

    def publish(self, topic: str, payload) -> Envelope:
        if topic not in TOPICS:
            raise TopicPayloadMismatch(f"unknown topic: {topic!r}")
        if not isinstance(payload, PAYLOAD_TYPES[topic]):
            raise TopicPayloadMismatch(
                f"{topic} carries {PAYLOAD_TYPES[topic].__name__}, got {type(payload).__name__}"
            )
        return self._publish_doc(topic, payload.to_dict(), payload)

    def publish_error(self, topic: str, message: str) -> Envelope:
        """Defensive escape hatch: sends an error document on the topic."""
        return self._publish_doc(topic, {"error": message}, None)

    def _publish_doc(self, topic: str, doc: dict, payload) -> Envelope:
        with self._send_lock:
            if self._closed:
                raise ConnectionClosed("publish on a closed connection")
            seq = self._out_seq[topic]
            self._out_seq[topic] = seq + 1
            ts = _now_ms()
            self._send_line(encode_line(topic, seq, ts, doc))
        return Envelope(topic=topic, seq=seq, timestamp=ts, payload=payload)

    def next_message(self, topic: str, timeout_ms: Optional[float] = None) -> Envelope:
        return self._inbox.next(topic, timeout_ms)

    def _send_line(self, line: str):  # pragma: no cover - abstract
        raise NotImplementedError

    def close(self):
        raise NotImplementedError  # pragma: no cover


class LocalConnection(_ConnectionBase):
    """One end of an in-process duplex pair."""

    def __init__(self):
        super().__init__()
        self.peer: Optional["LocalConnection"] = None

    def _send_line(self, line: str):
        peer = self.peer
        if peer is None or peer._closed:
            raise ConnectionClosed("peer is gone")
        # round-trip through the wire encoding keeps both transports honest
        peer._inbox.put(*decode_line(line))

    def close(self):
        if self._closed:
            return
        self._closed = True
        self._inbox.close()
        if self.peer is not None:
            self.peer._inbox.close()


def local_pair() -> Tuple[LocalConnection, LocalConnection]:
    a, b = LocalConnection(), LocalConnection()
    a.peer, b.peer = b, a
    return a, b


class TcpConnection(_ConnectionBase):
    """One end of a TCP stream; a reader thread demuxes lines into the inbox."""

    def __init__(self, sock: socket.socket):
        super().__init__()
        self._sock = sock
        try:
            # each message is one small line; waiting to coalesce them only adds latency
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        except OSError:
            pass
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self):
        try:
            with self._sock.makefile("r", encoding="utf-8", newline="\n") as stream:
                for line in stream:
                    line = line.rstrip("\n")
                    if not line:
                        continue
                    try:
                        self._inbox.put(*decode_line(line))
                    except ProtocolError as exc:
                        self._inbox.close(str(exc))
                        return
        except OSError:
            pass
        finally:
            self._inbox.close()

    def _send_line(self, line: str):
        try:
            self._sock.sendall(line.encode("utf-8") + b"\n")
        except OSError as exc:
            raise ConnectionClosed(f"socket send failed: {exc}") from exc

    def close(self):
        if self._closed:
            return
        self._closed = True
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()
        self._inbox.close()


def tcp_connect(host: str, port: int, timeout_s: float = 10.0) -> TcpConnection:
    try:
        sock = socket.create_connection((host, port), timeout=timeout_s)
        sock.settimeout(None)
    except OSError as exc:
        raise ConnectionClosed(f"cannot connect to {host}:{port}: {exc}") from exc
    return TcpConnection(sock)


# module-level op aliases matching the rest of the codebase's free functions
def publish(conn, envelope_topic: str, payload) -> Envelope:
    return conn.publish(envelope_topic, payload)


def next_message(conn, topic: str, timeout_ms: Optional[float] = None) -> Envelope:
    return conn.next_message(topic, timeout_ms)


# ---------------------------------------------------------------------------
# Robot service: the simulator behind a connection

class RobotService:
    """Owns a world and answers one connection at a time."""

    def __init__(self, world: sim.WorldState):
        self.world = world

    def publish_state(self, conn):
        conn.publish(TOPIC_SENSOR, sim.read_sensors(self.world))
        conn.publish(TOPIC_VISION, sim.render_camera(self.world))

    def handle(self, conn, stop: Optional[threading.Event] = None):
        """Serve commands until the peer disconnects or `stop` is set."""
        try:
            self.publish_state(conn)
            while stop is None or not stop.is_set():
                try:
                    env = conn.next_message(TOPIC_CMD, timeout_ms=200)
                except BridgeTimeout:
                    continue
                except ConnectionClosed:
                    return
                except (ProtocolError, CaroboError) as exc:
                    # malformed command payload: report and drop the connection
                    try:
                        conn.publish_error(TOPIC_EXEC, f"bad command: {exc}")
                    except ConnectionClosed:
                        pass
                    return
                self.world, result = sim.apply_command(self.world, env.payload)
                conn.publish(TOPIC_EXEC, result)
                self.publish_state(conn)
        except ConnectionClosed:
            return
        finally:
            conn.close()


def start_local_robot(world: sim.WorldState):
    """Spin up an in-process robot; returns (client connection, service, shutdown)."""
    client, server = local_pair()
    service = RobotService(world)
    stop = threading.Event()
    thread = threading.Thread(target=service.handle, args=(server, stop), daemon=True)
    thread.start()

    def shutdown():
        stop.set()
        client.close()
        thread.join(timeout=5)

    return client, service, shutdown


class TcpRobotServer:
    """TCP listener that serves one robot world to sequential clients."""

    def __init__(self, world: sim.WorldState, host: str = "127.0.0.1", port: int = 0):
        self.service = RobotService(world)
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(1)
        self.host, self.port = self._listener.getsockname()
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def _accept_loop(self):
        self._listener.settimeout(0.2)
        while not self._stop.is_set():
            try:
                sock, _addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            conn = TcpConnection(sock)
            self.service.handle(conn, self._stop)
        self._listener.close()

    def start(self) -> "TcpRobotServer":
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
        try:
            self._listener.close()
        except OSError:
            pass

    def serve_forever(self):
        self._accept_loop()


def serve_robot(world: sim.WorldState, endpoint: str):
    """Serve a world at `endpoint` ("HOST:PORT" or "tcp:HOST:PORT"); blocks forever.

    The in-process transport has no standalone server; use start_local_robot
    to get both ends in one process.
    """
    if endpoint.startswith("tcp:"):
        endpoint = endpoint[len("tcp:"):]
    if endpoint == "local:" or ":" not in endpoint:
        raise CaroboError("serve_robot needs a HOST:PORT endpoint; see start_local_robot")
    host, port_s = endpoint.rsplit(":", 1)
    if not port_s.isdigit():
        raise CaroboError("serve_robot needs a HOST:PORT endpoint; see start_local_robot")
    server = TcpRobotServer(world, host=host or "127.0.0.1", port=int(port_s))
    server.serve_forever()


# ---------------------------------------------------------------------------
# The bridge as a robot handle for the episode loop

class BridgeRobot:
    """Adapter giving the episode loop its connect()/execute() surface."""

    def __init__(
        self,
        conn,
        world_getter: Optional[Callable[[], sim.WorldState]] = None,
        timeout_ms: float = 10_000.0,
    ):
        self._conn = conn
        self._world_getter = world_getter
        self._timeout_ms = timeout_ms

    def _pull_state(self):
        sensor_env = self._conn.next_message(TOPIC_SENSOR, self._timeout_ms)
        vision_env = self._conn.next_message(TOPIC_VISION, self._timeout_ms)
        return sensor_env.payload, vision_env.payload

    def connect(self):
        return self._pull_state()

    def execute(self, command: Command):
        self._conn.publish(TOPIC_CMD, command)
        exec_env = self._conn.next_message(TOPIC_EXEC, self._timeout_ms)
        sensors, obs = self._pull_state()
        return exec_env.payload, sensors, obs

    def world_doc(self) -> Optional[dict]:
        world = self._world_getter() if self._world_getter else None
        return world.to_dict() if world is not None else None

    def world_digest(self) -> Optional[str]:
        world = self._world_getter() if self._world_getter else None
        return sim.world_digest(world) if world is not None else None

    def close(self):
        self._conn.close()
