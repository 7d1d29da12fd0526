"""Message bridge: wire format, sequencing, transports, the robot service."""
import pytest

from carobo.bridge import (
    TOPIC_CMD,
    TOPIC_EXEC,
    TOPIC_SENSOR,
    TOPIC_VISION,
    TOPICS,
    BridgeRobot,
    BridgeTimeout,
    ConnectionClosed,
    ProtocolError,
    TcpRobotServer,
    TopicPayloadMismatch,
    decode_line,
    encode_line,
    local_pair,
    serve_robot,
    start_local_robot,
    tcp_connect,
)
from carobo.model import CaroboError, Command, Observation, SensorData, VisibleObject
from carobo.sim import SimRobot, load_world


def world_doc(objects=()):
    return {"robot": {"x": 0, "y": 0, "heading": 0, "camera_pitch": 0}, "objects": list(objects)}


def a_box(cx=1.0, cy=0.0):
    return {
        "id": "b1", "kind": "box",
        "shape": {"type": "polygon",
                  "vertices": [[cx - .15, cy - .15], [cx + .15, cy - .15],
                               [cx + .15, cy + .15], [cx - .15, cy + .15]]},
    }


# ---------------------------------------------------------------------------
# Wire format

def test_wire_line_shape():
    line = encode_line(TOPIC_SENSOR, 3, 1234, {"a": 1})
    assert line == '/carobo/sensor|3|1234|{"a":1}'


def test_wire_roundtrip():
    payload = SensorData(ultrasonic_clearance=1.5, ir_left=True, ir_right=False)
    topic, seq, ts, doc = decode_line(encode_line(TOPIC_SENSOR, 3, 1234, payload.to_dict()))
    assert (topic, seq, ts) == (TOPIC_SENSOR, 3, 1234)
    assert SensorData.from_dict(doc) == payload


def test_wire_json_may_contain_pipes():
    # splitting is bounded at 3, so pipes inside the payload survive
    obs = Observation.from_items((
        VisibleObject(label="box", color="red", shape="polygon",
                      text_on_object="A|B|C", distance=1.0, bearing=0.0),
    ))
    _t, _s, _ts, doc = decode_line(encode_line(TOPIC_VISION, 0, 0, obs.to_dict()))
    assert Observation.from_dict(doc).items[0].text_on_object == "A|B|C"


@pytest.mark.parametrize("line", [
    "/carobo/nope|0|0|{}",          # unknown topic
    "not a frame",                   # no separators
    "/carobo/cmd|zero|0|{}",        # non-integer seq
    "/carobo/cmd|0|0|not json",     # bad payload
    "/carobo/cmd|0|0|[1,2]",        # payload not an object
])
def test_decode_rejects_malformed_lines(line):
    with pytest.raises(ProtocolError):
        decode_line(line)


def test_error_envelope_surfaces_as_protocol_error():
    a, b = local_pair()
    try:
        a.publish_error(TOPIC_EXEC, "bad command: nope")
        with pytest.raises(ProtocolError) as err:
            b.next_message(TOPIC_EXEC, timeout_ms=500)
        assert "bad command: nope" in str(err.value)
    finally:
        a.close()


def test_publish_type_checked_per_topic():
    a, _b = local_pair()
    try:
        with pytest.raises(TopicPayloadMismatch):
            a.publish(TOPIC_CMD, SensorData(ultrasonic_clearance=1, ir_left=False, ir_right=False))
        with pytest.raises(TopicPayloadMismatch):
            a.publish("/carobo/nope", Command.forward(1.0))
    finally:
        a.close()


# ---------------------------------------------------------------------------
# Local transport

def test_local_pair_roundtrip_and_seq():
    a, b = local_pair()
    try:
        a.publish(TOPIC_CMD, Command.forward(1.0))
        a.publish(TOPIC_CMD, Command.left(90.0))
        first = b.next_message(TOPIC_CMD, timeout_ms=500)
        second = b.next_message(TOPIC_CMD, timeout_ms=500)
        assert first.seq == 0 and second.seq == 1
        assert second.payload == Command.left(90.0)
    finally:
        a.close()


def test_seq_counters_are_per_topic():
    a, b = local_pair()
    try:
        a.publish(TOPIC_CMD, Command.forward(1.0))
        a.publish(TOPIC_SENSOR, SensorData(ultrasonic_clearance=1, ir_left=False, ir_right=False))
        assert b.next_message(TOPIC_CMD, timeout_ms=500).seq == 0
        assert b.next_message(TOPIC_SENSOR, timeout_ms=500).seq == 0
    finally:
        a.close()


def test_next_message_timeout():
    a, b = local_pair()
    try:
        with pytest.raises(BridgeTimeout):
            b.next_message(TOPIC_CMD, timeout_ms=50)
    finally:
        a.close()


def test_closed_connection_raises():
    a, b = local_pair()
    a.close()
    with pytest.raises(ConnectionClosed):
        a.publish(TOPIC_CMD, Command.forward(1.0))
    with pytest.raises(ConnectionClosed):
        b.next_message(TOPIC_CMD, timeout_ms=50)


def test_messages_before_close_still_delivered():
    a, b = local_pair()
    a.publish(TOPIC_CMD, Command.forward(1.0))
    a.close()
    env = b.next_message(TOPIC_CMD, timeout_ms=500)
    assert env.payload == Command.forward(1.0)
    with pytest.raises(ConnectionClosed):
        b.next_message(TOPIC_CMD, timeout_ms=50)


def test_seq_gap_detected():
    a, b = local_pair()
    try:
        # hand-crafted frames with a hole in the sequence
        b._inbox.put(*decode_line(encode_line(TOPIC_CMD, 0, 0, Command.forward(1.0).to_dict())))
        b._inbox.put(*decode_line(encode_line(TOPIC_CMD, 2, 0, Command.forward(1.0).to_dict())))
        b.next_message(TOPIC_CMD, timeout_ms=100)
        with pytest.raises(ProtocolError) as err:
            b.next_message(TOPIC_CMD, timeout_ms=100)
        assert "expected 1" in str(err.value)
    finally:
        a.close()


# ---------------------------------------------------------------------------
# Robot service over the local bridge

def test_local_robot_protocol():
    client, service, shutdown = start_local_robot(load_world(world_doc([a_box()])))
    try:
        # connection starts with one sensor and one vision message
        sensors = client.next_message(TOPIC_SENSOR, timeout_ms=2000).payload
        vision = client.next_message(TOPIC_VISION, timeout_ms=2000).payload
        assert sensors.ultrasonic_clearance == pytest.approx(0.75)
        assert len(vision.items) == 1

        # each command answers exec, then sensor, then vision
        client.publish(TOPIC_CMD, Command.left(90))
        result = client.next_message(TOPIC_EXEC, timeout_ms=2000).payload
        assert result.heading_change == 90.0
        sensors = client.next_message(TOPIC_SENSOR, timeout_ms=2000).payload
        vision = client.next_message(TOPIC_VISION, timeout_ms=2000).payload
        assert sensors.ultrasonic_clearance == 4.0
        assert len(vision.items) == 0
        assert service.world.robot.heading == 90.0
    finally:
        shutdown()


def test_bridge_robot_handle_matches_direct_sim():
    direct = SimRobot(load_world(world_doc([a_box()])))
    client, service, shutdown = start_local_robot(load_world(world_doc([a_box()])))
    bridged = BridgeRobot(client, world_getter=lambda: service.world)
    try:
        assert direct.connect() == bridged.connect()
        for cmd in (Command.forward(0.4), Command.left(90), Command.buzz(0.5)):
            assert direct.execute(cmd) == bridged.execute(cmd)
        assert direct.world_digest() == bridged.world_digest()
        assert direct.world_doc() == bridged.world_doc()
    finally:
        shutdown()


def test_bridge_robot_without_world_getter():
    client, _service, shutdown = start_local_robot(load_world(world_doc()))
    bridged = BridgeRobot(client)
    try:
        bridged.connect()
        assert bridged.world_doc() is None
        assert bridged.world_digest() is None
    finally:
        shutdown()


# ---------------------------------------------------------------------------
# TCP transport

def test_tcp_server_roundtrip():
    server = TcpRobotServer(load_world(world_doc([a_box()]))).start()
    try:
        robot = BridgeRobot(tcp_connect(server.host, server.port))
        sensors, _vision = robot.connect()
        assert sensors.ultrasonic_clearance == pytest.approx(0.75)
        result, sensors2, _vision2 = robot.execute(Command.forward(0.3))
        assert result.distance_travelled == pytest.approx(0.3)
        assert sensors2.ultrasonic_clearance == pytest.approx(0.45)
        robot.close()
    finally:
        server.stop()


def test_tcp_sequential_clients_share_the_world():
    server = TcpRobotServer(load_world(world_doc())).start()
    try:
        first = BridgeRobot(tcp_connect(server.host, server.port))
        first.connect()
        first.execute(Command.left(90))
        first.close()

        second = BridgeRobot(tcp_connect(server.host, server.port))
        second.connect()
        second.execute(Command.left(90))
        second.close()
        assert server.service.world.robot.heading == 180.0
    finally:
        server.stop()


def test_tcp_connect_refused():
    server = TcpRobotServer(load_world(world_doc()))
    host, port = server.host, server.port
    server.stop()  # never started; frees the port
    with pytest.raises(ConnectionClosed):
        tcp_connect(host, port, timeout_s=1.0)


@pytest.mark.parametrize("endpoint", ["local:", "justahost", "127.0.0.1:", "tcp:host:nope"])
def test_serve_robot_rejects_bad_endpoints(endpoint):
    world = load_world(world_doc())
    with pytest.raises(CaroboError):
        serve_robot(world, endpoint)


def test_malformed_command_gets_error_envelope():
    server = TcpRobotServer(load_world(world_doc())).start()
    try:
        conn = tcp_connect(server.host, server.port)
        conn.next_message(TOPIC_SENSOR, timeout_ms=2000)
        conn.next_message(TOPIC_VISION, timeout_ms=2000)
        # bypass publish() type checking and send junk on the cmd topic
        conn._send_line(TOPIC_CMD + '|0|0|{"name":"car_up","args":{"distance":1}}')
        with pytest.raises(ProtocolError) as err:
            conn.next_message(TOPIC_EXEC, timeout_ms=2000)
        assert "bad command" in str(err.value)
        conn.close()
    finally:
        server.stop()


def test_topic_names():
    assert TOPICS == ("/carobo/cmd", "/carobo/vision", "/carobo/sensor", "/carobo/exec")
