"""Deterministic 2D simulator for the car-type robot.

The world is a plane of circle/polygon obstacles with heights; the robot is a
disc footprint with a heading, a pitch-adjustable camera, an ultrasonic range
finder and two IR proximity switches. Command execution is pure: it returns a
new world plus an execution report, so episodes replay bit-for-bit.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

from . import geometry as geo
from .model import (
    CaroboError,
    Command,
    ExecOutcome,
    ExecResult,
    InvalidCommand,
    Observation,
    SensorData,
    VisibleObject,
    canonical_json,
    validate_command,
)

OBJECT_KINDS = ("box", "wall", "person", "paper", "refrigerator", "marker")


class SchemaError(CaroboError):
    """World document is structurally invalid."""


class OverlapError(CaroboError):
    """Robot footprint starts inside an object."""


@dataclass(frozen=True)
class SimParams:
    footprint_radius: float = 0.10
    ultrasonic_max: float = 4.0
    avoid_threshold: float = 0.30
    integration_step: float = 0.05
    hfov: float = 62.0
    vfov: float = 49.0
    ir_range: float = 0.20
    ir_angle: float = 30.0
    camera_height: float = 0.12

    def to_dict(self) -> dict:
        return {
            "footprint_radius": self.footprint_radius,
            "ultrasonic_max": self.ultrasonic_max,
            "avoid_threshold": self.avoid_threshold,
            "integration_step": self.integration_step,
            "hfov": self.hfov,
            "vfov": self.vfov,
            "ir_range": self.ir_range,
            "ir_angle": self.ir_angle,
            "camera_height": self.camera_height,
        }


@dataclass(frozen=True)
class RobotPose:
    x: float
    y: float
    heading: float = 0.0  # degrees CCW from +x, kept in [0, 360)
    camera_pitch: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", geo.norm_heading(self.heading))

    @property
    def position(self) -> Tuple[float, float]:
        return (self.x, self.y)

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "heading": self.heading, "camera_pitch": self.camera_pitch}

    @classmethod
    def from_dict(cls, data: dict) -> "RobotPose":
        return cls(
            x=float(data.get("x", 0.0)),
            y=float(data.get("y", 0.0)),
            heading=float(data.get("heading", 0.0)),
            camera_pitch=float(data.get("camera_pitch", 0.0)),
        )


@dataclass(frozen=True)
class Shape:
    kind: str  # "circle" | "polygon"
    center: Optional[Tuple[float, float]] = None
    radius: float = 0.0
    vertices: Tuple[Tuple[float, float], ...] = ()

    def centroid(self) -> Tuple[float, float]:
        if self.kind == "circle":
            return self.center
        n = len(self.vertices)
        return (
            sum(v[0] for v in self.vertices) / n,
            sum(v[1] for v in self.vertices) / n,
        )

    def distance_from(self, point) -> float:
        if self.kind == "circle":
            return geo.circle_distance(point, self.center, self.radius)
        return geo.polygon_distance(point, self.vertices)

    def ray_hit(self, origin, direction) -> Optional[float]:
        if self.kind == "circle":
            return geo.ray_circle(origin, direction, self.center, self.radius)
        return geo.ray_polygon(origin, direction, self.vertices)

    def to_dict(self) -> dict:
        if self.kind == "circle":
            return {"type": "circle", "center": list(self.center), "radius": self.radius}
        return {"type": "polygon", "vertices": [list(v) for v in self.vertices]}

    @classmethod
    def from_dict(cls, data: dict) -> "Shape":
        if not isinstance(data, dict) or "type" not in data:
            raise SchemaError(f"shape document must carry a type: {data!r}")
        if data["type"] == "circle":
            center = data.get("center")
            radius = data.get("radius")
            if (
                not isinstance(center, (list, tuple))
                or len(center) != 2
                or not isinstance(radius, (int, float))
                or radius <= 0
            ):
                raise SchemaError(f"bad circle shape: {data!r}")
            return cls(kind="circle", center=(float(center[0]), float(center[1])), radius=float(radius))
        if data["type"] == "polygon":
            verts = data.get("vertices")
            if not isinstance(verts, list) or len(verts) < 3:
                raise SchemaError("polygon needs at least 3 vertices")
            try:
                vertices = tuple((float(v[0]), float(v[1])) for v in verts)
            except (TypeError, IndexError, ValueError):
                raise SchemaError(f"bad polygon vertices: {verts!r}")
            if abs(geo.polygon_area(vertices)) < 1e-9:
                raise SchemaError("polygon vertices are collinear")
            return cls(kind="polygon", vertices=vertices)
        raise SchemaError(f"unknown shape type: {data['type']!r}")


@dataclass(frozen=True)
class SimObject:
    id: str
    kind: str
    shape: Shape
    label: str
    color: str
    height: float
    text_on_object: Optional[str] = None

    def __post_init__(self):
        if self.kind not in OBJECT_KINDS:
            raise SchemaError(f"unknown object kind: {self.kind!r}")
        if self.height <= 0:
            raise SchemaError(f"object {self.id}: height must be positive")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "shape": self.shape.to_dict(),
            "label": self.label,
            "color": self.color,
            "height": self.height,
            "text_on_object": self.text_on_object,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimObject":
        if not isinstance(data, dict):
            raise SchemaError(f"object document must be an object: {data!r}")
        try:
            return cls(
                id=str(data["id"]),
                kind=str(data["kind"]),
                shape=Shape.from_dict(data["shape"]),
                label=str(data.get("label", data["kind"])),
                color=str(data.get("color", "gray")),
                height=float(data.get("height", 0.5)),
                text_on_object=data.get("text_on_object"),
            )
        except KeyError as exc:
            raise SchemaError(f"object document missing field {exc}")


@dataclass(frozen=True)
class WorldState:
    robot: RobotPose
    objects: Tuple[SimObject, ...] = ()
    params: SimParams = field(default_factory=SimParams)
    buzzer_events: Tuple[float, ...] = ()
    tick: int = 0  # commands executed so far; doubles as the sim clock

    def object_by_id(self, object_id: str) -> SimObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)

    def to_dict(self) -> dict:
        return {
            "robot": self.robot.to_dict(),
            "params": self.params.to_dict(),
            "objects": [o.to_dict() for o in self.objects],
            "buzzer_events": list(self.buzzer_events),
            "tick": self.tick,
        }


def load_world(document: dict) -> WorldState:
    """Build a world from a plain document, filling parameter defaults."""
    if not isinstance(document, dict) or "robot" not in document:
        raise SchemaError("world document must be an object with a robot entry")
    robot = RobotPose.from_dict(document["robot"])
    params_doc = document.get("params", {})
    if not isinstance(params_doc, dict):
        raise SchemaError("params must be an object")
    defaults = SimParams()
    unknown = set(params_doc) - set(defaults.to_dict())
    if unknown:
        raise SchemaError(f"unknown sim params: {sorted(unknown)}")
    params = replace(defaults, **{k: float(v) for k, v in params_doc.items()})
    objects_doc = document.get("objects", [])
    if not isinstance(objects_doc, list):
        raise SchemaError("objects must be a list")
    objects = tuple(SimObject.from_dict(d) for d in objects_doc)
    ids = [o.id for o in objects]
    if len(set(ids)) != len(ids):
        raise SchemaError("object ids must be unique")
    world = WorldState(robot=robot, objects=objects, params=params)
    blocker = _overlapping_object(world, robot.position)
    if blocker is not None:
        raise OverlapError(f"robot footprint overlaps object {blocker.id!r}")
    return world


def _overlapping_object(world: WorldState, position) -> Optional[SimObject]:
    for obj in world.objects:
        if obj.shape.distance_from(position) < world.params.footprint_radius:
            return obj
    return None


def raycast(world: WorldState, origin, direction_deg: float, max_range: float) -> float:
    """Distance to the nearest object boundary along the ray, capped at max_range."""
    direction = geo.unit(direction_deg)
    best = max_range
    for obj in world.objects:
        t = obj.shape.ray_hit(origin, direction)
        if t is not None and t < best:
            best = t
    return best


def read_sensors(world: WorldState) -> SensorData:
    """Ultrasonic from the footprint's front edge; IR switches at +/-ir_angle."""
    p = world.params
    pose = world.robot
    clearance = _front_clearance(world, pose.position, pose.heading)

    def ir(side_deg: float) -> bool:
        d = raycast(world, pose.position, pose.heading + side_deg, p.ultrasonic_max)
        return d - p.footprint_radius <= p.ir_range

    return SensorData(
        ultrasonic_clearance=clearance,
        ir_left=ir(+p.ir_angle),
        ir_right=ir(-p.ir_angle),
    )


def _max_free_advance(world: WorldState, start, direction, limit: float) -> float:
    """Largest travel in [0, limit] that keeps the footprint off every object.

    Bisects the overlap predicate; 60 halvings put the answer well below 1e-12
    of the true contact point, so clamped stops never overlap.
    """
    end = (start[0] + direction[0] * limit, start[1] + direction[1] * limit)
    if _overlapping_object(world, end) is None:
        return limit
    lo, hi = 0.0, limit  # lo is known free (current pose is legal)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        p = (start[0] + direction[0] * mid, start[1] + direction[1] * mid)
        if _overlapping_object(world, p) is None:
            lo = mid
        else:
            hi = mid
    return lo


def _front_clearance(world: WorldState, position, heading: float) -> float:
    p = world.params
    front = geo.unit(heading)
    edge = (position[0] + front[0] * p.footprint_radius, position[1] + front[1] * p.footprint_radius)
    return raycast(world, edge, heading, p.ultrasonic_max)


def _drive(world: WorldState, requested: float, forward: bool) -> Tuple[WorldState, ExecOutcome, float, float]:
    """Integrate a straight drive; forward motion auto-avoids, reverse does not."""
    p = world.params
    pose = world.robot
    travel_heading = pose.heading if forward else geo.norm_heading(pose.heading + 180.0)
    direction = geo.unit(travel_heading)
    origin = pose.position
    travelled = 0.0
    outcome = ExecOutcome.OK
    heading = pose.heading
    heading_change = 0.0
    while travelled < requested - 1e-12:
        here = (origin[0] + direction[0] * travelled, origin[1] + direction[1] * travelled)
        if forward:
            # obstacle-avoid check happens before every increment
            if _front_clearance(world, here, heading) < p.avoid_threshold:
                outcome = ExecOutcome.AVOIDED
                heading = geo.norm_heading(heading - 90.0)
                heading_change = -90.0
                break
        inc = min(p.integration_step, requested - travelled)
        free = _max_free_advance(world, here, direction, inc)
        travelled += free
        if free < inc - 1e-12:
            outcome = ExecOutcome.BLOCKED
            break
    final = (origin[0] + direction[0] * travelled, origin[1] + direction[1] * travelled)
    new_pose = replace(pose, x=final[0], y=final[1], heading=heading)
    return replace(world, robot=new_pose), outcome, travelled, heading_change


def apply_command(world: WorldState, command: Command) -> Tuple[WorldState, ExecResult]:
    """Execute one command and report what actually happened.

    Distances, angles and buzzer durations are range-checked; camera pitch is
    clamped instead of rejected so a defensive caller still gets a legal world.
    """
    if command.name != "camera_move":
        validate_command(command)
    outcome = ExecOutcome.OK
    travelled = 0.0
    heading_change = 0.0
    if command.name in ("car_forward", "car_back"):
        world, outcome, travelled, heading_change = _drive(
            world, command.value, forward=command.name == "car_forward"
        )
    elif command.name in ("car_left", "car_right"):
        sign = 1.0 if command.name == "car_left" else -1.0
        heading_change = sign * command.value
        pose = world.robot
        world = replace(world, robot=replace(pose, heading=geo.norm_heading(pose.heading + heading_change)))
    elif command.name == "camera_move":
        pitch = min(60.0, max(-30.0, command.value))
        if pitch != command.value:
            outcome = ExecOutcome.CLAMPED
        world = replace(world, robot=replace(world.robot, camera_pitch=pitch))
    elif command.name == "buzzer":
        world = replace(world, buzzer_events=world.buzzer_events + (float(world.tick),))
    else:  # pragma: no cover - Command constructor rejects unknown names
        raise InvalidCommand(command.name)
    world = replace(world, tick=world.tick + 1)
    result = ExecResult(
        command_echo=command,
        outcome=outcome,
        distance_travelled=travelled,
        heading_change=heading_change,
        sensor_after=read_sensors(world),
    )
    return world, result


def visible_height_band(world: WorldState, obj: SimObject) -> Tuple[float, float]:
    """Portion of the object's height [lo, hi] inside the camera's vertical window.

    Returns (0, 0) when the window misses the object entirely.
    """
    p = world.params
    pose = world.robot
    d = math.hypot(*(c - r for c, r in zip(obj.shape.centroid(), pose.position)))
    d = max(d, 1e-9)
    half = p.vfov / 2.0
    lo_angle = math.radians(pose.camera_pitch - half)
    hi_angle = math.radians(pose.camera_pitch + half)
    lo = max(0.0, p.camera_height + d * math.tan(lo_angle))
    hi = min(obj.height, p.camera_height + d * math.tan(hi_angle))
    if hi <= lo:
        return (0.0, 0.0)
    return (lo, hi)


def render_camera(world: WorldState) -> Observation:
    """Symbolic camera: items for every unoccluded object inside both FOV axes."""
    p = world.params
    pose = world.robot
    candidates = []
    for obj in world.objects:
        cx, cy = obj.shape.centroid()
        dx, dy = cx - pose.x, cy - pose.y
        distance = math.hypot(dx, dy)
        if distance < 1e-9:
            continue
        bearing = geo.rel_bearing(math.degrees(math.atan2(dy, dx)) - pose.heading)
        if abs(bearing) > p.hfov / 2.0:
            continue
        lo, hi = visible_height_band(world, obj)
        if hi <= lo:
            continue
        # occlusion along the center line: a nearer object hiding this one
        direction = geo.unit(math.degrees(math.atan2(dy, dx)))
        t_self = obj.shape.ray_hit(pose.position, direction)
        if t_self is None:
            t_self = distance
        occluded = False
        for other in world.objects:
            if other.id == obj.id:
                continue
            t_other = other.shape.ray_hit(pose.position, direction)
            if t_other is not None and t_other < t_self - 1e-9:
                occluded = True
                break
        if occluded:
            continue
        candidates.append(
            (
                distance,
                obj.id,
                VisibleObject(
                    label=obj.label,
                    color=obj.color,
                    shape=obj.shape.kind,
                    text_on_object=obj.text_on_object,
                    distance=distance,
                    bearing=bearing,
                ),
            )
        )
    candidates.sort(key=lambda c: (c[0], c[1]))
    return Observation.from_items(tuple(c[2] for c in candidates))


def world_digest(world: WorldState) -> str:
    """Opaque digest of the full world state."""
    return hashlib.sha256(canonical_json(world.to_dict()).encode("utf-8")).hexdigest()


class SimRobot:
    """The simulator exposed as a robot handle, no transport in between.

    Satisfies the same connect()/execute() surface as a bridge connection, so
    the episode loop cannot tell them apart.
    """

    def __init__(self, world: WorldState):
        self.world = world

    def connect(self):
        return read_sensors(self.world), render_camera(self.world)

    def execute(self, command: Command):
        self.world, result = apply_command(self.world, command)
        return result, result.sensor_after, render_camera(self.world)

    def world_doc(self) -> dict:
        return self.world.to_dict()

    def world_digest(self) -> str:
        return world_digest(self.world)

    def close(self):
        pass
