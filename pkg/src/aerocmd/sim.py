"""Deterministic kinematic multirotor simulator.

Single vehicle, NED frame, fixed-step integration with no wall-clock
coupling (real-time pacing belongs to the service layer).  Durative commands
run as tasks with preemption; queries never disturb motion.  Every state and
payload is a pure function of (initial state, command sequence, dt).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from . import kinematics
from .dsl import (
    GetGpsData,
    GetImage,
    GetState,
    Land,
    MoveByVelocity,
    MoveToPosition,
    Reset,
    RotateToYaw,
    Statement,
    Takeoff,
    GeoFence,
    SafetyEnvelope,
    is_query,
)

__all__ = [
    "HomeGeopoint",
    "SimConfig",
    "SimState",
    "TaskStatus",
    "TaskRecord",
    "Simulator",
    "NotAirborne",
    "gps_from_state",
    "ned_from_geopoint",
    "DEFAULT_HOME",
    "DEFAULT_ENVELOPE",
]

# Metres of north displacement per degree of latitude in the equirectangular
# approximation (see docs/geodesy.md for error bounds against WGS84).
METERS_PER_DEGREE = 111320.0

# Home geopoint defaults: the latitude/longitude of the reference transcript,
# with the home altitude chosen so that hovering at the standard takeoff
# altitude reports the transcript's GPS altitude.
DEFAULT_HOME_LAT = 47.64143399302358
DEFAULT_HOME_LON = -122.1401333878863
DEFAULT_HOME_ALT = 122.1812973022461

DEFAULT_EPOCH_UTC_US = 1732460418770807


class NotAirborne(RuntimeError):
    """A motion command was submitted while the vehicle is on the ground."""


@dataclass(frozen=True)
class HomeGeopoint:
    latitude: float
    longitude: float
    altitude: float

    def __post_init__(self):
        if not (abs(self.latitude) <= 90 and abs(self.longitude) <= 180):
            raise ValueError("home geopoint out of range")


DEFAULT_HOME = HomeGeopoint(DEFAULT_HOME_LAT, DEFAULT_HOME_LON, DEFAULT_HOME_ALT)

DEFAULT_ENVELOPE = SafetyEnvelope(
    max_speed=15.0,
    max_duration=30.0,
    geofence=GeoFence(-200.0, 200.0, -200.0, 200.0, -100.0, 0.0),
)


@dataclass(frozen=True)
class SimConfig:
    home: HomeGeopoint = DEFAULT_HOME
    envelope: SafetyEnvelope = DEFAULT_ENVELOPE
    dt: float = kinematics.DEFAULT_DT
    epoch_utc_us: int = DEFAULT_EPOCH_UTC_US


class TaskStatus(str, Enum):
    RUNNING = "running"
    COMPLETED = "completed"
    PREEMPTED = "preempted"
    REJECTED = "rejected"


@dataclass(frozen=True)
class TaskRecord:
    task_id: str
    command: Statement
    started_at: float
    deadline: float
    status: TaskStatus
    plan: kinematics.MotionPlan


@dataclass(frozen=True)
class SimState:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    yaw: float = 0.0
    landed: bool = True
    sim_time: float = 0.0
    active_task: TaskRecord | None = None


def step_state(state: SimState, dt: float) -> SimState:
    """Advance the state by dt seconds.

    Positions come from the active task's closed-form plan anchored at the
    task start, so repeated small steps accumulate no float drift and the
    final position equals the validator's prediction bitwise.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    now = state.sim_time + dt
    task = state.active_task
    if task is None:
        return replace(state, sim_time=now)
    elapsed = now - task.started_at
    plan = task.plan
    done = elapsed >= plan.duration
    if not done and isinstance(task.command, MoveToPosition):
        # Complete when within the arrival radius, then snap exactly.
        px, py, pz = plan.position_at(elapsed)
        ex, ey, ez = plan.end_position
        remaining = math.sqrt((ex - px) ** 2 + (ey - py) ** 2 + (ez - pz) ** 2)
        done = remaining <= kinematics.ARRIVAL_TOLERANCE
    if done:
        landed = state.landed
        if isinstance(task.command, Takeoff):
            landed = False
        elif isinstance(task.command, Land):
            landed = True
        return replace(
            state,
            position=plan.end_position,
            velocity=(0.0, 0.0, 0.0),
            yaw=plan.end_yaw,
            landed=landed,
            sim_time=now,
            active_task=None,
        )
    return replace(
        state,
        position=plan.position_at(elapsed),
        velocity=plan.velocity,
        yaw=plan.yaw_at(elapsed),
        sim_time=now,
        active_task=task,
    )


def gps_from_state(state: SimState, home: HomeGeopoint, epoch_utc_us: int = DEFAULT_EPOCH_UTC_US) -> dict:
    """Project a simulator state to the GPS payload schema.

    Equirectangular offsets from the home geopoint; constant fix quality.
    Field names and nesting follow the AirSim-style GpsData payload.
    """
    x, y, z = state.position
    lat = home.latitude + x / METERS_PER_DEGREE
    lon = home.longitude + y / (METERS_PER_DEGREE * math.cos(math.radians(home.latitude)))
    time_utc = epoch_utc_us + int(round(state.sim_time * 1e6))
    return {
        "gnss": {
            "eph": 0.1,
            "epv": 0.1,
            "fix_type": 3,
            "geo_point": {
                "altitude": home.altitude - z,
                "latitude": lat,
                "longitude": lon,
            },
            "time_utc": time_utc,
            "velocity": {
                "x_val": state.velocity[0],
                "y_val": state.velocity[1],
                "z_val": state.velocity[2],
            },
        },
        "is_valid": True,
        "time_stamp": time_utc * 1000,
    }


def ned_from_geopoint(latitude: float, longitude: float, altitude: float, home: HomeGeopoint):
    """Inverse of the GPS projection: geodetic coordinates back to NED metres."""
    x = (latitude - home.latitude) * METERS_PER_DEGREE
    y = (longitude - home.longitude) * METERS_PER_DEGREE * math.cos(math.radians(home.latitude))
    z = home.altitude - altitude
    return (x, y, z)


def state_payload(state: SimState) -> dict:
    """Wire-friendly projection of the kinematic state."""
    return {
        "landed": state.landed,
        "position": {"x_val": state.position[0], "y_val": state.position[1], "z_val": state.position[2]},
        "velocity": {"x_val": state.velocity[0], "y_val": state.velocity[1], "z_val": state.velocity[2]},
        "sim_time": state.sim_time,
        "yaw": state.yaw,
    }


@dataclass
class Simulator:
    """Stateful wrapper around the pure stepping functions.

    Single-owner: exactly one logical controller steps it and submits
    commands.  Cross-thread access must be serialized by the caller (the
    wire service funnels everything through one queue).
    """

    config: SimConfig = field(default_factory=SimConfig)
    state: SimState = field(default_factory=SimState)
    _task_seq: int = 0
    finished_tasks: dict[str, TaskStatus] = field(default_factory=dict)

    def reset(self) -> SimState:
        if self.state.active_task is not None:
            self._finish(self.state.active_task, TaskStatus.PREEMPTED)
        self.state = SimState()
        return self.state

    def _finish(self, task: TaskRecord, status: TaskStatus) -> None:
        self.finished_tasks[task.task_id] = status

    def preempt_active(self) -> None:
        """Cancel the running task (recorded as preempted); vehicle hovers."""
        if self.state.active_task is not None:
            self._finish(self.state.active_task, TaskStatus.PREEMPTED)
            self.state = replace(self.state, active_task=None, velocity=(0.0, 0.0, 0.0))

    def _next_task_id(self) -> str:
        self._task_seq += 1
        return f"task-{self._task_seq}"

    def submit(self, command: Statement):
        """Submit one statement.

        Durative commands return a TaskRecord (preempting any running task);
        queries return their payload synchronously; Reset is immediate.
        """
        if is_query(command):
            return self.query(command)
        if isinstance(command, Reset):
            self.reset()
            return None
        if (
            isinstance(command, (MoveByVelocity, MoveToPosition, RotateToYaw))
            and self.state.landed
        ):
            raise NotAirborne(
                f"{command.method} requires the vehicle to be airborne; take off first"
            )
        self.preempt_active()
        plan = kinematics.plan_statement(
            command, self.state.position, self.state.yaw, self.state.landed
        )
        task = TaskRecord(
            task_id=self._next_task_id(),
            command=command,
            started_at=self.state.sim_time,
            deadline=self.state.sim_time + plan.duration,
            status=TaskStatus.RUNNING,
            plan=plan,
        )
        if plan.duration == 0.0:
            # Zero-length tasks (hover, takeoff while airborne, land while
            # landed) complete at submission.
            landed = self.state.landed
            if isinstance(command, Takeoff):
                landed = False
            elif isinstance(command, Land):
                landed = True
            self.state = replace(
                self.state,
                position=plan.end_position,
                velocity=(0.0, 0.0, 0.0),
                yaw=plan.end_yaw,
                landed=landed,
            )
            task = replace(task, status=TaskStatus.COMPLETED)
            self._finish(task, TaskStatus.COMPLETED)
            return task
        # liftoff happens at task start: a climbing vehicle is airborne
        landed = False if isinstance(command, Takeoff) else self.state.landed
        self.state = replace(
            self.state, velocity=plan.velocity, landed=landed, active_task=task
        )
        return task

    def query(self, command: Statement):
        from . import imaging  # deferred: pulls in numpy/Pillow

        if isinstance(command, GetGpsData):
            return gps_from_state(self.state, self.config.home, self.config.epoch_utc_us)
        if isinstance(command, GetState):
            return state_payload(self.state)
        if isinstance(command, GetImage):
            png, metadata = imaging.render_image(self.state, command.camera, command.image_type)
            return {"png": png, "metadata": metadata}
        raise TypeError(f"{command!r} is not a query")

    def step(self, dt: float | None = None) -> SimState:
        before = self.state.active_task
        self.state = step_state(self.state, self.config.dt if dt is None else dt)
        if before is not None and self.state.active_task is None:
            self._finish(before, TaskStatus.COMPLETED)
        return self.state

    def run_active_to_completion(self, timeout_s: float = math.inf) -> SimState:
        """Step at the canonical dt until the active task finishes.

        ``timeout_s`` bounds the *simulated* time spent; exceeding it raises
        TimeoutError with the task still active.
        """
        start = self.state.sim_time
        while self.state.active_task is not None:
            if self.state.sim_time - start > timeout_s:
                raise TimeoutError("task did not complete within the simulated budget")
            self.step()
        return self.state

    def task_status(self, task_id: str) -> TaskStatus | None:
        active = self.state.active_task
        if active is not None and active.task_id == task_id:
            return TaskStatus.RUNNING
        return self.finished_tasks.get(task_id)

    def check_airborne_order(self, statements) -> int | None:
        """Index of the first motion statement that would run while landed.

        Mirrors the NotAirborne submit rule across a whole program so the
        service can reject bad programs before executing anything.
        """
        landed = self.state.landed
        for index, stmt in enumerate(statements):
            if isinstance(stmt, (MoveByVelocity, MoveToPosition, RotateToYaw)) and landed:
                return index
            if isinstance(stmt, Takeoff):
                landed = False
            elif isinstance(stmt, (Land, Reset)):
                landed = True
        return None
