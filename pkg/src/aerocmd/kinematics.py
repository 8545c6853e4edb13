"""Instantaneous-velocity motion model shared by the validator and simulator.

The vehicle has no inertia: the active command's velocity applies directly.
Takeoff climbs to a fixed hover altitude, landing descends to the ground,
rotation turns at a fixed rate along the shortest arc, and position moves
integrate exactly (endpoint = start + v * duration, no drift).  Validation
and execution both use the closed forms below, so a validated endpoint is
bitwise equal to the executed one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dsl import (
    Hover,
    Land,
    MoveByVelocity,
    MoveToPosition,
    Reset,
    RotateToYaw,
    Statement,
    Takeoff,
    wrap_yaw,
)

# Model constants (NED frame, +z down).
TAKEOFF_Z = -3.0  # hover altitude reached by takeoffAsync, metres
VERTICAL_SPEED = 1.0  # takeoff / landing rate, m/s
YAW_RATE = 90.0  # rotation rate, degrees/s
ARRIVAL_TOLERANCE = 0.1  # moveToPositionAsync completion radius, metres
DEFAULT_DT = 0.02  # canonical step, seconds

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class MotionPlan:
    """Closed-form trajectory of one durative statement.

    position(t) = start + velocity * min(t, duration); yaw turns linearly
    toward target_yaw.  ``duration`` of 0 means the statement completes
    immediately (e.g. hover, takeoff while already airborne).
    """

    start_position: Vec3
    start_yaw: float
    velocity: Vec3
    duration: float
    end_position: Vec3
    end_yaw: float
    yaw_rate: float  # signed, degrees/s
    lands: bool = False

    def position_at(self, elapsed: float) -> Vec3:
        t = min(max(elapsed, 0.0), self.duration)
        if t >= self.duration:
            return self.end_position
        return (
            self.start_position[0] + self.velocity[0] * t,
            self.start_position[1] + self.velocity[1] * t,
            self.start_position[2] + self.velocity[2] * t,
        )

    def yaw_at(self, elapsed: float) -> float:
        t = min(max(elapsed, 0.0), self.duration)
        if t >= self.duration:
            return self.end_yaw
        return wrap_yaw(self.start_yaw + self.yaw_rate * t)


def plan_statement(stmt: Statement, position: Vec3, yaw: float, landed: bool) -> MotionPlan:
    """Build the motion plan for one durative statement from a given pose."""
    x, y, z = position
    still = (0.0, 0.0, 0.0)
    if isinstance(stmt, MoveByVelocity):
        end = (
            x + stmt.vx * stmt.duration,
            y + stmt.vy * stmt.duration,
            z + stmt.vz * stmt.duration,
        )
        return MotionPlan(position, yaw, (stmt.vx, stmt.vy, stmt.vz), stmt.duration, end, yaw, 0.0)
    if isinstance(stmt, MoveToPosition):
        target = (stmt.x, stmt.y, stmt.z)
        dx, dy, dz = target[0] - x, target[1] - y, target[2] - z
        dist = math.sqrt(dx * dx + dy * dy + dz * dz)
        if dist == 0.0:
            return MotionPlan(position, yaw, still, 0.0, target, yaw, 0.0)
        v = (dx / dist * stmt.speed, dy / dist * stmt.speed, dz / dist * stmt.speed)
        return MotionPlan(position, yaw, v, dist / stmt.speed, target, yaw, 0.0)
    if isinstance(stmt, RotateToYaw):
        delta = wrap_yaw(stmt.yaw - yaw)
        duration = abs(delta) / YAW_RATE
        rate = math.copysign(YAW_RATE, delta) if delta != 0 else 0.0
        return MotionPlan(position, yaw, still, duration, position, wrap_yaw(stmt.yaw), rate)
    if isinstance(stmt, Takeoff):
        if not landed:
            return MotionPlan(position, yaw, still, 0.0, position, yaw, 0.0)
        end = (x, y, TAKEOFF_Z)
        duration = abs(TAKEOFF_Z - z) / VERTICAL_SPEED
        vz = math.copysign(VERTICAL_SPEED, TAKEOFF_Z - z) if duration > 0 else 0.0
        return MotionPlan(position, yaw, (0.0, 0.0, vz), duration, end, yaw, 0.0)
    if isinstance(stmt, Land):
        if landed:
            return MotionPlan(position, yaw, still, 0.0, position, yaw, 0.0, lands=True)
        end = (x, y, 0.0)
        duration = abs(z) / VERTICAL_SPEED
        vz = math.copysign(VERTICAL_SPEED, -z) if duration > 0 else 0.0
        return MotionPlan(position, yaw, (0.0, 0.0, vz), duration, end, yaw, 0.0, lands=True)
    if isinstance(stmt, Hover):
        return MotionPlan(position, yaw, still, 0.0, position, yaw, 0.0)
    raise TypeError(f"statement {stmt!r} has no motion plan")


def predict_statement_end(
    stmt: Statement, position: Vec3, yaw: float, landed: bool
) -> tuple[Vec3, float, bool]:
    """Predicted (position, yaw, landed) after a statement completes.

    Query statements leave the state untouched; Reset returns to the origin.
    """
    if isinstance(stmt, Reset):
        return (0.0, 0.0, 0.0), 0.0, True
    if not isinstance(stmt, (Takeoff, Land, Hover, MoveByVelocity, MoveToPosition, RotateToYaw)):
        return position, yaw, landed  # queries
    plan = plan_statement(stmt, position, yaw, landed)
    if isinstance(stmt, Takeoff):
        landed = False
    elif isinstance(stmt, Land):
        landed = True
    return plan.end_position, plan.end_yaw, landed
