"""Reference-point kinematics for nonholonomic wheeled agents.

Control inputs are planar reference-point velocities (a_x, a_y); the
simulator integrates those directly. `transform_to_wheel` recovers the
(v, w) wheel commands a physical robot would need, using a reference
point a distance d ahead of the wheel axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

REFERENCE_OFFSET = 0.15  # meters


@dataclass
class AgentState:
    x: float
    y: float
    theta: float = 0.0
    role: str = "follower"


@dataclass
class ControlInput:
    a_x: float
    a_y: float


@dataclass
class WheelCommand:
    v: float  # linear velocity
    w: float  # angular velocity


def transform_to_wheel(state: AgentState, u: ControlInput,
                       d: float = REFERENCE_OFFSET) -> WheelCommand:
    """Map reference-point velocities to (v, w) wheel commands.

    v =  cos(theta) a_x + sin(theta) a_y
    w = -(1/d) (sin(theta) a_x + cos(theta) a_y)
    """
    if d == 0:
        raise ValueError("reference offset d must be nonzero")
    c, s = math.cos(state.theta), math.sin(state.theta)
    v = c * u.a_x + s * u.a_y
    w = -(s * u.a_x + c * u.a_y) / d
    return WheelCommand(v=v, w=w)


def integrate_step(state: AgentState, u: ControlInput, dt: float) -> AgentState:
    """Euler step of the reference point; heading follows the motion direction."""
    x = state.x + u.a_x * dt
    y = state.y + u.a_y * dt
    speed = math.hypot(u.a_x, u.a_y)
    theta = math.atan2(u.a_y, u.a_x) if speed > 1e-9 else state.theta
    return AgentState(x=x, y=y, theta=theta, role=state.role)
