"""Leader motion generators: circle, square, random walk, straight line.

Deterministic generators expose exact position/velocity as functions of
time; the random walk integrates clamped Gaussian velocities and keeps
the leader inside its bounding box.
"""

from __future__ import annotations

import math

import numpy as np

LEADER_KINDS = ("circle", "square", "random", "line")


class CircleLeader:
    """Counter-clockwise circle, starting at (radius, 0)."""

    def __init__(self, radius: float = 0.8, speed: float = 0.4,
                 center=(0.0, 0.0)):
        self.radius = radius
        self.speed = speed
        self.center = np.asarray(center, dtype=float)
        self.t = 0.0

    def position(self, t: float) -> np.ndarray:
        ang = self.speed * t / self.radius
        return self.center + self.radius * np.array([math.cos(ang), math.sin(ang)])

    def velocity(self, t: float) -> np.ndarray:
        ang = self.speed * t / self.radius
        return self.speed * np.array([-math.sin(ang), math.cos(ang)])

    def reset(self, rng=None) -> np.ndarray:
        self.t = 0.0
        return self.position(0.0)

    def step(self, dt: float, rng=None) -> np.ndarray:
        self.t += dt
        return self.position(self.t)


class SquareLeader:
    """Constant-speed counter-clockwise walk of the square with corners +-half."""

    def __init__(self, half: float = 0.8, speed: float = 0.4):
        self.half = half
        self.speed = speed
        h = half
        # Start mid-edge at (h, 0) heading up, so t = 0 mirrors the circle start.
        self.waypoints = np.array([
            [h, 0.0], [h, h], [-h, h], [-h, -h], [h, -h], [h, 0.0],
        ])
        self.perimeter = 8.0 * h
        self.t = 0.0

    def _locate(self, t: float):
        s = (self.speed * t) % self.perimeter
        for p0, p1 in zip(self.waypoints[:-1], self.waypoints[1:]):
            seg = np.linalg.norm(p1 - p0)
            if s <= seg:
                direction = (p1 - p0) / seg
                return p0 + s * direction, direction
            s -= seg
        return self.waypoints[-1], np.array([0.0, 1.0])

    def position(self, t: float) -> np.ndarray:
        return self._locate(t)[0]

    def velocity(self, t: float) -> np.ndarray:
        return self.speed * self._locate(t)[1]

    def reset(self, rng=None) -> np.ndarray:
        self.t = 0.0
        return self.position(0.0)

    def step(self, dt: float, rng=None) -> np.ndarray:
        self.t += dt
        return self.position(self.t)


class RandomLeader:
    """Per-step velocities drawn N(0, 1), clamped to the velocity bound;
    position clamped to the +-bound box."""

    def __init__(self, v_max: float = 0.7, bound: float = 1.0,
                 start=(0.0, 0.0)):
        self.v_max = v_max
        self.bound = bound
        self.start = np.asarray(start, dtype=float)
        self.pos = self.start.copy()

    def reset(self, rng=None) -> np.ndarray:
        self.pos = self.start.copy()
        return self.pos.copy()

    def step(self, dt: float, rng: np.random.Generator) -> np.ndarray:
        v = np.clip(rng.normal(0.0, 1.0, size=2), -self.v_max, self.v_max)
        self.pos = np.clip(self.pos + v * dt, -self.bound, self.bound)
        return self.pos.copy()


class LineLeader:
    """Constant-velocity travel from start to end, then stop."""

    def __init__(self, start=(-1.0, -1.0), end=(1.0, 1.0), speed: float = 0.4):
        self.start = np.asarray(start, dtype=float)
        self.end = np.asarray(end, dtype=float)
        self.speed = speed
        self.length = float(np.linalg.norm(self.end - self.start))
        self.direction = (self.end - self.start) / self.length
        self.t = 0.0

    def position(self, t: float) -> np.ndarray:
        s = min(self.speed * t, self.length)
        return self.start + s * self.direction

    def velocity(self, t: float) -> np.ndarray:
        if self.speed * t >= self.length:
            return np.zeros(2)
        return self.speed * self.direction

    def reset(self, rng=None) -> np.ndarray:
        self.t = 0.0
        return self.position(0.0)

    def step(self, dt: float, rng=None) -> np.ndarray:
        self.t += dt
        return self.position(self.t)


def make_leader(kind: str, **kwargs):
    if kind == "circle":
        return CircleLeader(**kwargs)
    if kind == "square":
        return SquareLeader(**kwargs)
    if kind == "random":
        return RandomLeader(**kwargs)
    if kind == "line":
        return LineLeader(**kwargs)
    raise ValueError(f"unknown leader kind {kind!r}")
