import math

import numpy as np
import pytest

from mpgrl.kinematics import (REFERENCE_OFFSET, AgentState, ControlInput,
                              WheelCommand, integrate_step, transform_to_wheel)
from mpgrl.leaders import (CircleLeader, LineLeader, RandomLeader,
                           SquareLeader, make_leader)


class TestWheelTransform:
    def test_theta_zero_substitution(self):
        # at theta = 0: v = a_x, w = -a_y / d
        state = AgentState(x=0.0, y=0.0, theta=0.0)
        cmd = transform_to_wheel(state, ControlInput(a_x=0.3, a_y=-0.2), d=0.15)
        assert cmd.v == 0.3
        assert cmd.w == pytest.approx(0.2 / 0.15)

    def test_theta_zero_pure_lateral(self):
        state = AgentState(x=0.0, y=0.0, theta=0.0)
        cmd = transform_to_wheel(state, ControlInput(a_x=0.0, a_y=0.5))
        assert cmd.v == 0.0
        assert cmd.w == pytest.approx(-0.5 / REFERENCE_OFFSET)

    def test_linearity_in_control(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            theta = rng.uniform(-math.pi, math.pi)
            state = AgentState(x=0.0, y=0.0, theta=theta)
            u1 = ControlInput(*rng.uniform(-1, 1, size=2))
            u2 = ControlInput(*rng.uniform(-1, 1, size=2))
            a, b = rng.uniform(-2, 2, size=2)
            combo = ControlInput(a_x=a * u1.a_x + b * u2.a_x,
                                 a_y=a * u1.a_y + b * u2.a_y)
            lhs = transform_to_wheel(state, combo)
            r1 = transform_to_wheel(state, u1)
            r2 = transform_to_wheel(state, u2)
            assert lhs.v == pytest.approx(a * r1.v + b * r2.v, abs=1e-12)
            assert lhs.w == pytest.approx(a * r1.w + b * r2.w, abs=1e-12)

    def test_zero_offset_rejected(self):
        with pytest.raises(ValueError):
            transform_to_wheel(AgentState(0, 0), ControlInput(1, 0), d=0.0)


class TestIntegrateStep:
    def test_position_euler_exact(self):
        s = AgentState(x=1.0, y=-2.0, theta=0.3)
        s2 = integrate_step(s, ControlInput(a_x=0.4, a_y=-0.6), dt=0.05)
        assert s2.x == 1.0 + 0.4 * 0.05
        assert s2.y == -2.0 - 0.6 * 0.05

    def test_heading_follows_motion(self):
        s = AgentState(x=0.0, y=0.0, theta=0.0)
        s2 = integrate_step(s, ControlInput(a_x=0.0, a_y=0.5), dt=0.05)
        assert s2.theta == pytest.approx(math.pi / 2)

    def test_heading_kept_when_still(self):
        s = AgentState(x=0.0, y=0.0, theta=1.2)
        s2 = integrate_step(s, ControlInput(a_x=0.0, a_y=0.0), dt=0.05)
        assert s2.theta == 1.2

    def test_role_preserved(self):
        s = AgentState(x=0.0, y=0.0, role="leader")
        assert integrate_step(s, ControlInput(0.1, 0.1), 0.05).role == "leader"


class TestCircleLeader:
    def test_starts_on_positive_x_axis(self):
        leader = CircleLeader(radius=0.8)
        np.testing.assert_allclose(leader.reset(), [0.8, 0.0])

    def test_constant_radius_and_speed(self):
        leader = CircleLeader(radius=0.8, speed=0.4)
        for t in np.linspace(0.0, 30.0, 50):
            assert np.linalg.norm(leader.position(t)) == pytest.approx(0.8)
            assert np.linalg.norm(leader.velocity(t)) == pytest.approx(0.4)

    def test_velocity_is_position_derivative(self):
        leader = CircleLeader()
        h = 1e-6
        for t in (0.0, 1.7, 9.3):
            fd = (leader.position(t + h) - leader.position(t - h)) / (2 * h)
            np.testing.assert_allclose(leader.velocity(t), fd, atol=1e-6)

    def test_counter_clockwise(self):
        leader = CircleLeader()
        assert leader.position(0.1)[1] > 0


class TestSquareLeader:
    def test_full_lap_returns_to_start(self):
        leader = SquareLeader(half=0.8, speed=0.4)
        lap_time = leader.perimeter / leader.speed
        np.testing.assert_allclose(leader.position(lap_time),
                                   leader.position(0.0), atol=1e-12)

    def test_stays_on_square_boundary(self):
        leader = SquareLeader(half=0.8)
        for t in np.linspace(0.0, 40.0, 200):
            p = leader.position(t)
            assert np.max(np.abs(p)) == pytest.approx(0.8)

    def test_constant_speed(self):
        leader = SquareLeader(half=0.8, speed=0.4)
        dt = 1e-3
        for t in np.linspace(0.1, 15.0, 40):
            step = np.linalg.norm(leader.position(t + dt) - leader.position(t))
            # corner-crossing steps are shorter; everywhere else exact
            assert step <= 0.4 * dt + 1e-12

    def test_first_corner_reached(self):
        leader = SquareLeader(half=0.8, speed=0.4)
        np.testing.assert_allclose(leader.position(0.8 / 0.4), [0.8, 0.8],
                                   atol=1e-12)


class TestRandomLeader:
    def test_reset_is_origin(self):
        leader = RandomLeader()
        np.testing.assert_allclose(leader.reset(np.random.default_rng(0)),
                                   [0.0, 0.0])

    def test_stays_in_box_and_speed_bounded(self):
        rng = np.random.default_rng(3)
        leader = RandomLeader(v_max=0.7, bound=1.0)
        prev = leader.reset(rng)
        for _ in range(2000):
            pos = leader.step(0.05, rng)
            assert np.max(np.abs(pos)) <= 1.0
            assert np.max(np.abs(pos - prev)) <= 0.7 * 0.05 + 1e-12
            prev = pos

    def test_moves_at_all(self):
        rng = np.random.default_rng(4)
        leader = RandomLeader()
        leader.reset(rng)
        assert np.linalg.norm(leader.step(0.05, rng)) > 0


class TestLineLeader:
    def test_endpoints_and_stop(self):
        leader = LineLeader(start=(-1, -1), end=(1, 1), speed=0.4)
        np.testing.assert_allclose(leader.reset(), [-1.0, -1.0])
        travel_time = leader.length / 0.4
        np.testing.assert_allclose(leader.position(travel_time), [1.0, 1.0])
        np.testing.assert_allclose(leader.position(travel_time + 5.0), [1.0, 1.0])
        np.testing.assert_allclose(leader.velocity(travel_time + 5.0), [0.0, 0.0])

    def test_constant_velocity_before_arrival(self):
        leader = LineLeader(start=(0, 0), end=(2, 0), speed=0.5)
        np.testing.assert_allclose(leader.velocity(1.0), [0.5, 0.0])
        np.testing.assert_allclose(leader.position(2.0), [1.0, 0.0])


class TestMakeLeader:
    def test_dispatch(self):
        assert isinstance(make_leader("circle"), CircleLeader)
        assert isinstance(make_leader("square"), SquareLeader)
        assert isinstance(make_leader("random"), RandomLeader)
        assert isinstance(make_leader("line"), LineLeader)

    def test_unknown_rejected(self):
        with pytest.raises(ValueError):
            make_leader("spiral")
