import math

import numpy as np
import pytest

from endonav import (
    EpisodeDoneError,
    Observation,
    TaskSpec,
    evaluate,
    format_success_rate,
    geodesic_from,
    make_env,
    run_episode,
)
from endonav.env import TRAJECTORY_HEADER, format_trajectory_row, parse_trajectory
from endonav.tasks import simplified_task, straight_task


def always(action):
    return lambda obs: action


class TestMakeEnv:
    def test_task_a_env_ready(self):
        env = make_env(simplified_task("endpoint_a"), seed=1)
        obs, info = env.reset()
        assert np.array_equal(obs.p, np.zeros(3))
        assert info["d_current"] == pytest.approx(180.0, abs=1e-9)

    def test_same_seed_same_stream(self):
        t = simplified_task("endpoint_a")
        e1, e2 = make_env(t, seed=99), make_env(t, seed=99)
        assert np.array_equal(e1.rng.random(100), e2.rng.random(100))

    def test_invalid_goal_rejected(self):
        g = simplified_task("endpoint_a").graph
        with pytest.raises(ValueError):
            TaskSpec(graph=g, start=0, goal=10_000)

    def test_start_equals_goal_rejected(self):
        g = simplified_task("endpoint_a").graph
        with pytest.raises(ValueError):
            TaskSpec(graph=g, start=0, goal=0)


class TestReset:
    def test_observation_at_origin(self):
        env = make_env(simplified_task("endpoint_a"), seed=0)
        obs, _ = env.reset()
        assert np.array_equal(obs.vector, np.zeros(6))

    def test_reset_after_episode_identical(self):
        env = make_env(straight_task(), seed=0)
        first, _ = env.reset()
        run_episode(env, always((2.0, 0.0)))
        again, info = env.reset()
        assert np.array_equal(first.vector, again.vector)
        assert info["step"] == 0

    def test_info_distance_matches_geodesic_field(self):
        task = simplified_task("endpoint_b")
        env = make_env(task, seed=0)
        _, info = env.reset()
        field = geodesic_from(task.graph, task.goal, task.alpha)
        assert info["d_current"] == pytest.approx(field.dist[task.start], abs=1e-9)


class TestStep:
    def test_shaped_reward_value(self):
        env = make_env(straight_task(length=40.0), seed=0)
        env.reset()
        obs, reward, done, info = env.step((2.0, 0.0))
        assert reward == pytest.approx(0.02, abs=1e-12)
        assert not done
        assert info["step"] == 1

    def test_goal_within_one_mm(self):
        env = make_env(straight_task(length=20.0), seed=0)
        env.reset()
        done = False
        total_steps = 0
        while not done:
            obs, reward, done, info = env.step((2.0, 0.0))
            total_steps += 1
        assert reward > 100.0 - 1.0
        assert info["d_current"] <= 1.0
        assert total_steps == 10

    def test_step_limit_failure(self):
        env = make_env(straight_task(length=40.0, max_steps=5), seed=0)
        env.reset()
        for _ in range(4):
            _, _, done, _ = env.step((0.0, 0.0))
            assert not done
        _, reward, done, info = env.step((0.0, 0.0))
        assert done
        assert reward <= -100.0 + 1e-9

    def test_step_after_done_raises(self):
        env = make_env(straight_task(length=40.0, max_steps=2), seed=0)
        env.reset()
        env.step((0.0, 0.0))
        env.step((0.0, 0.0))
        with pytest.raises(EpisodeDoneError):
            env.step((0.0, 0.0))

    def test_info_d_current_matches_manifold_distance(self):
        from endonav import manifold_distance
        task = simplified_task("endpoint_a")
        env = make_env(task, seed=3)
        obs, _ = env.reset()
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = (float(rng.uniform(-2, 2)), float(rng.uniform(-0.3, 0.3)))
            obs, _, done, info = env.step(a)
            d = manifold_distance(env.field, task.graph, obs.p)
            assert abs(info["d_current"] - d) < 1e-9
            if done:
                break


class TestObservation:
    def test_vector_layout(self):
        o = Observation(p=np.array([1.0, 2.0, 3.0]), v=np.array([4.0, 5.0, 6.0]))
        assert np.array_equal(o.vector, [1, 2, 3, 4, 5, 6])

    def test_round_trip(self):
        vec = np.array([0.1, -2.5, 3.75, -0.125, 9.0, 1e-9])
        o = Observation.from_vector(vec)
        assert np.array_equal(o.vector, vec)


class TestRunEpisode:
    def test_forward_policy_succeeds(self):
        env = make_env(straight_task(length=20.0), seed=0)
        res = run_episode(env, always((2.0, 0.0)))
        assert res.success
        assert res.steps == 10
        assert res.sim_time == pytest.approx(1.0)

    def test_backward_policy_times_out(self):
        env = make_env(straight_task(length=20.0, max_steps=30), seed=0)
        res = run_episode(env, always((-2.0, 0.0)))
        assert not res.success
        assert res.steps == 30
        assert res.episode_return <= -100.0

    def test_golden_task_a_script(self):
        # straight push with roll 0 selects the +x branch: reaches endpoint A
        env = make_env(simplified_task("endpoint_a"), seed=0)
        res = run_episode(env, always((2.0, 0.0)))
        assert res.success
        assert res.steps == 90
        assert res.final_distance <= 1e-9

    def test_return_telescopes_without_terminal_bonus(self):
        task = simplified_task("endpoint_a")
        env = make_env(task, seed=0)
        obs, info0 = env.reset()
        d0 = info0["d_current"]
        total = 0.0
        rng = np.random.default_rng(8)
        for _ in range(40):
            _, r, done, info = env.step((float(rng.uniform(-1, 1)), 0.0))
            total += r
            assert not done
        assert abs(total - (d0 - info["d_current"]) / 100.0) < 1e-9


class TestEvaluate:
    def test_deterministic_results_identical(self):
        env = make_env(straight_task(length=20.0), seed=0)
        summary = evaluate(env, always((2.0, 0.0)), 10)
        assert summary.success_rate == 1.0
        assert len(set(summary.episodes)) == 1

    def test_rate_formatting(self):
        assert format_success_rate(8, 10) == "80% (8/10)"
        assert format_success_rate(0, 10) == "0% (0/10)"
        assert format_success_rate(1, 3) == "33.3333% (1/3)"

    def test_mean_time_over_successes_only(self):
        env = make_env(straight_task(length=20.0), seed=0)
        summary = evaluate(env, always((2.0, 0.0)), 5)
        assert summary.mean_sim_time == pytest.approx(1.0)
        failing = evaluate(env, always((-2.0, 0.0)), 2)
        assert math.isnan(failing.mean_sim_time)

    def test_rejects_zero_episodes(self):
        env = make_env(straight_task(), seed=0)
        with pytest.raises(ValueError):
            evaluate(env, always((0.0, 0.0)), 0)


class TestTrajectoryLog:
    def test_row_round_trip(self):
        env = make_env(straight_task(length=20.0), seed=0)
        rows = [TRAJECTORY_HEADER]

        def record(step, obs, action, reward, info, done):
            rows.append(format_trajectory_row(0, step, obs, action, reward,
                                              info, done))

        run_episode(env, always((2.0, 0.0)), on_step=record)
        parsed = parse_trajectory("\n".join(rows))
        assert len(parsed) == 10
        assert parsed[0]["pz"] == 2.0
        assert parsed[-1]["done"] == 1
        assert parsed[-1]["event"] == "reached_terminal"

    def test_rejects_bad_header(self):
        with pytest.raises(ValueError):
            parse_trajectory("nope\n1,2,3\n")
