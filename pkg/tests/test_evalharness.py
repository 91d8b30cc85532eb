import hashlib
import io

import numpy as np
import pytest

from cusplab.envs import GoalSpace, PointMassWorld, RewardSpec, POINT_MASS_GID, in_pocket
from cusplab.evalharness import (
    EvalSpec,
    behind_obstacles_spec,
    evaluate,
    skill_goal_set,
    snapshot_goals,
    write_goal_snapshot,
)
from cusplab.goalgen import GeneratorBuffer
from cusplab.learner import SacConfig, SacLearner


def make_policy(seed=0):
    cfg = SacConfig(hidden=(16, 16))
    return SacLearner(4, 2, np.array([-1.0, -1.0]), np.array([1.0, 1.0]), cfg,
                      np.random.default_rng(seed))


def param_hash(policy):
    h = hashlib.sha256()
    for p in policy.actor.params + policy.q1.params + policy.q2.params:
        h.update(p.tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# evaluate()


def test_goal_at_start_position_always_succeeds():
    world = PointMassWorld(corridor_start_prob=0.0)
    spec = EvalSpec(name="start", goal_list=np.array([[0.0, 0.0]]), n_episodes=5)
    result = evaluate(make_policy(), spec, world, RewardSpec(), np.random.default_rng(0))
    assert result.success_rate == 1.0
    assert all(r["steps"] == 0 for r in result.per_goal)


def test_untrained_policy_weak_on_behind_obstacles():
    world = PointMassWorld()
    spec = behind_obstacles_spec(n_episodes=20)
    result = evaluate(make_policy(seed=1), spec, world, RewardSpec(), np.random.default_rng(1))
    assert result.success_rate <= 0.1


def test_success_rate_recomputable_from_per_goal_records():
    world = PointMassWorld()
    spec = EvalSpec(name="gid", goal_space=POINT_MASS_GID, n_episodes=30)
    result = evaluate(make_policy(seed=2), spec, world, RewardSpec(), np.random.default_rng(2))
    recomputed = sum(r["success"] for r in result.per_goal) / len(result.per_goal)
    assert result.success_rate == recomputed
    assert len(result.per_goal) == 30


def test_evaluation_does_not_mutate_policy():
    world = PointMassWorld()
    policy = make_policy(seed=3)
    before = param_hash(policy)
    spec = EvalSpec(name="gid", goal_space=POINT_MASS_GID, n_episodes=10)
    evaluate(policy, spec, world, RewardSpec(), np.random.default_rng(3))
    assert param_hash(policy) == before


def test_success_rate_monotone_in_epsilon():
    world = PointMassWorld()
    policy = make_policy(seed=4)
    rates = []
    for eps in (0.02, 0.05, 0.1, 0.2):
        spec = EvalSpec(name="gid", goal_space=POINT_MASS_GID, n_episodes=25)
        result = evaluate(policy, spec, world, RewardSpec(epsilon=eps), np.random.default_rng(7))
        rates.append(result.success_rate)
    assert all(a <= b for a, b in zip(rates, rates[1:]))


def test_empty_goal_list_rejected():
    with pytest.raises(ValueError):
        EvalSpec(name="broken", goal_list=np.zeros((0, 2)), n_episodes=5)
    with pytest.raises(ValueError):
        EvalSpec(name="broken", goal_space=None, goal_list=None)


def test_eval_spec_cycles_goal_list():
    spec = EvalSpec(name="cyc", goal_list=np.array([[0.1, 0.0], [0.2, 0.0]]), n_episodes=5)
    rng = np.random.default_rng(0)
    goals = [spec.goal_for_episode(i, rng) for i in range(4)]
    np.testing.assert_array_equal(goals[0], goals[2])
    np.testing.assert_array_equal(goals[1], goals[3])


def test_extra_goal_dims_sampled_in_bounds():
    spec = EvalSpec(name="mis", goal_space=POINT_MASS_GID, n_episodes=5, extra_goal_dims=1)
    rng = np.random.default_rng(0)
    for i in range(20):
        g = spec.goal_for_episode(i, rng)
        assert g.shape == (3,)
        assert -1.0 <= g[2] <= 1.0


# ---------------------------------------------------------------------------
# Skill goals


def test_skill_goal_set_deterministic_and_in_pocket():
    a = skill_goal_set("behind_obstacles")
    b = skill_goal_set("behind_obstacles")
    np.testing.assert_array_equal(a, b)
    for g in a:
        assert POINT_MASS_GID.contains(g)
        assert in_pocket(g)


def test_unknown_skill_set_rejected():
    with pytest.raises(ValueError):
        skill_goal_set("behind_the_moon")


# ---------------------------------------------------------------------------
# Goal snapshots


def filled_buffer(n=7):
    rng = np.random.default_rng(11)
    buf = GeneratorBuffer(capacity=32, obs_dim=2, noise_dim=2, goal_dim=2)
    for i in range(n):
        buf.add(rng.standard_normal(2), rng.standard_normal(2), rng.standard_normal(2),
                rng.uniform(-0.25, 0.25, 2), float(rng.standard_normal() * 1e-3), i)
    return buf


def test_snapshot_empty_buffer_header_only():
    buf = GeneratorBuffer(capacity=4, obs_dim=2, noise_dim=2, goal_dim=2)
    text = snapshot_goals(buf, round_index=5)
    assert text == "round,g0,g1,regret,round_proposed\n"


def test_snapshot_row_count_matches_buffer_size():
    buf = filled_buffer(7)
    text = snapshot_goals(buf, round_index=9)
    lines = text.strip().split("\n")
    assert len(lines) == 8  # header + 7 rows


def test_snapshot_regret_round_trips_at_full_precision(tmp_path):
    buf = filled_buffer(5)
    path = tmp_path / "snap.csv"
    write_goal_snapshot(path, buf, round_index=3)
    rows = path.read_text().strip().split("\n")[1:]
    for i, row in enumerate(rows):
        cells = row.split(",")
        assert float(cells[3]) == buf.regret[i]  # exact, repr round-trip
        assert int(cells[4]) == buf.round_proposed[i]
        assert float(cells[1]) == buf.goal[i, 0]
        assert float(cells[2]) == buf.goal[i, 1]


def test_ood_annulus_excludes_inner_box():
    spec = EvalSpec(name="ood_annulus", goal_space=GoalSpace(np.array([-0.3, -0.3]), np.array([0.3, 0.3])),
                    exclude_space=POINT_MASS_GID, n_episodes=5)
    rng = np.random.default_rng(0)
    for i in range(300):
        g = spec.goal_for_episode(i, rng)
        assert not POINT_MASS_GID.contains(g)
        assert np.all(np.abs(g) <= 0.3)
