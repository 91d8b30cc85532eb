"""Hindsight relabeling in isolation.

A failed episode (never reached its goal) is converted into useful data by
replacing the goal with positions the agent actually achieved, recomputing
rewards and dones from the reward spec.

Run:  python3 demos/demo_hindsight.py
"""

import numpy as np

from cusplab.envs import PointMassWorld, RewardSpec
from cusplab.learner import Transition, her_relabel


def main():
    world = PointMassWorld(corridor_start_prob=0.0)
    spec = RewardSpec(kind="sparse", epsilon=0.05)
    rng = np.random.default_rng(7)

    goal = np.array([0.24, -0.24])  # far corner; a random policy won't reach it
    state, obs = world.reset(np.random.default_rng(0))
    episode = []
    for _ in range(40):
        action = rng.uniform(-1, 1, 2)
        state, next_obs, reward, done, success = world.step(state, action, goal, spec)
        episode.append(Transition(obs, action, reward, next_obs, done, goal.copy()))
        obs = next_obs

    print(f"original episode: goal {goal}, total sparse reward "
          f"{sum(t.reward for t in episode):.0f} (failed)")

    relabeled = her_relabel(episode, "final", 1, spec)
    print(f"final-state relabel: new goal {np.round(relabeled[-1].goal, 4)} "
          f"(where the agent ended up)")
    print(f"  last transition now: reward {relabeled[-1].reward:.0f}, done {relabeled[-1].done}")
    print(f"  total reward across relabeled episode: "
          f"{sum(t.reward for t in relabeled):.0f}")

    future = her_relabel(episode, "future", 4, spec, rng=np.random.default_rng(1))
    hits = sum(t.reward for t in future)
    print(f"future-strategy relabel (k=4): {len(future)} transitions, "
          f"{hits:.0f} of them rewarding")


if __name__ == "__main__":
    main()
