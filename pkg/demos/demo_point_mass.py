"""Tour of the 2D point-mass world: dynamics, walls, rewards, goal spaces.

Run:  python3 demos/demo_point_mass.py
"""

import numpy as np

from cusplab.envs import (
    PointMassWorld,
    RewardSpec,
    POINT_MASS_GID,
    POINT_MASS_GOOD,
    POINT_MASS_WALLS,
    in_pocket,
)


def main():
    world = PointMassWorld(corridor_start_prob=0.0)
    spec = RewardSpec(kind="dense", epsilon=0.05)
    rng = np.random.default_rng(0)

    print("training goal box:", POINT_MASS_GID.low, "to", POINT_MASS_GID.high)
    print("eval goal box:    ", POINT_MASS_GOOD.low, "to", POINT_MASS_GOOD.high)
    print("walls (xmin,xmax,ymin,ymax):")
    for w in POINT_MASS_WALLS:
        print("  ", w)

    # Scripted straight push toward a goal: success inside 0.05.
    state, obs = world.reset(rng)
    goal = np.array([-0.2, -0.15])
    for t in range(world.episode_length):
        direction = goal - state.position
        action = direction / (np.abs(direction).max() + 1e-9)
        state, obs, reward, done, success = world.step(state, action, goal, spec)
        if done:
            break
    print(f"\nstraight push to {goal}: reached in {t+1} steps, success={success}, "
          f"final reward {reward:.4f}")

    # The same push straight at a pocket goal jams on the wall corner.
    state, _ = world.reset(rng)
    pocket_goal = np.array([0.2, 0.2])
    for t in range(world.episode_length):
        direction = pocket_goal - state.position
        action = direction / (np.abs(direction).max() + 1e-9)
        state, _, _, done, success = world.step(state, action, pocket_goal, spec)
        if done:
            break
    print(f"straight push into the pocket at {pocket_goal}: success={success}, "
          f"stuck at ({state.position[0]:.3f}, {state.position[1]:.3f}) "
          f"(the inner wall corner)")

    # Going around the wall ends works.
    state, _ = world.reset(rng)
    waypoints = [np.array([0.27, 0.0]), np.array([0.27, 0.2]), pocket_goal]
    step_count = 0
    for wp in waypoints:
        for _ in range(world.episode_length - step_count):
            direction = wp - state.position
            if np.linalg.norm(direction) < 0.03:
                break
            action = direction / (np.abs(direction).max() + 1e-9)
            state, _, _, done, success = world.step(state, action, pocket_goal, spec)
            step_count += 1
            if done:
                break
    print(f"waypoint route around the wall ends: success={success} in {step_count} steps; "
          f"final position in pocket: {in_pocket(state.position)}")


if __name__ == "__main__":
    main()
