"""Evaluation protocols: random-goal success rates over a goal box or an
explicit goal list, the fixed behind-the-walls skill set, and generator
buffer snapshots as CSV.

Evaluation never mutates the policy; actions are deterministic by default.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .envs import GoalSpace, PointMassWorld, RewardSpec, POINT_MASS_GID, in_pocket
from .goalgen import GeneratorBuffer

# Fixed goals inside the walled pocket, near the edge of the training box.
BEHIND_OBSTACLES_GOALS = np.array(
    [
        [0.16, 0.16],
        [0.20, 0.20],
        [0.24, 0.24],
        [0.14, 0.23],
        [0.23, 0.14],
    ]
)

SKILL_GOAL_SETS = {"behind_obstacles": BEHIND_OBSTACLES_GOALS}


def skill_goal_set(name: str) -> np.ndarray:
    if name not in SKILL_GOAL_SETS:
        raise ValueError(f"unknown skill goal set {name!r}; valid: {sorted(SKILL_GOAL_SETS)}")
    return SKILL_GOAL_SETS[name].copy()


@dataclass
class EvalSpec:
    """Where evaluation goals come from and how many episodes to run."""

    name: str
    goal_space: GoalSpace | None = None  # uniform sampling source
    goal_list: np.ndarray | None = None  # explicit goals, cycled
    n_episodes: int = 50
    deterministic: bool = True
    extra_goal_dims: int = 0  # appended dims sampled uniformly on [-1, 1]
    exclude_space: GoalSpace | None = None  # rejection-sample outside this box

    def __post_init__(self):
        if self.n_episodes < 1:
            raise ValueError("n_episodes must be >= 1")
        if self.goal_space is None and self.goal_list is None:
            raise ValueError(f"eval spec {self.name!r} needs a goal space or a goal list")
        if self.goal_list is not None and len(self.goal_list) == 0:
            raise ValueError(f"eval spec {self.name!r} has an empty goal list")

    def goal_for_episode(self, i: int, rng: np.random.Generator) -> np.ndarray:
        if self.goal_list is not None:
            goal = np.asarray(self.goal_list[i % len(self.goal_list)], dtype=float).copy()
        else:
            goal = self.goal_space.sample(rng)
            while self.exclude_space is not None and self.exclude_space.contains(goal):
                goal = self.goal_space.sample(rng)
        if self.extra_goal_dims:
            goal = np.concatenate([goal, rng.uniform(-1.0, 1.0, size=self.extra_goal_dims)])
        return goal


@dataclass
class EvalResult:
    name: str
    n_episodes: int
    success_rate: float
    per_goal: list = field(default_factory=list)

    def to_record(self, round_index: int, schema_version: int = 1) -> dict:
        return {
            "v": schema_version,
            "type": "eval",
            "round": round_index,
            "goal_set": self.name,
            "n_episodes": self.n_episodes,
            "success_rate": self.success_rate,
            "per_goal": self.per_goal,
        }


def evaluate(
    policy,
    spec: EvalSpec,
    env: PointMassWorld,
    reward_spec: RewardSpec,
    rng: np.random.Generator,
) -> EvalResult:
    """Run the spec's episodes and report the success fraction.

    A goal already satisfied at the reset state counts as an immediate
    success; otherwise the episode runs under the early-termination rule.
    """
    mode = "deterministic" if spec.deterministic else "stochastic"
    per_goal = []
    successes = 0
    for i in range(spec.n_episodes):
        goal = spec.goal_for_episode(i, rng)
        state, obs = env.reset(rng)
        success = bool(reward_spec.success(state.position, goal))
        steps = 0
        if not success:
            for _ in range(env.episode_length):
                action = policy.act(obs, goal, mode=mode, rng=rng)
                state, obs, _, done, success = env.step(state, action, goal, reward_spec)
                steps += 1
                if done:
                    break
        final_d = float(reward_spec.distance(state.position, goal))
        successes += int(success)
        per_goal.append(
            {"goal": [float(g) for g in goal], "success": bool(success),
             "steps": steps, "final_distance": final_d}
        )
    return EvalResult(
        name=spec.name,
        n_episodes=spec.n_episodes,
        success_rate=successes / spec.n_episodes,
        per_goal=per_goal,
    )


def behind_obstacles_spec(n_episodes: int = 20, extra_goal_dims: int = 0) -> EvalSpec:
    goals = skill_goal_set("behind_obstacles")
    assert all(POINT_MASS_GID.contains(g) for g in goals)
    assert all(in_pocket(g) for g in goals)
    return EvalSpec(name="behind_obstacles", goal_list=goals, n_episodes=n_episodes,
                    extra_goal_dims=extra_goal_dims)


# ---------------------------------------------------------------------------
# Goal snapshots


def snapshot_goals(buffer: GeneratorBuffer, round_index: int) -> str:
    """CSV dump of a generator buffer: one row per stored proposal, floats at
    full precision for bit-faithful round-trips."""
    n = buffer.size
    goal_dim = buffer.goal.shape[1]
    header = ",".join(["round"] + [f"g{i}" for i in range(goal_dim)] + ["regret", "round_proposed"])
    out = io.StringIO()
    out.write(header + "\n")
    for i in range(n):
        cells = [str(round_index)]
        cells += [repr(float(v)) for v in buffer.goal[i]]
        cells.append(repr(float(buffer.regret[i])))
        cells.append(str(int(buffer.round_proposed[i])))
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def write_goal_snapshot(path, buffer: GeneratorBuffer, round_index: int) -> None:
    with open(path, "w") as f:
        f.write(snapshot_goals(buffer, round_index))
