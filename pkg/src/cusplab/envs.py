"""Goal spaces, the synthetic regret landscape, and the 2D point-mass world
with walls.

The point-mass dynamics constants are fixed so the world box is crossable
in well under 150 steps; the wall layout is a pair of axis-aligned segments
closing off a pocket in the top-right quadrant, entered by going around the
outer wall ends near the edge of the training box.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DTYPE = np.float64


@dataclass(frozen=True)
class GoalSpace:
    """Axis-aligned box of goals."""

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        low = np.asarray(self.low, dtype=DTYPE)
        high = np.asarray(self.high, dtype=DTYPE)
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        if low.shape != high.shape or low.ndim != 1:
            raise ValueError("goal space low/high must be 1-D and of equal length")
        if np.any(low >= high):
            raise ValueError(f"goal space requires low < high per dim, got {low} vs {high}")

    @property
    def dim(self) -> int:
        return self.low.shape[0]

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.low + self.high)

    def contains(self, g: np.ndarray) -> bool:
        g = np.asarray(g, dtype=DTYPE)
        return bool(np.all(g >= self.low) and np.all(g <= self.high))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high)

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=(n, self.dim))


def sample_goal(space: GoalSpace, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the box."""
    return space.sample(rng)


def append_misspecified_dim(space: GoalSpace, low: float = -1.0, high: float = 1.0) -> GoalSpace:
    """Append one extra goal dimension on [low, high]. Rewards and success
    stay on the original dimensions (see RewardSpec.feasible_dims)."""
    return GoalSpace(
        low=np.concatenate([space.low, [low]]),
        high=np.concatenate([space.high, [high]]),
    )


# ---------------------------------------------------------------------------
# Synthetic regret landscape

# Drift rate such that a center starting at (-0.1, 0.1) reaches the origin at
# round 2500 and (0.1, -0.1) at round 5000.
NONSTATIONARY_DRIFT_RATE = 4e-5


@dataclass(frozen=True)
class LandscapeConfig:
    drift_rate: float = 0.0
    peak_radius_sq: float = 0.01
    floor: float = -0.01
    initial_center: tuple[float, float] = (-0.1, 0.1)

    def center(self, round_index: int | np.ndarray) -> np.ndarray:
        cx = self.initial_center[0] + self.drift_rate * np.asarray(round_index, dtype=DTYPE)
        cy = self.initial_center[1] - self.drift_rate * np.asarray(round_index, dtype=DTYPE)
        return np.stack(np.broadcast_arrays(cx, cy), axis=-1)


def landscape_regret(cfg: LandscapeConfig, point: np.ndarray, round_index: int = 0) -> float | np.ndarray:
    """Negative squared distance to the (possibly drifting) center inside the
    peak ball, flat floor outside. Accepts a single point or an (N, 2) batch."""
    p = np.asarray(point, dtype=DTYPE)
    c = cfg.center(round_index)
    d2 = np.sum(np.square(p - c), axis=-1)
    out = np.where(d2 < cfg.peak_radius_sq, -d2, cfg.floor)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Reward specification

@dataclass(frozen=True)
class RewardSpec:
    """Goal-conditioned reward: dense negative Euclidean distance or a sparse
    0/1 indicator, measured on the first feasible_dims goal dimensions."""

    kind: str = "dense"
    epsilon: float = 0.05
    feasible_dims: int | None = None

    def __post_init__(self):
        if self.kind not in ("dense", "sparse"):
            raise ValueError(f"unknown reward kind {self.kind!r}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def distance(self, position: np.ndarray, goal: np.ndarray) -> float | np.ndarray:
        p = np.asarray(position, dtype=DTYPE)
        g = np.asarray(goal, dtype=DTYPE)
        k = self.feasible_dims
        if k is None:
            k = min(p.shape[-1], g.shape[-1])
        d = p[..., :k] - g[..., :k]
        return np.sqrt(np.sum(np.square(d), axis=-1))

    def success(self, position: np.ndarray, goal: np.ndarray):
        return self.distance(position, goal) < self.epsilon

    def reward(self, position: np.ndarray, goal: np.ndarray):
        d = self.distance(position, goal)
        if self.kind == "dense":
            return -d
        return np.where(d < self.epsilon, 1.0, 0.0) if np.ndim(d) else float(d < self.epsilon)


# ---------------------------------------------------------------------------
# Point-mass world

# Walls as (xmin, xmax, ymin, ymax). Two segments close a pocket against the
# top-right corner; the openings are between the wall ends (x or y = 0.23)
# and the world edge (0.3).
POINT_MASS_WALLS: tuple[tuple[float, float, float, float], ...] = (
    (0.05, 0.23, 0.09, 0.11),
    (0.09, 0.11, 0.05, 0.23),
)

WORLD_HALF_EXTENT = 0.3

# Region enclosed by the walls (open toward the world corner).
POCKET_REGION = (0.11, WORLD_HALF_EXTENT, 0.11, WORLD_HALF_EXTENT)

# Where the 10%-of-resets spawn inside the pocket lands.
POCKET_START_BOX = (0.13, 0.27, 0.13, 0.27)

POINT_MASS_GID = GoalSpace(low=np.array([-0.25, -0.25]), high=np.array([0.25, 0.25]))
POINT_MASS_GOOD = GoalSpace(low=np.array([-0.3, -0.3]), high=np.array([0.3, 0.3]))


@dataclass
class PointMassState:
    position: np.ndarray
    velocity: np.ndarray
    time_step: int


def in_pocket(point: np.ndarray) -> bool:
    x, y = float(point[0]), float(point[1])
    xmin, xmax, ymin, ymax = POCKET_REGION
    return xmin < x <= xmax and ymin < y <= ymax


def _inside_wall_interior(p: np.ndarray, walls) -> bool:
    for xmin, xmax, ymin, ymax in walls:
        if xmin < p[0] < xmax and ymin < p[1] < ymax:
            return True
    return False


@dataclass
class PointMassWorld:
    """2D point mass pushed by a bounded force, with damping, hard world-box
    limits, and axis-separated wall collision (sweep-tested, no tunneling).

    Observation is (position, velocity); the goal is passed separately.
    """

    episode_length: int = 300
    corridor_start_prob: float = 0.1
    start_position: tuple[float, float] = (0.0, 0.0)
    damping_keep: float = 0.85
    force_gain: float = 0.002
    # Puts velocity (top speed ~force_gain/(1-damping_keep)) on the same
    # numeric scale as position in the observation.
    velocity_obs_scale: float = 20.0
    walls: tuple = POINT_MASS_WALLS
    half_extent: float = WORLD_HALF_EXTENT

    obs_dim: int = field(init=False, default=4)
    action_dim: int = field(init=False, default=2)

    def observe(self, state: PointMassState) -> np.ndarray:
        return np.concatenate([state.position, self.velocity_obs_scale * state.velocity])

    def reset(self, rng: np.random.Generator) -> tuple[PointMassState, np.ndarray]:
        draw = rng.uniform()
        if draw < self.corridor_start_prob:
            xmin, xmax, ymin, ymax = POCKET_START_BOX
            pos = np.array([rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)], dtype=DTYPE)
        else:
            pos = np.asarray(self.start_position, dtype=DTYPE).copy()
        state = PointMassState(position=pos, velocity=np.zeros(2, dtype=DTYPE), time_step=0)
        return state, self.observe(state)

    def _move_axis(self, pos: np.ndarray, vel: np.ndarray, axis: int) -> None:
        other = 1 - axis
        old = pos[axis]
        new = old + vel[axis]
        for rect in self.walls:
            lo = rect[0] if axis == 0 else rect[2]
            hi = rect[1] if axis == 0 else rect[3]
            olo = rect[2] if axis == 0 else rect[0]
            ohi = rect[3] if axis == 0 else rect[1]
            if not (olo < pos[other] < ohi):
                continue
            if old <= lo and new > lo:
                new = lo
                vel[axis] = 0.0
            elif old >= hi and new < hi:
                new = hi
                vel[axis] = 0.0
        limit = self.half_extent
        if new < -limit:
            new = -limit
            vel[axis] = 0.0
        elif new > limit:
            new = limit
            vel[axis] = 0.0
        pos[axis] = new

    def step(
        self,
        state: PointMassState,
        action: np.ndarray,
        goal: np.ndarray,
        spec: RewardSpec,
    ) -> tuple[PointMassState, np.ndarray, float, bool, bool]:
        """Advance one step. Returns (state, obs, reward, done, success).
        Out-of-box actions are clamped, never rejected."""
        a = np.clip(np.asarray(action, dtype=DTYPE), -1.0, 1.0)
        vel = self.damping_keep * state.velocity + self.force_gain * a
        pos = state.position.copy()
        vel = vel.copy()
        self._move_axis(pos, vel, 0)
        self._move_axis(pos, vel, 1)
        nxt = PointMassState(position=pos, velocity=vel, time_step=state.time_step + 1)
        reward = float(spec.reward(pos, goal))
        success = bool(spec.success(pos, goal))
        done = success or nxt.time_step >= self.episode_length
        return nxt, self.observe(nxt), reward, done, success

    def layout_metadata(self) -> dict:
        """Wall and box geometry, recorded into each run's metadata."""
        return {
            "half_extent": self.half_extent,
            "walls": [list(w) for w in self.walls],
            "pocket_region": list(POCKET_REGION),
            "pocket_start_box": list(POCKET_START_BOX),
            "start_position": list(self.start_position),
            "corridor_start_prob": self.corridor_start_prob,
            "damping_keep": self.damping_keep,
            "force_gain": self.force_gain,
            "episode_length": self.episode_length,
        }
