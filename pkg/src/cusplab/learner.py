"""Goal-conditioned soft actor-critic learner.

Twin critics with soft-updated targets, a squashed-Gaussian actor over the
action box, auto-tuned entropy temperature (parameterized as exp(log_alpha),
so alpha stays positive), a uniform ring replay buffer, and optional
hindsight relabeling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nets
from .envs import RewardSpec
from .nets import Mlp, AdamState, DTYPE


@dataclass
class Transition:
    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    done: bool
    goal: np.ndarray


@dataclass
class SacConfig:
    discount: float = 0.99
    init_alpha: float = 0.1
    alpha_lr: float = 3e-4
    actor_lr: float = 1e-4
    critic_lr: float = 3e-4
    batch_size: int = 128
    tau: float = 0.005
    target_entropy: float | None = None  # default: -action_dim
    fixed_alpha: float | None = None  # pin the temperature (disables tuning)
    hidden: tuple[int, ...] = (64, 64)
    buffer_capacity: int = 1_000_000

    def __post_init__(self):
        if not (0.0 < self.discount <= 1.0):
            raise ValueError("discount must be in (0, 1]")
        if not (0.0 < self.tau <= 1.0):
            raise ValueError("tau must be in (0, 1]")
        if self.init_alpha <= 0.0:
            raise ValueError("init_alpha must be positive")


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions, uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int, goal_dim: int):
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim), dtype=DTYPE)
        self.action = np.zeros((capacity, action_dim), dtype=DTYPE)
        self.reward = np.zeros(capacity, dtype=DTYPE)
        self.next_obs = np.zeros((capacity, obs_dim), dtype=DTYPE)
        self.done = np.zeros(capacity, dtype=DTYPE)
        self.goal = np.zeros((capacity, goal_dim), dtype=DTYPE)
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    def add(self, t: Transition) -> None:
        i = self.cursor
        self.obs[i] = t.obs
        self.action[i] = t.action
        self.reward[i] = t.reward
        self.next_obs[i] = t.next_obs
        self.done[i] = 1.0 if t.done else 0.0
        self.goal[i] = t.goal
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(0, self.size, size=batch_size)
        return (
            self.obs[idx],
            self.action[idx],
            self.reward[idx],
            self.next_obs[idx],
            self.done[idx],
            self.goal[idx],
        )


def her_relabel(
    trajectory: list[Transition],
    strategy: str,
    k: int,
    spec: RewardSpec,
    rng: np.random.Generator | None = None,
    position_dims: int = 2,
) -> list[Transition]:
    """Hindsight relabeling of one contiguous episode.

    The achieved goal of a transition is the position slice of its next
    observation; extra goal dimensions (if any) are carried over from the
    stored goal. Rewards and dones are recomputed from the reward spec.

    strategy "final" relabels every transition with the episode-final
    achieved position; "future" draws k future steps per transition (rng
    required).
    """
    if strategy not in ("final", "future"):
        raise ValueError(f"unknown relabel strategy {strategy!r}")
    if not trajectory:
        return []
    if strategy == "future" and rng is None:
        raise ValueError("future strategy needs an rng")

    achieved = [t.next_obs[:position_dims] for t in trajectory]

    def make(t: Transition, ach: np.ndarray) -> Transition:
        goal = t.goal.copy()
        goal[:position_dims] = ach
        pos = t.next_obs[:position_dims]
        reward = float(spec.reward(pos, goal))
        done = bool(spec.success(pos, goal))
        return Transition(obs=t.obs.copy(), action=t.action.copy(), reward=reward,
                          next_obs=t.next_obs.copy(), done=done, goal=goal)

    out: list[Transition] = []
    n = len(trajectory)
    if strategy == "final":
        final = achieved[-1]
        out.extend(make(t, final) for t in trajectory)
    else:
        for i, t in enumerate(trajectory):
            picks = rng.integers(i, n, size=k)
            out.extend(make(t, achieved[j]) for j in picks)
    return out


class SacLearner:
    """One goal-conditioned SAC agent (actor + twin critics + targets)."""

    def __init__(
        self,
        obs_dim: int,
        goal_dim: int,
        action_low: np.ndarray,
        action_high: np.ndarray,
        cfg: SacConfig,
        rng: np.random.Generator,
    ):
        self.obs_dim = obs_dim
        self.goal_dim = goal_dim
        self.a_low = np.asarray(action_low, dtype=DTYPE)
        self.a_high = np.asarray(action_high, dtype=DTYPE)
        self.action_dim = self.a_low.shape[0]
        self.cfg = cfg
        self.rng = rng

        in_dim = obs_dim + goal_dim
        h = list(cfg.hidden)
        self.actor = Mlp([in_dim, *h, 2 * self.action_dim], rng)
        self.q1 = Mlp([in_dim + self.action_dim, *h, 1], rng)
        self.q2 = Mlp([in_dim + self.action_dim, *h, 1], rng)
        self.q1_target = self.q1.clone()
        self.q2_target = self.q2.clone()

        self.log_alpha = np.array([np.log(cfg.init_alpha)], dtype=DTYPE)
        self.target_entropy = (
            float(cfg.target_entropy) if cfg.target_entropy is not None else -float(self.action_dim)
        )

        self.opt_actor = AdamState(self.actor.params, lr=cfg.actor_lr)
        self.opt_q1 = AdamState(self.q1.params, lr=cfg.critic_lr)
        self.opt_q2 = AdamState(self.q2.params, lr=cfg.critic_lr)
        self.opt_alpha = AdamState([self.log_alpha], lr=cfg.alpha_lr)

        self.buffer = ReplayBuffer(cfg.buffer_capacity, obs_dim, self.action_dim, goal_dim)
        self.updates_done = 0

    @property
    def alpha(self) -> float:
        if self.cfg.fixed_alpha is not None:
            return float(self.cfg.fixed_alpha)
        return float(np.exp(self.log_alpha[0]))

    def act(
        self,
        obs: np.ndarray,
        goal: np.ndarray,
        mode: str = "stochastic",
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        if mode not in ("stochastic", "deterministic"):
            raise ValueError(f"unknown act mode {mode!r}")
        obs = np.asarray(obs, dtype=DTYPE)
        goal = np.asarray(goal, dtype=DTYPE)
        if obs.shape != (self.obs_dim,) or goal.shape != (self.goal_dim,):
            raise ValueError(
                f"act() expects obs ({self.obs_dim},) and goal ({self.goal_dim},), "
                f"got {obs.shape} and {goal.shape}"
            )
        x = np.concatenate([obs, goal])
        out = self.actor.forward(x)
        mean, log_std, _ = nets.split_policy_head(out)
        if mode == "deterministic":
            return nets.squash_deterministic(mean, self.a_low, self.a_high)
        r = rng if rng is not None else self.rng
        noise = r.standard_normal(self.action_dim)
        return nets.squashed_gaussian(mean, log_std, self.a_low, self.a_high, noise).action

    def add_transition(self, t: Transition) -> None:
        self.buffer.add(t)

    def value_estimate(self, obs: np.ndarray, goal: np.ndarray) -> float | np.ndarray:
        """min over twin critics of Q(obs, goal, deterministic action);
        accepts single vectors or batches."""
        obs = np.asarray(obs, dtype=DTYPE)
        goal = np.asarray(goal, dtype=DTYPE)
        single = obs.ndim == 1
        o = obs[None] if single else obs
        g = goal[None] if goal.ndim == 1 else goal
        x = np.concatenate([o, g], axis=1)
        out = self.actor.forward(x)
        mean, _, _ = nets.split_policy_head(out)
        a = nets.squash_deterministic(mean, self.a_low, self.a_high)
        xin = np.concatenate([x, a], axis=1)
        q = np.minimum(self.q1.forward(xin)[:, 0], self.q2.forward(xin)[:, 0])
        return float(q[0]) if single else q

    def update(self, batch) -> dict:
        """One SAC gradient step on a sampled batch. Returns loss report."""
        obs, action, reward, next_obs, done, goal = batch
        b = obs.shape[0]
        if b == 0:
            raise ValueError("update() needs a nonempty batch")
        alpha = self.alpha
        gamma = self.cfg.discount
        half = 0.5 * (self.a_high - self.a_low)

        x = np.concatenate([obs, goal], axis=1)
        x2 = np.concatenate([next_obs, goal], axis=1)

        # TD target from the target critics and a fresh next action.
        out2 = self.actor.forward(x2)
        mean2, log_std2, _ = nets.split_policy_head(out2)
        noise2 = self.rng.standard_normal(mean2.shape)
        u2 = mean2 + np.exp(log_std2) * noise2
        a2 = nets.squash(u2, self.a_low, self.a_high)
        logp2 = nets.squash_log_prob(u2, mean2, log_std2, self.a_low, self.a_high)
        xin2 = np.concatenate([x2, a2], axis=1)
        qt = np.minimum(self.q1_target.forward(xin2)[:, 0], self.q2_target.forward(xin2)[:, 0])
        y = reward + gamma * (1.0 - done) * (qt - alpha * logp2)

        # Twin critic regression.
        xin = np.concatenate([x, action], axis=1)
        q1 = self.q1.forward(xin, record=True)[:, 0]
        q2 = self.q2.forward(xin, record=True)[:, 0]
        g1, _ = self.q1.backward(((q1 - y) * (2.0 / b))[:, None])
        g2, _ = self.q2.backward(((q2 - y) * (2.0 / b))[:, None])
        self.opt_q1.step(self.q1.params, g1)
        self.opt_q2.step(self.q2.params, g2)
        critic_loss = float(np.mean((q1 - y) ** 2) + np.mean((q2 - y) ** 2))

        # Actor: minimize alpha*log pi - min Q, reparameterized sample.
        out = self.actor.forward(x, record=True)
        mean, log_std, std_mask = nets.split_policy_head(out)
        std = np.exp(log_std)
        noise = self.rng.standard_normal(mean.shape)
        u = mean + std * noise
        t = np.clip(np.tanh(u), -nets._TANH_EDGE, nets._TANH_EDGE)
        a_new = self.a_low + (t + 1.0) * half
        logp = nets.squash_log_prob(u, mean, log_std, self.a_low, self.a_high)

        xa = np.concatenate([x, a_new], axis=1)
        qa1 = self.q1.forward(xa, record=True)[:, 0]
        qa2 = self.q2.forward(xa, record=True)[:, 0]
        minq = np.minimum(qa1, qa2)
        take1 = (qa1 <= qa2).astype(DTYPE)
        dmin = -(1.0 / b)  # d(actor_loss)/d(min Q), per sample
        _, gin1 = self.q1.backward((dmin * take1)[:, None])
        _, gin2 = self.q2.backward((dmin * (1.0 - take1))[:, None])
        dl_da = (gin1 + gin2)[:, -self.action_dim:]

        da_du = (1.0 - t * t) * half
        du_dlogstd = std * noise
        dmean = (alpha / b) * (2.0 * t) + dl_da * da_du
        dlogstd = ((alpha / b) * (-1.0 + 2.0 * t * du_dlogstd) + dl_da * da_du * du_dlogstd) * std_mask
        ga, _ = self.actor.backward(np.concatenate([dmean, dlogstd], axis=1))
        self.opt_actor.step(self.actor.params, ga)
        actor_loss = float(np.mean(alpha * logp - minq))
        entropy = float(np.mean(-logp))

        # Temperature toward the target entropy.
        alpha_loss = 0.0
        if self.cfg.fixed_alpha is None:
            err = float(np.mean(-logp - self.target_entropy))
            alpha_loss = alpha * err
            self.opt_alpha.step([self.log_alpha], [np.array([alpha * err], dtype=DTYPE)])

        if not (np.isfinite(critic_loss) and np.isfinite(actor_loss) and np.isfinite(alpha_loss)):
            raise FloatingPointError(
                "non-finite SAC loss: "
                f"critic={critic_loss} actor={actor_loss} alpha={alpha_loss} "
                f"q1[:4]={q1[:4]} y[:4]={y[:4]} logp[:4]={logp[:4]}"
            )

        # Soft target update.
        tau = self.cfg.tau
        for tgt, src in ((self.q1_target, self.q1), (self.q2_target, self.q2)):
            for pt, p in zip(tgt.params, src.params):
                pt *= 1.0 - tau
                pt += tau * p

        self.updates_done += 1
        return {
            "critic_loss": critic_loss,
            "actor_loss": actor_loss,
            "alpha_loss": alpha_loss,
            "entropy": entropy,
            "alpha": self.alpha,
        }

    def train_steps(self, n: int) -> dict:
        """Run up to n update steps off the replay buffer (skipped while the
        buffer has fewer than batch_size transitions)."""
        agg = {"critic_loss": 0.0, "actor_loss": 0.0, "alpha_loss": 0.0, "entropy": 0.0, "alpha": self.alpha}
        done = 0
        for _ in range(n):
            if self.buffer.size < self.cfg.batch_size:
                break
            report = self.update(self.buffer.sample(self.cfg.batch_size, self.rng))
            for k in ("critic_loss", "actor_loss", "alpha_loss", "entropy"):
                agg[k] += report[k]
            agg["alpha"] = report["alpha"]
            done += 1
        if done:
            for k in ("critic_loss", "actor_loss", "alpha_loss", "entropy"):
                agg[k] /= done
        agg["updates"] = done
        return agg

    # -- checkpointing ------------------------------------------------------

    def named_params(self, prefix: str) -> dict[str, np.ndarray]:
        named: dict[str, np.ndarray] = {}
        for net_name, net in (
            ("actor", self.actor),
            ("q1", self.q1),
            ("q2", self.q2),
            ("q1_target", self.q1_target),
            ("q2_target", self.q2_target),
        ):
            for i, (w, bias) in enumerate(zip(net.weights, net.biases)):
                named[f"{prefix}.{net_name}.w{i}"] = w
                named[f"{prefix}.{net_name}.b{i}"] = bias
        named[f"{prefix}.log_alpha"] = self.log_alpha
        return named

    def load_named_params(self, prefix: str, named: dict[str, np.ndarray]) -> None:
        for key, arr in self.named_params(prefix).items():
            if key not in named:
                raise ValueError(f"checkpoint missing entry {key}")
            if named[key].shape != arr.shape:
                raise ValueError(f"checkpoint entry {key} has shape {named[key].shape}, expected {arr.shape}")
            arr[...] = named[key]

    def clone_parameters_from(self, other: "SacLearner") -> None:
        self.actor.copy_from(other.actor)
        self.q1.copy_from(other.q1)
        self.q2.copy_from(other.q2)
        self.q1_target.copy_from(other.q1_target)
        self.q2_target.copy_from(other.q2_target)
        self.log_alpha[...] = other.log_alpha
