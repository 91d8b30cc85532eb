"""Single-timestep SAC goal generator.

Proposes a goal from (initial observation ++ latent noise), stores every
(s0, z, goal, regret) proposal in a ring buffer, refreshes stale regrets
with the blend rule beta*old + (1-beta)*new after a start round, and runs
entropy-regularized one-step actor/critic updates. The critic target is the
stored regret itself: episodes are one step long, so no discounting and no
bootstrap term appear anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nets
from .envs import GoalSpace
from .nets import Mlp, AdamState, DTYPE


@dataclass
class GeneratorConfig:
    init_alpha: float = 0.1
    alpha_lr: float = 3e-4
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    batch_size: int = 128
    updates_per_round: int = 100
    buffer_capacity: int = 1_000_000
    refresh_start: int = 300
    refresh_beta: float = 0.1
    refresh_every: int = 1  # refresh cadence in rounds, once past refresh_start
    noise_dim: int = 2
    hidden: tuple[int, ...] = (64, 64)
    target_entropy: float | None = None  # default: -goal_dim
    fixed_alpha: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.refresh_beta <= 1.0):
            raise ValueError("refresh_beta must be in [0, 1]")
        if self.updates_per_round < 0:
            raise ValueError("updates_per_round must be >= 0")


class GeneratorBuffer:
    """Ring buffer of goal proposals with in-place regret refresh.

    (s0, z, pre-squash output, goal) are immutable once stored; refresh may
    touch only the regret and round_last_refreshed columns.
    """

    def __init__(self, capacity: int, obs_dim: int, noise_dim: int, goal_dim: int):
        self.capacity = int(capacity)
        self.s0 = np.zeros((capacity, obs_dim), dtype=DTYPE)
        self.z = np.zeros((capacity, noise_dim), dtype=DTYPE)
        self.pre_squash = np.zeros((capacity, goal_dim), dtype=DTYPE)
        self.goal = np.zeros((capacity, goal_dim), dtype=DTYPE)
        self.regret = np.zeros(capacity, dtype=DTYPE)
        self.round_proposed = np.zeros(capacity, dtype=np.int64)
        self.round_refreshed = np.zeros(capacity, dtype=np.int64)
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    def add(
        self,
        s0: np.ndarray,
        z: np.ndarray,
        pre_squash: np.ndarray,
        goal: np.ndarray,
        regret: float,
        round_index: int,
    ) -> None:
        if not np.isfinite(regret):
            raise FloatingPointError(f"non-finite regret {regret!r} rejected")
        i = self.cursor
        self.s0[i] = s0
        self.z[i] = z
        self.pre_squash[i] = pre_squash
        self.goal[i] = goal
        self.regret[i] = regret
        self.round_proposed[i] = round_index
        self.round_refreshed[i] = round_index
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def clear(self) -> None:
        self.size = 0
        self.cursor = 0

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.size, size=batch_size)


@dataclass
class RefreshReport:
    refreshed: int = 0
    skipped_nonfinite: int = 0
    noop: bool = False


def refresh_regrets(
    buffer: GeneratorBuffer,
    value_fn_self,
    value_fn_other,
    current_round: int,
    start_round: int,
    beta: float,
) -> RefreshReport:
    """Blend every stored regret toward the critics' current difference.

    new regret = beta * old + (1 - beta) * (V_self(s0, g) - V_other(s0, g)).
    A strict no-op before start_round and at beta == 1 (buffer bytes are
    untouched). Records whose value estimate is non-finite are skipped and
    tallied.
    """
    if current_round < start_round or beta == 1.0 or buffer.size == 0:
        return RefreshReport(noop=True)
    n = buffer.size
    s0 = buffer.s0[:n]
    goals = buffer.goal[:n]
    new = np.asarray(value_fn_self(s0, goals), dtype=DTYPE) - np.asarray(
        value_fn_other(s0, goals), dtype=DTYPE
    )
    ok = np.isfinite(new)
    idx = np.flatnonzero(ok)
    buffer.regret[idx] = beta * buffer.regret[idx] + (1.0 - beta) * new[idx]
    buffer.round_refreshed[idx] = current_round
    return RefreshReport(refreshed=int(ok.sum()), skipped_nonfinite=int((~ok).sum()))


class GoalGenerator:
    """One-step SAC agent whose action is a goal in G_id."""

    def __init__(
        self,
        obs_dim: int,
        goal_space: GoalSpace,
        cfg: GeneratorConfig,
        rng: np.random.Generator,
    ):
        self.obs_dim = int(obs_dim)
        self.space = goal_space
        self.cfg = cfg
        self.rng = rng
        self.goal_dim = goal_space.dim

        in_dim = self.obs_dim + cfg.noise_dim
        h = list(cfg.hidden)
        self.actor = Mlp([in_dim, *h, 2 * self.goal_dim], rng)
        self.q1 = Mlp([in_dim + self.goal_dim, *h, 1], rng)
        self.q2 = Mlp([in_dim + self.goal_dim, *h, 1], rng)

        self.log_alpha = np.array([np.log(cfg.init_alpha)], dtype=DTYPE)
        self.target_entropy = (
            float(cfg.target_entropy) if cfg.target_entropy is not None else -float(self.goal_dim)
        )
        self.opt_actor = AdamState(self.actor.params, lr=cfg.actor_lr)
        self.opt_q1 = AdamState(self.q1.params, lr=cfg.critic_lr)
        self.opt_q2 = AdamState(self.q2.params, lr=cfg.critic_lr)
        self.opt_alpha = AdamState([self.log_alpha], lr=cfg.alpha_lr)

        self.buffer = GeneratorBuffer(cfg.buffer_capacity, self.obs_dim, cfg.noise_dim, self.goal_dim)
        self.updates_done = 0
        self.empty_update_warnings = 0

    @property
    def alpha(self) -> float:
        if self.cfg.fixed_alpha is not None:
            return float(self.cfg.fixed_alpha)
        return float(np.exp(self.log_alpha[0]))

    def propose(self, s0: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Draw z ~ N(0, I) and a goal from the squashed policy.
        Returns (goal, z, pre-squash output)."""
        s0 = np.asarray(s0, dtype=DTYPE)
        if s0.shape != (self.obs_dim,):
            raise ValueError(f"propose() expects s0 of shape ({self.obs_dim},), got {s0.shape}")
        z = self.rng.standard_normal(self.cfg.noise_dim)
        x = np.concatenate([s0, z])
        out = self.actor.forward(x)
        mean, log_std, _ = nets.split_policy_head(out)
        noise = self.rng.standard_normal(self.goal_dim)
        sample = nets.squashed_gaussian(mean, log_std, self.space.low, self.space.high, noise)
        return sample.action, z, sample.pre_tanh

    def record(
        self,
        s0: np.ndarray,
        z: np.ndarray,
        pre_squash: np.ndarray,
        goal: np.ndarray,
        regret: float,
        round_index: int,
    ) -> None:
        self.buffer.add(s0, z, pre_squash, goal, regret, round_index)

    def update(self, n_updates: int) -> dict:
        """Run n one-step SAC updates against the stored proposals."""
        agg = {
            "critic_loss": 0.0,
            "actor_loss": 0.0,
            "alpha_loss": 0.0,
            "entropy": 0.0,
            "minq_mean": 0.0,
            "alpha": self.alpha,
        }
        if self.buffer.size == 0:
            if n_updates > 0:
                self.empty_update_warnings += 1
            agg["updates"] = 0
            return agg
        b = min(self.cfg.batch_size, self.buffer.size)
        half = 0.5 * (self.space.high - self.space.low)
        for _ in range(n_updates):
            idx = self.buffer.sample_indices(b, self.rng)
            x = np.concatenate([self.buffer.s0[idx], self.buffer.z[idx]], axis=1)
            g_stored = self.buffer.goal[idx]
            y = self.buffer.regret[idx]
            alpha = self.alpha

            # Critic regression straight onto the stored regret.
            xin = np.concatenate([x, g_stored], axis=1)
            q1 = self.q1.forward(xin, record=True)[:, 0]
            q2 = self.q2.forward(xin, record=True)[:, 0]
            gr1, _ = self.q1.backward(((q1 - y) * (2.0 / b))[:, None])
            gr2, _ = self.q2.backward(((q2 - y) * (2.0 / b))[:, None])
            self.opt_q1.step(self.q1.params, gr1)
            self.opt_q2.step(self.q2.params, gr2)
            critic_loss = float(np.mean((q1 - y) ** 2) + np.mean((q2 - y) ** 2))

            # Actor re-proposes goals for the stored (s0, z) states.
            out = self.actor.forward(x, record=True)
            mean, log_std, std_mask = nets.split_policy_head(out)
            std = np.exp(log_std)
            noise = self.rng.standard_normal(mean.shape)
            u = mean + std * noise
            t = np.clip(np.tanh(u), -nets._TANH_EDGE, nets._TANH_EDGE)
            g_new = self.space.low + (t + 1.0) * half
            logp = nets.squash_log_prob(u, mean, log_std, self.space.low, self.space.high)

            xa = np.concatenate([x, g_new], axis=1)
            qa1 = self.q1.forward(xa, record=True)[:, 0]
            qa2 = self.q2.forward(xa, record=True)[:, 0]
            minq = np.minimum(qa1, qa2)
            take1 = (qa1 <= qa2).astype(DTYPE)
            dmin = -(1.0 / b)
            _, gin1 = self.q1.backward((dmin * take1)[:, None])
            _, gin2 = self.q2.backward((dmin * (1.0 - take1))[:, None])
            dl_dg = (gin1 + gin2)[:, -self.goal_dim:]

            dg_du = (1.0 - t * t) * half
            du_dlogstd = std * noise
            dmean = (alpha / b) * (2.0 * t) + dl_dg * dg_du
            dlogstd = ((alpha / b) * (-1.0 + 2.0 * t * du_dlogstd) + dl_dg * dg_du * du_dlogstd) * std_mask
            ga, _ = self.actor.backward(np.concatenate([dmean, dlogstd], axis=1))
            self.opt_actor.step(self.actor.params, ga)
            actor_loss = float(np.mean(alpha * logp - minq))

            alpha_loss = 0.0
            if self.cfg.fixed_alpha is None:
                err = float(np.mean(-logp - self.target_entropy))
                alpha_loss = alpha * err
                self.opt_alpha.step([self.log_alpha], [np.array([alpha * err], dtype=DTYPE)])

            if not (np.isfinite(critic_loss) and np.isfinite(actor_loss)):
                raise FloatingPointError(
                    f"non-finite generator loss: critic={critic_loss} actor={actor_loss}"
                )

            agg["critic_loss"] += critic_loss
            agg["actor_loss"] += actor_loss
            agg["alpha_loss"] += alpha_loss
            agg["entropy"] += float(np.mean(-logp))
            agg["minq_mean"] += float(np.mean(minq))
            agg["alpha"] = self.alpha
            self.updates_done += 1
        for k in ("critic_loss", "actor_loss", "alpha_loss", "entropy", "minq_mean"):
            agg[k] /= n_updates
        agg["updates"] = n_updates
        return agg

    def named_params(self, prefix: str) -> dict[str, np.ndarray]:
        named: dict[str, np.ndarray] = {}
        for net_name, net in (("actor", self.actor), ("q1", self.q1), ("q2", self.q2)):
            for i, (w, bias) in enumerate(zip(net.weights, net.biases)):
                named[f"{prefix}.{net_name}.w{i}"] = w
                named[f"{prefix}.{net_name}.b{i}"] = bias
        named[f"{prefix}.log_alpha"] = self.log_alpha
        return named
