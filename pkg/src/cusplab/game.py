"""Round orchestration: curriculum self play and its baselines.

One curriculum round = two goal proposals, four rollouts (easy goals first,
then hard), two learner-training phases, and two generator-training phases.
The generator reward pairs are exactly antisymmetric: whatever one generator
is paid for a goal, the other is paid the negation.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import evalharness
from .config import SCHEMA_VERSION, RunConfig
from .envs import sample_goal
from .goalgen import GoalGenerator, refresh_regrets
from .learner import SacLearner, Transition
from .nets import save_params
from .rngstreams import all_streams, substream

ACTION_LOW = np.array([-1.0, -1.0])
ACTION_HIGH = np.array([1.0, 1.0])


@dataclass
class RolloutResult:
    undiscounted: float
    discounted: float
    steps: int
    success: bool
    final_position: np.ndarray


@dataclass
class RoundLog:
    round_index: int
    method: str
    goals: dict = field(default_factory=dict)
    returns: dict = field(default_factory=dict)
    successes: dict = field(default_factory=dict)
    gen_rewards: dict = field(default_factory=dict)
    losses: dict = field(default_factory=dict)
    counters: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "v": SCHEMA_VERSION,
            "type": "round",
            "round": self.round_index,
            "method": self.method,
            "goals": {k: [float(x) for x in v] for k, v in self.goals.items()},
            "returns": self.returns,
            "successes": self.successes,
            "gen_rewards": self.gen_rewards,
            "losses": self.losses,
            "counters": self.counters,
        }


class Orchestrator:
    """Owns the environment, the players a method needs, and the per-round
    logic for every method and ablation."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.spec = cfg.method_spec()
        self.env = cfg.make_env()
        self.reward_spec = cfg.make_reward_spec()
        self.proposal_space = cfg.proposal_space()
        self.goal_dim = cfg.goal_dim
        self.streams = all_streams(cfg.seed)
        self.stochastic_rollouts = bool(cfg.get("game", "stochastic_rollouts"))
        self.discounted_regret = bool(cfg.get("game", "discounted_regret"))
        self.updates_per_step = float(cfg.get("learner", "updates_per_step"))
        self.use_her = bool(cfg.get("learner", "use_her"))
        self.her_strategy = str(cfg.get("learner", "her_strategy"))
        self.her_k = int(cfg.get("learner", "her_k"))

        lcfg = cfg.make_learner_cfg()
        kind = self.spec.kind
        self.alice: SacLearner | None = None
        self.bob: SacLearner | None = None
        self.gen_a: GoalGenerator | None = None
        self.gen_b: GoalGenerator | None = None

        def learner(stream):
            return SacLearner(self.env.obs_dim, self.goal_dim, ACTION_LOW, ACTION_HIGH,
                              lcfg, self.streams[stream])

        needs_alice = kind in ("cusp", "paired_single", "asp_sparse", "asp_dense")
        if needs_alice:
            self.alice = learner("alice")
        self.bob = learner("bob")

        if self.spec.uses_generators:
            gcfg = cfg.make_generator_cfg()
            self.gen_a = GoalGenerator(self.env.obs_dim, self.proposal_space, gcfg,
                                       self.streams["gen_a"])
            symmetrized = kind == "cusp" and not self.spec.no_symmetrize
            if symmetrized:
                self.gen_b = GoalGenerator(self.env.obs_dim, self.proposal_space, gcfg,
                                           self.streams["gen_b"])
            self.refresh_start = gcfg.refresh_start
            self.refresh_beta = gcfg.refresh_beta
            self.refresh_every = gcfg.refresh_every
            self.updates_per_round = gcfg.updates_per_round

        self.null_goal = np.zeros(self.goal_dim)

    # -- shared machinery -----------------------------------------------------

    def _rollout(self, agent: SacLearner, goal: np.ndarray, counters: dict) -> RolloutResult:
        env = self.env
        mode = "stochastic" if self.stochastic_rollouts else "deterministic"
        state, obs = env.reset(self.streams["env"])
        undisc = 0.0
        disc = 0.0
        gamma = 1.0
        success_any = False
        episode: list[Transition] = []
        steps = 0
        for _ in range(env.episode_length):
            action = agent.act(obs, goal, mode=mode)
            state, next_obs, reward, done, success = env.step(state, action, goal, self.reward_spec)
            # A time-limit stop is a truncation, not a terminal state: the
            # stored done flag (the bootstrap mask) is set only on success.
            episode.append(Transition(obs, action, reward, next_obs, success, goal.copy()))
            undisc += reward
            disc += gamma * reward
            gamma *= agent.cfg.discount
            success_any = success_any or success
            obs = next_obs
            steps += 1
            if done:
                break
        for t in episode:
            agent.add_transition(t)
        if self.use_her:
            self._store_her(agent, episode)
        counters["rollouts"] = counters.get("rollouts", 0) + 1
        counters["env_steps"] = counters.get("env_steps", 0) + steps
        return RolloutResult(undisc, disc, steps, success_any, state.position.copy())

    def _store_her(self, agent: SacLearner, episode: list[Transition]) -> None:
        from .learner import her_relabel

        extra = her_relabel(episode, self.her_strategy, self.her_k, self.reward_spec,
                            rng=agent.rng)
        for t in extra:
            agent.add_transition(t)

    def _ret(self, res: RolloutResult) -> float:
        return res.discounted if self.discounted_regret else res.undiscounted

    def _train(self, agent: SacLearner, steps: int, counters: dict) -> dict:
        n = int(round(steps * self.updates_per_step))
        report = agent.train_steps(n)
        counters["learner_update_phases"] = counters.get("learner_update_phases", 0) + 1
        counters["learner_updates"] = counters.get("learner_updates", 0) + report["updates"]
        return report

    def _generator_phase(self, gen: GoalGenerator, records: list[tuple], round_index: int,
                         value_self, value_other, counters: dict) -> dict:
        """Record this round's tuples, refresh stale regrets, then update."""
        if self.spec.no_buffer:
            gen.buffer.clear()
        for s0, z, u, goal, regret in records:
            gen.record(s0, z, u, goal, regret, round_index)
        due = round_index % max(1, self.refresh_every) == 0
        if not self.spec.no_buffer and value_self is not None and due:
            refresh_regrets(gen.buffer, value_self, value_other, round_index,
                            self.refresh_start, self.refresh_beta)
        report = gen.update(self.updates_per_round)
        counters["generator_update_phases"] = counters.get("generator_update_phases", 0) + 1
        counters["generator_updates"] = counters.get("generator_updates", 0) + report["updates"]
        return report

    def _value_fn(self, agent: SacLearner):
        return lambda s0, goals: agent.value_estimate(s0, goals)

    # -- rounds ---------------------------------------------------------------

    def run_round(self, round_index: int) -> RoundLog:
        kind = self.spec.kind
        if kind == "cusp":
            if self.gen_b is None:
                return self.run_paired_single_round(round_index)
            return self.run_cusp_round(round_index)
        if kind == "domain_randomization":
            return self.run_dr_round(round_index)
        if kind == "paired_single":
            return self.run_paired_single_round(round_index)
        if kind == "single_learner":
            return self.run_single_learner_round(round_index)
        if kind in ("asp_sparse", "asp_dense"):
            return self.run_asp_round(round_index, variant=kind.split("_")[1])
        raise ValueError(f"unhandled method {kind!r}")

    def run_cusp_round(self, round_index: int) -> RoundLog:
        counters: dict = {}
        _, s0 = self.env.reset(self.streams["env"])
        g_a, z_a, u_a = self.gen_a.propose(s0)
        g_b, z_b, u_b = self.gen_b.propose(s0)

        res_a_easy = self._rollout(self.alice, g_a, counters)
        res_b_easy = self._rollout(self.bob, g_b, counters)
        losses_alice_easy = self._train(self.alice, res_a_easy.steps, counters)
        losses_bob_easy = self._train(self.bob, res_b_easy.steps, counters)

        res_a_hard = self._rollout(self.alice, g_b, counters)
        res_b_hard = self._rollout(self.bob, g_a, counters)
        losses_alice_hard = self._train(self.alice, res_a_hard.steps, counters)
        losses_bob_hard = self._train(self.bob, res_b_hard.steps, counters)

        ra_easy, rb_easy = self._ret(res_a_easy), self._ret(res_b_easy)
        ra_hard, rb_hard = self._ret(res_a_hard), self._ret(res_b_hard)

        # Reward pairs per goal; the second generator gets exact negations.
        reward_ga_own = ra_easy - rb_hard  # for g_a
        reward_ga_other = ra_hard - rb_easy  # for g_b
        reward_gb_own = -reward_ga_other  # for g_b
        reward_gb_other = -reward_ga_own  # for g_a

        gen_a_report = self._generator_phase(
            self.gen_a,
            [(s0, z_a, u_a, g_a, reward_ga_own), (s0, z_b, u_b, g_b, reward_ga_other)],
            round_index,
            self._value_fn(self.alice),
            self._value_fn(self.bob),
            counters,
        )
        gen_b_report = self._generator_phase(
            self.gen_b,
            [(s0, z_b, u_b, g_b, reward_gb_own), (s0, z_a, u_a, g_a, reward_gb_other)],
            round_index,
            self._value_fn(self.bob),
            self._value_fn(self.alice),
            counters,
        )

        return RoundLog(
            round_index=round_index,
            method="cusp",
            goals={"g_a": g_a, "g_b": g_b},
            returns={"a_easy": ra_easy, "b_easy": rb_easy, "a_hard": ra_hard, "b_hard": rb_hard},
            successes={
                "a_easy": res_a_easy.success, "b_easy": res_b_easy.success,
                "a_hard": res_a_hard.success, "b_hard": res_b_hard.success,
            },
            gen_rewards={
                "g_a": {"gen_a": reward_ga_own, "gen_b": reward_gb_other},
                "g_b": {"gen_a": reward_ga_other, "gen_b": reward_gb_own},
            },
            losses={
                "alice": losses_alice_hard, "bob": losses_bob_hard,
                "alice_easy": losses_alice_easy, "bob_easy": losses_bob_easy,
                "gen_a": gen_a_report, "gen_b": gen_b_report,
            },
            counters=counters,
        )

    def run_dr_round(self, round_index: int) -> RoundLog:
        counters: dict = {}
        goal = sample_goal(self.proposal_space, self.streams["gen_a"])
        res = self._rollout(self.bob, goal, counters)
        losses = self._train(self.bob, res.steps, counters)
        return RoundLog(
            round_index=round_index,
            method="domain_randomization",
            goals={"g": goal},
            returns={"bob": self._ret(res)},
            successes={"bob": res.success},
            losses={"bob": losses},
            counters=counters,
        )

    def run_paired_single_round(self, round_index: int) -> RoundLog:
        counters: dict = {}
        _, s0 = self.env.reset(self.streams["env"])
        goal, z, u = self.gen_a.propose(s0)

        res_a = self._rollout(self.alice, goal, counters)
        res_b = self._rollout(self.bob, goal, counters)
        losses_alice = self._train(self.alice, res_a.steps, counters)
        losses_bob = self._train(self.bob, res_b.steps, counters)

        regret = self._ret(res_a) - self._ret(res_b)
        gen_report = self._generator_phase(
            self.gen_a, [(s0, z, u, goal, regret)], round_index,
            self._value_fn(self.alice), self._value_fn(self.bob), counters,
        )
        return RoundLog(
            round_index=round_index,
            method=self.spec.kind,
            goals={"g": goal},
            returns={"alice": self._ret(res_a), "bob": self._ret(res_b)},
            successes={"alice": res_a.success, "bob": res_b.success},
            gen_rewards={"g": {"gen_a": regret}},
            losses={"alice": losses_alice, "bob": losses_bob, "gen_a": gen_report},
            counters=counters,
        )

    def run_single_learner_round(self, round_index: int) -> RoundLog:
        counters: dict = {}
        _, s0 = self.env.reset(self.streams["env"])
        goal, z, u = self.gen_a.propose(s0)

        res_1 = self._rollout(self.bob, goal, counters)
        res_2 = self._rollout(self.bob, goal, counters)
        losses = self._train(self.bob, res_1.steps + res_2.steps, counters)

        regret = self._ret(res_1) - self._ret(res_2)
        gen_report = self._generator_phase(
            self.gen_a, [(s0, z, u, goal, regret)], round_index,
            None, None, counters,
        )
        return RoundLog(
            round_index=round_index,
            method="single_learner",
            goals={"g": goal},
            returns={"rollout_1": self._ret(res_1), "rollout_2": self._ret(res_2)},
            successes={"rollout_1": res_1.success, "rollout_2": res_2.success},
            gen_rewards={"g": {"gen_a": regret}},
            losses={"bob": losses, "gen_a": gen_report},
            counters=counters,
        )

    def run_asp_round(self, round_index: int, variant: str) -> RoundLog:
        """Alice explores freely (null goal, full-length episode); her final
        position becomes Bob's goal. Alice's reward arrives terminally."""
        counters: dict = {}
        env = self.env
        mode = "stochastic" if self.stochastic_rollouts else "deterministic"

        state, obs = env.reset(self.streams["env"])
        episode: list[Transition] = []
        for _ in range(env.episode_length):
            action = self.alice.act(obs, self.null_goal, mode=mode)
            new_state, next_obs, _, _, _ = env.step(state, action, self.null_goal, self.reward_spec)
            episode.append(Transition(obs, action, 0.0, next_obs, False, self.null_goal.copy()))
            state, obs = new_state, next_obs
        # The terminal reward is real for the explorer, so her last step is a
        # true terminal, not a truncation.
        episode[-1].done = True
        counters["rollouts"] = counters.get("rollouts", 0) + 1
        counters["env_steps"] = counters.get("env_steps", 0) + len(episode)

        goal_pos = np.clip(state.position.copy(), -env.half_extent, env.half_extent)
        goal = np.zeros(self.goal_dim)
        goal[:2] = goal_pos

        res_b = self._rollout(self.bob, goal, counters)
        if variant == "sparse":
            alice_reward = 0.0 if res_b.success else 1.0
        else:
            alice_reward = -self._ret(res_b)
        episode[-1].reward = alice_reward
        for t in episode:
            self.alice.add_transition(t)

        losses_alice = self._train(self.alice, len(episode), counters)
        losses_bob = self._train(self.bob, res_b.steps, counters)

        return RoundLog(
            round_index=round_index,
            method=self.spec.kind,
            goals={"g": goal},
            returns={"alice_terminal": alice_reward, "bob": self._ret(res_b)},
            successes={"bob": res_b.success},
            losses={"alice": losses_alice, "bob": losses_bob},
            counters=counters,
        )

    # -- evaluation helpers ---------------------------------------------------

    def eval_specs(self) -> list[evalharness.EvalSpec]:
        cfg = self.cfg
        names = [s.strip() for s in str(cfg.get("eval", "sets")).split(",") if s.strip()]
        extra = 1 if cfg.misspecified else 0
        specs = []
        for name in names:
            if name == "gid":
                specs.append(evalharness.EvalSpec(
                    name="gid", goal_space=cfg.gid_space(),
                    n_episodes=int(cfg.get("eval", "gid_episodes")), extra_goal_dims=extra))
            elif name == "ood":
                exclude = cfg.gid_space() if cfg.get("eval", "ood_exclude_gid") else None
                specs.append(evalharness.EvalSpec(
                    name="ood", goal_space=cfg.ood_space(),
                    n_episodes=int(cfg.get("eval", "ood_episodes")), extra_goal_dims=extra,
                    exclude_space=exclude))
            elif name == "behind_obstacles":
                specs.append(evalharness.behind_obstacles_spec(
                    n_episodes=int(cfg.get("eval", "skill_episodes")), extra_goal_dims=extra))
            else:
                raise ValueError(f"eval.sets: unknown goal set {name!r}")
        return specs

    def evaluate_bob(self, round_index: int) -> list[dict]:
        records = []
        for spec in self.eval_specs():
            rng = substream(self.cfg.seed, "eval", round_index)
            result = evalharness.evaluate(self.bob, spec, self.env, self.reward_spec, rng)
            records.append(result.to_record(round_index))
        return records

    def checkpoint_params(self) -> dict:
        named: dict = {}
        if self.alice is not None:
            named.update(self.alice.named_params("alice"))
        named.update(self.bob.named_params("bob"))
        if self.gen_a is not None:
            named.update(self.gen_a.named_params("gen_a"))
        if self.gen_b is not None:
            named.update(self.gen_b.named_params("gen_b"))
        return named


def train(cfg: RunConfig, out_dir: str | None = None, progress=None) -> str:
    """Run a full training budget and write all artifacts under
    <out>/run-<seed>/. Returns the run directory path."""
    base = out_dir if out_dir is not None else cfg.require_out()
    run_dir = os.path.join(base, f"run-{cfg.seed}")
    os.makedirs(run_dir, exist_ok=True)
    os.makedirs(os.path.join(run_dir, "snapshots"), exist_ok=True)
    os.makedirs(os.path.join(run_dir, "checkpoints"), exist_ok=True)

    orch = Orchestrator(cfg)

    # The dumped config omits the output path so that identical runs produce
    # identical artifacts regardless of where they are written.
    saved_out = cfg.values["run"]["out"]
    cfg.values["run"]["out"] = ""
    try:
        with open(os.path.join(run_dir, "config.ini"), "w") as f:
            f.write(cfg.to_ini_text())
    finally:
        cfg.values["run"]["out"] = saved_out
    run_meta = {
        "schema_version": SCHEMA_VERSION,
        "method": orch.spec.kind,
        "seed": cfg.seed,
        "rounds": cfg.rounds,
        "goal_dim": cfg.goal_dim,
        "misspecified_dim": cfg.misspecified,
        "env": orch.env.layout_metadata(),
        "goal_spaces": {
            "proposal": {"low": orch.proposal_space.low.tolist(),
                          "high": orch.proposal_space.high.tolist()},
            "gid": {"low": cfg.gid_space().low.tolist(), "high": cfg.gid_space().high.tolist()},
            "ood": {"low": cfg.ood_space().low.tolist(), "high": cfg.ood_space().high.tolist()},
        },
    }
    with open(os.path.join(run_dir, "run.json"), "w") as f:
        json.dump(run_meta, f, indent=2, sort_keys=True)
        f.write("\n")

    metrics_path = os.path.join(run_dir, "metrics.jsonl")
    evals_path = os.path.join(run_dir, "evals.jsonl")
    with open(metrics_path, "w") as metrics_f, open(evals_path, "w") as evals_f:
        def write_evals(round_index: int):
            for record in orch.evaluate_bob(round_index):
                evals_f.write(json.dumps(record) + "\n")

        write_evals(0)
        for r in range(1, cfg.rounds + 1):
            log = orch.run_round(r)
            metrics_f.write(json.dumps(log.to_record()) + "\n")
            if r % cfg.eval_every == 0:
                write_evals(r)
            if orch.gen_a is not None and cfg.snapshot_every > 0 and r % cfg.snapshot_every == 0:
                evalharness.write_goal_snapshot(
                    os.path.join(run_dir, "snapshots", f"gen_a_round{r:06d}.csv"),
                    orch.gen_a.buffer, r)
                if orch.gen_b is not None:
                    evalharness.write_goal_snapshot(
                        os.path.join(run_dir, "snapshots", f"gen_b_round{r:06d}.csv"),
                        orch.gen_b.buffer, r)
            if progress is not None:
                progress(r, log)

    save_params(os.path.join(run_dir, "checkpoints", "final.ckpt"), orch.checkpoint_params())
    return run_dir
