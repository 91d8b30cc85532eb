"""Anatomy of one curriculum self-play round, narrated.

Four players: goal-conditioned learners Alice and Bob, and one-step goal
generators, one friendly to each learner. Each round:

  1. both generators propose a goal from (initial observation ++ noise)
  2. easy rollouts first: Alice on her friendly goal, Bob on his
  3. both learners take one gradient step per collected env step
  4. hard rollouts: each learner gets the other generator's goal
  5. learners update again
  6. each generator stores (goal, regret) for BOTH goals and runs its
     one-step SAC updates; the two generators' rewards per goal sum to zero

Run:  python3 demos/demo_curriculum_round.py [--rounds 30]
"""

import argparse

from cusplab.config import load_config
from cusplab.game import Orchestrator


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rounds", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = load_config(None, {
        ("run", "method"): "cusp",
        ("run", "seed"): args.seed,
        ("env", "episode_length"): 100,
        ("generator", "updates_per_round"): 20,
    })
    orch = Orchestrator(cfg)

    log = orch.run_round(1)
    print("round 1:")
    print(f"  proposals: g_a=({log.goals['g_a'][0]:+.3f},{log.goals['g_a'][1]:+.3f}) "
          f"g_b=({log.goals['g_b'][0]:+.3f},{log.goals['g_b'][1]:+.3f})")
    r = log.returns
    print(f"  returns: Alice easy {r['a_easy']:7.2f} | Bob easy {r['b_easy']:7.2f} | "
          f"Alice hard {r['a_hard']:7.2f} | Bob hard {r['b_hard']:7.2f}")
    for tag in ("g_a", "g_b"):
        pair = log.gen_rewards[tag]
        print(f"  regret tuple for {tag}: gen_a {pair['gen_a']:+.3f}, "
              f"gen_b {pair['gen_b']:+.3f} (sum {pair['gen_a'] + pair['gen_b']:+.1f})")
    print(f"  counters: {log.counters}")

    print(f"\nrunning {args.rounds - 1} more rounds ...")
    for i in range(2, args.rounds + 1):
        log = orch.run_round(i)
    evals = orch.evaluate_bob(args.rounds)
    for rec in evals:
        print(f"  round {args.rounds}: {rec['goal_set']:16s} "
              f"success {rec['success_rate']:.2f} over {rec['n_episodes']} episodes")
    print(f"  generator buffers now hold {orch.gen_a.buffer.size} proposals each")


if __name__ == "__main__":
    main()
