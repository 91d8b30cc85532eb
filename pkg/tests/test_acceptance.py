"""Acceptance gate: one test per criterion, each ending in a printed
PASS/FAIL line (also collected into the terminal summary).

The training-based criteria share one session fixture that executes every
required run through the CLI in subprocesses (two at a time, single-threaded
BLAS each). Budgets: 1000 rounds per training run, 5000 steps per bench run.
Env knobs for local iteration only: ACCEPTANCE_ROUNDS, ACCEPTANCE_SEEDS.
"""

import json
import os
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from conftest import record_acceptance

SEEDS = tuple(int(s) for s in os.environ.get("ACCEPTANCE_SEEDS", "0,1,2").split(","))
ROUNDS = int(os.environ.get("ACCEPTANCE_ROUNDS", "1000"))
BENCH_STEPS = int(os.environ.get("ACCEPTANCE_BENCH_STEPS", "5000"))

_SUBPROC_ENV = dict(os.environ)
_SUBPROC_ENV.update({
    "OPENBLAS_NUM_THREADS": "1",
    "OMP_NUM_THREADS": "1",
    "MKL_NUM_THREADS": "1",
})


def _run_cli(args: list[str]) -> float:
    t0 = time.time()
    proc = subprocess.run(
        [sys.executable, "-m", "cusplab.cli", *args],
        env=_SUBPROC_ENV,
        capture_output=True,
        text=True,
        timeout=4 * 3600,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"cli {' '.join(args)} failed:\n{proc.stdout}\n{proc.stderr}")
    return time.time() - t0


def _parallel(jobs: list[list[str]]) -> dict[int, float]:
    times: dict[int, float] = {}
    with ThreadPoolExecutor(max_workers=2) as pool:
        futures = {pool.submit(_run_cli, job): i for i, job in enumerate(jobs)}
        for fut, i in futures.items():
            times[i] = fut.result()
    return times


def _load_evals(run_dir: str) -> list[dict]:
    path = os.path.join(run_dir, "evals.jsonl")
    with open(path) as f:
        return [json.loads(line) for line in f]


def _rates(evals: list[dict], goal_set: str, include_round0: bool = True) -> list[float]:
    return [e["success_rate"] for e in evals
            if e["goal_set"] == goal_set and (include_round0 or e["round"] > 0)]


def _best_gid(run_dir: str) -> float:
    return max(_rates(_load_evals(run_dir), "gid"))


# ---------------------------------------------------------------------------
# Session fixtures: all heavy runs


@pytest.fixture(scope="session")
def training_runs(tmp_path_factory):
    base = os.environ.get("ACCEPTANCE_RUNS_DIR") or str(tmp_path_factory.mktemp("accept_runs"))
    variants = {
        "cusp": ["--method", "cusp"],
        "cusp_misspec": ["--method", "cusp"],
        "paired": ["--method", "paired_single", "--ablate", "no_buffer,alpha_zero,beta=1"],
        "dr": ["--method", "domain_randomization"],
        "dr_misspec": ["--method", "domain_randomization"],
    }
    jobs = []
    meta = []
    for name, extra in variants.items():
        for seed in SEEDS:
            out = os.path.join(base, name)
            run_dir = os.path.join(out, f"run-{seed}")
            meta.append((name, seed, run_dir))
            if os.path.exists(os.path.join(run_dir, "evals.jsonl")):
                continue  # pre-existing artifacts (ACCEPTANCE_RUNS_DIR reuse)
            cli = ["train", *extra, "--rounds", str(ROUNDS), "--eval-every", "100",
                   "--seed", str(seed), "--out", out]
            jobs.append((name, cli))
    ordered = sorted(jobs, key=lambda j: 0 if j[0].startswith("cusp") else 1)
    env_misspec = dict(_SUBPROC_ENV, CUSPLAB_ENV_MISSPECIFIED_DIM="true")

    def run_one(name_cli):
        name, cli = name_cli
        env = env_misspec if name.endswith("_misspec") else _SUBPROC_ENV
        proc = subprocess.run([sys.executable, "-m", "cusplab.cli", *cli],
                              env=env, capture_output=True, text=True, timeout=4 * 3600)
        if proc.returncode != 0:
            raise RuntimeError(f"{name} failed:\n{proc.stdout}\n{proc.stderr}")

    t0 = time.time()
    with ThreadPoolExecutor(max_workers=2) as pool:
        list(pool.map(run_one, ordered))
    elapsed = time.time() - t0

    runs: dict[str, dict[int, str]] = {}
    for name, seed, run_dir in meta:
        runs.setdefault(name, {})[seed] = run_dir
    runs["_elapsed"] = elapsed
    return runs


@pytest.fixture(scope="session")
def bench_runs(tmp_path_factory):
    base = os.environ.get("ACCEPTANCE_BENCH_DIR") or str(tmp_path_factory.mktemp("accept_bench"))
    jobs = []
    for seed in SEEDS:
        jobs.append(["bench-landscape", "--variant", "stationary", "--optimizer", "sac",
                     "--steps", str(BENCH_STEPS), "--seed", str(seed), "--out", base])
        jobs.append(["bench-landscape", "--variant", "nonstationary", "--optimizer", "sac",
                     "--steps", str(BENCH_STEPS), "--seed", str(seed), "--out", base])
        jobs.append(["bench-landscape", "--variant", "nonstationary", "--optimizer", "sac_refresh",
                     "--steps", str(BENCH_STEPS), "--seed", str(seed), "--out", base])
    jobs.append(["bench-landscape", "--variant", "stationary", "--optimizer", "adam",
                 "--steps", str(BENCH_STEPS), "--seed", str(SEEDS[0]), "--out", base])
    todo = []
    for job in jobs:
        stem = f"{job[4]}_{job[2]}_seed{job[job.index('--seed') + 1]}"
        if not os.path.exists(os.path.join(base, stem + ".json")):
            todo.append(job)
    times = _parallel(todo) if todo else {}
    per_seed_max = max(times.values()) if times else 0.0
    return {"dir": base, "max_job_seconds": per_seed_max}


def _bench_summary(bench, optimizer, variant, seed):
    path = os.path.join(bench["dir"], f"{optimizer}_{variant}_seed{seed}.json")
    with open(path) as f:
        return json.load(f)


# ---------------------------------------------------------------------------
# A1 / A2: toy landscape benches


def test_A1_stationary_landscape(bench_runs):
    fracs = [_bench_summary(bench_runs, "sac", "stationary", s)["fraction_final500_within_0.1"]
             for s in SEEDS]
    adam = _bench_summary(bench_runs, "adam", "stationary", SEEDS[0])
    ok = all(f >= 0.5 for f in fracs) and adam["fraction_final500_within_0.1"] == 0.0
    runtime_ok = bench_runs["max_job_seconds"] < 300 if bench_runs["max_job_seconds"] else True
    detail = (f"sac frac within 0.1 per seed {[round(f, 3) for f in fracs]} (need >= 0.5); "
              f"adam frac {adam['fraction_final500_within_0.1']} (need 0); "
              f"max bench job {bench_runs['max_job_seconds']:.0f}s (< 300s)")
    record_acceptance("A1", "PASS" if ok and runtime_ok else "FAIL", detail)
    print(f"A1 {'PASS' if ok and runtime_ok else 'FAIL'}: {detail}")
    assert ok and runtime_ok


def test_A2_nonstationary_landscape(bench_runs):
    pairs = []
    for s in SEEDS:
        plain = _bench_summary(bench_runs, "sac", "nonstationary", s)
        refresh = _bench_summary(bench_runs, "sac_refresh", "nonstationary", s)
        pairs.append((plain["mean_final100_distance_to_center"],
                      refresh["mean_final100_distance_to_center"]))
    strictly_better = all(r < p for p, r in pairs)
    under_bound = all(r < 0.15 for _, r in pairs)
    ok = strictly_better and under_bound
    detail = ("(plain, refresh) mean final-100 distance per seed "
              f"{[(round(p, 3), round(r, 3)) for p, r in pairs]}; refresh strictly better "
              f"{strictly_better}; refresh < 0.15 {under_bound}")
    record_acceptance("A2", "PASS" if ok else "FAIL", detail)
    print(f"A2 {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok


# ---------------------------------------------------------------------------
# A3: zero-sum and degeneracy invariants


def test_A3_zero_sum_and_degeneracy():
    from cusplab.config import load_config
    from cusplab.game import Orchestrator

    overrides = {
        ("run", "method"): "cusp", ("run", "seed"): 9,
        ("env", "episode_length"): 60,
        ("learner", "hidden"): "24,24", ("learner", "batch_size"): 32,
        ("generator", "hidden"): "24,24", ("generator", "batch_size"): 32,
        ("generator", "updates_per_round"): 5,
    }
    orch = Orchestrator(load_config(None, overrides))
    zero_sum = True
    for r in range(1, 101):
        log = orch.run_round(r)
        for tag in ("g_a", "g_b"):
            if log.gen_rewards[tag]["gen_a"] + log.gen_rewards[tag]["gen_b"] != 0.0:
                zero_sum = False

    overrides.update({
        ("game", "stochastic_rollouts"): False,
        ("learner", "updates_per_step"): 0.0,
        ("env", "corridor_start_prob"): 0.0,
    })
    orch2 = Orchestrator(load_config(None, overrides))
    orch2.bob.clone_parameters_from(orch2.alice)
    degenerate_zero = True
    for r in range(1, 11):
        log = orch2.run_round(r)
        for tag in ("g_a", "g_b"):
            if log.gen_rewards[tag]["gen_a"] != 0.0 or log.gen_rewards[tag]["gen_b"] != 0.0:
                degenerate_zero = False

    ok = zero_sum and degenerate_zero
    detail = (f"100 rounds zero-sum exact: {zero_sum}; cloned learners, deterministic "
              f"rollouts, all regrets exactly 0: {degenerate_zero}")
    record_acceptance("A3", "PASS" if ok else "FAIL", detail)
    print(f"A3 {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok


# ---------------------------------------------------------------------------
# A4: gradient suite


def test_A4_gradient_suite():
    from cusplab.nets import Mlp, log_prob_of_action

    def fd_grads(net, x, h=1e-5):
        grads = []
        for p in net.params:
            g = np.zeros_like(p)
            flat, gflat = p.reshape(-1), g.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                hi = net.forward(x).sum()
                flat[i] = orig - h
                lo = net.forward(x).sum()
                flat[i] = orig
                gflat[i] = (hi - lo) / (2.0 * h)
            grads.append(g)
        return grads

    checked = 0
    seed = 0
    worst = 0.0
    while checked < 50:
        seed += 1
        rng = np.random.default_rng(seed)
        depth = int(rng.integers(1, 3))
        dims = [int(rng.integers(1, 17)) for _ in range(depth + 1)]
        net = Mlp(dims, rng)
        x = rng.standard_normal(dims[0])
        net.forward(x, record=True)
        _, pres, _ = net._tape
        if len(pres) > 1 and any(np.min(np.abs(p)) < 1e-3 for p in pres[:-1]):
            continue  # finite differences are invalid across a rectifier kink
        analytic, _ = net.backward(np.ones(dims[-1]))
        fd = fd_grads(net, x)
        for a, f in zip(analytic, fd):
            err = np.abs(a - f) / np.maximum(np.abs(f), 1e-6)
            worst = max(worst, float(err.max()))
        checked += 1
    grad_ok = worst < 1e-4

    rng = np.random.default_rng(123)
    low, high = np.array([-0.25]), np.array([0.25])
    mean, log_std = np.array([0.4]), np.array([-0.7])
    a = rng.uniform(low[0], high[0], size=(1_000_000, 1))
    integral = float((high[0] - low[0]) * np.exp(log_prob_of_action(a, mean, log_std, low, high)).mean())
    density_ok = abs(integral - 1.0) <= 0.02

    ok = grad_ok and density_ok
    detail = (f"50 nets max FD relative error {worst:.2e} (< 1e-4): {grad_ok}; "
              f"1-D squashed density integral {integral:.4f} (1 +- 0.02): {density_ok}")
    record_acceptance("A4", "PASS" if ok else "FAIL", detail)
    print(f"A4 {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok


# ---------------------------------------------------------------------------
# A5 / A6 / A9: point-mass training criteria


def test_A5_point_mass_training(training_runs):
    best = {s: _best_gid(training_runs["cusp"][s]) for s in SEEDS}
    passing = sum(1 for v in best.values() if v >= 0.7)
    ok = passing >= 2
    detail = (f"best uniform-goal success within {ROUNDS} rounds per seed "
              f"{ {s: round(v, 2) for s, v in best.items()} } (need >= 0.7 for 2/{len(SEEDS)}); "
              f"all runs took {training_runs['_elapsed']/60:.0f} min total on 2 workers")
    record_acceptance("A5", "PASS" if ok else "FAIL", detail)
    print(f"A5 {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok


def test_A6_skill_goals_comparative(training_runs):
    def mean_behind(name):
        vals = []
        for s in SEEDS:
            rates = _rates(_load_evals(training_runs[name][s]),
                           "behind_obstacles", include_round0=False)
            assert rates, f"{name} run-{s} has no post-round-0 evaluations"
            vals.append(float(np.mean(rates)))
        return float(np.mean(vals)), vals

    cusp_mean, cusp_per = mean_behind("cusp")
    paired_mean, paired_per = mean_behind("paired")
    ok = cusp_mean >= paired_mean
    detail = (f"mean walled-pocket success over evals, {len(SEEDS)}-seed mean: "
              f"cusp {cusp_mean:.3f} {[round(v, 2) for v in cusp_per]} vs "
              f"paired-style ablation {paired_mean:.3f} {[round(v, 2) for v in paired_per]}")
    record_acceptance("A6", "PASS" if ok else "FAIL", detail)
    print(f"A6 {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok


def test_A9_misspecified_dimension(training_runs):
    best_mis = {s: _best_gid(training_runs["cusp_misspec"][s]) for s in SEEDS}
    passing = sum(1 for v in best_mis.values() if v >= 0.5)
    threshold_ok = passing >= 2

    def mean_best(name):
        return float(np.mean([_best_gid(training_runs[name][s]) for s in SEEDS]))

    cusp_drop = mean_best("cusp") - mean_best("cusp_misspec")
    dr_drop = mean_best("dr") - mean_best("dr_misspec")
    drop_ok = cusp_drop <= dr_drop
    ok = threshold_ok and drop_ok
    detail = (f"misspecified-dim best success per seed "
              f"{ {s: round(v, 2) for s, v in best_mis.items()} } (need >= 0.5 for 2/{len(SEEDS)}): "
              f"{threshold_ok}; drops (3-seed mean best): cusp {cusp_drop:+.3f} vs "
              f"dr {dr_drop:+.3f}, cusp <= dr: {drop_ok}")
    record_acceptance("A9", "PASS" if ok else "FAIL", detail)
    print(f"A9 {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok


# ---------------------------------------------------------------------------
# A7: refresh rule unit contract


def test_A7_refresh_rule_contract():
    from cusplab.goalgen import GeneratorBuffer, refresh_regrets

    def buffer_bytes(buf):
        return b"".join(arr[: buf.size].tobytes()
                        for arr in (buf.s0, buf.z, buf.pre_squash, buf.goal,
                                    buf.regret, buf.round_proposed, buf.round_refreshed))

    rng = np.random.default_rng(5)
    buf = GeneratorBuffer(capacity=16, obs_dim=2, noise_dim=2, goal_dim=2)
    for i in range(8):
        buf.add(rng.standard_normal(2), rng.standard_normal(2), rng.standard_normal(2),
                rng.uniform(-0.25, 0.25, 2), float(rng.standard_normal()), i)

    old = buf.regret[:8].copy()
    vf_self = lambda s, g: np.full(len(g), 0.25)
    vf_other = lambda s, g: np.full(len(g), -0.25)
    refresh_regrets(buf, vf_self, vf_other, current_round=10, start_round=0, beta=0.3)
    blend_ok = bool(np.all(buf.regret[:8] == 0.3 * old + 0.7 * 0.5))

    before = buffer_bytes(buf)
    refresh_regrets(buf, vf_self, vf_other, current_round=11, start_round=0, beta=1.0)
    beta1_ok = buffer_bytes(buf) == before
    refresh_regrets(buf, vf_self, vf_other, current_round=3, start_round=5, beta=0.0)
    pre_t_ok = buffer_bytes(buf) == before

    ok = blend_ok and beta1_ok and pre_t_ok
    detail = (f"exact blend beta*old + (1-beta)*new: {blend_ok}; beta=1 bitwise no-op: "
              f"{beta1_ok}; pre-start-round bitwise no-op: {pre_t_ok}")
    record_acceptance("A7", "PASS" if ok else "FAIL", detail)
    print(f"A7 {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok


# ---------------------------------------------------------------------------
# A8: hindsight relabel correctness


def test_A8_her_relabel_correctness():
    from cusplab.envs import PointMassWorld, RewardSpec
    from cusplab.learner import Transition, her_relabel

    world = PointMassWorld(corridor_start_prob=0.0)
    rng = np.random.default_rng(0)
    state, obs = world.reset(np.random.default_rng(1))
    goal = np.array([0.2, -0.1])
    all_ok = True
    for kind in ("dense", "sparse"):
        spec = RewardSpec(kind=kind, epsilon=0.05)
        episode = []
        o = obs
        st = state
        for _ in range(25):
            a = rng.uniform(-1, 1, 2)
            st, nxt, r, done, _ = world.step(st, a, goal, spec)
            episode.append(Transition(o, a, r, nxt, done, goal.copy()))
            o = nxt
        for strat, k in (("final", 1), ("future", 3)):
            for t in her_relabel(episode, strat, k, spec, rng=np.random.default_rng(2)):
                d = float(np.linalg.norm(t.next_obs[:2] - t.goal[:2]))
                expected = -d if kind == "dense" else float(d < 0.05)
                if t.reward != pytest.approx(expected, abs=1e-12):
                    all_ok = False
        final = her_relabel(episode, "final", 1, spec)[-1]
        if kind == "dense" and (final.reward != pytest.approx(0.0, abs=1e-12) or not final.done):
            all_ok = False

    detail = ("every relabeled reward equals the reward function at (next obs, new goal); "
              "final-state relabel of the last transition gives dense reward 0 and done")
    record_acceptance("A8", "PASS" if all_ok else "FAIL", detail)
    print(f"A8 {'PASS' if all_ok else 'FAIL'}: {detail}")
    assert all_ok


# ---------------------------------------------------------------------------
# A10: determinism


def test_A10_bitwise_determinism(tmp_path):
    env = dict(_SUBPROC_ENV,
               CUSPLAB_LEARNER_HIDDEN="16,16", CUSPLAB_LEARNER_BATCH_SIZE="16",
               CUSPLAB_GENERATOR_HIDDEN="16,16", CUSPLAB_GENERATOR_BATCH_SIZE="16",
               CUSPLAB_GENERATOR_UPDATES_PER_ROUND="3",
               CUSPLAB_ENV_EPISODE_LENGTH="40",
               CUSPLAB_EVAL_GID_EPISODES="4", CUSPLAB_EVAL_OOD_EPISODES="4",
               CUSPLAB_EVAL_SKILL_EPISODES="4", CUSPLAB_RUN_SNAPSHOT_EVERY="4")

    def train_into(sub):
        out = tmp_path / sub
        proc = subprocess.run(
            [sys.executable, "-m", "cusplab.cli", "train", "--method", "cusp",
             "--rounds", "8", "--eval-every", "4", "--seed", "3", "--out", str(out)],
            env=env, capture_output=True, text=True, timeout=1200)
        assert proc.returncode == 0, proc.stderr
        return out / "run-3"

    a = train_into("a")
    b = train_into("b")
    same = True
    compared = []
    for name in ("metrics.jsonl", "evals.jsonl", "config.ini", "run.json",
                 os.path.join("checkpoints", "final.ckpt"),
                 os.path.join("snapshots", "gen_a_round000008.csv")):
        same &= (a / name).read_bytes() == (b / name).read_bytes()
        compared.append(name)

    for sub in ("bx", "by"):
        _run_cli(["bench-landscape", "--variant", "stationary", "--optimizer", "sac",
                  "--steps", "60", "--seed", "4", "--out", str(tmp_path / sub)])
    same &= ((tmp_path / "bx" / "sac_stationary_seed4.csv").read_bytes()
             == (tmp_path / "by" / "sac_stationary_seed4.csv").read_bytes())
    compared.append("bench sac CSV")

    detail = f"re-ran train and bench with fixed seeds; byte-identical: {compared}"
    record_acceptance("A10", "PASS" if same else "FAIL", detail)
    print(f"A10 {'PASS' if same else 'FAIL'}: {detail}")
    assert same
