"""Run configuration: a flat INI file with one section per module, plus
environment-variable and command-line overrides.

Precedence (lowest to highest): built-in defaults, config file, environment
variables (CUSPLAB_<SECTION>_<KEY>), command-line flags. The fully resolved
configuration is dumped into the run directory before anything else runs.
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field

from .envs import (
    GoalSpace,
    PointMassWorld,
    RewardSpec,
    POINT_MASS_GID,
    POINT_MASS_GOOD,
    append_misspecified_dim,
)
from .goalgen import GeneratorConfig
from .learner import SacConfig

SCHEMA_VERSION = 1

ENV_PREFIX = "CUSPLAB_"

METHODS = (
    "cusp",
    "domain_randomization",
    "paired_single",
    "single_learner",
    "asp_sparse",
    "asp_dense",
)


class ConfigError(ValueError):
    """Invalid or missing configuration; the message names the field."""


@dataclass
class MethodSpec:
    kind: str = "cusp"
    no_buffer: bool = False
    alpha_zero: bool = False
    no_symmetrize: bool = False
    beta: float | None = None
    refresh_start: int | None = None

    def __post_init__(self):
        if self.kind not in METHODS:
            raise ConfigError(f"run.method: unknown method {self.kind!r}; valid: {METHODS}")
        if self.beta is not None and not (0.0 <= self.beta <= 1.0):
            raise ConfigError("ablate.beta: must be in [0, 1]")

    @property
    def uses_generators(self) -> bool:
        return self.kind in ("cusp", "paired_single", "single_learner")


# Section -> key -> (type tag, default). Types: int, float, bool, str.
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "run": {
        "method": ("str", "cusp"),
        "seed": ("int", 0),
        "rounds": ("int", 1000),
        "eval_every": ("int", 100),
        "snapshot_every": ("int", 200),
        "out": ("str", ""),
        "paper_hparams": ("bool", False),
    },
    "ablate": {
        "no_buffer": ("bool", False),
        "alpha_zero": ("bool", False),
        "no_symmetrize": ("bool", False),
        "beta": ("str", ""),  # optional float
        "refresh_start": ("str", ""),  # optional int
    },
    "env": {
        "episode_length": ("int", 150),
        "corridor_start_prob": ("float", 0.1),
        "reward": ("str", "dense"),
        "epsilon": ("float", 0.05),
        "misspecified_dim": ("bool", False),
    },
    "learner": {
        "hidden": ("str", "64,64"),
        "batch_size": ("int", 128),
        "actor_lr": ("float", 1e-4),
        "critic_lr": ("float", 3e-4),
        "alpha_lr": ("float", 3e-4),
        "discount": ("float", 0.99),
        "tau": ("float", 0.005),
        "init_alpha": ("float", 0.1),
        "buffer_capacity": ("int", 1_000_000),
        "updates_per_step": ("float", 1.0),
        "use_her": ("bool", False),
        "her_strategy": ("str", "future"),
        "her_k": ("int", 4),
    },
    "generator": {
        "hidden": ("str", "64,64"),
        "batch_size": ("int", 128),
        "actor_lr": ("float", 3e-4),
        "critic_lr": ("float", 3e-4),
        "alpha_lr": ("float", 3e-4),
        "init_alpha": ("float", 0.1),
        "updates_per_round": ("int", 100),
        "buffer_capacity": ("int", 1_000_000),
        "refresh_start": ("int", 300),
        "refresh_beta": ("float", 0.1),
        "refresh_every": ("int", 1),
        "noise_dim": ("int", 2),
    },
    "eval": {
        "sets": ("str", "gid,ood,behind_obstacles"),
        "gid_episodes": ("int", 50),
        "ood_episodes": ("int", 50),
        "skill_episodes": ("int", 20),
        "ood_exclude_gid": ("bool", False),
    },
    "game": {
        "stochastic_rollouts": ("bool", True),
        "discounted_regret": ("bool", False),
    },
}

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _parse_value(section: str, key: str, kind: str, raw: str):
    where = f"{section}.{key}"
    raw = raw.strip()
    if kind == "str":
        return raw
    if kind == "bool":
        low = raw.lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ConfigError(f"{where}: expected a boolean, got {raw!r}")
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{where}: expected {kind}, got {raw!r}") from None
    raise AssertionError(kind)


def _parse_hidden(section: str, raw: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(p) for p in raw.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"{section}.hidden: expected comma-separated ints, got {raw!r}") from None
    if not dims or any(d <= 0 for d in dims):
        raise ConfigError(f"{section}.hidden: dims must be positive ints, got {raw!r}")
    return dims


@dataclass
class RunConfig:
    """Fully resolved configuration for one run."""

    values: dict[str, dict[str, object]] = field(default_factory=dict)

    # -- construction --------------------------------------------------------

    @classmethod
    def defaults(cls) -> "RunConfig":
        vals = {sec: {k: default for k, (_, default) in keys.items()} for sec, keys in _SCHEMA.items()}
        return cls(values=vals)

    def apply_ini(self, path: str) -> None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file {path!r} not found or unreadable")
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"unknown config key {section}.{key}")
                kind = _SCHEMA[section][key][0]
                self.values[section][key] = _parse_value(section, key, kind, raw)

    def apply_env(self, environ=None) -> None:
        environ = os.environ if environ is None else environ
        for name, raw in environ.items():
            if not name.startswith(ENV_PREFIX):
                continue
            rest = name[len(ENV_PREFIX):].lower()
            section, _, key = rest.partition("_")
            # section names are single words; keys may contain underscores
            if section not in _SCHEMA or key not in _SCHEMA[section]:
                raise ConfigError(f"environment override {name} does not name a known field")
            kind = _SCHEMA[section][key][0]
            self.values[section][key] = _parse_value(section, key, kind, raw)

    def set(self, section: str, key: str, value) -> None:
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown config key {section}.{key}")
        self.values[section][key] = value

    def get(self, section: str, key: str):
        return self.values[section][key]

    def finalize(self) -> None:
        """Apply the paper-hparams switch and validate cross-field rules."""
        if self.get("run", "paper_hparams"):
            for sec in ("learner", "generator"):
                self.values[sec]["hidden"] = "1024,1024"
                self.values[sec]["batch_size"] = 1024
                self.values[sec]["actor_lr"] = 1e-4
                self.values[sec]["critic_lr"] = 1e-4
                self.values[sec]["alpha_lr"] = 1e-4
            self.values["env"]["episode_length"] = 1000
        if self.get("run", "method") not in METHODS:
            raise ConfigError(
                f"run.method: unknown method {self.get('run', 'method')!r}; valid: {METHODS}"
            )
        if self.get("env", "reward") not in ("dense", "sparse"):
            raise ConfigError(f"env.reward: must be dense or sparse, got {self.get('env', 'reward')!r}")
        if self.get("run", "rounds") < 1:
            raise ConfigError("run.rounds: must be >= 1")
        if self.get("run", "eval_every") < 1:
            raise ConfigError("run.eval_every: must be >= 1")
        for sec in ("learner", "generator"):
            _parse_hidden(sec, str(self.get(sec, "hidden")))

    def require_out(self) -> str:
        out = str(self.get("run", "out")).strip()
        if not out:
            raise ConfigError("run.out: required (output directory for the run)")
        return out

    # -- derived objects ------------------------------------------------------

    @property
    def seed(self) -> int:
        return int(self.get("run", "seed"))

    @property
    def rounds(self) -> int:
        return int(self.get("run", "rounds"))

    @property
    def eval_every(self) -> int:
        return int(self.get("run", "eval_every"))

    @property
    def snapshot_every(self) -> int:
        return int(self.get("run", "snapshot_every"))

    @property
    def misspecified(self) -> bool:
        return bool(self.get("env", "misspecified_dim"))

    @property
    def goal_dim(self) -> int:
        return 3 if self.misspecified else 2

    def method_spec(self) -> MethodSpec:
        beta_raw = str(self.get("ablate", "beta")).strip()
        start_raw = str(self.get("ablate", "refresh_start")).strip()
        return MethodSpec(
            kind=str(self.get("run", "method")),
            no_buffer=bool(self.get("ablate", "no_buffer")),
            alpha_zero=bool(self.get("ablate", "alpha_zero")),
            no_symmetrize=bool(self.get("ablate", "no_symmetrize")),
            beta=float(beta_raw) if beta_raw else None,
            refresh_start=int(start_raw) if start_raw else None,
        )

    def make_env(self) -> PointMassWorld:
        return PointMassWorld(
            episode_length=int(self.get("env", "episode_length")),
            corridor_start_prob=float(self.get("env", "corridor_start_prob")),
        )

    def make_reward_spec(self) -> RewardSpec:
        return RewardSpec(
            kind=str(self.get("env", "reward")),
            epsilon=float(self.get("env", "epsilon")),
            feasible_dims=2 if self.misspecified else None,
        )

    def proposal_space(self) -> GoalSpace:
        return append_misspecified_dim(POINT_MASS_GID) if self.misspecified else POINT_MASS_GID

    def gid_space(self) -> GoalSpace:
        return POINT_MASS_GID

    def ood_space(self) -> GoalSpace:
        return POINT_MASS_GOOD

    def make_learner_cfg(self) -> SacConfig:
        sec = "learner"
        return SacConfig(
            discount=float(self.get(sec, "discount")),
            init_alpha=float(self.get(sec, "init_alpha")),
            alpha_lr=float(self.get(sec, "alpha_lr")),
            actor_lr=float(self.get(sec, "actor_lr")),
            critic_lr=float(self.get(sec, "critic_lr")),
            batch_size=int(self.get(sec, "batch_size")),
            tau=float(self.get(sec, "tau")),
            hidden=_parse_hidden(sec, str(self.get(sec, "hidden"))),
            buffer_capacity=int(self.get(sec, "buffer_capacity")),
        )

    def make_generator_cfg(self) -> GeneratorConfig:
        sec = "generator"
        spec = self.method_spec()
        beta = spec.beta if spec.beta is not None else float(self.get(sec, "refresh_beta"))
        start = spec.refresh_start if spec.refresh_start is not None else int(self.get(sec, "refresh_start"))
        if spec.kind == "single_learner" and spec.beta is None:
            beta = 1.0  # self-vs-self value difference is identically zero
        return GeneratorConfig(
            init_alpha=float(self.get(sec, "init_alpha")),
            alpha_lr=float(self.get(sec, "alpha_lr")),
            actor_lr=float(self.get(sec, "actor_lr")),
            critic_lr=float(self.get(sec, "critic_lr")),
            batch_size=int(self.get(sec, "batch_size")),
            updates_per_round=int(self.get(sec, "updates_per_round")),
            buffer_capacity=int(self.get(sec, "buffer_capacity")),
            refresh_start=start,
            refresh_beta=beta,
            refresh_every=int(self.get(sec, "refresh_every")),
            noise_dim=int(self.get(sec, "noise_dim")),
            hidden=_parse_hidden(sec, str(self.get(sec, "hidden"))),
            fixed_alpha=0.0 if spec.alpha_zero else None,
        )

    # -- serialization --------------------------------------------------------

    def to_ini_text(self) -> str:
        parser = configparser.ConfigParser()
        for section in _SCHEMA:
            parser.add_section(section)
            for key in _SCHEMA[section]:
                val = self.values[section][key]
                parser.set(section, key, str(val))
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def load_config(
    config_path: str | None = None,
    overrides: dict[tuple[str, str], object] | None = None,
    environ=None,
) -> RunConfig:
    cfg = RunConfig.defaults()
    if config_path:
        cfg.apply_ini(config_path)
    cfg.apply_env(environ)
    if overrides:
        for (section, key), value in overrides.items():
            cfg.set(section, key, value)
    cfg.finalize()
    return cfg
