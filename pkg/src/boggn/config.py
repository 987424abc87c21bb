"""Run configuration files: flat INI sections with strict key checking."""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

from .blackbox import BENCHMARKS
from .laplace import TrainConfig
from .optimizer import SuggestStrategy, default_n_init

__all__ = ["ConfigError", "RunConfig", "parse_config", "DEFAULT_CONFIG"]


class ConfigError(ValueError):
    """Invalid configuration; the message carries the offending line number."""


# section -> key -> converter
_SCHEMA = {
    "run": {
        "benchmark": str,
        "budget": int,
        "n_init": int,
        "replications": int,
        "seed_base": int,
        "output_dir": str,
        "noise_sigma": float,
        "workers": int,
    },
    "strategy": {
        "kind": str,
        "gamma": float,
        "epsilon": float,
        "pool_size": int,
        "refine_steps": int,
        "mc_samples": int,
    },
    "model": {
        "hidden_widths": lambda s: tuple(int(v) for v in s.split(",") if v.strip()),
        "activation": str,
        "prior_precision": float,
    },
    "train": {
        "learning_rate": float,
        "batch_size": int,
        "max_epochs": int,
        "adam_beta1": float,
        "adam_beta2": float,
        "adam_eps": float,
        "warm_start": "bool",
    },
}

_REQUIRED = {("run", "benchmark"), ("run", "budget")}

DEFAULT_CONFIG = """\
[run]
benchmark = branin
budget = 100
replications = 20
seed_base = 0
output_dir = results/branin-boggn

[strategy]
kind = boggn
gamma = 0.3333333333333333
epsilon = 0.1
pool_size = 2000
refine_steps = 20
mc_samples = 64

[model]
hidden_widths = 32, 32
activation = relu
prior_precision = 0.01

[train]
learning_rate = 0.01
batch_size = 32
max_epochs = 200
warm_start = true
"""


@dataclass(frozen=True)
class RunConfig:
    benchmark: str
    strategy: SuggestStrategy
    budget: int
    n_init: int
    replications: int = 1
    seed_base: int = 0
    output_dir: str = "results"
    noise_sigma: float = 0.0
    workers: int = 1
    source_text: str = field(default="", repr=False, compare=False)

    @property
    def seeds(self) -> list:
        return list(range(self.seed_base, self.seed_base + self.replications))


def _line_numbers(text):
    """Map (section, key) and section names to 1-based line numbers."""
    where = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        m = re.match(r"^\[([^\]]+)\]$", stripped)
        if m:
            section = m.group(1).strip()
            where.setdefault(section, lineno)
            continue
        m = re.match(r"^([^=:]+?)\s*[=:]", stripped)
        if m and section is not None:
            where.setdefault((section, m.group(1).strip().lower()), lineno)
    return where


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        prefix = f"line {lineno}: " if lineno else ""
        raise ConfigError(f"{prefix}{exc.message if hasattr(exc, 'message') else exc}") from None
    where = _line_numbers(text)

    def fail(msg, section, key=None):
        lineno = where.get((section, key)) if key else where.get(section)
        raise ConfigError(f"line {lineno}: {msg}" if lineno else msg)

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            fail(f"unknown section [{section}]; expected one of {sorted(_SCHEMA)}", section)
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                fail(f"unknown key {key!r} in [{section}]; expected one of "
                     f"{sorted(_SCHEMA[section])}", section, key)
            conv = _SCHEMA[section][key]
            try:
                if conv == "bool":
                    value = parser.getboolean(section, key)
                else:
                    value = conv(raw.strip())
            except ValueError:
                fail(f"invalid value {raw!r} for {key}", section, key)
            values[(section, key)] = value
    for section, key in sorted(_REQUIRED):
        if (section, key) not in values:
            raise ConfigError(f"missing required key {key!r} in [{section}]")

    get = lambda s, k, default: values.get((s, k), default)  # noqa: E731

    bench = get("run", "benchmark", None)
    if bench not in BENCHMARKS:
        fail(f"unknown benchmark {bench!r}; available: {', '.join(sorted(BENCHMARKS))}",
             "run", "benchmark")

    defaults = TrainConfig()
    try:
        train = TrainConfig(
            learning_rate=get("train", "learning_rate", defaults.learning_rate),
            batch_size=get("train", "batch_size", defaults.batch_size),
            max_epochs=get("train", "max_epochs", defaults.max_epochs),
            adam_betas=(get("train", "adam_beta1", defaults.adam_betas[0]),
                        get("train", "adam_beta2", defaults.adam_betas[1])),
            adam_eps=get("train", "adam_eps", defaults.adam_eps),
            warm_start=get("train", "warm_start", defaults.warm_start),
        )
    except ValueError as exc:
        key = str(exc).split()[0]
        fail(str(exc), "train", key if ("train", key) in values else None)
    sdef = SuggestStrategy()
    try:
        strategy = SuggestStrategy(
            kind=get("strategy", "kind", sdef.kind),
            gamma=get("strategy", "gamma", sdef.gamma),
            epsilon=get("strategy", "epsilon", sdef.epsilon),
            pool_size=get("strategy", "pool_size", sdef.pool_size),
            refine_steps=get("strategy", "refine_steps", sdef.refine_steps),
            mc_samples=get("strategy", "mc_samples", sdef.mc_samples),
            prior_precision=get("model", "prior_precision", sdef.prior_precision),
            hidden_widths=get("model", "hidden_widths", sdef.hidden_widths),
            activation=get("model", "activation", sdef.activation),
            train=train,
        )
    except ValueError as exc:
        key = str(exc).split()[0]
        section = next((s for s in ("strategy", "model") if key in _SCHEMA[s]), "strategy")
        fail(str(exc), section, key if (section, key) in values else None)

    dim = BENCHMARKS[bench]().dim
    budget = get("run", "budget", None)
    n_init = get("run", "n_init", default_n_init(dim))
    if n_init < 2:
        fail("n_init must be at least 2", "run", "n_init")
    if budget <= n_init:
        fail(f"budget ({budget}) must exceed n_init ({n_init})", "run", "budget")
    replications = get("run", "replications", 1)
    if replications < 1:
        fail("replications must be at least 1", "run", "replications")
    noise = get("run", "noise_sigma", 0.0)
    if noise < 0:
        fail("noise_sigma must be nonnegative", "run", "noise_sigma")
    workers = get("run", "workers", 1)
    if workers < 1:
        fail("workers must be at least 1", "run", "workers")
    return RunConfig(
        benchmark=bench,
        strategy=strategy,
        budget=budget,
        n_init=n_init,
        replications=replications,
        seed_base=get("run", "seed_base", 0),
        output_dir=get("run", "output_dir", "results"),
        noise_sigma=noise,
        workers=workers,
        source_text=text,
    )
