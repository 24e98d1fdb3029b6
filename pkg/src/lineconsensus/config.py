"""Run configuration: defaults, TOML loading and dumping.

Schema (every table and key optional; unknown keys are rejected)::

    [metric]
    eval_cutoff = 5.0          # Dice-H cutoff for concordance
    in_game_cutoff = 10.0      # Dice-H cutoff for feedback / Qscores

    [consensus]
    merge_cutoff = 10.0
    majority_fraction = 0.5
    linkage = "complete"       # complete | single | average

    [selection]
    k = 5
    window = "all"             # or a positive integer
    min_training_opinions = 10

    [bootstrap]
    replicates = 10000
    alpha = 0.05
    seed = 0

    [evaluation]
    learning_curve_bin_width = 25

    [simulator]
    n_train_cases = 200
    n_test_cases = 200
    train_test_ratio = [1, 2]
    n_experts = 5
    n_crowd = 200
    opinions_per_crowd_user = 99.0
    master_seed = 2024

The environment variable ``LINECONSENSUS_SEED`` overrides the default
simulator ``master_seed`` (a seed given in the file still wins).
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field

from .consensus import ConsensusParams
from .metric import EVAL_CUTOFF, IN_GAME_CUTOFF, SimilarityParams
from .simulator import ContestConfig
from .stats import BootstrapConfig
from .validation import ValidationError, check_count

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SEED_ENV = "LINECONSENSUS_SEED"


@dataclass(frozen=True)
class SelectionConfig:
    k: int = 5
    window: int | str = "all"
    min_training_opinions: int = 10

    def __post_init__(self):
        check_count(self.k, "k")
        check_count(self.min_training_opinions, "min_training_opinions", minimum=0)
        if self.window != "all":
            check_count(self.window, "window")


def _default_contest():
    seed = os.environ.get(SEED_ENV)
    if seed is None:
        return ContestConfig()
    try:
        return ContestConfig(master_seed=int(seed))
    except ValueError:
        raise ValidationError(f"{SEED_ENV} must be an integer, got {seed!r}") from None


@dataclass(frozen=True)
class RunConfig:
    eval_cutoff: float = EVAL_CUTOFF
    in_game_cutoff: float = IN_GAME_CUTOFF
    consensus: ConsensusParams = field(default_factory=ConsensusParams)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    learning_curve_bin_width: int = 25
    simulator: ContestConfig = field(default_factory=_default_contest)

    def __post_init__(self):
        SimilarityParams(self.eval_cutoff)
        SimilarityParams(self.in_game_cutoff)
        check_count(self.learning_curve_bin_width, "learning_curve_bin_width")

    def to_dict(self) -> dict:
        sim = dataclasses.asdict(self.simulator)
        sim["train_test_ratio"] = list(sim["train_test_ratio"])
        return {
            "metric": {"eval_cutoff": self.eval_cutoff, "in_game_cutoff": self.in_game_cutoff},
            "consensus": dataclasses.asdict(self.consensus),
            "selection": dataclasses.asdict(self.selection),
            "bootstrap": dataclasses.asdict(self.bootstrap),
            "evaluation": {"learning_curve_bin_width": self.learning_curve_bin_width},
            "simulator": sim,
        }

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        known = {"metric", "consensus", "selection", "bootstrap", "evaluation", "simulator"}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config tables: {sorted(unknown)}")

        def table(name, allowed):
            t = dict(data.get(name, {}))
            extra = set(t) - set(allowed)
            if extra:
                raise ValidationError(f"unknown keys in [{name}]: {sorted(extra)}")
            return t

        def fields_of(tp):
            return [f.name for f in dataclasses.fields(tp)]

        metric = table("metric", ["eval_cutoff", "in_game_cutoff"])
        evaluation = table("evaluation", ["learning_curve_bin_width"])
        sim = table("simulator", fields_of(ContestConfig))
        if "master_seed" not in sim and os.environ.get(SEED_ENV) is not None:
            sim["master_seed"] = _default_contest().master_seed
        if "train_test_ratio" in sim:
            sim["train_test_ratio"] = tuple(sim["train_test_ratio"])
        try:
            return cls(
                eval_cutoff=metric.get("eval_cutoff", EVAL_CUTOFF),
                in_game_cutoff=metric.get("in_game_cutoff", IN_GAME_CUTOFF),
                consensus=ConsensusParams(**table("consensus", fields_of(ConsensusParams))),
                selection=SelectionConfig(**table("selection", fields_of(SelectionConfig))),
                bootstrap=BootstrapConfig(**table("bootstrap", fields_of(BootstrapConfig))),
                learning_curve_bin_width=evaluation.get("learning_curve_bin_width", 25),
                simulator=ContestConfig(**sim),
            )
        except TypeError as exc:
            raise ValidationError(f"bad config value: {exc}") from None


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return RunConfig.from_dict(data)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)


def dumps_config(cfg: RunConfig) -> str:
    out = []
    for name, tbl in cfg.to_dict().items():
        out.append(f"[{name}]")
        out.extend(f"{k} = {_toml_value(v)}" for k, v in tbl.items())
        out.append("")
    return "\n".join(out)
