"""Line-oriented ``key = value`` run configuration.

Keys are the field names of :class:`SyntheticConfig`, :class:`TrainConfig`
and :class:`PnHyper`, plus ``lambdas`` (comma list for sweeps) and
``val_fraction``.  ``seed`` seeds both data generation and training;
``lambda`` is accepted for ``lam``.  ``#`` starts a comment.
"""

import configparser
import dataclasses
from dataclasses import dataclass, field

from .errors import VmpError
from .pn import PnHyper
from .synthetic import SyntheticConfig
from .training import TrainConfig

_SECTION = "run"
_ALIASES = {"lambda": "lam"}


class ConfigError(VmpError):
    pass


@dataclass
class RunConfig:
    data: SyntheticConfig = field(default_factory=SyntheticConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    hyper: PnHyper = field(default_factory=PnHyper)
    lambdas: tuple = (0.0, 0.5, 2.5, 5.0)
    val_fraction: float = 0.25


def _convert(kind, raw, key):
    try:
        if kind is bool:
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_config(text):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n{text}")
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return dict(parser.items(_SECTION))


def build_config(values, base=None):
    """Apply a ``{key: str}`` mapping on top of ``base``."""
    base = base or RunConfig()
    groups = {"data": {}, "train": {}, "hyper": {}}
    types = {
        "data": {f.name: f.type for f in dataclasses.fields(SyntheticConfig)},
        "train": {f.name: f.type for f in dataclasses.fields(TrainConfig)},
        "hyper": {f.name: f.type for f in dataclasses.fields(PnHyper)},
    }
    lambdas, val_fraction = base.lambdas, base.val_fraction
    for key, raw in values.items():
        name = _ALIASES.get(key, key)
        if name == "lambdas":
            try:
                lambdas = tuple(float(x) for x in raw.split(",") if x.strip())
            except ValueError:
                raise ConfigError(f"bad lambda list {raw!r}") from None
            continue
        if name == "val_fraction":
            val_fraction = _convert(float, raw, key)
            continue
        hit = False
        for group, fields in types.items():
            if name in fields:
                groups[group][name] = _convert(fields[name], raw, key)
                hit = True
        if not hit:
            raise ConfigError(f"unknown configuration key {key!r}")
    return RunConfig(
        data=dataclasses.replace(base.data, **groups["data"]),
        train=dataclasses.replace(base.train, **groups["train"]),
        hyper=dataclasses.replace(base.hyper, **groups["hyper"]),
        lambdas=lambdas,
        val_fraction=val_fraction,
    )


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return build_config(parse_config(fh.read()))
