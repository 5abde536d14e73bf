"""Flat key=value run configuration with typed per-subcommand schemas"""

import hashlib
import json
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from ..utils.logger import logger
from .config import Config
from .exceptions import ConfigErrors, ConfigIssue
from .models import Subcommand


class ParamSpec(NamedTuple):
    kind: str  # int, float, str, bool or list (comma-separated floats)
    default: Any
    choices: Optional[Tuple[str, ...]] = None
    minimum: Optional[float] = None


COMMON: Dict[str, ParamSpec] = {
    "seed": ParamSpec("int", 0, minimum=0),
    "out_prefix": ParamSpec("str", ""),
    "threads": ParamSpec("int", 1, minimum=1),
}

SCHEMAS: Dict[Subcommand, Dict[str, ParamSpec]] = {
    Subcommand.ESCAPE: {
        "potential": ParamSpec("str", "doublewell:1.5,1.5,2"),
        "a": ParamSpec("int", -2),
        "b": ParamSpec("int", 2),
        "alpha": ParamSpec("int", 0),
        "beta": ParamSpec("int", 0),
        "eps": ParamSpec("list", [0.5, 0.35, 0.25]),
        "samples": ParamSpec("int", 10000, minimum=1),
        "step_cap": ParamSpec("int", 10**10, minimum=1),
    },
    Subcommand.ZZD: {
        "dim": ParamSpec("int", 2, minimum=1),
        "potential": ParamSpec("str", "abs"),
        "torus": ParamSpec("int", 0, minimum=0),
        "steps": ParamSpec("int", 1000, minimum=0),
        "chains": ParamSpec("int", 1, minimum=1),
        "factorized": ParamSpec("bool", False),
        "order": ParamSpec("str", "id", choices=("id", "random")),
    },
    Subcommand.VALIDATE_INVARIANCE: {
        "dim": ParamSpec("int", 2, minimum=1),
        "potential": ParamSpec("str", "abs"),
        "torus": ParamSpec("int", 6, minimum=1),
        "factorized": ParamSpec("bool", False),
        "thinned": ParamSpec("bool", False),
    },
    Subcommand.SCALING: {
        "H": ParamSpec("str", "quadratic"),
        "eps": ParamSpec("list", [0.125, 0.0625, 0.03125, 0.015625]),
        "t": ParamSpec("float", 2.0, minimum=0.0),
        "samples": ParamSpec("int", 10000, minimum=1),
    },
    Subcommand.HYBRID: {
        "M": ParamSpec("int", 32, minimum=1),
        "a": ParamSpec("float", 8.0, minimum=0.0),
        "r": ParamSpec("float", 1.0, minimum=0.0),
        "U0": ParamSpec("float", 1.0, minimum=0.0),
        "R": ParamSpec("float", 3.0, minimum=0.0),
        "delta": ParamSpec("float", 0.002, minimum=0.0),
        "gamma": ParamSpec("float", 1.0, minimum=0.0),
        "lambda": ParamSpec("float", 0.0, minimum=0.0),
        "steps": ParamSpec("int", 1000, minimum=0),
        "split": ParamSpec("str", "pairwise", choices=("full-drift", "pairwise", "per-particle")),
        "ou_mode": ParamSpec("str", "exact", choices=("exact", "paper-literal")),
        "jump_mode": ParamSpec("str", "thinned", choices=("naive", "thinned")),
        "block": ParamSpec("int", 100, minimum=1),
        "subsample": ParamSpec("int", 10, minimum=1),
        "verlet_every": ParamSpec("int", 10, minimum=0),
        "xyz_in": ParamSpec("str", ""),
    },
    Subcommand.VALIDATE: {
        "profile": ParamSpec("str", "quick", choices=("quick", "full")),
    },
}

TRUE_WORDS = {"true", "1", "yes", "on"}
FALSE_WORDS = {"false", "0", "no", "off"}


def schema_for(subcommand: Subcommand) -> Dict[str, ParamSpec]:
    return {**SCHEMAS[subcommand], **COMMON}


def parse_value(spec: ParamSpec, text: str) -> Any:
    """Convert one raw value; raises ValueError with a readable message"""
    text = text.strip()
    if spec.kind == "int":
        value = int(text)
    elif spec.kind == "float":
        value = float(text)
    elif spec.kind == "bool":
        lowered = text.lower()
        if lowered not in TRUE_WORDS | FALSE_WORDS:
            raise ValueError(f"expected a boolean, got {text!r}")
        value = lowered in TRUE_WORDS
    elif spec.kind == "list":
        value = [float(item) for item in text.split(",") if item.strip()]
        if not value:
            raise ValueError("expected a comma-separated list of numbers")
    else:
        value = text
    if spec.choices is not None and value not in spec.choices:
        raise ValueError(f"expected one of {', '.join(spec.choices)}, got {value!r}")
    if spec.minimum is not None:
        items = value if isinstance(value, list) else [value]
        if any(item < spec.minimum for item in items):
            raise ValueError(f"must be >= {spec.minimum}")
    return value


class RunConfig(BaseModel):
    """Typed parameters of one run"""

    subcommand: Subcommand
    params: Dict[str, Any] = Field(default_factory=dict)
    seed: int = Field(default=0, ge=0, lt=2**64)
    seed_defaulted: bool = True
    out_prefix: str = ""
    threads: int = Field(default=1, ge=1)

    def __getitem__(self, key: str) -> Any:
        return self.params[key]

    def config_hash(self) -> str:
        """Short digest of subcommand, parameters and seed; thread count and paths excluded"""
        payload = json.dumps(
            {"subcommand": self.subcommand.value, "params": self.params, "seed": self.seed},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _split_lines(text: str) -> List[Tuple[int, str, str, Optional[str]]]:
    entries = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            entries.append((number, line, "", "expected key=value"))
            continue
        key, value = line.split("=", 1)
        entries.append((number, key.strip(), value.strip(), None))
    return entries


def parse_config(
    text: str,
    subcommand: Optional[Subcommand] = None,
    overrides: Optional[Dict[str, str]] = None,
) -> RunConfig:
    """Parse a run configuration, collecting every problem before failing.

    The subcommand comes from the argument or a ``subcommand=`` line. ``overrides`` hold raw
    command-line values, which win over file values.
    """
    issues: List[ConfigIssue] = []
    raw: Dict[str, Tuple[Optional[int], str]] = {}
    for line, key, value, problem in _split_lines(text):
        if problem:
            issues.append(ConfigIssue(line, key, problem))
        elif key == "subcommand":
            try:
                named = Subcommand(value)
            except ValueError:
                issues.append(ConfigIssue(line, key, f"unknown subcommand {value!r}"))
                continue
            if subcommand is not None and named != subcommand:
                issues.append(ConfigIssue(line, key, f"file is for {named.value}, not {subcommand.value}"))
            subcommand = subcommand or named
        elif key in raw:
            issues.append(ConfigIssue(line, key, f"duplicate key (first on line {raw[key][0]})"))
        else:
            raw[key] = (line, value)
    for key, value in (overrides or {}).items():
        raw[key] = (None, value)
    if subcommand is None:
        issues.append(ConfigIssue(None, "subcommand", "missing subcommand"))
        raise ConfigErrors(issues)

    schema = schema_for(subcommand)
    values: Dict[str, Any] = {}
    for key, (line, text_value) in sorted(raw.items(), key=lambda item: (item[1][0] or 0, item[0])):
        spec = schema.get(key)
        if spec is None:
            issues.append(ConfigIssue(line, key, "unknown key"))
            continue
        try:
            values[key] = parse_value(spec, text_value)
        except ValueError as e:
            issues.append(ConfigIssue(line, key, f"type mismatch: {e}"))
    if "seed" in values and values["seed"] >= 2**64:
        issues.append(ConfigIssue(raw["seed"][0], "seed", "must fit in 64 bits"))
    if issues:
        raise ConfigErrors(issues)

    params = {key: values.get(key, spec.default) for key, spec in SCHEMAS[subcommand].items()}
    seed_defaulted = "seed" not in values
    if seed_defaulted:
        logger.warning(f"No seed given, using {Config.DEFAULT_SEED}; pass --seed for reproducible published runs")
    out_prefix = values.get("out_prefix") or str(Config.OUTPUT_DIR / subcommand.value)
    return RunConfig(
        subcommand=subcommand,
        params=params,
        seed=values.get("seed", Config.DEFAULT_SEED),
        seed_defaulted=seed_defaulted,
        out_prefix=out_prefix,
        threads=Config.thread_count(values.get("threads", 1)),
    )


def overrides_from_flags(pairs: Sequence[Tuple[str, Any]]) -> Dict[str, str]:
    """Raw override strings from parsed command-line flags, skipping unset ones"""
    out = {}
    for key, value in pairs:
        if value is None:
            continue
        if isinstance(value, bool):
            out[key] = "true" if value else "false"
        elif isinstance(value, (list, tuple)):
            out[key] = ",".join(str(item) for item in value)
        else:
            out[key] = str(value)
    return out
