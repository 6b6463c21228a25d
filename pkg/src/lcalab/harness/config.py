"""Experiment configuration (TOML, schema version 1).

Example::

    kind = "spectrum"
    seed = 7

    [measure]
    type = "hierarchical"      # or "block-code", "bernoulli"
    tolerance = 1e-6

    [automaton]
    support = [0, 1]

    [character]
    support = [0]

    [iterates]
    start = 1
    stop = 4096
    stride = 1

Kind-specific tables (``[spectrum]``, ``[support_check]``, ...) are listed in
``KIND_OPTIONS`` together with their defaults.
"""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from ..core import ShiftPolynomial
from ..errors import ConfigError
from ..measures import BernoulliMeasure, BlockCode, BlockCodeMeasure, HierarchicalMeasure
from ..spectral import Character

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1

KINDS = ("spectrum", "entropy-scan", "support-check", "genericity-scan", "verify-core", "space-time")

MEASURE_TYPES = ("hierarchical", "block-code", "bernoulli")

KIND_OPTIONS: dict[str, dict[str, Any]] = {
    "spectrum": {"method": "auto", "thresholds": [0.05], "find_witness": False, "witness_max_rank": 4},
    "entropy-scan": {"levels": [6, 12], "depth_offset": 8, "block_lengths": [4, 8]},
    "support-check": {"control": True},
    "genericity-scan": {"N": 4, "eps": 0.05, "max_exponent": 20, "min_exponent": 1},
    "verify-core": {"lucas_max": 512, "binom_max": 64, "random_trials": 200, "max_power": 64,
                    "mutate": False},
    "space-time": {"width": 128, "steps": 64, "initial": "impulse", "position": None},
}

# tables a kind reads from; anything else present is still validated if known
_DEFAULT_SECTIONS = {
    "spectrum": {"measure": {"type": "hierarchical", "tolerance": 1e-6},
                 "iterates": {"start": 1, "stop": 4096, "stride": 1}},
    "entropy-scan": {"measure": {"type": "hierarchical", "tolerance": 1e-9}},
    "support-check": {"measure": {"type": "block-code", "Q": 4, "R": 2,
                                  "generator": ["1100", "0011"]},
                      "iterates": {"start": 0, "stop": 64, "stride": 1}},
    "genericity-scan": {},
    "verify-core": {},
    "space-time": {},
}


def read_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not valid TOML ({exc})") from None


def build_measure(spec: Mapping[str, Any]):
    kind = spec.get("type")
    if kind == "hierarchical":
        depth, tol = spec.get("depth"), spec.get("tolerance")
        if depth is None:
            return HierarchicalMeasure.from_tolerance(float(tol) if tol is not None else 1e-9)
        return HierarchicalMeasure(int(depth), None if tol is None else float(tol))
    if kind == "block-code":
        return BlockCodeMeasure(BlockCode.from_mapping(spec), bool(spec.get("phase_averaged", True)))
    if kind == "bernoulli":
        return BernoulliMeasure(float(spec.get("p", 0.5)))
    raise ConfigError(f"measure type must be one of {MEASURE_TYPES}, got {kind!r}")


def _int_list(value, what: str) -> list[int]:
    if not isinstance(value, list) or not all(isinstance(v, int) for v in value):
        raise ConfigError(f"{what} must be a list of integers")
    return list(value)


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    measure: Any = None
    automaton: ShiftPolynomial = field(default_factory=lambda: ShiftPolynomial(0, 0b11))
    character: Optional[Character] = None
    iterates: range = range(1, 2)
    samples: int = 100
    options: dict = field(default_factory=dict)
    output: Optional[str] = None
    workers: int = 1
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def digest(self) -> str:
        """Hash of everything that can influence data files."""
        payload = {k: v for k, v in self.raw.items() if k not in ("output", "workers")}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_config(data: Mapping[str, Any], kind: Optional[str] = None, seed: Optional[int] = None) -> ExperimentConfig:
    raw = copy.deepcopy(dict(data))
    kind = kind or raw.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"experiment kind must be one of {KINDS}, got {kind!r}")
    if raw.get("kind", kind) != kind:
        raise ConfigError(f"config declares kind {raw['kind']!r} but {kind!r} was requested")
    raw["kind"] = kind
    version = raw.setdefault("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    for section, defaults in _DEFAULT_SECTIONS[kind].items():
        raw.setdefault(section, copy.deepcopy(defaults))
    if kind == "spectrum" and not raw.get("spectrum", {}).get("find_witness", False):
        raw.setdefault("character", {"support": [0]})
    if seed is not None:
        raw["seed"] = seed
    if "seed" not in raw:
        raise ConfigError("a master seed is mandatory (config 'seed' or --seed)")
    if not isinstance(raw["seed"], int) or not 0 <= raw["seed"] < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")

    opts = copy.deepcopy(KIND_OPTIONS[kind])
    section = raw.get(kind.replace("-", "_"), {})
    unknown = set(section) - set(opts)
    if unknown:
        raise ConfigError(f"unknown option(s) for {kind}: {sorted(unknown)}")
    opts.update(section)
    raw[kind.replace("-", "_")] = opts

    cfg = ExperimentConfig(kind=kind, seed=int(raw["seed"]), options=opts, raw=raw,
                           output=raw.get("output"), workers=int(raw.get("workers", 1)))
    if "measure" in raw:
        cfg.measure = build_measure(raw["measure"])
    if "automaton" in raw:
        supp = _int_list(raw["automaton"].get("support"), "automaton.support")
        if not supp:
            raise ConfigError("automaton support must be non-empty")
        try:
            cfg.automaton = ShiftPolynomial.from_support(supp)
        except ValueError as exc:
            raise ConfigError(f"automaton support: {exc}") from None
    if "character" in raw:
        try:
            cfg.character = Character(tuple(_int_list(raw["character"].get("support", []), "character.support")))
        except ValueError as exc:
            raise ConfigError(f"character support: {exc}") from None
    if "iterates" in raw:
        it = raw["iterates"]
        start, stop, stride = int(it.get("start", 1)), int(it.get("stop", 1)), int(it.get("stride", 1))
        if start < 0 or stop < start or stride < 1:
            raise ConfigError("iterates need 0 <= start <= stop and stride >= 1")
        cfg.iterates = range(start, stop + 1, stride)
    samples = raw.get("sampling", {}).get("samples", 100)
    if not isinstance(samples, int) or samples < 1:
        raise ConfigError("sampling.samples must be a positive integer")
    cfg.samples = samples
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    _validate_kind(cfg)
    return cfg


def _validate_kind(cfg: ExperimentConfig) -> None:
    o = cfg.options
    if cfg.kind == "spectrum":
        if cfg.character is None and not o["find_witness"]:
            raise ConfigError("spectrum needs [character] support or spectrum.find_witness = true")
        if o["method"] not in ("auto", "exact", "mc"):
            raise ConfigError("spectrum.method must be auto, exact or mc")
        if o["find_witness"] and not isinstance(cfg.measure, BlockCodeMeasure):
            raise ConfigError("find_witness requires a block-code measure")
    elif cfg.kind == "support-check":
        if not isinstance(cfg.measure, BlockCodeMeasure):
            raise ConfigError("support-check requires a block-code measure")
    elif cfg.kind == "entropy-scan":
        lo, hi = o["levels"]
        if not 0 <= lo <= hi:
            raise ConfigError("entropy_scan.levels must be [lo, hi] with 0 <= lo <= hi")
        if any(not 1 <= L <= 24 for L in o["block_lengths"]):
            raise ConfigError("entropy_scan.block_lengths must lie in [1, 24]")
    elif cfg.kind == "genericity-scan":
        if not 1 <= o["min_exponent"] <= o["max_exponent"] <= 30:
            raise ConfigError("genericity_scan needs 1 <= min_exponent <= max_exponent <= 30")
    elif cfg.kind == "space-time":
        if o["width"] < 1 or o["steps"] < 1:
            raise ConfigError("space_time width and steps must be positive")


def load_config(path, kind: Optional[str] = None, seed: Optional[int] = None) -> ExperimentConfig:
    data = read_toml(Path(path))
    return parse_config(data, kind=kind, seed=seed)
