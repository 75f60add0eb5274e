"""Run configuration: a strict JSON document shared by all CLI subcommands.

Schema (unknown keys are rejected, naming the key and its location)::

    {
      "detector": {"t_r": 0.72, "t_c": 0.2, "eta": 0.8, "p_d": 0.0, "L": 50},
      "input": {"coherent": 1.0},     # or {"fock": 1} | {"distribution": "rho.csv"}
                                      # | {"mixture": "mix.csv"}; optional
      "trials": 100000,               # default 100000
      "seed": 0,                      # default 0
      "n_max": 8,                     # default 8
      "sv_threshold": 1e-8,           # default 1e-8
      "output": {"histogram": "...", "matrix": "...", "result": "...",
                 "report": "...", "curve": "...", "directory": "..."}
    }

File paths are resolved against the directory containing the config document
and must exist at parse time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
import json

from .response import DetectorParams

DEFAULT_TRIALS = 100_000
DEFAULT_SEED = 0
DEFAULT_N_MAX = 8
DEFAULT_SV_THRESHOLD = 1e-8

_TOP_KEYS = {"detector", "input", "trials", "seed", "n_max", "sv_threshold", "output"}
_DETECTOR_KEYS = {"t_r", "t_c", "eta", "p_d", "L"}
_INPUT_KEYS = {"coherent", "fock", "distribution", "mixture"}
_OUTPUT_KEYS = {"histogram", "matrix", "result", "report", "curve", "directory"}


class ConfigError(ValueError):
    """A configuration document is malformed or violates an invariant."""


@dataclass(frozen=True)
class InputSpec:
    """One input variant: the kind plus its value (number or resolved path)."""

    kind: str
    value: float | int | Path


@dataclass(frozen=True)
class RunConfig:
    detector: DetectorParams
    input: InputSpec | None
    trials: int
    seed: int
    n_max: int
    sv_threshold: float
    output: dict[str, str] = field(default_factory=dict)

    def require_input(self) -> InputSpec:
        if self.input is None:
            raise ConfigError("this command needs an 'input' section in the config")
        return self.input


def _reject_unknown(mapping: dict, allowed: set[str], location: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {location}")


def _number(mapping: dict, key: str, location: str, default=None):
    if key not in mapping:
        if default is None:
            raise ConfigError(f"missing key {key!r} in {location}")
        return default
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key {key!r} in {location} must be a number")
    return value


def _integer(mapping: dict, key: str, location: str, default=None) -> int:
    value = _number(mapping, key, location, default)
    if isinstance(value, float) and not value.is_integer():
        raise ConfigError(f"key {key!r} in {location} must be an integer")
    return int(value)


def _parse_detector(raw: object) -> DetectorParams:
    if not isinstance(raw, dict):
        raise ConfigError("'detector' must be an object")
    _reject_unknown(raw, _DETECTOR_KEYS, "detector")
    try:
        return DetectorParams(
            t_r=_number(raw, "t_r", "detector"),
            t_c=_number(raw, "t_c", "detector"),
            eta=_number(raw, "eta", "detector"),
            p_d=_number(raw, "p_d", "detector", default=0.0),
            L=_integer(raw, "L", "detector"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid detector parameters: {exc}") from exc


def _parse_input(raw: object, base_dir: Path) -> InputSpec:
    if not isinstance(raw, dict):
        raise ConfigError("'input' must be an object")
    _reject_unknown(raw, _INPUT_KEYS, "input")
    if len(raw) != 1:
        raise ConfigError(
            "'input' must set exactly one variant of "
            "coherent / fock / distribution / mixture"
        )
    kind, value = next(iter(raw.items()))
    if kind == "coherent":
        value = _number(raw, "coherent", "input")
        if value < 0:
            raise ConfigError("key 'coherent' in input must be nonnegative")
        return InputSpec(kind, float(value))
    if kind == "fock":
        value = _integer(raw, "fock", "input")
        if value < 0:
            raise ConfigError("key 'fock' in input must be nonnegative")
        return InputSpec(kind, value)
    # the remaining variants reference files that must exist at parse time
    if not isinstance(value, str):
        raise ConfigError(f"key {kind!r} in input must be a file path")
    path = (base_dir / value).resolve() if not Path(value).is_absolute() else Path(value)
    if not path.is_file():
        raise ConfigError(f"input file {str(value)!r} does not exist")
    return InputSpec(kind, path)


def parse_config(text: str, base_dir: str | Path = ".") -> RunConfig:
    """Parse and validate a configuration document."""
    base_dir = Path(base_dir)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError("configuration document must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "the top level")

    if "detector" not in raw:
        raise ConfigError("missing key 'detector' in the top level")
    detector = _parse_detector(raw["detector"])
    input_spec = _parse_input(raw["input"], base_dir) if "input" in raw else None

    trials = _integer(raw, "trials", "the top level", DEFAULT_TRIALS)
    if trials < 1:
        raise ConfigError("key 'trials' in the top level must be positive")
    seed = _integer(raw, "seed", "the top level", DEFAULT_SEED)
    if seed < 0:
        raise ConfigError("key 'seed' in the top level must be nonnegative")
    n_max = _integer(raw, "n_max", "the top level", DEFAULT_N_MAX)
    if n_max < 0:
        raise ConfigError("key 'n_max' in the top level must be nonnegative")
    sv_threshold = float(_number(raw, "sv_threshold", "the top level", DEFAULT_SV_THRESHOLD))
    if not 0.0 < sv_threshold < 1.0:
        raise ConfigError("key 'sv_threshold' in the top level must lie in (0, 1)")

    output: dict[str, str] = {}
    if "output" in raw:
        if not isinstance(raw["output"], dict):
            raise ConfigError("'output' must be an object")
        _reject_unknown(raw["output"], _OUTPUT_KEYS, "output")
        for key, value in raw["output"].items():
            if not isinstance(value, str):
                raise ConfigError(f"key {key!r} in output must be a path string")
            output[key] = value

    return RunConfig(
        detector=detector,
        input=input_spec,
        trials=trials,
        seed=seed,
        n_max=n_max,
        sv_threshold=sv_threshold,
        output=output,
    )


def load_config(path: str | Path) -> RunConfig:
    """Read and parse a configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)
