"""Scenario configuration: TOML files with dotted section keys.

A configuration file may set any subset of the keys listed in
:data:`FIELDS`, for example::

    scenario = "two-observers"
    grid.M = 256
    detector.sigma = 4.0
    seed = 7

Missing keys take per-scenario defaults.  ``detector.sigma`` defaults to a
fixed fraction of the block pitch and ``dynamics.mass`` to
``hbar t / (4 sigma^2)``; both are resolved to numbers so that the echoed
configuration is complete and re-validates to the same object.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCENARIOS = (
    "localization",
    "two-observers",
    "recoil",
    "trajectory",
    "deloc-device",
    "decoherence",
    "epr",
    "oracle-suite",
)

U64 = 2**64
MAX_SECTOR_TOTAL = 2**14


@dataclass(frozen=True)
class GridConfig:
    M: int
    x_min: float
    x_max: float

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.M - 1)


@dataclass(frozen=True)
class DetectorConfig:
    N: int
    sigma: float
    image_map: tuple[float, float]


@dataclass(frozen=True)
class DynamicsConfig:
    mass: float
    t: float
    t_prime: float
    hbar: float


@dataclass(frozen=True)
class RecoilConfig:
    w: float


@dataclass(frozen=True)
class DecoherenceConfig:
    K1: int
    K2: int
    D_list: tuple[int, ...]
    beta: float
    t: float
    trials: int
    check_dims: tuple[int, int]
    check_D: tuple[int, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    grid: GridConfig
    detector: DetectorConfig
    dynamics: DynamicsConfig
    recoil: RecoilConfig
    decoherence: DecoherenceConfig
    seed: int
    output_dir: str

    def flat(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if hasattr(v, "__dataclass_fields__"):
                out.update({f"{f.name}.{k}": val for k, val in asdict(v).items()})
            else:
                out[f.name] = v
        return out

    def to_toml(self) -> str:
        """Flat dotted-key TOML that re-validates to this configuration."""
        return "".join(f"{k} = {_toml_value(v)}\n" for k, v in self.flat().items())


# key -> kind; kinds: int, float, str, pair (two floats), ints (list of ints)
FIELDS: dict[str, str] = {
    "scenario": "str",
    "grid.M": "int",
    "grid.x_min": "float",
    "grid.x_max": "float",
    "detector.N": "int",
    "detector.sigma": "float",
    "detector.image_map": "pair",
    "dynamics.mass": "float",
    "dynamics.t": "float",
    "dynamics.t_prime": "float",
    "dynamics.hbar": "float",
    "recoil.w": "float",
    "decoherence.K1": "int",
    "decoherence.K2": "int",
    "decoherence.D_list": "ints",
    "decoherence.beta": "float",
    "decoherence.t": "float",
    "decoherence.trials": "int",
    "decoherence.check_dims": "ints",
    "decoherence.check_D": "ints",
    "seed": "int",
    "output_dir": "str",
}

_BASE: dict[str, Any] = {
    "grid.M": 256,
    "grid.x_min": 0.0,
    "grid.x_max": 255.0,
    "detector.N": 32,
    "detector.image_map": (1.0, 0.0),
    "dynamics.t": 1.0,
    "dynamics.t_prime": 0.5,
    "dynamics.hbar": 1.0,
    "recoil.w": math.inf,
    "decoherence.K1": 2,
    "decoherence.K2": 2,
    "decoherence.D_list": (16, 32, 64, 128, 256, 512, 1024),
    "decoherence.beta": 1.0,
    "decoherence.t": 10.0,
    "decoherence.trials": 20,
    "decoherence.check_dims": (4, 4),
    "decoherence.check_D": (2, 1024),
    "seed": 0,
    "output_dir": ".",
}

_SCENARIO_DEFAULTS: dict[str, dict[str, Any]] = {
    "localization": {"grid.M": 512, "grid.x_max": 511.0, "detector.N": 64},
    "recoil": {"grid.M": 64, "grid.x_max": 63.0, "detector.N": 8},
    "trajectory": {"grid.M": 4096, "grid.x_max": 4095.0, "detector.N": 64},
    "deloc-device": {"detector.N": 73},
}

# default sigma as a fraction of the block pitch
_SIGMA_FRACTION = {"trajectory": 1 / 3, "deloc-device": 1 / 3}


def defaults(scenario: str) -> dict[str, Any]:
    d = dict(_BASE)
    d.update(_SCENARIO_DEFAULTS.get(scenario, {}))
    return d


def block_pitch(scenario: str, M: int, x_min: float, x_max: float, N: int, scale: float) -> float:
    """Width of one receptor block in image units.

    The delocalized-device scenario tiles the relative coordinate, which
    has ``2M - 1`` grid points.
    """
    points = 2 * M - 1 if scenario == "deloc-device" else M
    dx = (x_max - x_min) / (M - 1)
    return abs(scale) * points * dx / N


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot write {type(v).__name__} as TOML")


def _flatten(tree: dict, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(key: str, kind: str, v, errors: list[str]):
    def bad(expected):
        errors.append(f"{key}: expected {expected}, got {v!r}")

    is_num = isinstance(v, (int, float)) and not isinstance(v, bool)
    if kind == "int":
        if isinstance(v, int) and not isinstance(v, bool):
            return v
        return bad("an integer")
    if kind == "float":
        if is_num:
            return float(v)
        return bad("a number")
    if kind == "str":
        if isinstance(v, str):
            return v
        return bad("a string")
    if kind == "pair":
        if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
        ):
            return (float(v[0]), float(v[1]))
        return bad("a list of two numbers")
    if kind == "ints":
        if isinstance(v, (list, tuple)) and all(isinstance(x, int) and not isinstance(x, bool) for x in v):
            return tuple(v)
        return bad("a list of integers")
    raise AssertionError(kind)


def _check_ranges(c: dict[str, Any], errors: list[str]) -> None:
    def need(ok, key, msg):
        if not ok:
            errors.append(f"{key}: {msg}, got {c[key]!r}")

    def finite_pos(key):
        need(math.isfinite(c[key]) and c[key] > 0, key, "must be a positive finite number")

    need(c["scenario"] in SCENARIOS, "scenario", f"must be one of {', '.join(SCENARIOS)}")
    need(c["grid.M"] >= 2, "grid.M", "must be at least 2")
    need(math.isfinite(c["grid.x_min"]), "grid.x_min", "must be finite")
    need(math.isfinite(c["grid.x_max"]) and c["grid.x_max"] > c["grid.x_min"], "grid.x_max",
         "must be finite and greater than grid.x_min")
    need(c["detector.N"] >= 2, "detector.N", "must be at least 2")
    finite_pos("detector.sigma")
    scale, offset = c["detector.image_map"]
    need(math.isfinite(scale) and scale != 0 and math.isfinite(offset), "detector.image_map",
         "needs a finite nonzero scale and a finite offset")
    for key in ("dynamics.mass", "dynamics.t", "dynamics.hbar"):
        finite_pos(key)
    need(math.isfinite(c["dynamics.t_prime"]) and c["dynamics.t_prime"] >= 0, "dynamics.t_prime",
         "must be a nonnegative finite number")
    need(c["recoil.w"] >= 0, "recoil.w", "must be nonnegative (inf allowed)")
    for key in ("decoherence.K1", "decoherence.K2"):
        need(c[key] >= 1, key, "must be at least 1")
    need(c["decoherence.trials"] >= 5, "decoherence.trials", "must be at least 5")
    d_list = c["decoherence.D_list"]
    need(len(set(d_list)) >= 2 and all(d >= 1 for d in d_list), "decoherence.D_list",
         "needs at least two distinct dimensions, all at least 1")
    if d_list and all(d >= 1 for d in d_list):
        need((c["decoherence.K1"] + c["decoherence.K2"]) * max(d_list) <= MAX_SECTOR_TOTAL, "decoherence.D_list",
             f"(K1 + K2) * max(D) must not exceed {MAX_SECTOR_TOTAL}")
    finite_pos("decoherence.beta")
    need(math.isfinite(c["decoherence.t"]) and c["decoherence.t"] >= 0, "decoherence.t",
         "must be a nonnegative finite number")
    dims = c["decoherence.check_dims"]
    need(len(dims) == 2 and all(k >= 1 for k in dims), "decoherence.check_dims", "needs two sector dimensions >= 1")
    check_d = c["decoherence.check_D"]
    need(len(check_d) >= 1 and all(d >= 1 for d in check_d), "decoherence.check_D",
         "needs at least one environment dimension >= 1")
    if len(dims) == 2 and check_d and all(d >= 1 for d in check_d):
        need(sum(dims) * max(check_d) <= MAX_SECTOR_TOTAL, "decoherence.check_D",
             f"sum(check_dims) * max(D) must not exceed {MAX_SECTOR_TOTAL}")
    need(0 <= c["seed"] < U64, "seed", "must be an unsigned 64-bit integer")


def validate_mapping(raw: dict, scenario: str | None = None, seed: int | None = None) -> ScenarioConfig:
    """Validate a parsed (possibly nested) mapping and fill defaults.

    ``scenario`` and ``seed``, when given, override the mapping.  All
    problems are collected and raised together as :class:`ConfigError`.
    """
    errors: list[str] = []
    flat = _flatten(raw)
    given: dict[str, Any] = {}
    for key, v in flat.items():
        if key not in FIELDS:
            errors.append(f"{key}: unknown key")
            continue
        val = _coerce(key, FIELDS[key], v, errors)
        if val is not None:
            given[key] = val
    if scenario is not None:
        given["scenario"] = scenario
    if seed is not None:
        given["seed"] = seed
    if "scenario" not in given:
        errors.append("scenario: required (set it in the file or pass --scenario)")
        raise ConfigError(errors)
    name = given["scenario"]
    c = defaults(name)
    c.update(given)
    c["scenario"] = name
    bad_keys = {e.split(":", 1)[0] for e in errors}
    if "detector.sigma" not in c and not bad_keys & {"grid.M", "grid.x_min", "grid.x_max", "detector.N", "detector.image_map"}:
        try:
            pitch = block_pitch(name, c["grid.M"], c["grid.x_min"], c["grid.x_max"], c["detector.N"], c["detector.image_map"][0])
            c["detector.sigma"] = pitch * _SIGMA_FRACTION.get(name, 0.5)
        except (ZeroDivisionError, TypeError):
            pass
    if "dynamics.mass" not in c:
        sigma = c.get("detector.sigma", math.nan)
        if math.isfinite(sigma) and sigma > 0:
            c["dynamics.mass"] = c["dynamics.hbar"] * c["dynamics.t"] / (4 * sigma**2)
        elif "detector.sigma" in c:
            # the sigma error is reported; any placeholder keeps the other checks running
            c["dynamics.mass"] = 1.0
    missing = [k for k in FIELDS if k not in c]
    errors.extend(f"{k}: could not derive a default" for k in missing)
    if not missing:
        _check_ranges(c, errors)
    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(
        scenario=name,
        grid=GridConfig(c["grid.M"], c["grid.x_min"], c["grid.x_max"]),
        detector=DetectorConfig(c["detector.N"], c["detector.sigma"], tuple(c["detector.image_map"])),
        dynamics=DynamicsConfig(c["dynamics.mass"], c["dynamics.t"], c["dynamics.t_prime"], c["dynamics.hbar"]),
        recoil=RecoilConfig(c["recoil.w"]),
        decoherence=DecoherenceConfig(
            c["decoherence.K1"], c["decoherence.K2"], tuple(c["decoherence.D_list"]), c["decoherence.beta"],
            c["decoherence.t"], c["decoherence.trials"], tuple(c["decoherence.check_dims"]),
            tuple(c["decoherence.check_D"]),
        ),
        seed=c["seed"],
        output_dir=c["output_dir"],
    )


def parse_toml(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"parse error: {exc}"]) from exc


def validate_config(path=None, scenario: str | None = None, seed: int | None = None) -> ScenarioConfig:
    """Read and validate a configuration file (``None`` means all defaults)."""
    raw = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from exc
        raw = parse_toml(text)
    return validate_mapping(raw, scenario, seed)
