"""JSON run configuration.

A document holds a ``network`` section (object of NetworkConfig fields, or
a path to a saved network JSON), exactly one of ``params`` (single run) or
``grid`` (sweep; an object, or the string ``"full"``), and an optional
``output`` section ``{"path": ..., "format": "csv" | "jsonl"}``. Omitted
fields take the defaults listed by :func:`defaults_text`; unknown keys are
rejected.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .engine import SpreadParams
from .errors import ConfigError, ConfigParseError
from .netgen import NetworkConfig
from .sweep import GridSpec

TOP_LEVEL_KEYS = ("network", "params", "grid", "output")
OUTPUT_FORMATS = ("csv", "jsonl")
DEFAULT_OUTPUT = {"path": "results.csv", "format": "csv"}

_GRID_LISTS = {"alphas": float, "deltas": float, "eips": float, "eits": int, "lts": float}
_GRID_SCALARS = {"ss": int, "sgl": float, "replicates": int, "base_seed": int,
                 "regenerate_network_per_replicate": bool}


@dataclass(frozen=True)
class RunConfig:
    network: NetworkConfig | str
    params: SpreadParams | None
    grid: GridSpec | None
    output_path: str = DEFAULT_OUTPUT["path"]
    output_format: str = DEFAULT_OUTPUT["format"]

    def to_dict(self) -> dict:
        """Fully resolved configuration, every default explicit."""
        doc = {"network": self.network if isinstance(self.network, str)
               else self.network.to_dict()}
        if self.params is not None:
            doc["params"] = self.params.to_dict()
        if self.grid is not None:
            grid = self.grid.to_dict()
            grid.pop("network")
            doc["grid"] = grid
        doc["output"] = {"path": self.output_path, "format": self.output_format}
        return doc

    def with_seed(self, seed: int) -> "RunConfig":
        """Override every seed: network, single run and sweep base seed."""
        network = self.network
        if isinstance(network, NetworkConfig):
            network = network.replace(seed=seed)
        params = self.params.replace(seed=seed) if self.params is not None else None
        grid = (dataclasses.replace(self.grid, base_seed=seed, network=network)
                if self.grid is not None else None)
        return dataclasses.replace(self, network=network, params=params, grid=grid)


def _check_type(key: str, value, kind):
    if kind is bool:
        ok = isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if not ok:
        raise ConfigError(key, f"type {kind.__name__}", value)
    return float(value) if kind is float else value


def _field_types(cls) -> dict:
    return {f.name: {"int": int, "float": float, "bool": bool}.get(str(f.type), float)
            for f in dataclasses.fields(cls) if f.init}


def _section(cls, data, section: str, skip=()):
    if not isinstance(data, dict):
        raise ConfigError(section, "JSON object", data)
    types = {k: v for k, v in _field_types(cls).items() if k not in skip}
    kwargs = {}
    for key, value in data.items():
        if key not in types:
            raise ConfigError(f"{section}.{key}", f"known key (one of {sorted(types)})")
        kwargs[key] = _check_type(f"{section}.{key}", value, types[key])
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{section}.{exc.key}", exc.constraint, exc.value) from None


def _parse_grid(data, network) -> GridSpec:
    if data == "full":
        return GridSpec(network=network)
    if not isinstance(data, dict):
        raise ConfigError("grid", 'JSON object or "full"', data)
    kwargs = {}
    for key, value in data.items():
        if key in _GRID_LISTS:
            if not isinstance(value, list):
                raise ConfigError(f"grid.{key}", "list", value)
            kwargs[key] = tuple(_check_type(f"grid.{key}", v, _GRID_LISTS[key]) for v in value)
        elif key in _GRID_SCALARS:
            kwargs[key] = _check_type(f"grid.{key}", value, _GRID_SCALARS[key])
        else:
            known = sorted({*_GRID_LISTS, *_GRID_SCALARS})
            raise ConfigError(f"grid.{key}", f"known key (one of {known})")
    try:
        return GridSpec(network=network, **kwargs)
    except ConfigError as exc:
        raise ConfigError(f"grid.{exc.key}", exc.constraint, exc.value) from None


def config_from_dict(doc) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "JSON object", doc)
    for key in doc:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError(key, f"known key (one of {list(TOP_LEVEL_KEYS)})")
    if "params" in doc and "grid" in doc:
        raise ConfigError("params/grid", "exactly one of params or grid")

    raw_net = doc.get("network", {})
    network = raw_net if isinstance(raw_net, str) else _section(NetworkConfig, raw_net, "network")

    params = grid = None
    if "grid" in doc:
        grid = _parse_grid(doc["grid"], network)
    else:
        params = _section(SpreadParams, doc.get("params", {}), "params")

    output = dict(DEFAULT_OUTPUT)
    raw_out = doc.get("output", {})
    if not isinstance(raw_out, dict):
        raise ConfigError("output", "JSON object", raw_out)
    for key, value in raw_out.items():
        if key not in DEFAULT_OUTPUT:
            raise ConfigError(f"output.{key}", "known key (one of ['format', 'path'])")
        if not isinstance(value, str):
            raise ConfigError(f"output.{key}", "string", value)
        output[key] = value
    if output["format"] not in OUTPUT_FORMATS:
        raise ConfigError("output.format", f"one of {list(OUTPUT_FORMATS)}", output["format"])

    return RunConfig(network=network, params=params, grid=grid,
                     output_path=output["path"], output_format=output["format"])


def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(exc.msg, exc.lineno, exc.colno) from None
    return config_from_dict(doc)


def defaults_text() -> str:
    lines = ["network defaults:"]
    lines += [f"  {k} = {v}" for k, v in NetworkConfig().to_dict().items()]
    lines.append("params defaults (single run):")
    lines += [f"  {k} = {v}" for k, v in SpreadParams().to_dict().items()]
    lines.append('grid defaults (sweep; "full" selects all of these):')
    grid = GridSpec().to_dict()
    grid.pop("network")
    lines += [f"  {k} = {v}" for k, v in grid.items()]
    lines.append(f"output defaults: path = {DEFAULT_OUTPUT['path']}, "
                 f"format = {DEFAULT_OUTPUT['format']} (or jsonl)")
    return "\n".join(lines)
