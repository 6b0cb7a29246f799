"""TOML experiment definitions.

A configuration file holds one experiment::

    [experiment]
    id = "steklov-constant"
    kind = "steklov"
    window_fraction = 0.5
    tol = 0.01

    [model]
    kind = "steklov_circle"
    M = 4000

    [[symbols]]
    name = "gamma"
    terms = [{k = [0], re = 1.0}]

Every key of ``[experiment]`` other than ``id``, ``kind`` and ``seed`` is an
experiment parameter.  Symbols are referred to by name.  Rectangle potentials
use ``cosine = [{j = [1, 0], v = 0.5}]`` instead of ``terms``.
"""

from __future__ import annotations

import difflib
import fnmatch
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigParseError
from .models import (build_dirac_quantum_torus, build_grushin, build_quantum_torus,
                     build_rectangle, build_steklov_circle, build_torus)
from .symbols import CosineSeries, FourierSymbol, ThetaMatrix


@dataclass(frozen=True)
class ExperimentConfig:
    id: str
    kind: str
    model: dict = field(default_factory=dict)
    symbols: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0
    source: str = ""

    def param(self, name: str, default=None):
        return self.params.get(name, default)

    def require(self, name: str):
        if name not in self.params:
            raise ConfigParseError(f"{self.id}: missing parameter {name!r}")
        return self.params[name]

    def symbol(self, name: str, default=None):
        if name in self.symbols:
            return self.symbols[name]
        if default is not None:
            return default
        raise ConfigParseError(f"{self.id}: missing symbol {name!r}")

    def canonical(self) -> dict:
        """JSON-able description used for hashing and report headers."""
        return {
            "id": self.id,
            "kind": self.kind,
            "model": self.model,
            "symbols": {k: _symbol_to_json(v) for k, v in sorted(self.symbols.items())},
            "params": self.params,
            "seed": self.seed,
        }

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return ExperimentConfig(self.id, self.kind, self.model, self.symbols, self.params,
                                int(seed), self.source)


def _symbol_to_json(s):
    if isinstance(s, FourierSymbol):
        return {"n": s.n, "terms": s.to_json_list()}
    return {"cosine": [{"j": list(k), "v": v} for k, v in s.coeffs.items()]}


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(cfg: ExperimentConfig, version: str) -> str:
    payload = canonical_json(cfg.canonical()) + "\0" + version
    return hashlib.sha256(payload.encode()).hexdigest()


def parse_symbol(entry: dict, where: str):
    if "cosine" in entry:
        try:
            return CosineSeries({tuple(t["j"]): float(t["v"]) for t in entry["cosine"]})
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigParseError(f"{where}: bad cosine series ({exc})") from exc
    terms = entry.get("terms")
    if terms is None and "json" in entry:
        terms = json.loads(entry["json"])
    if terms is None:
        raise ConfigParseError(f"{where}: symbol needs 'terms', 'json' or 'cosine'")
    try:
        n = entry.get("n")
        return FourierSymbol.from_json_list(terms, int(n) if n is not None else None)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigParseError(f"{where}: bad symbol terms ({exc})") from exc


def parse_theta(spec: dict, n: int) -> ThetaMatrix:
    if "theta" in spec:
        try:
            return ThetaMatrix.from_list(spec["theta"], n)
        except ValueError as exc:
            raise ConfigParseError(f"bad theta: {exc}") from exc
    if "theta12" in spec:
        return ThetaMatrix.from_pairs(n, {(1, 2): float(spec["theta12"])})
    return ThetaMatrix.zero(n)


MODEL_KINDS = ("torus", "quantum_torus", "dirac_quantum_torus", "rectangle", "steklov_circle",
               "grushin")


def build_model(spec: dict, symbols: dict | None = None, M: int | None = None):
    """Instantiate a model from its ``[model]`` table (``M`` overrides the radius)."""
    kind = spec.get("kind")
    symbols = symbols or {}
    try:
        if kind == "torus":
            return build_torus(int(spec.get("n", 1)), int(M if M is not None else spec["M"]))
        if kind == "quantum_torus":
            n = int(spec.get("n", 2))
            return build_quantum_torus(parse_theta(spec, n), int(M if M is not None else spec["M"]))
        if kind == "dirac_quantum_torus":
            n = int(spec.get("n", 2))
            return build_dirac_quantum_torus(parse_theta(spec, n),
                                             int(M if M is not None else spec["M"]))
        if kind == "rectangle":
            return build_rectangle(spec.get("boundary", "dirichlet"), float(spec["a"]),
                                   float(spec["b"]), int(M if M is not None else spec["K"]))
        if kind == "steklov_circle":
            gamma = symbols.get(spec.get("weight", "gamma"))
            if gamma is None:
                raise ConfigParseError("steklov_circle needs a weight symbol")
            return build_steklov_circle(int(M if M is not None else spec["M"]), gamma)
        if kind == "grushin":
            return build_grushin(int(spec["Mx"]), int(M if M is not None else spec["My"]))
    except KeyError as exc:
        raise ConfigParseError(f"model {kind!r} is missing {exc}") from exc
    hint = difflib.get_close_matches(str(kind), MODEL_KINDS, n=1)
    raise ConfigParseError(f"unknown model kind {kind!r}"
                           + (f"; did you mean {hint[0]!r}?" if hint else ""))


def _check_numbers(obj, where: str):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ConfigParseError(f"{where}: non-finite number")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_numbers(v, f"{where}.{k}")
    if isinstance(obj, list):
        for v in obj:
            _check_numbers(v, where)


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    from .verify import REGISTRY, check_kind

    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"{source}: {exc}") from exc
    exp = data.get("experiment")
    if not isinstance(exp, dict):
        raise ConfigParseError(f"{source}: missing [experiment] table")
    exp = dict(exp)
    exp_id = exp.pop("id", None)
    kind = exp.pop("kind", None)
    if not exp_id or not kind:
        raise ConfigParseError(f"{source}: [experiment] needs 'id' and 'kind'")
    check_kind(kind)
    seed = int(exp.pop("seed", 0))
    _check_numbers(exp, f"{source}:experiment")
    for key, value in exp.items():
        if key.startswith("tol") and isinstance(value, (int, float)) and value <= 0:
            raise ConfigParseError(f"{source}: tolerance {key} must be positive")
        if isinstance(value, list) and not value:
            raise ConfigParseError(f"{source}: grid {key} is empty")
    symbols = {}
    for i, entry in enumerate(data.get("symbols", [])):
        name = entry.get("name")
        if not name:
            raise ConfigParseError(f"{source}: symbols[{i}] needs a name")
        symbols[name] = parse_symbol(entry, f"{source}:symbols.{name}")
    model = dict(data.get("model", {}))
    allowed = set(REGISTRY[kind].required) | set(REGISTRY[kind].optional)
    for key in exp:
        if key not in allowed:
            hint = difflib.get_close_matches(key, sorted(allowed), n=1)
            raise ConfigParseError(f"{source}: kind {kind!r} has no parameter {key!r}"
                                   + (f"; did you mean {hint[0]!r}?" if hint else ""))
    for name in REGISTRY[kind].required:
        if name not in exp:
            raise ConfigParseError(f"{source}: kind {kind!r} requires parameter {name!r}")
    if REGISTRY[kind].needs_model and not model:
        raise ConfigParseError(f"{source}: kind {kind!r} needs a [model] table")
    if model and model.get("kind") not in MODEL_KINDS:
        hint = difflib.get_close_matches(str(model.get("kind")), MODEL_KINDS, n=1)
        raise ConfigParseError(f"{source}: unknown model kind {model.get('kind')!r}"
                               + (f"; did you mean {hint[0]!r}?" if hint else ""))
    return ExperimentConfig(str(exp_id), kind, model, symbols, exp, seed, source)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def expand_paths(paths) -> list[Path]:
    """Files as given; directories contribute their ``*.toml`` files in sorted order."""
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            out.extend(sorted(p.glob("*.toml")))
        else:
            out.append(p)
    return out


def load_configs(paths, id_filter: str | None = None) -> list[ExperimentConfig]:
    configs = [load_config(p) for p in expand_paths(paths)]
    seen = set()
    for c in configs:
        if c.id in seen:
            raise ConfigParseError(f"duplicate experiment id {c.id!r}")
        seen.add(c.id)
    if id_filter:
        configs = [c for c in configs if fnmatch.fnmatchcase(c.id, id_filter)]
    return sorted(configs, key=lambda c: c.id)


def as_float_list(value) -> list[float]:
    return [float(x) for x in np.atleast_1d(value)]
