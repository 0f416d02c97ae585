"""Declarative game configurations.

A config is a YAML (or JSON) mapping with four keys::

    name: use-eps0.1
    scenario: pre_post            # pre_only | fixed_post | pre_post
    problem:  {kind: use-pair, alpha_sq: 0.8, epsilon: 0.1}
    instrument: {kind: use-prepost}
    estimator: [...]              # optional when the instrument implies one

Problem kinds: ``discrete`` (literal state lists), ``parallel-spins``,
``antiparallel-spins``, ``use-pair``. Instrument kinds: ``projective``,
``povm``, ``kraus`` (literal matrices), ``covariant`` and ``use-prepost``.
Complex entries are numbers or strings such as ``"0.5-0.5j"``. No code is ever
evaluated. Validation errors carry the line of the offending node.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
import jsonschema
import numpy as np
import yaml

from .covariant import covariant_povm
from .instruments import Instrument, KrausSet, Povm, Scenario
from .problem import EstimationProblem, antiparallel_spins, discrete_problem, parallel_spins
from .qcore import sphere_grid
from .scenarios import OUTCOMES, UseParams, use_prepost_instrument

BUNDLED = ("orthogonal-pair", "use-eps0.1", "parallel-N1")

_complex = {"oneOf": [{"type": "number"},
                      {"type": "string", "pattern": r"^[-+0-9.eEj ]+$"}]}
_vector = {"type": "array", "items": _complex, "minItems": 1}
_matrix = {"type": "array", "items": _vector, "minItems": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "scenario", "problem", "instrument"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "scenario": {"enum": [s.value for s in Scenario]},
        "estimator": {"type": "array", "minItems": 1},
        "grid_order": {"type": "integer", "minimum": 1},
        "problem": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["discrete", "parallel-spins", "antiparallel-spins", "use-pair"]}},
            "allOf": [
                {"if": {"properties": {"kind": {"const": "discrete"}}},
                 "then": {"required": ["values", "pre"], "additionalProperties": False,
                          "properties": {"kind": {}, "values": {"type": "array", "minItems": 1},
                                         "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
                                         "pre": {"type": "array", "items": _vector},
                                         "post": {"type": "array", "items": _vector}}}},
                {"if": {"properties": {"kind": {"enum": ["parallel-spins", "antiparallel-spins"]}}},
                 "then": {"required": ["n_spins"], "additionalProperties": False,
                          "properties": {"kind": {}, "n_spins": {"type": "integer", "minimum": 1, "maximum": 8}}}},
                {"if": {"properties": {"kind": {"const": "use-pair"}}},
                 "then": {"required": ["alpha_sq", "epsilon"], "additionalProperties": False,
                          "properties": {"kind": {},
                                         "alpha_sq": {"type": "number", "exclusiveMinimum": 0.5, "exclusiveMaximum": 1},
                                         "epsilon": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                                         "values": {"type": "array", "items": {"enum": ["+", "-"]}, "minItems": 1},
                                         "weights": {"type": "array", "items": {"type": "number", "minimum": 0}}}}},
            ],
        },
        "instrument": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["projective", "povm", "kraus", "covariant", "use-prepost"]}},
            "allOf": [
                {"if": {"properties": {"kind": {"const": "projective"}}},
                 "then": {"required": ["dim"], "additionalProperties": False,
                          "properties": {"kind": {}, "dim": {"type": "integer", "minimum": 1}}}},
                {"if": {"properties": {"kind": {"enum": ["povm", "kraus"]}}},
                 "then": {"required": ["operators"], "additionalProperties": False,
                          "properties": {"kind": {}, "operators": {"type": "array", "items": _matrix, "minItems": 1},
                                         "mode": {"enum": ["exact", "subnormalized"]}}}},
                {"if": {"properties": {"kind": {"const": "covariant"}}},
                 "then": {"required": ["n_spins"], "additionalProperties": False,
                          "properties": {"kind": {}, "n_spins": {"type": "integer", "minimum": 1, "maximum": 8},
                                         "grid_order": {"type": "integer", "minimum": 1}}}},
                {"if": {"properties": {"kind": {"const": "use-prepost"}}},
                 "then": {"additionalProperties": False, "properties": {"kind": {}}}},
            ],
        },
    },
}


class ConfigError(ValueError):
    """Config failed to parse or validate; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


@dataclass
class GameSetup:
    name: str
    scenario: Scenario
    problem: EstimationProblem
    instrument: Instrument
    estimator: list
    grid: list
    raw: dict


def _node_line(root: yaml.Node, path) -> int | None:
    node = root
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
    return node.start_mark.line + 1


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("prepost") / "bundled" / f"{name}.yaml"))


def _parse(path: Path):
    text = path.read_text()
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ConfigError(f"parse error: {exc.problem}", line, str(path)) from exc
    if root is None:
        raise ConfigError("empty config", source=str(path))
    return root, data


def _resolve(source) -> Path:
    path = Path(source)
    if not path.exists() and str(source) in BUNDLED:
        path = bundled_path(str(source))
    if not path.exists():
        raise ConfigError("no such config file or bundled config", source=str(source))
    return path


def load_config(source: str | Path, instrument: str | Path | None = None) -> dict:
    """Read and validate a config file, or a bundled config by name.

    ``instrument`` optionally names a second YAML file holding an
    ``instrument`` mapping (or the bare mapping) that replaces the config's.
    Diagnostics point at the file and line of the offending node.
    """
    path = _resolve(source)
    root, data = _parse(path)
    inst_root = inst_path = None
    if instrument is not None:
        inst_path = Path(instrument)
        if not inst_path.exists():
            raise ConfigError("no such instrument file", source=str(instrument))
        inst_root, inst = _parse(inst_path)
        if isinstance(inst, dict) and "instrument" in inst:
            inst = inst["instrument"]
            inst_root = next(v for k, v in inst_root.value if k.value == "instrument")
        if isinstance(data, dict):
            data = dict(data, instrument=inst)
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = list(validator.iter_errors(data))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        where = list(err.absolute_path)
        loc = "/".join(str(p) for p in where) or "<root>"
        if inst_root is not None and where[:1] == ["instrument"]:
            raise ConfigError(f"{loc}: {err.message}", _node_line(inst_root, where[1:]), str(inst_path))
        raise ConfigError(f"{loc}: {err.message}", _node_line(root, where), str(path))
    return data


def _complex_array(x) -> np.ndarray:
    def conv(v):
        if isinstance(v, list):
            return [conv(t) for t in v]
        return complex(v.replace(" ", "")) if isinstance(v, str) else complex(v)
    return np.array(conv(x), dtype=complex)


def build_setup(data: dict) -> GameSetup:
    """Turn a validated config mapping into problem, instrument and estimator."""
    scenario = Scenario(data["scenario"])
    prob = data["problem"]
    kind = prob["kind"]
    grid_order = data.get("grid_order")
    if kind == "discrete":
        post = [_complex_array(v) for v in prob["post"]] if "post" in prob else None
        problem, grid = discrete_problem(prob["values"], [_complex_array(v) for v in prob["pre"]],
                                         post, prob.get("weights"), name=data["name"])
    elif kind == "parallel-spins":
        problem, grid = parallel_spins(prob["n_spins"], grid_order)
    elif kind == "antiparallel-spins":
        problem, grid = antiparallel_spins(prob["n_spins"], grid_order)
    else:
        params = [UseParams.from_alpha_sq(prob["alpha_sq"], prob["epsilon"])]
        values = prob.get("values", ["+", "-"])
        p = params[0]
        problem, grid = discrete_problem(values, [p.psi(v) for v in values], [p.phi(v) for v in values],
                                         prob.get("weights"), name=data["name"])

    inst = data["instrument"]
    ikind = inst["kind"]
    estimator = data.get("estimator")
    if ikind == "projective":
        eye = np.eye(inst["dim"])
        instrument = Povm([np.outer(e, e) for e in eye])
    elif ikind == "povm":
        instrument = Povm([_complex_array(m) for m in inst["operators"]], inst.get("mode", "exact"))
    elif ikind == "kraus":
        instrument = KrausSet([_complex_array(m) for m in inst["operators"]], inst.get("mode", "exact"))
    elif ikind == "covariant":
        n = inst["n_spins"]
        instrument, guesses = covariant_povm(n, sphere_grid(inst.get("grid_order", n // 2 + 1)))
        estimator = estimator or guesses
    else:
        if kind != "use-pair":
            raise ConfigError("instrument 'use-prepost' needs problem kind 'use-pair'")
        instrument = use_prepost_instrument(params[0])
        estimator = estimator or list(OUTCOMES)
    if estimator is None:
        raise ConfigError("estimator is required for this instrument")
    if len(estimator) != len(instrument):
        raise ConfigError(f"estimator has {len(estimator)} entries for {len(instrument)} outcomes")
    return GameSetup(data["name"], scenario, problem, instrument, list(estimator), grid, data)
