"""Scenario files: YAML documents naming a state, witnesses, an optional scan.

See ``docs/scenario.md`` for the schema.  Validation errors carry the dotted
path of the offending field so the CLI can point at it.
"""

from __future__ import annotations

import ast
import copy
import math
import operator
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from . import states as builtin_states
from .algebra import BosonMonomial
from .errors import ContractError, DimensionError, PTWitnessError
from .fock import SparseState
from .witnesses import (
    ANNIHILATING,
    CREATING,
    DEFAULT_TOL,
    Partition,
    WitnessReport,
    ZFactor,
    ZSpec,
    cfrd,
    duan_epr,
    duan_epr_scan,
    general_multimode,
    hz_kvariance,
    jykz,
    lh_hur,
    min_partition,
    nplus,
    sep_product,
    sep_srur,
    sep_sum,
    su2_hur,
)


class ScenarioError(PTWitnessError):
    """Schema violation in a scenario document."""

    def __init__(self, path: str, message: str, line: int | None = None):
        self.path = path
        self.message = message
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{path}: {message}" if path else f"{where}{message}")


# -- scalar parsing ------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "sqrt2": math.sqrt(2.0)}


def _eval_node(node: ast.AST) -> float:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt" and len(node.args) == 1:
        return math.sqrt(_eval_node(node.args[0]))
    raise ValueError("unsupported expression")


def as_real(value: Any, path: str) -> float:
    """Number, or an arithmetic string over ``pi``/``sqrt2``/``sqrt(...)`` such as ``"pi/4"``."""
    if isinstance(value, bool):
        raise ScenarioError(path, "expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(_eval_node(ast.parse(value.strip(), mode="eval").body))
        except (SyntaxError, ValueError, ZeroDivisionError) as exc:
            raise ScenarioError(path, f"cannot evaluate {value!r}: {exc}") from None
    raise ScenarioError(path, f"expected a number, got {type(value).__name__}")


def as_int(value: Any, path: str, minimum: int | None = None) -> int:
    x = as_real(value, path)
    if x != int(x):
        raise ScenarioError(path, f"expected an integer, got {value!r}")
    if minimum is not None and x < minimum:
        raise ScenarioError(path, f"must be >= {minimum}, got {int(x)}")
    return int(x)


def as_complex(value: Any, path: str) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ScenarioError(path, "complex values are written as [re, im]")
        return complex(as_real(value[0], f"{path}[0]"), as_real(value[1], f"{path}[1]"))
    return complex(as_real(value, path))


def _mapping(value: Any, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ScenarioError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(data: dict, allowed: set[str], path: str) -> None:
    for key in data:
        if key not in allowed:
            where = f"{path}.{key}" if path else str(key)
            raise ScenarioError(where, f"unknown field; expected one of {sorted(allowed)}")


# -- state ---------------------------------------------------------------------

_STATE_PARAMS: dict[str, dict[str, Callable[[Any, str], Any]]] = {
    "noon": {"n": lambda v, p: as_int(v, p, 2), "N": lambda v, p: as_int(v, p, 1)},
    "paper_psi": {"n": lambda v, p: as_int(v, p, 2)},
    "fixed_excitation": {"i": lambda v, p: as_int(v, p, 0), "j": lambda v, p: as_int(v, p, 0),
                         "m": lambda v, p: as_int(v, p, 1), "n": lambda v, p: as_int(v, p, 1)},
    "bell_like": {},
}
_AMPLITUDE_PARAMS = {"c0": as_complex, "c1": as_complex, "c0sq": as_real}


def _phases(value: Any, path: str) -> list[float]:
    if not isinstance(value, list):
        raise ScenarioError(path, "phases must be a list with one angle per mode")
    return [as_real(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value + 0.0, ".12g")
    if isinstance(value, complex):
        if value.imag == 0:
            return _fmt(value.real)
        return f"({_fmt(value.real)},{_fmt(value.imag)})"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_fmt(v) for v in value) + "]"
    return str(value)


@dataclass
class StateSpec:
    builtin: str | None
    params: dict[str, Any] = field(default_factory=dict)
    kets: list[tuple[tuple[int, ...], complex]] | None = None

    def build(self) -> SparseState:
        try:
            if self.builtin is not None:
                return builtin_states.BUILTINS[self.builtin](**self.params)
            return SparseState.from_kets(self.kets)
        except (ContractError, DimensionError) as exc:
            raise ScenarioError("state", str(exc)) from None

    def label(self) -> str:
        if self.builtin is not None:
            inner = ";".join(f"{k}={_fmt(v)}" for k, v in sorted(self.params.items()))
            return f"{self.builtin}({inner})"
        body = "|".join(f"{_fmt(list(occ))}:{_fmt(amp)}" for occ, amp in self.kets)
        return f"explicit({body})"


def parse_state(raw: Any, path: str = "state") -> StateSpec:
    data = _mapping(raw, path)
    if not data:
        raise ScenarioError(path, "missing state")
    _reject_unknown(data, {"builtin", "params", "kets"}, path)
    if ("builtin" in data) == ("kets" in data):
        raise ScenarioError(path, "give exactly one of 'builtin' or 'kets'")
    if "builtin" in data:
        name = data["builtin"]
        if name not in _STATE_PARAMS:
            raise ScenarioError(f"{path}.builtin", f"unknown builtin {name!r}; expected one of {sorted(_STATE_PARAMS)}")
        schema = dict(_STATE_PARAMS[name])
        if name != "fixed_excitation":
            schema.update(_AMPLITUDE_PARAMS)
        schema["phases"] = _phases
        raw_params = _mapping(data.get("params"), f"{path}.params")
        _reject_unknown(raw_params, set(schema), f"{path}.params")
        params = {k: schema[k](v, f"{path}.params.{k}") for k, v in raw_params.items()}
        for required in _STATE_PARAMS[name]:
            if required not in params and name in ("noon", "paper_psi"):
                raise ScenarioError(f"{path}.params.{required}", "required parameter missing")
        return StateSpec(name, params)

    kets = data["kets"]
    if not isinstance(kets, list) or not kets:
        raise ScenarioError(f"{path}.kets", "expected a non-empty list of {occ, amp} entries")
    parsed = []
    for i, entry in enumerate(kets):
        where = f"{path}.kets[{i}]"
        entry = _mapping(entry, where)
        _reject_unknown(entry, {"occ", "amp"}, where)
        occ = entry.get("occ")
        if not isinstance(occ, list) or not occ:
            raise ScenarioError(f"{where}.occ", "expected a list of occupations")
        occ_t = tuple(as_int(v, f"{where}.occ[{j}]", 0) for j, v in enumerate(occ))
        if parsed and len(occ_t) != len(parsed[0][0]):
            raise ScenarioError(f"{where}.occ", "all kets must have the same number of modes")
        if "amp" not in entry:
            raise ScenarioError(f"{where}.amp", "required field missing")
        parsed.append((occ_t, as_complex(entry["amp"], f"{where}.amp")))
    if sum(abs(a) ** 2 for _, a in parsed) == 0:
        raise ScenarioError(f"{path}.kets", "amplitudes are not normalizable (all zero)")
    return StateSpec(None, kets=parsed)


# -- witnesses -------------------------------------------------------------------

def _per_mode(value: Any, mode_count: int, default: Any, conv, path: str) -> list:
    """Scalar, list, or ``{default: x, <mode>: y}`` mapping to a per-mode list."""
    if value is None:
        return [default] * mode_count
    if isinstance(value, list):
        if len(value) != mode_count:
            raise ScenarioError(path, f"expected {mode_count} entries, got {len(value)}")
        return [conv(v, f"{path}[{i}]") for i, v in enumerate(value)]
    if isinstance(value, dict):
        base = conv(value["default"], f"{path}.default") if "default" in value else default
        out = [base] * mode_count
        for key, v in value.items():
            if key == "default":
                continue
            k = as_int(key, f"{path}.{key}", 0)
            if k >= mode_count:
                raise ScenarioError(f"{path}.{key}", f"mode index out of range for {mode_count} modes")
            out[k] = conv(v, f"{path}.{key}")
        return out
    return [conv(value, path)] * mode_count


def parse_z(raw: Any, mode_count: int, path: str) -> ZSpec:
    data = _mapping(raw, path)
    _reject_unknown(data, {"annihilating", "powers", "phases", "kinds"}, path)
    powers = _per_mode(data.get("powers"), mode_count, 1, lambda v, p: as_int(v, p, 1), f"{path}.powers")
    phases = _per_mode(data.get("phases"), mode_count, 0.0, as_real, f"{path}.phases")
    if "kinds" in data:
        if "annihilating" in data:
            raise ScenarioError(path, "give either 'kinds' or 'annihilating', not both")

        def kind(v, p):
            alias = {"a": ANNIHILATING, "ann": ANNIHILATING, ANNIHILATING: ANNIHILATING,
                     "c": CREATING, "cre": CREATING, CREATING: CREATING}
            if v not in alias:
                raise ScenarioError(p, f"unknown kind {v!r}")
            return alias[v]

        kinds = _per_mode(data["kinds"], mode_count, ANNIHILATING, kind, f"{path}.kinds")
    else:
        j = data.get("annihilating", "half")
        j = mode_count // 2 if j == "half" else as_int(j, f"{path}.annihilating", 0)
        if j > mode_count:
            raise ScenarioError(f"{path}.annihilating", f"exceeds mode count {mode_count}")
        kinds = [ANNIHILATING if k < j else CREATING for k in range(mode_count)]
    return ZSpec(tuple(ZFactor(kd, pw, ph) for kd, pw, ph in zip(kinds, powers, phases)))


def parse_partition(raw: Any, mode_count: int, path: str) -> Partition | None:
    if raw is None or raw == "min":
        return None
    data = _mapping(raw, path)
    _reject_unknown(data, {"antinormal", "normal"}, path)
    if ("antinormal" in data) == ("normal" in data):
        raise ScenarioError(path, "give exactly one of 'antinormal' or 'normal' (or the string 'min')")
    key = "antinormal" if "antinormal" in data else "normal"
    modes = data[key]
    if not isinstance(modes, list):
        raise ScenarioError(f"{path}.{key}", "expected a list of mode indices")
    idx = [as_int(v, f"{path}.{key}[{i}]", 0) for i, v in enumerate(modes)]
    if any(k >= mode_count for k in idx):
        raise ScenarioError(f"{path}.{key}", f"mode index out of range for {mode_count} modes")
    anti = idx if key == "antinormal" else [k for k in range(mode_count) if k not in idx]
    return Partition.from_antinormal(mode_count, anti)


Evaluation = tuple[WitnessReport, "frozenset[int] | None"]


@dataclass
class WitnessSpec:
    name: str
    raw: dict
    path: str

    def evaluate(self, state: SparseState, tol: float = DEFAULT_TOL) -> Evaluation:
        """Run the witness; also return the transposed modes of its cut (for the oracle)."""
        try:
            return self._evaluate(state, tol)
        except (ContractError, DimensionError) as exc:
            raise ScenarioError(self.path, str(exc)) from None

    def _evaluate(self, state: SparseState, tol: float) -> Evaluation:
        n = state.mode_count
        p, path, name = self.raw, f"{self.path}.params", self.name
        if name in _TWO_MODE and n != 2:
            raise ScenarioError(self.path, f"{name} needs a two-mode state, got {n} modes")
        if name == "duan_epr":
            r = p.get("r", 1.0)
            rep = duan_epr_scan(state, tol=tol) if r == "scan" else duan_epr(state, as_real(r, f"{path}.r"), tol=tol)
            return rep, frozenset({1})
        if name == "hz_kvariance":
            axis = p.get("axis", "x")
            if axis not in ("x", "y"):
                raise ScenarioError(f"{path}.axis", "must be 'x' or 'y'")
            return hz_kvariance(state, axis, tol=tol), frozenset({1})
        if name == "su2_hur":
            return su2_hur(state, tol=tol), frozenset({1})
        if name == "jykz":
            return jykz(state, tol=tol), frozenset({1})
        if name in ("lh_hur", "nplus"):
            m = as_int(p.get("m", 1), f"{path}.m", 1)
            k = as_int(p.get("n", 1), f"{path}.n", 1)
            fn = lh_hur if name == "lh_hur" else nplus
            return fn(state, m, k, tol=tol), frozenset({1})
        if name == "general_multimode":
            word = p.get("word")
            if not isinstance(word, list) or len(word) != n:
                raise ScenarioError(f"{path}.word", f"expected {n} [dag, ann] pairs")
            powers = []
            for i, pair in enumerate(word):
                if not isinstance(pair, list) or len(pair) != 2:
                    raise ScenarioError(f"{path}.word[{i}]", "expected [dag, ann]")
                powers.append((as_int(pair[0], f"{path}.word[{i}][0]", 0), as_int(pair[1], f"{path}.word[{i}][1]", 0)))
            modes = p.get("modes")
            if not isinstance(modes, list) or not modes:
                raise ScenarioError(f"{path}.modes", "expected a non-empty list of mode indices")
            idx = frozenset(as_int(v, f"{path}.modes[{i}]", 0) for i, v in enumerate(modes))
            if max(idx) >= n:
                raise ScenarioError(f"{path}.modes", f"mode index out of range for {n} modes")
            return general_multimode(state, BosonMonomial(tuple(powers)), idx, tol=tol), idx

        z = parse_z(p.get("z"), n, f"{path}.z")
        if name == "cfrd":
            rep = cfrd(state, z, tol=tol)
            part, _ = min_partition(state, z)
            return rep, part.antinormal or None
        part = parse_partition(p.get("partition", "min"), n, f"{path}.partition")
        if part is None:
            part, _ = min_partition(state, z)
        fn = {"sep_sum": sep_sum, "sep_product": sep_product, "sep_srur": sep_srur}[name]
        return fn(state, z, part, tol=tol), part.antinormal or None


_TWO_MODE = {"duan_epr", "hz_kvariance", "su2_hur", "jykz", "lh_hur", "nplus"}
_WITNESS_PARAMS = {
    "duan_epr": {"r"},
    "hz_kvariance": {"axis"},
    "su2_hur": set(),
    "jykz": set(),
    "lh_hur": {"m", "n"},
    "nplus": {"m", "n"},
    "general_multimode": {"word", "modes"},
    "cfrd": {"z"},
    "sep_sum": {"z", "partition"},
    "sep_product": {"z", "partition"},
    "sep_srur": {"z", "partition"},
}
WITNESS_NAMES = tuple(_WITNESS_PARAMS)


def parse_witnesses(raw: Any) -> list[WitnessSpec]:
    if not isinstance(raw, list) or not raw:
        raise ScenarioError("witnesses", "expected a non-empty list")
    out = []
    for i, entry in enumerate(raw):
        where = f"witnesses[{i}]"
        if isinstance(entry, str):
            entry = {"name": entry}
        entry = _mapping(entry, where)
        _reject_unknown(entry, {"name", "params"}, where)
        name = entry.get("name")
        if name not in _WITNESS_PARAMS:
            raise ScenarioError(f"{where}.name", f"unknown witness {name!r}; expected one of {list(WITNESS_NAMES)}")
        params = _mapping(entry.get("params"), f"{where}.params")
        _reject_unknown(params, _WITNESS_PARAMS[name], f"{where}.params")
        out.append(WitnessSpec(name, params, where))
    return out


# -- scan ------------------------------------------------------------------------

@dataclass
class ScanSpec:
    param: str
    values: list[float]
    inner: "ScanSpec | None" = None


def _grid(data: dict, path: str) -> list[float]:
    if ("values" in data) == ("range" in data):
        raise ScenarioError(path, "give exactly one of 'values' or 'range'")
    if "values" in data:
        vals = data["values"]
        if not isinstance(vals, list) or not vals:
            raise ScenarioError(f"{path}.values", "scan range is empty")
        return [as_real(v, f"{path}.values[{i}]") for i, v in enumerate(vals)]
    rng = _mapping(data["range"], f"{path}.range")
    _reject_unknown(rng, {"start", "stop", "step"}, f"{path}.range")
    for key in ("start", "stop", "step"):
        if key not in rng:
            raise ScenarioError(f"{path}.range.{key}", "required field missing")
    start = as_real(rng["start"], f"{path}.range.start")
    stop = as_real(rng["stop"], f"{path}.range.stop")
    step = as_real(rng["step"], f"{path}.range.step")
    if step <= 0 or stop < start:
        raise ScenarioError(f"{path}.range", "scan range is empty")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def parse_scan(raw: Any, path: str = "scan", allow_inner: bool = True) -> ScanSpec | None:
    if raw is None:
        return None
    data = _mapping(raw, path)
    _reject_unknown(data, {"param", "values", "range"} | ({"inner"} if allow_inner else set()), path)
    param = data.get("param")
    if not isinstance(param, str) or not param:
        raise ScenarioError(f"{path}.param", "expected a dotted path such as 'state.params.n'")
    inner = parse_scan(data.get("inner"), f"{path}.inner", allow_inner=False) if allow_inner else None
    return ScanSpec(param, _grid(data, path), inner)


def set_path(doc: Any, dotted: str, value: Any, where: str = "scan.param") -> Any:
    """Return a copy of ``doc`` with ``value`` stored at ``dotted`` (``*`` matches every list item)."""
    doc = copy.deepcopy(doc)
    parts = dotted.split(".")

    def assign(node, i):
        key = parts[i]
        last = i == len(parts) - 1
        if isinstance(node, list):
            if key == "*":
                targets = range(len(node))
            else:
                idx = as_int(key, where, 0)
                if idx >= len(node):
                    raise ScenarioError(where, f"index {idx} out of range in {dotted!r}")
                targets = [idx]
            for t in targets:
                if last:
                    node[t] = value
                else:
                    node[t] = _descend(node[t], parts[i + 1])
                    assign(node[t], i + 1)
            return
        if not isinstance(node, dict):
            raise ScenarioError(where, f"cannot descend into {type(node).__name__} at {key!r} in {dotted!r}")
        if key.isdigit() and int(key) in node:
            key = int(key)
        elif key.isdigit() and key not in node and any(isinstance(k, int) for k in node):
            key = int(key)
        if last:
            node[key] = value
        else:
            node[key] = _descend(node.get(key), parts[i + 1])
            assign(node[key], i + 1)

    def _descend(child, next_key):
        if child is None:
            return {}
        if isinstance(child, (int, float, str)) and next_key.isdigit():
            # Scalar shorthand (e.g. ``phases: 0``) expands to a per-mode mapping.
            return {"default": child}
        return child

    assign(doc, 0)
    return doc


# -- scenario ------------------------------------------------------------------

@dataclass
class Scenario:
    id: str
    state: StateSpec
    witnesses: list[WitnessSpec]
    scan: ScanSpec | None
    oracle: bool
    cutoffs: list[int] | None
    format: str
    raw: dict

    def at(self, assignments: list[tuple[str, float]]) -> "Scenario":
        """The scenario with scan parameters substituted."""
        doc = self.raw
        for param, value in assignments:
            doc = set_path(doc, param, value)
        return parse_scenario(doc, default_id=self.id)


def parse_scenario(doc: Any, default_id: str = "scenario") -> Scenario:
    data = _mapping(doc, "")
    _reject_unknown(data, {"id", "state", "witnesses", "scan", "oracle", "output"}, "")
    sid = str(data.get("id", default_id))
    state = parse_state(data.get("state"))
    witnesses = parse_witnesses(data.get("witnesses"))
    scan = parse_scan(data.get("scan"))
    oracle = _mapping(data.get("oracle"), "oracle")
    _reject_unknown(oracle, {"enabled", "cutoffs"}, "oracle")
    enabled = oracle.get("enabled", False)
    if not isinstance(enabled, bool):
        raise ScenarioError("oracle.enabled", "expected true or false")
    cutoffs = oracle.get("cutoffs")
    if cutoffs is not None:
        if not isinstance(cutoffs, list):
            raise ScenarioError("oracle.cutoffs", "expected a list of per-mode cutoffs")
        cutoffs = [as_int(v, f"oracle.cutoffs[{i}]", 1) for i, v in enumerate(cutoffs)]
    output = _mapping(data.get("output"), "output")
    _reject_unknown(output, {"format"}, "output")
    fmt = output.get("format", "csv")
    if fmt not in ("csv", "records"):
        raise ScenarioError("output.format", "expected 'csv' or 'records'")
    return Scenario(sid, state, witnesses, scan, enabled, cutoffs, fmt, data)


def _locate(node: yaml.Node | None, dotted: str) -> int | None:
    """1-based line of the node addressed by ``a.b[0].c``, or of its deepest existing parent."""
    if node is None:
        return None
    line = node.start_mark.line + 1
    for token in re.findall(r"[^.\[\]]+", dotted):
        if isinstance(node, yaml.MappingNode):
            match = next((v for k, v in node.value if str(k.value) == token), None)
            if match is None:
                return line
            node = match
        elif isinstance(node, yaml.SequenceNode) and token.isdigit() and int(token) < len(node.value):
            node = node.value[int(token)]
        else:
            return line
        line = node.start_mark.line + 1
    return line


def locate(exc: ScenarioError, text: str) -> ScenarioError:
    """``exc`` with the line of its field filled in from the YAML source, if known."""
    if exc.line is not None or not exc.path:
        return exc
    try:
        line = _locate(yaml.compose(text), exc.path)
    except yaml.YAMLError:
        return exc
    return ScenarioError(exc.path, exc.message, line)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ScenarioError("", f"YAML syntax error: {exc.problem}", line) from None
    except yaml.YAMLError as exc:
        raise ScenarioError("", f"YAML error: {exc}") from None
    try:
        return parse_scenario(doc, default_id=path.stem)
    except ScenarioError as exc:
        raise locate(exc, text) from None
