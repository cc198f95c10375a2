"""JSON system configurations and the built-in presets."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from .contraction import ContractionSystem, ControlPair, as_function
from .expr import ExprError, parse
from .ifs import IfsSystem
from .simfun import SimulationFunction, make_max_combined
from .spaces import QuasiMetricError, QuasiMetricSpace

__all__ = ["ConfigError", "SystemConfig", "PRESETS", "preset", "preset_json", "load_config", "resolve"]


class ConfigError(ValueError):
    """A configuration problem; `field` is the dotted path of the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


_E3_XI = {"kind": "expr", "xi": "t/(t+1)-s"}
_CANTOR_XI = {"kind": "expr", "xi": "3*t/4-s"}


def _example4(denominator: int) -> dict:
    return {
        "space": {"kind": "example4", "domain": [0.0, 1.0]},
        "ifs": {
            "zeta": "t",
            "maps": [
                {"map": f"x^3/(66*x^2+{denominator})", "xi": {"kind": "expr", "xi": "t/(t+1)-s"},
                 "eta": "t^2"},
                {"map": "4*x^2/(4*x^2+1)", "xi": {"kind": "expr", "xi": "16*t/(t+16)-s"},
                 "eta": "t^2"},
            ],
        },
    }


PRESETS: dict[str, dict] = {
    "example3": {
        "space": {"kind": "example3", "domain": [0.0, 1.0]},
        "map": "x^2/(4*x^2+3)",
        "xi": _E3_XI,
        "controls": {"zeta": "t", "eta": "t^2/3"},
        "orientation": "forward",
    },
    "example4a": _example4(3),
    "example4b": _example4(5),
    "cantor": {
        "space": {"kind": "weighted-abs", "lambda": 2.0, "domain": [0.0, 1.0]},
        "ifs": {
            "zeta": "t",
            "maps": [
                {"map": "x/3", "xi": _CANTOR_XI, "eta": "t/2"},
                {"map": "x/3+2/3", "xi": _CANTOR_XI, "eta": "t/2"},
            ],
        },
    },
}


@dataclass(frozen=True, eq=False)
class SystemConfig:
    descriptor: dict
    space: QuasiMetricSpace
    system: ContractionSystem | None = None
    ifs: IfsSystem | None = None
    name: str | None = None

    def __eq__(self, other):
        if not isinstance(other, SystemConfig):
            return NotImplemented
        return self.descriptor == other.descriptor

    @property
    def is_ifs(self) -> bool:
        return self.ifs is not None

    def as_ifs(self) -> IfsSystem:
        return self.ifs if self.ifs is not None else IfsSystem.from_system(self.system)

    def map_systems(self) -> list[ContractionSystem]:
        """Point-level systems: the single map, or one per IFS map."""
        if self.system is not None:
            return [self.system]
        return [self.ifs.system(i) for i in range(len(self.ifs.maps))]

    def to_json(self) -> str:
        return canonical_json(self.descriptor)


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def preset(name: str) -> SystemConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}")
    cfg = resolve(copy.deepcopy(PRESETS[name]))
    return SystemConfig(cfg.descriptor, cfg.space, cfg.system, cfg.ifs, name)


def preset_json(name: str) -> str:
    return preset(name).to_json()


def load_config(path) -> SystemConfig:
    """Read and fully resolve a JSON system config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {path} at line {exc.lineno}, column {exc.colno}: "
                              f"{exc.msg}") from None
    return resolve(data)


# -- resolution --------------------------------------------------------------

_TOP_KEYS = {"preset", "space", "map", "ifs", "xi", "controls", "orientation", "declared_delta"}


def _keys(obj, where: str, allowed: set, required: set = frozenset()):
    if not isinstance(obj, dict):
        raise ConfigError(where, "expected a JSON object")
    for k in obj:
        if k not in allowed:
            raise ConfigError(f"{where}.{k}" if where else k, "unknown field")
    for k in required:
        if k not in obj:
            raise ConfigError(f"{where}.{k}" if where else k, "required field missing")


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(where, f"expected a number, got {v!r}")
    return float(v)


def _text(v, where: str) -> str:
    if not isinstance(v, str):
        raise ConfigError(where, f"expected an expression string, got {v!r}")
    try:
        parse(v)
    except ExprError as exc:
        raise ConfigError(where, str(exc)) from None
    return v


def _space(d, where: str, delta) -> tuple[QuasiMetricSpace, dict]:
    _keys(d, where, {"kind", "lambda", "above", "below", "domain", "delta"}, {"kind"})
    kind = d["kind"]
    kinds = ("sorgenfrey", "weighted-abs", "example3", "example4", "piecewise")
    if kind not in kinds:
        raise ConfigError(f"{where}.kind", f"unknown space kind {kind!r}; known: {', '.join(kinds)}")
    lo, hi = 0.0, 1.0
    if "domain" in d:
        dom = d["domain"]
        if not (isinstance(dom, list) and len(dom) == 2):
            raise ConfigError(f"{where}.domain", "expected [lo, hi]")
        lo, hi = (_number(v, f"{where}.domain") for v in dom)
        if not lo < hi:
            raise ConfigError(f"{where}.domain", "lo must be below hi")
    if "delta" in d:
        delta = d["delta"]
    kw = {}
    if delta is not None:
        kw["declared_delta"] = _number(delta, f"{where}.delta")
        if not kw["declared_delta"] > 0:
            raise ConfigError(f"{where}.delta", "must be > 0")
    if ("lambda" in d) != (kind == "weighted-abs"):
        raise ConfigError(f"{where}.lambda", "required for weighted-abs and only allowed there")
    if (("above" in d) or ("below" in d)) and kind != "piecewise":
        raise ConfigError(f"{where}.above", "only allowed for piecewise spaces")
    try:
        if kind == "weighted-abs":
            lam = _number(d["lambda"], f"{where}.lambda")
            if not lam > 0:
                raise ConfigError(f"{where}.lambda", "must be > 0")
            space = QuasiMetricSpace.weighted_abs(lam, lo, hi, **kw)
        elif kind == "piecewise":
            for k in ("above", "below"):
                if k not in d:
                    raise ConfigError(f"{where}.{k}", "required field missing")
            above = _text(d["above"], f"{where}.above")
            below = _text(d["below"], f"{where}.below")
            space = QuasiMetricSpace.piecewise(above, below, lo, hi, **kw)
        else:
            space = QuasiMetricSpace(kind, lo, hi, **kw)
    except (QuasiMetricError, ExprError) as exc:
        raise ConfigError(where, str(exc)) from None
    return space, space.to_descriptor()


def _xi(d, where: str) -> SimulationFunction:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(where, "expected an object with a 'kind'")
    kind = d["kind"]
    fields = {"expr": ("xi",), "xi1": ("p", "q"), "xi2": ("f", "g"), "xi3": ("h",), "max": ("of",)}
    if kind not in fields:
        raise ConfigError(f"{where}.kind", f"unknown simulation function kind {kind!r}")
    _keys(d, where, {"kind", *fields[kind]}, set(fields[kind]))
    if kind == "max":
        parts = d["of"]
        if not isinstance(parts, list) or not parts:
            raise ConfigError(f"{where}.of", "expected a nonempty list")
        return make_max_combined(_xi(p, f"{where}.of[{i}]") for i, p in enumerate(parts))
    texts = {k: _text(d[k], f"{where}.{k}") for k in fields[kind]}
    try:
        return getattr(SimulationFunction, "from_expr" if kind == "expr" else kind)(**texts)
    except (ValueError, ExprError) as exc:
        raise ConfigError(where, str(exc)) from None


def _fn(v, where: str, var: str):
    text = _text(v, where)
    try:
        return as_function(text, var)
    except ExprError as exc:
        raise ConfigError(where, str(exc)) from None


def resolve(data) -> SystemConfig:
    """Resolve a parsed JSON config into spaces, maps and functions."""
    if not isinstance(data, dict):
        raise ConfigError("", "config must be a JSON object")
    if "preset" in data:
        if set(data) != {"preset"}:
            extra = sorted(set(data) - {"preset"})[0]
            raise ConfigError(extra, "not allowed alongside 'preset'")
        if not isinstance(data["preset"], str):
            raise ConfigError("preset", "expected a preset name")
        return preset(data["preset"])
    _keys(data, "", _TOP_KEYS, {"space"})
    space, space_d = _space(data["space"], "space", data.get("declared_delta"))
    desc: dict = {"space": space_d}

    if ("map" in data) == ("ifs" in data):
        raise ConfigError("map", "give exactly one of 'map' or 'ifs'")
    if "ifs" in data:
        for k in ("xi", "controls", "orientation"):
            if k in data:
                raise ConfigError(k, "not used with 'ifs'; give xi and eta per map")
        d = data["ifs"]
        _keys(d, "ifs", {"zeta", "maps"}, {"zeta", "maps"})
        if not isinstance(d["maps"], list) or not d["maps"]:
            raise ConfigError("ifs.maps", "expected a nonempty list")
        zeta = _fn(d["zeta"], "ifs.zeta", "t")
        maps, xis, etas, mdesc = [], [], [], []
        for i, m in enumerate(d["maps"]):
            w = f"ifs.maps[{i}]"
            _keys(m, w, {"map", "xi", "eta"}, {"map", "xi", "eta"})
            maps.append(_fn(m["map"], f"{w}.map", "x"))
            xis.append(_xi(m["xi"], f"{w}.xi"))
            etas.append(_fn(m["eta"], f"{w}.eta", "t"))
            mdesc.append({"map": m["map"], "xi": xis[-1].to_descriptor(), "eta": m["eta"]})
        ifs = IfsSystem(space, tuple(maps), tuple(xis), tuple(etas), zeta)
        desc["ifs"] = {"zeta": d["zeta"], "maps": mdesc}
        return SystemConfig(desc, space, None, ifs)

    for k in ("xi", "controls"):
        if k not in data:
            raise ConfigError(k, "required field missing")
    T = _fn(data["map"], "map", "x")
    xi = _xi(data["xi"], "xi")
    _keys(data["controls"], "controls", {"zeta", "eta"}, {"zeta", "eta"})
    zeta = _fn(data["controls"]["zeta"], "controls.zeta", "t")
    eta = _fn(data["controls"]["eta"], "controls.eta", "t")
    orientation = data.get("orientation", "forward")
    if orientation not in ("forward", "backward"):
        raise ConfigError("orientation", "must be 'forward' or 'backward'")
    sys = ContractionSystem(space, T, xi, ControlPair(zeta, eta), orientation)
    desc.update({"map": data["map"], "xi": xi.to_descriptor(),
                 "controls": {"zeta": data["controls"]["zeta"], "eta": data["controls"]["eta"]},
                 "orientation": orientation})
    return SystemConfig(desc, space, sys, None)
