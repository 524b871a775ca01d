"""Analysis configuration: a TOML file with ``[m1]``, ``[m2]``, ``[sigma]``,
``[tolerances]`` and ``[mode]`` tables.

Numbers in coordinate bounds may be written as constant expressions such as
``"2*pi"``. Chart components are expressions in the listed coordinates; see
:mod:`minstab.expr` for the grammar.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


from .expr import ExpressionError, eval_value, parse
from .geometry import Axis, GeometryError, custom_chart, ellipsoid_chart, sphere_chart
from .immersion import SigmaChart
from .product import EmbeddedFactor

__all__ = ["ConfigError", "AnalysisConfig", "load_config"]

MIN_RESOLUTION = 8


class ConfigError(ValueError):
    pass


def _number(v, where: str) -> float:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if isinstance(v, str):
        try:
            return eval_value(parse(v, variables=[]))
        except ExpressionError as exc:
            raise ConfigError(f"{where}: {_describe(exc)}") from exc
    raise ConfigError(f"{where}: expected a number or constant expression, got {v!r}")


def _domain(axes, where: str) -> list:
    out = []
    for k, ax in enumerate(axes):
        if not isinstance(ax, (list, tuple)) or len(ax) not in (2, 3):
            raise ConfigError(f"{where}[{k}]: expected [lo, hi] or [lo, hi, periodic]")
        lo, hi = _number(ax[0], f"{where}[{k}]"), _number(ax[1], f"{where}[{k}]")
        if not hi > lo:
            raise ConfigError(f"{where}[{k}]: empty interval")
        out.append(Axis(lo, hi, bool(ax[2]) if len(ax) == 3 else False))
    return out


def _describe(exc: Exception) -> str:
    src = getattr(exc, "source", "")
    return f"{exc} in {src!r}" if src else str(exc)


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"[{where}] is missing '{key}'")
    return table[key]


@dataclass
class AnalysisConfig:
    raw: dict

    @classmethod
    def from_toml(cls, text: str) -> "AnalysisConfig":
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"unreadable config: {exc}") from exc
        cfg = cls(raw)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "AnalysisConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"unreadable config {path}: {exc}") from exc
        return cls.from_toml(text)

    # sections ---------------------------------------------------------------

    @property
    def name(self) -> str:
        return str(self.raw.get("name", "analysis"))

    @property
    def tolerances(self) -> dict:
        t = dict(self.raw.get("tolerances", {}))
        out = {
            "pinch": float(t.get("pinch", 1e-9)),
            "minimality": None if "minimality" not in t else float(t["minimality"]),
            "certificate": None if "certificate" not in t else float(t["certificate"]),
            "classification": float(t.get("classification", 1e-8)),
        }
        for k, v in out.items():
            if v is not None and not v > 0:
                raise ConfigError(f"tolerance '{k}' must be positive")
        return out

    @property
    def mode(self) -> dict:
        m = dict(self.raw.get("mode", {}))
        out = {
            "epsilon": str(m.get("epsilon", "theorem")),
            "sphere_curvature": float(m.get("sphere_curvature", 0.0)),
            "pinch_resolution": int(m.get("pinch_resolution", 12)),
        }
        if out["epsilon"] not in ("theorem", "corollary"):
            raise ConfigError("mode.epsilon must be 'theorem' or 'corollary'")
        if out["sphere_curvature"] < 0:
            raise ConfigError("mode.sphere_curvature must be nonnegative")
        return out

    @property
    def resolution(self) -> list:
        sig = self.raw["sigma"]
        res = _require(sig, "resolution", "sigma")
        n = len(sig["coordinates"])
        if isinstance(res, int):
            res = [res] * n
        if len(res) != n:
            raise ConfigError("sigma.resolution needs one entry per coordinate")
        if any(int(r) < MIN_RESOLUTION for r in res):
            raise ConfigError(f"grid resolution must be at least {MIN_RESOLUTION} per axis")
        return [int(r) for r in res]

    def validate(self) -> None:
        for sec in ("m1", "sigma"):
            if sec not in self.raw:
                raise ConfigError(f"missing [{sec}] table")
        self.tolerances, self.mode, self.resolution  # noqa: B018 - raise on bad values
        self.build()

    # construction -----------------------------------------------------------

    def build_m1(self):
        t = self.raw["m1"]
        family = t.get("family", "custom")
        try:
            if family == "sphere":
                return sphere_chart(int(_require(t, "dim", "m1")), _number(t.get("radius", 1.0), "m1.radius"))
            if family == "ellipsoid":
                axes = [_number(a, "m1.axes") for a in _require(t, "axes", "m1")]
                scale = _number(t.get("scale", 1.0), "m1.scale")
                return ellipsoid_chart([scale * a for a in axes])
            if family == "custom":
                return custom_chart(
                    _require(t, "components", "m1"),
                    _require(t, "coordinates", "m1"),
                    _domain(_require(t, "domain", "m1"), "m1.domain"),
                    t.get("parameters"),
                )
        except (ExpressionError, GeometryError) as exc:
            raise ConfigError(f"[m1]: {_describe(exc)}") from exc
        raise ConfigError(f"unknown m1 family {family!r}")

    def build_m2(self) -> EmbeddedFactor:
        t = self.raw.get("m2", {"kind": "point"})
        kind = t.get("kind", "point")
        try:
            if kind == "point":
                return EmbeddedFactor.point()
            if kind == "flat_torus":
                return EmbeddedFactor.flat_torus(
                    _number(t.get("r1", 1.0), "m2.r1"), _number(t.get("r2", 1.0), "m2.r2")
                )
            if kind == "chart":
                return EmbeddedFactor.chart(
                    _require(t, "components", "m2"),
                    _require(t, "coordinates", "m2"),
                    _domain(_require(t, "domain", "m2"), "m2.domain"),
                    t.get("parameters"),
                )
        except (ExpressionError, GeometryError) as exc:
            raise ConfigError(f"[m2]: {_describe(exc)}") from exc
        raise ConfigError(f"unknown m2 kind {kind!r}")

    def build(self) -> tuple:
        m1 = self.build_m1()
        m2 = self.build_m2()
        s = self.raw["sigma"]
        try:
            sigma = SigmaChart.build(
                m1,
                m2,
                _require(s, "coordinates", "sigma"),
                _require(s, "m1_map", "sigma"),
                s.get("m2_map", []),
                _domain(_require(s, "domain", "sigma"), "sigma.domain"),
                s.get("parameters"),
            )
        except (ExpressionError, GeometryError) as exc:
            raise ConfigError(f"[sigma]: {_describe(exc)}") from exc
        return m1, m2, sigma

    def echo(self) -> dict:
        return copy.deepcopy(self.raw)


def load_config(path) -> AnalysisConfig:
    return AnalysisConfig.from_file(path)
