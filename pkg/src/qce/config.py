"""Run configuration: schema, validation, defaults, shipped presets.

Configs are YAML with full defaulting.  Validation errors carry the path of
the offending field so a bad file is diagnosable from the message alone.
"""

from __future__ import annotations

import importlib.resources
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

VALID_OBSERVABLES = ("na", "nb", "g2_a", "g2_b")


class ConfigError(ValueError):
    """Schema violation in a run configuration."""


@dataclass(frozen=True)
class MethodSpec:
    kind: str  # mfa | qce | fst
    order: int | None = None  # qce truncation order
    dims: tuple[int, int] | None = None  # fst truncation; None -> E-based rule

    @property
    def name(self) -> str:
        if self.kind == "qce":
            return f"qce{self.order}"
        if self.kind == "fst" and self.dims:
            return "fst%dx%d" % self.dims
        return self.kind


def parse_method(text: str, where: str) -> MethodSpec:
    parts = str(text).strip().lower().split(":")
    kind = parts[0]
    if kind == "mfa":
        if len(parts) > 1:
            raise ConfigError(f"{where}: mfa takes no argument")
        return MethodSpec("mfa", order=1)
    if kind == "qce":
        if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
            raise ConfigError(f"{where}: expected qce:<order>=1>, got {text!r}")
        return MethodSpec("qce", order=int(parts[1]))
    if kind == "fst":
        if len(parts) == 1:
            return MethodSpec("fst")
        try:
            na, nb = (int(x) for x in parts[1].split("x"))
        except ValueError:
            raise ConfigError(f"{where}: expected fst or fst:<na>x<nb>, got {text!r}")
        if na < 2 or nb < 2:
            raise ConfigError(f"{where}: fst dimensions must be >= 2")
        return MethodSpec("fst", dims=(na, nb))
    raise ConfigError(f"{where}: unknown method {text!r} (mfa | qce:M | fst[:NAxNB])")


@dataclass
class ModelConfig:
    kind: str = "shg"  # shg | opo
    g: float = 0.0
    E: float = 0.0
    kappa_a: float = 1.0
    kappa_b: float = 1.0
    delta_a: float = 0.0
    delta_b: float = 0.0


@dataclass
class RunConfig:
    label: str
    model: ModelConfig
    methods: list[MethodSpec]
    horizon: float = 10.0
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    fst_rel_tol: float = 1e-6
    fst_abs_tol: float = 1e-9
    samples: int = 201
    observables: list[str] = field(default_factory=lambda: ["na", "nb"])
    sweep: dict = field(default_factory=dict)  # axis -> np.ndarray of values
    workers: int = 1
    output: str = "runs"
    plots: bool = True
    dump_clusters: bool = True

    @property
    def is_sweep(self) -> bool:
        return bool(self.sweep)


def _get(d, key, default, types, where, positive=False, nonneg=False):
    v = d.get(key, default)
    if not isinstance(v, types) or isinstance(v, bool):
        raise ConfigError(f"{where}.{key}: expected {types}, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{where}.{key}: must be > 0, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(f"{where}.{key}: must be >= 0, got {v!r}")
    return v


def _parse_axis(spec, where) -> np.ndarray:
    if isinstance(spec, (list, tuple)):
        try:
            vals = np.array([float(x) for x in spec], dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: grid entries must be numbers")
    elif isinstance(spec, dict):
        for k in spec:
            if k not in ("start", "stop", "num"):
                raise ConfigError(f"{where}.{k}: unknown grid key")
        start = _get(spec, "start", None, (int, float), where)
        stop = _get(spec, "stop", None, (int, float), where)
        num = _get(spec, "num", None, int, where, positive=True)
        vals = np.linspace(start, stop, num)
    else:
        raise ConfigError(f"{where}: expected a list or {{start, stop, num}}")
    if len(vals) == 0:
        raise ConfigError(f"{where}: empty grid")
    if np.any(np.diff(vals) <= 0):
        raise ConfigError(f"{where}: grid must be strictly increasing")
    return vals


def parse_config(data: dict, label_default: str = "run") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a mapping")
    known = {
        "label", "model", "methods", "horizon", "rel_tol", "abs_tol",
        "fst_rel_tol", "fst_abs_tol", "samples", "observables", "sweep",
        "workers", "output", "plots", "dump_clusters",
    }
    for k in data:
        if k not in known:
            raise ConfigError(f"top level: unknown key {k!r}")

    mdata = data.get("model")
    if not isinstance(mdata, dict):
        raise ConfigError("model: expected a mapping")
    kind = mdata.get("kind")
    if kind not in ("shg", "opo"):
        raise ConfigError(f"model.kind: expected 'shg' or 'opo', got {kind!r}")
    for k in mdata:
        if k not in ("kind", "g", "E", "kappa_a", "kappa_b", "delta_a", "delta_b"):
            raise ConfigError(f"model.{k}: unknown key")
    model = ModelConfig(
        kind=kind,
        g=float(_get(mdata, "g", 0.0, (int, float), "model", nonneg=True)),
        E=float(_get(mdata, "E", 0.0, (int, float), "model", nonneg=True)),
        kappa_a=float(_get(mdata, "kappa_a", 1.0, (int, float), "model", positive=True)),
        kappa_b=float(
            _get(mdata, "kappa_b", 2.0 if kind == "opo" else 1.0, (int, float),
                 "model", positive=True)
        ),
        delta_a=float(_get(mdata, "delta_a", 0.0, (int, float), "model")),
        delta_b=float(_get(mdata, "delta_b", 0.0, (int, float), "model")),
    )

    raw_methods = data.get("methods")
    if not isinstance(raw_methods, list) or not raw_methods:
        raise ConfigError("methods: expected a non-empty list")
    methods = [parse_method(m, f"methods[{i}]") for i, m in enumerate(raw_methods)]
    if len({m.name for m in methods}) != len(methods):
        raise ConfigError("methods: duplicate method entries")

    observables = data.get("observables", ["na", "nb"])
    if not isinstance(observables, list) or not observables:
        raise ConfigError("observables: expected a non-empty list")
    for i, o in enumerate(observables):
        if o not in VALID_OBSERVABLES:
            raise ConfigError(
                f"observables[{i}]: unknown observable {o!r}, valid: {VALID_OBSERVABLES}"
            )
    needs_g2 = any(o.startswith("g2") for o in observables)
    if needs_g2:
        for m in methods:
            if m.kind == "mfa" or (m.kind == "qce" and m.order < 4):
                raise ConfigError(
                    f"observables: g2 requires qce order >= 4 or fst, but method "
                    f"{m.name} cannot provide it"
                )

    sweep = {}
    sdata = data.get("sweep", {}) or {}
    if not isinstance(sdata, dict):
        raise ConfigError("sweep: expected a mapping of axis -> grid")
    for axis, spec in sdata.items():
        if axis not in ("g", "E"):
            raise ConfigError(f"sweep.{axis}: only 'g' and 'E' sweeps are supported")
        sweep[axis] = _parse_axis(spec, f"sweep.{axis}")

    cfg = RunConfig(
        label=str(data.get("label", label_default)),
        model=model,
        methods=methods,
        horizon=float(_get(data, "horizon", 10.0, (int, float), "top level", positive=True)),
        rel_tol=float(_get(data, "rel_tol", 1e-8, (int, float), "top level", positive=True)),
        abs_tol=float(_get(data, "abs_tol", 1e-10, (int, float), "top level", positive=True)),
        fst_rel_tol=float(
            _get(data, "fst_rel_tol", 1e-6, (int, float), "top level", positive=True)
        ),
        fst_abs_tol=float(
            _get(data, "fst_abs_tol", 1e-9, (int, float), "top level", positive=True)
        ),
        samples=int(_get(data, "samples", 201, int, "top level", positive=True)),
        observables=list(observables),
        sweep=sweep,
        workers=int(_get(data, "workers", 1, int, "top level", nonneg=True)),
        output=str(data.get("output", "runs")),
        plots=bool(data.get("plots", True)),
        dump_clusters=bool(data.get("dump_clusters", True)),
    )
    return cfg


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc


def preset_names() -> list[str]:
    root = importlib.resources.files("qce.presets")
    return sorted(
        p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml")
    )


def load_preset(name: str) -> dict:
    root = importlib.resources.files("qce.presets")
    path = root / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        )
    return yaml.safe_load(path.read_text(encoding="utf-8"))
