"""Experiment description and its ``key = value`` file format.

A config file is a list of ``[section]`` headers followed by ``key = value``
lines; ``#`` starts a comment.  Keys before the first header belong to
``[experiment]``.  Every key is optional; :func:`emit_config` writes the full
set with current values, so ``emit_config(ExperimentSpec())`` doubles as the
documentation of all defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .drp import DrpConfig, Mode
from .fbp import FilterKind
from .iterative import IterConfig
from .network import NetConfig
from .phantoms import KINDS, Phantom
from .projector import Geometry, default_detector_count

__all__ = [
    "METHODS",
    "ConfigError",
    "ExperimentSpec",
    "parse_config",
    "parse_config_text",
    "emit_config",
]

METHODS = ("fbp", "gd", "admmtv", "drp", "single_stage", "undip_fixed", "undip_normal")
DRP_METHODS = {
    "drp": Mode.DRP,
    "single_stage": Mode.SINGLE_STAGE,
    "undip_fixed": Mode.UNDIP_FIXED_INPUT,
    "undip_normal": Mode.UNDIP_NORMAL_OP,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    phantom: Phantom = field(default_factory=Phantom)
    geometry: Geometry = field(default_factory=lambda: Geometry(64, 30))
    methods: tuple[str, ...] = ("fbp", "drp")
    views_list: tuple[int, ...] = (30,)
    noise: float = 0.0
    output_dir: str = "recon_out"
    seed: int = 0
    fbp_filter: FilterKind = FilterKind.RAM_LAK
    gd: IterConfig = field(default_factory=lambda: IterConfig(max_iters=1000))
    admmtv: IterConfig = field(default_factory=lambda: IterConfig(max_iters=1000))
    tv_grid: tuple[float, ...] = (0.003, 0.01, 0.03, 0.1, 0.3)
    drp: DrpConfig = field(default_factory=DrpConfig)

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        if not self.views_list or min(self.views_list) < 2:
            raise ConfigError(f"view counts must be >= 2, got {self.views_list}")
        if self.noise < 0:
            raise ConfigError(f"noise must be >= 0, got {self.noise}")
        if self.geometry.image_size != self.phantom.size:
            raise ConfigError(f"geometry image_size {self.geometry.image_size} != "
                              f"phantom size {self.phantom.size}")


# -- value parsers ---------------------------------------------------------

def _int(v: str) -> int:
    return int(v)


def _float(v: str) -> float:
    return float(v)


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _list(item):
    def parse(v: str):
        return tuple(item(part.strip()) for part in v.split(",") if part.strip())
    return parse


def _str(v: str) -> str:
    return v


def _at_least(lo, parse=_int):
    def check(v: str):
        value = parse(v)
        if value < lo:
            raise ValueError(f"must be >= {lo}, got {value}")
        return value
    return check


def _positive(parse=_float):
    def check(v: str):
        value = parse(v)
        if not value > 0:
            raise ValueError(f"must be > 0, got {value}")
        return value
    return check


def _choice(options):
    def check(v: str):
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}, got {v!r}")
        return v
    return check


SCHEMA = {
    "experiment": {
        "seed": _int,
        "output_dir": _str,
        "views": _list(_at_least(2)),
        "noise": _at_least(0.0, _float),
        "methods": _list(_choice(METHODS)),
    },
    "phantom": {
        "kind": _choice(KINDS),
        "size": _at_least(16),
        "path": _str,
    },
    "geometry": {
        "num_views": _at_least(2),
        "num_detectors": _at_least(1),
        "detector_spacing": _positive(),
        "detector_offset": _float,
    },
    "fbp": {"filter": _choice([k.value for k in FilterKind])},
    "gd": {
        "max_iters": _at_least(1),
        "step_beta": _positive(),
        "nonneg": _bool,
        "tol": _at_least(0.0, _float),
    },
    "admmtv": {
        "max_iters": _at_least(1),
        "tv_weight": _at_least(0.0, _float),
        "admm_rho": _positive(),
        "inner_steps": _at_least(1),
        "nonneg": _bool,
        "tol": _at_least(0.0, _float),
        "tv_grid": _list(_at_least(0.0, _float)),
    },
    "drp": {
        "epochs": _at_least(1),
        "inner_iters": _at_least(1),
        "step_beta": _at_least(0.0, _float),
        "lr": _positive(),
        "channels": _list(_at_least(1)),
        "kernel_size": _at_least(1),
        "skip_connections": _bool,
        "init_std": _positive(),
        "log_every": _at_least(0),
        "dtype": _choice(("float64", "float32")),
        "spike_factor": _at_least(0.0, _float),
    },
}


def _read(text: str) -> dict[tuple[str, str], tuple[str, int]]:
    raw = {}
    section = "experiment"
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].rstrip()
        stripped = body.strip()
        if not stripped:
            continue
        col = len(body) - len(body.lstrip()) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError(f"line {lineno}, column {col}: unterminated section header")
            section = stripped[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"line {lineno}, column {col}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}, column {col}: expected 'key = value'")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}, column {col}: missing key before '='")
        if key not in SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        raw[(section, key)] = (value, lineno)
    return raw


def parse_config_text(text: str, overrides: dict[str, str] | None = None) -> ExperimentSpec:
    """Build a spec from config text; ``overrides`` maps ``"section.key"`` to a value."""
    raw = _read(text)
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.rpartition(".")
        section = section or "experiment"
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown override {dotted!r}")
        raw[(section, key)] = (str(value), 0)

    values: dict[str, dict] = {s: {} for s in SCHEMA}
    for (section, key), (value, lineno) in raw.items():
        where = f"line {lineno}: " if lineno else "override: "
        try:
            values[section][key] = SCHEMA[section][key](value)
        except ValueError as exc:
            raise ConfigError(f"{where}{section}.{key}: {exc}") from None
    try:
        return _build(values)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def parse_config(path, overrides: dict[str, str] | None = None) -> ExperimentSpec:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config_text(path.read_text(encoding="utf-8"), overrides)


def _build(v: dict[str, dict]) -> ExperimentSpec:
    base = ExperimentSpec()
    ex, ph, ge, fb = v["experiment"], v["phantom"], v["geometry"], v["fbp"]

    phantom = Phantom(kind=ph.get("kind", base.phantom.kind),
                      size=ph.get("size", base.phantom.size),
                      path=ph.get("path") or None)
    num_views = ge.get("num_views", base.geometry.num_views)
    views = ex.get("views") or (num_views,)
    geometry = Geometry(
        image_size=phantom.size,
        num_views=num_views,
        num_detectors=ge.get("num_detectors", default_detector_count(phantom.size)),
        detector_spacing=ge.get("detector_spacing", 1.0),
        detector_offset=ge.get("detector_offset", 0.0),
    )
    tv_grid = v["admmtv"].pop("tv_grid", base.tv_grid)
    gd = replace(base.gd, **v["gd"])
    admmtv = replace(base.admmtv, **v["admmtv"])

    dv = dict(v["drp"])
    net_keys = {f.name for f in fields(NetConfig)}
    net = replace(base.drp.net, **{k: dv.pop(k) for k in list(dv) if k in net_keys})
    seed = ex.get("seed", base.seed)
    drp = replace(base.drp, net=net, seed=seed, **dv)

    return ExperimentSpec(
        phantom=phantom,
        geometry=geometry,
        methods=ex.get("methods", base.methods),
        views_list=tuple(views),
        noise=ex.get("noise", base.noise),
        output_dir=ex.get("output_dir", base.output_dir),
        seed=seed,
        fbp_filter=FilterKind(fb.get("filter", base.fbp_filter.value)),
        gd=gd,
        admmtv=admmtv,
        tv_grid=tuple(tv_grid),
        drp=drp,
    )


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(x) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(spec: ExperimentSpec) -> str:
    """Serialise ``spec`` so that :func:`parse_config_text` reproduces it."""
    g, d = spec.geometry, spec.drp
    sections = {
        "experiment": {
            "seed": spec.seed,
            "output_dir": spec.output_dir,
            "views": spec.views_list,
            "noise": spec.noise,
            "methods": spec.methods,
        },
        "phantom": {"kind": spec.phantom.kind, "size": spec.phantom.size,
                    "path": spec.phantom.path or ""},
        "geometry": {"num_views": g.num_views, "num_detectors": g.num_detectors,
                     "detector_spacing": g.detector_spacing,
                     "detector_offset": g.detector_offset},
        "fbp": {"filter": spec.fbp_filter.value},
        "gd": {k: getattr(spec.gd, k) for k in SCHEMA["gd"]},
        "admmtv": {**{k: getattr(spec.admmtv, k) for k in SCHEMA["admmtv"] if k != "tv_grid"},
                   "tv_grid": spec.tv_grid},
        "drp": {"epochs": d.epochs, "inner_iters": d.inner_iters, "step_beta": d.step_beta,
                "lr": d.lr, "channels": d.net.channels, "kernel_size": d.net.kernel_size,
                "skip_connections": d.net.skip_connections, "init_std": d.net.init_std,
                "log_every": d.log_every, "dtype": d.dtype, "spike_factor": d.spike_factor},
    }
    lines = []
    for name, entries in sections.items():
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {_fmt(value)}" for key, value in entries.items())
        lines.append("")
    return "\n".join(lines)
