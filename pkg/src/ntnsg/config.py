"""Key-value run configuration with explicit units.

Files are INI-style (``[section]`` then ``key = value``). Quantities take a
unit suffix (``20000 km``, ``18 dBW``, ``1.575 GHz``, ``53 deg``) and are
stored in canonical units: km for lengths, W for power, linear gain, Hz,
radians. :meth:`Config.to_text` writes canonical units with ``repr``
floats, so parse -> serialize -> parse is exact.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field

from .engine import MetricConfig
from .fading import FADING_TYPES, MixedLognormal, Nakagami, NoFading, PointingError, Rician, ShadowedRician
from .geometry import R_EARTH_KM
from .link import PATTERN_TYPES, LinkParams
from .processes import CPP, DSBPP, OGM, PLP, PROCESS_TYPES, HomBPP, HomPPP, NonHomBPP


class ConfigError(ValueError):
    """Bad configuration; ``line`` and ``field`` locate the problem when known."""

    def __init__(self, message, *, field=None, line=None, source=None):
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field {field}")
        super().__init__(f"{': '.join([', '.join(where), message]) if where else message}")
        self.field = field
        self.line = line
        self.source = source


# -- units ------------------------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf"
_QTY = re.compile(rf"^\s*({_NUM})\s*([A-Za-z]*)\s*$")

_LINEAR_UNITS = {
    "length": {"km": 1.0, "m": 1e-3, "": 1.0},
    "power": {"W": 1.0, "mW": 1e-3, "": 1.0},
    "freq": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "": 1.0},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0, "": 1.0},
    "gain": {"": 1.0},
}
_DB_UNITS = {
    "power": {"dBW": 0.0, "dBm": -30.0},
    "gain": {"dB": 0.0, "dBi": 0.0},
}
CANONICAL = {"length": "km", "power": "W", "freq": "Hz", "angle": "rad", "gain": ""}


def parse_quantity(text: str, kind: str) -> float:
    m = _QTY.match(str(text))
    if not m:
        raise ValueError(f"cannot parse {text!r} as a {kind}")
    value, unit = float(m.group(1)), m.group(2)
    if unit in _LINEAR_UNITS[kind]:
        if kind == "angle" and unit == "deg":
            return math.radians(value)
        return value * _LINEAR_UNITS[kind][unit]
    if unit in _DB_UNITS.get(kind, {}):
        return 10.0 ** ((value + _DB_UNITS[kind][unit]) / 10.0)
    allowed = sorted(set(_LINEAR_UNITS[kind]) | set(_DB_UNITS.get(kind, {})) - {""})
    raise ValueError(f"unit {unit!r} not valid for a {kind}; use one of {allowed}")


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"cannot parse {text!r} as a boolean")


def _parse_scalar(text, kind):
    if kind == "int":
        try:
            return int(str(text).strip())
        except ValueError:
            f = float(text)  # accept "1e5"-style integral values
            if not math.isfinite(f) or f != int(f):
                raise ValueError(f"expected an integer, got {text!r}") from None
            return int(f)
    if kind == "float":
        return float(text)
    if kind == "bool":
        return _parse_bool(text)
    if kind == "str":
        return str(text).strip()
    return parse_quantity(text, kind)


def parse_value(text, kind):
    if kind.endswith("[]"):
        base = kind[:-2]
        parts = [p for p in re.split(r"[,\s]+", str(text).strip()) if p] if base in ("int", "float", "str") \
            else [p.strip() for p in str(text).split(",") if p.strip()]
        return tuple(_parse_scalar(p, base) for p in parts)
    return _parse_scalar(text, kind)


def format_value(value, kind) -> str:
    if kind.endswith("[]"):
        return ", ".join(format_value(v, kind[:-2]) for v in value)
    if kind == "bool":
        return "true" if value else "false"
    if kind == "int":
        return str(int(value))
    if kind == "str":
        return str(value)
    text = repr(float(value))
    unit = CANONICAL.get(kind, "")
    return f"{text} {unit}" if unit else text


# -- schema -----------------------------------------------------------------

SCHEMA = {
    "run": {"seed": "int", "trials": "int", "threads": "int", "chunk_size": "int"},
    "process": {
        "model": "str", "count": "int", "mean_count": "float", "mean_orbits": "float",
        "mean_sats_per_orbit": "float", "orbits": "int", "sats_per_orbit": "int", "total": "int",
        "inclination": "angle", "sats": "int", "equal_spacing": "bool", "altitude": "length",
        "r_earth": "length",
    },
    "link": {
        "tx_power": "power", "g_tx": "gain", "g_rx": "gain", "carrier_freq": "freq",
        "extra_atten": "gain", "pathloss_exp": "float", "noise_power": "power", "sinr_threshold": "gain",
    },
    "fading": {
        "model": "str", "m": "float", "omega": "float", "b0": "float", "approx": "bool", "tol": "float",
        "k": "float", "a0": "float", "eta_s": "float", "sigma_jitter": "angle", "normalized": "bool",
        "mu_los": "float", "sigma_los": "float", "mu_nlos": "float", "sigma_nlos": "float", "beta": "float",
    },
    "metric": {
        "association": "str", "visibility": "bool", "k": "int", "interference": "str", "subset": "str",
        "elevation_mask": "angle", "user_polar": "angle", "user_azimuth": "angle", "alignment": "str",
    },
    "pattern": {"model": "str", "g_max": "gain", "half_power_bw": "angle"},
    "topology": {
        "association": "str", "d_max": "length", "k_values": "int[]", "grid_points": "int",
        "empirical": "bool", "samples": "int",
    },
    "study": {
        "kind": "str", "n_ntp": "int", "altitudes": "length[]", "cap_angle_grid_deg": "float[]",
        "cap_angle_mode": "str", "threshold_pct": "float", "sat_counts": "int[]", "k_values": "int[]",
        "sats_per_orbit": "int", "subset": "str", "elevation_mask": "angle", "interference": "str",
    },
}


@dataclass
class Config:
    values: dict = field(default_factory=dict)  # {section: {key: parsed value}}
    source: str | None = None

    def get(self, section, key, default=None):
        return self.values.get(section, {}).get(key, default)

    def has(self, section, key=None):
        if key is None:
            return section in self.values
        return key in self.values.get(section, {})

    def section(self, name) -> dict:
        return dict(self.values.get(name, {}))

    def set(self, section, key, value, *, from_text=False):
        kind = _kind(section, key)
        if from_text:
            try:
                value = parse_value(value, kind)
            except ValueError as exc:
                raise ConfigError(str(exc), field=f"{section}.{key}") from None
        self.values.setdefault(section, {})[key] = value
        return self

    def merged(self, overrides: dict) -> "Config":
        """New config with ``{(section, key): value}`` applied on top (flags win over file)."""
        out = Config({s: dict(v) for s, v in self.values.items()}, self.source)
        for (s, k), v in overrides.items():
            if v is not None:
                out.set(s, k, v)
        return out

    def to_text(self) -> str:
        lines = []
        for sec in SCHEMA:
            if sec not in self.values:
                continue
            lines.append(f"[{sec}]")
            for key in SCHEMA[sec]:
                if key in self.values[sec]:
                    lines.append(f"{key} = {format_value(self.values[sec][key], SCHEMA[sec][key])}")
            lines.append("")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {s: {k: (list(v) if isinstance(v, tuple) else v) for k, v in kv.items()}
                for s, kv in self.values.items()}


def _kind(section, key):
    if section not in SCHEMA:
        raise ConfigError(f"unknown section [{section}]; valid sections: {', '.join(SCHEMA)}")
    if key not in SCHEMA[section]:
        raise ConfigError(f"unknown key; valid keys: {', '.join(SCHEMA[section])}", field=f"{section}.{key}")
    return SCHEMA[section][key]


def _line_numbers(text):
    out, sec = {}, None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            sec = m.group(1).strip()
        elif sec and "=" in line and not line.startswith(("#", ";")):
            out[(sec, line.split("=", 1)[0].strip())] = i
    return out


def parse_config(text: str, source=None) -> Config:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(source or "<config>"))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(exc.message if hasattr(exc, "message") else str(exc), line=line, source=source) from None
    lines = _line_numbers(text)
    cfg = Config(source=str(source) if source else None)
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]; valid sections: {', '.join(SCHEMA)}",
                              line=lines.get((sec, next(iter(cp[sec]), "")), None), source=source)
        for key, raw in cp[sec].items():
            line = lines.get((sec, key))
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key; valid keys: {', '.join(SCHEMA[sec])}",
                                  field=f"{sec}.{key}", line=line, source=source)
            try:
                cfg.values.setdefault(sec, {})[key] = parse_value(raw, SCHEMA[sec][key])
            except ValueError as exc:
                raise ConfigError(str(exc), field=f"{sec}.{key}", line=line, source=source) from None
    return cfg


def load_config(path) -> Config:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=path)


# -- builders ---------------------------------------------------------------

SR_DEFAULTS = {"omega": 1.29, "b0": 0.158, "m": 19.4}


def _require(cfg, section, key):
    if not cfg.has(section, key):
        raise ConfigError("missing required value", field=f"{section}.{key}", source=cfg.source)
    return cfg.get(section, key)


def _wrap(fn, section, cfg):
    try:
        return fn()
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), field=section, source=cfg.source) from None


def build_spec(cfg: Config):
    model = _require(cfg, "process", "model")
    g = lambda k: _require(cfg, "process", k)  # noqa: E731

    def make():
        if model == "hom-bpp":
            return HomBPP(g("count"))
        if model == "hom-ppp":
            return HomPPP(g("mean_count"))
        if model == "nonhom-bpp":
            return NonHomBPP(g("count"))
        if model == "cpp":
            return CPP(g("mean_orbits"), g("mean_sats_per_orbit"))
        if model == "dsbpp":
            if cfg.has("process", "total"):
                return DSBPP.from_total(g("total"), cfg.get("process", "sats_per_orbit", 4))
            return DSBPP(g("orbits"), g("sats_per_orbit"))
        if model == "ogm":
            return OGM(g("orbits"), g("inclination"), g("sats_per_orbit"),
                       cfg.get("process", "equal_spacing", False))
        if model == "plp":
            return PLP(g("inclination"), g("sats"))
        raise ConfigError(f"unknown model {model!r}; valid models: {', '.join(PROCESS_TYPES)}",
                          field="process.model", source=cfg.source)

    return _wrap(make, "process", cfg)


def shell_radius(cfg: Config) -> float:
    return r_earth(cfg) + _require(cfg, "process", "altitude")


def r_earth(cfg: Config) -> float:
    return cfg.get("process", "r_earth", R_EARTH_KM)


def build_link(cfg: Config) -> LinkParams:
    base = LinkParams.meo_downlink()
    kw = {k: v for k, v in cfg.section("link").items()}
    return _wrap(lambda: LinkParams(**{**base.__dict__, **kw}), "link", cfg)


def build_fading(cfg: Config):
    sec = cfg.section("fading")
    model = sec.pop("model", "none")

    def make():
        if model == "none":
            return NoFading()
        if model == "nakagami":
            return Nakagami(**sec)
        if model == "sr":
            return ShadowedRician(**{**SR_DEFAULTS, **sec})
        if model == "rician":
            return Rician(**sec)
        if model == "pointing":
            return PointingError(**sec)
        if model == "mixed-lognormal":
            return MixedLognormal(**sec)
        raise ConfigError(f"unknown fading model {model!r}; valid models: {', '.join(FADING_TYPES)}",
                          field="fading.model", source=cfg.source)

    return _wrap(make, "fading", cfg)


def build_pattern(cfg: Config):
    if not cfg.has("pattern"):
        return None
    sec = cfg.section("pattern")
    model = sec.pop("model", None)
    if model not in PATTERN_TYPES:
        raise ConfigError(f"unknown pattern {model!r}; valid: {', '.join(PATTERN_TYPES)}",
                          field="pattern.model", source=cfg.source)
    return _wrap(lambda: PATTERN_TYPES[model](**sec), "pattern", cfg)


def build_metric_config(cfg: Config, threads=None) -> MetricConfig:
    run, met = cfg.section("run"), cfg.section("metric")
    kw = {k: run[k] for k in ("trials", "seed", "chunk_size") if k in run}
    kw.update(met)
    kw["threads"] = threads if threads is not None else run.get("threads")
    kw["tx_pattern"] = build_pattern(cfg)
    return _wrap(lambda: MetricConfig(**kw), "metric", cfg)


def build_planar_study(cfg: Config):
    from .studies import PlanarStudyConfig

    st, run = cfg.section("study"), cfg.section("run")
    kw = {}
    for key in ("n_ntp", "altitudes", "cap_angle_mode", "threshold_pct"):
        if key in st:
            kw[key] = st[key]
    if "cap_angle_grid_deg" in st:
        kw["cap_angle_grid"] = st["cap_angle_grid_deg"]
    for key in ("trials", "seed"):
        if key in run:
            kw[key] = run[key]
    kw["r_earth"] = r_earth(cfg)
    return _wrap(lambda: PlanarStudyConfig(**kw), "study", cfg)


def build_localizability_study(cfg: Config, threads=None):
    from .studies import LocalizabilityStudyConfig

    st, run = cfg.section("study"), cfg.section("run")
    kw = {}
    for key in ("sat_counts", "altitudes", "k_values", "sats_per_orbit", "subset", "elevation_mask", "interference"):
        if key in st:
            kw[key] = st[key]
    for key in ("trials", "seed", "chunk_size"):
        if key in run:
            kw[key] = run[key]
    if cfg.has("link"):
        kw["link"] = build_link(cfg)
    if cfg.has("fading"):
        fad = build_fading(cfg)
        if not isinstance(fad, ShadowedRician):
            raise ConfigError("the localizability study uses shadowed-Rician fading", field="fading.model",
                              source=cfg.source)
        kw["sr"] = fad
    kw["threads"] = threads if threads is not None else run.get("threads")
    kw["r_earth"] = r_earth(cfg)
    return _wrap(lambda: LocalizabilityStudyConfig(**kw), "study", cfg)
