"""Experiment configuration: TOML in, fully resolved and validated dict out.

A config file has optional top-level ``name`` and ``seed`` keys and the
sections below. Every key is optional; missing keys take the defaults in
:data:`DEFAULTS`. Unknown keys and non-finite numbers are rejected, and error
messages name the offending field as ``section.key``.

    [surface]         f = [[j, k, "cc"|"cs"|"sc"|"ss", coefficient], ...]
    [intensity]       terms = [[k, "cos"|"sin", j, l, tag, coefficient], ...]
    [gauge]           kind = "zero"|"scaled"|"custom", factor, terms (custom)
    [integrator]      rel_tol, abs_tol, max_step (0 means unlimited)
    [orbit] [cocycle] [curvature_scan] [conjugate_scan] [green_scan]
    [lyapunov] [domination] [hopf]   per-subcommand settings
"""
import copy
import hashlib
from importlib import resources
import json
import math
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .geometry import BASIS_TAGS, ConformalTorus, FourierField2, PhasePoint
from .model import GaugeSpec, IntensityModel

HALF_PI = 0.5 * math.pi

DEFAULTS = {
    "name": "",
    "seed": 0,
    "surface": {"f": []},
    "intensity": {"terms": []},
    "gauge": {"kind": "zero", "factor": 0.0, "terms": []},
    "integrator": {"rel_tol": 1e-9, "abs_tol": 1e-11, "max_step": 0.0},
    "orbit": {"initial": [0.0, 0.0, HALF_PI], "t_min": 0.0, "t_max": 10.0, "samples": 101},
    "cocycle": {"initial": [0.0, 0.0, HALF_PI], "covector": [1.0, 0.0], "t_min": -5.0,
                "t_max": 5.0, "samples": 41},
    "curvature_scan": {"grid": [32, 32, 32]},
    "conjugate_scan": {"count": 20, "t_max": 40.0},
    "green_scan": {"grid": [16, 16, 16], "schedule": [2.0, 4.0, 8.0, 16.0, 32.0], "tol": 1e-8},
    "lyapunov": {"initial": [0.0, 0.0, HALF_PI], "covector": [], "t_max": 30.0, "renorm": 1.0,
                 "horizon": 32.0},
    "domination": {"samples": 10, "t_max": 20, "horizon": 32.0},
    "hopf": {"grid": [32, 32, 32]},
}


class ConfigError(ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------- checks

def _number(value, field, positive=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(field, "must be finite")
    if positive and value <= 0:
        raise ConfigError(field, f"must be positive, got {value!r}")
    if nonneg and value < 0:
        raise ConfigError(field, f"must be non-negative, got {value!r}")
    return value


def _integer(value, field, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise ConfigError(field, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(field, f"must be at least {minimum}, got {value}")
    return int(value)


def _vector(value, field, length):
    if not isinstance(value, list) or len(value) != length:
        raise ConfigError(field, f"expected a list of {length} numbers")
    return [_number(v, f"{field}[{i}]") for i, v in enumerate(value)]


def _grid(value, field, minimum):
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError(field, "expected three grid sizes")
    return [_integer(v, f"{field}[{i}]", minimum) for i, v in enumerate(value)]


def _surface_terms(value, field):
    if not isinstance(value, list):
        raise ConfigError(field, "expected a list of [j, k, tag, coefficient]")
    out = []
    for i, term in enumerate(value):
        f = f"{field}[{i}]"
        if not isinstance(term, list) or len(term) != 4:
            raise ConfigError(f, "expected [j, k, tag, coefficient]")
        j, k, tag, c = term
        if tag not in BASIS_TAGS:
            raise ConfigError(f, f"basis tag must be one of {BASIS_TAGS}, got {tag!r}")
        out.append([_integer(j, f, 0), _integer(k, f, 0), tag, _number(c, f)])
    return out


def _intensity_terms(value, field):
    if not isinstance(value, list):
        raise ConfigError(field, "expected a list of [k, cos|sin, j, l, tag, coefficient]")
    out = []
    for i, term in enumerate(value):
        f = f"{field}[{i}]"
        if not isinstance(term, list) or len(term) != 6:
            raise ConfigError(f, "expected [k, cos|sin, j, l, tag, coefficient]")
        k, trig, j, l, tag, c = term
        if trig not in ("cos", "sin"):
            raise ConfigError(f, f"theta basis must be 'cos' or 'sin', got {trig!r}")
        if tag not in BASIS_TAGS:
            raise ConfigError(f, f"basis tag must be one of {BASIS_TAGS}, got {tag!r}")
        out.append([_integer(k, f, 0), trig, _integer(j, f, 0), _integer(l, f, 0), tag,
                    _number(c, f)])
    return out


def _schedule(value, field):
    if not isinstance(value, list) or not value:
        raise ConfigError(field, "expected a non-empty list of horizons")
    out = [_number(v, f"{field}[{i}]", positive=True) for i, v in enumerate(value)]
    if out != sorted(out):
        raise ConfigError(field, "horizons must increase")
    return out


_VALIDATORS = {
    ("surface", "f"): _surface_terms,
    ("intensity", "terms"): _intensity_terms,
    ("gauge", "terms"): _intensity_terms,
    ("gauge", "factor"): lambda v, f: _number(v, f),
    ("integrator", "rel_tol"): lambda v, f: _number(v, f, positive=True),
    ("integrator", "abs_tol"): lambda v, f: _number(v, f, positive=True),
    ("integrator", "max_step"): lambda v, f: _number(v, f, nonneg=True),
    ("orbit", "initial"): lambda v, f: _vector(v, f, 3),
    ("orbit", "t_min"): lambda v, f: _number(v, f),
    ("orbit", "t_max"): lambda v, f: _number(v, f),
    ("orbit", "samples"): lambda v, f: _integer(v, f, 2),
    ("cocycle", "initial"): lambda v, f: _vector(v, f, 3),
    ("cocycle", "covector"): lambda v, f: _vector(v, f, 2),
    ("cocycle", "t_min"): lambda v, f: _number(v, f),
    ("cocycle", "t_max"): lambda v, f: _number(v, f),
    ("cocycle", "samples"): lambda v, f: _integer(v, f, 2),
    ("curvature_scan", "grid"): lambda v, f: _grid(v, f, 1),
    ("conjugate_scan", "count"): lambda v, f: _integer(v, f, 1),
    ("conjugate_scan", "t_max"): lambda v, f: _number(v, f, positive=True),
    ("green_scan", "grid"): lambda v, f: _grid(v, f, 1),
    ("green_scan", "schedule"): _schedule,
    ("green_scan", "tol"): lambda v, f: _number(v, f, positive=True),
    ("lyapunov", "initial"): lambda v, f: _vector(v, f, 3),
    ("lyapunov", "covector"): lambda v, f: [] if v == [] else _vector(v, f, 2),
    ("lyapunov", "t_max"): lambda v, f: _number(v, f, positive=True),
    ("lyapunov", "renorm"): lambda v, f: _number(v, f, positive=True),
    ("lyapunov", "horizon"): lambda v, f: _number(v, f, positive=True),
    ("domination", "samples"): lambda v, f: _integer(v, f, 1),
    ("domination", "t_max"): lambda v, f: _integer(v, f, 2),
    ("domination", "horizon"): lambda v, f: _number(v, f, positive=True),
    ("hopf", "grid"): lambda v, f: _grid(v, f, 4),
}


def _gauge_kind(value, field):
    if value not in ("zero", "scaled", "custom"):
        raise ConfigError(field, f"must be 'zero', 'scaled' or 'custom', got {value!r}")
    return value


def resolve(raw):
    """Merge ``raw`` over the defaults and validate every field."""
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a table")
    cfg = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if key not in DEFAULTS:
            raise ConfigError(key, "unknown key")
        if key == "name":
            if not isinstance(value, str):
                raise ConfigError("name", "expected a string")
            cfg["name"] = value
            continue
        if key == "seed":
            cfg["seed"] = _integer(value, "seed", 0)
            continue
        if not isinstance(value, dict):
            raise ConfigError(key, "expected a table")
        for sub, v in value.items():
            field = f"{key}.{sub}"
            if sub not in DEFAULTS[key]:
                raise ConfigError(field, "unknown key")
            if (key, sub) == ("gauge", "kind"):
                cfg[key][sub] = _gauge_kind(v, field)
            else:
                cfg[key][sub] = _VALIDATORS[(key, sub)](v, field)
    g = cfg["gauge"]
    if g["kind"] == "custom" and not g["terms"]:
        raise ConfigError("gauge.terms", "a custom gauge needs at least one term")
    if cfg["orbit"]["t_min"] > 0 or cfg["orbit"]["t_max"] < 0:
        raise ConfigError("orbit.t_min", "the span [t_min, t_max] must contain 0")
    if cfg["cocycle"]["t_min"] > 0 or cfg["cocycle"]["t_max"] < 0:
        raise ConfigError("cocycle.t_min", "the span [t_min, t_max] must contain 0")
    if cfg["integrator"]["abs_tol"] > 1.0:
        raise ConfigError("integrator.abs_tol", "must not exceed 1")
    if cfg["integrator"]["rel_tol"] >= 1.0:
        raise ConfigError("integrator.rel_tol", "must be below 1")
    return cfg


def load(path):
    """Read a TOML config, a JSON config, or a JSON run summary (its "config" key)."""
    path = str(path)
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    if path.endswith(".json"):
        try:
            raw = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if isinstance(raw, dict) and "config" in raw and "version" in raw:
            raw = raw["config"]
    else:
        try:
            raw = tomllib.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError("config", f"invalid TOML: {exc}") from None
    return resolve(raw)


BUNDLED = ("S1", "S2", "S3")


def bundled_path(name):
    if name not in BUNDLED:
        raise KeyError(f"no bundled config named {name!r}; choose from {BUNDLED}")
    return resources.files("thermolab") / "configs" / f"{name.lower()}.toml"


def load_bundled(name):
    return resolve(tomllib.loads(bundled_path(name).read_text(encoding="utf-8")))


def canonical_json(cfg):
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg):
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------- builders

def build_surface(cfg):
    terms = cfg["surface"]["f"]
    return ConformalTorus(FourierField2.from_terms(terms) if terms else FourierField2.zero())


def build_model(cfg):
    terms = cfg["intensity"]["terms"]
    return IntensityModel.from_terms(terms) if terms else IntensityModel.zero()


def build_gauge(cfg):
    g = cfg["gauge"]
    if g["kind"] == "zero":
        return GaugeSpec.zero()
    if g["kind"] == "scaled":
        return GaugeSpec.scaled(g["factor"])
    return GaugeSpec.custom_series(IntensityModel.from_terms(g["terms"]))


def build_system(cfg):
    """(surface, intensity) described by ``cfg``."""
    return build_surface(cfg), build_model(cfg)


def build_point(values):
    return PhasePoint(*values)


def integrator_options(cfg):
    i = cfg["integrator"]
    return {"rel_tol": i["rel_tol"], "abs_tol": i["abs_tol"],
            "max_step": i["max_step"] if i["max_step"] > 0 else math.inf}
