"""Run configuration: flat ``key = value`` text in ``[section]`` blocks.

Every key is declared in :data:`SCHEMA` with its type, default and an
optional range check.  Unknown sections or keys are rejected.
:func:`dumps` writes every key in schema order, so
``dumps(loads(text))`` is a fixed point.
"""

import configparser
import math
from dataclasses import dataclass

from .nonlinearity import VARIANTS


class ConfigError(ValueError):
    pass


SHAPES = ("figure1", "limacon", "ellipse", "circle", "bean", "two_concavity", "flat_side")


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


@dataclass(frozen=True)
class Key:
    type: type
    default: object
    check: object = None
    help: str = ""
    choices: tuple = ()


SCHEMA = {
    "curve": {
        "file": Key(str, "", help="curve file (harmonic rows); overrides shape"),
        "shape": Key(str, "figure1", choices=SHAPES),
        "param": Key(float, math.nan, help="shape parameter; nan = shape default"),
    },
    "sinogram": {
        "n_phi": Key(int, 720, lambda v: v >= 2),
        "n_s": Key(int, 0, lambda v: v == 0 or v >= 2, "0 = cover the image at one sample per pixel"),
        "s_max": Key(float, 0.0, _nonneg, "0 = r * sqrt(2)"),
    },
    "image": {
        "n": Key(int, 512, lambda v: v >= 8),
        "r": Key(float, 1.5, _positive),
    },
    "nonlinearity": {
        "variant": Key(str, "quadratic", choices=VARIANTS),
        "eps": Key(float, 1.0, _positive),
        "a": Key(float, 1.0),
        "alpha": Key(float, 1.0, _positive),
        "table": Key(str, "", help="two-column CSV x,y for the table variant"),
        "mode": Key(str, "artifact", choices=("artifact", "full")),
        "window": Key(str, "none", choices=("none", "hann")),
    },
    "score": {
        "quantile": Key(float, 0.99, lambda v: 0 < v < 1),
        "tube_radius": Key(float, 3.0, lambda v: v >= 1),
    },
    "cusp": {
        "rho": Key(float, 3.0, lambda v: v > 2),
        "eps": Key(float, 0.08, _positive),
        "n": Key(int, 8192, lambda v: v >= 2048 and v & (v - 1) == 0),
        "dxi1": Key(float, 0.5, _positive),
        "dxi2": Key(float, 0.125, _positive),
        "width": Key(float, 1.0, _positive),
        "cone": Key(float, 1.5, _positive),
        "fit_lo": Key(float, 20.0, _positive),
        "fit_hi": Key(float, 200.0, _positive),
        "radius": Key(float, 5.0, _positive),
        "far_x1": Key(float, 0.0),
        "far_x2": Key(float, -20.0),
    },
    "run": {
        "seed": Key(int, 0, _nonneg),
    },
    "verify": {
        "n": Key(int, 256, lambda v: v >= 32),
        "roundtrips": Key(int, 10000, _positive),
        "roundtrip_tol": Key(float, 1e-12, _positive),
        "tangency_tol": Key(float, 1e-9, _positive),
        "disk_tol": Key(float, 2.0, _positive, "max error in units of ds"),
        "normal_tol": Key(float, 0.02, _positive),
        "c_digits": Key(int, 3, _positive),
        "parseval_tol": Key(float, 1e-10, _positive),
    },
}


def defaults():
    return {sec: {k: spec.default for k, spec in keys.items()} for sec, keys in SCHEMA.items()}


def _convert(section, key, raw):
    spec = SCHEMA[section][key]
    try:
        if spec.type is int:
            val = int(raw)
        elif spec.type is float:
            val = float(raw)
        else:
            val = raw.strip()
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {spec.type.__name__}") from None
    if spec.choices and val not in spec.choices:
        raise ConfigError(f"{section}.{key}: {val!r} not one of {', '.join(spec.choices)}")
    if spec.check is not None and not (isinstance(val, float) and math.isnan(val)) and not spec.check(val):
        raise ConfigError(f"{section}.{key}: value {val!r} out of range")
    return val


def set_value(cfg, dotted, raw):
    section, _, key = dotted.partition(".")
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise ConfigError(f"unknown key {dotted!r}")
    cfg[section][key] = _convert(section, key, raw)


def loads(text):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).replace("\n", " ")) from None
    cfg = defaults()
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            cfg[section][key] = _convert(section, key, raw)
    return cfg


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return loads(text)


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def dumps(cfg):
    out = []
    for section, keys in SCHEMA.items():
        out.append(f"[{section}]")
        out += [f"{k} = {_fmt(cfg[section][k])}" for k in keys]
        out.append("")
    return "\n".join(out)
