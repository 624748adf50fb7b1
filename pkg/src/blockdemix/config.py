"""INI-style experiment configuration with fail-fast key checking.

Sections and keys (all optional; defaults are the desk-scale fixture)::

    [experiment]  algorithms, m_grid, trials, success_threshold, seed, link,
                  output_dir, timing, dst_lambdas
    [signal]      n, s, b, noise_sigma
    [design]      family, scale, phi, psi, k, T, b_exponent
    [solver]      eta_prime, max_iters, tol, init
    [tone]        omega_max, resolution, radius, refine

``m_grid`` is a comma-separated list or ``linspace(lo, hi, steps)``.
"""

import configparser
import re

from .errors import ConfigError
from .experiments import ExperimentConfig, desk_config, m_grid_linspace

_SCHEMA = {
    "experiment": {
        "algorithms": ("algorithms", "list"),
        "m_grid": ("m_grid", "grid"),
        "trials": ("trials", int),
        "success_threshold": ("success_threshold", float),
        "seed": ("seed", int),
        "link": ("link_name", str),
        "output_dir": ("output_dir", str),
        "timing": ("timing", "bool"),
        "dst_lambdas": ("dst_lambdas", "floats"),
    },
    "signal": {
        "n": ("n", int),
        "s": ("s", int),
        "b": ("b", int),
        "noise_sigma": ("noise_sigma", float),
    },
    "design": {
        "family": ("family", str),
        "scale": ("design_scale", "optfloat"),
        "phi": ("phi", str),
        "psi": ("psi", str),
        "k": ("k", int),
        "t": ("T", float),
        "b_exponent": ("b_exponent", float),
    },
    "solver": {
        "eta_prime": ("eta_prime", "optfloat"),
        "max_iters": ("max_iters", int),
        "tol": ("tol", float),
        "init": ("init", str),
    },
    "tone": {
        "omega_max": ("omega_max", "optfloat"),
        "resolution": ("resolution", "optfloat"),
        "radius": ("radius", float),
        "refine": ("refine", "bool"),
    },
}

_LINSPACE = re.compile(r"^linspace\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)$")


def _convert(kind, raw: str, key: str, multiple: int):
    raw = raw.strip()
    try:
        if kind == "list":
            return tuple(p.strip() for p in raw.split(",") if p.strip())
        if kind == "floats":
            return tuple(float(p) for p in raw.split(",") if p.strip())
        if kind == "grid":
            mt = _LINSPACE.match(raw)
            if mt:
                lo, hi, steps = (int(g) for g in mt.groups())
                return m_grid_linspace(lo, hi, steps, multiple)
            return tuple(int(p) for p in raw.split(",") if p.strip())
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "optfloat":
            return None if raw.lower() in ("", "none", "auto") else float(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from None


def parse_config(text: str, **overrides) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    # k is needed to round linspace grids for periodic runs
    multiple = 1
    algs = parser.get("experiment", "algorithms", fallback="")
    if "mf-struct-dht" in algs:
        multiple = int(parser.get("design", "k", fallback=ExperimentConfig.k))
    for section in parser.sections():
        for key, raw in parser[section].items():
            field, kind = _SCHEMA[section][key]
            values[field] = _convert(kind, raw, key, multiple)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return desk_config(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), **overrides)
