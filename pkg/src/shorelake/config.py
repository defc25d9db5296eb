"""Run configuration: INI-style key = value sections, strictly validated.

Unknown sections or keys, duplicates, type errors and range violations are
all reported with the line they occur on.  Numeric fields are checked
before any allocation happens.
"""

import configparser
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .expressions import parse_expression
from .geometry import DepthProfile, ellipse, from_polynomial, unit_disk


def _line_of(text, section, key=None):
    """1-based line of a section header or of a key inside it."""
    sec_pat = re.compile(r"^\s*\[" + re.escape(section) + r"\]\s*$")
    in_sec = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if sec_pat.match(line):
            if key is None:
                return lineno
            in_sec = True
            continue
        if in_sec:
            if re.match(r"^\s*\[", line):
                in_sec = False
                continue
            if key is not None and re.match(r"^\s*" + re.escape(key) + r"\s*[=:]", line):
                return lineno
    return None


def _positive(v):
    return v > 0


def _nonnegative(v):
    return v >= 0


def _fraction(v):
    return 0.0 < v <= 1.0


# schema: section -> key -> (converter, validator or None, help)
_DOMAIN_KEYS = {
    "name": (str, None, "disk | ellipse | poly"),
    "a": (float, _positive, "depth exponent a > 0"),
    "h": (float, _positive, "grid spacing"),
    "bbox": ("floats", None, "x0, x1, y0, y1"),
    "ellipse_ax": (float, _positive, "ellipse semi-axis"),
    "ellipse_ay": (float, _positive, "ellipse semi-axis"),
    "poly_coeffs": (str, None, "j,k,c; j,k,c; ..."),
    "anchor": ("floats", None, "interior point for the boundary chart"),
}

_SCHEMAS = {
    "solve-elliptic": {
        "domain": _DOMAIN_KEYS,
        "elliptic": {
            "rhs": (str, None, "expression in x, y, r2"),
            "exact": (str, None, "manufactured solution expression (reports L2 error)"),
            "tol": (float, _positive, "relative residual"),
            "max_iter": (int, _positive, "iteration cap"),
            "p_list": ("floats", None, "gradient-ratio sweep"),
        },
    },
    "simulate": {
        "domain": _DOMAIN_KEYS,
        "transport": {
            "omega0": (str, None, "expression in x, y, r2"),
            "eps": (float, _nonnegative, "artificial viscosity"),
            "cfl": (float, _fraction, "cfl in (0, 1]"),
            "t_end": (float, _positive, "final time"),
            "truncation": (float, _positive, "clamp level R"),
            "output_dt": (float, _positive, "snapshot cadence"),
            "elliptic_tol": (float, _positive, "inner solve tolerance"),
            "elliptic_weight": (str, None, "depth | regularized"),
            "shore_floor": (float, _nonnegative, "sliver freeze factor"),
            "perturbation": (float, _nonnegative, "initial random perturbation"),
            "seed": (int, None, "rng seed"),
        },
    },
    "kernel-check": {
        "kernels": {
            "a": (float, _positive, "depth exponent"),
            "n": (int, lambda v: v >= 2, "dimension"),
            "eps_list": ("floats", None, "truncation sweep"),
            "samples": (int, _positive, "pairs per scale"),
            "seed": (int, None, "rng seed"),
            "h_fd": (float, _positive, "difference step"),
        },
    },
    "diagnose": {
        "diagnose": {
            "p_list": ("floats", None, "gradient sweep"),
            "mu_list": ("floats", None, "Holder exponents"),
            "slack": (float, _positive, "envelope slack"),
            "pairs": (int, _positive, "Holder pair samples"),
            "seed": (int, None, "rng seed"),
        },
    },
}

_DEFAULTS = {
    "solve-elliptic": {("elliptic", "tol"): 1e-10, ("elliptic", "rhs"): "-8"},
    "simulate": {
        ("transport", "omega0"): "1-r2",
        ("transport", "eps"): 0.0,
        ("transport", "cfl"): 0.8,
        ("transport", "t_end"): 1.0,
        ("transport", "output_dt"): 0.1,
        ("transport", "elliptic_tol"): 1e-10,
        ("transport", "elliptic_weight"): "depth",
        ("transport", "shore_floor"): 1.0,
        ("transport", "perturbation"): 0.0,
        ("transport", "seed"): 0,
    },
    "kernel-check": {
        ("kernels", "a"): 1.0,
        ("kernels", "n"): 2,
        ("kernels", "eps_list"): (0.1, 0.01, 0.001),
        ("kernels", "samples"): 4,
        ("kernels", "seed"): 0,
        ("kernels", "h_fd"): 1e-3,
    },
    "diagnose": {
        ("diagnose", "p_list"): (3, 4, 8, 16, 32, 64),
        ("diagnose", "mu_list"): (0.5,),
        ("diagnose", "slack"): 10.0,
        ("diagnose", "pairs"): 100_000,
        ("diagnose", "seed"): 0,
    },
}


@dataclass
class RunConfig:
    subcommand: str
    raw_text: str
    values: dict = field(default_factory=dict)
    seed: int = 0

    def get(self, section, key, default=None):
        return self.values.get((section, key), default)

    def profile(self):
        name = self.get("domain", "name", "disk")
        if name == "disk":
            defining = unit_disk()
        elif name == "ellipse":
            defining = ellipse(self.get("domain", "ellipse_ax", 1.0),
                               self.get("domain", "ellipse_ay", 0.7))
        elif name == "poly":
            raw_terms = self.get("domain", "poly_coeffs")
            if raw_terms is None:
                raise ConfigurationError("poly domain needs poly_coeffs")
            coeffs = {}
            for term in raw_terms.split(";"):
                j, k, c = (t.strip() for t in term.split(","))
                coeffs[(int(j), int(k))] = float(c)
            bbox = self.get("domain", "bbox")
            if bbox is None:
                raise ConfigurationError("poly domain needs bbox")
            defining = from_polynomial(coeffs, bbox)
        else:
            raise ConfigurationError(f"unknown domain name {name!r}")
        return DepthProfile(defining, self.get("domain", "a", 1.0))

    def expression(self, section, key, default):
        return parse_expression(self.get(section, key, default))


def parse_config(text, subcommand):
    """Validate INI text against the subcommand schema; collect all errors."""
    if subcommand not in _SCHEMAS:
        raise ConfigurationError(f"unknown subcommand {subcommand!r}")
    schema = _SCHEMAS[subcommand]
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigurationError(
            f"duplicate key {exc.option!r} in [{exc.section}] "
            f"(line {exc.lineno})") from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigurationError(
            f"duplicate section [{exc.section}] (line {exc.lineno})") from exc
    except configparser.Error as exc:
        raise ConfigurationError(f"config parse error: {exc}") from exc

    errors = []
    values = {}
    for section in parser.sections():
        if section not in schema:
            line = _line_of(text, section)
            errors.append(f"line {line}: unknown section [{section}] "
                          f"for {subcommand}")
            continue
        keys = schema[section]
        for key, raw in parser.items(section):
            if key not in keys:
                line = _line_of(text, section, key)
                errors.append(f"line {line}: unknown key {key!r} in [{section}]")
                continue
            conv, check, help_text = keys[key]
            try:
                if conv == "floats":
                    val = tuple(float(t) for t in re.split(r"[,\s]+", raw.strip()) if t)
                elif conv is int:
                    val = int(raw)
                elif conv is float:
                    val = float(raw)
                else:
                    val = raw.strip()
            except ValueError:
                line = _line_of(text, section, key)
                errors.append(f"line {line}: {section}.{key}: cannot parse "
                              f"{raw!r} ({help_text})")
                continue
            if check is not None and not check(val):
                line = _line_of(text, section, key)
                errors.append(f"line {line}: {section}.{key}: value {val!r} "
                              f"out of range ({help_text})")
                continue
            values[(section, key)] = val
    if errors:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(errors))

    cfg = RunConfig(subcommand=subcommand, raw_text=text, values=values)
    for key, default in _DEFAULTS[subcommand].items():
        cfg.values.setdefault(key, default)
    cfg.seed = int(cfg.values.get(("transport", "seed"),
                                  cfg.values.get(("kernels", "seed"),
                                                 cfg.values.get(("diagnose", "seed"), 0))))
    return cfg
