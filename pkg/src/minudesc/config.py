"""Flat ``section.key = value`` configuration.

Lines starting with ``#`` are comments. Every key has a type, a default and
a constraint; loading fails with a :class:`ConfigError` naming the key and
the rule it broke. The file is found at the explicit path, else
``$MINUDESC_CONFIG``, else ``./minudesc.conf`` if present; otherwise the
defaults apply.
"""

from __future__ import annotations

import math
import os
from pathlib import Path

from .errors import ConfigError
from .gabor import DEFAULT_KMAX, DEFAULT_RADIUS, DEFAULT_SIGMA
from .imaging import EnhanceParams
from .matching import MatchParams
from .minutiae import ExtractParams
from .synth import Jitter, SynthParams

ENV_VAR = "MINUDESC_CONFIG"
DEFAULT_PATH = "minudesc.conf"


def _pos(v):
    return v > 0, "must be > 0"


def _nonneg(v):
    return v >= 0, "must be >= 0"


def _between(lo, hi, lo_open=True, hi_open=False):
    def check(v):
        ok = (v > lo if lo_open else v >= lo) and (v < hi if hi_open else v <= hi)
        return ok, f"must lie in {'(' if lo_open else '['}{lo:g}, {hi:g}{')' if hi_open else ']'}"
    return check


def _at_least(n):
    return lambda v: (v >= n, f"must be >= {n:g}")


def _odd3(v):
    return v >= 3 and v % 2 == 1, "must be odd and >= 3"


def _any(v):
    return True, ""


def _pros(v):
    return len(v) > 0 and all(0 < p <= 100 for p in v), "must be a non-empty list of values in (0, 100]"


# key: (type, default, check)
SCHEMA = {
    "enhance.sigma1": (float, 1.0, _pos),
    "enhance.sigma2": (float, 4.0, _pos),
    "enhance.window": (int, 15, _odd3),
    "enhance.c": (float, 40.0, _pos),
    "image.dpi": (int, 500, _pos),
    "extract.block": (int, 16, _at_least(4)),
    "extract.coherence_threshold": (float, 0.3, _between(0.0, 1.0, False, True)),
    "extract.border": (int, 12, _nonneg),
    "extract.merge_distance": (float, 8.0, _nonneg),
    "extract.spur_length": (int, 10, _nonneg),
    "extract.trace_length": (int, 10, _at_least(1)),
    "extract.tensor_sigma": (float, 5.0, _pos),
    "extract.contrast_threshold": (float, 8.0, _nonneg),
    "gabor.sigma": (float, DEFAULT_SIGMA, _pos),
    "gabor.kmax": (float, DEFAULT_KMAX, _between(0.0, math.pi)),
    "gabor.radius": (float, DEFAULT_RADIUS, _pos),
    "subspace.pca_dim": (int, 30, _between(1, 360, False)),
    "subspace.lda_dim": (int, 25, _at_least(1)),
    "subspace.train_fingers": (int, 40, _at_least(2)),
    "subspace.train_seed": (int, 1000, _nonneg),
    "match.alpha": (float, 100.0, _pos),
    "match.beta": (float, 1.0, _pos),
    "match.pro": (float, 3.0, _between(0.0, 100.0)),
    "match.simd_threshold": (float, 0.5, _any),
    "match.pos_tol": (float, 12.0, _pos),
    "match.ang_tol": (float, math.pi / 6, _between(0.0, math.pi)),
    "eval.far_target": (float, 1e-4, _between(0.0, 1.0, True, True)),
    "eval.pro_sweep": (tuple, (1.0, 2.0, 3.0, 4.0, 5.0), _pros),
    "synth.seed": (int, 0, _between(0, 2**64 - 1, False)),
    "synth.fingers": (int, 10, _at_least(1)),
    "synth.width": (int, 256, _at_least(64)),
    "synth.height": (int, 288, _at_least(64)),
    "synth.ridge_period": (float, 9.0, _at_least(4)),
    "synth.n_minutiae": (int, 20, _nonneg),
    "synth.impressions": (int, 5, _at_least(1)),
    "synth.bifurcation_fraction": (float, 0.5, _between(0.0, 1.0, False)),
    "synth.translation": (float, 24.0, _nonneg),
    "synth.rotation": (float, 0.35, _nonneg),
    "synth.noise_std": (float, 16.0, _nonneg),
    "synth.contrast_low": (float, 0.5, _pos),
    "synth.contrast_high": (float, 1.0, _pos),
    "synth.shear": (float, 0.04, _nonneg),
    "synth.blotches": (int, 2, _nonneg),
    "synth.creases": (int, 2, _nonneg),
}

# (key_a, key_b, rule): value[a] < value[b] (or <=)
_ORDER = [
    ("enhance.sigma1", "enhance.sigma2", "<"),
    ("match.beta", "match.alpha", "<"),
    ("subspace.lda_dim", "subspace.pca_dim", "<="),
    ("synth.contrast_low", "synth.contrast_high", "<="),
]


def _parse(key: str, raw: str, where: str):
    kind = SCHEMA[key][0]
    try:
        if kind is int:
            return int(raw, 10)
        if kind is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        return tuple(float(p) for p in raw.split(",") if p.strip())
    except ValueError:
        name = {int: "an integer", float: "a finite number", tuple: "a comma-separated list of numbers"}[kind]
        raise ConfigError(f"{where}{key}: expected {name}, got {raw!r}") from None


class Config:
    """Validated settings; read values with ``cfg[key]``."""

    def __init__(self, values: dict | None = None, source: str | None = None):
        merged = {k: spec[1] for k, spec in SCHEMA.items()}
        for k, v in (values or {}).items():
            if k not in SCHEMA:
                raise ConfigError(f"{k}: unknown configuration key")
            merged[k] = v
        self.values = merged
        self.source = source
        self.validate()

    def __getitem__(self, key):
        return self.values[key]

    def validate(self) -> None:
        for key, (_, _, check) in SCHEMA.items():
            ok, rule = check(self.values[key])
            if not ok:
                raise ConfigError(f"{key}: {rule}, got {self.values[key]!r}")
        for a, b, op in _ORDER:
            va, vb = self.values[a], self.values[b]
            if not (va < vb if op == "<" else va <= vb):
                raise ConfigError(f"{a}: must be {op} {b} ({va!r} vs {vb!r})")

    def with_values(self, **updates) -> "Config":
        """Copy with keys given as ``section__key=value``."""
        vals = dict(self.values)
        vals.update({k.replace("__", "."): v for k, v in updates.items()})
        return Config(vals, self.source)

    # --- builders ------------------------------------------------------------

    def enhance_params(self) -> EnhanceParams:
        v = self.values
        return EnhanceParams(v["enhance.sigma1"], v["enhance.sigma2"], v["enhance.window"], v["enhance.c"])

    def extract_params(self) -> ExtractParams:
        return ExtractParams(**{k.split(".", 1)[1]: v for k, v in self.values.items()
                                if k.startswith("extract.")})

    def match_params(self) -> MatchParams:
        v = self.values
        return MatchParams(v["match.alpha"], v["match.beta"], v["match.pro"],
                           v["match.simd_threshold"], v["match.pos_tol"], v["match.ang_tol"])

    def synth_params(self) -> SynthParams:
        v = self.values
        jitter = Jitter(v["synth.translation"], v["synth.rotation"], v["synth.noise_std"],
                        (v["synth.contrast_low"], v["synth.contrast_high"]), v["synth.shear"],
                        v["synth.blotches"], v["synth.creases"])
        return SynthParams(seed=v["synth.seed"], width=v["synth.width"], height=v["synth.height"],
                           ridge_period=v["synth.ridge_period"], n_minutiae=v["synth.n_minutiae"],
                           impressions=v["synth.impressions"], jitter=jitter,
                           bifurcation_fraction=v["synth.bifurcation_fraction"])

    def pipeline(self, transform=None):
        from .pipeline import Pipeline

        v = self.values
        return Pipeline(self.enhance_params(), self.extract_params(), v["gabor.sigma"],
                        v["gabor.kmax"], v["gabor.radius"], transform)


def parse_config(text: str, source: str = "<config>") -> Config:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}: "
        if "=" not in line:
            raise ConfigError(f"{where}expected 'section.key = value', got {line!r}")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{where}{key}: unknown configuration key")
        if key in values:
            raise ConfigError(f"{where}{key}: set more than once")
        values[key] = _parse(key, raw, where)
    return Config(values, source)


def config_path(path=None):
    """The file to read, or None when only defaults apply."""
    if path is not None:
        return Path(path)
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    default = Path(DEFAULT_PATH)
    return default if default.is_file() else None


def load_config(path=None) -> Config:
    p = config_path(path)
    if p is None:
        return Config()
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(p))


def format_config(cfg: Config) -> str:
    """Every key with its current value, loadable by :func:`parse_config`."""
    out, section = [], None
    for key in SCHEMA:
        sec = key.split(".", 1)[0]
        if sec != section:
            if section is not None:
                out.append("")
            section = sec
        v = cfg[key]
        out.append(f"{key} = {', '.join(repr(x) for x in v) if isinstance(v, tuple) else repr(v)}")
    return "\n".join(out) + "\n"
