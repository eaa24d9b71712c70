"""Experiment configuration: INI-style files, key=value overrides, and an echo writer.

Schema (every key optional; unspecified keys take per-experiment defaults)::

    [experiment]  kind, n_grid, H, replicates, master_seed, reference_draws
    [levy]        alpha, scale, p0
    [chain]       stay_prob
    [series]      i_max, block
    [run]         workers, out_dir, dump_paths
    [diag]        mc_samples, diag_n, asym_n, truncation_paths
    [boole]       epsilon, hopf_n, hopf_starts, occ_grid, occ_starts, cells
    [tolerances]  see TOLERANCES below

``n_grid`` and ``occ_grid`` accept comma-separated integers or ``2^a..b``.
Overrides name a key as ``section.key`` or by its bare key when unambiguous.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import os
import re
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .levy import LevyTail

KINDS = ("limit-law", "acorr", "rate", "dk", "markov-diag", "boole-diag", "simulate", "selftest")

TOLERANCES = {
    "ks_final": 0.15,  # KS against W at the largest n
    "ks_inversion": 0.02,  # largest allowed KS increase along n_grid (one allowed)
    "lag_ratio": 0.05,
    "rho": 0.05,
    "slope": 0.1,
    "cn_slope": 0.03,
    "dk_m1": 0.05,
    "dk_m2": 0.07,
    "dk_ks": 0.1,
    "ratio_lo": 0.8,
    "ratio_hi": 1.25,
    "asym_lo": 0.97,
    "asym_hi": 1.03,
    "identity": 1e-12,
    "transfer": 1e-8,
    "hopf": 0.05,
    "occ_lo": 0.45,
    "occ_hi": 0.55,
    "marginal_ks": 0.02,
    "truncation_ks": 0.01,
}


def parse_grid(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    text = str(text).strip()
    m = re.fullmatch(r"2\^(\d+)\.\.(\d+)", text)
    if m:
        return tuple(2 ** k for k in range(int(m.group(1)), int(m.group(2)) + 1))
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigurationError(f"cannot parse grid {text!r}") from None


def _optional_float(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return float(text)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {text!r}")


# section.key -> (attribute, parser)
_FIELDS = {
    "experiment.kind": ("kind", str),
    "experiment.n_grid": ("n_grid", parse_grid),
    "experiment.H": ("H", int),
    "experiment.replicates": ("replicates", int),
    "experiment.master_seed": ("master_seed", int),
    "experiment.reference_draws": ("reference_draws", int),
    "levy.alpha": ("alpha", float),
    "levy.scale": ("scale", float),
    "levy.p0": ("p0", _optional_float),
    "chain.stay_prob": ("stay_prob", float),
    "series.i_max": ("i_max", int),
    "series.block": ("block", int),
    "run.workers": ("workers", int),
    "run.out_dir": ("out_dir", str),
    "run.dump_paths": ("dump_paths", _bool),
    "diag.mc_samples": ("mc_samples", int),
    "diag.diag_n": ("diag_n", int),
    "diag.asym_n": ("asym_n", int),
    "diag.truncation_paths": ("truncation_paths", int),
    "boole.epsilon": ("epsilon", float),
    "boole.hopf_n": ("hopf_n", int),
    "boole.hopf_starts": ("hopf_starts", int),
    "boole.occ_grid": ("occ_grid", parse_grid),
    "boole.occ_starts": ("occ_starts", int),
    "boole.cells": ("cells", int),
}
_FIELDS.update({f"tolerances.{k}": (f"tol:{k}", float) for k in TOLERANCES})

_KIND_DEFAULTS = {
    "limit-law": {"n_grid": (2 ** 12, 2 ** 14, 2 ** 16), "H": 1, "replicates": 2000},
    "acorr": {"n_grid": (2 ** 10, 2 ** 12, 2 ** 14), "H": 4, "replicates": 200},
    "rate": {"n_grid": tuple(2 ** k for k in range(10, 18)), "H": 0, "replicates": 200},
    "dk": {"n_grid": (2 ** 14,), "H": 0, "replicates": 10_000},
    "simulate": {"n_grid": (16,), "H": 0, "replicates": 100},
}


@dataclass
class ExperimentConfig:
    kind: str = "limit-law"
    alpha: float = 1.5
    scale: float = 1.0
    p0: float | None = None
    stay_prob: float = 0.5
    n_grid: tuple[int, ...] = (2 ** 12, 2 ** 14, 2 ** 16)
    H: int = 1
    replicates: int = 2000
    i_max: int = 10_000
    block: int = 5000
    master_seed: int = 20240601
    reference_draws: int = 100_000
    workers: int = 1
    out_dir: str = "out"
    dump_paths: bool = False
    mc_samples: int = 200_000
    diag_n: int = 2 ** 14
    asym_n: int = 100_000
    truncation_paths: int = 10_000
    epsilon: float = 0.1
    hopf_n: int = 10 ** 7
    hopf_starts: int = 100
    occ_grid: tuple[int, ...] = tuple(2 ** k for k in range(10, 25))
    occ_starts: int = 200
    cells: int = 4096
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))

    @classmethod
    def for_kind(cls, kind: str) -> "ExperimentConfig":
        if kind not in KINDS:
            raise ConfigurationError(f"unknown experiment kind {kind!r}")
        return cls(kind=kind, **_KIND_DEFAULTS.get(kind, {}))

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown experiment kind {self.kind!r}")
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigurationError("n_grid must be nonempty and strictly increasing")
        if min(self.n_grid) < 1 or self.H < 0:
            raise ConfigurationError("n_grid entries must be positive and H nonnegative")
        if self.kind in ("limit-law", "acorr", "rate", "dk") and self.replicates < 50:
            raise ConfigurationError(f"replicates must be at least 50, got {self.replicates}")
        if not 0.0 < self.alpha < 2.0 or self.scale <= 0:
            raise ConfigurationError("need 0 < alpha < 2 and scale > 0")
        if self.p0 is not None and not self.alpha < self.p0 < 2.0:
            raise ConfigurationError("levy.p0 must lie in (alpha, 2)")
        if not 0.0 < self.stay_prob < 1.0:
            raise ConfigurationError("stay_prob must lie in (0, 1)")
        if self.i_max < 1000:
            raise ConfigurationError("i_max must be at least 1000")
        if self.workers < 1:
            raise ConfigurationError("workers must be positive")
        if not 0.0 < self.epsilon < 0.5:
            raise ConfigurationError("epsilon must lie in (0, 1/2)")
        return self

    def levy(self) -> LevyTail:
        return LevyTail(self.alpha, self.scale, self.p0)

    def effective_workers(self) -> int:
        cap = os.environ.get("IDACF_MAX_WORKERS")
        if cap is None:
            return self.workers
        try:
            return max(1, min(self.workers, int(cap)))
        except ValueError:
            raise ConfigurationError(f"IDACF_MAX_WORKERS must be an integer, got {cap!r}") from None

    # -- key handling -----------------------------------------------------------

    def set(self, key: str, value) -> None:
        full = resolve_key(key)
        attr, parse = _FIELDS[full]
        try:
            parsed = parse(value)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad value for {full}: {value!r} ({exc})") from None
        if attr.startswith("tol:"):
            self.tolerances[attr[4:]] = parsed
        else:
            setattr(self, attr, parsed)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        for full, (attr, _) in _FIELDS.items():
            section, key = full.split(".")
            if not cp.has_section(section):
                cp.add_section(section)
            val = self.tolerances[attr[4:]] if attr.startswith("tol:") else getattr(self, attr)
            if isinstance(val, tuple):
                val = ",".join(str(v) for v in val)
            cp.set(section, key, repr(val) if isinstance(val, float) else str(val))
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def resolve_key(key: str) -> str:
    key = key.strip()
    if key in _FIELDS:
        return key
    matches = [full for full in _FIELDS if full.split(".", 1)[1] == key]
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise ConfigurationError(f"unknown config key {key!r}")
    raise ConfigurationError(f"ambiguous config key {key!r}: {', '.join(matches)}")


def parse_override(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise ConfigurationError(f"override must look like key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def load_config(path=None, overrides=(), kind: str | None = None) -> ExperimentConfig:
    """Defaults for ``kind``, then the file, then overrides; validated."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigurationError(f"config file not found: {path}")
        try:
            cp.read(path)
        except configparser.Error as exc:
            raise ConfigurationError(f"unreadable config {path}: {exc.message}") from None
    file_kind = cp.get("experiment", "kind", fallback=None)
    override_pairs = [parse_override(o) for o in overrides]
    for k, v in override_pairs:
        if resolve_key(k) == "experiment.kind":
            file_kind = v
    chosen = kind or file_kind or "limit-law"
    if kind and file_kind and file_kind != kind:
        raise ConfigurationError(f"config kind {file_kind!r} does not match subcommand {kind!r}")
    cfg = ExperimentConfig.for_kind(chosen)
    for section in cp.sections():
        for key, value in cp.items(section):
            full = f"{section}.{key}"
            if full not in _FIELDS:
                raise ConfigurationError(f"unknown config key {full!r}")
            cfg.set(full, value)
    for k, v in override_pairs:
        cfg.set(k, v)
    return cfg.validate()
