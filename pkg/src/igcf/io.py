"""Run configuration files and the CSV formats written by the command line.

Config files are INI-style with sections ``[grid]``, ``[initial]``,
``[flow]``, ``[output]`` and ``[tolerances]``.  Keys are case-insensitive;
anything missing falls back to the defaults in :data:`DEFAULTS`.
"""

from __future__ import annotations

import configparser
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .domain import build_cap
from .flow import FlowConfig, InitialData
from .monitors import SERIES_COLUMNS, MonitorSeries

log = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "RunConfig",
    "DEFAULTS",
    "parse_config",
    "parse_config_string",
    "write_series",
    "read_series",
    "write_snapshot",
    "read_snapshot",
]

# section -> key -> (type, default); key spelling here is the canonical one
DEFAULTS = {
    "grid": {"n": (int, 2), "r_max": (float, 1.0), "Nr": (int, 32), "Ntheta": (int, 64)},
    "initial": {
        "c": (float, 1.0),
        "eps_r": (float, 0.05),
        "eps_theta": (float, 0.02),
        "k": (int, 2),
        "profile": (str, "cap"),
        "slope": (float, 0.0),
    },
    "flow": {
        "mode": (str, "rescaled"),
        "T_final": (float, 1.0),
        "dt_safety": (float, 0.5),
        "dt_max": (float, 1e-2),
        "monitor_stride": (int, 10),
    },
    "output": {"out_dir": (str, "out"), "snapshot_times": (list, ())},
    "tolerances": {
        "admissible_floor": (float, 0.0),
        "monitor_slack_factor": (float, 10.0),
        "exact_tol": (float, 5e-4),
    },
}


class ConfigError(ValueError):
    """Raised with every problem found in a config, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    n: int = 2
    r_max: float = 1.0
    Nr: int = 32
    Ntheta: int = 64
    c: float = 1.0
    eps_r: float = 0.05
    eps_theta: float = 0.02
    k: int = 2
    profile: str = "cap"
    slope: float = 0.0
    mode: str = "rescaled"
    T_final: float = 1.0
    dt_safety: float = 0.5
    dt_max: float = 1e-2
    monitor_stride: int = 10
    out_dir: str = "out"
    snapshot_times: tuple = ()
    admissible_floor: float = 0.0
    monitor_slack_factor: float = 10.0
    exact_tol: float = 5e-4
    source: str = field(default=None, compare=False)
    warnings: tuple = field(default=(), compare=False)

    def cap(self, refine=0):
        s = 2**refine
        return build_cap(self.n, self.r_max, self.Nr * s, self.Ntheta * s)

    def initial_data(self):
        return InitialData(self.c, self.eps_r, self.eps_theta, self.k, self.profile, self.slope)

    def flow_config(self, **overrides):
        kw = dict(
            T_final=self.T_final,
            mode=self.mode,
            dt_safety=self.dt_safety,
            dt_max=self.dt_max,
            monitor_stride=self.monitor_stride,
            tol_admissible=self.admissible_floor,
            snapshot_times=tuple(self.snapshot_times),
        )
        kw.update(overrides)
        return FlowConfig(**kw)

    def slack(self, dr, dt):
        """Monitor slack ``factor * (dr^2 + dt)``."""
        return self.monitor_slack_factor * (dr**2 + dt)

    def echo(self):
        """The effective configuration as INI text."""
        lines = []
        for sec, keys in DEFAULTS.items():
            lines.append(f"[{sec}]")
            for key in keys:
                val = getattr(self, key)
                if isinstance(val, tuple):
                    val = ", ".join(repr(float(x)) for x in val)
                lines.append(f"{key} = {val}")
            lines.append("")
        return "\n".join(lines)


def _convert(kind, raw):
    if kind is list:
        parts = [p for p in raw.replace(";", ",").replace(" ", ",").split(",") if p]
        return tuple(float(p) for p in parts)
    if kind is int:
        x = float(raw)
        if x != int(x):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(x)
    if kind is float:
        x = float(raw)
        if not math.isfinite(x):
            raise ValueError(f"expected a finite number, got {raw!r}")
        return x
    return raw.strip()


def _validate(v):
    errs = []

    def bad(name, msg):
        errs.append(f"{name}: {msg} (got {v[name.split('.')[1]]!r})")

    if v["n"] != 2:
        bad("grid.n", "only n = 2 is supported")
    if not v["r_max"] > 0:
        bad("grid.r_max", "must be positive")
    if v["Nr"] < 4:
        bad("grid.Nr", "must be >= 4")
    if v["Ntheta"] < 8:
        bad("grid.Ntheta", "must be >= 8")
    if v["Ntheta"] % 2:
        bad("grid.Ntheta", "must be even so the pole ghost can use the antipodal node")
    if not v["c"] > 0:
        bad("initial.c", "must be positive")
    if v["k"] < 0:
        bad("initial.k", "must be a non-negative integer")
    if v["profile"] not in ("cap", "linear"):
        bad("initial.profile", "must be 'cap' or 'linear'")
    if v["mode"] not in ("raw", "rescaled"):
        bad("flow.mode", "must be 'raw' or 'rescaled'")
    if not v["T_final"] > 0:
        bad("flow.T_final", "must be positive")
    if not v["dt_safety"] > 0:
        bad("flow.dt_safety", "must be positive")
    if not v["dt_max"] > 0:
        bad("flow.dt_max", "must be positive")
    if v["monitor_stride"] < 1:
        bad("flow.monitor_stride", "must be >= 1")
    if any(t < 0 for t in v["snapshot_times"]):
        bad("output.snapshot_times", "times must be non-negative")
    if v["admissible_floor"] < 0:
        bad("tolerances.admissible_floor", "must be >= 0")
    if not v["monitor_slack_factor"] > 0:
        bad("tolerances.monitor_slack_factor", "must be positive")
    if not v["exact_tol"] > 0:
        bad("tolerances.exact_tol", "must be positive")
    return errs


def parse_config_string(text, source="<string>") -> RunConfig:
    """Parse and validate config text.  Raises :class:`ConfigError`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([f"{source}: {exc}"]) from exc

    values = {key: default for keys in DEFAULTS.values() for key, (_, default) in keys.items()}
    errors, warnings = [], []
    for sec in cp.sections():
        spec = DEFAULTS.get(sec.lower())
        if spec is None:
            warnings.append(f"unknown section [{sec}] ignored")
            continue
        lookup = {k.lower(): k for k in spec}
        for raw_key, raw in cp.items(sec):
            key = lookup.get(raw_key.lower())
            if key is None:
                warnings.append(f"unknown key {sec}.{raw_key} ignored")
                continue
            kind = spec[key][0]
            try:
                values[key] = _convert(kind, raw)
            except ValueError as exc:
                errors.append(f"{sec.lower()}.{key}: {exc}")
    if not errors:
        errors = _validate(values)
    if errors:
        raise ConfigError(errors)
    for w in warnings:
        log.warning("%s: %s", source, w)
    if values["dt_safety"] > 1:
        w = f"flow.dt_safety = {values['dt_safety']} > 1 exceeds the explicit stability limit"
        warnings.append(w)
        log.warning("%s: %s", source, w)
    return RunConfig(**values, source=source, warnings=tuple(warnings))


def parse_config(path) -> RunConfig:
    if not os.path.isfile(path):
        raise ConfigError([f"config file not found: {path}"])
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    return parse_config_string(text, source=str(path))


def _fmt(x):
    return "%.17g" % x


def write_series(series: MonitorSeries, path):
    """CSV with the fixed monitor header, 17 significant digits, LF endings."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(SERIES_COLUMNS) + "\n")
        for row in series.rows():
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_series(path) -> MonitorSeries:
    with open(path, encoding="ascii", newline="") as fh:
        header = fh.readline().rstrip("\n")
        if tuple(header.split(",")) != SERIES_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header!r}")
        s = MonitorSeries()
        for line in fh:
            vals = [float(x) for x in line.rstrip("\n").split(",")]
            s.append(dict(zip(SERIES_COLUMNS, vals)))
    return s


SNAPSHOT_COLUMNS = ("r", "theta", "phi", "u", "K")


def write_snapshot(state, path, t_requested=None):
    """Per-node CSV ``r,theta,phi,u,K`` for one state.

    ``phi`` is the raw graph function at the state's time.  The leading
    ``#`` line records the requested time and the step it was snapped to.
    """
    cap = state.cap
    phi = state.phi_raw
    K = state.bundle.K if state.mode == "raw" else state.bundle.K * np.exp(cap.n * state.t)
    req = state.t if t_requested is None else t_requested
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# t_requested={_fmt(req)} t_snapped={_fmt(state.t)} step={state.steps} mode={state.mode}\n")
        fh.write(",".join(SNAPSHOT_COLUMNS) + "\n")
        cols = (cap.R.ravel(), cap.TH.ravel(), phi.ravel(), np.exp(phi).ravel(), K.ravel())
        for row in zip(*cols):
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_snapshot(path):
    """Return ``(meta, data)`` with ``data`` a dict of column arrays."""
    with open(path, encoding="ascii") as fh:
        first = fh.readline()
        meta = dict(item.split("=", 1) for item in first.lstrip("#").split())
        arr = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    return meta, {name: arr[:, i] for i, name in enumerate(SNAPSHOT_COLUMNS)}
