"""Explicit time stepping of the scalar flow ``d phi/dt = Q(D phi, D^2 phi)``.

Two modes are supported: ``raw`` evolves ``phi`` itself and ``rescaled``
evolves ``phi + t``, for which constants are stationary.  The discrete
Neumann condition is imposed by the mirror ghost in every derivative
evaluation, so no separate boundary update is needed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .covariant import ScalarField, angular_filter
from .domain import HyperbolicCap
from .geometry import AdmissibilityError, GeometryBundle, geometry_bundle
from .monitors import MonitorSeries, neumann_residual, sample_state

log = logging.getLogger(__name__)

__all__ = [
    "InitialData",
    "FlowConfig",
    "FlowState",
    "FlowError",
    "FlowResult",
    "AdmissibilityReport",
    "check_admissible",
    "make_state",
    "adaptive_dt",
    "step",
    "run_flow",
    "rescale_state",
]

MODES = ("raw", "rescaled")


@dataclass(frozen=True)
class InitialData:
    """Initial graphs ``phi_0 = log c + eps_r cos(pi r / r_max)
    + eps_theta beta(r) cos(k theta)``.

    ``beta(r) = sin(pi r / (2 r_max))^k`` vanishes like ``r^k`` at the pole
    and is even about ``r_max``, so ``phi_0`` is smooth and meets the cone
    orthogonally.  ``profile="linear"`` gives ``log c + slope * r`` instead,
    which violates the boundary condition and is used as a negative control.
    """

    c: float = 1.0
    eps_r: float = 0.05
    eps_theta: float = 0.02
    k: int = 2
    profile: str = "cap"
    slope: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"k must be a non-negative integer, got {self.k}")
        if self.profile not in ("cap", "linear"):
            raise ValueError(f"unknown profile {self.profile!r}")

    def field(self, cap: HyperbolicCap) -> ScalarField:
        R, TH = cap.R, cap.TH
        if self.profile == "linear":
            return ScalarField(np.log(self.c) + self.slope * R, cap)
        a = np.pi / (2.0 * cap.r_max)
        vals = (
            np.log(self.c)
            + self.eps_r * np.cos(np.pi * R / cap.r_max)
            + self.eps_theta * np.sin(a * R) ** self.k * np.cos(self.k * TH)
        )
        return ScalarField(vals, cap)


@dataclass(frozen=True)
class FlowConfig:
    T_final: float = 1.0
    mode: str = "rescaled"
    dt_safety: float = 0.5
    dt_max: float = 1e-2
    monitor_stride: int = 10
    tol_admissible: float = 0.0
    snapshot_times: tuple = ()
    max_steps: Optional[int] = None

    def __post_init__(self):
        if not self.T_final > 0:
            raise ValueError("T_final must be positive")
        if not 0 < self.dt_safety:
            raise ValueError("dt_safety must be positive")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.monitor_stride < 1:
            raise ValueError("monitor_stride must be >= 1")


@dataclass(frozen=True, eq=False)
class FlowState:
    """One time level.  In rescaled mode ``phi`` stores ``phi + t``."""

    phi: ScalarField
    t: float
    mode: str
    bundle: GeometryBundle = field(repr=False)
    last_dt: float = 0.0
    steps: int = 0

    @property
    def cap(self):
        return self.phi.cap

    @property
    def Lambda(self):
        return float(np.exp(-self.t))

    @property
    def phi_tilde(self) -> np.ndarray:
        return self.phi.values if self.mode == "rescaled" else self.phi.values + self.t

    @property
    def phi_raw(self) -> np.ndarray:
        return self.phi.values if self.mode == "raw" else self.phi.values - self.t


class FlowError(RuntimeError):
    """A run stopped early; carries the failure time and the partial series."""

    def __init__(self, message, t, series=None, cause=None):
        super().__init__(message)
        self.t = t
        self.series = series
        self.cause = cause


@dataclass
class FlowResult:
    state: FlowState
    series: MonitorSeries
    snapshots: list  # (t_requested, FlowState)


@dataclass
class AdmissibilityReport:
    rho: float
    eigmin_iota: float
    nbc_residual: float
    nbc_tolerance: float
    floor: float
    failures: list

    @property
    def passed(self):
        return not self.failures


def check_admissible(phi: ScalarField, tol=0.0, nbc_tol=None, rho_margin=None) -> AdmissibilityReport:
    """Check that ``phi`` is a strictly convex spacelike graph meeting the
    cone orthogonally.

    ``tol`` is the floor for ``eigmin(iota)`` and, unless ``rho_margin`` is
    given, also the margin kept below the light cone.  ``nbc_tol`` defaults
    to ``10 dr^2``.
    """
    cap = phi.cap
    nbc_tol = 10.0 * cap.dr**2 if nbc_tol is None else nbc_tol
    rho_margin = tol if rho_margin is None else rho_margin
    b = geometry_bundle(phi, check=False)
    grad_sq = b.grad_sq
    rho = float(np.sqrt(np.nanmax(grad_sq)))
    eig = b.iota_eig[0]
    eigmin = float(np.nanmin(eig))
    nbc = neumann_residual(phi)
    failures = []
    if not rho < 1.0 - rho_margin:
        node = np.unravel_index(np.nanargmax(grad_sq), grad_sq.shape)
        failures.append(("spacelike", f"sup|D phi| = {rho:.6g} at node {tuple(map(int, node))}"))
    # a boundary-condition violation also spoils the mirrored Hessian on the
    # last ring, so it is reported ahead of convexity
    if not nbc <= nbc_tol:
        failures.append(("neumann", f"boundary normal derivative {nbc:.6g} > {nbc_tol:.3g}"))
    if not eigmin > tol:
        node = np.unravel_index(np.nanargmin(eig), eig.shape)
        failures.append(("convexity", f"eigmin(iota) = {eigmin:.6g} at node {tuple(map(int, node))}"))
    return AdmissibilityReport(rho, eigmin, nbc, nbc_tol, tol, failures)


def make_state(phi0: ScalarField, mode="rescaled", floor=0.0) -> FlowState:
    """Initial state.  ``phi0`` is first passed through the pole filter so
    that its unresolved near-pole modes agree with the ones the stepper
    evolves; constants and unfiltered grids are left untouched."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    phi0 = ScalarField(angular_filter(phi0.cap, phi0.values), phi0.cap)
    return FlowState(phi0, 0.0, mode, geometry_bundle(phi0, floor=floor))


def adaptive_dt(state: FlowState, config: FlowConfig) -> float:
    """``min(dt_max, safety h_min^2 / (2 n max eig Q^ij))``."""
    cap = state.cap
    lam = float(np.max(state.bundle.parabolicity))
    return min(config.dt_max, config.dt_safety * cap.h_min**2 / (2 * cap.n * lam))


def _advance(state: FlowState, dt: float, floor: float) -> FlowState:
    b = state.bundle
    speed = b.Q + 1.0 if state.mode == "rescaled" else b.Q
    speed = angular_filter(state.cap, speed)
    vals = state.phi.values + dt * speed
    phi = ScalarField(vals, state.cap)
    return FlowState(phi, state.t + dt, state.mode, geometry_bundle(phi, floor=floor), dt, state.steps + 1)


def step(state: FlowState, dt: float, floor=0.0, retry=True) -> FlowState:
    """One forward Euler step; retries once at ``dt/2`` if the result is
    not admissible."""
    try:
        return _advance(state, dt, floor)
    except AdmissibilityError as exc:
        if not retry:
            raise
        log.warning("step at t=%.6g failed (%s); retrying with dt/2", state.t, exc)
        return _advance(state, 0.5 * dt, floor)


def run_flow(phi0: ScalarField, config: FlowConfig, dts: Optional[Sequence[float]] = None) -> FlowResult:
    """Integrate to ``config.T_final``.

    Monitors are sampled at ``t = 0``, every ``monitor_stride`` steps and at
    the final time.  ``dts`` forces a step sequence instead of the adaptive
    one (the run stops when it is exhausted).
    """
    rep = check_admissible(phi0, tol=config.tol_admissible, nbc_tol=np.inf)
    if rep.failures:
        _, msg = rep.failures[0]
        raise AdmissibilityError(f"initial data not admissible: {msg}")
    state = make_state(phi0, config.mode, config.tol_admissible)
    series = MonitorSeries()
    series.append(sample_state(state))
    pending = sorted(float(t) for t in config.snapshot_times)
    snapshots = []
    while pending and pending[0] <= 0.0:
        snapshots.append((pending.pop(0), state))
    forced = iter(dts) if dts is not None else None
    T = config.T_final
    while state.t < T:
        if config.max_steps is not None and state.steps >= config.max_steps:
            break
        if forced is not None:
            dt = next(forced, None)
            if dt is None:
                break
        else:
            dt = adaptive_dt(state, config)
            if state.t + dt >= T or T - (state.t + dt) < 1e-12 * T:
                dt = T - state.t
        prev = state
        try:
            state = step(state, dt, config.tol_admissible)
        except AdmissibilityError as exc:
            raise FlowError(f"flow failed at t={prev.t:.6g}: {exc}", prev.t, series, exc) from exc
        while pending and pending[0] <= state.t:
            ts = pending.pop(0)
            snapshots.append((ts, state if state.t - ts <= ts - prev.t else prev))
        if state.steps % config.monitor_stride == 0 or state.t >= T:
            series.append(sample_state(state))
    if series.t[-1] != state.t:
        series.append(sample_state(state))
    for ts in pending:
        snapshots.append((ts, state))
    return FlowResult(state, series, snapshots)


@dataclass(frozen=True)
class RescaledFields:
    phi_tilde: np.ndarray
    u_tilde: np.ndarray
    K_tilde: np.ndarray


def rescale_state(state: FlowState) -> RescaledFields:
    """``phi~ = phi + t``, ``u~ = exp(phi~)`` and ``K~ = K exp(-n t)``."""
    if state.mode != "raw":
        raise ValueError("rescale_state expects a raw-mode state")
    pt = state.phi.values + state.t
    return RescaledFields(pt, np.exp(pt), state.bundle.K * np.exp(-state.cap.n * state.t))
