"""Runtime checks for the a priori estimates of the flow.

Each estimate becomes a time series sampled during a run and a pass/fail
entry in :func:`estimate_report`.  Thresholds are always explicit arguments
and are echoed back in the report.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .covariant import Jet, ScalarField
from .geometry import (
    embedding_oracle,
    gauss_curvature_phi,
    gauss_curvature_u,
    gauss_formula_residual,
    induced_metric,
    second_fundamental,
)

__all__ = [
    "SERIES_COLUMNS",
    "MonitorSeries",
    "sample_state",
    "neumann_residual",
    "Baselines",
    "EstimateResult",
    "EstimateReport",
    "estimate_report",
    "ComparisonResult",
    "comparison_check",
    "random_ordered_pair",
    "curvature_consistency",
]

SERIES_COLUMNS = (
    "t",
    "dt",
    "min_u_et",
    "max_u_et",
    "sup_grad",
    "min_q",
    "max_q",
    "min_det_iota",
    "max_det_iota",
    "eigmin_iota",
    "osc_phi_tilde",
    "nbc_residual",
)


@dataclass
class MonitorSeries:
    """Column-oriented time series of monitor samples.

    ``min_det_iota``/``max_det_iota`` hold ``det(iota) / det(sigma)``, which
    does not depend on the chart.
    """

    t: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    min_u_et: list = field(default_factory=list)
    max_u_et: list = field(default_factory=list)
    sup_grad: list = field(default_factory=list)
    min_q: list = field(default_factory=list)
    max_q: list = field(default_factory=list)
    min_det_iota: list = field(default_factory=list)
    max_det_iota: list = field(default_factory=list)
    eigmin_iota: list = field(default_factory=list)
    osc_phi_tilde: list = field(default_factory=list)
    nbc_residual: list = field(default_factory=list)

    def append(self, row: dict):
        if self.t and not row["t"] > self.t[-1]:
            raise ValueError("monitor samples must have strictly increasing t")
        for name in SERIES_COLUMNS:
            getattr(self, name).append(float(row[name]))

    def __len__(self):
        return len(self.t)

    def rows(self):
        cols = [getattr(self, name) for name in SERIES_COLUMNS]
        return list(zip(*cols))

    def array(self, name):
        return np.asarray(getattr(self, name))

    def __eq__(self, other):
        if not isinstance(other, MonitorSeries):
            return NotImplemented
        return all(getattr(self, f.name) == getattr(other, f.name) for f in fields(self))


def neumann_residual(phi: ScalarField) -> float:
    """Max over the boundary of ``|mu^i phi_i|`` at ``r = r_max``.

    Uses the one-sided second-order extrapolation from the last three rings,
    so it does not see the ghost rows at all.
    """
    v = phi.values
    # (2 f_N - 3 f_{N-1} + f_{N-2}) / dr written in differences, exact on constants
    d = (2.0 * (v[-1] - v[-2]) - (v[-2] - v[-3])) / phi.cap.dr
    return float(np.abs(d).max())


def sample_state(state) -> dict:
    """One monitor row for a :class:`~igcf.flow.FlowState`."""
    b = state.bundle
    pt = state.phi_tilde
    ue = np.exp(pt)
    q = b.Q
    det = b.det_ratio
    return dict(
        t=state.t,
        dt=state.last_dt,
        min_u_et=ue.min(),
        max_u_et=ue.max(),
        sup_grad=np.sqrt(b.grad_sq.max()),
        min_q=q.min(),
        max_q=q.max(),
        min_det_iota=det.min(),
        max_det_iota=det.max(),
        eigmin_iota=b.eigmin_iota,
        osc_phi_tilde=pt.max() - pt.min(),
        nbc_residual=neumann_residual(state.phi),
    )


@dataclass(frozen=True)
class Baselines:
    """Initial-data constants that the estimates are measured against."""

    c1: float
    c2: float
    rho: float
    q_lo: float
    q_hi: float
    n: int = 2

    @classmethod
    def from_series(cls, series: MonitorSeries, n=2):
        return cls(series.min_u_et[0], series.max_u_et[0], series.sup_grad[0],
                   series.min_q[0], series.max_q[0], n)

    @property
    def det_window(self):
        """Range of ``det(iota)/det(sigma) = (1-|D phi|^2)^(n+1) / (-Q)^n``
        allowed by the gradient and speed bounds."""
        n = self.n
        lo = (1.0 - self.rho**2) ** (n + 1) / (-self.q_lo) ** n
        hi = 1.0 / (-self.q_hi) ** n
        return lo, hi


@dataclass
class EstimateResult:
    name: str
    max_violation: float
    tolerance: float
    passed: bool
    first_failure_t: float = None


@dataclass
class EstimateReport:
    results: dict
    baselines: Baselines
    delta: float

    @property
    def passed(self):
        return all(r.passed for r in self.results.values())

    @property
    def failed(self):
        return [r.name for r in self.results.values() if not r.passed]

    @property
    def first_failed(self):
        """Name of the estimate that was violated earliest (``None`` if all pass)."""
        bad = [r for r in self.results.values() if not r.passed]
        if not bad:
            return None
        order = list(self.results)
        return min(bad, key=lambda r: (r.first_failure_t, order.index(r.name))).name

    def lines(self):
        for r in self.results.values():
            mark = "PASS" if r.passed else "FAIL"
            yield f"{mark} {r.name}: max violation {r.max_violation:.3e} (tolerance {r.tolerance:.3e})"


def _result(name, t, excess, tol, strict=False):
    excess = np.asarray(excess, dtype=float)
    bad = ~(excess < tol) if strict else ~(excess <= tol)
    bad |= ~np.isfinite(excess)
    first = float(t[np.argmax(bad)]) if bad.any() else None
    worst = float(np.nanmax(excess)) if excess.size else 0.0
    return EstimateResult(name, max(worst, 0.0), tol, not bad.any(), first)


def estimate_report(series: MonitorSeries, baselines: Baselines = None, delta=0.0,
                    nbc_tol=np.inf, transient=0.01) -> EstimateReport:
    """Compare a run against the C0, gradient, speed and determinant bounds.

    ``delta`` is the slack allowed on every estimate.  Strict convexity needs
    ``eigmin(iota) > 0`` throughout.  The oscillation of ``phi + t`` must be
    non-increasing up to ``delta`` after the first ``transient`` fraction of
    the run.
    """
    if baselines is None:
        baselines = Baselines.from_series(series)
    b = baselines
    t = series.array("t")
    lo, hi = b.det_window
    det_excess = np.maximum(lo - series.array("min_det_iota"), series.array("max_det_iota") - hi)
    osc = series.array("osc_phi_tilde")
    after = t >= t[0] + transient * (t[-1] - t[0])
    osc_excess = np.zeros_like(osc)
    if after.any():
        idx = np.flatnonzero(after)
        running_min = np.minimum.accumulate(osc[idx])
        osc_excess[idx] = osc[idx] - running_min
    grad = series.array("sup_grad")
    results = {}
    for r in (
        _result("c0", t, np.maximum(b.c1 - series.array("min_u_et"), series.array("max_u_et") - b.c2), delta),
        _result("gradient", t, np.where(grad < 1.0, grad - b.rho, np.inf), delta),
        _result("phidot", t, np.maximum(b.q_lo - series.array("min_q"), series.array("max_q") - b.q_hi), delta),
        _result("det_iota", t, det_excess, delta),
        _result("convexity", t, -series.array("eigmin_iota"), 0.0, strict=True),
        _result("neumann", t, series.array("nbc_residual"), nbc_tol),
        _result("oscillation", t, osc_excess, delta),
    ):
        results[r.name] = r
    return EstimateReport(results, b, delta)


@dataclass
class ComparisonResult:
    worst_gap: float
    initial_gap: float
    tolerance: float
    times: np.ndarray
    gaps: np.ndarray

    @property
    def passed(self):
        return self.worst_gap >= -self.tolerance


def comparison_check(phi_low: ScalarField, phi_high: ScalarField, config, tolerance=None) -> ComparisonResult:
    """Evolve an ordered pair with a shared step sequence and track
    ``min_x (psi - phi)``.

    The step is the smaller of the two adaptive steps.  ``tolerance``
    defaults to ``10 (dr^2 + dt_max)`` with ``dt_max`` the largest step used.
    """
    from .flow import adaptive_dt, make_state, step

    gap0 = phi_high.values - phi_low.values
    if gap0.min() < 0:
        raise ValueError("comparison_check needs phi_low <= phi_high at every node")
    a = make_state(phi_low, config.mode, config.tol_admissible)
    b = make_state(phi_high, config.mode, config.tol_admissible)
    T = config.T_final
    times, gaps = [0.0], [float(gap0.min())]
    dt_used = 0.0
    while a.t < T:
        dt = min(adaptive_dt(a, config), adaptive_dt(b, config))
        if a.t + dt >= T:
            dt = T - a.t
        a = step(a, dt, config.tol_admissible, retry=False)
        b = step(b, dt, config.tol_admissible, retry=False)
        dt_used = max(dt_used, dt)
        times.append(a.t)
        gaps.append(float((b.phi.values - a.phi.values).min()))
    if tolerance is None:
        tolerance = 10.0 * (phi_low.cap.dr**2 + dt_used)
    return ComparisonResult(min(gaps), gaps[0], tolerance, np.array(times), np.array(gaps))


def random_ordered_pair(cap, rng, touch=0.05):
    """Draw an admissible ordered pair ``phi_low <= phi_high`` from the
    initial-data family.

    Both members get independent random amplitudes and wavenumbers.  The
    upper one is shifted by a constant so that the smallest gap is a random
    value in ``[0, touch]``; the two graphs may therefore touch.
    """
    from .flow import InitialData

    def draw():
        return InitialData(
            c=float(rng.uniform(0.5, 2.0)),
            eps_r=float(rng.uniform(-0.05, 0.05)),
            eps_theta=float(rng.uniform(-0.02, 0.02)),
            k=int(rng.integers(2, 5)),
        ).field(cap)

    low, high = draw(), draw()
    shift = float((low.values - high.values).max()) + float(rng.uniform(0.0, touch))
    high = ScalarField(high.values + shift, cap)
    return low, high


def _phi_partials(u, partials):
    ur, ut, urr, urt, utt = partials
    return (ur / u, ut / u, urr / u - ur * ur / u**2, urt / u - ur * ut / u**2, utt / u - ut * ut / u**2)


def curvature_consistency(u: ScalarField, analytic_partials=None) -> dict:
    """Three-way agreement of the curvature routes on ``u``.

    ``K_u`` uses the closed forms in ``u``, ``K_phi`` the form in
    ``phi = log u``, and the embedding oracle differentiates ``X = u x``
    directly.  With ``analytic_partials = (ur, ut, urr, urt, utt)`` all routes
    use exact derivatives instead of stencils.
    """
    cap = u.cap
    if analytic_partials is None:
        uj = Jet.from_field(u)
        pj = Jet.from_field(u.map(np.log))
    else:
        uj = Jet.from_partials(cap, u.values, *analytic_partials)
        pj = Jet.from_partials(cap, np.log(u.values), *_phi_partials(u.values, analytic_partials))
    K_u = gauss_curvature_u(uj)
    K_phi = gauss_curvature_phi(pj)
    rep = embedding_oracle(u, analytic_partials)
    g, _ = induced_metric(uj)
    h = second_fundamental(uj)
    d_up = float(np.abs(K_u - K_phi).max())
    d_ue = float(np.abs(K_u - rep.K).max())
    d_pe = float(np.abs(K_phi - rep.K).max())
    return {
        "K_u_vs_K_phi": d_up,
        "K_u_vs_K_emb": d_ue,
        "K_phi_vs_K_emb": d_pe,
        "K_three_way": max(d_up, d_ue, d_pe),
        "h_vs_emb": float(np.abs(h.data - rep.h.data).max()),
        "g_vs_emb": float(np.abs(g.data - rep.g.data).max()),
        "gauss_formula": gauss_formula_residual(rep, h),
        **rep.residuals,
        "K_u": K_u,
        "K_phi": K_phi,
        "K_emb": rep.K,
    }
