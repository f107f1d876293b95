import numpy as np
import pytest

from igcf.covariant import ScalarField
from igcf.domain import build_cap
from igcf.flow import FlowConfig, InitialData, check_admissible, run_flow
from igcf.geometry import NotSpacelike
from igcf.monitors import (
    SERIES_COLUMNS,
    Baselines,
    MonitorSeries,
    comparison_check,
    curvature_consistency,
    estimate_report,
    neumann_residual,
    random_ordered_pair,
)
from conftest import cap_field, exp_partials, observed_order


def const(cap, c):
    return ScalarField(np.full(cap.shape, c), cap)


def row(t, **kw):
    base = dict(t=t, dt=1e-3, min_u_et=1.0, max_u_et=1.0, sup_grad=0.1, min_q=-1.2, max_q=-0.8,
                min_det_iota=1.0, max_det_iota=1.0, eigmin_iota=0.5, osc_phi_tilde=0.1, nbc_residual=0.0)
    base.update(kw)
    return base


def series(rows):
    s = MonitorSeries()
    for r in rows:
        s.append(r)
    return s


def test_series_columns_order():
    assert ",".join(SERIES_COLUMNS) == (
        "t,dt,min_u_et,max_u_et,sup_grad,min_q,max_q,min_det_iota,max_det_iota,"
        "eigmin_iota,osc_phi_tilde,nbc_residual"
    )


def test_series_requires_increasing_t():
    s = series([row(0.0), row(0.1)])
    with pytest.raises(ValueError):
        s.append(row(0.1))
    assert len(s) == 2
    assert s.rows()[1][0] == 0.1


def test_neumann_residual_linear_is_one(cap32):
    assert neumann_residual(ScalarField(cap32.R, cap32)) == pytest.approx(1.0, abs=1e-12)


def test_neumann_residual_constant_zero(cap32):
    assert neumann_residual(const(cap32, 0.37)) == 0.0


def test_neumann_residual_at_least_second_order():
    errs = []
    for n in (16, 32, 64):
        cap = build_cap(2, 1.0, n, 2 * n)
        errs.append(neumann_residual(InitialData().field(cap)))
    # at least second order; the smooth even profile actually gives third
    slopes = observed_order(errs)
    assert np.all(slopes > 1.8), (errs, slopes)
    assert errs[-1] <= 10 * (1 / 64) ** 2


def test_det_window_constant():
    b = Baselines(1.0, 1.0, 0.0, -1.0, -1.0)
    assert b.det_window == (1.0, 1.0)


def test_det_window_contains_initial_data(cap32):
    res = run_flow(InitialData().field(cap32), FlowConfig(T_final=1e-3))
    b = Baselines.from_series(res.series)
    lo, hi = b.det_window
    assert lo <= res.series.min_det_iota[0] and res.series.max_det_iota[0] <= hi


def test_constant_run_all_pass_zero_violation(cap16):
    res = run_flow(const(cap16, np.log(2.0)), FlowConfig(T_final=0.5, mode="raw"))
    rep = estimate_report(res.series, delta=0.0, nbc_tol=0.0)
    assert rep.passed, list(rep.lines())
    for r in rep.results.values():
        assert r.max_violation == 0.0 or r.name == "convexity"
    assert rep.first_failed is None


@pytest.mark.parametrize("name, bad", [
    ("c0", dict(max_u_et=1.5)),
    ("c0", dict(min_u_et=0.5)),
    ("gradient", dict(sup_grad=0.3)),
    ("gradient", dict(sup_grad=1.0)),
    ("phidot", dict(min_q=-2.0)),
    ("det_iota", dict(max_det_iota=3.0)),
    ("convexity", dict(eigmin_iota=0.0)),
    ("neumann", dict(nbc_residual=0.2)),
])
def test_each_estimate_can_fail(name, bad):
    s = series([row(0.0), row(0.5), row(1.0, **bad)])
    rep = estimate_report(s, delta=1e-3, nbc_tol=0.1)
    assert name in rep.failed
    assert rep.results[name].first_failure_t == 1.0
    assert any(line.startswith(f"FAIL {name}") for line in rep.lines())


def test_oscillation_monitor():
    ok = series([row(t, osc_phi_tilde=0.1 * np.exp(-t)) for t in np.linspace(0, 1, 11)])
    assert estimate_report(ok).passed
    # a rise inside the transient window is ignored, after it is not
    early = series([row(0.0, osc_phi_tilde=0.1), row(0.005, osc_phi_tilde=0.2), row(1.0, osc_phi_tilde=0.05)])
    assert estimate_report(early).passed
    late = series([row(0.0, osc_phi_tilde=0.1), row(0.5, osc_phi_tilde=0.05), row(1.0, osc_phi_tilde=0.08)])
    rep = estimate_report(late, delta=0.01)
    assert rep.failed == ["oscillation"]
    assert rep.results["oscillation"].max_violation == pytest.approx(0.03)


def test_first_failed_is_earliest():
    s = series([row(0.0), row(0.5, min_q=-3.0), row(1.0, max_u_et=2.0, min_q=-3.0)])
    rep = estimate_report(s)
    assert set(rep.failed) >= {"phidot", "c0"}
    assert rep.first_failed == "phidot"


def test_report_echoes_tolerance():
    rep = estimate_report(series([row(0.0)]), delta=0.125, nbc_tol=0.5)
    assert rep.results["c0"].tolerance == 0.125
    assert rep.results["neumann"].tolerance == 0.5
    assert "1.250e-01" in next(rep.lines())


def test_nonfinite_is_failure():
    rep = estimate_report(series([row(0.0), row(1.0, max_q=np.nan)]))
    assert "phidot" in rep.failed


# ---- comparison ----------------------------------------------------------------

def test_comparison_constants(cap16):
    res = comparison_check(const(cap16, 0.0), const(cap16, np.log(2.0)), FlowConfig(T_final=0.5, mode="raw"))
    assert res.passed
    np.testing.assert_allclose(res.gaps, np.log(2.0), rtol=0, atol=1e-14)


def test_comparison_shifted_pair(cap16):
    phi = InitialData().field(cap16)
    res = comparison_check(phi, phi + 0.1, FlowConfig(T_final=0.2, mode="raw"))
    np.testing.assert_allclose(res.gaps, 0.1, rtol=0, atol=1e-10)


def test_comparison_rejects_unordered(cap16):
    with pytest.raises(ValueError):
        comparison_check(const(cap16, 1.0), const(cap16, 0.0), FlowConfig())


def test_random_ordered_pair_is_admissible_and_ordered(cap16):
    rng = np.random.default_rng(7)
    for _ in range(10):
        lo, hi = random_ordered_pair(cap16, rng)
        assert (hi.values - lo.values).min() >= 0
        assert check_admissible(lo).passed and check_admissible(hi).passed


def test_random_pair_deterministic(cap16):
    a = random_ordered_pair(cap16, np.random.default_rng(3))
    b = random_ordered_pair(cap16, np.random.default_rng(3))
    np.testing.assert_array_equal(a[1].values, b[1].values)


# ---- curvature consistency ---------------------------------------------------------

def test_consistency_slice_analytic(cap16):
    cc = curvature_consistency(const(cap16, 2.0), (0.0, 0.0, 0.0, 0.0, 0.0))
    for key in ("K_three_way", "h_vs_emb", "g_vs_emb", "gauss_formula", "normal_norm", "normal_tangent"):
        assert cc[key] <= 1e-10, key
    np.testing.assert_array_equal(cc["K_u"], 0.25)
    np.testing.assert_array_equal(cc["K_phi"], 0.25)


def test_consistency_converges():
    keys = ("K_three_way", "h_vs_emb", "g_vs_emb", "gauss_formula")
    errs = {k: [] for k in keys}
    for n in (16, 32, 64):
        cap = build_cap(2, 1.0, n, 2 * n)
        phi, _ = cap_field(cap, np.log(1.3), 0.05, 0.02, 2)
        cc = curvature_consistency(ScalarField(np.exp(phi), cap))
        for k in keys:
            errs[k].append(cc[k])
    for k in keys:
        slopes = observed_order(errs[k])
        assert np.all((slopes > 1.7) & (slopes < 2.3)), (k, errs[k], slopes)


def test_consistency_analytic_field_agrees(cap32):
    phi, pp = cap_field(cap32, np.log(1.3), 0.05, 0.02, 2)
    u, up = exp_partials(phi, pp)
    cc = curvature_consistency(ScalarField(u, cap32), up)
    assert cc["K_three_way"] <= 1e-10
    assert cc["h_vs_emb"] <= 1e-10
    assert cc["gauss_formula"] <= 1e-10


def test_consistency_rejects_timelike(cap16):
    with pytest.raises(NotSpacelike):
        curvature_consistency(ScalarField(np.exp(1.5 * cap16.R), cap16))
