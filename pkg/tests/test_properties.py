import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from igcf.covariant import ScalarField, cov_hessian, grad_norm_sq
from igcf.domain import build_cap
from igcf.flow import InitialData, make_state, step
from igcf.geometry import geometry_bundle, rhs_Q
from igcf.io import parse_config_string, read_series, write_series
from igcf.monitors import SERIES_COLUMNS, MonitorSeries
from igcf.symmetric import SingularMatrixError, SymMatrixField, sym2_algebra

CAP = build_cap(2, 1.0, 16, 32)
CAP_NOFILTER = build_cap(2, 1.0, 16, 32, pole_filter=False)

finite = st.floats(-1e3, 1e3, allow_nan=False)

admissible_data = st.builds(
    InitialData,
    c=st.floats(0.3, 3.0),
    eps_r=st.floats(-0.05, 0.05),
    eps_theta=st.floats(-0.02, 0.02),
    k=st.integers(2, 4),
)


@given(st.floats(0.1, 10), st.floats(-5, 5), st.floats(0.1, 10))
def test_sym2_matches_numpy(a, b, c):
    m = np.array([[a, b], [b, c]])
    d = a * c - b * b
    if d == 0.0:
        with pytest.raises(SingularMatrixError):
            sym2_algebra(m)
        return
    assume(abs(d) > 1e-6 * (a * c + b * b))
    det, inv, lo = sym2_algebra(m)
    assert np.isclose(det, np.linalg.det(m), rtol=1e-9, atol=1e-9)
    assert np.isclose(lo, np.linalg.eigvalsh(m)[0], rtol=1e-9, atol=1e-9)
    assert np.allclose(inv @ m, np.eye(2), atol=1e-8 * max(1, np.abs(inv).max()))


@given(st.lists(finite, min_size=3, max_size=3))
def test_eigmin_not_above_diagonal(vals):
    f = SymMatrixField(np.array(vals)[:, None])
    assert f.eigmin()[0] <= min(vals[0], vals[2]) + 1e-9 * (1 + abs(max(vals, key=abs)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hessian_symmetric_and_gradient_nonnegative(seed):
    f = ScalarField(np.random.default_rng(seed).normal(size=CAP.shape), CAP)
    full = cov_hessian(f).full()
    assert np.array_equal(full, np.swapaxes(full, -1, -2))
    assert np.all(grad_norm_sq(f) >= 0)


@settings(max_examples=25, deadline=None)
@given(admissible_data)
def test_sign_structure_on_admissible_states(data):
    b = geometry_bundle(data.field(CAP))
    assert np.all((b.v > 0) & (b.v <= 1))
    assert np.all(b.K > 0)
    assert np.all(b.Q < 0)
    assert np.all(b.Qij().eigmin() > 0)
    assert b.eigmin_iota > 0


@settings(max_examples=25, deadline=None)
@given(admissible_data, st.floats(-3, 3))
def test_Q_invariant_under_constant_shift(data, shift):
    f = data.field(CAP)
    assert np.allclose(rhs_Q(f + shift), rhs_Q(f), rtol=0, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(admissible_data, st.integers(0, 31))
def test_step_commutes_with_theta_shift_exactly_without_filter(data, m):
    f = data.field(CAP_NOFILTER)
    a = step(make_state(f, "rescaled"), 1e-4).phi.values
    b = step(make_state(f.roll_theta(m), "rescaled"), 1e-4).phi.values
    assert np.array_equal(np.roll(a, m, axis=1), b)


@settings(max_examples=25, deadline=None)
@given(admissible_data, st.integers(0, 31))
def test_step_commutes_with_theta_shift_with_filter(data, m):
    f = data.field(CAP)
    a = step(make_state(f, "rescaled"), 1e-4).phi.values
    b = step(make_state(f.roll_theta(m), "rescaled"), 1e-4).phi.values
    assert np.abs(np.roll(a, m, axis=1) - b).max() <= 1e-15 * max(1.0, np.abs(a).max()) * 8


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 5.0))
def test_rescaled_constant_is_fixed_point(c):
    f = ScalarField(np.full(CAP.shape, np.log(c)), CAP)
    s = make_state(f, "rescaled")
    for _ in range(3):
        s = step(s, 1e-3)
    assert np.array_equal(s.phi.values, f.values)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=11, max_size=11),
                max_size=5))
def test_series_csv_round_trip(tmp_path_factory, rows):
    s = MonitorSeries()
    for i, vals in enumerate(rows):
        s.append(dict(zip(SERIES_COLUMNS, [float(i)] + vals)))
    p = tmp_path_factory.mktemp("s") / "s.csv"
    write_series(s, p)
    assert read_series(p) == s


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 64), st.integers(4, 64).map(lambda x: 2 * x), st.floats(0.01, 5.0),
       st.sampled_from(["raw", "rescaled"]), st.floats(1e-6, 1.0))
def test_config_echo_round_trip(nr, nt, T, mode, dt_max):
    text = f"[grid]\nNr = {nr}\nNtheta = {nt}\n[flow]\nT_final = {T!r}\nmode = {mode}\ndt_max = {dt_max!r}\n"
    cfg = parse_config_string(text)
    assert parse_config_string(cfg.echo()) == cfg
