import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from fraclab import (AnalyticField, BoundaryFunction, FrequencyReport, HalfSpaceField,
                     InsufficientRadii, QuadratureOutOfDomain, TraceConditionViolated, XGrid,
                     ZeroH, ball_quadrature, compute_D, compute_H, compute_N,
                     dk_boundary_identity_residual, extend, fractional_harmonic_trace,
                     frequency_scan, interior_exterior_check, make_order, monotonicity_check,
                     rellich_residual, vanishing_order)

ZERO_GRAD = lambda x, y: (0 * x, 0 * y)


def field(b, value, grad):
    return AnalyticField(b, [(value, grad)])


LINEAR = field(0.0, lambda x, y: x, lambda x, y: (1 + 0 * x, 0 * y))
QUAD = field(0.0, lambda x, y: x ** 2 - y ** 2, lambda x, y: (2 * x, -2 * y))
ONE = field(0.0, lambda x, y: 1 + 0 * x, ZERO_GRAD)
ZERO = field(0.0, lambda x, y: 0 * x, ZERO_GRAD)


@pytest.mark.parametrize("b", [0.0, 0.4, -0.4])
@pytest.mark.parametrize("rule", ["gauss", "midpoint"])
def test_half_ball_volume(b, rule):
    q = ball_quadrature((0.0, 0.0), 0.7, b, True, 16, 32, rule)
    # ∫_{half ball} y^b = r^{2+b}/(2+b) * B((1+b)/2, 1/2)
    exact = 0.7 ** (2 + b) / (2 + b) * special.beta((1 + b) / 2, 0.5)
    assert np.all(q.volume_weights > 0) and np.all(q.surface_weights > 0)
    assert q.volume_weights.sum() == pytest.approx(exact, rel=1e-12)
    assert q.surface_weights.sum() == pytest.approx(0.7 ** (1 + b) * special.beta((1 + b) / 2, 0.5),
                                                    rel=1e-12)


def test_interior_ball_weights():
    q = ball_quadrature((0.0, 2.0), 0.5, 0.3)
    exact = integrate.dblquad(lambda y, x: y ** 0.3, -0.5, 0.5,
                              lambda x: 2 - math.sqrt(0.25 - x * x),
                              lambda x: 2 + math.sqrt(0.25 - x * x))[0]
    assert q.volume_weights.sum() == pytest.approx(exact, rel=1e-9)


def test_ball_domain_errors():
    with pytest.raises(QuadratureOutOfDomain):
        ball_quadrature((0.0, 0.2), 0.5, 0.0, half_ball=False)
    with pytest.raises(QuadratureOutOfDomain):
        ball_quadrature((0.0, 0.2), 0.5, 0.0, half_ball=True)


@pytest.mark.parametrize("center", [(0.0, 0.0), (0.0, 3.0)])
def test_D_H_closed_forms(center):
    r = 0.6
    q = ball_quadrature(center, r, 0.0)
    area = math.pi * r ** 2 if center[1] else 0.5 * math.pi * r ** 2
    length = 2 * math.pi * r if center[1] else math.pi * r
    assert compute_D(LINEAR, q) == pytest.approx(area, rel=1e-12)
    assert compute_D(ONE, q) == 0.0
    assert compute_H(ONE, q) == pytest.approx(length, rel=1e-12)
    assert compute_H(ZERO, q) == 0.0
    if center == (0.0, 0.0):
        # x^2 averaged over the (half) circle: r^2 * length / 2
        assert compute_H(LINEAR, q) == pytest.approx(r ** 2 * length / 2, rel=1e-12)


def test_D_sampled_polynomial():
    # non-periodic sampled field: local stencils and splines against the closed form
    g = XGrid(1, 1024)
    y = 30.0 * (np.arange(2049) / 2048) ** 2
    U = (g.nodes[:, None] - np.pi) ** 2 - y[None, :] ** 2
    u = HalfSpaceField(g, y, U, make_order(0.5))
    r = 0.5
    exact_half = math.pi * r ** 4
    assert compute_D(u, ball_quadrature((np.pi, 0.0), r, 0.0)) == pytest.approx(exact_half, abs=1e-6)
    exact_full = 2 * math.pi * r ** 4 + 4 * math.pi * r ** 2
    assert compute_D(u, ball_quadrature((np.pi, 1.0), r, 0.0)) == pytest.approx(exact_full, abs=1e-6)


@settings(max_examples=20)
@given(st.floats(0.05, 0.95), st.floats(-2, 2), st.sampled_from([0.0, 1.5]))
def test_frequency_of_harmonic_polynomials(r, cx, cy):
    lin = field(0.0, lambda x, y: x - cx, lambda x, y: (1 + 0 * x, 0 * y))
    quad = field(0.0, lambda x, y: (x - cx) ** 2 - (y - cy) ** 2,
                 lambda x, y: (2 * (x - cx), -2 * (y - cy)))
    q = ball_quadrature((cx, cy), r, 0.0)
    assert compute_N(lin, q) == pytest.approx(1.0, abs=1e-10)
    assert compute_N(quad, q) == pytest.approx(2.0, abs=1e-10)
    assert compute_N(ONE, q) == 0.0


def test_zero_field_has_no_frequency():
    with pytest.raises(ZeroH):
        compute_N(ZERO, ball_quadrature((0.0, 0.0), 0.5, 0.0))
    with pytest.raises(ZeroH):
        frequency_scan(ZERO, (0.0, 0.0), [0.2, 0.4])


def test_scan_scale_covariance():
    rep = frequency_scan(LINEAR, (0.0, 0.0), np.linspace(0.1, 0.9, 9))
    np.testing.assert_allclose(rep.N_values, 1.0, atol=1e-4)
    assert rep.Lambda_estimate == pytest.approx(0.0, abs=1e-8)


def test_monotonicity_examples():
    r = np.linspace(0.1, 0.9, 9)
    const = FrequencyReport.from_values(r, np.full(9, 3.0))
    assert monotonicity_check(const, 0.0)[0]
    inc = FrequencyReport.from_values(r, 2 + r)
    for lam in (0.0, 1.0, 10.0):
        assert monotonicity_check(inc, lam)[0]
    dec = FrequencyReport.from_values(r, 3 * np.exp(-2 * r))
    assert dec.Lambda_estimate == pytest.approx(2.0, rel=1e-9)
    assert not monotonicity_check(dec, 1.0)[0]
    assert monotonicity_check(dec, dec.Lambda_estimate)[0]
    # steps with N <= 1 are ignored
    low = FrequencyReport.from_values(r, 0.9 * np.exp(-5 * r))
    assert monotonicity_check(low, 0.0) == (True, math.inf)


@pytest.fixture(scope="module")
def gaussian_field():
    from fraclab import solve_profile_closed_form
    g = XGrid(1, 1024)
    f = BoundaryFunction(g, np.exp(-(g.nodes - np.pi) ** 2 / (2 * 0.5 ** 2)))
    return extend(f, solve_profile_closed_form(make_order(1.5)))


def test_gaussian_half_ball_scan(gaussian_field, tmp_path):
    rep = frequency_scan(gaussian_field, (np.pi, 0.0), np.linspace(0.1, 0.9, 17))
    assert np.all(rep.H_values > 0)
    ok, worst = monotonicity_check(rep, rep.Lambda_estimate)
    assert ok and rep.Lambda_estimate <= 50
    data = json.loads(rep.to_json())
    assert set(data) == {"center", "b", "m", "radii", "D", "H", "N", "lambda_estimate", "margins"}
    rows = list(csv.reader(open(rep.write_csv(tmp_path / "f.csv"))))
    assert rows[0] == ["r", "D", "H", "N", "margin"] and len(rows) == 18


def test_scan_rejects_out_of_domain(gaussian_field):
    with pytest.raises(QuadratureOutOfDomain):
        frequency_scan(gaussian_field, (np.pi, 29.5), [0.2, 0.6])


def test_trace_condition_enforced(closed_profiles):
    g = XGrid(1, 256)
    p = closed_profiles(1.5)
    u = extend(BoundaryFunction(g, np.cos(g.nodes)), p)
    # an odd-in-y perturbation breaks the vanishing odd trace
    bad = HalfSpaceField(g, u.y, u.values + 0.01 * np.cos(g.nodes)[:, None] * u.y * np.exp(-u.y),
                         u.order)
    with pytest.raises(TraceConditionViolated):
        frequency_scan(bad, (np.pi, 0.0), [0.2, 0.4])


def test_fractional_harmonic_trace_scan(closed_profiles):
    g = XGrid(1, 1024)
    o = make_order(1.5)
    f, resid = fractional_harmonic_trace(g, o, (2.0, 4.0))
    assert resid < 1e-10
    rep = frequency_scan(extend(f, closed_profiles(1.5)), (3.0, 0.0), np.linspace(0.1, 0.9, 17))
    bounded = np.exp(rep.Lambda_estimate * rep.radii) * rep.N_values
    assert np.all(np.isfinite(bounded)) and bounded.max() < 10


RELLICH_CASES = [
    (0.0, LINEAR, field(0.0, lambda x, y: 0 * x, ZERO_GRAD)),
    (0.4, field(0.4, lambda x, y: y ** 2, lambda x, y: (0 * x, 2 * y)),
     field(0.4, lambda x, y: 2.8 + 0 * x, ZERO_GRAD)),
    (-0.4, field(-0.4, lambda x, y: y ** 2, lambda x, y: (0 * x, 2 * y)),
     field(-0.4, lambda x, y: 1.2 + 0 * x, ZERO_GRAD)),
    (0.4, field(0.4, lambda x, y: 3 + 0 * x, ZERO_GRAD), field(0.4, lambda x, y: 0 * x, ZERO_GRAD)),
]


@pytest.mark.parametrize("b,w,v", RELLICH_CASES)
def test_rellich_identity(b, w, v):
    for r in (0.2, 0.9):
        assert rellich_residual(w, v, ball_quadrature((0.0, 0.0), r, b, True)) < 1e-8


def test_rellich_interior_ball_unweighted():
    assert rellich_residual(QUAD, ZERO, ball_quadrature((0.5, 2.0), 0.7, 0.0)) < 1e-10


def test_rellich_needs_boundary_center_when_weighted():
    w, v = RELLICH_CASES[1][1:]
    with pytest.raises(QuadratureOutOfDomain):
        rellich_residual(w, v, ball_quadrature((0.0, 2.0), 0.5, 0.4))


@pytest.mark.parametrize("b", [0.0, 0.4, -0.4])
def test_rellich_quadrature_refinement(b):
    w = field(b, lambda x, y: x * y ** 2, lambda x, y: (y ** 2, 2 * x * y))
    v = field(b, lambda x, y: (2 + 2 * b) * x, lambda x, y: ((2 + 2 * b) + 0 * x, 0 * y))
    res = [rellich_residual(w, v, ball_quadrature((0.0, 0.0), 0.7, b, True, n, 2 * n))
           for n in (1, 2, 4)]
    assert res[0] / res[1] >= 4
    assert res[2] < 1e-12


def test_midpoint_rule_is_second_order():
    w, v = RELLICH_CASES[1][1:]
    res = [rellich_residual(w, v, ball_quadrature((0.0, 0.0), 0.7, 0.4, True, n, 2 * n, "midpoint"))
           for n in (8, 16, 32)]
    ratios = np.array(res[:-1]) / np.array(res[1:])
    np.testing.assert_allclose(ratios, 4.0, rtol=0.05)


def test_interior_exterior():
    q = ball_quadrature((0.0, 2.0), 0.5, 0.0)
    ie = interior_exterior_check(ONE, ZERO, q)
    # |B_r| / (r |∂B_r|) = 1/2 in two dimensions
    assert ie.C_empirical == pytest.approx(0.5, rel=1e-12)
    lhs, rhs, C = interior_exterior_check(ZERO, ZERO, q)
    assert (lhs, rhs, C) == (0.0, 0.0, 0.0)
    lin = field(0.0, lambda x, y: x, lambda x, y: (1 + 0 * x, 0 * y))
    assert interior_exterior_check(lin, ZERO, ball_quadrature((0.0, 0.0), 0.5, 0.0)).C_empirical <= 1
    assert ie.identity_residual < 1e-12


def test_dk_identity_polynomial():
    q = ball_quadrature((0.3, 2.0), 0.6, 0.0)
    assert dk_boundary_identity_residual(LINEAR, q, 0) < 1e-12
    assert dk_boundary_identity_residual(ONE, q, 0) == 0.0


def test_dk_identity_extension(closed_profiles):
    g = XGrid(1, 1024)
    u = extend(BoundaryFunction(g, np.cos(g.nodes)), closed_profiles(1.5))
    res = [[dk_boundary_identity_residual(u, ball_quadrature((1.0, 1.0), 0.5, 0.0, False, n, 2 * n), k)
            for k in range(2)] for n in (2, 4, 8, 24)]
    assert max(res[-1]) < 1e-4
    for k in range(2):
        assert res[0][k] / res[1][k] >= 4


def test_vanishing_order_examples():
    g = XGrid(1, 4096)
    x = g.nodes
    radii = np.geomspace(0.5, 0.05, 8)
    assert vanishing_order(BoundaryFunction(g, np.ones(x.size)), 1.0, radii) == pytest.approx(1, abs=1e-6)
    assert vanishing_order(BoundaryFunction(g, np.sin(x - 2.0)), 2.0, radii) == pytest.approx(2, abs=0.05)


@pytest.mark.parametrize("k", [1, 2, 4])
def test_vanishing_order_planted(k):
    g = XGrid(1, 4096)
    f = BoundaryFunction(g, np.sin(g.nodes - 2.0) ** (k - 1) * (1 + 0.5 * np.cos(g.nodes)))
    assert vanishing_order(f, 2.0, np.geomspace(0.5, 0.05, 8)) == pytest.approx(k, abs=0.2)


def test_vanishing_order_flat_point():
    g = XGrid(1, 4096)
    d = np.angle(np.exp(1j * (g.nodes - 3.0)))
    with np.errstate(divide="ignore"):
        f = BoundaryFunction(g, np.where(d == 0, 0.0, np.exp(-1 / d ** 2)))
    slopes = [vanishing_order(f, 3.0, np.geomspace(hi, hi / 2, 4)) for hi in (0.8, 0.4, 0.2)]
    # analytic oracle: d/dlog r of log ∫ e^{-1/x^2} grows like 2/r^2
    assert slopes[0] < slopes[1] < slopes[2]
    assert slopes[-1] > 20


def test_vanishing_order_needs_radii():
    g = XGrid(1, 64)
    f = BoundaryFunction(g, np.ones(64))
    with pytest.raises(InsufficientRadii):
        vanishing_order(f, 1.0, [0.5, 0.1, 0.05])
    with pytest.raises(ValueError):
        vanishing_order(f, 1.0, [0.1, 0.5, 1.0])
