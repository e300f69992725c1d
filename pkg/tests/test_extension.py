import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclab import (BoundaryFunction, DivergentEnergy, GridMismatch, InsufficientGrid,
                     WrongOrder, XGrid, apply_delta_b, equation1_residual, extend,
                     extension_energy, frac_laplacian_spectral, make_order, neumann_trace,
                     odd_trace_residual, regularized_energy_limit, trace_inequality_check,
                     worker_count, write_field_csv)
from fraclab.extension import DEFAULT_EPSILONS


def trace(grid, kind):
    x = grid.nodes
    return BoundaryFunction(grid, {
        "cos": np.cos(x),
        "cos+cos7": np.cos(x) + np.cos(7 * x),
        "gaussian": np.exp(-(x - np.pi) ** 2 / 0.5),
        "const": np.full(x.size, 2.5),
    }[kind])


def test_single_mode_extension(closed_profiles, grid256):
    p = closed_profiles(1.5)
    u = extend(BoundaryFunction(grid256, np.cos(3 * grid256.nodes)), p)
    expected = np.cos(3 * grid256.nodes)[:, None] * (1 + 3 * p.y) * np.exp(-3 * p.y)
    np.testing.assert_allclose(u.values, expected, atol=1e-13)
    np.testing.assert_allclose(u.values[:, 0], u.source.values, atol=1e-14)


def test_constant_extension(closed_profiles, grid256):
    u = extend(trace(grid256, "const"), closed_profiles(2.7))
    np.testing.assert_allclose(u.values, 2.5, atol=1e-13)
    rep = extension_energy(u)
    assert rep.lhs == 0 and rep.rhs == pytest.approx(0, abs=1e-20)
    np.testing.assert_allclose(neumann_trace(u).values, 0.0, atol=1e-13)
    assert odd_trace_residual(u, 0) < 1e-10
    lhs, rhs, ok = trace_inequality_check(u)
    assert lhs == 0 and ok


def test_fourier_slices_match_profile(closed_profiles):
    grid = XGrid(1, 64)
    p = closed_profiles(1.3)
    rng = np.random.default_rng(1)
    k = np.arange(1, 6)
    c = rng.standard_normal(5)
    f = BoundaryFunction(grid, sum(ci * np.cos(ki * grid.nodes) for ci, ki in zip(c, k)))
    u = extend(f, p)
    U_hat = np.fft.rfft(u.values, axis=0) / 64
    for ci, ki in zip(c, k):
        np.testing.assert_allclose(U_hat[ki].real, 0.5 * ci * p.evaluate(ki * p.y), atol=1e-13)


def test_grid_mismatch(closed_profiles, grid256):
    u = extend(trace(grid256, "cos"), closed_profiles(1.5))
    with pytest.raises(GridMismatch):
        u.with_values(u.values[:, :-1])


def test_delta_b_closed_form(closed_profiles, grid256):
    p = closed_profiles(1.5)
    k = 2
    u = extend(BoundaryFunction(grid256, np.cos(k * grid256.nodes)), p)
    got = apply_delta_b(u).values
    exact = -2 * k ** 2 * np.cos(k * grid256.nodes)[:, None] * np.exp(-k * p.y)
    assert np.max(np.abs(got - exact)) < 1e-5


@pytest.mark.parametrize("b_gamma", [1.3, 2.7, 0.5])
def test_delta_b_polynomial(closed_profiles, grid256, b_gamma):
    p = closed_profiles(b_gamma)
    u = extend(trace(grid256, "cos"), p)
    v = u.with_values(np.broadcast_to(p.y ** 2, u.values.shape))
    out = apply_delta_b(v).values
    np.testing.assert_allclose(out[:, 1:-1], 2 + 2 * p.order.b, atol=1e-6)
    ones = u.with_values(np.ones_like(u.values))
    # round-off floor: stencil weights near y = 0 reach 1e7 and b/y reaches 1e5
    np.testing.assert_allclose(apply_delta_b(ones).values, 0.0, atol=1e-6)
    np.testing.assert_allclose(apply_delta_b(ones).values[:, u.y > 0.1], 0.0, atol=1e-9)


def test_delta_b_needs_levels(grid256):
    from fraclab import HalfSpaceField
    u = HalfSpaceField(grid256, np.array([0.0, 1.0, 2.0]), np.zeros((256, 3)), make_order(1.5))
    with pytest.raises(InsufficientGrid):
        apply_delta_b(u)


def test_iterate_fallback_matches_cache(closed_profiles, grid256):
    u = extend(trace(grid256, "cos"), closed_profiles(1.5))
    fd = u.with_values(u.values).iterate(1)
    # compare away from the far boundary where the one-sided stencil is coarse
    sel = u.y < 20
    assert np.max(np.abs(fd[:, sel] - u.iterates[1][:, sel])) < 1e-5


@pytest.mark.parametrize("g", [0.5, 1.3, 1.5, 2.5, 2.7])
def test_energy_ratio_equals_J(closed_profiles, g):
    grid = XGrid(1, 256)
    p = closed_profiles(g)
    ratios = [extension_energy(extend(trace(grid, kind), p)).ratio
              for kind in ("cos", "cos+cos7", "gaussian")]
    np.testing.assert_allclose(ratios, p.J_value, rtol=1e-3)
    # f-independence of the constant
    assert np.std(ratios) / np.mean(ratios) < 1e-4


def test_energy_report_json(closed_profiles, grid256):
    rep = extension_energy(extend(trace(grid256, "cos"), closed_profiles(1.5)))
    assert rep.ratio == pytest.approx(2.0, rel=1e-4)
    assert '"J_expected": 2.0' in rep.to_json()


def test_divergent_energy(closed_profiles, grid256):
    u = extend(trace(grid256, "cos"), closed_profiles(1.5))
    v = u.with_values(u.values + np.broadcast_to(1e-3 * np.cos(grid256.nodes)[:, None] * u.y / 30,
                                                 u.values.shape))
    with pytest.raises(DivergentEnergy):
        extension_energy(extend(trace(grid256, "cos"), closed_profiles(1.5))
                         .__class__(v.x_grid, v.y, v.values, v.order, source=v.source,
                                    profile=u.profile))


def test_neumann_single_mode(closed_profiles, grid256):
    p = closed_profiles(1.5)
    u = extend(BoundaryFunction(grid256, np.cos(3 * grid256.nodes)), p)
    np.testing.assert_allclose(neumann_trace(u).values, 2 * 27 * np.cos(3 * grid256.nodes),
                               rtol=0, atol=1e-4 * 54)


@pytest.mark.parametrize("g", [0.5, 1.3, 2.5])
def test_neumann_gaussian(closed_profiles, g):
    grid = XGrid(1, 1024)
    p = closed_profiles(g)
    f = trace(grid, "gaussian")
    got = neumann_trace(extend(f, p)).values / p.neumann_c
    ref = frac_laplacian_spectral(f, p.order).values
    assert np.linalg.norm(got - ref) / np.linalg.norm(ref) < 1e-3


def test_neumann_needs_spectral_field(closed_profiles, grid256):
    u = extend(trace(grid256, "cos"), closed_profiles(1.5))
    with pytest.raises(GridMismatch):
        neumann_trace(u.with_values(u.values))


def test_regularized_energy_cos(closed_profiles, grid256):
    u = extend(trace(grid256, "cos"), closed_profiles(1.5))
    rep = regularized_energy_limit(u)
    # oracle: (1/2) mean(cos^2) * 2 * integral (2 e^{-y})^2 dy = 1/2
    assert rep.bulk_energy_half == pytest.approx(0.5, rel=1e-4)
    assert rep.extrapolated_limit == pytest.approx(0.5, rel=1e-6)
    assert rep.relative_discrepancy < 1e-2
    gaps = np.abs(rep.finite_part_estimates - rep.bulk_energy_half)
    assert np.all(np.diff(gaps) < 0)


def test_regularized_energy_halving(closed_profiles, grid256):
    u = extend(trace(grid256, "cos"), closed_profiles(1.5))
    base = regularized_energy_limit(u).extrapolated_limit
    finer = regularized_energy_limit(u, np.append(DEFAULT_EPSILONS, DEFAULT_EPSILONS[-1] / 2))
    assert abs(finer.extrapolated_limit - base) < 1e-3 * abs(base)


def test_regularized_energy_constant(closed_profiles, grid256):
    rep = regularized_energy_limit(extend(trace(grid256, "const"), closed_profiles(1.5)))
    assert rep.extrapolated_limit == pytest.approx(0.0, abs=1e-12)
    assert rep.bulk_energy_half == pytest.approx(0.0, abs=1e-12)


def test_regularized_energy_wrong_order(closed_profiles, grid256):
    with pytest.raises(WrongOrder):
        regularized_energy_limit(extend(trace(grid256, "cos"), closed_profiles(2.5)))


def test_odd_traces(closed_profiles, grid256):
    u = extend(trace(grid256, "cos"), closed_profiles(1.5))
    assert odd_trace_residual(u, 0) < 1e-6
    with pytest.raises(ValueError):
        odd_trace_residual(u, 1)
    u = extend(trace(grid256, "cos+cos7"), closed_profiles(2.7))
    assert max(odd_trace_residual(u, k) for k in range(2)) < 1e-4


def test_odd_trace_refinement(closed_profiles, grid256):
    f = trace(grid256, "cos+cos7")
    res = [odd_trace_residual(extend(f, closed_profiles(1.3, ny=n)), 0) for n in (128, 256, 512)]
    assert res[0] / res[1] >= 3 and res[1] / res[2] >= 3


@pytest.mark.parametrize("g", [1.5, 0.5])
def test_equation1(closed_profiles, grid256, g):
    u = extend(trace(grid256, "cos"), closed_profiles(g))
    assert equation1_residual(u) < 1e-5
    bad = u.with_values(u.values + 1e-2 * np.cos(grid256.nodes)[:, None] * u.y ** 3)
    assert equation1_residual(bad) > 1e-2


def test_equation1_refinement(closed_profiles, grid256):
    f = trace(grid256, "cos+cos7")
    res = [equation1_residual(extend(f, closed_profiles(1.5, ny=n))) for n in (128, 256, 512)]
    assert res[0] / res[1] >= 3 and res[1] / res[2] >= 3


def test_trace_inequality(closed_profiles, grid256):
    p = closed_profiles(1.5)
    u = extend(trace(grid256, "cos+cos7"), p)
    lhs, rhs, ok = trace_inequality_check(u)
    assert ok and rhs == pytest.approx(lhs, rel=1e-3)
    y = u.y
    bump = np.where((y > 1) & (y < 2), np.sin(np.pi * (y - 1)) ** 4, 0.0)
    v = u.with_values(u.values + 0.1 * np.cos(2 * grid256.nodes)[:, None] * bump)
    v = type(u)(v.x_grid, v.y, v.values, v.order, source=u.source, profile=p)
    lhs2, rhs2, ok2 = trace_inequality_check(v)
    assert ok2 and lhs2 == lhs and rhs2 > rhs * (1 + 1e-3)


@settings(max_examples=10)
@given(st.integers(0, 2 ** 31))
def test_energy_identity_random_traces(closed_profiles, seed):
    grid = XGrid(1, 256)
    rng = np.random.default_rng(seed)
    k = np.arange(1, 9)
    c = rng.standard_normal(8) / k ** 2
    f = BoundaryFunction(grid, sum(ci * np.cos(ki * grid.nodes + ki) for ci, ki in zip(c, k)))
    p = closed_profiles(2.7)
    assert extension_energy(extend(f, p)).ratio == pytest.approx(p.J_value, rel=1e-3)


def test_two_dimensional_trace(closed_profiles):
    grid = XGrid(2, 32)
    X, Y = grid.mesh()
    f = BoundaryFunction(grid, np.cos(X) * np.cos(2 * Y))
    p = closed_profiles(1.5)
    u = extend(f, p)
    assert extension_energy(u).ratio == pytest.approx(2.0, rel=1e-4)
    got = neumann_trace(u).values / p.neumann_c
    np.testing.assert_allclose(got, frac_laplacian_spectral(f, p.order).values, atol=1e-3)


def test_worker_count(monkeypatch):
    monkeypatch.delenv("FRACLAB_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("FRACLAB_THREADS", "3")
    assert worker_count() == 3
    for bad in ("0", "x"):
        monkeypatch.setenv("FRACLAB_THREADS", bad)
        with pytest.raises(ValueError):
            worker_count()


def test_field_csv(tmp_path, closed_profiles):
    grid = XGrid(1, 16)
    u = extend(BoundaryFunction(grid, np.cos(grid.nodes)), closed_profiles(2.5, ny=256))
    path = write_field_csv(u, tmp_path / "u.csv", x_stride=4, y_stride=32)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x", "y", "U", "U_1", "U_2"]
    assert len(rows) == 1 + 4 * 9
