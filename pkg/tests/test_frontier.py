"""Free-boundary extraction, expansion fits and barrier certificates."""

import numpy as np
import pytest

from fracsig.closed_forms import FracOrder, eval_w0s, eval_w1s
from fracsig.errors import (
    DivisionNearZero,
    EmptyFreeBoundary,
    GraphTooRough,
    TauOutOfRange,
)
from fracsig.frontier import (
    build_barrier,
    build_whitney_cover,
    extract_free_boundary,
    fit_expansion,
    harnack_ratio,
    nondegeneracy_check,
    subsolution_check,
)
from fracsig.solver import ProblemSpec, WeightedGrid, solution_from_samples, solve_vi


def test_crossing_sits_at_the_model_origin(model_solution):
    sol = model_solution(0.5, 1.0 / 32.0)
    crossings = np.atleast_1d(np.asarray(extract_free_boundary(sol), dtype=float))
    assert np.min(np.abs(crossings)) <= 1.0 / 32.0


def test_polyline_for_a_two_dimensional_thin_space(model_solution):
    sol = model_solution(0.5, 1.0 / 8.0, n=2)
    poly = np.asarray(extract_free_boundary(sol), dtype=float)
    assert poly.ndim == 2 and poly.shape[1] == 2
    # data is x1-independent: the polyline is the straight line x_n = 0
    assert np.max(np.abs(poly[:, 1])) <= 2.0 / 8.0


def test_constant_contact_mask_has_no_boundary():
    g = WeightedGrid(n=1, extents=((-1.0, 1.0), (0.0, 1.0)), h=1.0 / 16.0,
                     s=FracOrder(0.5))
    for load in (6.0, -6.0):  # full contact / fully detached
        spec = ProblemSpec(
            grid=g,
            f=lambda xn, z, c=load: c * np.ones_like(xn),
            rhs_form="volume",
            obstacle=lambda *a: np.zeros_like(a[0]),
        )
        sol = solve_vi(spec, tol=1e-11, omega="auto")
        with pytest.raises(EmptyFreeBoundary):
            extract_free_boundary(sol)


def test_expansion_fit_recovers_a_planted_coefficient():
    sv = FracOrder(0.5)
    grid = WeightedGrid(n=1, extents=((-1.0, 1.0), (0.0, 1.0)), h=1.0 / 64.0, s=sv)
    spec = ProblemSpec(grid=grid, obstacle=lambda *a: np.zeros_like(a[0]))
    sol = solution_from_samples(spec, lambda xn, z: 0.85 * np.asarray(eval_w1s(sv, xn, z)))
    fit = fit_expansion(sol, x0=(0.0,))
    assert fit.c == pytest.approx(0.85, abs=1e-3)
    assert fit.nu == (1.0,)
    assert len(fit.window_radii) == len(fit.residuals)


def test_expansion_fit_on_solver_output(model_solution):
    sol = model_solution(0.5, 1.0 / 32.0)
    x0 = float(np.atleast_1d(extract_free_boundary(sol))[0])
    fit = fit_expansion(sol, x0=(x0,))
    assert 0.9 <= fit.c <= 1.1
    assert fit.nu == (1.0,)


def test_expansion_fit_finds_a_rotated_profile():
    nu = (0.6, 0.8)
    sv = FracOrder(0.5)
    grid = WeightedGrid(
        n=2, extents=((-1.0, 1.0), (-1.0, 1.0), (0.0, 1.0)), h=1.0 / 16.0, s=sv
    )
    spec = ProblemSpec(grid=grid, obstacle=lambda *a: np.zeros_like(a[0]))

    def data(x1, xn, z):
        return 0.9 * np.asarray(eval_w1s(sv, x1 * nu[0] + xn * nu[1], z))

    sol = solution_from_samples(spec, data)
    fit = fit_expansion(sol, x0=(0.0, 0.0))
    assert fit.c == pytest.approx(0.9, abs=1e-6)
    assert fit.nu[0] == pytest.approx(nu[0], abs=1e-6)
    assert fit.nu[1] == pytest.approx(nu[1], abs=1e-6)


def test_whitney_cover_geometry():
    def g(t):
        return 0.05 * np.sin(t)

    cover = build_whitney_cover(g)
    assert cover.c1 == 0.25 and cover.c2 == 4.0
    assert len(cover.cubes) > 100
    ts = np.linspace(-1.2, 1.2, 4001)
    graph = np.column_stack([ts, g(ts)])
    for (ctr, diam), anchor, nu in zip(cover.cubes, cover.anchors, cover.normals):
        dc = float(np.min(np.hypot(graph[:, 0] - ctr[0], graph[:, 1] - ctr[1])))
        # center distance: cube distance in [diam, 4 diam] plus half-diagonal slack
        assert 0.99 * diam <= dc <= (4.0 + np.sqrt(2.0) / 2.0) * diam
        assert abs(g(anchor[0]) - anchor[1]) <= 1e-9
        assert np.hypot(*nu) == pytest.approx(1.0, abs=1e-12)
        assert nu[1] > 0.0  # oriented toward the non-contact side


def test_partition_of_unity_on_the_certified_collar():
    def g(t):
        return 0.05 * np.sin(t)

    cover = build_whitney_cover(g)
    rng = np.random.default_rng(7)
    cand = np.column_stack(
        [rng.uniform(-0.9, 0.9, 20000), rng.uniform(-0.9, 0.9, 20000)]
    )
    b = rng.uniform(0.02, 0.6, 20000)
    keep = cover.covered(cand, b)
    assert keep.sum() > 500
    part = cover.partition_values(cand[keep], b[keep])
    assert np.max(np.abs(part.sum(axis=1) - 1.0)) <= 1e-12
    raw = cover.bump_values(cand[keep], b[keep])
    assert raw.min() >= 0.0


def test_flat_barrier_value_is_the_perturbed_profile():
    s, tau = 0.5, 0.25
    lower = build_barrier(None, s, tau, "Lower")
    upper = build_barrier(0.0, s, tau, "Upper")
    assert lower.flat and upper.flat
    xt = np.array([[0.3], [0.0], [-0.2]])
    b = np.array([0.4, 0.5, 0.6])
    w0 = np.asarray(eval_w0s(s, xt[:, 0], b))
    assert np.allclose(lower.value(xt, b), w0 + w0 ** (1.0 + tau), rtol=1e-14)
    assert np.allclose(upper.value(xt, b), w0 - w0 ** (1.0 + tau), rtol=1e-14)

    # a scalar graph height shifts the profile argument
    off = build_barrier(0.1, 0.6, 0.2, "Lower")
    w0o = np.asarray(eval_w0s(0.6, xt[:, 0] - 0.1, b))
    assert np.allclose(off.value(xt, b), w0o + w0o**1.2, rtol=1e-14)
    assert off.g_offset == 0.1


@pytest.mark.parametrize("s,tau", [(0.3, 0.1), (0.5, 0.25), (0.7, 0.25)])
def test_flat_margins_match_the_analytic_constant(s, tau):
    rng = np.random.default_rng(31)
    pts = (np.column_stack([rng.uniform(-1.0, 1.0, 1000)]),
           rng.uniform(0.05, 1.0, 1000))
    m_lower = subsolution_check(build_barrier(None, s, tau, "Lower"), pts)
    m_upper = subsolution_check(build_barrier(None, s, tau, "Upper"), pts)
    const = 2.0 * s * s * tau * (1.0 + tau) * 2.0 ** (s * (1.0 + tau) - 1.0)
    # the sampled minimum approaches the analytic infimum from above
    assert const - 1e-12 <= m_lower <= 1.01 * const
    assert m_upper == pytest.approx(-m_lower, rel=1e-12)


def test_curved_barrier_certificate():
    def g(t):
        return 0.05 * np.sin(t)

    barrier = build_barrier(g, 0.7, 0.25, "Lower")
    assert not barrier.flat
    rng = np.random.default_rng(13)
    cand = np.column_stack(
        [rng.uniform(-0.9, 0.9, 20000), rng.uniform(-0.9, 0.9, 20000)]
    )
    b = rng.uniform(0.02, 0.6, 20000)
    keep = barrier.cover.covered(cand, b)
    m = subsolution_check(barrier, (cand[keep][:1000], b[keep][:1000]))
    assert m > 0.0


def test_barrier_input_validation():
    with pytest.raises(TauOutOfRange):
        build_barrier(None, 0.7, 0.45, "Lower")  # above (1-s)/s
    with pytest.raises(TauOutOfRange):
        build_barrier(None, 0.5, 0.25, "Lower", holder_alpha=0.1)  # above alpha/s
    with pytest.raises(ValueError):
        build_barrier(None, 0.5, 0.25, "Middle")
    with pytest.raises(GraphTooRough):
        build_barrier(lambda t: 0.5 * np.sin(25.0 * t), 0.5, 0.25, "Lower")


def test_nondegeneracy_on_the_model_run(model_solution):
    sol = model_solution(0.5, 1.0 / 32.0)
    gamma = [(x,) for x in np.atleast_1d(extract_free_boundary(sol))]
    assert nondegeneracy_check(sol, gamma) > 0.0


def test_harnack_ratio_of_proportional_fields():
    rng = np.random.default_rng(5)
    pts = (rng.uniform(-1.0, 1.0, (80, 1)), rng.uniform(0.1, 1.0, 80))

    def u1(x_thin, b):
        return np.asarray(eval_w0s(0.5, np.asarray(x_thin)[..., 0], b))

    def u2(x_thin, b):
        return 2.3 * np.asarray(eval_w0s(0.5, np.asarray(x_thin)[..., 0], b))

    lo, hi = harnack_ratio(u1, u2, pts)
    assert lo == pytest.approx(2.3, rel=1e-12)
    assert hi == pytest.approx(2.3, rel=1e-12)

    def sign_changing(x_thin, b):
        return np.asarray(eval_w1s(0.5, np.asarray(x_thin)[..., 0], b))

    with pytest.raises(DivisionNearZero):
        harnack_ratio(sign_changing, u2, pts)
