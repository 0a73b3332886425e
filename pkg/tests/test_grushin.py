"""Quarter-space geometry, the degenerate operator and edge expansions."""

from fractions import Fraction

import numpy as np
import pytest
import sympy as sym
from hypothesis import given, settings, strategies as st

from fracsig import grushin as gr
from fracsig.closed_forms import v_model_jet, w1s_jet
from fracsig.errors import (
    AxisSingularity,
    BoundaryConditionViolated,
    InsufficientSamples,
    OutOfDomain,
)
from fracsig.jets import variables


def _symbolic_image(u_expr, ynS, ypS, y1S, s_frac):
    """Independent oracle: D_{G,s} u for an explicit sympy expression."""
    sS = sym.Rational(s_frac.numerator, s_frac.denominator)
    w = (ynS * ypS) ** (1 - 2 * sS)
    out = sym.diff(w * sym.diff(u_expr, ynS), ynS) + sym.diff(
        w * sym.diff(u_expr, ypS), ypS
    )
    if y1S is not None:
        out = out + w * (ynS**2 + ypS**2) * sym.diff(u_expr, y1S, 2)
    return out


@pytest.mark.parametrize("s_frac", (Fraction(3, 10), Fraction(1, 2), Fraction(3, 4)))
def test_operator_image_matches_symbolic_oracle(s_frac):
    ynS, ypS, y1S = sym.symbols("yn yp y1", positive=True)
    s = float(s_frac)
    sS = sym.Rational(s_frac.numerator, s_frac.denominator)
    cases = [
        # (terms for a PowerField on (y1, yn, yp), sympy expression)
        ((((0,), 4.0, 0.0, 1.0), ((0,), 2.0, 2.0, 0.5)),
         ynS**4 + ypS**2 * ynS**2 / 2),
        ((((2,), 1.0, 1.0, 1.0),), y1S**2 * ynS * ypS),
        ((((0,), float(2 * s_frac + 2), 0.0, 1.0),), ynS ** (2 * sS + 2)),
        ((((1,), 3.0, float(2 * s_frac), -0.7),), -sym.Rational(7, 10) * y1S * ynS**3 * ypS ** (2 * sS)),
    ]
    rng = np.random.default_rng(71)
    pts = np.round(
        np.column_stack([rng.uniform(0.2, 0.9, 25) for _ in range(3)]), 10
    )
    for terms, expr in cases:
        field = gr.PowerField(terms=terms)
        got = gr.delta_Gs(field, pts, s)
        img = _symbolic_image(expr, ynS, ypS, y1S, s_frac)
        want = np.array(
            [float(sym.N(img.subs({y1S: sym.Rational(f"{a:.10f}"),
                                   ynS: sym.Rational(f"{b:.10f}"),
                                   ypS: sym.Rational(f"{c:.10f}")}), 25))
             for a, b, c in pts]
        )
        scale = max(1.0, float(np.max(np.abs(want))))
        assert np.max(np.abs(got - want)) <= 1e-10 * scale, terms


@pytest.mark.parametrize("s", (0.3, 0.5, 0.7))
def test_edge_eigenfunctions_map_to_the_empty_field(s):
    # y_n^{2s} and y_n^{2s} y_1 are killed termwise: the image has no terms
    # at all, so it is zero on the whole quarter space, not just off-axis
    for template in (
        gr.eigen_template(s, 1.0, 0.0, 0.0),
        gr.eigen_template(s, 0.0, 0.0, 0.0, a_tan=(1.0,)),
    ):
        image = gr.apply_delta_Gs(template, s)
        assert image.terms == ()
        pts = np.array([[0.3, 0.4], [0.0, 0.7], [1.0, 0.0]])
        if template.terms[0][0] != ():
            pts = np.column_stack([np.ones(3), pts])
        assert np.all(image(pts) == 0.0)


@pytest.mark.parametrize("s", (0.3, 0.5, 0.7))
def test_mixed_quadratic_image_is_a_single_term(s):
    a_n, a_p = 0.37, -0.81
    image = gr.apply_delta_Gs(gr.eigen_template(s, 0.0, a_n, a_p), s)
    coeff = 4.0 * ((1.0 + s) * a_n + (1.0 - s) * a_p)
    assert len(image.terms) == 1
    beta, sn, sp, c = image.terms[0]
    assert beta == () and sn == 1.0 and sp == pytest.approx(1.0 - 2.0 * s, abs=0)
    assert c == pytest.approx(coeff, rel=1e-15)
    rng = np.random.default_rng(73)
    pts = rng.uniform(0.1, 1.0, (200, 2))
    want = coeff * pts[:, 0] * pts[:, 1] ** (1.0 - 2.0 * s)
    assert np.max(np.abs(image(pts) - want)) <= 1e-10 * np.max(np.abs(want))


def test_quarter_point_demands_nonnegative_pair():
    p = gr.QuarterPoint((0.2,), 0.3, 0.4)
    assert gr.quasi_metric(p, p) == 0.0
    with pytest.raises(OutOfDomain):
        gr.QuarterPoint((), -0.1, 0.5)
    with pytest.raises(OutOfDomain):
        gr.QuarterPoint((0.0,), 0.1, -0.5)


# coordinates away from the subnormal range: squaring the tangential gap
# underflows below ~1e-150 and the norm loses the homogeneity in its last ulps
_coord = st.floats(-1.5, 1.5).filter(lambda x: x == 0.0 or abs(x) > 1e-6)


@given(
    data=st.lists(_coord, min_size=6, max_size=6),
    lam=st.floats(0.2, 5.0),
)
@settings(max_examples=200, deadline=None)
def test_quasi_metric_is_dilation_homogeneous(data, lam):
    p = np.array([data[0], abs(data[1]), abs(data[2])])
    q = np.array([data[3], abs(data[4]), abs(data[5])])
    d = gr.quasi_metric(p, q)
    assert d >= 0.0
    assert gr.quasi_metric(q, p) == pytest.approx(d, rel=1e-15, abs=1e-300)
    scaled = gr.quasi_metric(gr.dilate(p, lam), gr.dilate(q, lam))
    assert scaled == pytest.approx(lam * d, rel=1e-12, abs=1e-300)


def test_quasi_triangle_constant_is_moderate_and_deterministic():
    k1 = gr.quasi_triangle_constant(ndim=3, ntriples=20000, seed=123)
    k2 = gr.quasi_triangle_constant(ndim=3, ntriples=20000, seed=123)
    assert k1 == k2
    assert 1.0 <= k1 <= 4.0


def test_anisotropic_degree_counts_tangential_slots_twice():
    assert gr.grushin_degree((0, 0, 3)) == 3
    assert gr.grushin_degree((2, 1, 0)) == 5
    assert gr.grushin_degree((1, 1, 1, 1)) == 2 + 2 + 1 + 1
    with pytest.raises(ValueError):
        gr.GrushinPolynomial(coeffs={(1, -1): 1.0})


def test_graded_polynomial_space_enumeration():
    got = gr.GrushinPolynomial.homogeneous_multiindices(3, 2)
    assert got == [(0, 3), (1, 2), (2, 1), (3, 0)]
    # brute force cross-check in three variables
    k, d = 4, 3
    brute = sorted(
        beta
        for beta in (
            (i, j, l) for i in range(5) for j in range(9) for l in range(9)
        )
        if gr.grushin_degree(beta) == k
    )
    assert sorted(gr.GrushinPolynomial.homogeneous_multiindices(k, d)) == brute
    space = gr.GrushinPolynomial.space_multiindices(2, 3)
    assert all(gr.grushin_degree(b) <= 2 for b in space)
    assert (1, 0, 0) in space  # tangential slot alone has degree 2


def test_random_polynomials_dilate_exactly_and_round_trip():
    rng = np.random.default_rng(79)
    for k in (2, 3, 5):
        poly = gr.GrushinPolynomial.random_member(k, 3, rng)
        assert poly.degree == k
        assert poly.is_homogeneous()
        y = rng.uniform(0.2, 0.9, (30, 3))
        vals = poly(y)
        scale = np.max(np.abs(vals))
        for lam in (0.5, 1.7):
            assert np.max(np.abs(poly(gr.dilate(y, lam)) - lam**k * vals)) <= 1e-12 * max(
                scale, 1.0
            )
        again = gr.GrushinPolynomial.from_json(poly.to_json())
        assert again.coeffs == poly.coeffs
        jet = poly.jet(variables(y))
        assert np.max(np.abs(jet.val - vals)) <= 1e-13 * max(scale, 1.0)


def test_finite_difference_mode_converges_at_fourth_order():
    s = 0.3
    rng = np.random.default_rng(83)
    pts = rng.uniform(0.3, 0.9, (40, 2))

    def u_jet(coords):
        yn, yp = coords[-2], coords[-1]
        return yn.sin() * yp.cos()

    def u_plain(y):
        return np.sin(y[..., -2]) * np.cos(y[..., -1])

    exact = gr.delta_Gs(u_jet, pts, s)
    e1 = np.max(np.abs(gr.delta_Gs(u_plain, pts, s, mode="finite_difference", step=4e-2) - exact))
    e2 = np.max(np.abs(gr.delta_Gs(u_plain, pts, s, mode="finite_difference", step=2e-2) - exact))
    assert 10.0 <= e1 / e2 <= 22.0  # ~16 for a fourth-order stencil
    with pytest.raises(AxisSingularity):
        gr.delta_Gs(u_plain, np.array([[0.001, 0.5]]), s,
                    mode="finite_difference", step=1e-2)


@pytest.mark.parametrize("s", (0.3, 0.5, 0.7))
def test_opening_identity_holds_for_assorted_profiles(s):
    rng = np.random.default_rng(89)
    samples = np.column_stack([rng.uniform(0.1, 1.0, 300), rng.uniform(0.1, 1.0, 300)])
    profiles = (
        lambda a, b: a,                      # x_n
        lambda a, b: b * b,                  # x_{n+1}^2
        lambda a, b: w1s_jet(s, a, b),
    )
    for u in profiles:
        assert gr.open_domain_check(u, samples, s) <= 1e-10
    with pytest.raises(AxisSingularity):
        gr.open_domain_check(profiles[0], np.array([[0.0, 0.5]]), s)


def test_eigenpoly_fit_reads_off_the_model_coefficients():
    s = 0.3

    def v(pts):
        yn, yp = pts[:, -2], pts[:, -1]
        return 0.5 * (-(s / (1.0 + s)) * yn ** (2 * s + 2) + yn ** (2 * s) * yp**2)

    fit = gr.fit_grushin_eigenpoly(v, s)
    assert abs(fit.a0) <= 1e-12
    assert fit.a_n == pytest.approx(-s / (2.0 * (1.0 + s)), abs=1e-10)
    assert fit.a_np1 == pytest.approx(0.5, abs=1e-10)
    assert fit.harmonicity_defect == pytest.approx(2.0 - 4.0 * s, abs=1e-9)
    assert fit.decay_slope == np.inf  # pure template saturates the remainder


def test_eigenpoly_fit_measures_planted_remainder_decay():
    s = 0.3

    def v(pts):
        yn, yp = pts[:, -2], pts[:, -1]
        base = yn ** (2 * s) * (0.2 + 0.1 * yn * yn - 0.3 * yp * yp)
        return base + 0.05 * yn ** (2 * s) * (yn + yp) ** 3.5

    fit = gr.fit_grushin_eigenpoly(v, s)
    # remainder ~ y_n^{2s} r^{3.5}: weighted RMS over a radius-r ball decays
    # with slope 2s + 3.5
    assert fit.decay_slope == pytest.approx(2.0 * s + 3.5, abs=0.2)
    rems = np.asarray(fit.remainders)
    assert np.all(rems[:-1] > rems[1:])  # radii descend in the report

    with pytest.raises(InsufficientSamples):
        gr.fit_grushin_eigenpoly(v, s, nsamples=3)


def test_edge_decomposition_of_the_model_velocity():
    s = 0.3

    def v(pts):
        yn, yp = pts[:, -2], pts[:, -1]
        return 0.5 * (-(s / (1.0 + s)) * yn ** (2 * s + 2) + yn ** (2 * s) * yp**2)

    dec = gr.xy_decompose(v, s, alpha=0.5, eps=0.4)
    assert abs(dec.c0) <= 1e-10
    assert dec.a0 == pytest.approx(-s / (2.0 * (1.0 + s)), abs=1e-10)
    assert dec.a1 == pytest.approx(0.5, abs=1e-10)
    # pure display: every remainder seminorm sits at zero
    assert max(abs(float(t)) for t in dec.seminorms.values()) <= 1e-9

    with pytest.raises(ValueError):
        gr.xy_decompose(v, s, alpha=0.3, eps=0.4)  # eps must not exceed alpha
    with pytest.raises(BoundaryConditionViolated):
        gr.xy_decompose(lambda pts: 1.0 + pts[:, -2], s, alpha=0.5, eps=0.4)


def test_edge_decomposition_resolves_tangential_profiles():
    s = 0.3

    def v(pts):
        return np.sin(pts[:, 0]) * pts[:, -2] ** (2 * s)

    dec = gr.xy_decompose(v, s, alpha=0.5, eps=0.4, ntan=1)
    grid = np.asarray(dec.y_tan_grid)
    c0 = np.asarray(dec.c0)
    assert c0.shape == grid.shape
    assert np.max(np.abs(c0 - np.sin(grid))) <= 1e-8


def test_rhs_decomposition_reads_off_the_leading_constant():
    s = 0.3

    def f_img(pts):
        yn, yp = pts[:, -2], pts[:, -1]
        return (2.0 - 4.0 * s) * yn * yp ** (1.0 - 2.0 * s)

    dec = gr.decompose_rhs(f_img, s, alpha=0.5, eps=0.4)
    assert dec.f0 == pytest.approx(2.0 - 4.0 * s, abs=1e-9)

    def f_cos(pts):
        yn, yp = pts[:, -2], pts[:, -1]
        return np.cos(pts[:, 0]) * yn * yp ** (1.0 - 2.0 * s)

    dect = gr.decompose_rhs(f_cos, s, alpha=0.5, eps=0.4, ntan=1)
    grid = np.asarray(dect.y_tan_grid)
    f0 = np.asarray(dect.f0)
    assert np.max(np.abs(f0 - np.cos(grid))) <= 1e-8
