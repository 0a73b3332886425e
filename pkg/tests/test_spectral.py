"""Homogeneous modes, the angular eigenvalue oracle and boundary fits."""

from fractions import Fraction

import numpy as np
import pytest

from fracsig.closed_forms import eval_w0s, eval_w1s
from fracsig.errors import InsufficientSamples
from fracsig.jets import variables
from fracsig.spectral import (
    HomogeneousMode,
    enumerate_homogeneous,
    eval_mode_2d,
    eigenvalue,
    fit_boundary_expansion,
    hypergeom_coeffs,
    make_mode,
    mode_jet,
    recurrence_step,
    sl_eigen_oracle,
)

S_FRACTIONS = (Fraction(3, 10), Fraction(1, 2), Fraction(7, 10))


@pytest.mark.parametrize("s", S_FRACTIONS)
def test_series_terminates_exactly_in_rational_arithmetic(s):
    for k in range(13):
        coeffs = hypergeom_coeffs(k, s)
        assert len(coeffs) == k + 1
        assert all(isinstance(c, Fraction) for c in coeffs)
        assert coeffs[0] == 1
        # the recurrence factor vanishes exactly at m = k, so the series is
        # a polynomial: the would-be coefficient a_{k+1} is identically zero
        assert recurrence_step(k, s, k, coeffs[k]) == 0
        # and the recurrence reproduces the stored chain without rounding
        for m in range(k):
            assert coeffs[m + 1] == recurrence_step(k, s, m, coeffs[m])


def test_first_coefficients_match_hand_values():
    # a_1 = -2/(1+s) for k = 1
    assert hypergeom_coeffs(1, Fraction(3, 10)) == [Fraction(1), Fraction(-20, 13)]
    assert hypergeom_coeffs(1, Fraction(1, 2)) == [Fraction(1), Fraction(-4, 3)]
    # float input degrades gracefully to float arithmetic
    got = hypergeom_coeffs(3, 0.3)
    assert all(isinstance(c, float) for c in got)
    assert got[1] == pytest.approx(-12.0 / 1.3, rel=1e-15)


@pytest.mark.parametrize("s", (Fraction(3, 10), Fraction(1, 2), Fraction(3, 4)))
def test_eigenvalue_law_is_exact(s):
    for k in range(11):
        lam2 = eigenvalue(k, s)
        assert lam2 == k * (k + 1) - s * (s - 1)
        assert isinstance(lam2, Fraction)


@pytest.mark.parametrize("s", (0.3, 0.5, 0.7))
def test_degree_one_mode_is_the_half_space_profile(s):
    # the k = 1 mode and w_{1,s} span the same line: their ratio must be a
    # single constant across scattered points
    mode = make_mode(1, s)
    rng = np.random.default_rng(11)
    a = rng.uniform(-0.9, 0.9, size=100)
    b = rng.uniform(0.05, 1.0, size=100)
    ratio = np.asarray(eval_mode_2d(mode, a, b)) / np.asarray(eval_w1s(s, a, b))
    assert np.max(np.abs(ratio - ratio[0])) <= 1e-12 * abs(ratio[0])


def test_mode_container_validates_its_invariants():
    good = make_mode(2, 0.4)
    with pytest.raises(ValueError):
        HomogeneousMode(k=2, s=0.4, coeffs=good.coeffs[:-1],
                        eigenvalue=good.eigenvalue, homogeneity=good.homogeneity)
    with pytest.raises(ValueError):
        HomogeneousMode(k=2, s=0.4, coeffs=good.coeffs,
                        eigenvalue=good.eigenvalue + 0.5, homogeneity=good.homogeneity)
    with pytest.raises(ValueError):
        HomogeneousMode(k=2, s=0.4, coeffs=good.coeffs,
                        eigenvalue=good.eigenvalue, homogeneity=1.0)
    with pytest.raises(ValueError):
        HomogeneousMode(k=2, s=0.4, coeffs=(0.0,) + good.coeffs[1:],
                        eigenvalue=good.eigenvalue, homogeneity=good.homogeneity)


@pytest.mark.parametrize("s", (0.3, 0.5, 0.7))
@pytest.mark.parametrize("k", (0, 1, 2, 3, 5))
def test_modes_are_homogeneous_and_harmonic(s, k):
    mode = make_mode(k, s)
    assert mode.homogeneity == pytest.approx(k + s)
    rng = np.random.default_rng(17 + k)
    coords = np.column_stack(
        [rng.uniform(-0.9, 0.9, size=60), rng.uniform(0.1, 1.0, size=60)]
    )
    vals = np.asarray(eval_mode_2d(mode, coords[:, 0], coords[:, 1]))
    for lam in (0.5, 2.0):
        scaled = np.asarray(eval_mode_2d(mode, lam * coords[:, 0], lam * coords[:, 1]))
        assert np.allclose(scaled, lam ** (k + s) * vals, rtol=1e-12)
    # reduced operator residual (u_aa + u_bb) + (1-2s)/b * u_b from the jet
    a, b = variables(coords)
    jet = mode_jet(mode, a, b)
    res = jet.dd(0, 0) + jet.dd(1, 1) + (1.0 - 2.0 * s) / coords[:, 1] * jet.d(1)
    scale = max(1.0, float(np.max(np.abs(jet.dd(0, 0)))))
    assert np.max(np.abs(res)) <= 1e-11 * scale


def test_angular_oracle_tracks_the_eigenvalue_law():
    # coarse run: each of the first four eigenvalues within 1e-3 relative
    for s in (0.3, 0.5, 0.7):
        got = np.asarray(sl_eigen_oracle(s, 400, count=4))
        law = np.array([k * (k + 1) - s * (s - 1) for k in range(4)])
        assert np.all(np.abs(got - law) / law <= 2e-3), (s, got)


def test_angular_oracle_is_deterministic_and_refines():
    a1 = np.asarray(sl_eigen_oracle(0.3, 400, count=4))
    a2 = np.asarray(sl_eigen_oracle(0.3, 400, count=4))
    assert np.array_equal(a1, a2)
    law = np.array([k * (k + 1) - 0.3 * (0.3 - 1) for k in range(4)])
    coarse = np.abs(np.asarray(sl_eigen_oracle(0.3, 200, count=4)) - law) / law
    fine = np.abs(np.asarray(sl_eigen_oracle(0.3, 400, count=4)) - law) / law
    assert np.all(fine < coarse)


def test_angular_oracle_validates_inputs():
    with pytest.raises(ValueError):
        sl_eigen_oracle(0.5, 50)
    with pytest.raises(ValueError):
        sl_eigen_oracle(0.5, 400, count=0)
    with pytest.raises(ValueError):
        sl_eigen_oracle(0.5, 400, count=11)


@pytest.mark.parametrize(
    "kind,kappa",
    [("Dirichlet", 0.6), ("Dirichlet", 1.6), ("Neumann", 2.0), ("MixedDN", 0.3), ("MixedDN", 1.3)],
)
def test_enumerated_solutions_have_vanishing_residual(kind, kappa):
    s = 0.3
    basis = enumerate_homogeneous(kind, kappa, 1, s)
    assert basis.boundary_kind == kind
    assert len(basis.elements) >= 1
    rng = np.random.default_rng(23)
    pts = rng.uniform(0.1, 0.9, size=(80, 1))
    pts[::2, 0] *= -1.0
    b = rng.uniform(0.1, 1.0, size=80)
    for el in basis.elements:
        res = el.reduced_residual(pts, b)
        assert np.max(np.abs(res)) <= 1e-9, (kind, kappa)


def test_enumerate_rejects_bad_arguments():
    with pytest.raises(ValueError):
        enumerate_homogeneous("Robin", 1.0, 1, 0.5)
    with pytest.raises(ValueError):
        enumerate_homogeneous("Dirichlet", -1.0, 1, 0.5)


def test_boundary_fit_recovers_planted_coefficients():
    s = 0.3

    def field(xn, b):
        return 0.7 * b ** (2 * s) + 0.3 * xn * b ** (2 * s)

    fit = fit_boundary_expansion(field, "Dirichlet", s)
    assert fit.kind == "Dirichlet"
    assert fit.coeffs["a"] == pytest.approx(0.7, abs=1e-10)
    assert fit.coeffs["b_1"] == pytest.approx(0.3, abs=1e-10)
    # pure template data: remainders sit at the floor
    assert fit.saturated
    assert fit.decay_exponent == np.inf
    assert len(fit.remainders) == len(fit.radii)


def test_boundary_fit_measures_remainder_decay():
    s = 0.3

    def field(xn, b):
        # template part plus an x_n^2-weighted term two orders higher
        return 0.5 * b ** (2 * s) + 2.0 * xn * xn * b ** (2 * s)

    fit = fit_boundary_expansion(field, "Dirichlet", s)
    assert not fit.saturated
    # remainder ~ r^(2s+2) against template order r^(2s): slope about 2s+2
    assert fit.decay_exponent == pytest.approx(2 * s + 2, abs=0.3)
    rem = np.asarray(fit.remainders)
    assert np.all(rem[:-1] < rem[1:])  # radii ascend, remainders grow with r


def test_boundary_fit_mixed_kind_and_particular_term():
    s = 0.45

    def field(xn, b):
        r = np.hypot(xn, b)
        w0 = np.asarray(eval_w0s(s, xn, b))
        return 1.2 * w0 + 0.4 * w0 * (s * r - xn)

    fit = fit_boundary_expansion(field, "MixedDN", s)
    assert fit.coeffs["a0"] == pytest.approx(1.2, abs=1e-9)
    assert fit.coeffs["a1"] == pytest.approx(0.4, abs=1e-9)

    f0 = 0.8

    def field_inh(xn, b):
        clean = 0.6 * b ** (2 * s)
        return clean + f0 / (1.0 + 2.0 * s) * b ** (1.0 + 2.0 * s)

    fit2 = fit_boundary_expansion(field_inh, "Dirichlet", s, f0=f0)
    assert fit2.coeffs["a"] == pytest.approx(0.6, abs=1e-9)
    assert abs(fit2.coeffs["b_1"]) <= 1e-9


def test_boundary_fit_requires_enough_samples():
    with pytest.raises(InsufficientSamples):
        fit_boundary_expansion(lambda xn, b: b, "Neumann", 0.5, n=2, npts=5)
