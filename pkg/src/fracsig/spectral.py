"""Homogeneous solutions of the degenerate operator with slit boundary data.

The 2D building blocks are the modes u_k = r^{k+s} z^s h_k(z) with
z = (1 + x_n/r)/2 and h_k a degree-k polynomial whose coefficients obey a
terminating recurrence; their squared angular frequencies follow the law
λ² = k(k+1) − s(s−1).  A discretized weighted Sturm–Liouville problem serves
as an independent numerical oracle for that law.  Higher-dimensional
homogeneous solutions (Dirichlet / Neumann / mixed data on the thin space)
are enumerated from candidate monomial products and verified by residual
nullspace extraction, because the naive index bookkeeping couples the
polynomial factors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .closed_forms import FracOrder, _r_rp_rm, _rp_jet, _sval, eval_w0s
from .errors import DegenerateFit, InsufficientSamples, SolverFailure
from .jets import Jet

__all__ = [
    "HomogeneousMode",
    "HomogeneousBasis",
    "BasisElement",
    "BoundaryFit",
    "eigenvalue",
    "hypergeom_coeffs",
    "recurrence_step",
    "make_mode",
    "eval_mode_2d",
    "mode_jet",
    "sl_eigen_oracle",
    "enumerate_homogeneous",
    "fit_boundary_expansion",
]

_ENUM_SEED = 7310985
_INT_TOL = 1e-9


def eigenvalue(k: int, s):
    """Squared angular frequency λ² = k(k+1) − s(s−1) of the k-th slit mode.

    Exact when s is a Fraction; equivalently κ² + (1−2s)κ with κ = k + s.
    """
    if k < 0 or k != int(k):
        raise ValueError(f"k must be a nonnegative integer, got {k}")
    k = int(k)
    if isinstance(s, Fraction):
        return k * (k + 1) - s * (s - 1)
    return k * (k + 1) - _sval(s) * (_sval(s) - 1.0)


def recurrence_step(k: int, s, m: int, a_m):
    """One step of the coefficient recurrence: returns a_{m+1} given a_m."""
    num = m * (m + 1) - k * (k + 1)
    den = (m + 1) * (m + 1 + s)
    return a_m * num / den


def hypergeom_coeffs(k: int, s):
    """Coefficients a_0..a_k of the terminating series h_k(z) = Σ a_m z^m.

    a_0 = 1.  Passing a Fraction for s keeps the arithmetic exact; the next
    recurrence step past m = k − 1 vanishes identically (the numerator is
    m(m+1) − k(k+1) evaluated at m = k), which is what makes h_k a
    polynomial.
    """
    if k < 0 or k != int(k):
        raise ValueError(f"k must be a nonnegative integer, got {k}")
    k = int(k)
    exact = isinstance(s, Fraction)
    sv = s if exact else _sval(s)
    a = Fraction(1) if exact else 1.0
    coeffs = [a]
    for m in range(k):
        a = recurrence_step(k, sv, m, a)
        coeffs.append(a)
    return coeffs


@dataclass(frozen=True)
class HomogeneousMode:
    """A 2D slit mode: index k, order s, series coefficients, λ², κ = k+s."""

    k: int
    s: float
    coeffs: tuple
    eigenvalue: float
    homogeneity: float

    def __post_init__(self):
        if len(self.coeffs) != self.k + 1:
            raise ValueError("coeffs must have length k+1")
        if self.coeffs[0] == 0:
            raise ValueError("leading series coefficient must not vanish")
        lam2 = self.k * (self.k + 1) - self.s * (self.s - 1.0)
        if abs(self.eigenvalue - lam2) > 1e-12 * max(1.0, abs(lam2)):
            raise ValueError("eigenvalue inconsistent with the mode index")
        if lam2 <= 0.0:
            raise ValueError("eigenvalue must be positive")
        if abs(self.homogeneity - (self.k + self.s)) > 1e-12:
            raise ValueError("homogeneity must equal k + s")


def make_mode(k: int, s) -> HomogeneousMode:
    sv = _sval(s)
    coeffs = tuple(float(c) for c in hypergeom_coeffs(k, sv))
    return HomogeneousMode(
        k=int(k),
        s=sv,
        coeffs=coeffs,
        eigenvalue=float(eigenvalue(k, sv)),
        homogeneity=float(k + sv),
    )


def eval_mode_2d(mode: HomogeneousMode, x_n, x_np1):
    """Evaluate r^{k+s} z^s h(z) stably as 2^{−s} r^k (r+x_n)^s h(z).

    Vanishes on {x_{n+1} = 0, x_n <= 0} and at the origin; its weighted
    normal derivative vanishes on {x_{n+1} = 0, x_n > 0}.
    """
    s = mode.s
    a = np.asarray(x_n, dtype=float)
    b = np.asarray(x_np1, dtype=float)
    r, rp, _ = _r_rp_rm(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(r > 0.0, rp / (2.0 * r), 0.0)
    h = np.zeros_like(z)
    for c in reversed(mode.coeffs):
        h = h * z + c
    val = (2.0 ** -s) * (r ** mode.k) * (rp ** s) * h
    val = np.where(r == 0.0, 0.0, val)
    return float(val) if val.ndim == 0 else val


def mode_jet(mode: HomogeneousMode, a: Jet, b: Jet) -> Jet:
    """Jet of the 2D mode (exact derivatives; points must avoid r = 0)."""
    s = mode.s
    r = (a * a + b * b).sqrt()
    with np.errstate(divide="ignore", invalid="ignore"):
        rp = _rp_jet(a, b)
        z = rp / (2.0 * r)
        h = None
        for c in reversed(mode.coeffs):
            h = c if h is None else h * z + c
        if not isinstance(h, Jet):
            h = 0.0 * z + h
        out = (2.0 ** -s) * (r ** float(mode.k)) * (rp ** s) * h
    return out


# -----------------------------------------------------------------------------
# Sturm–Liouville oracle
# -----------------------------------------------------------------------------

def sl_eigen_oracle(s, grid_size: int, count: int = 5):
    """First eigenvalues of the weighted angular problem, ascending.

    Flux-form finite differences on (0, π) with the weight sin(φ)^{1−2s}
    evaluated at cell midpoints (no node touches the degenerate endpoints'
    weight), natural flux condition at 0, Dirichlet at π by row elimination,
    lumped midpoint mass.  Nodes follow the graded map φ = π(3ξ² − 2ξ³) of a
    uniform grid in ξ — cell density proportional to ξ(1−ξ) — because the
    eigenfunctions behave like φ^{2s} and (π−φ)^{2s} at the endpoints and a
    uniform grid loses an order of accuracy there.  Independent of the
    closed-form eigenvalue law, so it can serve as its oracle.
    """
    sv = _sval(s)
    grid_size = int(grid_size)
    count = int(count)
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    if not 1 <= count <= 10:
        raise ValueError("count must lie in 1..10")

    nseg = grid_size
    xi = np.linspace(0.0, 1.0, nseg + 1)
    phi = np.pi * (3.0 * xi**2 - 2.0 * xi**3)
    width = np.diff(phi)
    mid = 0.5 * (phi[:-1] + phi[1:])
    sigma = np.sin(mid) ** (1.0 - 2.0 * sv)
    flux = sigma / width

    # unknowns at nodes 0..nseg-1 (node nseg carries the Dirichlet condition)
    diag = np.empty(nseg)
    diag[0] = flux[0]
    diag[1:] = flux[:-1] + flux[1:]
    lower = -flux[: nseg - 1]  # flux coupling between nodes i and i+1
    stiff = sp.diags([lower, diag, lower], offsets=[-1, 0, 1], format="csc")

    mass = np.empty(nseg)
    mass[0] = 0.5 * sigma[0] * width[0]
    mass[1:] = 0.5 * (sigma[:-1] * width[:-1] + sigma[1:] * width[1:])
    mass_mat = sp.diags([mass], offsets=[0], format="csc")

    try:
        vals = spla.eigsh(
            stiff,
            k=count,
            M=mass_mat,
            sigma=0.0,
            which="LM",
            v0=np.ones(nseg),
            return_eigenvectors=False,
        )
    except (spla.ArpackNoConvergence, RuntimeError) as exc:
        raise SolverFailure(f"generalized eigensolve failed: {exc}") from exc
    return np.sort(vals)


# -----------------------------------------------------------------------------
# homogeneous-solution enumeration
# -----------------------------------------------------------------------------

def _monomials(nvars: int, degree: int):
    """All multi-indices over nvars variables with |γ| = degree."""
    if nvars == 0:
        return [()] if degree == 0 else []
    out = []
    for head in range(degree + 1):
        for tail in _monomials(nvars - 1, degree - head):
            out.append((head,) + tail)
    return out


def _eval_monomial(gamma, pts):
    out = np.ones(pts.shape[0])
    for j, g in enumerate(gamma):
        if g:
            out = out * pts[:, j] ** g
    return out


def _eval_monomial_lap(gamma, pts):
    out = np.zeros(pts.shape[0])
    for j, g in enumerate(gamma):
        if g >= 2:
            reduced = list(gamma)
            reduced[j] -= 2
            out = out + g * (g - 1) * _eval_monomial(tuple(reduced), pts)
    return out


@dataclass(frozen=True)
class BasisElement:
    """One κ-homogeneous solution, stored as a monomial-product combination.

    ``terms`` is a tuple of (coeff, k2, gamma, m):
      mixed data:      coeff · r₂^{2·k2} · x''^γ · u_m   (r₂ = |(x_n, x_{n+1})|)
      Dirichlet data:  coeff · x_{n+1}^{2s+2·k2} · x'^γ   (m is None)
      Neumann data:    coeff · x_{n+1}^{2·k2} · x'^γ      (m is None)
    """

    boundary_kind: str
    n: int
    kappa: float
    s: float
    terms: tuple

    def monomials(self) -> dict:
        """Symbolic monomial dictionary: (gamma, k2, m) -> coefficient."""
        return {(g, k2, m): c for (c, k2, g, m) in self.terms}

    def value(self, x_thin, x_np1):
        pts = np.atleast_2d(np.asarray(x_thin, dtype=float))
        if pts.shape[1] != self.n and pts.shape[0] == self.n:
            pts = pts.T
        b = np.asarray(x_np1, dtype=float).reshape(-1)
        out = np.zeros(pts.shape[0])
        for coeff, k2, gamma, m in self.terms:
            if self.boundary_kind == "MixedDN":
                a = pts[:, -1]
                r2sq = a * a + b * b
                mode = make_mode(m, self.s)
                term = (
                    _eval_monomial(gamma, pts[:, :-1])
                    * r2sq**k2
                    * eval_mode_2d(mode, a, b)
                )
            else:
                beta = 2 * k2 + (2.0 * self.s if self.boundary_kind == "Dirichlet" else 0.0)
                term = _eval_monomial(gamma, pts) * b**beta
            out = out + coeff * term
        return out

    def reduced_residual(self, x_thin, x_np1):
        """x_{n+1}^{2s−1}·L_s applied to the element (analytic, pointwise)."""
        pts = np.atleast_2d(np.asarray(x_thin, dtype=float))
        b = np.asarray(x_np1, dtype=float).reshape(-1)
        out = np.zeros(pts.shape[0])
        for coeff, k2, gamma, m in self.terms:
            if self.boundary_kind == "MixedDN":
                a = pts[:, -1]
                r2sq = a * a + b * b
                mode = make_mode(m, self.s)
                u = eval_mode_2d(mode, a, b)
                lapq = _eval_monomial_lap(gamma, pts[:, :-1])
                q = _eval_monomial(gamma, pts[:, :-1])
                res = lapq * r2sq**k2 * u
                if k2 > 0:
                    res = res + q * (2 * k2 * (2 * k2 + 2 * m + 1)) * r2sq ** (k2 - 1) * u
            else:
                beta = 2 * k2 + (2.0 * self.s if self.boundary_kind == "Dirichlet" else 0.0)
                lapq = _eval_monomial_lap(gamma, pts)
                q = _eval_monomial(gamma, pts)
                res = lapq * b**beta
                coef_v = beta * (beta - 2.0 * self.s)
                if coef_v != 0.0:
                    res = res + q * coef_v * b ** (beta - 2.0)
            out = out + coeff * res
        return out


@dataclass(frozen=True)
class HomogeneousBasis:
    boundary_kind: str
    n: int
    kappa: float
    elements: tuple

    def __len__(self):
        return len(self.elements)


def _near_nonneg_int(x: float):
    k = round(x)
    if k >= 0 and abs(x - k) <= _INT_TOL:
        return int(k)
    return None


def enumerate_homogeneous(kind: str, kappa: float, n: int, s) -> HomogeneousBasis:
    """All κ-homogeneous solutions with the given thin boundary data.

    Candidate monomial products are generated from the admissible index sets
    and the actual solution space is extracted as the nullspace of the
    sampled residual matrix (the polynomial factors of a true solution are
    coupled through the equation, so individual products are generally not
    solutions themselves).  Every returned element is re-verified at fresh
    sample points.  An empty basis is a valid result.
    """
    if kind not in ("Dirichlet", "Neumann", "MixedDN"):
        raise ValueError(f"unknown boundary kind {kind!r}")
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if n < 1:
        raise ValueError("thin dimension n must be >= 1")
    sv = _sval(s)

    cands = []  # (k2, gamma, m or None)
    if kind == "MixedDN":
        total = _near_nonneg_int(kappa - sv)
        if total is not None:
            for m in range(total + 1):
                rem = total - m
                for k2 in range(rem // 2 + 1):
                    for gamma in _monomials(n - 1, rem - 2 * k2):
                        cands.append((k2, gamma, m))
    else:
        total = _near_nonneg_int(kappa - (2.0 * sv if kind == "Dirichlet" else 0.0))
        if total is not None:
            for k2 in range(total // 2 + 1):
                for gamma in _monomials(n, total - 2 * k2):
                    cands.append((k2, gamma, None))

    if not cands:
        return HomogeneousBasis(kind, n, float(kappa), ())

    rng = np.random.default_rng(_ENUM_SEED)
    npts = 3 * len(cands) + 24
    pts = rng.uniform(-1.2, 1.2, size=(npts, n))
    b = rng.uniform(0.25, 1.25, size=npts)

    def columns(points, heights):
        vals = np.empty((points.shape[0], len(cands)))
        res = np.empty_like(vals)
        for c, (k2, gamma, m) in enumerate(cands):
            el = BasisElement(kind, n, float(kappa), sv, ((1.0, k2, gamma, m),))
            vals[:, c] = el.value(points, heights)
            res[:, c] = el.reduced_residual(points, heights)
        return vals, res

    vals, res = columns(pts, b)
    scale = np.sqrt(np.mean(vals**2, axis=0))
    scale[scale == 0.0] = 1.0
    mat = res / scale

    _, svals, vt = np.linalg.svd(mat, full_matrices=True)
    smax = svals[0] if svals.size else 0.0
    tol = max(smax, 1.0) * 1e-10
    null_dim = sum(1 for sv_ in svals if sv_ <= tol) + (len(cands) - len(svals))
    elements = []
    if null_dim:
        null_vecs = vt[len(cands) - null_dim :, :]
        fresh_rng = np.random.default_rng(_ENUM_SEED + 1)
        fpts = fresh_rng.uniform(-1.1, 1.1, size=(40, n))
        fb = fresh_rng.uniform(0.3, 1.2, size=40)
        for vec in null_vecs:
            coeffs = vec / scale
            coeffs = coeffs / np.max(np.abs(coeffs))
            terms = tuple(
                (float(c), k2, gamma, m)
                for c, (k2, gamma, m) in zip(coeffs, cands)
                if abs(c) > 1e-12
            )
            el = BasisElement(kind, n, float(kappa), sv, terms)
            rcheck = el.reduced_residual(fpts, fb)
            vcheck = el.value(fpts, fb)
            vscale = max(float(np.max(np.abs(vcheck))), 1e-30)
            if np.max(np.abs(rcheck)) > 1e-7 * max(vscale, 1.0):
                raise SolverFailure(
                    "nullspace candidate failed the fresh-point residual check"
                )
            elements.append(el)
    return HomogeneousBasis(kind, n, float(kappa), tuple(elements))


# -----------------------------------------------------------------------------
# boundary-expansion fitting
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryFit:
    kind: str
    coeffs: dict
    radii: tuple
    remainders: tuple
    field_norms: tuple
    decay_exponent: float
    saturated: bool


def _half_ball(n: int, npts: int, rng) -> tuple:
    """Quasi-uniform sample of the unit upper half ball in R^{n+1}."""
    g = rng.standard_normal(size=(npts, n + 1))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = rng.uniform(0.0, 1.0, size=npts) ** (1.0 / (n + 1))
    pts = g * rad[:, None]
    pts[:, -1] = np.abs(pts[:, -1])
    return pts[:, :n], pts[:, -1]


def _template(kind: str, sv: float, x_thin: np.ndarray, b: np.ndarray):
    names, cols = [], []
    if kind == "Dirichlet":
        base = b ** (2.0 * sv)
        names.append("a")
        cols.append(base)
        for j in range(x_thin.shape[1]):
            names.append(f"b_{j + 1}")
            cols.append(base * x_thin[:, j])
    elif kind == "Neumann":
        names.append("c")
        cols.append(np.ones_like(b))
        nn = x_thin.shape[1]
        for j in range(nn):
            names.append(f"a_{j + 1}")
            cols.append(x_thin[:, j])
        for i in range(nn):
            for j in range(i, nn):
                names.append(f"d_{i + 1}{j + 1}")
                cols.append(x_thin[:, i] * x_thin[:, j])
    elif kind == "MixedDN":
        a = x_thin[:, -1]
        w0 = np.asarray(eval_w0s(sv, a, b))
        r2 = np.hypot(a, b)
        names.append("a0")
        cols.append(w0)
        names.append("a1")
        cols.append(w0 * (sv * r2 - a))
    else:
        raise ValueError(f"unknown boundary kind {kind!r}")
    return names, np.column_stack(cols)


def _particular(kind: str, sv: float, f0: float, x_thin, b):
    if kind == "Dirichlet":
        return f0 / (1.0 + 2.0 * sv) * b ** (1.0 + 2.0 * sv)
    if kind == "Neumann":
        return f0 / (2.0 * (2.0 - 2.0 * sv)) * b * b
    a = x_thin[:, -1]
    w0 = np.asarray(eval_w0s(sv, a, b))
    return f0 / (2.0 + 2.0 * sv) * w0 ** (1.0 + 1.0 / sv)


def fit_boundary_expansion(
    field,
    kind: str,
    s,
    n: int = 1,
    radii: Optional[Sequence[float]] = None,
    npts: int = 800,
    seed: int = 424242,
    f0: Optional[float] = None,
) -> BoundaryFit:
    """Weighted least-squares fit of the boundary template over nested balls.

    Fits the template for the given data kind on each half-ball B_r^+ with
    the weight x_{n+1}^{1−2s}, reports per-radius remainder norms in the
    averaged weighted L² norm and the log-log decay slope of the remainder
    (+inf when every remainder sits at the numerical floor).  Coefficients
    are taken from the smallest radius, where the template is asymptotic.
    A known constant f(0) can be supplied to subtract the particular
    (inhomogeneous) template term before fitting.
    """
    sv = _sval(s)
    if radii is None:
        radii = [0.5 / 2**j for j in range(5)]
    radii = sorted(float(r) for r in radii)
    rng = np.random.default_rng(seed)
    xt_unit, b_unit = _half_ball(n, int(npts), rng)

    fn = field.value if hasattr(field, "value") else field
    names = None
    rems, unorms, coeff_by_r = [], [], []
    for r in radii:
        xt = r * xt_unit
        b = r * b_unit
        u = np.asarray(fn(xt if n > 1 else xt[:, 0], b), dtype=float).reshape(-1)
        if f0 is not None:
            u = u - _particular(kind, sv, float(f0), xt, b)
        names, design = _template(kind, sv, xt, b)
        if u.size < 2 * design.shape[1]:
            raise InsufficientSamples(
                f"{u.size} samples cannot determine {design.shape[1]} coefficients"
            )
        w = b ** (1.0 - 2.0 * sv)
        sw = np.sqrt(w)
        sol, _, rank, _ = np.linalg.lstsq(design * sw[:, None], u * sw, rcond=None)
        if rank < design.shape[1]:
            raise InsufficientSamples("template design matrix is rank deficient")
        resid = u - design @ sol
        wsum = float(np.sum(w))
        rems.append(float(np.sqrt(np.sum(w * resid**2) / wsum)))
        unorms.append(float(np.sqrt(np.sum(w * u**2) / wsum)))
        coeff_by_r.append(sol)

    rems_arr = np.asarray(rems)
    floor = 1e-13 * np.maximum(np.asarray(unorms), 1e-30)
    live = rems_arr > floor
    if np.count_nonzero(live) >= 2:
        slope = float(
            np.polyfit(np.log(np.asarray(radii)[live]), np.log(rems_arr[live]), 1)[0]
        )
        saturated = False
    else:
        slope = float("inf")
        saturated = True
    coeffs = dict(zip(names, (float(c) for c in coeff_by_r[0])))
    return BoundaryFit(
        kind=kind,
        coeffs=coeffs,
        radii=tuple(radii),
        remainders=tuple(rems),
        field_norms=tuple(unorms),
        decay_exponent=slope,
        saturated=saturated,
    )
