"""Degenerate-Grushin geometry and operator toolkit on the quarter space.

The quarter space Q_+ = {y = (y'', y_n, y_{n+1}) : y_n >= 0, y_{n+1} >= 0}
carries the anisotropic dilations delta_lam(y) = (lam^2 y'', lam y_n,
lam y_{n+1}) and the weighted operator

    D_{G,s} u = (y_n y_{n+1})^{1-2s} (y_n^2 + y_{n+1}^2) Lap'' u
              + div_{(n,n+1)} ((y_n y_{n+1})^{1-2s} grad_{(n,n+1)} u).

This module provides the quasi-metric adapted to those dilations, the
polynomial spaces graded by the anisotropic degree, exact / analytic /
finite-difference evaluation of D_{G,s}, the square-root change of variables
that opens the upper half space into Q_+, an eigen-template fit near the edge
P = {y_n = y_{n+1} = 0}, and the X/Y-style decomposition estimators used to
measure how close a field is to its leading edge expansion.

Coordinate layout everywhere: points are arrays (..., d) ordered
(y_1, ..., y_{n-1}, y_n, y_{n+1}); the last two slots are the distinguished
pair.  For n = 1 a point is just (y_n, y_{n+1}).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import jets
from .closed_forms import FracOrder
from .errors import (
    AxisSingularity,
    BoundaryConditionViolated,
    DegenerateFit,
    InsufficientSamples,
    OutOfDomain,
)

__all__ = [
    "QuarterPoint",
    "dilate",
    "quasi_metric",
    "quasi_triangle_constant",
    "grushin_degree",
    "GrushinPolynomial",
    "PowerField",
    "eigen_template",
    "apply_delta_Gs",
    "delta_Gs",
    "open_domain_check",
    "EigenpolyFit",
    "fit_grushin_eigenpoly",
    "XYDecomposition",
    "xy_decompose",
    "RhsDecomposition",
    "decompose_rhs",
]


# -----------------------------------------------------------------------------
# points, dilations, quasi-metric
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class QuarterPoint:
    """A point of the quarter space; the last two coordinates are >= 0."""

    y_tan: Tuple[float, ...]
    y_n: float
    y_np1: float

    def __post_init__(self):
        object.__setattr__(self, "y_tan", tuple(float(t) for t in self.y_tan))
        if self.y_n < 0.0 or self.y_np1 < 0.0:
            raise OutOfDomain(
                f"quarter-space point needs y_n, y_np1 >= 0, got "
                f"({self.y_n}, {self.y_np1})"
            )

    def as_array(self) -> np.ndarray:
        return np.asarray(self.y_tan + (self.y_n, self.y_np1), dtype=float)


def _coords(p) -> np.ndarray:
    if isinstance(p, QuarterPoint):
        return p.as_array()
    return np.asarray(p, dtype=float)


def dilate(y, lam: float) -> np.ndarray:
    """Anisotropic dilation: tangential slots scale like lam^2, the pair like lam."""
    y = _coords(y).copy()
    lam = float(lam)
    y[..., :-2] *= lam * lam
    y[..., -2:] *= lam
    return y


def quasi_metric(p, q):
    """Quasi-metric adapted to the dilations.

    d(p, q) = |dy_n| + |dy_{n+1}|
            + |dy''| / (|p_n| + |p_{n+1}| + |q_n| + |q_{n+1}| + |dy''|^{1/2}),

    with |dy''| the Euclidean tangential gap.  Symmetric, zero iff p = q, and
    exactly homogeneous of degree one under ``dilate``.  Accepts QuarterPoint
    or arrays (broadcast over leading axes); full-space points are allowed,
    the pair coordinates enter through absolute values.
    """
    a = _coords(p)
    b = _coords(q)
    a, b = np.broadcast_arrays(a, b)
    dn = np.abs(a[..., -2] - b[..., -2])
    dp = np.abs(a[..., -1] - b[..., -1])
    out = dn + dp
    if a.shape[-1] > 2:
        dtan = np.sqrt(np.sum((a[..., :-2] - b[..., :-2]) ** 2, axis=-1))
        denom = (
            np.abs(a[..., -2]) + np.abs(a[..., -1])
            + np.abs(b[..., -2]) + np.abs(b[..., -1])
            + np.sqrt(dtan)
        )
        with np.errstate(invalid="ignore", divide="ignore"):
            term = np.where(dtan > 0.0, dtan / denom, 0.0)
        out = out + term
    return out if out.ndim else float(out)


def quasi_triangle_constant(ndim: int = 3, ntriples: int = 100_000,
                            seed: int = 20260813, box: float = 2.0) -> float:
    """Worst observed K with d(p,r) <= K (d(p,q) + d(q,r)) over random triples."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, box, size=(3, ntriples, ndim))
    if ndim > 2:
        pts[..., :-2] = rng.uniform(-box, box, size=(3, ntriples, ndim - 2))
    p, q, r = pts
    num = quasi_metric(p, r)
    den = quasi_metric(p, q) + quasi_metric(q, r)
    ok = den > 0.0
    return float(np.max(num[ok] / den[ok]))


# -----------------------------------------------------------------------------
# graded polynomials and power fields
# -----------------------------------------------------------------------------

def grushin_degree(beta: Sequence[int]) -> int:
    """Anisotropic degree: tangential slots count twice, the pair once."""
    beta = tuple(int(b) for b in beta)
    return 2 * sum(beta[:-2]) + beta[-2] + beta[-1]


def _check_multiindex(beta) -> Tuple[int, ...]:
    beta = tuple(int(b) for b in beta)
    if len(beta) < 2 or any(b < 0 for b in beta):
        raise ValueError(f"multi-index must have >= 2 nonnegative slots, got {beta}")
    return beta


@dataclass(frozen=True)
class GrushinPolynomial:
    """Polynomial given by a monomial map beta -> coefficient.

    All multi-indices share one length d >= 2 (layout: tangential slots first,
    then the distinguished pair).  Membership in the graded space of degree k
    means every monomial has ``grushin_degree`` <= k; the homogeneous slice
    requires == k, and then p(dilate(y, lam)) = lam^k p(y) exactly.
    """

    coeffs: Dict[Tuple[int, ...], float]

    def __post_init__(self):
        cleaned = {}
        ndim = None
        for beta, c in self.coeffs.items():
            beta = _check_multiindex(beta)
            if ndim is None:
                ndim = len(beta)
            elif len(beta) != ndim:
                raise ValueError("all multi-indices must have the same length")
            cleaned[beta] = float(c)
        if not cleaned:
            raise ValueError("polynomial needs at least one monomial")
        object.__setattr__(self, "coeffs", cleaned)

    @property
    def ndim(self) -> int:
        return len(next(iter(self.coeffs)))

    @property
    def degree(self) -> int:
        return max(grushin_degree(b) for b in self.coeffs)

    def is_homogeneous(self, k: int) -> bool:
        return all(grushin_degree(b) == k for b, c in self.coeffs.items() if c != 0.0)

    def __call__(self, y) -> np.ndarray:
        y = _coords(y)
        pts = y.reshape(-1, y.shape[-1]) if y.ndim > 1 else y.reshape(1, -1)
        if pts.shape[1] != self.ndim:
            raise ValueError(f"expected points with {self.ndim} coordinates")
        out = np.zeros(pts.shape[0])
        for beta, c in self.coeffs.items():
            term = np.full(pts.shape[0], c)
            for j, b in enumerate(beta):
                if b:
                    term = term * pts[:, j] ** b
            out += term
        return out.reshape(y.shape[:-1]) if y.ndim > 1 else float(out[0])

    def jet(self, coords: List[jets.Jet]) -> jets.Jet:
        """Second-order jet from coordinate jets (one per slot)."""
        if len(coords) != self.ndim:
            raise ValueError(f"expected {self.ndim} coordinate jets")
        n = coords[0].npoints
        dim = coords[0].dim
        total = jets.constant(0.0, n, dim)
        for beta, c in self.coeffs.items():
            term = jets.constant(c, n, dim)
            for j, b in enumerate(beta):
                for _ in range(b):
                    term = term * coords[j]
            total = total + term
        return total

    # -- space enumeration ----------------------------------------------------

    @staticmethod
    def homogeneous_multiindices(k: int, ndim: int) -> List[Tuple[int, ...]]:
        """All multi-indices of anisotropic degree exactly k."""
        out = []
        ntan = ndim - 2
        for bp in range(k + 1):
            for bn in range(k + 1 - bp):
                rem = k - bn - bp
                if rem % 2:
                    continue
                half = rem // 2
                if ntan == 0:
                    if half == 0:
                        out.append((bn, bp))
                    continue
                # compositions of `half` into ntan ordered slots
                for cuts in itertools.combinations(range(half + ntan - 1), ntan - 1):
                    comp = []
                    prev = -1
                    for c in cuts:
                        comp.append(c - prev - 1)
                        prev = c
                    comp.append(half + ntan - 2 - prev)
                    out.append(tuple(comp) + (bn, bp))
        return sorted(out)

    @staticmethod
    def space_multiindices(k: int, ndim: int) -> List[Tuple[int, ...]]:
        """All multi-indices of anisotropic degree <= k."""
        out = []
        for j in range(k + 1):
            out.extend(GrushinPolynomial.homogeneous_multiindices(j, ndim))
        return sorted(out)

    @classmethod
    def random_member(cls, k: int, ndim: int, rng=None,
                      homogeneous: bool = True) -> "GrushinPolynomial":
        rng = np.random.default_rng(rng)
        betas = (cls.homogeneous_multiindices(k, ndim) if homogeneous
                 else cls.space_multiindices(k, ndim))
        if not betas:
            raise ValueError(f"no monomials of anisotropic degree {k} in {ndim} slots")
        coeffs = {b: float(c) for b, c in zip(betas, rng.uniform(-1.0, 1.0, len(betas)))}
        return cls(coeffs)

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> str:
        terms = [{"beta": list(b), "coeff": c} for b, c in sorted(self.coeffs.items())]
        return json.dumps({"ndim": self.ndim, "terms": terms}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GrushinPolynomial":
        data = json.loads(text)
        return cls({tuple(t["beta"]): t["coeff"] for t in data["terms"]})


@dataclass(frozen=True)
class PowerField:
    """Finite sum of monomials  c * y''^{beta''} * y_n^{sn} * y_{n+1}^{sp}.

    The pair exponents sn, sp may be any reals (fractional powers such as
    y_n^{2s} included); tangential exponents stay nonnegative integers.  Terms
    with negative pair exponents are only evaluable off the axes.  The terms
    tuple entries are (beta_tan, sn, sp, coeff).
    """

    terms: Tuple[Tuple[Tuple[int, ...], float, float, float], ...]

    def __post_init__(self):
        cleaned = []
        ntan = None
        for beta_tan, sn, sp, c in self.terms:
            beta_tan = tuple(int(b) for b in beta_tan)
            if any(b < 0 for b in beta_tan):
                raise ValueError("tangential exponents must be nonnegative integers")
            if ntan is None:
                ntan = len(beta_tan)
            elif len(beta_tan) != ntan:
                raise ValueError("all terms must share the tangential slot count")
            if c != 0.0:
                cleaned.append((beta_tan, float(sn), float(sp), float(c)))
        object.__setattr__(self, "terms", tuple(cleaned))

    @property
    def ntan(self) -> int:
        return len(self.terms[0][0]) if self.terms else 0

    @property
    def ndim(self) -> int:
        return self.ntan + 2

    def __call__(self, y) -> np.ndarray:
        y = _coords(y)
        pts = y.reshape(-1, y.shape[-1]) if y.ndim > 1 else y.reshape(1, -1)
        out = np.zeros(pts.shape[0])
        yn = pts[:, -2]
        yp = pts[:, -1]
        with np.errstate(divide="ignore", invalid="ignore"):
            for beta_tan, sn, sp, c in self.terms:
                term = np.full(pts.shape[0], c)
                for j, b in enumerate(beta_tan):
                    if b:
                        term = term * pts[:, j] ** b
                if sn:
                    term = term * yn ** sn
                if sp:
                    term = term * yp ** sp
                out += term
        return out.reshape(y.shape[:-1]) if y.ndim > 1 else float(out[0])

    @classmethod
    def monomial(cls, coeff: float, sn: float, sp: float,
                 beta_tan: Tuple[int, ...] = ()) -> "PowerField":
        return cls(((tuple(beta_tan), sn, sp, coeff),))

    @classmethod
    def from_polynomial(cls, p: GrushinPolynomial) -> "PowerField":
        return cls(tuple((b[:-2], float(b[-2]), float(b[-1]), c)
                         for b, c in p.coeffs.items()))


def eigen_template(s, a0: float, a_n: float, a_np1: float,
                   a_tan: Tuple[float, ...] = ()) -> PowerField:
    """The edge template  y_n^{2s} (a0 + sum_i a_i y_i + a_n y_n^2 + a_{n+1} y_{n+1}^2)."""
    s = s.s if isinstance(s, FracOrder) else float(s)
    ntan = len(a_tan)
    zero = (0,) * ntan
    terms = [(zero, 2.0 * s, 0.0, a0),
             (zero, 2.0 * s + 2.0, 0.0, a_n),
             (zero, 2.0 * s, 2.0, a_np1)]
    for i, ai in enumerate(a_tan):
        e_i = tuple(1 if j == i else 0 for j in range(ntan))
        terms.append((e_i, 2.0 * s, 0.0, ai))
    return PowerField(tuple(terms))


def apply_delta_Gs(u, s) -> PowerField:
    """Exact symbolic image of a PowerField / GrushinPolynomial under D_{G,s}.

    Works term by term: with w = (y_n y_{n+1})^{1-2s},

      div (w grad_{(n,n+1)} y_n^a y_{n+1}^b) = w [a(a-2s) y_n^{a-2} y_{n+1}^b
                                                + b(b-2s) y_n^a y_{n+1}^{b-2}],

    and the tangential part contributes w (y_n^2 + y_{n+1}^2) times the plain
    tangential Laplacian.  Coefficients that vanish (a = 0, a = 2s, ...) are
    dropped exactly, so e.g. y_n^{2s} maps to the empty field, identically
    zero on all of the quarter space.
    """
    s = s.s if isinstance(s, FracOrder) else float(s)
    if isinstance(u, GrushinPolynomial):
        u = PowerField.from_polynomial(u)
    if not isinstance(u, PowerField):
        raise TypeError("apply_delta_Gs needs a PowerField or GrushinPolynomial")
    w_n = 1.0 - 2.0 * s  # the weight exponent folded into every output term
    out: Dict[Tuple[Tuple[int, ...], float, float], float] = {}

    def add(beta_tan, sn, sp, c):
        if c == 0.0:
            return
        key = (beta_tan, sn, sp)
        out[key] = out.get(key, 0.0) + c

    for beta_tan, sn, sp, c in u.terms:
        add(beta_tan, sn - 2.0 + w_n, sp + w_n, c * sn * (sn - 2.0 * s))
        add(beta_tan, sn + w_n, sp - 2.0 + w_n, c * sp * (sp - 2.0 * s))
        for i, b in enumerate(beta_tan):
            if b >= 2:
                down = tuple(bb - 2 if j == i else bb for j, bb in enumerate(beta_tan))
                coef = c * b * (b - 1)
                add(down, sn + 2.0 + w_n, sp + w_n, coef)
                add(down, sn + w_n, sp + 2.0 + w_n, coef)
    terms = tuple((k[0], k[1], k[2], c) for k, c in sorted(out.items()) if c != 0.0)
    return PowerField(terms)


# -----------------------------------------------------------------------------
# operator evaluation
# -----------------------------------------------------------------------------

def _delta_Gs_from_jet(uj: jets.Jet, y: np.ndarray, s: float) -> np.ndarray:
    yn = y[:, -2]
    yp = y[:, -1]
    d = y.shape[1]
    om = (yn * yp) ** (1.0 - 2.0 * s)
    pair = (uj.dd(d - 2, d - 2) + uj.dd(d - 1, d - 1)
            + (1.0 - 2.0 * s) * (uj.d(d - 2) / yn + uj.d(d - 1) / yp))
    out = om * pair
    if d > 2:
        tan = np.zeros_like(yn)
        for i in range(d - 2):
            tan = tan + uj.dd(i, i)
        out = out + om * (yn ** 2 + yp ** 2) * tan
    return out


_FD1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FD2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _fd_d1_d2(u: Callable, pts: np.ndarray, axis: int, step: float):
    vals = []
    for k in (-2, -1, 0, 1, 2):
        shifted = pts.copy()
        shifted[:, axis] += k * step
        vals.append(np.asarray(u(shifted), dtype=float))
    stack = np.stack(vals)  # (5, N)
    d1 = np.tensordot(_FD1, stack, axes=(0, 0)) / step
    d2 = np.tensordot(_FD2, stack, axes=(0, 0)) / step ** 2
    return d1, d2, stack[2]


def delta_Gs(u, y, s, mode: str = "analytic", step: float = 1e-3):
    """Evaluate D_{G,s} u at points y.

    u may be a PowerField / GrushinPolynomial (exact symbolic image, any
    mode="analytic" point off the axes — identically-zero images evaluate to
    exactly 0.0 everywhere), a callable mapping a list of coordinate jets to a
    jet (analytic mode), or a plain callable on point arrays (finite-difference
    mode; fourth-order five-point stencils).  Finite differencing needs every
    point at least 2*step away from both axes, else AxisSingularity.
    """
    s = s.s if isinstance(s, FracOrder) else float(s)
    y = _coords(y)
    squeeze = y.ndim == 1
    pts = y.reshape(1, -1) if squeeze else y.reshape(-1, y.shape[-1])

    if mode == "analytic":
        if isinstance(u, (PowerField, GrushinPolynomial)):
            image = apply_delta_Gs(u, s)
            out = np.asarray(image(pts), dtype=float).reshape(pts.shape[0])
        elif callable(u):
            coords = jets.variables(pts)
            out = _delta_Gs_from_jet(u(coords), pts, s)
        else:
            raise TypeError("analytic mode needs a field object or a jet callable")
    elif mode == "finite_difference":
        if not callable(u):
            raise TypeError("finite-difference mode needs a value callable")
        yn = pts[:, -2]
        yp = pts[:, -1]
        margin = 2.0 * step * (1.0 + 1e-12)
        bad = np.flatnonzero((yn < margin) | (yp < margin))
        if bad.size:
            raise AxisSingularity(
                f"{bad.size} evaluation points within 2*step={2*step:g} of an axis; "
                f"first offender index {bad[0]}"
            )
        d = pts.shape[1]
        dn1, dn2, _ = _fd_d1_d2(u, pts, d - 2, step)
        dp1, dp2, _ = _fd_d1_d2(u, pts, d - 1, step)
        om = (yn * yp) ** (1.0 - 2.0 * s)
        out = om * (dn2 + dp2 + (1.0 - 2.0 * s) * (dn1 / yn + dp1 / yp))
        if d > 2:
            tan = np.zeros_like(yn)
            for i in range(d - 2):
                _, dii, _ = _fd_d1_d2(u, pts, i, step)
                tan += dii
            out = out + om * (yn ** 2 + yp ** 2) * tan
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if squeeze:
        return float(out[0])
    return out.reshape(y.shape[:-1])


def open_domain_check(u, samples, s) -> float:
    """Max relative defect of the square-root opening identity.

    With psi(y'', y_n, y_{n+1}) = (y'', (y_n^2 - y_{n+1}^2)/2, y_n y_{n+1})
    mapping the quarter space onto the upper half space,

        D_{G,s}(u o psi)(y) = (y_n^2 + y_{n+1}^2) * (L_s u)(psi(y)),

    where L_s u = div(x_{n+1}^{1-2s} grad u).  ``u`` is a profile in the
    in-plane / extension variables (x_n, x_{n+1}): either an object with a
    ``jet(a, b)`` method (closed-form fields) or a callable (a, b) -> jet.
    Tangential dependence passes through psi unchanged, so the profile form
    covers the identity in every dimension.  ``samples`` are (N, 2) quarter
    points off the axes.  The defect at each sample is |lhs - rhs| divided by
    max(|lhs|, |rhs|, natural magnitude of either side), so identically
    vanishing sides score by absolute error against that magnitude.
    """
    s = FracOrder(s) if not isinstance(s, FracOrder) else s
    sv = s.s
    y = np.asarray(samples, dtype=float).reshape(-1, 2)
    if np.any(y <= 0.0):
        raise AxisSingularity("opening-identity samples must be off both axes")
    yn = y[:, 0]
    yp = y[:, 1]

    def profile_jet(a, b):
        return u.jet(a, b) if hasattr(u, "jet") else u(a, b)

    # left side: jet of u o psi through the composition, then D_{G,s}
    yn_j, yp_j = jets.variables(y)
    xn_j = (yn_j * yn_j - yp_j * yp_j) * 0.5
    xp_j = yn_j * yp_j
    comp = profile_jet(xn_j, xp_j)
    lhs = _delta_Gs_from_jet(comp, y, sv)

    # right side: (y_n^2 + y_{n+1}^2) L_s u at the image point
    xn = 0.5 * (yn ** 2 - yp ** 2)
    xp = yn * yp
    a_j, b_j = jets.variables(np.stack([xn, xp], axis=1))
    uj = profile_jet(a_j, b_j)
    wsv = xp ** (1.0 - 2.0 * sv)
    ls = wsv * (uj.dd(0, 0) + uj.dd(1, 1)) + (1.0 - 2.0 * sv) * xp ** (-2.0 * sv) * uj.d(1)
    rhs = (yn ** 2 + yp ** 2) * ls

    hess_mag = np.sqrt(uj.dd(0, 0) ** 2 + 2.0 * uj.dd(0, 1) ** 2 + uj.dd(1, 1) ** 2)
    grad_mag = np.hypot(uj.d(0), uj.d(1))
    scale = (yn ** 2 + yp ** 2) * wsv * (hess_mag + grad_mag / xp)
    denom = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), scale) + 1e-300
    return float(np.max(np.abs(lhs - rhs) / denom))


# -----------------------------------------------------------------------------
# eigen-template fit near the edge
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenpolyFit:
    """Per-ball least-squares fit of the edge template and its remainder decay."""

    s: FracOrder
    a0: float
    a_tan: Tuple[float, ...]
    a_n: float
    a_np1: float
    radii: Tuple[float, ...]
    remainders: Tuple[float, ...]
    decay_slope: float
    harmonicity_defect: float


def fit_grushin_eigenpoly(v, s, y0: Tuple[float, ...] = (),
                          radii: Optional[Sequence[float]] = None,
                          nsamples: int = 4000, seed: int = 20260813) -> EigenpolyFit:
    """Fit  y_n^{2s} (a0 + sum a_i (y_i - y0_i) + a_n y_n^2 + a_{n+1} y_{n+1}^2)
    to v on quasi-metric balls centred at the edge point (y0, 0, 0).

    v is a callable on point arrays (N, ntan + 2).  Per ball the fit is
    weighted least squares with the natural weight (y_n y_{n+1})^{1-2s}; the
    reported remainder is the weighted RMS of the residual, and the decay
    slope is the log-log fit of remainder against radius (inf when every
    remainder sits at the floor).  Coefficients come from the smallest ball.
    The harmonicity defect 4[(1+s) a_n + (1-s) a_{n+1}] is reported, never
    imposed: the template is an eigenfunction exactly when it vanishes.
    """
    s = FracOrder(s) if not isinstance(s, FracOrder) else s
    sv = s.s
    y0 = tuple(float(t) for t in y0)
    ntan = len(y0)
    if radii is None:
        radii = tuple(1.0 / 2 ** j for j in range(5))
    radii = tuple(sorted((float(r) for r in radii), reverse=True))
    centre = np.asarray(y0 + (0.0, 0.0))
    rng = np.random.default_rng(seed)
    ncoef = 3 + ntan

    fits = []
    rms = []
    for r in radii:
        pts = np.empty((nsamples, ntan + 2))
        for i in range(ntan):
            pts[:, i] = y0[i] + rng.uniform(-r * r, r * r, nsamples)
        pts[:, -2:] = rng.uniform(0.0, r, size=(nsamples, 2))
        keep = quasi_metric(pts, centre) < r
        pts = pts[keep]
        # drop exact-axis samples: the weight vanishes / blows up there
        pts = pts[(pts[:, -2] > 0.0) & (pts[:, -1] > 0.0)]
        if pts.shape[0] < 3 * ncoef:
            raise InsufficientSamples(
                f"ball of radius {r:g} kept {pts.shape[0]} samples, "
                f"need at least {3 * ncoef}"
            )
        yn = pts[:, -2]
        yp = pts[:, -1]
        w = np.sqrt((yn * yp) ** (1.0 - 2.0 * sv))
        cols = [yn ** (2.0 * sv)]
        for i in range(ntan):
            cols.append(yn ** (2.0 * sv) * (pts[:, i] - y0[i]))
        cols.append(yn ** (2.0 * sv + 2.0))
        cols.append(yn ** (2.0 * sv) * yp ** 2)
        design = np.stack(cols, axis=1) * w[:, None]
        target = np.asarray(v(pts), dtype=float) * w
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        res = target - design @ coef
        rms.append(float(np.sqrt(np.sum(res ** 2) / np.sum(w ** 2))))
        fits.append(coef)

    coef = fits[-1]
    a0 = float(coef[0])
    a_tan = tuple(float(c) for c in coef[1:1 + ntan])
    a_n = float(coef[1 + ntan])
    a_np1 = float(coef[2 + ntan])
    scale = max(abs(c) for c in coef) + 1e-30
    live = [(math.log(r), math.log(m)) for r, m in zip(radii, rms) if m > 1e-13 * scale]
    if len(live) >= 2:
        xs, ys = zip(*live)
        slope = float(np.polyfit(xs, ys, 1)[0])
    else:
        slope = float("inf")
    defect = 4.0 * ((1.0 + sv) * a_n + (1.0 - sv) * a_np1)
    return EigenpolyFit(s=s, a0=a0, a_tan=a_tan, a_n=a_n, a_np1=a_np1,
                        radii=radii, remainders=tuple(rms),
                        decay_slope=slope, harmonicity_defect=defect)


# -----------------------------------------------------------------------------
# X/Y-style decomposition estimators
# -----------------------------------------------------------------------------

def _pair_seminorm(vals: np.ndarray, pts: np.ndarray, eps: float,
                   npairs: int, rng) -> float:
    """Max |df| / d(p,q)^eps over sampled pairs (the eps-Hölder quotient)."""
    n = len(vals)
    if n < 2:
        return 0.0
    i = rng.integers(0, n, npairs)
    j = rng.integers(0, n, npairs)
    keep = i != j
    i, j = i[keep], j[keep]
    d = quasi_metric(pts[i], pts[j])
    live = d > 1e-9
    if not np.any(live):
        return 0.0
    return float(np.max(np.abs(vals[i][live] - vals[j][live]) / d[live] ** eps))


def _holder_seminorm_grid(vals: np.ndarray, grid: np.ndarray, alpha: float) -> float:
    """Max Hölder quotient of a function sampled on a 1-D tangential grid."""
    if vals.size < 2:
        return 0.0
    dv = np.abs(vals[:, None] - vals[None, :])
    dx = np.abs(grid[:, None] - grid[None, :])
    mask = dx > 0
    return float(np.max(dv[mask] / dx[mask] ** alpha))


@dataclass(frozen=True)
class XYDecomposition:
    """Fitted leading edge expansion of a field vanishing on {y_n = 0}.

    c0, a0, a1 are scalars (no tangential slots) or arrays over y_tan_grid.
    remainder_samples holds the normalized remainder fields from the value
    display (key "C0") and, when derivatives were available, the first and
    second derivative displays ("Cn", "Cnp1", "Cnn", "Cnp1n", "Cnnp1",
    "Cnp1np1").  Each remainder should vanish toward the edge; seminorms maps
    each key (plus "a0", "a1", "c0_prime") to its sampled Hölder estimate.
    """

    s: FracOrder
    alpha: float
    eps: float
    c0: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    y_tan_grid: Optional[np.ndarray]
    remainder_samples: Dict[str, np.ndarray]
    seminorms: Dict[str, float]

    def to_json(self) -> str:
        def arr(x):
            return np.asarray(x).tolist()

        payload = {
            "s": self.s.s,
            "alpha": self.alpha,
            "eps": self.eps,
            "c0": arr(self.c0),
            "a0": arr(self.a0),
            "a1": arr(self.a1),
            "y_tan_grid": None if self.y_tan_grid is None else arr(self.y_tan_grid),
            "seminorms": self.seminorms,
            "remainder_max": {k: float(np.max(np.abs(v)))
                              for k, v in self.remainder_samples.items()},
        }
        return json.dumps(payload, indent=2)


def _as_point_callable(v, ndim: int) -> Callable:
    """Accept v(points) or, for ndim == 2, v(yn, yp); return the former."""
    probe = np.full((1, ndim), 0.25)
    try:
        out = np.asarray(v(probe), dtype=float)
        if out.shape in ((1,), ()):
            return lambda pts: np.asarray(v(pts), dtype=float).reshape(len(pts))
    except (TypeError, ValueError, IndexError):
        pass
    if ndim != 2:
        raise TypeError("field callable must accept an (N, ndim) point array")
    return lambda pts: np.asarray(v(pts[:, 0], pts[:, 1]), dtype=float).reshape(len(pts))


def xy_decompose(v, s, alpha: float, eps: float, *, ntan: int = 0,
                 y_tan_grid: Optional[Sequence[float]] = None,
                 collar: float = 0.5, nsamples: int = 3000,
                 npairs: int = 10_000, seed: int = 20260813,
                 v_jet: Optional[Callable] = None) -> XYDecomposition:
    """Fit the leading edge expansion of v and estimate remainder seminorms.

    v must vanish on {y_n = 0}; the fitted display is

        v = c0 y_n^{2s} + a0 y_n^{2+2s} + a1 y_n^{2s} y_{n+1}^2
          + y_n^{2s} r^{2+2a-e} C0,      r = y_n + y_{n+1},

    with c0, a0, a1 functions of y'' (fitted per tangential grid node when
    ntan >= 1, scalars otherwise).  When ``v_jet`` is given — a callable
    mapping coordinate jets to the field jet — the derivative displays are
    evaluated too and their normalized remainders reported alongside.  All
    remainder seminorms are eps-Hölder quotients against the quasi-metric,
    maximized over seeded sampled pairs; c0', a0, a1 get plain alpha-Hölder
    quotients over the tangential grid.  Requires eps <= alpha.
    """
    s = FracOrder(s) if not isinstance(s, FracOrder) else s
    sv = s.s
    if eps > alpha:
        raise ValueError(f"need eps <= alpha, got eps={eps} > alpha={alpha}")
    if ntan > 1:
        raise NotImplementedError("at most one tangential slot is supported")
    ndim = ntan + 2
    vfun = _as_point_callable(v, ndim)
    rng = np.random.default_rng(seed)

    if ntan:
        tgrid = (np.linspace(-0.5, 0.5, 11) if y_tan_grid is None
                 else np.asarray(y_tan_grid, dtype=float))
    else:
        tgrid = None
    nodes = [()] if tgrid is None else [(t,) for t in tgrid]

    # boundary condition first: the display presumes v = 0 at y_n = 0
    yp_bc = rng.uniform(0.0, collar, 64)
    scale_probe = []
    for node in nodes:
        pts0 = np.column_stack([np.full(64, t) for t in node]
                               + [np.zeros(64), yp_bc]) if node else \
            np.column_stack([np.zeros(64), yp_bc])
        bc_vals = vfun(pts0)
        interior = np.column_stack([np.full(64, t) for t in node]
                                   + [np.full(64, 0.5 * collar), yp_bc]) if node else \
            np.column_stack([np.full(64, 0.5 * collar), yp_bc])
        scale_probe.append(np.max(np.abs(vfun(interior))))
        if np.max(np.abs(bc_vals)) > 1e-9 * max(max(scale_probe), 1e-12):
            raise BoundaryConditionViolated(
                f"field is {np.max(np.abs(bc_vals)):.3e} on {{y_n = 0}}, expected 0"
            )

    yn = rng.uniform(0.0, collar, nsamples)
    yp = rng.uniform(0.0, collar, nsamples)
    live = (yn > 1e-6) & (yp > 1e-6)
    yn, yp = yn[live], yp[live]
    r = yn + yp

    c0s, a0s, a1s = [], [], []
    rem: Dict[str, List[np.ndarray]] = {k: [] for k in
                                        ("C0", "Cn", "Cnp1", "Cnn", "Cnp1n",
                                         "Cnnp1", "Cnp1np1")}
    cloud = []
    for node in nodes:
        cols = [np.full(yn.shape, t) for t in node]
        pts = np.column_stack(cols + [yn, yp])
        vals = vfun(pts)
        design = np.stack([yn ** (2 * sv), yn ** (2 + 2 * sv),
                           yn ** (2 * sv) * yp ** 2], axis=1)
        coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
        c0s.append(coef[0])
        a0s.append(coef[1])
        a1s.append(coef[2])
        lead = design @ coef
        rem["C0"].append((vals - lead) / (yn ** (2 * sv) * r ** (2 + 2 * alpha - eps)))
        cloud.append(pts)
        if v_jet is not None:
            vj = v_jet(jets.variables(pts))
            d = pts.shape[1]
            vn = vj.d(d - 2)
            vp = vj.d(d - 1)
            vnn = vj.dd(d - 2, d - 2)
            vnp = vj.dd(d - 2, d - 1)
            vpp = vj.dd(d - 1, d - 1)
            c0, a0, a1 = coef
            wn = yn ** (1 - 2 * sv)
            rem["Cn"].append(
                (wn * vn - (2 * sv * c0 + (2 + 2 * sv) * a0 * yn ** 2
                            + 2 * sv * a1 * yp ** 2)) / r ** (2 + 2 * alpha - eps))
            rem["Cnp1"].append(
                (vp - 2 * a1 * yn ** (2 * sv) * yp)
                / (yn ** (2 * sv) * yp * r ** (2 * alpha - eps)))
            # div-form second derivatives per the displays
            dn_wvn = wn * vnn + (1 - 2 * sv) * yn ** (-2 * sv) * vn
            rem["Cnn"].append(
                (dn_wvn - 2 * (2 + 2 * sv) * a0 * yn) / r ** (1 + 2 * alpha - eps))
            rem["Cnp1n"].append(
                (wn * vnp - 4 * sv * a1 * yp) / r ** (1 + 2 * alpha - eps))
            rem["Cnnp1"].append(
                (wn * vnp - 4 * sv * a1 * yp) / r ** (1 + 2 * alpha - eps))
            rem["Cnp1np1"].append(
                (wn * vpp - 2 * a1 * yn) / r ** (1 + 2 * alpha - eps))

    cloud = np.concatenate(cloud)
    remainders = {k: np.concatenate(vs) for k, vs in rem.items() if vs}
    seminorms = {k: _pair_seminorm(vals, cloud, eps, npairs, rng)
                 for k, vals in remainders.items()}
    c0 = np.asarray(c0s) if ntan else np.asarray(c0s[0])
    a0 = np.asarray(a0s) if ntan else np.asarray(a0s[0])
    a1 = np.asarray(a1s) if ntan else np.asarray(a1s[0])
    if ntan:
        c0p = np.gradient(c0, tgrid)
        seminorms["c0_prime"] = _holder_seminorm_grid(c0p, tgrid, alpha)
        seminorms["a0"] = _holder_seminorm_grid(a0, tgrid, alpha)
        seminorms["a1"] = _holder_seminorm_grid(a1, tgrid, alpha)
    else:
        seminorms["c0_prime"] = 0.0
        seminorms["a0"] = 0.0
        seminorms["a1"] = 0.0
    return XYDecomposition(s=s, alpha=alpha, eps=eps, c0=c0, a0=a0, a1=a1,
                           y_tan_grid=tgrid, remainder_samples=remainders,
                           seminorms=seminorms)


@dataclass(frozen=True)
class RhsDecomposition:
    """Leading edge form of a right-hand side:  f = y_n y_{n+1}^{1-2s} f0(y'')
    + y_{n+1}^{1-2s} r^{1+2a-e} f1, with f1 vanishing toward the edge."""

    s: FracOrder
    alpha: float
    eps: float
    f0: np.ndarray
    y_tan_grid: Optional[np.ndarray]
    f1_samples: np.ndarray
    seminorms: Dict[str, float]


def decompose_rhs(f, s, alpha: float, eps: float, *, ntan: int = 0,
                  y_tan_grid: Optional[Sequence[float]] = None,
                  collar: float = 0.5, nsamples: int = 3000,
                  npairs: int = 10_000, seed: int = 20260813) -> RhsDecomposition:
    """Split a right-hand side into its edge coefficient f0 and remainder f1."""
    s = FracOrder(s) if not isinstance(s, FracOrder) else s
    sv = s.s
    if eps > alpha:
        raise ValueError(f"need eps <= alpha, got eps={eps} > alpha={alpha}")
    if ntan > 1:
        raise NotImplementedError("at most one tangential slot is supported")
    ndim = ntan + 2
    ffun = _as_point_callable(f, ndim)
    rng = np.random.default_rng(seed)
    if ntan:
        tgrid = (np.linspace(-0.5, 0.5, 11) if y_tan_grid is None
                 else np.asarray(y_tan_grid, dtype=float))
        nodes = [(t,) for t in tgrid]
    else:
        tgrid = None
        nodes = [()]

    yn = rng.uniform(1e-6, collar, nsamples)
    yp = rng.uniform(1e-6, collar, nsamples)
    r = yn + yp
    shape = yn * yp ** (1 - 2 * sv)

    f0s = []
    f1s = []
    cloud = []
    for node in nodes:
        cols = [np.full(yn.shape, t) for t in node]
        pts = np.column_stack(cols + [yn, yp])
        vals = ffun(pts)
        f0 = float(np.dot(vals, shape) / np.dot(shape, shape))
        f0s.append(f0)
        f1s.append((vals - shape * f0) * yp ** (2 * sv - 1) / r ** (1 + 2 * alpha - eps))
        cloud.append(pts)
    cloud = np.concatenate(cloud)
    f1 = np.concatenate(f1s)
    seminorms = {"f1": _pair_seminorm(f1, cloud, eps, npairs, rng)}
    if ntan:
        seminorms["f0"] = _holder_seminorm_grid(np.asarray(f0s), tgrid, alpha)
    else:
        seminorms["f0"] = 0.0
    f0 = np.asarray(f0s) if ntan else np.asarray(f0s[0])
    return RhsDecomposition(s=s, alpha=alpha, eps=eps, f0=f0, y_tan_grid=tgrid,
                            f1_samples=f1, seminorms=seminorms)
