"""Closed-form model solutions of the degenerate thin obstacle problem.

Everything here is exact: the half-space profile ``w0s = (r + x_n)^s``, the
model solution ``w1s`` of homogeneity ``1+s``, its Legendre function
``v_model`` on the quarter plane, the inhomogeneity reduction, and the
scaling/multiplication symmetry.  All first and second derivatives are
hand-derived analytic formulas (no finite differences), since these fields
serve as the ground-truth oracle for every other module.

Conventions: the in-plane coordinate is ``x_n`` (written ``a`` internally),
the extension coordinate is ``x_np1 ≥ 0`` (written ``b``), and
``r = hypot(a, b)``.  Near the branch ray ``{b = 0, a < 0}`` the power
``(r + a)^s`` is evaluated through the cancellation-free form
``(b² / (r − a))^s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegeneratePoint, MissingDerivative, OutOfDomain
from .jets import Jet

__all__ = [
    "FracOrder",
    "HalfPoint",
    "ClosedFormField",
    "GRAD_W1S_CONSTANT",
    "V_MODEL_SCALE",
    "eval_w0s",
    "eval_w1s",
    "eval_v_model",
    "grad_w1s",
    "w0s_derivatives",
    "w1s_derivatives",
    "v_model_derivatives",
    "weighted_normal_derivative_w1s",
    "ls_w0s_power",
    "w0s_jet",
    "w1s_jet",
    "w0s_power_jet",
    "v_model_jet",
    "ThinField",
    "reduce_inhomogeneity",
    "rescale_solution",
]

# Fixed once by the symbolic confirmation step (see tests):
# d/dx_n w1s = GRAD_W1S_CONSTANT * w0s, and v_model is V_MODEL_SCALE times
# the (-s/(1+s) y_n^{2s+2} + y_n^{2s} y_{n+1}^2) profile.
GRAD_W1S_CONSTANT = 1.0
V_MODEL_SCALE = 0.5


@dataclass(frozen=True)
class FracOrder:
    """Fractional order s of the degenerate weight x_{n+1}^{1-2s}."""

    s: float

    def __post_init__(self):
        if not (isinstance(self.s, (int, float)) and math.isfinite(self.s)):
            raise ValueError(f"fractional order must be finite, got {self.s!r}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"fractional order must lie in (0, 1), got {self.s}")

    @property
    def weight_exponent(self) -> float:
        return 1.0 - 2.0 * self.s


@dataclass(frozen=True)
class HalfPoint:
    """Point of the closed upper half space, split into (x'', x_n, x_{n+1})."""

    x_tan: tuple = ()
    x_n: float = 0.0
    x_np1: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x_tan", tuple(float(t) for t in self.x_tan))
        if not math.isfinite(self.x_n) or not math.isfinite(self.x_np1):
            raise ValueError("coordinates must be finite")
        if self.x_np1 < 0.0:
            raise ValueError(f"x_np1 must be >= 0, got {self.x_np1}")


def _sval(s) -> float:
    if isinstance(s, FracOrder):
        return s.s
    s = float(s)
    FracOrder(s)  # validate range
    return s


def _coords(p_or_xn, x_np1):
    """Accept either a HalfPoint or plain (x_n, x_np1) arrays."""
    if isinstance(p_or_xn, HalfPoint):
        return np.asarray(p_or_xn.x_n, float), np.asarray(p_or_xn.x_np1, float)
    if x_np1 is None:
        raise TypeError("x_np1 required when not passing a HalfPoint")
    return np.asarray(p_or_xn, dtype=float), np.asarray(x_np1, dtype=float)


def _ret(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def _r_rp_rm(a, b):
    """Radius r plus cancellation-free r+a and r-a."""
    r = np.hypot(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        rp = np.where(a < 0.0, (b * b) / (r - a), r + a)
        rm = np.where(a > 0.0, (b * b) / (r + a), r - a)
    rp = np.where(r == 0.0, 0.0, rp)
    rm = np.where(r == 0.0, 0.0, rm)
    return r, rp, rm


# -----------------------------------------------------------------------------
# values
# -----------------------------------------------------------------------------

def eval_w0s(s, p_or_xn, x_np1=None):
    """(r + x_n)^s — the s-homogeneous half-space profile.

    Vanishes exactly on the ray {x_{n+1} = 0, x_n <= 0}.
    """
    s = _sval(s)
    a, b = _coords(p_or_xn, x_np1)
    _, rp, _ = _r_rp_rm(a, b)
    return _ret(rp ** s)


def eval_w1s(s, p_or_xn, x_np1=None):
    """The model solution (1/(s²−1))·(r+x_n)^s·(s·r − x_n), homogeneity 1+s."""
    s = _sval(s)
    a, b = _coords(p_or_xn, x_np1)
    r, rp, _ = _r_rp_rm(a, b)
    return _ret((rp ** s) * (s * r - a) / (s * s - 1.0))


def eval_v_model(s, y_n, y_np1=None):
    """Exact Legendre function of the model solution on the quarter plane.

    Equals V_MODEL_SCALE·(−(s/(1+s))·y_n^{2s+2} + y_n^{2s}·y_{n+1}²); the
    scale is pinned down by the dual relations (see the tests for the
    symbolic confirmation).
    """
    s = _sval(s)
    if isinstance(y_n, HalfPoint):  # pragma: no cover - defensive
        raise TypeError("v_model takes quarter-plane coordinates (y_n, y_np1)")
    yn = np.asarray(y_n, dtype=float)
    yp = np.asarray(y_np1, dtype=float)
    val = V_MODEL_SCALE * (
        -(s / (1.0 + s)) * yn ** (2.0 * s + 2.0) + (yn ** (2.0 * s)) * yp * yp
    )
    return _ret(val)


# -----------------------------------------------------------------------------
# hand-derived derivative tables
# -----------------------------------------------------------------------------

def w0s_derivatives(s, x_n, x_np1):
    """All first/second derivatives of w0s, plus the weighted normal one.

    The weighted normal derivative x_{n+1}^{1-2s} ∂_{n+1} w0s collapses to
    the closed form s·(r − x_n)^{1−s}/r, finite up to the thin plane.
    Second derivatives are singular at the origin and on the branch ray.
    """
    s = _sval(s)
    a = np.asarray(x_n, dtype=float)
    b = np.asarray(x_np1, dtype=float)
    r, rp, rm = _r_rp_rm(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        rps = rp ** s
        rps1 = rp ** (s - 1.0)
        rps2 = rp ** (s - 2.0)
        out = {
            "value": rps,
            "da": s * rps / r,
            "db": s * b * rps1 / r,
            "weighted_db": s * (rm ** (1.0 - s)) / r,
            "daa": s * rps * (s * r - a) / r ** 3,
            "dab": s * b * rps1 * ((s - 1.0) * r - a) / r ** 3,
            "dbb": s * rps1 / r
            + s * (s - 1.0) * b * b * rps2 / (r * r)
            - s * b * b * rps1 / r ** 3,
        }
    return out


def w1s_derivatives(s, x_n, x_np1):
    """All first/second derivatives of the model solution w1s.

    Key identities (symbolically confirmed, constants frozen above):
    ∂_n w1s = w0s, and x_{n+1}^{1−2s} ∂_{n+1} w1s = (s/(s−1))·(r−x_n)^{1−s}.
    """
    s = _sval(s)
    a = np.asarray(x_n, dtype=float)
    b = np.asarray(x_np1, dtype=float)
    r, rp, rm = _r_rp_rm(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        rps = rp ** s
        rps1 = rp ** (s - 1.0)
        rps2 = rp ** (s - 2.0)
        out = {
            "value": rps * (s * r - a) / (s * s - 1.0),
            "da": GRAD_W1S_CONSTANT * rps,
            "db": (s / (s - 1.0)) * b * rps1,
            "weighted_db": GRAD_W1S_CONSTANT * (s / (s - 1.0)) * rm ** (1.0 - s),
            "daa": s * rps / r,
            "dab": s * b * rps1 / r,
            "dbb": (s / (s - 1.0)) * rps1 + s * b * b * rps2 / r,
        }
    return out


def v_model_derivatives(s, y_n, y_np1):
    """First/second derivatives of the model Legendre function."""
    s = _sval(s)
    yn = np.asarray(y_n, dtype=float)
    yp = np.asarray(y_np1, dtype=float)
    c = V_MODEL_SCALE
    with np.errstate(divide="ignore", invalid="ignore"):
        out = {
            "value": c * (-(s / (1.0 + s)) * yn ** (2 * s + 2) + yn ** (2 * s) * yp * yp),
            "dn": c * (-2.0 * s * yn ** (2 * s + 1) + 2.0 * s * yn ** (2 * s - 1) * yp * yp),
            "dp": c * 2.0 * yn ** (2 * s) * yp,
            "dnn": c * (
                -2.0 * s * (2 * s + 1) * yn ** (2 * s)
                + 2.0 * s * (2 * s - 1) * yn ** (2 * s - 2) * yp * yp
            ),
            "dnp": c * 4.0 * s * yn ** (2 * s - 1) * yp,
            "dpp": c * 2.0 * yn ** (2 * s),
        }
    return out


def weighted_normal_derivative_w1s(s, x_n, x_np1=0.0):
    """x_{n+1}^{1−2s} ∂_{n+1} w1s = (s/(s−1))·(r−x_n)^{1−s}.

    Total on the closed half space: the closed form stays finite on the thin
    plane (where the raw derivative is an indeterminate 0·∞ product), which
    is what the Signorini complementarity checks need.
    """
    s = _sval(s)
    a = np.asarray(x_n, dtype=float)
    b = np.asarray(x_np1, dtype=float)
    _, _, rm = _r_rp_rm(a, b)
    return _ret(GRAD_W1S_CONSTANT * (s / (s - 1.0)) * rm ** (1.0 - s))


def grad_w1s(s, p_or_xn, x_np1=None):
    """(∂_n w1s, x_{n+1}^{1−2s} ∂_{n+1} w1s) away from the contact ray.

    Raises DegeneratePoint if any evaluation point lies on the contact ray
    {x_{n+1} = 0, x_n <= 0}, where the raw normal derivative degenerates.
    """
    s = _sval(s)
    a, b = _coords(p_or_xn, x_np1)
    on_ray = np.logical_and(b == 0.0, a <= 0.0)
    if np.any(on_ray):
        raise DegeneratePoint(
            "weighted normal derivative of w1s requested on the contact ray"
        )
    d = w1s_derivatives(s, a, b)
    return _ret(d["da"]), _ret(d["weighted_db"])


def ls_w0s_power(s, tau, x_n, x_np1):
    """Analytic L_s(w0s^{1+τ}) = 2s²τ(1+τ)·x_{n+1}^{1−2s}·(r+x_n)^{s(1+τ)−1}/r.

    This is the workhorse identity behind the barrier fields; at the point
    (x_n, x_{n+1}) = (0, 1) it evaluates to 2s²τ(1+τ).
    """
    s = _sval(s)
    tau = float(tau)
    a = np.asarray(x_n, dtype=float)
    b = np.asarray(x_np1, dtype=float)
    r, rp, _ = _r_rp_rm(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (
            2.0 * s * s * tau * (1.0 + tau)
            * b ** (1.0 - 2.0 * s)
            * rp ** (s * (1.0 + tau) - 1.0)
            / r
        )
    return _ret(val)


# -----------------------------------------------------------------------------
# jet builders (exact derivative propagation for composed expressions)
# -----------------------------------------------------------------------------

def _rp_jet(a: Jet, b: Jet) -> Jet:
    r = (a * a + b * b).sqrt()
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = (b * b) / (r - a)
        plain = r + a
        return Jet.where(a.val < 0.0, stable, plain)


def w0s_jet(s, a: Jet, b: Jet) -> Jet:
    """w0s as a jet expression of arbitrary inner jets (e.g. rotated charts)."""
    s = _sval(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        return _rp_jet(a, b) ** s


def w1s_jet(s, a: Jet, b: Jet) -> Jet:
    s = _sval(s)
    r = (a * a + b * b).sqrt()
    with np.errstate(divide="ignore", invalid="ignore"):
        return (_rp_jet(a, b) ** s) * (r * s - a) * (1.0 / (s * s - 1.0))


def w0s_power_jet(s, tau, a: Jet, b: Jet) -> Jet:
    s = _sval(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        return _rp_jet(a, b) ** (s * (1.0 + float(tau)))


def v_model_jet(s, yn: Jet, yp: Jet) -> Jet:
    s = _sval(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        return V_MODEL_SCALE * (
            (yn ** (2.0 * s)) * (yp * yp) - (s / (1.0 + s)) * yn ** (2.0 * s + 2.0)
        )


# -----------------------------------------------------------------------------
# field wrapper
# -----------------------------------------------------------------------------

_KINDS = ("w0s", "w1s", "w0s_power", "v_model", "eigenmode")


@dataclass(frozen=True)
class ClosedFormField:
    """A closed-form profile, optionally shifted/rotated within the thin space.

    kind: one of "w0s", "w1s", "w0s_power" (needs tau), "v_model",
    "eigenmode" (needs k).  For in-plane kinds the evaluation coordinate is
    q = (x' − x0)·nu with nu a unit in-plane normal having positive x_n
    component; v_model instead lives on the quarter plane (y_n, y_{n+1}).
    """

    kind: str
    s: FracOrder
    tau: Optional[float] = None
    k: Optional[int] = None
    x0: Optional[tuple] = None
    nu: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        if not isinstance(self.s, FracOrder):
            object.__setattr__(self, "s", FracOrder(float(self.s)))
        if self.kind == "w0s_power" and self.tau is None:
            raise ValueError("w0s_power requires tau")
        if self.kind == "eigenmode" and self.k is None:
            raise ValueError("eigenmode requires k")
        if self.nu is not None:
            nu = np.asarray(self.nu, dtype=float)
            if not np.isclose(np.linalg.norm(nu), 1.0, atol=1e-12):
                raise ValueError("nu must be a unit vector")
            if nu[-1] <= 0.0:
                raise ValueError("nu must have positive x_n component")
            object.__setattr__(self, "nu", tuple(nu))
        if self.x0 is not None:
            object.__setattr__(self, "x0", tuple(float(t) for t in self.x0))

    # The thin coordinate layout is (x'', x_n): nu's last entry multiplies x_n.

    def _inplane(self, x_thin):
        x = np.asarray(x_thin, dtype=float)
        dim = None
        if self.nu is not None:
            dim = len(self.nu)
        elif self.x0 is not None:
            dim = len(self.x0)
        if x.ndim == 0:
            pts = x.reshape(1, 1)
        elif x.ndim == 1:
            if dim is not None and dim > 1:
                if x.size != dim:
                    raise ValueError(
                        f"expected a point with {dim} thin coordinates, got {x.size}"
                    )
                pts = x.reshape(1, dim)
            else:
                pts = x[:, None]  # batch of points on a 1-D thin space
        else:
            pts = x
        x0 = np.zeros(pts.shape[1]) if self.x0 is None else np.asarray(self.x0)
        nu = np.zeros(pts.shape[1])
        nu[-1] = 1.0
        if self.nu is not None:
            nu = np.asarray(self.nu)
        q = (pts - x0) @ nu
        return float(q[0]) if x.ndim == 0 or (x.ndim == 1 and dim == x.size and dim > 1) else q

    def value(self, x_thin, x_np1):
        b = np.asarray(x_np1, dtype=float)
        if self.kind == "v_model":
            return eval_v_model(self.s, np.asarray(x_thin, float), b)
        a = self._inplane(x_thin)
        if self.kind == "w0s":
            return _ret(eval_w0s(self.s, a, b))
        if self.kind == "w1s":
            return _ret(eval_w1s(self.s, a, b))
        if self.kind == "w0s_power":
            return _ret(np.asarray(eval_w0s(self.s, a, b)) ** (1.0 + self.tau))
        from . import spectral  # local import: spectral depends on this module

        mode = spectral.make_mode(self.k, self.s)
        return _ret(spectral.eval_mode_2d(mode, a, b))

    def jet(self, a: Jet, b: Jet) -> Jet:
        """Jet of the un-shifted profile in local coordinates (q, x_{n+1})."""
        if self.kind == "w0s":
            return w0s_jet(self.s, a, b)
        if self.kind == "w1s":
            return w1s_jet(self.s, a, b)
        if self.kind == "w0s_power":
            return w0s_power_jet(self.s, self.tau, a, b)
        if self.kind == "v_model":
            return v_model_jet(self.s, a, b)
        from . import spectral

        mode = spectral.make_mode(self.k, self.s)
        return spectral.mode_jet(mode, a, b)


# -----------------------------------------------------------------------------
# inhomogeneity reduction
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class ThinField:
    """A scalar field with the thin-plane derivative data the reduction needs.

    All callables take the thin coordinates (shape (N, n) or scalar for
    n = 1).  ``value`` additionally takes the extension coordinate.  Leave a
    slot None if unavailable — the reduction raises MissingDerivative only
    when it actually needs that slot.
    """

    value: Callable = None
    d_np1: Callable = None           # ∂_{n+1} f̃ (·, 0)
    d2_np1: Callable = None          # ∂²_{n+1} f̃ (·, 0)
    lap_tan: Callable = None         # Δ' f̃ (·, 0)
    lap_tan_d_np1: Callable = None   # Δ' ∂_{n+1} f̃ (·, 0)


def _need(field, name):
    fn = getattr(field, name, None)
    if fn is None:
        raise MissingDerivative(f"input field cannot supply {name}")
    return fn


def reduce_inhomogeneity(f_tilde, s, p_or_xthin, x_np1=None):
    """Reduce f̃ to the divided form f and the explicit offset.

    offset(x) = f̃(x',0)·b²/(2(2−2s)) + ∂_{n+1}f̃(x',0)·b³/(3(3−2s));
    f(x) = (f̃(x) − f̃(x',0) − ∂_{n+1}f̃(x',0)·b)·b^{−2}
           − Δ'f̃(x',0)/(2(2−2s)) − Δ'∂_{n+1}f̃(x',0)·b/(3(3−2s)).
    Subtracting the offset from a solution with right-hand side
    x_{n+1}^{1−2s}·f̃ produces one with right-hand side x_{n+1}^{3−2s}·f and
    an unchanged free boundary.  At b = 0 the divided difference is replaced
    by its limit ½·∂²_{n+1}f̃(x',0).
    """
    s = _sval(s)
    if isinstance(p_or_xthin, HalfPoint):
        xt = np.asarray(
            (p_or_xthin.x_tan + (p_or_xthin.x_n,))
            if p_or_xthin.x_tan
            else p_or_xthin.x_n,
            dtype=float,
        )
        b = np.asarray(p_or_xthin.x_np1, dtype=float)
    else:
        xt = np.asarray(p_or_xthin, dtype=float)
        b = np.asarray(x_np1, dtype=float)

    c2 = 2.0 * (2.0 - 2.0 * s)
    c3 = 3.0 * (3.0 - 2.0 * s)
    v0 = np.asarray(_need(f_tilde, "value")(xt, np.zeros_like(b)), dtype=float)
    d1 = np.asarray(_need(f_tilde, "d_np1")(xt), dtype=float)
    lap0 = np.asarray(_need(f_tilde, "lap_tan")(xt), dtype=float)
    lap1 = np.asarray(_need(f_tilde, "lap_tan_d_np1")(xt), dtype=float)

    offset = v0 * b * b / c2 + d1 * b ** 3 / c3

    vb = np.asarray(_need(f_tilde, "value")(xt, b), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = (vb - v0 - d1 * b) / (b * b)
    at_plane = b == 0.0
    if np.any(at_plane):
        d2 = np.asarray(_need(f_tilde, "d2_np1")(xt), dtype=float)
        quotient = np.where(at_plane, 0.5 * d2, quotient)
    f = quotient - lap0 / c2 - lap1 * b / c3
    return _ret(offset), _ret(f)


# -----------------------------------------------------------------------------
# scaling symmetry
# -----------------------------------------------------------------------------

class RescaledField:
    """c·w(x0 + λ·) together with the transformed inhomogeneity cλ²f(x0+λ·)."""

    def __init__(self, base, c, lam, x0):
        self.base = base
        self.c = float(c)
        self.lam = float(lam)
        self.x0 = np.asarray(x0, dtype=float)

    def _map(self, x_thin, b):
        x = np.asarray(x_thin, dtype=float)
        bb = self.lam * np.asarray(b, dtype=float)
        xx = self.x0 + self.lam * x if x.ndim <= 1 else self.x0[None, :] + self.lam * x
        radius = getattr(self.base, "domain_radius", None)
        if radius is not None:
            rr = np.hypot(np.linalg.norm(np.atleast_1d(xx), axis=-1), bb)
            if np.any(rr > radius):
                raise OutOfDomain(
                    f"rescaled evaluation radius {float(np.max(rr)):.3g} exceeds "
                    f"domain radius {radius:.3g}"
                )
        return xx, bb

    def value(self, x_thin, x_np1):
        xx, bb = self._map(x_thin, x_np1)
        return self.c * np.asarray(self.base.value(xx, bb))

    def inhomogeneity(self, x_thin, x_np1):
        f = getattr(self.base, "inhomogeneity", None)
        if f is None:
            return np.zeros_like(np.asarray(x_np1, dtype=float))
        xx, bb = self._map(x_thin, x_np1)
        return self.c * self.lam ** 2 * np.asarray(f(xx, bb))


def rescale_solution(w, c, lam, x0):
    """Scaling/multiplication symmetry: returns the field c·w(x0 + λ·).

    The associated inhomogeneity transforms as f ↦ c·λ²·f(x0 + λ·); if ``w``
    exposes an ``inhomogeneity`` callable the returned field does too.
    """
    if not (c > 0.0 and lam > 0.0):
        raise ValueError("c and lambda must be positive")
    return RescaledField(w, c, lam, np.atleast_1d(np.asarray(x0, dtype=float)))
