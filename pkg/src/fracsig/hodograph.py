"""Hodograph-Legendre transform pipeline for half-space obstacle solutions.

The partial hodograph transform straightens the free boundary: from a solution
w(x) on the weighted half space it produces image coordinates

    y'' = x'',   y_n = (d_n w)^{1/(2s)},
    y_{n+1} = ( -((1-s)/s) * x_{n+1}^{1-2s} d_{n+1} w )^{1/(2(1-s))},

which map the contact set into {y_n = 0}, the remaining thin points into
{y_{n+1} = 0}, and the free boundary into the edge P where both vanish.  The
associated Legendre function

    v(y) = w(x) - x_n y_n^{2s} + (1/(2(1-s))) x_{n+1}^{2s} y_{n+1}^{2(1-s)}

turns the free boundary problem into a fully nonlinear PDE F(D^2 v, Dv, y) = 0
on the fixed quarter space, whose linearization at the model profile is the
degenerate-Grushin operator from :mod:`fracsig.grushin`.  This module carries
the discrete forward transform, the Legendre-field resampling, analytic and
finite-difference evaluation of F, a linearization probe, the inverse
asymptotic (free-boundary) expansion read off from the Legendre field, a
Jacobian diagnostic for the transform, and the tangential diffeomorphism flow
used to normalize almost-flat free boundaries.

Conventions: fractional roots clamp radicands in [-1e-12 * scale, 0) to zero;
anything more negative is a genuine monotonicity or radicand failure and
raises.  Analytic F evaluation goes through second-order jets of closed-form
inputs, finite differencing uses fourth-order five-point stencils and needs a
two-cell collar off the axes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import jets
from .closed_forms import FracOrder
from .errors import (
    DegenerateFit,
    GridTooCoarse,
    MonotonicityViolated,
    NegativeRadicand,
    OutOfDomain,
    ResampleGap,
)
from .grushin import delta_Gs
from .solver import DiscreteSolution

__all__ = [
    "forward_transform",
    "LegendreField",
    "legendre_function",
    "eval_F",
    "polynomial_bump",
    "LinearizationReport",
    "linearization_check",
    "InverseAsymptotics",
    "inverse_asymptotics",
    "TransformDiag",
    "jacobian_diag",
    "diffeo_flow",
]


# -----------------------------------------------------------------------------
# forward transform
# -----------------------------------------------------------------------------

def _clamped_root(rad: np.ndarray, power: float, tol: float, what: str,
                  collect: Optional[list] = None):
    """rad**power with small negatives clamped to zero.

    Negatives below -tol are recorded in ``collect`` (flattened indices) when
    given, else raise NegativeRadicand.
    """
    rad = np.asarray(rad, dtype=float)
    bad = rad < -tol
    if np.any(bad):
        idx = np.flatnonzero(bad.ravel())
        if collect is None:
            raise NegativeRadicand(
                f"{what}: {idx.size} radicands below -{tol:.3e}; "
                f"worst {float(np.min(rad)):.3e}"
            )
        collect.extend(idx.tolist())
    safe = np.where(rad > 0.0, rad, 0.0)
    return safe ** power


def _transform_fields(sol: DiscreteSolution):
    """Per-node hodograph data for a discrete solution.

    Returns (y, x, w, meta) for every grid node with full centered stencils:
    thin-normal index 1..m-2, vertical index 0..nz-2.  meta carries the node
    multi-indices and the monotonicity violation list (indices into the
    flattened node set where d_n w is negative beyond tolerance, or the
    vertical flux is positive beyond tolerance off the contact columns).
    """
    grid = sol.grid
    s = grid.s.s
    h = grid.h
    w = sol.values
    axes = grid.axes()
    zs = axes[-1]
    nz = len(zs)
    nax = grid.n - 1  # thin-normal axis index

    # centered derivative along the thin-normal axis, interior slices only
    sl_hi = [slice(None)] * w.ndim
    sl_lo = [slice(None)] * w.ndim
    sl_hi[nax] = slice(2, None)
    sl_lo[nax] = slice(None, -2)
    dnw_full = (w[tuple(sl_hi)] - w[tuple(sl_lo)]) / (2.0 * h)

    # weighted vertical flux q ~ z^{1-2s} d_z w, estimated by difference
    # quotients against z^{2s} (exact on span{1, z^{2s}}, so the thin-plane
    # layer where w ~ (q/2s) z^{2s} carries no leading-order bias; away from
    # the layer it matches the plain centered quotient to O(h^2/z^2)):
    # one-sided on the thin plane, centered above
    q_full = np.empty_like(w)
    q_full[..., 0] = 2.0 * s * (w[..., 1] - w[..., 0]) / h ** (2.0 * s)
    dz2s = zs[2:] ** (2.0 * s) - zs[:-2] ** (2.0 * s)
    q_full[..., 1:-1] = 2.0 * s * (w[..., 2:] - w[..., :-2]) / dz2s
    q_full[..., -1] = np.nan

    # restrict both to the common stencil-complete node set
    take = [slice(None)] * w.ndim
    take[nax] = slice(1, -1)
    take[-1] = slice(0, nz - 1)
    dnw = dnw_full[tuple(take[:nax] + [slice(None)] + take[nax + 1:])]
    q = q_full[tuple(take)]
    wv = w[tuple(take)]

    node_axes = [ax.copy() for ax in axes]
    node_axes[nax] = axes[nax][1:-1]
    node_axes[-1] = zs[: nz - 1]
    mesh = np.meshgrid(*node_axes, indexing="ij")
    coords = [m.ravel() for m in mesh]

    dnw = dnw.ravel()
    q = q.ravel()
    wv = wv.ravel()
    rad_p = -((1.0 - s) / s) * q

    # tolerance scales: roundoff on d_n w; the vertical flux additionally
    # carries an O(h^{2-2s}) discrete band on smooth (non z^{2s}) columns,
    # where the true limit is zero from either side
    scale_n = float(np.max(np.abs(dnw))) + 1e-300
    scale_p = float(np.max(np.abs(rad_p))) + 1e-300
    tol_n = 1e-10 * scale_n
    tol_p = max(1e-10 * scale_p, 10.0 * h ** (2.0 - 2.0 * s) * scale_p)

    violations: list = []
    yn = _clamped_root(dnw, 1.0 / (2.0 * s), tol_n, "d_n w", collect=violations)
    yp = _clamped_root(rad_p, 1.0 / (2.0 * (1.0 - s)), tol_p,
                       "vertical flux", collect=violations)

    y = np.stack(coords[:nax] + [yn, yp], axis=1) if nax else np.stack([yn, yp], axis=1)
    x = np.stack(coords, axis=1)
    meta = {
        "violations": sorted(set(violations)),
        "tol_n": tol_n,
        "tol_p": tol_p,
        "shape": tuple(len(ax) for ax in node_axes),
    }
    return y, x, wv, meta


def forward_transform(sol: DiscreteSolution):
    """Scattered hodograph image of a discrete solution.

    Returns (y, x): arrays of shape (N, n+1) pairing each stencil-complete
    grid node x with its image y = (x'', y_n, y_{n+1}).  Raises
    MonotonicityViolated listing flattened node indices when d_n w is
    negative, or the vertical flux positive, beyond the clamp tolerances —
    both signs are required throughout the hodograph regime.
    """
    y, x, _, meta = _transform_fields(sol)
    if meta["violations"]:
        bad = meta["violations"]
        raise MonotonicityViolated(
            f"{len(bad)} nodes violate the transform monotonicity "
            f"(first few: {bad[:8]})"
        )
    return y, x


# -----------------------------------------------------------------------------
# Legendre field on the quarter grid
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class LegendreField:
    """Legendre function and inverse-coordinate map resampled to a quarter grid.

    axes: per-dimension node positions, layout (y''.., y_n, y_{n+1}); for a
    1-D thin space just (y_n, y_{n+1}).  v, xn, xp share the tensor shape of
    axes and hold the Legendre value and the inverse map (x_n(y), x_{n+1}(y));
    mask flags nodes that received scattered data.  Invariants: v = 0 on
    {y_n = 0} within resampling tolerance, xp >= 0, and on the bottom edge
    x_n equals the free-boundary graph value.
    """

    s: FracOrder
    axes: Tuple[np.ndarray, ...]
    v: np.ndarray
    xn: np.ndarray
    xp: np.ndarray
    mask: np.ndarray
    h_source: float

    @property
    def ntan(self) -> int:
        return len(self.axes) - 2

    def save(self, csv_path: str, sidecar_path: Optional[str] = None) -> None:
        """Same CSV + JSON sidecar convention as DiscreteSolution.save, with
        an axis-role marker naming the quarter-grid layout."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        names = [f"y{k + 1}" for k in range(self.ntan)] + ["yn", "ynp1"]
        cols = [m.ravel() for m in mesh]
        cols += [self.v.ravel(), self.xn.ravel(), self.xp.ravel(),
                 self.mask.ravel().astype(float)]
        names += ["v", "xn", "xnp1", "mask"]
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(names)
            for row in zip(*cols):
                writer.writerow([f"{val:.17g}" for val in row])
        if sidecar_path is not None:
            meta = {
                "axis_role": "legendre-quarter-grid",
                "axes": names[: self.ntan + 2],
                "s": self.s.s,
                "h_source": self.h_source,
                "shape": list(self.v.shape),
            }
            with open(sidecar_path, "w") as fh:
                json.dump(meta, fh, indent=2, sort_keys=True)


def _bin_linear(ypts: np.ndarray, fields: List[np.ndarray],
                ax_n: np.ndarray, ax_p: np.ndarray):
    """Hat-weighted linear resampling of scattered (y_n, y_{n+1}) data.

    Deposits bilinear hat weights on the structured quarter grid and solves,
    per node, the weighted least-squares plane through the contributing
    points — exact for fields linear in y, so the resampling bias is
    O(cell^2) instead of the O(cell) of a plain weighted average.  Returns
    (list of nodal fields, weight array, trusted mask).  A node is trusted
    only if some sample lands in the inner half of its hat support; nodes
    fed purely by far-side deposits (the fringe of the scattered image)
    would otherwise be one-sided extrapolations of the plane fit.
    """
    kn = ax_n[1] - ax_n[0]
    kp = ax_p[1] - ax_p[0]
    fn = np.clip(ypts[:, 0] / kn, 0, len(ax_n) - 2)
    fp = np.clip(ypts[:, 1] / kp, 0, len(ax_p) - 2)
    i0 = np.minimum(fn.astype(int), len(ax_n) - 2)
    j0 = np.minimum(fp.astype(int), len(ax_p) - 2)
    tn = fn - i0
    tp = fp - j0
    shape = (len(ax_n), len(ax_p))
    nmom = 6  # w, w*u, w*v, w*u^2, w*u*v, w*v^2 with u, v offsets from node
    moments = np.zeros((nmom,) + shape)
    near = np.zeros(shape)
    rhs = np.zeros((len(fields), 3) + shape)
    for di, dj, wgt in (
        (0, 0, (1 - tn) * (1 - tp)),
        (1, 0, tn * (1 - tp)),
        (0, 1, (1 - tn) * tp),
        (1, 1, tn * tp),
    ):
        ii = i0 + di
        jj = j0 + dj
        du = ypts[:, 0] - ax_n[ii]
        dv = ypts[:, 1] - ax_p[jj]
        np.add.at(moments[0], (ii, jj), wgt)
        np.add.at(moments[1], (ii, jj), wgt * du)
        np.add.at(moments[2], (ii, jj), wgt * dv)
        close = (np.abs(du) <= 0.5 * kn) & (np.abs(dv) <= 0.5 * kp)
        np.maximum.at(near, (ii, jj), close.astype(float))
        np.add.at(moments[3], (ii, jj), wgt * du * du)
        np.add.at(moments[4], (ii, jj), wgt * du * dv)
        np.add.at(moments[5], (ii, jj), wgt * dv * dv)
        for k, f in enumerate(fields):
            np.add.at(rhs[k, 0], (ii, jj), wgt * f)
            np.add.at(rhs[k, 1], (ii, jj), wgt * f * du)
            np.add.at(rhs[k, 2], (ii, jj), wgt * f * dv)
    weight = moments[0]
    covered = weight > 0.0
    out = [np.zeros(shape) for _ in fields]
    gram = np.zeros(shape + (3, 3))
    gram[..., 0, 0] = moments[0]
    gram[..., 0, 1] = gram[..., 1, 0] = moments[1]
    gram[..., 0, 2] = gram[..., 2, 0] = moments[2]
    gram[..., 1, 1] = moments[3]
    gram[..., 1, 2] = gram[..., 2, 1] = moments[4]
    gram[..., 2, 2] = moments[5]
    # a well-conditioned plane fit needs genuine two-dimensional spread in the
    # contributing cloud (grid-line images can be locally collinear); fall
    # back to the plain weighted mean elsewhere
    with np.errstate(invalid="ignore", divide="ignore"):
        mu_u = np.where(covered, moments[1] / np.where(covered, weight, 1.0), 0.0)
        mu_v = np.where(covered, moments[2] / np.where(covered, weight, 1.0), 0.0)
        suu = moments[3] / np.where(covered, weight, 1.0) - mu_u ** 2
        suv = moments[4] / np.where(covered, weight, 1.0) - mu_u * mu_v
        svv = moments[5] / np.where(covered, weight, 1.0) - mu_v ** 2
    cov_det = suu * svv - suv ** 2
    solvable = covered & (cov_det > (1e-2 * kn * kp) ** 2)
    if np.any(solvable):
        g = gram[solvable]
        for k in range(len(fields)):
            b = np.stack([rhs[k, m][solvable] for m in range(3)], axis=-1)
            sols = np.linalg.solve(g, b[..., None])[..., 0]
            out[k][solvable] = sols[..., 0]
    fallback = covered & ~solvable
    if np.any(fallback):
        for k in range(len(fields)):
            out[k][fallback] = rhs[k, 0][fallback] / weight[fallback]
    # the mean fallback is only trustworthy when the cloud is centred on the
    # node (otherwise it carries an O(cell * gradient) offset)
    centred = (np.abs(mu_u) <= 0.25 * kn) & (np.abs(mu_v) <= 0.25 * kp)
    return out, weight, covered & (near > 0.0) & (solvable | centred)


def legendre_function(sol: DiscreteSolution, ny: Optional[int] = None) -> LegendreField:
    """Build the Legendre field of a discrete solution on a quarter grid.

    The scattered hodograph image carries w and the inverse map
    (x_n, x_{n+1}); these are resampled by hat-weighted plane fits on a
    uniform quarter grid and combined into
    v = w - x_n y_n^{2s} + (1/(2(1-s))) x_{n+1}^{2s} y_{n+1}^{2(1-s)}
    with exact nodal powers.  The default cell size sqrt(h * ymax) balances
    the image's thinning density near the edge against resampling bias.  Interior
    grid holes (an empty node whose four neighbours all received data) raise
    ResampleGap; nodes beyond the image support are simply unmasked.  For a
    2-D thin space the tangential axis is grid-aligned (y'' = x'' exactly)
    and the resampling runs per tangential slice.
    """
    grid = sol.grid
    s = grid.s.s
    y, x, wv, meta = _transform_fields(sol)
    if meta["violations"]:
        raise MonotonicityViolated(
            f"{len(meta['violations'])} nodes violate the transform "
            f"monotonicity; cannot build a Legendre field"
        )
    ntan = grid.n - 1
    yn = y[:, -2]
    yp = y[:, -1]
    xn = x[:, -2]
    xp = x[:, -1]

    ymax_n = float(np.max(yn)) * 1.0001 + 1e-12
    ymax_p = float(np.max(yp)) * 1.0001 + 1e-12
    if ny is None:
        kn = math.sqrt(grid.h * ymax_n)
        ny_n = max(8, int(math.ceil(ymax_n / kn)))
        ny_p = max(8, int(math.ceil(ymax_p / kn)))
    else:
        ny_n = ny_p = int(ny)
    ax_n = np.linspace(0.0, ymax_n, ny_n + 1)
    ax_p = np.linspace(0.0, ymax_p, ny_p + 1)

    # Resample w, x_n, x_{n+1}: all are smooth across the quarter-plane axes
    # (pulling w back through the opening map removes the contact-ray cusp),
    # then assemble v with the exact nodal powers y_n^{2s}, y_{n+1}^{2-2s} --
    # resampling v itself would smear its y_n^{2s} cusp over the axis cells.
    if ntan == 0:
        (wg, xng, xpg), weight, trusted = _bin_linear(
            np.stack([yn, yp], axis=1), [wv, xn, xp], ax_n, ax_p)
        axes = (ax_n, ax_p)
    else:
        tax = grid.axes()[0]
        shape = (len(tax), len(ax_n), len(ax_p))
        wg = np.zeros(shape)
        xng = np.zeros(shape)
        xpg = np.zeros(shape)
        weight = np.zeros(shape)
        trusted = np.zeros(shape, dtype=bool)
        tidx = np.rint((y[:, 0] - tax[0]) / grid.h).astype(int)
        for it in range(len(tax)):
            sel = tidx == it
            if not np.any(sel):
                continue
            (wg[it], xng[it], xpg[it]), weight[it], trusted[it] = _bin_linear(
                np.stack([yn[sel], yp[sel]], axis=1),
                [wv[sel], xn[sel], xp[sel]], ax_n, ax_p)
        axes = (tax.copy(), ax_n, ax_p)

    covered = weight > 0.0
    empty = ~covered
    holes = np.zeros_like(empty)
    inner = (slice(1, -1), slice(1, -1))
    if ntan == 0:
        holes[inner] = (empty[inner] & covered[2:, 1:-1] & covered[:-2, 1:-1]
                        & covered[1:-1, 2:] & covered[1:-1, :-2])
    else:
        holes[:, 1:-1, 1:-1] = (empty[:, 1:-1, 1:-1]
                                & covered[:, 2:, 1:-1] & covered[:, :-2, 1:-1]
                                & covered[:, 1:-1, 2:] & covered[:, 1:-1, :-2])
    if np.any(holes):
        where = np.argwhere(holes)[:8]
        raise ResampleGap(
            f"{int(np.sum(holes))} interior quarter-grid nodes received no "
            f"scattered points (first few: {where.tolist()})"
        )
    np.maximum(xpg, 0.0, out=xpg)  # the inverse vertical is a 2s-th root
    # quarter-plane axes carry exact values: the y_n axis is the contact
    # image (v = 0, x_{n+1} = 0) and the y_{n+1} axis is the thin non-contact
    # image (x_{n+1} = 0).  Pinning them removes the resampling bias of the
    # y_n^{2s} cusp these fields carry across the contact axis; the first
    # interior rows still see an O(cell^{2s}) remnant of it.
    ax0 = (Ellipsis, 0, slice(None))
    ax1 = (Ellipsis, slice(None), 0)
    xpg[ax0] = 0.0
    xpg[ax1] = 0.0
    grids = np.meshgrid(*axes, indexing="ij")
    yn_g, yp_g = grids[-2], grids[-1]
    vg = (wg - xng * yn_g ** (2.0 * s)
          + xpg ** (2.0 * s) * yp_g ** (2.0 - 2.0 * s) / (2.0 * (1.0 - s)))
    vg[ax0] = 0.0
    return LegendreField(s=grid.s, axes=axes, v=vg, xn=xng, xp=xpg,
                         mask=trusted, h_source=grid.h)


# -----------------------------------------------------------------------------
# the nonlinear functional
# -----------------------------------------------------------------------------

def _F_combine(s: float, yn, yp, v_n, v_p, v_nn, v_np, v_pp,
               f=None, ytan=None, tan_blocks=None, guard: str = "raise"):
    """Assemble F from the derivative fields of v.

    tan_blocks, when present, is a list over tangential directions i of
    tuples (v_ii, v_in, v_ip) feeding the determinant sum.  guard selects the
    negative-radicand policy: "raise" or "mask" (masked points return NaN).
    """
    wn = yn ** (1.0 - 2.0 * s)
    wp = yp ** (2.0 * s - 1.0)
    A_n = wn * v_nn + (1.0 - 2.0 * s) * yn ** (-2.0 * s) * v_n
    A_p = wn * v_np
    B_n = wp * v_np
    B_p = wp * v_pp + (2.0 * s - 1.0) * yp ** (2.0 * s - 2.0) * v_p

    rad = wp * v_p
    scale = float(np.max(np.abs(rad))) + 1e-300
    bad = rad < -1e-12 * scale
    usable = ~bad & (rad > 0.0)
    if np.any(bad):
        if guard == "raise":
            raise NegativeRadicand(
                f"y_np1^(2s-1) d_np1 v is {float(np.min(rad)):.3e} < 0 at "
                f"{int(np.sum(bad))} points; the inverse height is undefined"
            )
        usable = usable & ~bad
    x = np.zeros_like(rad)
    x[usable] = rad[usable] ** (1.0 / (2.0 * s))

    out = np.full(rad.shape, np.nan)
    u = usable
    x_u = x[u]
    T1 = yp[u] ** (1.0 - 2.0 * s) * A_n[u]
    T2 = x_u ** (2.0 - 4.0 * s) * yn[u] ** (2.0 * s - 1.0) * B_p[u]
    out[u] = T1 + T2
    if tan_blocks:
        inv2s = 1.0 / (2.0 * s)
        for (v_ii, v_in, v_ip) in tan_blocks:
            A_i = wn[u] * v_in[u]
            B_i = wp[u] * v_ip[u]
            det = (v_ii[u] * (-A_n[u] * B_p[u] + A_p[u] * B_n[u])
                   - v_in[u] * (A_i * B_p[u] - A_p[u] * B_i)
                   + v_ip[u] * (A_i * B_n[u] - A_n[u] * B_i)) * inv2s ** 2
            out[u] += x_u ** (2.0 - 4.0 * s) * det
    if f is not None:
        xn_val = -(1.0 / (2.0 * s)) * yn[u] ** (1.0 - 2.0 * s) * v_n[u]
        J = -(x_u ** (1.0 - 2.0 * s) / (4.0 * s * s)) * (
            A_n[u] * B_p[u] - A_p[u] * B_n[u])
        if ytan is None:
            fval = np.asarray(f(xn_val, x_u), dtype=float)
        else:
            fval = np.asarray(f(ytan[u], xn_val, x_u), dtype=float)
        out[u] -= x_u ** (3.0 - 2.0 * s) * J * fval
    return out, usable


def _fd_axis(arr: np.ndarray, axis: int, k: float, order: int) -> np.ndarray:
    """Fourth-order centered first/second derivative; NaN outside the 2-cell collar."""
    out = np.full_like(arr, np.nan)
    n = arr.shape[axis]

    def win(d):
        s = [slice(None)] * arr.ndim
        s[axis] = slice(2 + d, n - 2 + d)
        return tuple(s)

    mid, p1, m1, p2, m2 = win(0), win(1), win(-1), win(2), win(-2)
    if order == 1:
        out[mid] = (-arr[p2] + 8 * arr[p1] - 8 * arr[m1] + arr[m2]) / (12 * k)
    else:
        out[mid] = (-arr[p2] + 16 * arr[p1] - 30 * arr[mid]
                    + 16 * arr[m1] - arr[m2]) / (12 * k * k)
    return out


def eval_F(v, f=None, mode: str = "analytic", points=None, s=None):
    """Evaluate the fully nonlinear hodograph functional F at v.

    Two input forms:

    * closed form (``mode="analytic"``): v is an object with ``jet(a, b)``
      (closed-form fields on the quarter plane) or a callable mapping two
      coordinate jets to the field jet; ``points`` is an (N, 2) array of
      quarter points off the axes, and s is taken from the field or passed
      explicitly.  Derivatives are exact through jet arithmetic.  Returns the
      residual at each point; a genuinely negative inverse-height radicand
      raises NegativeRadicand.

    * quarter-grid field (``mode="finite_difference"``): v is a
      LegendreField; derivatives come from fourth-order stencils, so the
      residual is defined on the two-cell interior collar off the axes and is
      NaN elsewhere (including points where the radicand is unusable).
      Returns an array shaped like the field.

    The right-hand side f, when given, is called as f(x_n, x_{n+1}) for a
    1-D thin space and f(y'', x_n, x_{n+1}) otherwise.
    """
    if isinstance(v, LegendreField):
        if mode == "analytic":
            raise ValueError("a resampled quarter-grid field has no analytic "
                             "derivatives; use mode='finite_difference'")
        sv = v.s.s
        axes = v.axes
        # NaN out uncovered nodes first: any stencil touching one is then
        # poisoned instead of silently reading a zero placeholder
        arr = np.where(v.mask, v.v, np.nan)
        kn = axes[-2][1] - axes[-2][0]
        kp = axes[-1][1] - axes[-1][0]
        if arr.shape[-2] < 5 or arr.shape[-1] < 5:
            raise GridTooCoarse("need at least 5 nodes per quarter-grid axis "
                                "for the fourth-order stencils")
        nax = arr.ndim - 2
        v_n = _fd_axis(arr, nax, kn, 1)
        v_nn = _fd_axis(arr, nax, kn, 2)
        v_p = _fd_axis(arr, nax + 1, kp, 1)
        v_pp = _fd_axis(arr, nax + 1, kp, 2)
        v_np = _fd_axis(v_n, nax + 1, kp, 1)
        mesh = np.meshgrid(*axes, indexing="ij")
        yn = mesh[-2]
        yp = mesh[-1]
        tan_blocks = []
        ytan = None
        if nax == 1:
            kt = axes[0][1] - axes[0][0]
            v_ii = _fd_axis(arr, 0, kt, 2)
            v_in = _fd_axis(v_n, 0, kt, 1)
            v_ip = _fd_axis(v_p, 0, kt, 1)
            tan_blocks.append((v_ii, v_in, v_ip))
            ytan = mesh[0]
        fields = [v_n, v_p, v_nn, v_np, v_pp] + [
            g for blk in tan_blocks for g in blk]
        valid = v.mask & (yn > 0) & (yp > 0)
        for g in fields:
            valid &= np.isfinite(g)

        def flat(g):
            return np.where(valid, g, 0.0).ravel()

        yn_safe = np.where(valid, yn, 1.0).ravel()
        yp_safe = np.where(valid, yp, 1.0).ravel()
        res, usable = _F_combine(
            sv, yn_safe, yp_safe, flat(v_n), flat(v_p),
            flat(v_nn), flat(v_np), flat(v_pp), f=f,
            ytan=None if ytan is None else ytan.ravel(),
            tan_blocks=[tuple(flat(g) for g in blk) for blk in tan_blocks],
            guard="mask")
        out = res.reshape(arr.shape)
        out[~valid.reshape(arr.shape)] = np.nan
        return out

    # closed-form / jet path
    if points is None:
        raise ValueError("analytic evaluation needs explicit points")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if np.any(pts <= 0.0):
        raise OutOfDomain("F evaluation points must lie off both axes")
    if s is None:
        if not hasattr(v, "s"):
            raise ValueError("pass s explicitly for plain jet callables")
        s = v.s
    sv = s.s if isinstance(s, FracOrder) else float(s)
    a_j, b_j = jets.variables(pts)
    vj = v.jet(a_j, b_j) if hasattr(v, "jet") else v(a_j, b_j)
    res, usable = _F_combine(
        sv, pts[:, 0], pts[:, 1], vj.d(0), vj.d(1),
        vj.dd(0, 0), vj.dd(0, 1), vj.dd(1, 1), f=f, guard="raise")
    # rad == 0 exactly (clamped) leaves NaN holes only when v is degenerate
    return res


# -----------------------------------------------------------------------------
# linearization probe
# -----------------------------------------------------------------------------

def polynomial_bump(center: Tuple[float, float], radius: float,
                    amplitude: float = 1.0) -> Callable:
    """C^3 compact bump  amplitude * ((R^2 - |y - c|^2)_+)^4 / R^8  as a jet
    callable — smooth enough for second-derivative probes, exactly supported
    in the disc of the given radius."""
    cx, cy = float(center[0]), float(center[1])
    R2 = float(radius) ** 2

    def jet_fn(a: jets.Jet, b: jets.Jet) -> jets.Jet:
        da = a - cx
        db = b - cy
        core = da * da + db * db
        gap = (-core) + R2
        quart = gap * gap
        quart = quart * quart
        zero = jets.constant(0.0, a.npoints, a.dim)
        return jets.Jet.where(gap.val > 0.0, quart, zero) * (amplitude / R2 ** 4)

    return jet_fn


@dataclass(frozen=True)
class LinearizationReport:
    """Directional-difference fit of F against the Grushin image of a probe."""

    c: float
    t_list: Tuple[float, ...]
    defects: Tuple[float, ...]


def linearization_check(v0, probe, t_list: Sequence[float], points,
                        s=None) -> LinearizationReport:
    """Fit D(t) = (F(v0 + t probe) - F(v0)) / t against the Grushin operator.

    v0 and probe are jet callables / closed-form fields on the quarter plane;
    the probe's Grushin image is evaluated analytically.  The scalar c is the
    least-squares factor at the smallest t, and defect(t) =
    ||D(t) - c D_G probe|| / ||D_G probe|| should shrink linearly in t when
    v0 is a genuine interior point of the hodograph regime.  A probe whose
    Grushin image vanishes on the sample is flagged (DegenerateFit): the fit
    would be 0/0, matching the degenerate-input policy everywhere else.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if s is None:
        if not hasattr(v0, "s"):
            raise ValueError("pass s explicitly for plain jet callables")
        s = v0.s
    sv = s.s if isinstance(s, FracOrder) else float(s)
    t_list = tuple(sorted(float(t) for t in t_list))

    a_j, b_j = jets.variables(pts)
    v0_jet = v0.jet(a_j, b_j) if hasattr(v0, "jet") else v0(a_j, b_j)
    h_jet = probe.jet(a_j, b_j) if hasattr(probe, "jet") else probe(a_j, b_j)

    def F_of(jet):
        res, _ = _F_combine(sv, pts[:, 0], pts[:, 1], jet.d(0), jet.d(1),
                            jet.dd(0, 0), jet.dd(0, 1), jet.dd(1, 1),
                            guard="raise")
        return res

    gh = delta_Gs(lambda coords: (probe.jet(*coords) if hasattr(probe, "jet")
                                  else probe(*coords)), pts, sv)
    gnorm = float(np.linalg.norm(gh))
    if gnorm < 1e-14 * math.sqrt(len(pts)):
        raise DegenerateFit("probe has vanishing Grushin image on the sample; "
                            "the linearization fit is 0/0")

    F0 = F_of(v0_jet)
    diffs = []
    for t in t_list:
        Ft = F_of(v0_jet + h_jet * t)
        diffs.append((Ft - F0) / t)
    c = float(np.dot(diffs[0], gh) / np.dot(gh, gh))
    defects = tuple(float(np.linalg.norm(d - c * gh) / gnorm) for d in diffs)
    return LinearizationReport(c=c, t_list=t_list, defects=defects)


# -----------------------------------------------------------------------------
# inverse asymptotics at the edge
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class InverseAsymptotics:
    """Free-boundary expansion read off from the inverse map near the edge:
    x_n ~ g + a0 y_n^2 - a1 y_{n+1}^2 and x_{n+1}^{2s} ~ 2 a1 (y_n y_{n+1})^{2s}."""

    g: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    y_tan_grid: Optional[np.ndarray]
    radii: Tuple[float, ...]
    residuals: Tuple[float, ...]
    decay_exponent: float


def inverse_asymptotics(field: LegendreField, collar: float = 0.35,
                        levels: int = 4) -> InverseAsymptotics:
    """Joint least-squares fit of the edge expansion of the inverse map.

    Uses masked quarter-grid nodes with |(y_n, y_{n+1})| <= collar, fitting
    (g, a0, a1) simultaneously to the x_n display and the x_{n+1}^{2s}
    display.  Per-level residual RMS over dyadic sub-collars gives the decay
    exponent of the remainder (inf when saturated at the floor, e.g. for the
    exact model).  DegenerateFit when a collar holds fewer than 6 usable
    nodes or the design matrix is rank-deficient.
    """
    sv = field.s.s
    axes = field.axes
    ntan = field.ntan
    mesh = np.meshgrid(*axes, indexing="ij")
    yn = mesh[-2]
    yp = mesh[-1]
    rho = np.hypot(yn, yp)
    base = field.mask & (yn > 0) & (yp > 0) & (rho <= collar)

    def fit_on(sel):
        if int(np.sum(sel)) < 6:
            raise DegenerateFit(
                f"only {int(np.sum(sel))} usable nodes in the edge collar")
        ynu = yn[sel]
        ypu = yp[sel]
        # rows: x_n = g + a0 yn^2 - a1 yp^2 ; x_{n+1}^{2s} = 2 a1 (yn yp)^{2s}
        d1 = np.stack([np.ones_like(ynu), ynu ** 2, -(ypu ** 2)], axis=1)
        d2 = np.stack([np.zeros_like(ynu), np.zeros_like(ynu),
                       2.0 * (ynu * ypu) ** (2.0 * sv)], axis=1)
        design = np.concatenate([d1, d2])
        target = np.concatenate([field.xn[sel], field.xp[sel] ** (2.0 * sv)])
        coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
        if rank < 3:
            raise DegenerateFit("edge-collar design matrix is rank deficient")
        res = target - design @ coef
        scale = float(np.max(np.abs(target))) + 1e-300
        return coef, float(np.sqrt(np.mean(res ** 2))), scale

    radii = tuple(collar / 2 ** j for j in range(levels))
    if ntan == 0:
        coef, _, scale0 = fit_on(base)
        g = np.asarray(coef[0])
        a0 = np.asarray(coef[1])
        a1 = np.asarray(coef[2])
        tgrid = None
        rms = []
        for r in radii:
            sel = base & (rho <= r)
            try:
                _, m, _ = fit_on(sel)
            except DegenerateFit:
                break
            rms.append(m)
    else:
        gs, a0s, a1s = [], [], []
        for it in range(len(axes[0])):
            coef, _, scale0 = fit_on(base[it])
            gs.append(coef[0])
            a0s.append(coef[1])
            a1s.append(coef[2])
        g, a0, a1 = np.asarray(gs), np.asarray(a0s), np.asarray(a1s)
        tgrid = axes[0].copy()
        rms = []
        for r in radii:
            sel = base & (rho <= r)
            try:
                _, m, _ = fit_on(sel)
            except DegenerateFit:
                break
            rms.append(m)
    live = [(math.log(r), math.log(m)) for r, m in zip(radii, rms)
            if m > 1e-12 * scale0]
    if len(live) >= 2:
        xs, ys = zip(*live)
        slope = float(np.polyfit(xs, ys, 1)[0])
    else:
        slope = float("inf")
    return InverseAsymptotics(g=g, a0=a0, a1=a1, y_tan_grid=tgrid,
                              radii=radii[: len(rms)], residuals=tuple(rms),
                              decay_exponent=slope)


# -----------------------------------------------------------------------------
# Jacobian diagnostic
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class TransformDiag:
    """Scale-normalized Jacobian range of the hodograph map over annuli,
    plus a pairwise-separation injectivity probe."""

    jac_min: float
    jac_max: float
    injectivity_flag: bool
    lambdas: Tuple[float, ...]
    min_separation: float
    violation_fraction: float


def _interp2(field: np.ndarray, ax0: np.ndarray, ax1: np.ndarray,
             pts: np.ndarray) -> np.ndarray:
    k0 = ax0[1] - ax0[0]
    k1 = ax1[1] - ax1[0]
    f0 = np.clip((pts[:, 0] - ax0[0]) / k0, 0, len(ax0) - 2 + 1 - 1e-12)
    f1 = np.clip((pts[:, 1] - ax1[0]) / k1, 0, len(ax1) - 2 + 1 - 1e-12)
    i0 = f0.astype(int)
    j0 = f1.astype(int)
    t0 = f0 - i0
    t1 = f1 - j0
    return ((1 - t0) * (1 - t1) * field[i0, j0]
            + t0 * (1 - t1) * field[i0 + 1, j0]
            + (1 - t0) * t1 * field[i0, j0 + 1]
            + t0 * t1 * field[i0 + 1, j0 + 1])


def jacobian_diag(sol: DiscreteSolution, x0: float, lam_list: Sequence[float],
                  nsamples: int = 120, seed: int = 20260813,
                  cone: float = 0.3) -> TransformDiag:
    """Jacobian range and injectivity probe of the hodograph map around x0.

    For each scale lam the samples sit on the reference annulus
    1/2 <= |xi| <= 1 within the non-tangential cone xi_z >= cone |xi| (which
    keeps them away from the thin plane and hence the free boundary), mapped
    to physical points x0 + lam xi.  The transform pair (y_n, y_{n+1}) is
    interpolated from the node fields and differentiated by centered
    differences; the reported determinants are scale-normalized (lam * det),
    which is invariant for the homogeneous model.  Injectivity is probed by
    pairwise separation of the mapped samples — the sample set contains
    mirror pairs in xi_n, so an even (two-to-one) profile collapses it.

    Monotonicity: nodes where d_n w is genuinely negative are evaluated
    through |d_n w|^{1/(2s)} so the probe stays defined on symmetrized
    inputs; the violation fraction is reported, and only a wholesale
    violation (> 90% of stencil nodes) raises MonotonicityViolated.
    """
    grid = sol.grid
    if grid.n != 1:
        raise NotImplementedError("the Jacobian diagnostic is 1-D thin only")
    s = grid.s.s
    h = grid.h
    y, x, _, meta = _transform_fields(sol)
    shape = meta["shape"]
    yn_nodes = y[:, 0].reshape(shape)
    yp_nodes = y[:, 1].reshape(shape)
    ax_x = np.unique(x[:, 0])
    ax_z = np.unique(x[:, 1])
    # magnitude fallback for symmetrized inputs: recompute y_n from |d_n w|
    w = sol.values
    dnw = (w[2:, : len(ax_z)] - w[:-2, : len(ax_z)]) / (2.0 * h)
    nviol = int(np.sum(dnw < -meta["tol_n"]))
    frac = nviol / dnw.size
    if frac > 0.9:
        raise MonotonicityViolated(
            f"{frac:.0%} of stencil nodes have d_n w < 0; the map is "
            f"backwards, not merely symmetrized")
    yn_nodes = np.abs(dnw) ** (1.0 / (2.0 * s))

    rng = np.random.default_rng(seed)
    half = nsamples // 2
    theta_min = math.asin(min(1.0, cone))
    th = rng.uniform(theta_min, math.pi - theta_min, half)
    rr = rng.uniform(0.5, 1.0, half)
    xi = np.stack([rr * np.cos(th), rr * np.sin(th)], axis=1)
    xi = np.concatenate([xi, xi * np.array([-1.0, 1.0])])  # mirror pairs

    dets = []
    min_sep = math.inf
    for lam in lam_list:
        lam = float(lam)
        phys = np.array([x0, 0.0]) + lam * xi
        delta = max(2.0 * h, 0.05 * lam)
        lo_ok = (phys[:, 0] - delta >= ax_x[0]) & (phys[:, 1] - delta >= ax_z[0])
        hi_ok = (phys[:, 0] + delta <= ax_x[-1]) & (phys[:, 1] + delta <= ax_z[-1])
        use = lo_ok & hi_ok
        if not np.any(use):
            raise OutOfDomain(
                f"annulus at scale {lam:g} leaves the solved domain")
        p = phys[use]

        def T(q):
            return np.stack([_interp2(yn_nodes, ax_x, ax_z, q),
                             _interp2(yp_nodes, ax_x, ax_z, q)], axis=1)

        ex = np.array([delta, 0.0])
        ez = np.array([0.0, delta])
        d_dx = (T(p + ex) - T(p - ex)) / (2 * delta)
        d_dz = (T(p + ez) - T(p - ez)) / (2 * delta)
        det = d_dx[:, 0] * d_dz[:, 1] - d_dz[:, 0] * d_dx[:, 1]
        dets.append(lam * np.abs(det))

        img = T(p)
        scale = float(np.median(np.linalg.norm(img, axis=1))) + 1e-300
        dist = np.linalg.norm(img[:, None, :] - img[None, :, :], axis=2)
        ref_dist = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=2)
        distinct = ref_dist > 0.05 * lam
        if np.any(distinct):
            min_sep = min(min_sep, float(np.min(dist[distinct]) / scale))

    alldet = np.concatenate(dets)
    return TransformDiag(
        jac_min=float(np.min(alldet)),
        jac_max=float(np.max(alldet)),
        injectivity_flag=bool(min_sep > 1e-3),
        lambdas=tuple(float(l) for l in lam_list),
        min_separation=float(min_sep),
        violation_fraction=float(frac),
    )


# -----------------------------------------------------------------------------
# tangential diffeomorphism flow
# -----------------------------------------------------------------------------

def _cutoff_eta(rho: np.ndarray) -> np.ndarray:
    """Radial cutoff: 1 for rho <= 1/4, 0 for rho >= 1/2, C^3 septic blend."""
    t = np.clip((rho - 0.25) / 0.25, 0.0, 1.0)
    smooth = t ** 4 * (35.0 - 84.0 * t + 70.0 * t ** 2 - 20.0 * t ** 3)
    return 1.0 - smooth


def diffeo_flow(a, y, steps: int = 64) -> np.ndarray:
    """Flow the tangential coordinates along the compactly supported field.

    Integrates phi' = a ((3/4)^2 - |phi|^2)_+^3 * eta(y_n, y_{n+1}) from
    phi(0) = y'' to time 1 by classical RK4 and returns (phi(1), y_n,
    y_{n+1}).  Only y'' moves, so both coordinate planes {y_n = 0} and
    {y_{n+1} = 0} are preserved exactly; points with |(y_n, y_{n+1})| >= 1/2
    or |y''| >= 3/4 are returned bitwise unchanged (the field vanishes along
    their whole trajectory).  Requires |a| < 1.
    """
    y = np.asarray(y, dtype=float)
    out = y.copy()
    if y.shape[-1] < 3:
        return out  # no tangential coordinates to move
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.size != y.shape[-1] - 2:
        raise ValueError(
            f"drift must have {y.shape[-1] - 2} components, got {a.size}")
    if np.linalg.norm(a) >= 1.0:
        raise OutOfDomain("the flow is only defined for |a| < 1")
    flat = out.reshape(-1, y.shape[-1])
    rho = np.hypot(flat[:, -2], flat[:, -1])
    eta = _cutoff_eta(rho)
    phi = flat[:, :-2].copy()
    lim = 0.75 ** 2

    def rhs(p):
        gap = lim - np.sum(p * p, axis=1)
        cube = np.where(gap > 0.0, gap, 0.0) ** 3
        return (cube * eta)[:, None] * a[None, :]

    dt = 1.0 / int(steps)
    for _ in range(int(steps)):
        k1 = rhs(phi)
        k2 = rhs(phi + 0.5 * dt * k1)
        k3 = rhs(phi + 0.5 * dt * k2)
        k4 = rhs(phi + dt * k3)
        phi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    flat[:, :-2] = phi
    return flat.reshape(y.shape)
