"""Vectorized second-order jets (value, gradient, Hessian).

A ``Jet`` carries the value, gradient, and Hessian of a scalar expression at a
batch of evaluation points, and propagates all three exactly through
arithmetic via the chain rule.  Building an expression out of coordinate jets
therefore yields machine-accurate analytic derivatives — no finite
differencing anywhere.  Shapes: ``val (N,)``, ``grad (N, d)``,
``hess (N, d, d)`` for ``N`` points in ``d`` variables.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Jet", "variables", "constant", "compose"]


def _outer_sym(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Symmetrized outer product a⊗b + b⊗a, batched over the first axis."""
    return a[:, :, None] * b[:, None, :] + b[:, :, None] * a[:, None, :]


class Jet:
    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess):
        self.val = np.asarray(val, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    # -- construction helpers -------------------------------------------------

    @property
    def npoints(self) -> int:
        return self.val.shape[0]

    @property
    def dim(self) -> int:
        return self.grad.shape[1]

    def _lift(self, other):
        """Coerce a scalar or per-point array into a constant Jet."""
        if isinstance(other, Jet):
            return other
        v = np.broadcast_to(np.asarray(other, dtype=float), self.val.shape)
        return Jet(v, np.zeros_like(self.grad), np.zeros_like(self.hess))

    # -- arithmetic ------------------------------------------------------------

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __add__(self, other):
        o = self._lift(other)
        return Jet(self.val + o.val, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return Jet(self.val - o.val, self.grad - o.grad, self.hess - o.hess)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        val = self.val * o.val
        grad = self.grad * o.val[:, None] + o.grad * self.val[:, None]
        hess = (
            self.hess * o.val[:, None, None]
            + o.hess * self.val[:, None, None]
            + _outer_sym(self.grad, o.grad)
        )
        return Jet(val, grad, hess)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        val = self.val / o.val
        grad = (self.grad - val[:, None] * o.grad) / o.val[:, None]
        hess = (
            self.hess
            - val[:, None, None] * o.hess
            - _outer_sym(grad, o.grad)
        ) / o.val[:, None, None]
        return Jet(val, grad, hess)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, p: float):
        # d(f^p) = p f^{p-1} df;  d²(f^p) = p f^{p-1} d²f + p(p-1) f^{p-2} df⊗df
        v = self.val
        vp = np.power(v, p)
        vp1 = np.power(v, p - 1.0)
        vp2 = np.power(v, p - 2.0)
        grad = p * vp1[:, None] * self.grad
        hess = (
            p * vp1[:, None, None] * self.hess
            + p * (p - 1.0) * vp2[:, None, None]
            * self.grad[:, :, None] * self.grad[:, None, :]
        )
        return Jet(vp, grad, hess)

    def sqrt(self):
        return self ** 0.5

    def sin(self):
        c, s = np.cos(self.val), np.sin(self.val)
        grad = c[:, None] * self.grad
        hess = (
            c[:, None, None] * self.hess
            - s[:, None, None] * self.grad[:, :, None] * self.grad[:, None, :]
        )
        return Jet(s, grad, hess)

    def cos(self):
        c, s = np.cos(self.val), np.sin(self.val)
        grad = -s[:, None] * self.grad
        hess = (
            -s[:, None, None] * self.hess
            - c[:, None, None] * self.grad[:, :, None] * self.grad[:, None, :]
        )
        return Jet(c, grad, hess)

    # -- queries ---------------------------------------------------------------

    def d(self, i: int) -> np.ndarray:
        return self.grad[:, i]

    def dd(self, i: int, j: int) -> np.ndarray:
        return self.hess[:, i, j]

    def laplacian(self, axes=None) -> np.ndarray:
        if axes is None:
            axes = range(self.dim)
        out = np.zeros_like(self.val)
        for i in axes:
            out = out + self.hess[:, i, i]
        return out

    @staticmethod
    def where(cond, a: "Jet", b: "Jet") -> "Jet":
        """Pointwise select between two jets (both fully evaluated)."""
        c = np.asarray(cond, dtype=bool)
        return Jet(
            np.where(c, a.val, b.val),
            np.where(c[:, None], a.grad, b.grad),
            np.where(c[:, None, None], a.hess, b.hess),
        )


def variables(coords: np.ndarray) -> list[Jet]:
    """Coordinate jets for a batch of points; coords has shape (N, d)."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    npts, d = coords.shape
    out = []
    for i in range(d):
        g = np.zeros((npts, d))
        g[:, i] = 1.0
        out.append(Jet(coords[:, i], g, np.zeros((npts, d, d))))
    return out


def constant(value, npoints: int, dim: int) -> Jet:
    val = np.broadcast_to(np.asarray(value, dtype=float), (npoints,)).copy()
    return Jet(val, np.zeros((npoints, dim)), np.zeros((npoints, dim, dim)))


def compose(outer: Jet, inner: list[Jet]) -> Jet:
    """Chain rule: jet of u(ψ(y)) from the jet of u at ψ(y) and jets of ψ.

    ``outer`` holds u's value/gradient/Hessian with respect to its own
    arguments evaluated at the inner values; ``inner[k]`` is the jet of the
    k-th argument as a function of the final variables.
    """
    npts, d = inner[0].grad.shape
    val = outer.val
    grad = np.zeros((npts, d))
    hess = np.zeros((npts, d, d))
    for k, ik in enumerate(inner):
        grad += outer.grad[:, k, None] * ik.grad
        hess += outer.grad[:, k, None, None] * ik.hess
        for l, il in enumerate(inner):
            hess += (
                outer.hess[:, k, l, None, None]
                * ik.grad[:, :, None] * il.grad[:, None, :]
            )
    return Jet(val, grad, hess)
