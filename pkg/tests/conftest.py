"""Shared fixtures.

The variational-inequality solves are the slow part of the suite, and
several files probe the same model problem (zero obstacle, exact
half-space profile as boundary data).  Solve each (s, h) pair once per
session and hand out the cached solution.
"""

import numpy as np
import pytest

from fracsig.closed_forms import FracOrder, eval_w1s
from fracsig.solver import ProblemSpec, WeightedGrid, solve_vi

_CACHE = {}


def solve_model_problem(s, h, n=1):
    """n-d Signorini model run: obstacle 0, Dirichlet data w_{1,s}."""
    key = (round(float(s), 12), round(float(h), 12), n)
    if key not in _CACHE:
        sv = FracOrder(float(s))
        if n == 1:
            extents = ((-1.0, 1.0), (0.0, 1.0))

            def data(xn, z):
                return eval_w1s(sv, xn, z)
        else:
            extents = ((-1.0, 1.0), (-1.0, 1.0), (0.0, 1.0))

            def data(x1, xn, z):
                return eval_w1s(sv, xn, z)

        spec = ProblemSpec(
            grid=WeightedGrid(n=n, extents=extents, h=float(h), s=sv),
            f=None,
            obstacle=lambda *a: np.zeros_like(a[0]),
            dirichlet=data,
        )
        _CACHE[key] = solve_vi(spec, tol=1e-11, omega="auto")
    return _CACHE[key]


@pytest.fixture(scope="session")
def model_solution():
    """Callable (s, h, n=1) -> cached DiscreteSolution."""
    return solve_model_problem
