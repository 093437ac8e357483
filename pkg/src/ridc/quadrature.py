"""Integration matrices of Lagrange quadrature weights on uniform nodes.

The correction that consumes level-p data approximates the integral of f
over one step [t_n, t_{n+1}] with p+2 equispaced samples of the level-p
solution.  Two sample windows occur:

* steady regime (n >= p): the window trails the step, nodes
  t_{n-p}, ..., t_{n+1}; weight nu multiplies f at t_{n+1-nu}, so nu = 0
  is the newest node.
* startup regime (n < p): the window is the leading nodes t_0, ..., t_{p+1}
  of the interval; row n of the startup matrix integrates over
  [t_n, t_{n+1}] and weight nu multiplies f at t_nu.

Uniform spacing makes the weights translation invariant, so they are
computed once on the integer nodes {0, ..., p+1} and scaled by dt.  The
(p+2) x (p+2) Vandermonde moment system is solved in exact rational
arithmetic: in float64 the system loses ~8 digits by p = 8, which would
break the required polynomial exactness, while the rational solve is exact
and rounds once at the end.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

# Highest supported method order P; correction levels use p <= MAX_ORDER - 2.
MAX_ORDER = 12


@dataclass(frozen=True)
class IntegrationMatrix:
    """Quadrature weights serving the correction that reads level-p data.

    steady_weights has length p+2; startup_weights has shape (p, p+2) with
    row n holding the weights for the subinterval [t_n, t_{n+1}].  Both are
    already scaled by dt.  Arrays are read-only: matrices are shared freely
    across worker threads.
    """

    level: int
    dt: float
    steady_weights: np.ndarray
    startup_weights: np.ndarray

    @property
    def window_size(self) -> int:
        return self.level + 2


def _solve_moment_system(p: int, lo: int) -> tuple[Fraction, ...]:
    """Weights w on nodes 0..p+1 with sum_i i^d w_i = integral of x^d over
    [lo, lo+1] for d = 0..p+1, solved by rational Gaussian elimination."""
    m = p + 2
    rows = [
        [Fraction(i) ** d for i in range(m)]
        + [Fraction((lo + 1) ** (d + 1) - lo ** (d + 1), d + 1)]
        for d in range(m)
    ]
    for k in range(m):
        piv = next(r for r in range(k, m) if rows[r][k] != 0)
        rows[k], rows[piv] = rows[piv], rows[k]
        for r in range(m):
            if r != k and rows[r][k] != 0:
                factor = rows[r][k] / rows[k][k]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[k])]
    return tuple(rows[k][m] / rows[k][k] for k in range(m))


@lru_cache(maxsize=None)
def _normalized_weights(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-dt steady weights (descending-nu order) and startup rows for level p."""
    steady_ascending = _solve_moment_system(p, p)
    steady = np.array([float(w) for w in reversed(steady_ascending)])
    startup = np.array(
        [[float(w) for w in _solve_moment_system(p, n)] for n in range(p)]
    ).reshape(p, p + 2)
    steady.setflags(write=False)
    startup.setflags(write=False)
    return steady, startup


@lru_cache(maxsize=None)
def build_integration_matrix(level: int, dt: float) -> IntegrationMatrix:
    """Construct (or fetch from cache) the weight matrix for one level.

    Deterministic: identical (level, dt) return the identical object.
    """
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    steady, startup = _normalized_weights(level)
    steady = steady * dt
    startup = startup * dt
    steady.setflags(write=False)
    startup.setflags(write=False)
    return IntegrationMatrix(level, dt, steady, startup)


def apply_quadrature(
    matrix: IntegrationMatrix, f_window, startup_row: int | None = None
):
    """Weighted combination sum_nu w[nu] * f_window[nu] over one window.

    f_window must be ordered to match the regime: newest node first for the
    steady regime (startup_row is None), ascending nodes t_0..t_{p+1} for
    startup row n.  Accumulation runs in ascending nu so results are
    reproducible bit for bit.
    """
    if len(f_window) != matrix.window_size:
        raise ValueError(
            f"window has {len(f_window)} entries, expected {matrix.window_size}"
        )
    if startup_row is None:
        weights = matrix.steady_weights
    else:
        if not 0 <= startup_row < matrix.level:
            raise ValueError(
                f"startup row {startup_row} out of range for level {matrix.level}"
            )
        weights = matrix.startup_weights[startup_row]
    out = weights[0] * np.asarray(f_window[0], dtype=np.float64)
    for nu in range(1, len(f_window)):
        out += weights[nu] * np.asarray(f_window[nu], dtype=np.float64)
    return out
