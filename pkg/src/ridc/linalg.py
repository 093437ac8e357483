"""Minimal dense, banded, and Newton solvers for the bundled implicit steppers.

The wrapper framework itself never solves linear systems; users bring
whatever solvers suit their problems.  These kernels exist so the bundled
implicit examples are self-contained, with no linear-algebra dependency
beyond numpy arrays.

Band storage follows the conventional diagonal-row layout: for a matrix
with `lower` sub- and `upper` superdiagonals, bands[upper + i - j, j]
holds A[i, j] for max(0, j - upper) <= i <= min(n - 1, j + lower); entries
outside the band are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class SingularMatrixError(ValueError):
    """Coefficient matrix is singular to working precision."""


class NewtonConvergenceError(RuntimeError):
    """Newton iteration failed to reach tolerance within max_iterations."""

    def __init__(self, iterations: int, residual_norm: float):
        super().__init__(
            f"Newton did not converge in {iterations} iterations "
            f"(last residual inf-norm {residual_norm:.3e})"
        )
        self.iterations = iterations
        self.residual_norm = residual_norm


@dataclass(frozen=True)
class BandedSystem:
    """Banded linear system in diagonal-row storage (see module docstring).

    rhs may be omitted when the object only carries the matrix, e.g. as a
    Jacobian handed to newton_solve.
    """

    n: int
    lower: int
    upper: int
    bands: np.ndarray
    rhs: np.ndarray | None = None

    def __post_init__(self):
        if self.lower < 0 or self.upper < 0:
            raise ValueError("bandwidths must be non-negative")
        if max(self.lower, self.upper) >= self.n:
            raise ValueError(
                f"bandwidth ({self.lower},{self.upper}) must be below n={self.n}"
            )
        bands = np.asarray(self.bands, dtype=np.float64)
        if bands.shape != (self.lower + self.upper + 1, self.n):
            raise ValueError(
                f"bands has shape {bands.shape}, expected "
                f"({self.lower + self.upper + 1}, {self.n})"
            )
        object.__setattr__(self, "bands", bands)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for d in range(-self.lower, self.upper + 1):
            row = self.upper - d
            js = np.arange(max(0, d), min(self.n, self.n + d))
            out[js - d, js] = self.bands[row, js]
        return out


class Damping(Enum):
    NONE = "none"
    HALVING = "halving"


@dataclass(frozen=True)
class NewtonConfig:
    abs_tolerance: float = 1e-12
    max_iterations: int = 25
    damping: Damping = Damping.NONE

    def __post_init__(self):
        if not self.abs_tolerance > 0:
            raise ValueError("abs_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def solve_dense(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve A x = b by Gaussian elimination with partial pivoting."""
    a = np.array(matrix, dtype=np.float64)
    b = np.array(rhs, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if b.shape != (n,):
        raise ValueError(f"rhs has shape {b.shape}, expected ({n},)")
    scale = np.max(np.abs(a)) if n else 0.0
    tiny = n * np.finfo(np.float64).eps * max(scale, 1.0)
    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[piv, k]) <= tiny:
            raise SingularMatrixError(
                f"pivot {a[piv, k]:.3e} in column {k} below threshold {tiny:.3e}"
            )
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            b[[k, piv]] = b[[piv, k]]
        factors = a[k + 1:, k] / a[k, k]
        a[k + 1:, k + 1:] -= factors[:, None] * a[k, k + 1:]
        b[k + 1:] -= factors * b[k]
    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def solve_banded(system: BandedSystem) -> np.ndarray:
    """Solve a banded system by banded LU with partial row pivoting.

    Pivoting widens the active upper bandwidth to lower + upper, the usual
    fill for row-pivoted band elimination.  Matches solve_dense on the
    densified matrix.
    """
    if system.rhs is None:
        raise ValueError("system has no right-hand side")
    n, lo, up = system.n, system.lower, system.upper
    b = np.array(system.rhs, dtype=np.float64)
    if b.shape != (n,):
        raise ValueError(f"rhs has shape {b.shape}, expected ({n},)")
    # Row-major working band: work[i, lo + d] = A[i, i + d] for diagonals
    # d = -lo..up, plus lo trailing fill columns for pivot swaps.  Row i's
    # stored window covers matrix columns i - lo .. i + up + lo, so the
    # elimination updates below are contiguous slices.
    span = lo + up + lo + 1
    work = np.zeros((n, span))
    for d in range(-lo, up + 1):
        js = np.arange(max(0, d), min(n, n + d))
        work[js - d, lo + d] = system.bands[up - d, js]
    scale = np.max(np.abs(system.bands))
    tiny = n * np.finfo(np.float64).eps * max(scale, 1.0)

    for k in range(n):
        nrows = min(lo, n - 1 - k)
        # candidate pivots A[k+r, k] sit at work[k+r, lo - r]
        p = 0
        best = abs(work[k, lo])
        for r in range(1, nrows + 1):
            cand = abs(work[k + r, lo - r])
            if cand > best:
                best = cand
                p = r
        if best <= tiny:
            raise SingularMatrixError(
                f"pivot {best:.3e} in column {k} below threshold {tiny:.3e}"
            )
        ncols = min(lo + up, n - 1 - k)  # active columns k..k+ncols
        if p:
            top_slice = work[k, lo: lo + ncols + 1]
            other = work[k + p, lo - p: lo - p + ncols + 1]
            tmp = top_slice.copy()
            top_slice[:] = other
            other[:] = tmp
            b[k], b[k + p] = b[k + p], b[k]
        pivot_row = work[k, lo + 1: lo + ncols + 1]
        inv_pivot = 1.0 / work[k, lo]
        for r in range(1, nrows + 1):
            i = k + r
            factor = work[i, lo - r] * inv_pivot
            if factor != 0.0:
                work[i, lo - r + 1: lo - r + ncols + 1] -= factor * pivot_row
                b[i] -= factor * b[k]
                work[i, lo - r] = 0.0
    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        ncols = min(lo + up, n - 1 - k)
        acc = b[k]
        if ncols:
            acc -= work[k, lo + 1: lo + ncols + 1] @ x[k + 1: k + ncols + 1]
        x[k] = acc / work[k, lo]
    return x


def newton_solve(residual, jacobian, x0, config: NewtonConfig = NewtonConfig()):
    """Solve residual(x) = 0 by (optionally damped) Newton iteration.

    jacobian(x) may return a dense matrix or a BandedSystem carrying the
    band-stored Jacobian.  Returns x with inf-norm residual below
    abs_tolerance; raises NewtonConvergenceError otherwise.  Exact on
    linear residuals in a single iteration.
    """
    x = np.array(x0, dtype=np.float64)
    r = np.asarray(residual(x), dtype=np.float64)
    if r.shape != x.shape:
        raise ValueError(f"residual shape {r.shape} does not match x {x.shape}")
    norm = float(np.max(np.abs(r))) if r.size else 0.0
    for _ in range(config.max_iterations):
        if norm <= config.abs_tolerance:
            return x
        jac = jacobian(x)
        if isinstance(jac, BandedSystem):
            step = solve_banded(
                BandedSystem(jac.n, jac.lower, jac.upper, jac.bands, rhs=-r)
            )
        else:
            step = solve_dense(jac, -r)
        if config.damping is Damping.HALVING:
            alpha = 1.0
            for _ in range(8):
                x_try = x + alpha * step
                r_try = np.asarray(residual(x_try), dtype=np.float64)
                norm_try = float(np.max(np.abs(r_try)))
                if norm_try < norm:
                    break
                alpha *= 0.5
            else:
                # no improving fraction found; take the full step and let the
                # residual test decide
                x_try = x + step
                r_try = np.asarray(residual(x_try), dtype=np.float64)
                norm_try = float(np.max(np.abs(r_try)))
            x, r, norm = x_try, r_try, norm_try
        else:
            x = x + step
            r = np.asarray(residual(x), dtype=np.float64)
            norm = float(np.max(np.abs(r)))
    if norm <= config.abs_tolerance:
        return x
    raise NewtonConvergenceError(config.max_iterations, norm)


def finite_difference_jacobian(residual, x, step_scale: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian used to validate hand-coded Jacobians."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    out = np.empty((n, n))
    for j in range(n):
        h = step_scale * (1.0 + abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        out[:, j] = (np.asarray(residual(xp)) - np.asarray(residual(xm))) / (2 * h)
    return out
