"""Dense matrix/tensor foundation: stochastic normalization and least squares.

Matrices and third-order tensors are plain ``numpy.ndarray`` values, row-major,
immutable by convention (no function here mutates its input). Problem sizes
are small (a handful of actors, sites, and colours), so everything is dense.
"""

from __future__ import annotations

import numpy as np

from .errors import NegativeEntry, NonFinite, ShapeMismatch, ZeroRow

# Row sums of a stochastic matrix must hit 1 within this tolerance.
STOCHASTIC_TOL = 1e-12


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a float 2-D array, rejecting NaN/Inf."""
    m = np.asarray(values, dtype=float)
    if m.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return m


def as_tensor3(values, name: str = "tensor") -> np.ndarray:
    """Coerce to a float 3-D array, rejecting NaN/Inf."""
    t = np.asarray(values, dtype=float)
    if t.ndim != 3:
        raise ShapeMismatch(f"{name} must be 3-D, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return t


def normalize_rows(m: np.ndarray) -> np.ndarray:
    """Divide each row by its sum so that every row sums to 1.

    Entries must be nonnegative and every row must contain at least one
    strictly positive entry; a zero row raises :class:`ZeroRow` with the
    offending row index (an actor with no stated interest, or a site with
    no controller). Rows already summing to 1 within tolerance pass through
    bit-identically, which makes the operation exactly idempotent.
    """
    m = as_matrix(m)
    if np.any(m < 0):
        raise NegativeEntry("entries must be nonnegative before normalization")
    sums = m.sum(axis=1)
    zero = np.flatnonzero(sums == 0)
    if zero.size:
        raise ZeroRow(int(zero[0]))
    if np.all(np.abs(sums - 1.0) <= STOCHASTIC_TOL):
        return m
    return m / sums[:, None]


def is_row_stochastic(m: np.ndarray, tol: float = STOCHASTIC_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or np.any(m < 0):
        return False
    return bool(np.all(np.abs(m.sum(axis=1) - 1.0) <= tol))


def lstsq(m: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution of ``m @ x = a``.

    Requires at least as many rows as columns and finite inputs. SVD-backed,
    deterministic for a fixed input on one machine.
    """
    return lstsq_with_rank(m, a)[0]


def lstsq_with_rank(m: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, int]:
    """Like :func:`lstsq` but also reports the effective rank of ``m``."""
    m = np.asarray(m, dtype=float)
    a = np.asarray(a, dtype=float)
    if m.ndim != 2 or a.ndim != 1:
        raise ShapeMismatch(f"expected (p,q) matrix and (p,) vector, got {m.shape}, {a.shape}")
    if m.shape[0] != a.shape[0]:
        raise ShapeMismatch(f"row counts differ: {m.shape[0]} vs {a.shape[0]}")
    if m.shape[0] < m.shape[1]:
        raise ShapeMismatch(f"underdetermined system: {m.shape[0]} rows < {m.shape[1]} cols")
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(a))):
        raise NonFinite("least-squares input contains NaN or Inf")
    x, _, rank, _ = np.linalg.lstsq(m, a, rcond=None)
    return x, int(rank)
