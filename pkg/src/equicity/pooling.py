"""Opinion pooling: consensus allocations as stationary distributions.

Per colour, actor interests (m x n) and site controls (n x m) define two
Markov chains: an actor-to-actor network P = X C (the primal problem) and a
site-to-site network Q = C X (the dual problem). The consensus share of each
site is the stationary distribution of Q, obtained as the least-squares
solution of the augmented system [(I - Q) | 1]^T b^T = [0 ... 0, 1]^T.
The two stationary vectors are linked by b = a X and a = b C.
"""

from __future__ import annotations

import numpy as np

from .errors import NoConvergence, ShapeMismatch
from .linalg import as_tensor3, lstsq_with_rank, normalize_rows

# Residual of the augmented stationary system beyond which a chain is
# treated as pathological (e.g. multiple closed communicating classes).
RESIDUAL_TOL = 1e-6
# Negative stationary entries below this magnitude are numerical dust.
CLAMP_TOL = 1e-10


def interaction_matrices(xk: np.ndarray, ck: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Build the actor-to-actor and site-to-site chains P = Xk Ck, Q = Ck Xk.

    Both inputs must be row-stochastic; both products are then row-stochastic
    by construction.
    """
    xk = np.asarray(xk, dtype=float)
    ck = np.asarray(ck, dtype=float)
    if xk.ndim != 2 or ck.ndim != 2 or xk.shape[0] != ck.shape[1] or xk.shape[1] != ck.shape[0]:
        raise ShapeMismatch(f"interest {xk.shape} and control {ck.shape} do not conform")
    return xk @ ck, ck @ xk


def steady_state(q: np.ndarray, residual_tol: float = RESIDUAL_TOL) -> np.ndarray:
    """Stationary row vector of a row-stochastic chain.

    Solves min ||N b - e|| with N = [(I - Q) | 1]^T and e = (0, ..., 0, 1).
    Raises :class:`NoConvergence` when the augmented system is rank-deficient
    (the stationary vector is not unique, e.g. Q = I) or its residual exceeds
    ``residual_tol``. Negative entries smaller than 1e-10 in magnitude are
    clamped to zero and the vector renormalized; larger negatives are treated
    as failure, not dust.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ShapeMismatch(f"chain must be square, got {q.shape}")
    n = q.shape[0]
    system = np.concatenate([(np.eye(n) - q).T, np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    beta, rank = lstsq_with_rank(system, rhs)
    if rank < n:
        raise NoConvergence(
            f"stationary system rank {rank} < {n}; stationary vector not unique"
        )
    residual = float(np.linalg.norm(system @ beta - rhs))
    if residual > residual_tol:
        raise NoConvergence(f"stationary residual {residual:.3e} exceeds {residual_tol:.1e}")
    if beta.min() < -CLAMP_TOL:
        raise NoConvergence(f"stationary vector has negative mass {beta.min():.3e}")
    beta = np.clip(beta, 0.0, None)
    return beta / beta.sum()


def pool_opinions(interests: np.ndarray, controls: np.ndarray) -> np.ndarray:
    """Consensus allocation A (n x o) from interest and control tensors.

    ``interests`` is (m actors, n sites, o colours) and ``controls`` is
    (n sites, m actors, o colours). Each colour page is normalized to
    row-stochastic form, the dual chain Q = C_k X_k is built, and column k of
    A is its stationary distribution. Per-page failures are re-raised with
    the colour index attached.
    """
    x = as_tensor3(interests, "interests")
    c = as_tensor3(controls, "controls")
    m, n, o = x.shape
    if c.shape != (n, m, o):
        raise ShapeMismatch(
            f"controls shape {c.shape} does not match interests {x.shape} transposed"
        )
    allocation = np.empty((n, o))
    for k in range(o):
        try:
            xk = normalize_rows(x[:, :, k])
            ck = normalize_rows(c[:, :, k])
            _, q = interaction_matrices(xk, ck)
            allocation[:, k] = steady_state(q)
        except NoConvergence as err:
            raise NoConvergence(str(err), colour=k) from err
        except Exception as err:
            if hasattr(err, "colour"):
                err.colour = k
            raise
    return allocation


def primal_distribution(xk: np.ndarray, ck: np.ndarray) -> np.ndarray:
    """Stationary distribution over actors of P = Xk Ck (diagnostic path)."""
    p, _ = interaction_matrices(xk, ck)
    return steady_state(p)


def duality_residuals(
    xk: np.ndarray, ck: np.ndarray, alpha: np.ndarray, beta: np.ndarray
) -> tuple[float, float]:
    """Max-norm residuals of the identities b = a X and a = b C.

    Diagnostic only: both vectors are expected to be the stationary
    distributions of the corresponding primal/dual chains.
    """
    xk = np.asarray(xk, dtype=float)
    ck = np.asarray(ck, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if alpha.shape != (xk.shape[0],) or beta.shape != (xk.shape[1],):
        raise ShapeMismatch(
            f"alpha {alpha.shape} / beta {beta.shape} do not match pages {xk.shape}"
        )
    r1 = float(np.max(np.abs(beta - alpha @ xk)))
    r2 = float(np.max(np.abs(alpha - beta @ ck)))
    return r1, r2
