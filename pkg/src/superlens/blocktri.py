"""Direct solver for block-tridiagonal complex systems.

Block Thomas elimination: each Schur complement is factorized with LAPACK's
partially pivoted LU and its reciprocal condition number is estimated, so a
near-singular pivot can be reported together with the level it occurred at.
Blocks may be dense arrays or ``scipy.sparse`` matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.linalg import lapack

from .errors import ConditioningError


@dataclass
class BlockSolveInfo:
    """Diagnostics of one elimination.

    ``growth`` is the largest ratio of a Schur complement's largest entry to
    that of the diagonal block it was formed from.  ``residual`` is filled in by callers that check it.
    """

    min_rcond: float = np.inf
    min_rcond_level: int = -1
    growth: float = 0.0
    residual: float = float("nan")

    def record(self, level: int, rcond: float, growth: float) -> None:
        if rcond < self.min_rcond:
            self.min_rcond, self.min_rcond_level = float(rcond), int(level)
        self.growth = max(self.growth, float(growth))


def _dense(block) -> np.ndarray:
    return block.toarray() if sp.issparse(block) else np.asarray(block)


def rcond_estimate(lu: np.ndarray, anorm: float) -> float:
    """LAPACK 1-norm reciprocal condition estimate from an LU factor."""
    gecon = lapack.get_lapack_funcs("gecon", (lu,))
    rc, info = gecon(lu, anorm, norm="1")
    return float(rc) if info == 0 else 0.0


def solve_block_tridiagonal(lower, diag, upper, rhs, rcond_tol: float = 1e-14,
                            info: BlockSolveInfo | None = None, level_offset: int = 0):
    """Solve ``lower[j] x[j-1] + diag[j] x[j] + upper[j] x[j+1] = rhs[j]``.

    Parameters
    ----------
    lower, diag, upper : sequences of blocks
        ``lower[0]`` and ``upper[-1]`` are ignored (may be ``None``).
    rhs : ndarray, shape (levels, m)
    rcond_tol : float
        Pivots with a smaller reciprocal condition number raise
        :class:`ConditioningError`.

    Returns
    -------
    x : ndarray, shape (levels, m)
    info : BlockSolveInfo
    """
    levels = len(diag)
    info = info or BlockSolveInfo()
    xu = [None] * levels
    y = np.empty(rhs.shape, dtype=complex)
    for j in range(levels):
        S = _dense(diag[j]).astype(complex, copy=True)
        scale = max(np.abs(S).max(), 1e-300)
        r = rhs[j].astype(complex, copy=True)
        if j > 0:
            S -= lower[j] @ xu[j - 1]
            r -= lower[j] @ y[j - 1]
        lu, piv = sla.lu_factor(S, check_finite=False)
        rc = rcond_estimate(lu, np.abs(S).sum(axis=0).max())
        info.record(j + level_offset, rc, np.abs(S).max() / scale)
        if rc < rcond_tol:
            raise ConditioningError(j + level_offset, rc)
        y[j] = sla.lu_solve((lu, piv), r, check_finite=False)
        if j < levels - 1:
            xu[j] = sla.lu_solve((lu, piv), _dense(upper[j]), check_finite=False)
    x = np.empty_like(y)
    x[-1] = y[-1]
    for j in range(levels - 2, -1, -1):
        x[j] = y[j] - xu[j] @ x[j + 1]
    return x, info


def to_sparse(lower, diag, upper) -> sp.csr_matrix:
    """Assemble the full sparse matrix of a block-tridiagonal operator."""
    L = len(diag)
    grid = [[None] * L for _ in range(L)]
    for j in range(L):
        grid[j][j] = sp.csr_matrix(diag[j])
        if j > 0 and lower[j] is not None:
            grid[j][j - 1] = sp.csr_matrix(lower[j])
        if j < L - 1 and upper[j] is not None:
            grid[j][j + 1] = sp.csr_matrix(upper[j])
    return sp.bmat(grid, format="csr")
