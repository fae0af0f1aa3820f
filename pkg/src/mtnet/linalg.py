"""Shared numerical kernels: multivariate gamma, vec/Kronecker algebra, SPD factor/solve."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.special import gammaln

log = logging.getLogger(__name__)

_LN_PI = np.log(np.pi)


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Raised when a matrix expected to be SPD fails Cholesky factorization."""


def ln_mv_gamma(p: int, z):
    """Log of the multivariate gamma function Gamma_p(z).

    ``z`` may be a scalar or an array; the result has the same shape.
    Raises ``ValueError`` when any ``z <= (p - 1) / 2``.
    """
    if int(p) != p or p < 1:
        raise ValueError(f"p must be a positive integer, got {p!r}")
    p = int(p)
    z_arr = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z_arr)) or np.any(z_arr <= (p - 1) / 2):
        raise ValueError(f"ln_mv_gamma requires z > (p-1)/2 = {(p - 1) / 2}, got {z!r}")
    half_steps = np.arange(p) / 2.0
    terms = gammaln(z_arr[..., None] - half_steps)
    out = p * (p - 1) / 4.0 * _LN_PI + terms.sum(axis=-1)
    return float(out) if np.ndim(z) == 0 else out


def vec(M) -> np.ndarray:
    """Column-stacking vectorization: entry (i, j) lands at j * n_rows + i."""
    return np.asarray(M).reshape(-1, order="F")


def unvec(v, n_rows: int, n_cols: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec`."""
    n_cols = n_rows if n_cols is None else n_cols
    return np.asarray(v).reshape(n_rows, n_cols, order="F")


def kron(A, B) -> np.ndarray:
    return np.kron(np.atleast_2d(A), np.atleast_2d(B))


@dataclass(frozen=True)
class SpdFactor:
    """Lower Cholesky factor ``L`` with ``L @ L.T == M`` and the cached log-determinant."""

    L: np.ndarray
    logdet: float

    @property
    def n(self) -> int:
        return self.L.shape[0]

    def solve(self, rhs) -> np.ndarray:
        return spd_solve(self, rhs)

    def inverse(self) -> np.ndarray:
        inv = spd_solve(self, np.eye(self.n))
        return 0.5 * (inv + inv.T)


def spd_factor(M, symmetric_tol: float = 1e-10) -> SpdFactor:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    scale = max(np.abs(M).max(), 1e-300)
    if np.abs(M - M.T).max() > symmetric_tol * scale:
        raise ValueError("matrix is not symmetric")
    try:
        L = np.linalg.cholesky(0.5 * (M + M.T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    d = np.diag(L)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise NotPositiveDefinite("non-positive pivot in Cholesky factor")
    return SpdFactor(L=L, logdet=float(2.0 * np.log(d).sum()))


def spd_factor_jitter(M) -> SpdFactor:
    """Factor ``M``; on failure retry once with ``1e-10 * mean(diag) * I`` added."""
    try:
        return spd_factor(M)
    except NotPositiveDefinite:
        M = np.asarray(M, dtype=float)
        eps = 1e-10 * abs(float(np.mean(np.diag(M)))) or 1e-10
        log.warning("SPD factorization failed; retrying with jitter %.3g", eps)
        return spd_factor(M + eps * np.eye(M.shape[0]))


def spd_solve(F: SpdFactor, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != F.n:
        raise ValueError(f"dimension mismatch: factor is {F.n}x{F.n}, rhs has {rhs.shape[0]} rows")
    y = sla.solve_triangular(F.L, rhs, lower=True)
    return sla.solve_triangular(F.L, y, lower=True, trans="T")


def spd_inverse(M) -> np.ndarray:
    return spd_factor_jitter(M).inverse()


def logdet_spd(M) -> float:
    return spd_factor(M).logdet


def batched_cholesky(M: np.ndarray) -> np.ndarray:
    """Cholesky of a stack ``(..., n, n)`` of SPD matrices."""
    try:
        return np.linalg.cholesky(0.5 * (M + np.swapaxes(M, -1, -2)))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None


def batched_spd_inverse(M: np.ndarray) -> np.ndarray:
    L = batched_cholesky(M)
    n = M.shape[-1]
    eye = np.broadcast_to(np.eye(n), M.shape)
    Linv = np.linalg.solve(L, eye)
    inv = np.swapaxes(Linv, -1, -2) @ Linv
    return 0.5 * (inv + np.swapaxes(inv, -1, -2))


def batched_logdet(M: np.ndarray) -> np.ndarray:
    L = batched_cholesky(M)
    return 2.0 * np.log(np.diagonal(L, axis1=-2, axis2=-1)).sum(axis=-1)
