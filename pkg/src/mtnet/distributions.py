"""Matrix-variate and scalar distributions used by the model.

Parameterization conventions (fixed once, used everywhere):

* ``MG(delta, beta, Phi)`` has density
  ``|Phi|^-delta beta^(-n delta) / Gamma_n(delta) * |S|^(delta-(n+1)/2) etr(-Phi^-1 S / beta)``.
  The scale matrix enters the trace *inverted*. ``MG(k/2, 2, Phi)`` is ``Wishart(k, Phi)``.
* ``IMG(delta, beta, Psi)`` has density
  ``|Psi|^delta beta^(-n delta) / Gamma_n(delta) * |S|^-(delta+(n+1)/2) etr(-Psi S^-1 / beta)``.
  The trace matrix enters *directly*. ``IMG(k/2, 2, Psi)`` is ``InvWishart(k, Psi)``, and
  ``S ~ IMG(delta, beta, Psi)`` iff ``S^-1 ~ MG(delta, beta, Psi^-1)``.
* Scalar gamma families use shape ``a`` and scale ``b``; the inverse gamma has
  density ``b^-a / Gamma(a) x^-(a+1) exp(-1 / (b x))``, i.e. rate ``1/b``.

Samplers take a ``numpy.random.Generator`` and an optional ``size`` that
prepends batch dimensions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import gammaincc, gammainccinv, gammaln

from .linalg import batched_cholesky, ln_mv_gamma, spd_factor

log = logging.getLogger(__name__)

_LN_2PI = np.log(2.0 * np.pi)
_LN_PI = np.log(np.pi)


@dataclass(frozen=True)
class MatrixNormalParams:
    M: np.ndarray
    U: np.ndarray  # row scale
    V: np.ndarray  # column scale


@dataclass(frozen=True)
class MatrixTParams:
    nu: float
    B: np.ndarray
    Sigma1: np.ndarray
    Sigma2: np.ndarray


@dataclass(frozen=True)
class MGParams:
    delta: float
    beta: float
    Phi: np.ndarray

    def __post_init__(self):
        _check_shape_scale(self.delta, self.beta, np.shape(self.Phi)[-1])


@dataclass(frozen=True)
class IMGParams:
    delta: float
    beta: float
    Psi: np.ndarray

    def __post_init__(self):
        _check_shape_scale(self.delta, self.beta, np.shape(self.Psi)[-1])


@dataclass(frozen=True)
class ScalarDistParams:
    family: Literal["gamma", "truncated-gamma", "inverse-gamma"]
    a: float
    b: float
    lower: float = 0.0

    def __post_init__(self):
        if self.family not in ("gamma", "truncated-gamma", "inverse-gamma"):
            raise ValueError(f"unknown scalar family {self.family!r}")
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"{self.family} requires a > 0 and b > 0, got a={self.a}, b={self.b}")
        if self.lower < 0:
            raise ValueError("truncation lower bound must be >= 0")


def _check_shape_scale(delta, beta, n):
    if not delta > (n - 1) / 2:
        raise ValueError(f"shape delta={delta} must exceed (n-1)/2={(n - 1) / 2}")
    if not beta > 0:
        raise ValueError(f"scale beta={beta} must be positive")


def wishart_params(kappa: float, Phi) -> MGParams:
    return MGParams(kappa / 2.0, 2.0, np.asarray(Phi, dtype=float))


def inv_wishart_params(kappa: float, Psi) -> IMGParams:
    return IMGParams(kappa / 2.0, 2.0, np.asarray(Psi, dtype=float))


# ---------------------------------------------------------------- log-densities


def logpdf_matrix_normal(params: MatrixNormalParams, X) -> float:
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    FU = spd_factor(params.U)
    FV = spd_factor(params.V)
    R = X - params.M
    # tr(V^-1 R' U^-1 R) = || L_U^-1 R L_V^-T ||_F^2
    A = FU.solve(R)
    quad = float(np.sum(A * FV.solve(R.T).T))
    return -0.5 * n * p * _LN_2PI - 0.5 * p * FU.logdet - 0.5 * n * FV.logdet - 0.5 * quad


def logpdf_matrix_t(params: MatrixTParams, X) -> float:
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    nu = params.nu
    if not nu > 0:
        raise ValueError("degrees of freedom must be positive")
    F1 = spd_factor(params.Sigma1)
    F2 = spd_factor(params.Sigma2)
    E = X - params.B
    # ln|I + S1^-1 E S2^-1 E'| = ln|S1 + E S2^-1 E'| - ln|S1|
    inner = params.Sigma1 + E @ F2.solve(E.T)
    ld = spd_factor(0.5 * (inner + inner.T)).logdet - F1.logdet
    return (
        ln_mv_gamma(n, (nu + 2 * n - 1) / 2)
        - ln_mv_gamma(n, (nu + n - 1) / 2)
        - 0.5 * n * n * _LN_PI
        - 0.5 * n * (F1.logdet + F2.logdet)
        - 0.5 * (nu + 2 * n - 1) * ld
    )


def logpdf_matrix_gamma(params: MGParams, S) -> float:
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    d, b = params.delta, params.beta
    FS = spd_factor(S)
    FP = spd_factor(params.Phi)
    tr = float(np.trace(FP.solve(S)))
    return (
        -d * FP.logdet
        - n * d * np.log(b)
        - ln_mv_gamma(n, d)
        + (d - (n + 1) / 2) * FS.logdet
        - tr / b
    )


def logpdf_inv_matrix_gamma(params: IMGParams, S) -> float:
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    d, b = params.delta, params.beta
    FS = spd_factor(S)
    FP = spd_factor(params.Psi)
    tr = float(np.trace(FS.solve(params.Psi)))
    return (
        d * FP.logdet
        - n * d * np.log(b)
        - ln_mv_gamma(n, d)
        - (d + (n + 1) / 2) * FS.logdet
        - tr / b
    )


def logpdf_scalar(params: ScalarDistParams, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    a, b = params.a, params.b
    with np.errstate(divide="ignore", invalid="ignore"):
        if params.family == "inverse-gamma":
            out = -a * np.log(b) - gammaln(a) - (a + 1) * np.log(x) - 1.0 / (b * x)
            out = np.where(x > 0, out, -np.inf)
        else:
            out = -a * np.log(b) - gammaln(a) + (a - 1) * np.log(x) - x / b
            lo = 0.0
            if params.family == "truncated-gamma":
                lo = params.lower
                out = out - np.log(gammaincc(a, lo / b))
            out = np.where(x > lo, out, -np.inf)
    return float(out) if out.ndim == 0 else out


def truncated_gamma_mean(a: float, b: float, lower: float) -> float:
    """Mean of Gamma(shape a, scale b) restricted to (lower, inf)."""
    return a * b * gammaincc(a + 1, lower / b) / gammaincc(a, lower / b)


# --------------------------------------------------------------------- samplers


def _size_tuple(size) -> tuple:
    if size is None:
        return ()
    if np.isscalar(size):
        return (int(size),)
    return tuple(int(s) for s in size)


def _bartlett_factor(rng: np.random.Generator, delta: float, n: int, shape: tuple) -> np.ndarray:
    # Lower triangular T with T_ii^2 ~ Gamma(delta - i/2, scale 2), T_ij ~ N(0,1) below diagonal.
    shapes = delta - np.arange(n) / 2.0
    diag = np.sqrt(rng.gamma(shapes, 2.0, size=shape + (n,)))
    T = np.tril(rng.standard_normal(shape + (n, n)), -1)
    idx = np.arange(n)
    T[..., idx, idx] = diag
    return T


def sample_matrix_gamma(params: MGParams, rng: np.random.Generator, size=None) -> np.ndarray:
    """Exact ``MG(delta, beta, Phi)`` draw via a Bartlett construction with fractional dof.

    ``Phi`` may itself be a stack ``(..., n, n)``; batch dims of ``size`` are prepended.
    """
    Phi = np.asarray(params.Phi, dtype=float)
    n = Phi.shape[-1]
    shape = _size_tuple(size) + Phi.shape[:-2]
    L = batched_cholesky(Phi)
    T = _bartlett_factor(rng, params.delta, n, shape)
    A = L @ T
    return 0.5 * params.beta * (A @ np.swapaxes(A, -1, -2))


def sample_inv_matrix_gamma(params: IMGParams, rng: np.random.Generator, size=None) -> np.ndarray:
    """Exact ``IMG(delta, beta, Psi)`` draw: the inverse of an ``MG(delta, beta, Psi^-1)`` draw.

    With ``Psi = L L'`` and Bartlett factor ``T`` the inverse is formed as
    ``(2/beta) (L T^-T)(L T^-T)'`` without inverting a dense matrix.
    """
    Psi = np.asarray(params.Psi, dtype=float)
    n = Psi.shape[-1]
    shape = _size_tuple(size) + Psi.shape[:-2]
    L = batched_cholesky(Psi)
    T = _bartlett_factor(rng, params.delta, n, shape)
    # X' = T^-1 L'
    Xt = np.linalg.solve(T, np.broadcast_to(np.swapaxes(L, -1, -2), shape + (n, n)))
    X = np.swapaxes(Xt, -1, -2)
    return (2.0 / params.beta) * (X @ Xt)


def sample_matrix_normal(params: MatrixNormalParams, rng: np.random.Generator, size=None) -> np.ndarray:
    M = np.asarray(params.M, dtype=float)
    LU = batched_cholesky(np.asarray(params.U, dtype=float))
    LV = batched_cholesky(np.asarray(params.V, dtype=float))
    shape = _size_tuple(size) + np.broadcast_shapes(M.shape[:-2], LU.shape[:-2], LV.shape[:-2])
    Z = rng.standard_normal(shape + M.shape[-2:])
    return M + LU @ Z @ np.swapaxes(LV, -1, -2)


def sample_matrix_t(params: MatrixTParams, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw via the normal / inverted-matrix-gamma mixture.

    ``W ~ IMG((nu+n-1)/2, 2, Sigma1)`` then ``X | W ~ MN(B, W, Sigma2)``.
    """
    n = np.shape(params.B)[-1]
    W = sample_inv_matrix_gamma(IMGParams((params.nu + n - 1) / 2, 2.0, params.Sigma1), rng, size)
    return sample_matrix_normal(MatrixNormalParams(params.B, W, params.Sigma2), rng)


def sample_scalar(params: ScalarDistParams, rng: np.random.Generator, size=None):
    a, b = params.a, params.b
    if params.family == "gamma":
        return rng.gamma(a, b, size=size)
    if params.family == "inverse-gamma":
        return 1.0 / rng.gamma(a, b, size=size)
    # truncated gamma by inverse CDF on the upper regularized incomplete gamma
    q0 = gammaincc(a, params.lower / b)
    u = 1.0 - rng.random(size=size)  # in (0, 1]
    if q0 <= 0.0:
        # truncation point beyond double precision tail; exponential tail approximation
        log.warning("truncated gamma tail underflow (a=%g, b=%g, lower=%g)", a, b, params.lower)
        rate = 1.0 / b - (a - 1.0) / params.lower
        return params.lower - np.log(u) / max(rate, 1e-12)
    return b * gammainccinv(a, u * q0)
