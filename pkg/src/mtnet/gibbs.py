"""Data-augmented Gibbs sampler for the matrix-t graphical denoising model.

Model: ``Y_t = B + E_t`` with ``E_t`` matrix-t(nu, 0, Sigma1, Sigma2), written as
``W_t ~ IMG((nu+n-1)/2, 2, Sigma1)`` and ``Y_t | W_t ~ MN(B, W_t, Sigma2)``.

Priors::

    B ~ MN(0, Omega1, Omega2)
    nu ~ Gamma(a_nu, b_nu) truncated to (1, inf)
    Sigma1 | gamma ~ MG(delta1, beta, (gamma Phi1)^-1)
    Sigma2 | gamma ~ IMG(delta2, beta, gamma Phi2)
    gamma ~ Gamma(a_gamma, b_gamma)
    beta fixed, Jeffreys (prop. to 1/beta) or inverse-gamma(a_beta, b_beta)

One sweep updates, in order: nu (collapsed over W) -> W_1..W_T -> B -> Sigma1
-> Sigma2 -> gamma -> beta. Each ``*_conditional`` function returns the
parameters of the full conditional; ``update_*`` draws from it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy import linalg as sla

from . import centrality as cm
from .distributions import (
    IMGParams,
    MatrixNormalParams,
    MatrixTParams,
    MGParams,
    ScalarDistParams,
    logpdf_inv_matrix_gamma,
    logpdf_matrix_gamma,
    logpdf_matrix_normal,
    logpdf_matrix_t,
    logpdf_scalar,
    sample_inv_matrix_gamma,
    sample_matrix_gamma,
    sample_scalar,
)
from .linalg import (
    NotPositiveDefinite,
    batched_logdet,
    batched_spd_inverse,
    ln_mv_gamma,
    spd_factor,
    spd_factor_jitter,
    spd_inverse,
    unvec,
    vec,
)

log = logging.getLogger(__name__)


class SamplerError(RuntimeError):
    def __init__(self, message: str, sweep: int | None = None):
        super().__init__(message if sweep is None else f"sweep {sweep}: {message}")
        self.sweep = sweep


# ------------------------------------------------------------------------ types


@dataclass
class ObservationSet:
    """Observed noisy adjacency matrices stacked as ``Y[t]`` with shape ``(T, n, n)``."""

    Y: np.ndarray
    labels: list[str] | None = None

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 2:
            Y = Y[None]
        if Y.ndim != 3 or Y.shape[1] != Y.shape[2]:
            raise ValueError(f"observations must have shape (T, n, n), got {Y.shape}")
        if not np.all(np.isfinite(Y)):
            raise ValueError("observations contain non-finite entries")
        self.Y = Y
        if self.labels is not None and len(self.labels) != Y.shape[1]:
            raise ValueError("label count does not match node count")

    @property
    def T(self) -> int:
        return self.Y.shape[0]

    @property
    def n(self) -> int:
        return self.Y.shape[1]


@dataclass(frozen=True)
class BetaMode:
    kind: Literal["fixed", "jeffreys", "inverse-gamma"] = "inverse-gamma"
    value: float = 2.0
    a: float = 3.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fixed", "jeffreys", "inverse-gamma"):
            raise ValueError(f"unknown beta mode {self.kind!r}")
        if self.kind == "fixed" and not self.value > 0:
            raise ValueError("fixed beta must be positive")
        if self.kind == "inverse-gamma" and not (self.a > 0 and self.b > 0):
            raise ValueError("inverse-gamma beta prior needs a, b > 0")

    @classmethod
    def fixed(cls, value: float = 2.0) -> "BetaMode":
        return cls("fixed", value=value)

    @classmethod
    def jeffreys(cls) -> "BetaMode":
        return cls("jeffreys")

    @classmethod
    def inverse_gamma(cls, a: float = 3.0, b: float = 1.0) -> "BetaMode":
        return cls("inverse-gamma", a=a, b=b)

    @classmethod
    def parse(cls, text: str) -> "BetaMode":
        """``fixed``, ``fixed:2.5``, ``jeffreys``, ``inverse-gamma`` or ``inverse-gamma:3,1``."""
        kind, _, args = str(text).strip().partition(":")
        try:
            vals = [float(v) for v in args.split(",")] if args else []
        except ValueError:
            raise ValueError(f"bad beta mode arguments in {text!r}") from None
        if kind == "fixed" and len(vals) <= 1:
            return cls.fixed(*vals)
        if kind == "jeffreys" and not vals:
            return cls.jeffreys()
        if kind == "inverse-gamma" and len(vals) in (0, 2):
            return cls.inverse_gamma(*vals)
        raise ValueError(f"unknown beta mode {text!r}")

    def spec(self) -> str:
        """Inverse of :meth:`parse`."""
        if self.kind == "fixed":
            return f"fixed:{self.value!r}"
        if self.kind == "inverse-gamma":
            return f"inverse-gamma:{self.a!r},{self.b!r}"
        return "jeffreys"

    @property
    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed({self.value:g})"
        if self.kind == "inverse-gamma":
            return f"inverse-gamma({self.a:g},{self.b:g})"
        return "jeffreys"


@dataclass
class Hyperparameters:
    Omega1: np.ndarray
    Omega2: np.ndarray
    Phi1: np.ndarray
    Phi2: np.ndarray
    delta1: float
    delta2: float
    a_gamma: float = 1.0
    b_gamma: float = 1.0
    a_nu: float = 2.0
    b_nu: float = 5.0
    beta_mode: BetaMode = field(default_factory=BetaMode)

    def __post_init__(self):
        n = np.shape(self.Omega1)[0]
        for name in ("Omega1", "Omega2", "Phi1", "Phi2"):
            M = np.asarray(getattr(self, name), dtype=float)
            if M.shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}, got {M.shape}")
            try:
                spd_factor(M)
            except (NotPositiveDefinite, ValueError) as exc:
                raise ValueError(f"{name} is not SPD: {exc}") from None
            setattr(self, name, M)
        for name in ("delta1", "delta2"):
            if not getattr(self, name) > (n - 1) / 2:
                raise ValueError(f"{name} must exceed (n-1)/2 = {(n - 1) / 2}")
        for name in ("a_gamma", "b_gamma", "a_nu", "b_nu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def n(self) -> int:
        return self.Omega1.shape[0]

    @classmethod
    def default(
        cls,
        n: int,
        omega: float = 10.0,
        phi: float = 1.0,
        delta: float | None = None,
        beta_mode: BetaMode | None = None,
        **kw,
    ) -> "Hyperparameters":
        """Weak defaults: ``Omega = omega I``, ``Phi = phi I``, ``delta = (n + 2) / 2``."""
        d = (n + 2) / 2 if delta is None else delta
        eye = np.eye(n)
        return cls(
            Omega1=omega * eye, Omega2=omega * eye, Phi1=phi * eye, Phi2=phi * eye,
            delta1=d, delta2=d, beta_mode=beta_mode or BetaMode(), **kw,
        )


@dataclass
class ModelState:
    B: np.ndarray
    Sigma1: np.ndarray
    Sigma2: np.ndarray
    gamma: float
    nu: float
    beta: float
    W: np.ndarray  # (T, n, n)

    def copy(self) -> "ModelState":
        return ModelState(self.B.copy(), self.Sigma1.copy(), self.Sigma2.copy(),
                          float(self.gamma), float(self.nu), float(self.beta), self.W.copy())


@dataclass
class GibbsConfig:
    sweeps: int = 2000
    burn_in: int = 500
    thin: int = 1
    seed: int = 0
    chains: int = 1
    threshold: float | None = None  # binarization threshold for per-draw centrality
    nu_grid_size: int = 400
    b_solver: Literal["dense", "kron"] = "dense"
    store_b_draws: bool = True

    def __post_init__(self):
        if not self.sweeps > self.burn_in >= 0:
            raise ValueError(f"need sweeps > burn_in >= 0 (sweeps={self.sweeps}, burn_in={self.burn_in})")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if self.b_solver not in ("dense", "kron"):
            raise ValueError(f"unknown b_solver {self.b_solver!r}")


@dataclass
class ChainTrace:
    """Post-burn-in, thinned draws of one chain."""

    draw_index: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    B_sum: np.ndarray
    burn_in: int
    thin: int
    seed: int
    chain: int = 0
    B: np.ndarray | None = None  # (draws, n, n) when stored
    centrality: dict[str, np.ndarray] = field(default_factory=dict)  # measure -> (draws, n)
    kron_norm_mean: np.ndarray | None = None
    threshold: float | None = None

    @property
    def n_draws(self) -> int:
        return len(self.draw_index)

    @property
    def n(self) -> int:
        return self.B_sum.shape[0]


# ------------------------------------------------------------------- RNG plumbing


def sweep_rng(seed: int, chain: int, sweep: int) -> np.random.Generator:
    """Independent substream for one sweep of one chain, derived from ``(seed, chain, sweep)``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(chain), int(sweep))))


# ------------------------------------------------------------------ log joints


def _prior_log(state: ModelState, hyper: Hyperparameters) -> float:
    n = hyper.n
    zero = np.zeros((n, n))
    lp = logpdf_matrix_normal(MatrixNormalParams(zero, hyper.Omega1, hyper.Omega2), state.B)
    lp += logpdf_scalar(ScalarDistParams("truncated-gamma", hyper.a_nu, hyper.b_nu, 1.0), state.nu)
    g, b = state.gamma, state.beta
    lp += logpdf_matrix_gamma(MGParams(hyper.delta1, b, spd_inverse(g * hyper.Phi1)), state.Sigma1)
    lp += logpdf_inv_matrix_gamma(IMGParams(hyper.delta2, b, g * hyper.Phi2), state.Sigma2)
    lp += logpdf_scalar(ScalarDistParams("gamma", hyper.a_gamma, hyper.b_gamma), g)
    mode = hyper.beta_mode
    if mode.kind == "inverse-gamma":
        lp += logpdf_scalar(ScalarDistParams("inverse-gamma", mode.a, mode.b), b)
    elif mode.kind == "jeffreys":
        lp += -np.log(b)
    return float(lp)


def log_joint_augmented(state: ModelState, obs: ObservationSet, hyper: Hyperparameters) -> float:
    """Log prior plus augmented likelihood, up to an additive constant.

    Each prior factor appears exactly once.
    """
    n = obs.n
    lp = _prior_log(state, hyper)
    w_prior = IMGParams((state.nu + n - 1) / 2, 2.0, state.Sigma1)
    for t in range(obs.T):
        lp += logpdf_inv_matrix_gamma(w_prior, state.W[t])
        lp += logpdf_matrix_normal(MatrixNormalParams(state.B, state.W[t], state.Sigma2), obs.Y[t])
    return float(lp)


def log_joint_collapsed(state: ModelState, obs: ObservationSet, hyper: Hyperparameters) -> float:
    """Log prior plus the matrix-t likelihood (``W`` integrated out)."""
    lp = _prior_log(state, hyper)
    tp = MatrixTParams(state.nu, state.B, state.Sigma1, state.Sigma2)
    for t in range(obs.T):
        lp += logpdf_matrix_t(tp, obs.Y[t])
    return float(lp)


# ---------------------------------------------------------------- conditionals


def _residual_logdets(state: ModelState, obs: ObservationSet) -> np.ndarray:
    """``ln|I + Sigma1^-1 R_t Sigma2^-1 R_t'|`` for every slice."""
    if obs.T == 0:
        return np.zeros(0)
    R = obs.Y - state.B
    S2inv = spd_inverse(state.Sigma2)
    inner = state.Sigma1 + R @ S2inv @ np.swapaxes(R, -1, -2)
    return batched_logdet(inner) - spd_factor(state.Sigma1).logdet


def nu_log_density(nu, state: ModelState, obs: ObservationSet, hyper: Hyperparameters):
    """Unnormalized log full conditional of ``nu`` (collapsed over ``W``); ``-inf`` at ``nu <= 1``."""
    nu = np.asarray(nu, dtype=float)
    n, T = obs.n, obs.T
    rate = 1.0 / hyper.b_nu + 0.5 * _residual_logdets(state, obs).sum()
    safe = np.where(nu > 1, nu, 2.0)
    out = (hyper.a_nu - 1) * np.log(safe) - safe * rate
    if T:
        out = out + T * (ln_mv_gamma(n, (safe + 2 * n - 1) / 2) - ln_mv_gamma(n, (safe + n - 1) / 2))
    out = np.where(nu > 1, out, -np.inf)
    return float(out) if out.ndim == 0 else out


def _sample_piecewise_linear(grid: np.ndarray, logf: np.ndarray, rng: np.random.Generator) -> float:
    """Inverse-CDF draw from the density interpolated linearly between grid nodes."""
    f = np.exp(logf - logf.max())
    h = np.diff(grid)
    mass = 0.5 * (f[:-1] + f[1:]) * h
    total = mass.sum()
    if not np.isfinite(total) or total <= 0:
        raise SamplerError("nu grid mass underflow")
    u = rng.random() * total
    cum = np.cumsum(mass)
    k = min(int(np.searchsorted(cum, u, side="right")), len(mass) - 1)
    r = u - (cum[k] - mass[k])
    f0, f1, hk = f[k], f[k + 1], h[k]
    slope = (f1 - f0) / hk
    if abs(slope) * hk < 1e-12 * max(f0, 1e-300):
        s = r / f0
    else:
        s = (-f0 + np.sqrt(max(f0 * f0 + 2.0 * slope * r, 0.0))) / slope
    return float(grid[k] + min(max(s, 0.0), hk))


def nu_grid(current_nu: float, size: int = 400) -> np.ndarray:
    nu_max = max(50.0, 10.0 * current_nu)
    return np.geomspace(1.0, nu_max, size)


def update_nu(state: ModelState, obs: ObservationSet, hyper: Hyperparameters,
              rng: np.random.Generator, grid_size: int = 400) -> float:
    grid = nu_grid(state.nu, grid_size)
    pts = grid.copy()
    pts[0] = 1.0 + 1e-12  # left end of the open support
    logf = nu_log_density(pts, state, obs, hyper)
    nu = _sample_piecewise_linear(grid, logf, rng)
    return max(nu, np.nextafter(1.0, 2.0))


def W_conditional(state: ModelState, obs: ObservationSet, t: int | None = None) -> IMGParams:
    """``W_t ~ IMG((nu+2n-1)/2, 2, R_t Sigma2^-1 R_t' + Sigma1)``; all slices when ``t`` is None."""
    n = obs.n
    S2inv = spd_inverse(state.Sigma2)
    R = obs.Y - state.B if t is None else obs.Y[t] - state.B
    Wbar = R @ S2inv @ np.swapaxes(R, -1, -2) + state.Sigma1
    Wbar = 0.5 * (Wbar + np.swapaxes(Wbar, -1, -2))
    return IMGParams((state.nu + 2 * n - 1) / 2, 2.0, Wbar)


def update_W(state: ModelState, obs: ObservationSet, t: int, rng: np.random.Generator) -> np.ndarray:
    return _jittered(lambda p: sample_inv_matrix_gamma(p, rng), W_conditional(state, obs, t), "Psi")


def update_all_W(state: ModelState, obs: ObservationSet, rng: np.random.Generator) -> np.ndarray:
    """Draw every ``W_t`` in one vectorized call (slices are conditionally independent)."""
    if obs.T == 0:
        return state.W
    return _jittered(lambda p: sample_inv_matrix_gamma(p, rng), W_conditional(state, obs), "Psi")


def _jittered(draw, params, attr: str):
    try:
        return draw(params)
    except NotPositiveDefinite:
        M = getattr(params, attr)
        n = M.shape[-1]
        eps = 1e-10 * np.abs(np.trace(M, axis1=-2, axis2=-1) / n)[..., None, None]
        log.warning("SPD failure in %s; retrying once with jitter", type(params).__name__)
        return draw(replace(params, **{attr: M + np.maximum(eps, 1e-300) * np.eye(n)}))


@dataclass(frozen=True)
class BConditional:
    """Gaussian full conditional of ``vec(B)`` in precision form."""

    precision: np.ndarray  # n^2 x n^2
    linear: np.ndarray  # precision @ mean

    @property
    def mean(self) -> np.ndarray:
        return spd_factor_jitter(self.precision).solve(self.linear)


def B_conditional(state: ModelState, obs: ObservationSet, hyper: Hyperparameters) -> BConditional:
    """Precision ``sum_t Sigma2^-1 (x) W_t^-1 + Omega2^-1 (x) Omega1^-1``.

    Because ``Sigma2`` is shared across slices the data term collapses to
    ``Sigma2^-1 (x) sum_t W_t^-1`` and the linear term to
    ``vec(sum_t W_t^-1 Y_t Sigma2^-1)``.
    """
    n = obs.n
    S2inv = spd_inverse(state.Sigma2)
    prior = np.kron(spd_inverse(hyper.Omega2), spd_inverse(hyper.Omega1))
    if obs.T == 0:
        return BConditional(prior, np.zeros(n * n))
    Winv = batched_spd_inverse(state.W)
    SW = Winv.sum(axis=0)
    H = (Winv @ obs.Y).sum(axis=0) @ S2inv
    P = np.kron(S2inv, SW) + prior
    return BConditional(0.5 * (P + P.T), vec(H))


def update_B(state: ModelState, obs: ObservationSet, hyper: Hyperparameters,
             rng: np.random.Generator, solver: str = "dense") -> np.ndarray:
    n = obs.n
    z = rng.standard_normal(n * n)
    if solver == "kron":
        return _update_B_kron(state, obs, hyper, z)
    cond = B_conditional(state, obs, hyper)
    F = spd_factor_jitter(cond.precision)
    mean = F.solve(cond.linear)
    draw = mean + sla.solve_triangular(F.L, z, lower=True, trans="T")
    return unvec(draw, n)


def _update_B_kron(state: ModelState, obs: ObservationSet, hyper: Hyperparameters, z: np.ndarray) -> np.ndarray:
    """Same conditional, diagonalized via two generalized symmetric eigenproblems (O(n^3))."""
    n = obs.n
    S2inv = spd_inverse(state.Sigma2)
    O1inv, O2inv = spd_inverse(hyper.Omega1), spd_inverse(hyper.Omega2)
    if obs.T:
        Winv = batched_spd_inverse(state.W)
        SW = Winv.sum(axis=0)
        H = (Winv @ obs.Y).sum(axis=0) @ S2inv
    else:
        SW, H = np.zeros((n, n)), np.zeros((n, n))
    lam1, V1 = sla.eigh(SW, O1inv)  # V1' O1inv V1 = I, V1' SW V1 = diag(lam1)
    lam2, V2 = sla.eigh(S2inv, O2inv)
    Dm = np.outer(lam1, lam2) + 1.0  # column-major layout matches vec()
    mean = V1 @ ((V1.T @ H @ V2) / Dm) @ V2.T
    Z = unvec(z, n)
    return mean + V1 @ (Z / np.sqrt(Dm)) @ V2.T


def Sigma1_conditional(state: ModelState, hyper: Hyperparameters) -> MGParams:
    n, T = hyper.n, state.W.shape[0]
    SW = batched_spd_inverse(state.W).sum(axis=0) if T else np.zeros((n, n))
    prec = 0.5 * state.beta * SW + state.gamma * hyper.Phi1
    return MGParams(hyper.delta1 + T * (state.nu + n - 1) / 2, state.beta, spd_inverse(prec))


def update_Sigma1(state: ModelState, hyper: Hyperparameters, rng: np.random.Generator) -> np.ndarray:
    return _jittered(lambda p: sample_matrix_gamma(p, rng), Sigma1_conditional(state, hyper), "Phi")


def Sigma2_conditional(state: ModelState, obs: ObservationSet, hyper: Hyperparameters) -> IMGParams:
    n, T = obs.n, obs.T
    S = state.gamma * hyper.Phi2
    if T:
        R = state.B - obs.Y
        Winv = batched_spd_inverse(state.W)
        S = S + 0.5 * state.beta * (np.swapaxes(R, -1, -2) @ Winv @ R).sum(axis=0)
    return IMGParams(hyper.delta2 + T * n / 2, state.beta, 0.5 * (S + S.T))


def update_Sigma2(state: ModelState, obs: ObservationSet, hyper: Hyperparameters,
                  rng: np.random.Generator) -> np.ndarray:
    return _jittered(lambda p: sample_inv_matrix_gamma(p, rng), Sigma2_conditional(state, obs, hyper), "Psi")


def _prior_trace(state: ModelState, hyper: Hyperparameters) -> float:
    """``tr(Phi1 Sigma1 + Phi2 Sigma2^-1)``."""
    tr = float(np.sum(hyper.Phi1 * state.Sigma1.T)) + float(np.trace(spd_factor(state.Sigma2).solve(hyper.Phi2)))
    if not tr > 0:
        raise SamplerError(f"non-positive prior trace {tr}")
    return tr


def gamma_conditional(state: ModelState, hyper: Hyperparameters) -> ScalarDistParams:
    n = hyper.n
    rate = 1.0 / hyper.b_gamma + _prior_trace(state, hyper) / state.beta
    return ScalarDistParams("gamma", hyper.a_gamma + n * (hyper.delta1 + hyper.delta2), 1.0 / rate)


def update_gamma(state: ModelState, hyper: Hyperparameters, rng: np.random.Generator) -> float:
    return float(sample_scalar(gamma_conditional(state, hyper), rng))


def beta_conditional(state: ModelState, hyper: Hyperparameters) -> ScalarDistParams:
    """Inverse-gamma full conditional of ``beta`` (parameterized by shape and ``b = 1/rate``)."""
    mode = hyper.beta_mode
    n = hyper.n
    shape = n * (hyper.delta1 + hyper.delta2)
    rate = state.gamma * _prior_trace(state, hyper)
    if mode.kind == "inverse-gamma":
        return ScalarDistParams("inverse-gamma", mode.a + shape, 1.0 / (1.0 / mode.b + rate))
    if mode.kind == "jeffreys":
        return ScalarDistParams("inverse-gamma", shape, 1.0 / rate)
    raise ValueError("beta has no full conditional in fixed mode")


def update_beta(state: ModelState, hyper: Hyperparameters, rng: np.random.Generator) -> float:
    if hyper.beta_mode.kind == "fixed":
        return float(hyper.beta_mode.value)
    return float(sample_scalar(beta_conditional(state, hyper), rng))


def jeffreys_fisher_information(n: int, delta1: float, delta2: float, beta: float) -> float:
    """Closed form ``n (delta1 + delta2) / beta^2``; the Jeffreys prior is therefore prop. to ``1/beta``."""
    return n * (delta1 + delta2) / beta**2


# ------------------------------------------------------------------------ driver


def init_state(obs: ObservationSet, hyper: Hyperparameters, rng: np.random.Generator | None = None) -> ModelState:
    """Deterministic start: ``B`` = slice mean, identity scales, prior-mean scalars.

    ``rng`` is accepted for interface symmetry with the updates and is not consumed.
    """
    n, T = obs.n, obs.T
    mode = hyper.beta_mode
    return ModelState(
        B=obs.Y.mean(axis=0) if T else np.zeros((n, n)),
        Sigma1=np.eye(n),
        Sigma2=np.eye(n),
        gamma=hyper.a_gamma * hyper.b_gamma,
        nu=max(2.0, hyper.a_nu * hyper.b_nu),
        beta=mode.value if mode.kind == "fixed" else 2.0,
        W=np.broadcast_to(np.eye(n), (T, n, n)).copy(),
    )


def gibbs_sweep(state: ModelState, obs: ObservationSet, hyper: Hyperparameters,
                rng: np.random.Generator, config: GibbsConfig | None = None) -> ModelState:
    """One full sweep; returns a new state and leaves ``state`` untouched."""
    cfg = config or GibbsConfig(sweeps=1, burn_in=0)
    s = state.copy()
    s.nu = update_nu(s, obs, hyper, rng, cfg.nu_grid_size)
    s.W = update_all_W(s, obs, rng)
    s.B = update_B(s, obs, hyper, rng, cfg.b_solver)
    s.Sigma1 = update_Sigma1(s, hyper, rng)
    s.Sigma2 = update_Sigma2(s, obs, hyper, rng)
    s.gamma = update_gamma(s, hyper, rng)
    s.beta = update_beta(s, hyper, rng)
    return s


def check_support(state: ModelState) -> None:
    if not (state.nu > 1 and state.gamma > 0 and state.beta > 0):
        raise SamplerError(f"scalar left support: nu={state.nu}, gamma={state.gamma}, beta={state.beta}")
    for name in ("Sigma1", "Sigma2"):
        spd_factor(getattr(state, name))
    if not np.all(np.isfinite(state.B)):
        raise SamplerError("non-finite B")


def run_chain(obs: ObservationSet, hyper: Hyperparameters, config: GibbsConfig,
              chain: int = 0, init: ModelState | None = None) -> ChainTrace:
    if hyper.n != obs.n:
        raise ValueError(f"hyperparameters are {hyper.n}-dimensional but observations have n={obs.n}")
    n = obs.n
    state = init.copy() if init is not None else init_state(obs, hyper)
    draws, nus, gammas, betas, Bs = [], [], [], [], []
    cents: dict[str, list] = {m: [] for m in cm.MEASURES} if config.threshold is not None else {}
    B_sum = np.zeros((n, n))
    kron_sum = None
    for sweep in range(1, config.sweeps + 1):
        rng = sweep_rng(config.seed, chain, sweep)
        try:
            state = gibbs_sweep(state, obs, hyper, rng, config)
            check_support(state)
        except (NotPositiveDefinite, SamplerError, ValueError, FloatingPointError) as exc:
            raise SamplerError(str(exc), sweep=sweep) from exc
        if sweep <= config.burn_in or (sweep - config.burn_in) % config.thin:
            continue
        draws.append(sweep)
        nus.append(state.nu)
        gammas.append(state.gamma)
        betas.append(state.beta)
        B_sum += state.B
        if config.store_b_draws:
            Bs.append(state.B.copy())
        K = np.kron(state.Sigma2, state.Sigma1)
        K /= np.trace(K)
        kron_sum = K if kron_sum is None else kron_sum + K
        if cents:
            sc = cm.centrality_scores(cm.binarize(state.B, config.threshold))
            for m in cm.MEASURES:
                cents[m].append(getattr(sc, m))
    k = len(draws)
    return ChainTrace(
        draw_index=np.asarray(draws, dtype=int),
        nu=np.asarray(nus), gamma=np.asarray(gammas), beta=np.asarray(betas),
        B_sum=B_sum, burn_in=config.burn_in, thin=config.thin, seed=config.seed, chain=chain,
        B=np.asarray(Bs) if config.store_b_draws else None,
        centrality={m: np.asarray(v) for m, v in cents.items()},
        kron_norm_mean=kron_sum / k if k else None,
        threshold=config.threshold,
    )


def _run_chain_job(args):
    return run_chain(*args)


def run_chains(obs: ObservationSet, hyper: Hyperparameters, config: GibbsConfig,
               threads: int = 1) -> list[ChainTrace]:
    """Run ``config.chains`` independent chains; chain ``k`` uses substreams keyed by ``k``."""
    jobs = [(obs, hyper, config, k) for k in range(config.chains)]
    if threads <= 1 or config.chains == 1:
        return [_run_chain_job(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_chain_job, jobs))


def posterior_mean_B(trace: ChainTrace | list[ChainTrace]) -> np.ndarray:
    traces = trace if isinstance(trace, list) else [trace]
    k = sum(t.n_draws for t in traces)
    if k == 0:
        raise ValueError("trace has no recorded draws")
    return sum(t.B_sum for t in traces) / k


def posterior_centrality(trace: ChainTrace | list[ChainTrace]) -> cm.CentralityScores:
    """Average of the per-draw centrality vectors recorded in the trace(s)."""
    traces = trace if isinstance(trace, list) else [trace]
    if not traces[0].centrality:
        raise ValueError("trace has no per-draw centrality (run with a threshold)")
    stacked = {m: np.concatenate([t.centrality[m] for t in traces]) for m in cm.MEASURES}
    if len(stacked[cm.MEASURES[0]]) == 0:
        raise ValueError("trace has no recorded draws")
    return cm.CentralityScores(**{m: v.mean(axis=0) for m, v in stacked.items()})


def attach_centrality(trace: ChainTrace, threshold: float) -> ChainTrace:
    """Per-draw centrality computed after the fact from stored ``B`` draws."""
    if trace.B is None:
        raise ValueError("trace has no stored B draws")
    cents: dict[str, list] = {m: [] for m in cm.MEASURES}
    for B in trace.B:
        sc = cm.centrality_scores(cm.binarize(B, threshold))
        for m in cm.MEASURES:
            cents[m].append(getattr(sc, m))
    k = trace.n_draws
    n = trace.n
    return replace(trace, threshold=threshold,
                   centrality={m: np.asarray(v).reshape(k, n) for m, v in cents.items()})
