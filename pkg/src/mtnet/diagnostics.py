"""Autocorrelation diagnostics for averaged-centrality chains.

Each headline centrality measure is reduced to one scalar per recorded draw:
the mean over nodes, except for eigencentrality, whose scores are
L1-normalized so their node mean is the constant ``1/n``; its chain is the
standard deviation across nodes instead. A measure passes when every sample
autocorrelation at lags ``1..max_lag`` lies inside ``+-1.96/sqrt(N)``. Passing
is necessary, not sufficient: reports say "consistent with convergence".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import centrality as cm
from .gibbs import ChainTrace

Z95 = 1.96
MIN_DRAWS = 50


@dataclass(frozen=True)
class MeasureDiagnostics:
    acf: np.ndarray | None  # lags 0..max_lag; None when the chain is constant
    passed: bool
    degenerate: bool
    lags_outside: int


@dataclass
class DiagnosticsReport:
    n_draws: int
    max_lag: int
    band: float
    measures: dict[str, MeasureDiagnostics]
    summaries: dict[str, float] = field(default_factory=dict)

    @property
    def n_passed(self) -> int:
        return sum(d.passed for d in self.measures.values())

    def verdict(self) -> str:
        k, total = self.n_passed, len(self.measures)
        if k == total:
            return (f"all {total} averaged-centrality chains have insignificant autocorrelation at lags "
                    f"1..{self.max_lag}: consistent with convergence")
        return (f"{k} of {total} averaged-centrality chains have insignificant autocorrelation at lags "
                f"1..{self.max_lag}; not consistent with convergence for the rest")


def sample_acf(x, max_lag: int) -> np.ndarray | None:
    """Sample autocorrelation ``r_0..r_max_lag`` (biased denominator); ``None`` for a constant chain."""
    x = np.asarray(x, dtype=float)
    if max_lag >= len(x):
        raise ValueError(f"max_lag {max_lag} must be below the chain length {len(x)}")
    d = x - x.mean()
    denom = float(d @ d)
    if denom <= 1e-24 * max(1.0, float(np.abs(x).max()) ** 2) * len(x):
        return None
    return np.array([1.0] + [float(d[:-k] @ d[k:]) / denom for k in range(1, max_lag + 1)])


def chain_diagnostics(x, max_lag: int = 20) -> MeasureDiagnostics:
    x = np.asarray(x, dtype=float)
    if len(x) < MIN_DRAWS:
        raise ValueError(f"diagnostics need at least {MIN_DRAWS} draws, got {len(x)}")
    r = sample_acf(x, max_lag)
    if r is None:
        return MeasureDiagnostics(None, False, True, max_lag)
    band = Z95 / np.sqrt(len(x))
    outside = int(np.sum(np.abs(r[1:]) > band))
    return MeasureDiagnostics(r, outside == 0, False, outside)


def averaged_centrality_chains(trace: ChainTrace) -> dict[str, np.ndarray]:
    if not trace.centrality:
        raise ValueError("trace has no per-draw centrality (run with a threshold)")
    out = {}
    for m in cm.HEADLINE:
        c = np.asarray(trace.centrality[m])
        out[m] = c.std(axis=1) if m == "eigencentrality" else c.mean(axis=1)
    return out


def autocorrelation_diagnostics(trace: ChainTrace, max_lag: int = 20) -> DiagnosticsReport:
    N = trace.n_draws
    if N < MIN_DRAWS:
        raise ValueError(f"trace too short for diagnostics: {N} draws, need {MIN_DRAWS}")
    chains = averaged_centrality_chains(trace)
    return DiagnosticsReport(
        n_draws=N,
        max_lag=max_lag,
        band=Z95 / np.sqrt(N),
        measures={m: chain_diagnostics(x, max_lag) for m, x in chains.items()},
        summaries={"nu_mean": float(trace.nu.mean()), "gamma_mean": float(trace.gamma.mean()),
                   "beta_mean": float(trace.beta.mean())},
    )
