"""Rolling pairwise Granger-causality F statistics as an observed matrix sequence.

For each window of returns and each ordered pair ``(u, v)`` the entry
``Y_t[u, v]`` is the F statistic for "the lags of series u help predict
series v". Both regressions carry an intercept; with ``N = w - p`` usable rows
the statistic has ``(p, N - 2p - 1)`` degrees of freedom under the null.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .gibbs import ObservationSet

log = logging.getLogger(__name__)

# a column of R from the QR factor below this fraction of the largest is treated as collinear
RANK_TOL = 1e-10


@dataclass
class PricePanel:
    """Aligned multi-series panel; rows are periods, columns are series."""

    values: np.ndarray  # (L, m)
    labels: list[str]
    dates: list[str] | None = None
    is_returns: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("panel values must be a 2-D (periods x series) array")
        if len(self.labels) != self.values.shape[1]:
            raise ValueError(f"{len(self.labels)} labels for {self.values.shape[1]} series")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("panel contains missing or non-finite values")
        if self.dates is not None and len(self.dates) != self.values.shape[0]:
            raise ValueError("dates must have one entry per period")

    @property
    def L(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GrangerConfig:
    p: int = 1
    w: int = 52
    log_returns: bool = True

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("lag order p must be a positive integer")
        if self.w < 2 * self.p + 2:
            raise ValueError(f"window w={self.w} too short for lag p={self.p} (need w >= 2p + 2)")
        if self.w - 3 * self.p - 1 < 1:
            raise ValueError(f"window w={self.w} leaves no residual degrees of freedom at lag p={self.p}")

    @property
    def df_denominator(self) -> int:
        return residual_dof(self.w, self.p)


@dataclass(frozen=True)
class GrangerStat:
    value: float
    degenerate: bool = False


@dataclass
class GrangerSequence:
    obs: ObservationSet
    degenerate: np.ndarray  # (T, m, m) bool sidecar mask
    window_ends: np.ndarray  # index of the last return row in each window
    config: GrangerConfig = field(default_factory=GrangerConfig)


def residual_dof(w: int, p: int) -> int:
    """Residual degrees of freedom of the unrestricted regression on a window of length ``w``."""
    return (w - p) - (2 * p + 1)


def f_critical(p: int, dof: int, level: float = 0.05) -> float:
    """Upper ``level`` quantile of ``F(p, dof)``."""
    return float(stats.f.isf(level, p, dof))


# -------------------------------------------------------------------- loading


def load_price_csv(path: str | Path, date_column: str | None = "auto") -> PricePanel:
    """Read a delimited price file: one header row of labels, one row per period.

    A date column is used only for ordering labels in the output; it is
    recognized by name (``date``, case-insensitive) when ``date_column="auto"``.
    Rows with any empty or non-numeric price are dropped with a warning.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            sample = fh.read(4096)
            fh.seek(0)
            try:
                dialect = csv.Sniffer().sniff(sample, delimiters=",;\t")
            except csv.Error:
                dialect = csv.excel
            rows = list(csv.reader(fh, dialect))
    except OSError as exc:
        raise OSError(f"cannot read price file {path}: {exc}") from exc
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if date_column == "auto":
        date_idx = next((i for i, h in enumerate(header) if h.lower() == "date"), None)
    elif date_column is None:
        date_idx = None
    else:
        if date_column not in header:
            raise ValueError(f"{path}: date column {date_column!r} not in header")
        date_idx = header.index(date_column)
    cols = [i for i in range(len(header)) if i != date_idx]
    labels = [header[i] for i in cols]
    values, dates, dropped = [], [], 0
    for lineno, row in enumerate(rows[1:], start=2):
        if not any(c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            values.append([float(row[i]) for i in cols])
        except ValueError:
            dropped += 1
            continue
        if date_idx is not None:
            dates.append(row[date_idx].strip())
    if dropped:
        log.warning("%s: dropped %d row(s) with missing or non-numeric prices", path, dropped)
    if not values:
        raise ValueError(f"{path}: no complete rows")
    return PricePanel(np.array(values), labels, dates if date_idx is not None else None)


# ---------------------------------------------------------------- transforms


def to_returns(panel: PricePanel) -> PricePanel:
    """Log returns ``ln(P_t / P_{t-1})``; the result has one fewer period."""
    bad = np.where((panel.values <= 0).any(axis=0))[0]
    if bad.size:
        raise ValueError(f"nonpositive price in series {panel.labels[bad[0]]!r}")
    r = np.diff(np.log(panel.values), axis=0)
    return PricePanel(r, list(panel.labels), panel.dates[1:] if panel.dates else None, is_returns=True)


def _lag_matrix(z: np.ndarray, p: int) -> np.ndarray:
    """Columns ``z_{t-1}, ..., z_{t-p}`` for ``t = p .. len(z)-1``; works on trailing axis stacks."""
    N = z.shape[-1] - p
    return np.stack([z[..., p - k: p - k + N] for k in range(1, p + 1)], axis=-1)


def _rss_and_rank(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares residual sums via batched QR, and a full-rank flag per problem."""
    Q, R = np.linalg.qr(X)
    d = np.abs(np.diagonal(R, axis1=-2, axis2=-1))
    full = d.min(axis=-1) > RANK_TOL * np.maximum(d.max(axis=-1), 1e-300)
    fitted = Q @ (np.swapaxes(Q, -1, -2) @ y[..., None])
    resid = y - fitted[..., 0]
    return (resid * resid).sum(axis=-1), full


def granger_f(x, y, p: int = 1) -> GrangerStat:
    """F statistic for "lags of x help predict y" (intercept in both regressions)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D series of equal length")
    if len(y) < 2 * p + 2 or residual_dof(len(y), p) < 1:
        raise ValueError(f"series of length {len(y)} too short for lag {p}")
    F, deg = _granger_block(x[None, :], y, p)
    return GrangerStat(float(F[0]), bool(deg[0]))


def _granger_block(X: np.ndarray, y: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """F statistics of every row of ``X`` (candidate causes) against one target ``y``."""
    N = len(y) - p
    target = y[p:]
    ylags = _lag_matrix(y, p)
    ones = np.ones((N, 1))
    Xr = np.hstack([ones, ylags])
    rss_r, full_r = _rss_and_rank(Xr, target)
    Xu = np.concatenate([np.broadcast_to(Xr, (X.shape[0], N, p + 1)), _lag_matrix(X, p)], axis=-1)
    rss_u, full_u = _rss_and_rank(Xu, np.broadcast_to(target, (X.shape[0], N)))
    dof = N - 2 * p - 1
    scale = np.maximum(np.abs(target).max(), 1e-300) ** 2 * N
    degenerate = ~full_u | ~full_r | (rss_u <= 1e-14 * scale)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = ((rss_r - rss_u) / p) / (rss_u / dof)
    F = np.where(degenerate, 0.0, np.maximum(F, 0.0))
    return F, degenerate


def build_observation_sequence(panel: PricePanel, config: GrangerConfig = GrangerConfig()) -> GrangerSequence:
    """One F-statistic matrix per rolling window; ``T = L' - w + 1`` with ``L'`` the returns length."""
    data = to_returns(panel) if config.log_returns and not panel.is_returns else panel
    Z = data.values
    Lp, m = Z.shape
    T = Lp - config.w + 1
    if T < 1:
        raise ValueError(f"panel of {Lp} usable periods is shorter than the window w={config.w}")
    Y = np.zeros((T, m, m))
    mask = np.zeros((T, m, m), dtype=bool)
    for t in range(T):
        win = Z[t: t + config.w].T  # (m, w)
        for v in range(m):
            F, deg = _granger_block(win, win[v], config.p)
            Y[t, :, v] = F
            mask[t, :, v] = deg
        np.fill_diagonal(Y[t], 0.0)
        np.fill_diagonal(mask[t], False)
    n_deg = int(mask.sum())
    if n_deg:
        log.warning("%d degenerate pair-window statistic(s) set to 0 and flagged", n_deg)
    ends = np.arange(config.w - 1, Lp)
    labels = data.labels
    return GrangerSequence(ObservationSet(Y, labels=list(labels)), mask, ends, config)
