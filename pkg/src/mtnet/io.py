"""On-disk formats: observations, chain traces, tables and the run manifest.

Everything except ``manifest.json`` is a pure function of the inputs, so reruns
are byte-identical. Floats are written with ``repr`` (shortest exact round
trip); matrices are flattened column-major to match ``vec``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import centrality as cm
from .gibbs import ChainTrace, ObservationSet

TRACE_COLUMNS = ("draw", "parameter", "index", "value")
SCALARS = ("nu", "gamma", "beta")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    try:
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ValueError(f"{path}: empty table")
    return rows[0], rows[1:]


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


# ----------------------------------------------------------------- observations


def nodes_path(obs_path: Path) -> Path:
    obs_path = Path(obs_path)
    return obs_path.with_name(obs_path.stem + "_nodes.csv")


def write_observations(path: Path, obs: ObservationSet) -> list[Path]:
    """Long format ``t, i, j, value``; labels, when present, go to a ``*_nodes.csv`` sidecar."""
    T, n = obs.T, obs.n
    rows = ((t, i, j, obs.Y[t, i, j]) for t in range(T) for j in range(n) for i in range(n))
    out = [write_table(path, ("t", "i", "j", "value"), rows)]
    if obs.labels is not None:
        out.append(write_table(nodes_path(path), ("index", "label"), enumerate(obs.labels)))
    return out


def read_observations(path: Path) -> ObservationSet:
    header, rows = read_table(path)
    if header != ["t", "i", "j", "value"]:
        raise ValueError(f"{path}: expected header t,i,j,value, got {','.join(header)}")
    if not rows:
        raise ValueError(f"{path}: no observations")
    try:
        idx = np.array([[int(r[0]), int(r[1]), int(r[2])] for r in rows])
        vals = np.array([float(r[3]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed row ({exc})") from None
    T, n = idx[:, 0].max() + 1, max(idx[:, 1].max(), idx[:, 2].max()) + 1
    if len(rows) != T * n * n:
        raise ValueError(f"{path}: expected {T * n * n} entries for T={T}, n={n}, found {len(rows)}")
    Y = np.full((T, n, n), np.nan)
    Y[idx[:, 0], idx[:, 1], idx[:, 2]] = vals
    if np.isnan(Y).any():
        raise ValueError(f"{path}: missing (t, i, j) entries")
    labels = None
    npath = nodes_path(path)
    if npath.exists():
        _, lrows = read_table(npath)
        labels = [r[1] for r in sorted(lrows, key=lambda r: int(r[0]))]
    return ObservationSet(Y, labels=labels)


def write_matrix(path: Path, M: np.ndarray) -> Path:
    n = M.shape[0]
    rows = ((i, j, M[i, j]) for j in range(n) for i in range(n))
    return write_table(path, ("i", "j", "value"), rows)


def read_matrix(path: Path) -> np.ndarray:
    _, rows = read_table(path)
    n = int(round(np.sqrt(len(rows))))
    M = np.zeros((n, n))
    for r in rows:
        M[int(r[0]), int(r[1])] = float(r[2])
    return M


# ---------------------------------------------------------------------- traces


def trace_paths(outdir: Path, chain: int) -> tuple[Path, Path, Path]:
    outdir = Path(outdir)
    return (outdir / f"trace_chain{chain}.csv", outdir / f"trace_chain{chain}.json",
            outdir / f"B_draws_chain{chain}.npy")


def write_trace(outdir: Path, trace: ChainTrace, b_draws_npy: bool = False) -> list[Path]:
    """Long-format trace plus a small JSON header; optional ``.npy`` copy of the B draws."""
    csv_path, meta_path, npy_path = trace_paths(outdir, trace.chain)
    n = trace.n
    scal = {"nu": trace.nu, "gamma": trace.gamma, "beta": trace.beta}

    def rows():
        for k, d in enumerate(trace.draw_index):
            for name in SCALARS:
                yield d, name, 0, scal[name][k]
            if trace.B is not None:
                for idx, v in enumerate(trace.B[k].ravel(order="F")):
                    yield d, "B", idx, v
            for m in cm.MEASURES:
                if m in trace.centrality:
                    for i, v in enumerate(trace.centrality[m][k]):
                        yield d, f"centrality.{m}", i, v

    out = [write_table(csv_path, TRACE_COLUMNS, rows())]
    meta = {"chain": trace.chain, "seed": trace.seed, "burn_in": trace.burn_in, "thin": trace.thin,
            "n": n, "n_draws": trace.n_draws, "threshold": trace.threshold,
            "has_B_draws": trace.B is not None, "B_sum": [float(v) for v in trace.B_sum.ravel(order="F")]}
    out.append(write_json(meta_path, meta))
    if b_draws_npy and trace.B is not None:
        np.save(npy_path, np.ascontiguousarray(trace.B))
        out.append(npy_path)
    return out


def read_trace(csv_path: Path) -> ChainTrace:
    csv_path = Path(csv_path)
    meta_path = csv_path.with_suffix(".json")
    try:
        meta = json.loads(meta_path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read trace header {meta_path}: {exc}") from exc
    header, rows = read_table(csv_path)
    if tuple(header) != TRACE_COLUMNS:
        raise ValueError(f"{csv_path}: not a trace file")
    n, k = meta["n"], meta["n_draws"]
    draws = sorted({int(r[0]) for r in rows})
    if len(draws) != k:
        raise ValueError(f"{csv_path}: header says {k} draws, file has {len(draws)}")
    pos = {d: i for i, d in enumerate(draws)}
    scal = {s: np.zeros(k) for s in SCALARS}
    B = np.zeros((k, n * n)) if meta["has_B_draws"] else None
    cents: dict[str, np.ndarray] = {}
    for d, name, idx, val in rows:
        i, j, v = pos[int(d)], int(idx), float(val)
        if name in scal:
            scal[name][i] = v
        elif name == "B" and B is not None:
            B[i, j] = v
        elif name.startswith("centrality."):
            m = name.split(".", 1)[1]
            cents.setdefault(m, np.zeros((k, n)))[i, j] = v
    Bm = B.reshape(k, n, n, order="F") if B is not None else None
    return ChainTrace(
        draw_index=np.array(draws, dtype=int), nu=scal["nu"], gamma=scal["gamma"], beta=scal["beta"],
        B_sum=np.array(meta["B_sum"]).reshape(n, n, order="F"), burn_in=meta["burn_in"], thin=meta["thin"],
        seed=meta["seed"], chain=meta["chain"], B=Bm, centrality=cents, threshold=meta["threshold"],
    )


def find_traces(directory: Path) -> list[Path]:
    directory = Path(directory)
    found = sorted(directory.glob("trace_chain*.csv"), key=lambda p: int(re.findall(r"\d+", p.stem)[-1]))
    if not found:
        raise OSError(f"no trace_chain*.csv files in {directory}")
    return found


# -------------------------------------------------------------------- manifest


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(outdir: Path, files: Sequence[Path], command: str, config_hash: str, seed: int,
                   status: str = "ok") -> Path:
    """Index of every artifact; the only file that carries a timestamp."""
    outdir = Path(outdir)
    entries = []
    for f in sorted({Path(f) for f in files}):
        entries.append({"path": str(f.relative_to(outdir)), "sha256": sha256_file(f), "bytes": f.stat().st_size,
                        "config_hash": config_hash, "seed": seed})
    return write_json(outdir / "manifest.json", {
        "command": command, "config_hash": config_hash, "seed": seed, "status": status,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"), "artifacts": entries,
    })
