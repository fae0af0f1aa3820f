"""Batch command line: ``simulate``, ``fit``, ``granger``, ``report``.

Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import centrality as cm
from . import io
from .config import ConfigError, RunConfig, config_from_dict, config_hash, dump_config, load_config
from .diagnostics import autocorrelation_diagnostics
from .gibbs import SamplerError, attach_centrality, posterior_centrality, posterior_mean_B, run_chains
from .granger import build_observation_sequence, f_critical, load_price_csv
from .linalg import NotPositiveDefinite
from .synth import SyntheticScenario, generate_observations, generate_truth, run_simulation_study

log = logging.getLogger("mtnet")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class PartialFailure(Exception):
    """Some cells or chains failed; outputs were written and marked."""


# -------------------------------------------------------------------- commands


def _resolve_threshold(cfg: RunConfig, fallback: float) -> float:
    th = cfg.threshold
    if th == "f-critical":
        g = cfg.granger.build()
        return f_critical(g.p, g.df_denominator)
    if th == "auto":
        return fallback
    return float(th)


def cmd_simulate(cfg: RunConfig, out: Path, threads: int) -> list[Path]:
    scn = cfg.scenario.build(cfg.seed)
    grid = cfg.study.build()
    tau = _resolve_threshold(cfg, scn.default_threshold)
    result = run_simulation_study(grid, scn, cfg.gibbs.build(cfg.seed), cfg.hyper.kwargs(), tau, threads)
    files = []
    cols = list(result.rows[0].keys())
    for r in result.rows[1:]:
        cols += [c for c in r if c not in cols]
    files.append(io.write_table(out / "results.csv", cols, ([r.get(c, "") for c in cols] for r in result.rows)))
    for m in cm.HEADLINE:
        files.append(io.write_table(
            out / f"error_curve_{m}.csv",
            ("nu", "beta_mode", "status", "raw_mae", "denoised_mae", "true_mean", "raw_mean", "denoised_mean"),
            ([r["nu"], r["beta_mode"], r["status"], r.get(f"{m}_raw_mae", ""), r.get(f"{m}_denoised_mae", ""),
              r.get(f"{m}_true", ""), r.get(f"{m}_raw", ""), r.get(f"{m}_denoised", "")] for r in result.rows)))
    files.append(io.write_table(
        out / "chain_averages.csv", ("nu", "beta_mode", "status", "gamma_mean", "beta_mean", "nu_mean"),
        ([r["nu"], r["beta_mode"], r["status"], r.get("gamma_mean", ""), r.get("beta_mean", ""),
          r.get("nu_mean", "")] for r in result.rows)))
    if cfg.output.emit_observations:
        # same substreams as the study driver, so a later `fit` sees the scored data
        truth_rng = np.random.default_rng(np.random.SeedSequence(scn.seed, spawn_key=(0,)))
        _, B_true = generate_truth(scn, truth_rng)
        files.append(io.write_matrix(out / "data" / "truth_B.csv", B_true))
        for i, nu in enumerate(grid.nus):
            rng = np.random.default_rng(np.random.SeedSequence(scn.seed, spawn_key=(1, i)))
            obs = generate_observations(B_true, SyntheticScenario(**{**scn.__dict__, "nu_true": nu}), rng)
            files += io.write_observations(out / "data" / f"observations_nu{i}.csv", obs)
    failed = [r for r in result.rows if r["status"] != "ok"]
    if failed:
        raise PartialFailure(f"{len(failed)} of {len(result.rows)} cells failed", files)
    return files


def cmd_fit(cfg: RunConfig, out: Path, threads: int) -> list[Path]:
    obs = io.read_observations(Path(cfg.paths.input))
    hyper = cfg.hyper.build(obs.n, cfg.beta())
    traces = run_chains(obs, hyper, cfg.gibbs.build(cfg.seed, store_b_draws=True), threads=threads)
    Bhat = posterior_mean_B(traces)
    if cfg.threshold == "auto":
        tau = cm.two_mode_threshold(Bhat[~np.eye(obs.n, dtype=bool)])
    else:
        tau = _resolve_threshold(cfg, 0.0)
    traces = [attach_centrality(t, tau) for t in traces]
    files = []
    for t in traces:
        files += io.write_trace(out, t, cfg.output.b_draws_npy)
    files.append(io.write_matrix(out / "posterior_mean_B.csv", Bhat))
    K = np.mean([t.kron_norm_mean for t in traces], axis=0)
    files.append(io.write_table(out / "kron_normalized.csv", ("row", "col", "value"),
                                ((i, j, K[i, j]) for j in range(K.shape[0]) for i in range(K.shape[0]))))
    sc = posterior_centrality(traces)
    labels = obs.labels or [str(i) for i in range(obs.n)]
    files.append(io.write_table(out / "centrality.csv", ("node", "label", *cm.MEASURES),
                                ([i, labels[i], *(getattr(sc, m)[i] for m in cm.MEASURES)] for i in range(obs.n))))
    files.append(io.write_table(
        out / "chain_summary.csv", ("chain", "draws", "nu_mean", "gamma_mean", "beta_mean", "threshold"),
        ([t.chain, t.n_draws, t.nu.mean(), t.gamma.mean(), t.beta.mean(), tau] for t in traces)))
    return files


def cmd_granger(cfg: RunConfig, out: Path, threads: int) -> list[Path]:
    panel = load_price_csv(Path(cfg.paths.input))
    seq = build_observation_sequence(panel, cfg.granger.build())
    files = io.write_observations(out / "observations.csv", seq.obs)
    T, m, _ = seq.degenerate.shape
    files.append(io.write_table(out / "degenerate_mask.csv", ("t", "i", "j"),
                                ((t, i, j) for t in range(T) for j in range(m) for i in range(m)
                                 if seq.degenerate[t, i, j])))
    source = panel.dates[1:] if (panel.dates and seq.config.log_returns) else panel.dates
    files.append(io.write_table(out / "windows.csv", ("t", "end_row", "end_date"),
                                ((t, int(e), source[e] if source else "") for t, e in enumerate(seq.window_ends))))
    g = cfg.granger.build()
    files.append(io.write_table(out / "f_critical.csv", ("p", "df_denominator", "level", "value"),
                                [(g.p, g.df_denominator, 0.05, f_critical(g.p, g.df_denominator))]))
    return files


def cmd_report(cfg: RunConfig, out: Path, threads: int) -> list[Path]:
    files, acf_rows, summary_rows, lines = [], [], [], []
    for path in io.find_traces(Path(cfg.paths.input)):
        tr = io.read_trace(path)
        rep = autocorrelation_diagnostics(tr, cfg.report.max_lag)
        for m, d in rep.measures.items():
            if d.acf is not None:
                acf_rows += [(tr.chain, m, k, d.acf[k], rep.band) for k in range(len(d.acf))]
            summary_rows.append((tr.chain, m, rep.n_draws, rep.band, d.passed, d.degenerate, d.lags_outside))
        lines.append(f"chain {tr.chain}: {rep.verdict()}")
        lines.append(f"  means: nu={rep.summaries['nu_mean']:.6g} gamma={rep.summaries['gamma_mean']:.6g} "
                     f"beta={rep.summaries['beta_mean']:.6g}")
        files.append(io.write_table(
            out / f"trace_paths_chain{tr.chain}.csv", ("draw", "nu", "gamma", "beta"),
            zip(tr.draw_index, tr.nu, tr.gamma, tr.beta)))
    files.append(io.write_table(out / "acf.csv", ("chain", "measure", "lag", "acf", "band"), acf_rows))
    files.append(io.write_table(
        out / "diagnostics.csv", ("chain", "measure", "n_draws", "band", "passed", "degenerate", "lags_outside"),
        summary_rows))
    report = out / "report.txt"
    report.write_text("\n".join(lines) + "\n")
    files.append(report)
    return files


COMMAND_FUNCS = {"simulate": cmd_simulate, "fit": cmd_fit, "granger": cmd_granger, "report": cmd_report}


# ------------------------------------------------------------------------ entry


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mtnet", description="Denoise noisy network sequences with a matrix-t model.")
    p.add_argument("command", choices=sorted(COMMAND_FUNCS))
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--input", help="input path (overrides paths.input)")
    p.add_argument("--out", help="output directory (overrides paths.output)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--threads", type=int, default=1, help="worker processes for independent chains")
    p.add_argument("--sweeps", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--beta-mode", help="fixed[:v] | jeffreys | inverse-gamma[:a,b]")
    p.add_argument("--threshold", help="number, 'auto' or 'f-critical'")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _apply_overrides(args) -> RunConfig:
    if args.config is not None:
        base = load_config(args.config, command=args.command)
        data = dataclasses.asdict(base)
    else:
        data = {"command": args.command}
    data.setdefault("paths", {})
    data.setdefault("gibbs", {})
    if args.input is not None:
        data["paths"]["input"] = args.input
    if args.out is not None:
        data["paths"]["output"] = args.out
    if args.seed is not None:
        data["seed"] = args.seed
    if args.sweeps is not None:
        data["gibbs"]["sweeps"] = args.sweeps
    if args.burn_in is not None:
        data["gibbs"]["burn_in"] = args.burn_in
    if args.beta_mode is not None:
        data["beta_mode"] = args.beta_mode
    if args.threshold is not None:
        th = args.threshold
        try:
            th = float(th)
        except ValueError:
            pass
        data["threshold"] = th
    return config_from_dict(data, source=str(args.config) if args.config else "<cli>", command=args.command)


def run(cfg: RunConfig, threads: int = 1) -> tuple[int, Path]:
    """Execute one command and write its manifest; returns ``(exit code, output dir)``."""
    out = Path(cfg.paths.output)
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)
    cfg_file = out / "config.yaml"
    cfg_file.write_text(dump_config(cfg))
    status, code, files = "ok", EXIT_OK, []
    try:
        files = COMMAND_FUNCS[cfg.command](cfg, out, threads)
    except PartialFailure as exc:
        log.error("%s", exc.args[0])
        files, status, code = exc.args[1], "partial", EXIT_NUMERICAL
    io.write_manifest(out, [cfg_file, *files], cfg.command, chash, cfg.seed, status)
    return code, out


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _apply_overrides(args)
        code, out = run(cfg, max(1, args.threads))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SamplerError, NotPositiveDefinite, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if code == EXIT_OK:
        print(f"{cfg.command}: wrote {out}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
