"""Command-line front end.

Every command reads an INI config (a path or a bundled preset name), applies
the flag overrides and writes plot-ready CSV/JSON into ``--out``. The
effective config is echoed into each file: as a ``config`` key in JSON and as
``#`` comment lines at the top of CSV files.

Exit codes: 0 success, 1 failed checks, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path
from typing import Optional

from . import experiments
from .config import ConfigError, ExperimentConfig, load_config
from .montecarlo import run_simulation

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2

HISTOGRAM_UNITS = {"theta_I": "deg", "theta_A": "deg", "h_PN": "1", "h": "1"}


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def write_json(path: Path, doc: dict, cfg: ExperimentConfig) -> None:
    body = {"config": cfg.echo(), **doc}
    path.write_text(json.dumps(_json_safe(body), indent=2) + "\n")


def write_csv(path: Path, rows: list[dict], cfg: ExperimentConfig, columns: Optional[list] = None) -> None:
    columns = columns or (list(rows[0]) if rows else [])
    with path.open("w", newline="") as fh:
        for line in json.dumps(cfg.echo(), indent=1).splitlines():
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in (row[c] for c in columns)])


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = cfg.with_overrides(seed=args.seed, trials=args.trials, workers=args.workers)
    if getattr(args, "tolerance_scale", None) is not None or getattr(args, "mixture", None) is not None:
        v = cfg.validate
        v = dataclasses.replace(
            v,
            tolerance_scale=v.tolerance_scale if args.tolerance_scale is None else args.tolerance_scale,
            mixture_record=v.mixture_record if args.mixture is None else args.mixture,
        )
        if v.tolerance_scale < 0:
            raise ConfigError("--tolerance-scale must be non-negative")
        cfg = dataclasses.replace(cfg, validate=v)
    return cfg


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> int:
    g = cfg.geometry
    h_th = cfg.analysis.threshold_for(g.z_w, g.z_a)
    rep = run_simulation(g, cfg.environment, cfg.simulation.n_trials, cfg.simulation.seed, h_th,
                         cfg.simulation.workers, cfg.em)
    write_json(out / "report.json", rep.to_dict(), cfg)
    for name, hist in rep.histograms.items():
        unit = HISTOGRAM_UNITS[name]
        dens = "density_1" if unit == "1" else f"density_per_{unit}"
        rows = [
            {f"lo_{unit}": float(lo), f"hi_{unit}": float(hi), "count_1": int(c), dens: float(d)}
            for lo, hi, c, d in zip(hist.edges[:-1], hist.edges[1:], hist.counts, hist.density)
        ]
        write_csv(out / f"hist_{name}.csv", rows, cfg)
    return EXIT_OK


def cmd_fit_aoa(cfg: ExperimentConfig, out: Path) -> int:
    rows, summary = experiments.aoa_fit_table(cfg)
    if summary["regression"] != "fitted":
        print(f"notice: regression {summary['regression']}", file=sys.stderr)
    for r in rows:
        if r["status"] != "ok":
            print(f"warning: U={r['wind_speed_mps']:g}: {r['status']}", file=sys.stderr)
    write_csv(out / "fit_aoa.csv", rows, cfg)
    write_json(out / "fit_aoa.json", {"rows": rows, "summary": summary}, cfg)
    return EXIT_OK


BMM_COLUMNS = [
    ("wind_speed", "wind_speed_mps"), ("z_w", "z_w_m"), ("z_a", "z_a_m"), ("theta_fov", "theta_fov_deg"),
    ("w1", "w1_1"), ("alpha1", "alpha1_1"), ("beta1", "beta1_1"), ("alpha2", "alpha2_1"), ("beta2", "beta2_1"),
    ("loglik", "loglik_1"), ("n_samples", "n_samples_1"), ("iterations", "iterations_1"),
    ("converged", "converged"), ("collapsed", "collapsed"), ("monotone", "monotone"),
    ("ks", "ks_1"), ("r2", "r2_1"),
]


def cmd_fit_bmm(cfg: ExperimentConfig, out: Path) -> int:
    records = []
    for cell in experiments.bmm_cells(cfg):
        rec = cell.record()
        if not rec["converged"]:
            print(f"warning: EM did not converge for U={rec['wind_speed']:g}, z_a={rec['z_a']:g} "
                  f"after {rec['iterations']} iterations", file=sys.stderr)
        records.append(rec)
    write_json(out / "bmm.json", {"mixtures": records}, cfg)
    rows = [{col: (int(r[k]) if isinstance(r[k], bool) else r[k]) for k, col in BMM_COLUMNS} for r in records]
    write_csv(out / "bmm.csv", rows, cfg)
    return EXIT_OK


OUTAGE_COLUMNS = [
    "wind_speed_mps", "z_w_m", "z_a_m", "theta_fov_deg", "h_L_1", "A0_1", "p_tir_1", "p_cap_1", "p_int_1",
    "p_int_mc_1", "p_int_stderr_1", "h_th_1", "p_out_closed_1", "p_out_mc_1", "mc_stderr_1", "bmm_ks_1",
    "valid", "agree",
]


def cmd_outage_curve(cfg: ExperimentConfig, out: Path) -> int:
    try:
        rows = [cell.row() for cell in experiments.outage_cells(cfg)]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_csv(out / "outage_curve.csv", rows, cfg, OUTAGE_COLUMNS)
    return EXIT_OK


def cmd_pathloss(cfg: ExperimentConfig, out: Path) -> int:
    write_csv(out / "pathloss.csv", experiments.pathloss_rows(cfg), cfg)
    return EXIT_OK


def cmd_validate(cfg: ExperimentConfig, out: Path) -> int:
    try:
        checks = experiments.validation_suite(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = [c.as_dict() for c in checks]
    failed = [c for c in checks if not c.passed]
    write_csv(out / "validate.csv", rows, cfg, ["check", "value", "limit", "passed", "detail"])
    write_json(out / "validate.json",
               {"passed": not failed, "n_checks": len(checks), "n_failed": len(failed), "checks": rows}, cfg)
    for c in failed:
        print(f"FAIL {c.name}: value={c.value:.6g} limit={c.limit:.6g} {c.detail}".rstrip(), file=sys.stderr)
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


COMMANDS = {
    "simulate": (cmd_simulate, "Monte Carlo run of one link with fitted laws and histograms"),
    "fit-aoa": (cmd_fit_aoa, "per-wind Weibull fits of the arrival angle and their linear regression"),
    "fit-bmm": (cmd_fit_bmm, "Beta-mixture fit of the normalized pointing loss per (U, z_a) cell"),
    "outage-curve": (cmd_outage_curve, "closed-form and Monte Carlo outage over the analysis grid"),
    "pathloss": (cmd_pathloss, "path loss with bubble scattering over wind and depth grids"),
    "validate": (cmd_validate, "run the cross-check suite; exit 1 when any check fails"),
}


def _int_arg(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        f = float(text)
    except ValueError:
        f = math.nan
    if not f.is_integer():
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(f)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="w2alink", description="Water-to-air optical link channel toolkit.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--config", help="config file or preset name (fig2, fig3, fig6)")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument("--seed", type=_int_arg)
        sp.add_argument("--trials", type=_int_arg)
        sp.add_argument("--workers", type=_int_arg)
        if name == "validate":
            sp.add_argument("--mixture", help="mixture record JSON to check against fresh samples")
            sp.add_argument("--tolerance-scale", type=float, help="multiplier on every check tolerance")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn = COMMANDS[args.command][0]
    try:
        cfg = _load(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return fn(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
