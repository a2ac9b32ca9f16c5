#!/usr/bin/env python3
"""
Command-line entry point
Estimation, positivity diagnostics, simulation studies and the monotonicity
experiment, each writing reproducible CSV/JSON tables and a run manifest
"""
import argparse
import json
import logging
import math
import os
import shutil
import sys
import tempfile
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import joblib
import numpy as np
import pandas as pd
import pydantic
import scipy
import yaml
from dotenv import load_dotenv

from config.env_loader import load_environment_config
from config.run_config import RunConfig, load_run_config, resolve_run_config
from config.settings import Settings, get_settings
from data.loader import export_long, load_csv, preprocess
from eif.diagnostics import inverse_weight_summary
from errors import ConfigError, SurvivalToolError
from estimators.models import CurveEstimate, Method
from estimators.runner import difference_curve, run_method
from inference.bands import pointwise_ci, simultaneous_band
from nuisance.fitting import fit_nuisance, predict_matrices
from simulation.dgp import DgpConfig, simulation_nuisance_config
from simulation.monotonicity import monotonicity_experiment
from simulation.study_engine import run_study

CURVE_COLUMNS = ["method", "arm", "t", "psi", "se", "lo_pw", "hi_pw", "lo_simul", "hi_simul", "monotone"]
FLOAT_FORMAT = "%.10g"

logger = logging.getLogger("cli")


class JsonArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors as a JSON error object with exit code 2"""

    def error(self, message: str):
        err = ConfigError(f"Invalid arguments: {message}", {"usage": self.format_usage().strip()})
        print(json.dumps(err.to_dict(), sort_keys=True), file=sys.stderr)
        emit_run_summary({"status": "failed", "exit_code": err.exit_code, "error": err.to_dict()})
        sys.exit(err.exit_code)


### ---------- Logging and output helpers ----------
def setup_structured_logging(settings: Settings) -> logging.Logger:
    """Setup structured logging with appropriate levels"""
    level = getattr(logging, settings.log_level)
    logging.basicConfig(level=level, format=settings.log_format, force=True)
    for package in ("estimators", "simulation", "nuisance", "inference", "data"):
        logging.getLogger(package).setLevel(level)
    return logging.getLogger("cli")


def emit_run_summary(summary: Dict[str, Any]) -> None:
    """One-line RUN_SUMMARY_JSON for external parsers"""
    print("RUN_SUMMARY_JSON:" + json.dumps(_jsonable(summary), sort_keys=True))


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def atomic_file_write(content: str, target_path: Path) -> None:
    """Write content to a file atomically using temp file and rename"""
    target_path = Path(target_path)
    target_path.parent.mkdir(parents=True, exist_ok=True)
    temp_fd, temp_path = tempfile.mkstemp(suffix=target_path.suffix, prefix=f".{target_path.stem}_",
                                          dir=target_path.parent)
    try:
        with os.fdopen(temp_fd, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        shutil.move(temp_path, target_path)
        logger.debug(f"Atomically wrote file: {target_path}")
    except Exception:
        try:
            os.unlink(temp_path)
        except OSError:
            pass
        raise


def write_table(frame: pd.DataFrame, path: Path) -> Path:
    atomic_file_write(frame.to_csv(index=False, float_format=FLOAT_FORMAT), path)
    logger.info(f"Saved: {path}")
    return path


def write_json(payload: Dict[str, Any], path: Path) -> Path:
    atomic_file_write(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n", path)
    logger.info(f"Saved: {path}")
    return path


def write_outputs(cfg: RunConfig, name: str, frame: pd.DataFrame, payload: Dict[str, Any]) -> List[str]:
    out = Path(cfg.output)
    written = []
    if "csv" in cfg.formats:
        written.append(str(write_table(frame, out / f"{name}.csv")))
    if "json" in cfg.formats:
        written.append(str(write_json(payload, out / f"{name}.json")))
    return written


def write_manifest(cfg: RunConfig, settings: Settings, extra: Optional[Dict[str, Any]] = None) -> Path:
    """Resolved config, package versions and command line: enough to re-run identically"""
    manifest = {
        "command": cfg.command,
        "argv": sys.argv[1:],
        "seed": cfg.seed,
        "config": cfg.model_dump(mode="json"),
        "environment": settings.environment,
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
            "pydantic": pydantic.VERSION,
            "pyyaml": yaml.__version__,
            "joblib": joblib.__version__,
        },
    }
    manifest.update(extra or {})
    return write_json(manifest, Path(cfg.output) / "manifest.json")


def _require_input(cfg: RunConfig) -> str:
    if not cfg.input:
        raise ConfigError(f"The {cfg.command} command needs --input")
    return cfg.input


def _load_dataset(cfg: RunConfig):
    ds = load_csv(_require_input(cfg), cfg.columns)
    if cfg.truncate_at is not None or cfg.rescale > 1:
        ds = preprocess(ds, truncate_at=cfg.truncate_at, rescale=cfg.rescale)
    return ds


### ---------- Commands ----------
def curve_table(estimate: CurveEstimate, cfg: RunConfig) -> pd.DataFrame:
    """Curve with its intervals; methods without EIF-based inference get empty bounds"""
    frame = estimate.to_frame()
    nan = np.full(len(frame), np.nan)
    band = None
    if estimate.method.supports_inference and estimate.eif is not None and cfg.band != "none":
        if cfg.band == "simultaneous":
            band = simultaneous_band(estimate.eif, estimate.psi, cfg.alpha, mc_draws=cfg.mc_draws,
                                     seed=cfg.seed, n_jobs=cfg.threads)
        else:
            band = pointwise_ci(estimate.eif, estimate.psi, cfg.alpha)
    if band is not None:
        bounds = (-1.0, 1.0) if estimate.contrast else (0.0, 1.0)
        intervals = band.to_frame(clip=True, bounds=bounds)
        for col in ("se", "lo_pw", "hi_pw", "lo_simul", "hi_simul"):
            frame[col] = intervals[col].to_numpy()
    else:
        for col in ("se", "lo_pw", "hi_pw", "lo_simul", "hi_simul"):
            frame[col] = nan
    frame["monotone"] = estimate.is_monotone()
    return frame[CURVE_COLUMNS]


def cmd_estimate(cfg: RunConfig, settings: Settings) -> Dict[str, Any]:
    """Fit nuisance once, run every requested method per arm plus the 1-0 contrast"""
    ds = _load_dataset(cfg)
    if cfg.export_long:
        export_long(ds, Path(cfg.output) / "long.csv")
    fit = fit_nuisance(ds, cfg.nuisance)

    tables, curves = [], []
    non_monotone = []
    for name in cfg.methods:
        method = Method.parse(name)
        per_arm = {}
        for a in cfg.arms:
            estimate = run_method(method, fit, ds, a, **cfg.targeting.to_kwargs())
            per_arm[a] = estimate
            tables.append(curve_table(estimate, cfg))
            curves.append(estimate.to_dict())
            if not estimate.is_monotone():
                non_monotone.append(f"{method.value}:{a}")
        if cfg.difference and set(per_arm) == {0, 1}:
            contrast = difference_curve(per_arm[1], per_arm[0])
            tables.append(curve_table(contrast, cfg))
            curves.append(contrast.to_dict())

    table = pd.concat(tables, ignore_index=True)
    if non_monotone:
        logger.warning(f"Non-monotone curves: {', '.join(non_monotone)}")
    dataset = {"n": ds.n, "t_max": ds.t_max, "dropped_rows": ds.dropped_rows,
               "covariates": list(ds.covariate_names)}
    payload = {"dataset": dataset, "alpha": cfg.alpha, "band": cfg.band,
               "curves": curves, "table": table.to_dict(orient="records")}
    written = write_outputs(cfg, "curves", table, payload)
    write_manifest(cfg, settings, {"dataset": dataset})
    return {"outputs": written, "n": ds.n, "t_max": ds.t_max, "non_monotone": non_monotone}


def cmd_diagnose(cfg: RunConfig, settings: Settings) -> Dict[str, Any]:
    """Distribution of the inverse weights 1 / (g_a S_Ac(t)) per arm"""
    ds = _load_dataset(cfg)
    fit = fit_nuisance(ds, cfg.nuisance)
    tables = []
    for a in cfg.arms:
        summary = inverse_weight_summary(predict_matrices(fit, ds, a))
        summary.insert(0, "arm", a)
        tables.append(summary)
    table = pd.concat(tables, ignore_index=True)
    written = write_outputs(cfg, "inverse_weights", table, {"table": table.to_dict(orient="records")})
    write_manifest(cfg, settings, {"dataset": {"n": ds.n, "t_max": ds.t_max, "dropped_rows": ds.dropped_rows}})
    return {"outputs": written, "n": ds.n, "max_weight": float(table["Max"].max())}


def cmd_simulate(cfg: RunConfig, settings: Settings) -> Dict[str, Any]:
    """Monte-Carlo study on the simulated design"""
    dgp = DgpConfig(n=cfg.study.n, seed=cfg.seed, t_max=cfg.study.t_max)
    nuisance = simulation_nuisance_config() if cfg.study.use_simulation_basis else cfg.nuisance
    report = run_study(dgp, cfg.methods, cfg.study.reps, arms=cfg.arms, nuisance=nuisance, alpha=cfg.alpha,
                       coverage=cfg.study.coverage, mc_draws=cfg.study.band_draws, threads=cfg.threads,
                       targeting=cfg.targeting.to_kwargs(), oracle_draws=cfg.study.oracle_draws)
    out = Path(cfg.output)
    written = [str(write_table(report.metrics, out / "study_metrics.csv")),
               str(write_table(report.summary, out / "study_summary.csv")),
               str(write_table(report.followup_frame(), out / "study_followup.csv"))]
    if "json" in cfg.formats:
        written.append(str(write_json(report.to_dict(), out / "study.json")))
    write_manifest(cfg, settings, {"dgp": dgp.to_dict()})
    return {"outputs": written, "reps": report.reps, "failures": len(report.failures),
            "monotone": {f"{r.method}:{r.arm}": r.monotone_fraction for r in report.summary.itertuples()}}


def cmd_monotonicity(cfg: RunConfig, settings: Settings) -> Dict[str, Any]:
    """Monotone-curve percentages under repeated subsampling of the input data"""
    ds = _load_dataset(cfg)
    table = monotonicity_experiment(ds, cfg.monotonicity.sizes, cfg.monotonicity.reps, cfg.methods,
                                    seed=cfg.seed, arms=cfg.arms, nuisance=cfg.nuisance,
                                    targeting=cfg.targeting.to_kwargs())
    written = write_outputs(cfg, "monotonicity", table, {"table": table.to_dict(orient="records")})
    write_manifest(cfg, settings, {"dataset": {"n": ds.n, "t_max": ds.t_max}})
    return {"outputs": written}


COMMANDS: Dict[str, Callable[[RunConfig, Settings], Dict[str, Any]]] = {
    "estimate": cmd_estimate,
    "diagnose": cmd_diagnose,
    "simulate": cmd_simulate,
    "monotonicity": cmd_monotonicity,
}


### ---------- Argument parsing ----------
def _split(values: Optional[List[str]]) -> Optional[List[str]]:
    """Accept repeated flags and comma-separated lists"""
    if not values:
        return None
    return [v.strip() for item in values for v in item.split(",") if v.strip()]


def build_parser() -> JsonArgumentParser:
    common = JsonArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON run config; flags override its values")
    common.add_argument("--output", help="Output directory (default: OUTPUT_DIR or runouts)")
    common.add_argument("--seed", type=int, help="RNG seed for bands, studies and subsampling")
    common.add_argument("--threads", type=int, help="Worker count; results do not depend on it")
    common.add_argument("--method", action="append", dest="methods",
                        help=f"Estimator tag, repeatable or comma-separated: {', '.join(m.value for m in Method)}")
    common.add_argument("--arm", action="append", type=int, dest="arms", choices=[0, 1],
                        help="Treatment arm, repeatable (default: both)")
    common.add_argument("--alpha", type=float, help="Error level of the intervals (default: 0.05)")
    common.add_argument("--format", action="append", dest="formats", choices=["csv", "json"],
                        help="Output format, repeatable (default: csv and json)")
    common.add_argument("--step-bound", type=float, help="One-step TMLE step norm bound (default: 0.01)")
    common.add_argument("--stop-norm", type=float, help="One-step TMLE stopping norm (default: 0.001)")
    common.add_argument("--max-iter", type=int, help="One-step TMLE iteration cap (default: 500)")

    data = JsonArgumentParser(add_help=False)
    data.add_argument("--input", help="Input CSV")
    data.add_argument("--time-col", help="Follow-up time column (default: time)")
    data.add_argument("--event-col", help="Event indicator column (default: event)")
    data.add_argument("--treatment-col", help="Treatment column (default: treatment)")
    data.add_argument("--id-col", help="Subject id column (default: row number)")
    data.add_argument("--covariates", help="Comma-separated covariate columns (default: all others)")
    data.add_argument("--discretize", choices=["none", "ceil"], help="Map non-integer times up (ceil)")
    data.add_argument("--truncate-at", type=float, help="Administrative censoring time")
    data.add_argument("--rescale", type=int, help="Integer time-unit divisor applied after truncation")

    parser = JsonArgumentParser(
        description="Counterfactual survival curves: estimation, diagnostics and simulation studies",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # One-step TMLE with a simultaneous band for the treated arm
  python cli.py estimate --input data.csv --method moss-l2 --arm 1 --band simultaneous

  # Desk-scale simulation study
  python cli.py simulate --config scenarios/dgp_n100.yml --threads 4
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    estimate = sub.add_parser("estimate", parents=[common, data], help="Estimate curves and bands")
    estimate.add_argument("--band", choices=["none", "pointwise", "simultaneous"], help="Interval type")
    estimate.add_argument("--mc-draws", type=int, help="Monte-Carlo draws for the simultaneous quantile")
    estimate.add_argument("--no-difference", action="store_const", const=False, dest="difference",
                          help="Skip the treatment-minus-control curve")
    estimate.add_argument("--export-long", action="store_const", const=True, dest="export_long",
                          help="Also write the person-time table long.csv")

    sub.add_parser("diagnose", parents=[common, data], help="Inverse-weight distribution per arm")

    simulate = sub.add_parser("simulate", parents=[common], help="Monte-Carlo study on simulated data")
    simulate.add_argument("--n", type=int, help="Sample size per replicate")
    simulate.add_argument("--reps", type=int, help="Number of replicates")
    simulate.add_argument("--no-coverage", action="store_const", const=False, dest="coverage",
                          help="Skip band computation inside the study")

    mono = sub.add_parser("monotonicity", parents=[common, data], help="Monotone percentages by subsample size")
    mono.add_argument("--sizes", help="Comma-separated subsample sizes")
    mono.add_argument("--reps", type=int, help="Subsamples per size")
    return parser


def flags_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Nested override dict; None means not given"""
    get = lambda name: getattr(args, name, None)  # noqa: E731
    covariates = get("covariates")
    sizes = get("sizes")
    flags = {
        "command": args.command,
        "input": get("input"),
        "output": get("output"),
        "seed": get("seed"),
        "threads": get("threads"),
        "methods": _split(get("methods")),
        "arms": get("arms"),
        "alpha": get("alpha"),
        "formats": get("formats"),
        "band": get("band"),
        "mc_draws": get("mc_draws"),
        "difference": get("difference"),
        "export_long": get("export_long"),
        "truncate_at": get("truncate_at"),
        "rescale": get("rescale"),
        "columns": {
            "time": get("time_col"),
            "event": get("event_col"),
            "treatment": get("treatment_col"),
            "id": get("id_col"),
            "covariates": [c.strip() for c in covariates.split(",") if c.strip()] if covariates else None,
            "discretize": get("discretize"),
        },
        "targeting": {
            "step_bound": get("step_bound"),
            "stop_norm": get("stop_norm"),
            "max_iter": get("max_iter"),
        },
    }
    if args.command == "simulate":
        flags["study"] = {"n": get("n"), "reps": get("reps"), "coverage": get("coverage")}
    if args.command == "monotonicity":
        flags["monotonicity"] = {
            "sizes": [int(s) for s in sizes.split(",") if s.strip()] if sizes else None,
            "reps": get("reps"),
        }
    return flags


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    start = time.time()
    summary: Dict[str, Any] = {"command": args.command}
    try:
        load_environment_config()
        settings = get_settings()
        setup_structured_logging(settings)
        logger.info(f"Starting {args.command} in {settings.environment} environment")

        file_values = load_run_config(args.config) if args.config else {}
        cfg = resolve_run_config(file_values, flags_from_args(args), settings)
        summary.update({"seed": cfg.seed, "methods": cfg.methods, "output": cfg.output})

        summary.update(COMMANDS[cfg.command](cfg, settings))
        summary.update({"status": "success", "exit_code": 0,
                        "total_runtime_ms": int((time.time() - start) * 1000)})
        emit_run_summary(summary)
        logger.info(f"{args.command} completed successfully")
        return 0
    except SurvivalToolError as e:
        logger.error(f"{args.command} failed: {e}")
        print(json.dumps(_jsonable(e.to_dict()), sort_keys=True), file=sys.stderr)
        summary.update({"status": "failed", "exit_code": e.exit_code, "error": e.to_dict()})
        emit_run_summary(summary)
        return e.exit_code
    except KeyboardInterrupt:
        print("Interrupted by user", file=sys.stderr)
        return 130
    except Exception as e:
        logger.error(f"{args.command} failed unexpectedly: {e}", exc_info=True)
        error = {"error": type(e).__name__, "message": str(e), "exit_code": 1, "context": {}}
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
        summary.update({"status": "failed", "exit_code": 1, "error": error})
        emit_run_summary(summary)
        return 1


if __name__ == "__main__":
    sys.exit(main())
