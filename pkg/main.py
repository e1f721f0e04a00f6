"""
Command-line entry point for the non-Gaussianity certification toolkit.
"""
import sys
import os
import logging
import argparse
import traceback
from typing import Any, Dict, List, Optional, Tuple

# Add the current directory to Python path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np
from pydantic import ValidationError

from config import (
    APP_NAME, APP_VERSION, DATABASE_PATH, SCAN_PRESETS, SCAN_CHUNK_ALPHA, BATCH_SIZE, DEFAULT_JOBS,
    EXIT_OK, EXIT_FAILURE, EXIT_INPUT_ERROR,
)
from models import (
    AnalysisConfig, SourceConfig, CorrelationPoint, StreamFormat, Selection, OutputFormat, RunStatus,
    CertificationError, FormatError, OrderError, ChannelError, ConfigError, DomainError,
    TruncationError, NoNormalization, ZeroIntensity,
)
import utils

logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
logger = logging.getLogger(__name__)

INPUT_ERRORS = (FormatError, OrderError, ChannelError, ConfigError, DomainError, TruncationError,
                FileNotFoundError, IsADirectoryError, PermissionError)
FAILURE_ERRORS = (NoNormalization, ZeroIntensity)

Report = Dict[str, Any]


def setup_exception_handling():
    """Setup global exception handling."""
    def handle_exception(exc_type, exc_value, exc_traceback):
        if issubclass(exc_type, KeyboardInterrupt):
            sys.__excepthook__(exc_type, exc_value, exc_traceback)
            return
        error_msg = ''.join(traceback.format_exception(exc_type, exc_value, exc_traceback))
        print(f"Unhandled exception: {error_msg}", file=sys.stderr)

    sys.excepthook = handle_exception


def check_dependencies() -> bool:
    """Check if all required dependencies are available."""
    required_packages = ['numpy', 'scipy', 'sqlmodel', 'pydantic', 'joblib']
    missing_packages = []
    for package in required_packages:
        try:
            __import__(package)
        except ImportError:
            missing_packages.append(package)
    if missing_packages:
        print(f"Missing required packages: {', '.join(missing_packages)}", file=sys.stderr)
        print(f"Please install them using:\npip install {' '.join(missing_packages)}", file=sys.stderr)
        return False
    return True


# Configuration helpers

def _file_section(args, section: str) -> Dict[str, Any]:
    if not getattr(args, "config", None):
        return {}
    return utils.load_run_config(args.config).get(section, {})


def _analysis_config(args) -> AnalysisConfig:
    overrides = {
        "period_ps": args.period_ps,
        "window_ps": args.window_ps,
        "norm_delay_pulses": args.norm_delay,
        "max_pulse_lag": args.max_lag,
        "window_center_ps": args.window_center_ps,
        "n_shots": args.n_shots,
    }
    return utils.build_model(AnalysisConfig, _file_section(args, "analysis"), overrides)


def _source_config(args) -> SourceConfig:
    import source_sim
    overrides = {
        "n_pulses": args.n_pulses,
        "period_ps": args.period_ps,
        "emit_prob": args.emit_prob,
        "two_photon_prob": args.two_photon_prob,
        "three_photon_prob": args.three_photon_prob,
        "lifetime_ps": args.lifetime_ps,
        "leak_prob": args.leak_prob,
        "leak_width_ps": args.leak_width_ps,
        "jitter_ps": args.jitter_ps,
        "detection_efficiency": args.efficiency,
        "split": tuple(args.split) if args.split else None,
        "seed": args.seed,
    }
    cfg = utils.build_model(SourceConfig, _file_section(args, "source"), overrides)
    if args.preset == "leakage":
        cfg = source_sim.leakage_preset(cfg)
    return cfg


def _stream_format(path: str, requested: Optional[str]) -> StreamFormat:
    if requested:
        return StreamFormat(requested)
    return StreamFormat.CSV if path.lower().endswith(".csv") else StreamFormat.BINARY


def _require_output(path: Optional[str], is_dir: bool = False):
    ok, message = utils.validate_output_path(path, is_dir=is_dir)
    if not ok:
        raise ConfigError(message)


# Subcommands

def cmd_scan(args) -> Tuple[int, Report]:
    """Correlation functions of pure Gaussian states on a parameter grid, plus boundary curves."""
    import gaussian_model
    import bounds
    values = dict(SCAN_PRESETS[args.preset])
    file_values = _file_section(args, "scan")
    for key in ("alpha_max", "r_max", "theta_max"):
        if key in file_values:
            values[key] = float(file_values[key])
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    if "shape" in file_values:
        values["shape"] = tuple(int(x) for x in file_values["shape"])
    if args.shape:
        values["shape"] = tuple(args.shape)
    alpha, r, theta = gaussian_model.scan_axes(values["alpha_max"], values["r_max"], values["theta_max"],
                                               values["shape"])
    _require_output(args.out, is_dir=True)
    cfg_hash = utils.config_hash({"scan": values})

    grid_path = utils.derived_path(args.out, f"scan_{args.preset}", ".csv")
    rows = 0
    for start in range(0, alpha.size, SCAN_CHUNK_ALPHA):
        a, rr, tt = np.meshgrid(alpha[start:start + SCAN_CHUNK_ALPHA], r, theta, indexing="ij")
        g1, g2, g3 = gaussian_model.correlations_grid(a, rr, tt)
        block = np.column_stack([x.ravel() for x in (a, rr, tt, g1, g2, g3)])
        utils.write_csv_array(grid_path, ["alpha", "r", "theta", "g1", "g2", "g3"], block,
                              cfg_hash, mode="w" if start == 0 else "a")
        rows += block.shape[0]
        logger.debug(f"Scan rows written: {rows}")

    g2_axis = np.linspace(0.0, 4.0, 801)
    lower, upper = bounds.boundary_curve(g2_axis)
    line_ids = [bound_id for bound_id, _, _ in bounds.LINEAR_BOUNDS]
    lines = [chi1 - chi2 * g2_axis for _, chi2, chi1 in bounds.LINEAR_BOUNDS]
    boundary_path = utils.derived_path(args.out, f"scan_{args.preset}", "_boundary.csv")
    utils.write_csv_array(boundary_path, ["g2", "lower_g3", "upper_g3"] + line_ids,
                          np.column_stack([g2_axis, lower, upper] + lines), cfg_hash)

    n_axis = np.linspace(0.01, 10.0, 1000)
    minimum = np.array([[n, bounds.g2u_min_gaussian(n), bounds.g2_min(n)] for n in n_axis])
    minimum_path = utils.derived_path(args.out, f"scan_{args.preset}", "_g2min.csv")
    utils.write_csv_array(minimum_path, ["n", "G2_min", "g2_min"], minimum, cfg_hash)

    logger.info(f"Scan {args.preset}: {rows} rows written to {grid_path}")
    return EXIT_OK, {"rows": rows, "grid": grid_path, "boundary": boundary_path, "g2_min": minimum_path,
                     "shape": list(values["shape"]), "config_hash": cfg_hash}


def cmd_verify(args) -> Tuple[int, Report]:
    """Oracle-vs-closed-form and property checks."""
    import verify
    moment_fn = verify.sign_error_moments if args.inject_sign_error else None
    try:
        results = verify.run_verification(groups=args.groups, moment_fn=moment_fn, dim=args.dim,
                                          full=args.full, n_jobs=args.jobs, seed=args.seed or 0)
    except ValueError as e:
        raise ConfigError(str(e))
    passed = all(r.passed for r in results)
    report = {"passed": passed, "groups": [r.to_dict() for r in results]}
    if args.out:
        _require_output(args.out)
        utils.write_json(args.out, report)
    return (EXIT_OK if passed else EXIT_FAILURE), report


def _write_jacobi(stream, cfg: AnalysisConfig, out_dir: str, stem: str, cfg_hash: str) -> Dict[str, str]:
    import timetag
    paths = {}
    for selection in Selection:
        counts, e1, e2 = timetag.jacobi_histogram(stream, cfg, selection)
        c1 = 0.5 * (e1[:-1] + e1[1:])
        c2 = 0.5 * (e2[:-1] + e2[1:])
        j1, j2 = np.meshgrid(c1, c2, indexing="ij")
        path = utils.derived_path(out_dir, stem, f"_jacobi_{selection.value}.csv")
        utils.write_csv_array(path, ["j1_ns", "j2_ns", "count"],
                              np.column_stack([j1.ravel(), j2.ravel(), counts.ravel()]), cfg_hash)
        paths[selection.value] = path
    return paths


def cmd_analyze(args) -> Tuple[int, Report]:
    """g², g³, the certification verdict and optionally the p-value of a recorded click stream."""
    import timetag
    import bounds
    import stats
    ok, message = utils.validate_input_path(args.input)
    if not ok:
        raise FileNotFoundError(message)
    cfg = _analysis_config(args)
    fmt = _stream_format(args.input, args.format)
    cfg_hash = utils.config_hash({"analysis": cfg.model_dump(), "format": fmt.value})

    if args.chunked and fmt != StreamFormat.BINARY:
        raise ConfigError("--chunked requires binary input")

    stream = None
    if args.chunked:
        counter = timetag.CoincidenceCounter(cfg)
        for chunk in timetag.iter_gqtt_chunks(args.input):
            counter.feed(chunk)
        counts = counter.finalize()
    else:
        stream = timetag.parse_stream(args.input, fmt)
        if args.jobs == 1:
            counts = timetag.count_coincidences(stream, cfg)
        else:
            counts = timetag.count_coincidences_parallel(stream, cfg, n_jobs=args.jobs)

    g2, g2_sigma = timetag.estimate_g2(counts, cfg)
    g3, g3_sigma, upper = timetag.estimate_g3(counts, cfg)
    point = CorrelationPoint(g2=g2, g3=g3, g2_sigma=g2_sigma, g3_sigma=g3_sigma, g3_is_upper_limit=upper)
    verdict = bounds.criterion(point)
    report = {
        "g2": g2,
        "g2_sigma": g2_sigma,
        "g3": g3,
        "g3_sigma_or_upper": g3_sigma,
        "is_upper_limit": upper,
        "criterion_value": verdict.criterion_value,
        "criterion_sigma": verdict.criterion_sigma,
        "criterion": stats.format_value_error(verdict.criterion_value, verdict.criterion_sigma or 0.0),
        "sigma_distance": verdict.sigma_distance,
        "non_gaussian": verdict.non_gaussian,
        "in_certified_region": verdict.in_certified_region,
        "linear_bounds": verdict.linear_bounds,
        "joint_cumulant": verdict.joint_cumulant,
        "n_shots": counts.n_shots,
        "singles": counts.singles,
        "pair_zero_lag": counts.pair_hist.get(0, 0),
        "pair_norm_lag": counts.pair_hist.get(cfg.norm_delay_pulses, 0),
        "triple_same": counts.triple_same,
        "triple_separate": counts.triple_separate,
        "config_hash": cfg_hash,
    }
    if args.pvalue:
        result = stats.max_p_normalized(counts.pair_hist.get(0, 0), counts.triple_same,
                                        float(counts.pair_hist.get(cfg.norm_delay_pulses, 0)),
                                        counts.triple_separate, n_jobs=args.jobs)
        report["log10_p"] = result.log10_p
        report["pvalue_argmax"] = {"g2": result.argmax_g2, "g3": result.argmax_g3}

    if args.out:
        _require_output(args.out, is_dir=True)
        stem = os.path.splitext(os.path.basename(args.input))[0]
        if stream is not None:
            report["jacobi"] = _write_jacobi(stream, cfg, args.out, stem, cfg_hash)
        report["summary_path"] = utils.derived_path(args.out, stem, "_summary.json")
        utils.write_json(report["summary_path"], report)
    return EXIT_OK, report


def cmd_simulate(args) -> Tuple[int, Report]:
    """Synthetic click stream of a configured source."""
    import source_sim
    import timetag
    cfg = _source_config(args)
    _require_output(args.out)
    stream = source_sim.simulate(cfg, n_jobs=args.jobs)
    fmt = _stream_format(args.out, args.format)
    if fmt == StreamFormat.CSV:
        timetag.write_csv(stream, args.out)
    else:
        timetag.write_gqtt(stream, args.out)
    try:
        intrinsic = source_sim.intrinsic_correlations(cfg)
        g2, g3 = intrinsic.g2, intrinsic.g3
    except ZeroIntensity:
        g2 = g3 = None
    report = {
        "output": args.out,
        "format": fmt.value,
        "n_pulses": cfg.n_pulses,
        "n_clicks": len(stream),
        "singles": np.bincount(stream.channels, minlength=3).tolist(),
        "expected_singles": source_sim.expected_singles(cfg).tolist(),
        "intrinsic_g2": g2,
        "intrinsic_g3": g3,
        "seed": cfg.seed,
        "config_hash": utils.config_hash({"source": cfg.model_dump()}),
    }
    utils.write_json(args.summary or f"{args.out}.json", report)
    return EXIT_OK, report


def cmd_pvalue(args) -> Tuple[int, Report]:
    """Maximized p-value of the Gaussian hypothesis for observed two- and three-photon counts."""
    import stats
    result = stats.max_p_over_boundary(args.n2, args.n3, args.n1, args.n_shots,
                                       grid_points=args.grid, inclusive=args.inclusive, n_jobs=args.jobs)
    report = result.model_dump()
    report.update({"n2": args.n2, "n3": args.n3, "n1": args.n1, "n_shots": args.n_shots})
    if args.out:
        _require_output(args.out)
        utils.write_json(args.out, report)
    return EXIT_OK, report


def cmd_history(args) -> Tuple[int, Report]:
    """Recorded runs from the ledger."""
    from database import get_db_manager
    manager = get_db_manager(args.db)
    if args.stats:
        return EXIT_OK, manager.get_run_statistics()
    runs = manager.get_runs(subcommand=args.subcommand_filter, limit=args.limit)
    for run in runs:
        run["summary"] = utils.summary_excerpt(run.get("summary"))
    return EXIT_OK, {"runs": runs}


COMMANDS = {
    "scan": cmd_scan,
    "verify": cmd_verify,
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "pvalue": cmd_pvalue,
    "history": cmd_history,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ngcert", description=f"{APP_NAME} v{APP_VERSION}")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--no-record", action="store_true", help="do not write the run ledger")
    parser.add_argument("--db", default=DATABASE_PATH, help="run ledger database path")
    parser.add_argument("--jobs", type=int, default=DEFAULT_JOBS, help="parallel workers")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--config", default=None, help="INI configuration file")
    parser.add_argument("--output-format", choices=[f.value for f in OutputFormat], default=OutputFormat.JSON.value,
                        help="format of the report printed to stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="pure-state correlation grid and boundary curves")
    scan.add_argument("--preset", choices=sorted(SCAN_PRESETS), default="pure")
    scan.add_argument("--alpha-max", dest="alpha_max", type=float)
    scan.add_argument("--r-max", dest="r_max", type=float)
    scan.add_argument("--theta-max", dest="theta_max", type=float)
    scan.add_argument("--shape", type=int, nargs=3, metavar=("N_ALPHA", "N_R", "N_THETA"))
    scan.add_argument("--out", default=".")

    ver = sub.add_parser("verify", help="closed-form vs oracle and property checks")
    ver.add_argument("--full", action="store_true", help="desk-scale grids")
    ver.add_argument("--groups", nargs="+", default=None)
    ver.add_argument("--dim", type=int, default=None, help="fixed Fock truncation")
    ver.add_argument("--inject-sign-error", action="store_true", help=argparse.SUPPRESS)
    ver.add_argument("--out", default=None)

    ana = sub.add_parser("analyze", help="g2, g3 and the certification verdict of a click stream")
    ana.add_argument("input")
    ana.add_argument("--format", choices=[f.value for f in StreamFormat], default=None)
    ana.add_argument("--period-ps", type=int, default=None)
    ana.add_argument("--window-ps", type=int, default=None)
    ana.add_argument("--window-center-ps", type=int, default=None)
    ana.add_argument("--norm-delay", type=int, default=None)
    ana.add_argument("--max-lag", type=int, default=None)
    ana.add_argument("--n-shots", type=int, default=None)
    ana.add_argument("--pvalue", action="store_true")
    ana.add_argument("--chunked", action="store_true", help="bounded-memory streaming pass")
    ana.add_argument("--out", default=None, help="directory for the summary and Jacobi histograms")

    sim = sub.add_parser("simulate", help="synthetic click stream")
    sim.add_argument("--out", required=True)
    sim.add_argument("--format", choices=[f.value for f in StreamFormat], default=None)
    sim.add_argument("--summary", default=None)
    sim.add_argument("--preset", choices=["leakage"], default=None)
    sim.add_argument("--n-pulses", type=int, default=None)
    sim.add_argument("--period-ps", type=int, default=None)
    sim.add_argument("--emit-prob", type=float, default=None)
    sim.add_argument("--two-photon-prob", type=float, default=None)
    sim.add_argument("--three-photon-prob", type=float, default=None)
    sim.add_argument("--lifetime-ps", type=float, default=None)
    sim.add_argument("--leak-prob", type=float, default=None)
    sim.add_argument("--leak-width-ps", type=float, default=None)
    sim.add_argument("--jitter-ps", type=float, default=None)
    sim.add_argument("--efficiency", type=float, default=None)
    sim.add_argument("--split", type=float, nargs=3, default=None)

    pv = sub.add_parser("pvalue", help="maximized p-value over the Gaussian boundary")
    pv.add_argument("--n2", type=int, required=True)
    pv.add_argument("--n3", type=int, required=True)
    pv.add_argument("--n1", type=float, required=True)
    pv.add_argument("--n-shots", type=float, required=True)
    pv.add_argument("--grid", type=int, default=200)
    pv.add_argument("--inclusive", action="store_true")
    pv.add_argument("--out", default=None)

    hist = sub.add_parser("history", help="recorded runs")
    hist.add_argument("--subcommand", dest="subcommand_filter", default=None)
    hist.add_argument("--limit", type=int, default=BATCH_SIZE)
    hist.add_argument("--stats", action="store_true")
    return parser


def _record(args, status: RunStatus, report: Optional[Report]):
    if args.no_record or args.command == "history":
        return
    from database import get_db_manager
    report = report or {}
    non_gaussian = report.get("non_gaussian")
    manager = get_db_manager(args.db)
    manager.add_run({
        "subcommand": args.command,
        "config_hash": report.get("config_hash", ""),
        "seed": report.get("seed", args.seed),
        "input_path": getattr(args, "input", None),
        "output_path": getattr(args, "out", None),
        "status": status,
        "g2": report.get("g2"),
        "g3": report.get("g3"),
        "criterion_value": report.get("criterion_value"),
        "non_gaussian": bool(non_gaussian) if non_gaussian is not None else None,
        "log10_p": report.get("log10_p"),
        "summary": utils.write_json(None, report)[:4000],
    })


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch the subcommand, print its JSON report and return the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.getLogger().setLevel(logging.DEBUG if args.verbose else logging.INFO)

    report: Optional[Report] = None
    try:
        code, report = COMMANDS[args.command](args)
    except INPUT_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        code, report = EXIT_INPUT_ERROR, {"error": type(e).__name__, "message": str(e)}
    except ValidationError as e:
        logger.error(f"ConfigError: {e}")
        code, report = EXIT_INPUT_ERROR, {"error": ConfigError.__name__, "message": str(e)}
    except FAILURE_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        code, report = EXIT_FAILURE, {"error": type(e).__name__, "message": str(e)}
    except CertificationError as e:
        logger.error(f"{type(e).__name__}: {e}")
        code, report = EXIT_FAILURE, {"error": type(e).__name__, "message": str(e)}

    status = {EXIT_OK: RunStatus.OK, EXIT_INPUT_ERROR: RunStatus.INPUT_ERROR}.get(code, RunStatus.FAILED)
    _record(args, status, report)
    print(utils.format_report(report, args.output_format))
    return code


def main():
    """Main application entry point."""
    if not check_dependencies():
        sys.exit(EXIT_FAILURE)
    setup_exception_handling()
    logger.debug(f"Starting {APP_NAME} v{APP_VERSION}")
    sys.exit(run())


if __name__ == "__main__":
    main()
