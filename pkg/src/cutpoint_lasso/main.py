"""Command-line interface for cut-point detection, simulation and benchmarks.

Subcommands: fit, simulate, benchmark, screen, evaluate, help. Machine-readable results go
to the ``--out`` path; logs go to standard error. Every output is accompanied by
``<out>.manifest.json``.

Exit codes: 0 success, 1 input error, 2 numerical failure under ``--strict``.
"""

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import __version__
from .config_manager import CvConfig, GridConfig, load_config
from .data_model import load_csv, write_csv
from .errors import EmptyReport, InputError, InvalidConfig, NumericalError
from .pipelines import (
    CutpointReport,
    LimitedCutConfig,
    evaluate_report_cv,
    fit_binilasso,
    fit_minilasso_pipeline,
    limited_one_step,
    limited_two_step,
    refit_categorized,
    screen_features,
)
from .simgen import ScenarioConfig, run_benchmark, simulate
from .solver import require_converged

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


@dataclass
class RunManifest:
    """Everything needed to reproduce one CLI run.

    Attributes:
        command: Subcommand name.
        argv: Arguments as given.
        config: Fully resolved configuration.
        seed: Master seed.
        version: Package version.
        inputs: SHA-256 digest of every input file, by path.
        outputs: Files written by the run.
        started: UTC start time, ISO 8601.
        finished: UTC finish time, ISO 8601.
    """

    command: str
    argv: List[str]
    config: Dict[str, Any]
    seed: Optional[int]
    version: str = __version__
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    started: str = ""
    finished: str = ""

    def add_input(self, path) -> None:
        self.inputs[str(path)] = file_digest(path)

    def write(self, out) -> Path:
        path = manifest_path(out)
        self.finished = _now()
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def file_digest(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def manifest_path(out) -> Path:
    return Path(str(out).rstrip("/\\") + ".manifest.json")


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def _str_list(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _write_json(path: Path, data: Dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def resolve_config(args) -> Dict[str, Any]:
    """Defaults, then ``--config``, then environment, then flags."""
    config = load_config(Path(args.config) if args.config else None)
    if args.seed is not None:
        config["cv"]["seed"] = args.seed
    if args.threads is not None:
        config["runtime"]["threads"] = args.threads
    if config["runtime"]["threads"] < 1 and config["runtime"]["threads"] != -1:
        raise InvalidConfig("--threads must be positive (or -1 for all cores)")
    grid = config["grid"]
    cv = config["cv"]
    for flag, section, key in (
        ("bins", grid, "bins_per_feature"),
        ("strategy", grid, "strategy"),
        ("folds", cv, "n_folds"),
        ("selection", cv, "selection"),
        ("n_lambdas", cv, "n_lambdas"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            section[key] = value
    if getattr(args, "boundary_indicators", False):
        grid["boundary_indicators"] = True
    if getattr(args, "standardize", False):
        grid["standardize"] = True
    return config


def _typed(config: Dict[str, Any]):
    grid = GridConfig.from_dict(config["grid"])
    cv = CvConfig.from_dict(config["cv"], solver=config["solver"], n_jobs=config["runtime"]["threads"])
    return grid, cv


def _limit_from(args) -> Optional[LimitedCutConfig]:
    if args.max_cuts is None:
        return None
    return LimitedCutConfig(
        m=args.max_cuts,
        mode=args.mode.replace("-", "_"),
        ranking_rule=args.ranking.replace("-", "_"),
        method=args.method,
    )


def cmd_fit(args, config: Dict[str, Any], manifest: RunManifest) -> int:
    grid_config, cv_config = _typed(config)
    ds = load_csv(Path(args.input), args.time, args.event)
    manifest.add_input(args.input)
    limit = _limit_from(args)
    if limit is not None:
        config["limit"] = asdict(limit)
        runner = limited_one_step if limit.mode == "one_step" else limited_two_step
        report = runner(ds, limit, grid_config, cv_config, loo_method=args.loo, strict=args.strict)
    elif args.method == "mini":
        report, result = fit_minilasso_pipeline(ds, grid_config, cv_config, loo_method=args.loo)
        if args.strict and result.fit is not None:
            require_converged(result.fit)
    else:
        report, chosen = fit_binilasso(ds, grid_config, cv_config)
        if args.strict:
            require_converged(chosen)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.save(out)
    manifest.outputs.append(str(out))
    logger.info("Wrote %d cut-points to %s", report.n_cutpoints, out)

    if args.evaluate:
        try:
            bundle = refit_categorized(ds, report).bundle
        except EmptyReport:
            logger.warning("No cut-points selected; skipping evaluation")
        else:
            path = _sibling(out, ".evaluation.json")
            _write_json(path, bundle.to_dict(include_timing=False))
            manifest.outputs.append(str(path))
    return 0


def cmd_simulate(args, config: Dict[str, Any], manifest: RunManifest) -> int:
    overrides: Dict[str, Any] = {"censor_target": config["simulation"]["censor_target"]}
    overrides["baseline_rate"] = config["simulation"]["baseline_rate"]
    if args.p is not None:
        overrides["p"] = args.p
    if args.sparsity is not None:
        overrides["sparsity"] = args.sparsity
    if args.censor is not None:
        overrides["censor_target"] = args.censor
    cfg = ScenarioConfig.for_scenario(args.scenario, args.n, seed=config["cv"]["seed"], **overrides)
    sim = simulate(cfg, replicate=args.replicate)
    config["scenario"] = cfg.to_dict()
    config["truth"] = {"active": list(sim.active), "true_cuts": sim.true_cuts, "replicate": args.replicate}

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(sim.dataset, out)
    manifest.outputs.append(str(out))
    logger.info("Simulated scenario %d: n=%d, censored fraction %.3f", cfg.scenario, cfg.n, sim.censored_fraction)
    return 0


def cmd_benchmark(args, config: Dict[str, Any], manifest: RunManifest) -> int:
    grid_config, cv_config = _typed(config)
    seed = config["cv"]["seed"]
    sizes = args.n or [300]
    sim = config["simulation"]
    scenarios = [
        ScenarioConfig.for_scenario(
            s, n, seed=seed, censor_target=sim["censor_target"], baseline_rate=sim["baseline_rate"]
        )
        for s in args.scenario
        for n in sizes
    ]
    replicates = args.replicates if args.replicates is not None else config["benchmark"]["replicates"]
    methods = args.methods or config["benchmark"]["methods"]
    limit = None
    if args.max_cuts is not None:
        limit = LimitedCutConfig(m=args.max_cuts, mode=args.mode.replace("-", "_"))
    config["benchmark"].update({"replicates": replicates, "methods": list(methods)})
    config["scenarios"] = [cfg.to_dict() for cfg in scenarios]

    report = run_benchmark(
        scenarios,
        methods=methods,
        replicates=replicates,
        output_dir=Path(args.out),
        n_jobs=config["runtime"]["threads"],
        grid_config=grid_config,
        cv_config=cv_config,
        limit=limit,
    )
    manifest.outputs.extend(sorted(str(p) for p in Path(args.out).glob("*.csv")))
    if report.failures:
        logger.warning("%d estimator runs failed; see failures.csv", len(report.failures))
    return 0


def cmd_screen(args, config: Dict[str, Any], manifest: RunManifest) -> int:
    if args.top < 1:
        raise InputError("--top must be at least 1")
    ds = load_csv(Path(args.input), args.time, args.event)
    manifest.add_input(args.input)
    result = screen_features(ds, top_k_per_metric=args.top, n_jobs=config["runtime"]["threads"])

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    result.table.to_csv(out, index=False, float_format="%.17g", lineterminator="\n")
    selected = _sibling(out, ".selected.json")
    _write_json(selected, {"top": args.top, "selected": result.selected})
    manifest.outputs.extend([str(out), str(selected)])
    return 0


def cmd_evaluate(args, config: Dict[str, Any], manifest: RunManifest) -> int:
    ds = load_csv(Path(args.input), args.time, args.event)
    manifest.add_input(args.input)
    manifest.add_input(args.report)
    report = CutpointReport.from_json(Path(args.report))
    if args.eval_folds:
        bundle = evaluate_report_cv(ds, report, n_folds=args.eval_folds, seed=config["cv"]["seed"])
    else:
        bundle = refit_categorized(ds, report).bundle
    out = Path(args.out)
    _write_json(out, bundle.to_dict(include_timing=False))
    manifest.outputs.append(str(out))
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "benchmark": cmd_benchmark,
    "screen": cmd_screen,
    "evaluate": cmd_evaluate,
}


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", "-i", required=True, help="CSV with a header row")
    p.add_argument("--time", default="time", help="Time column name")
    p.add_argument("--event", default="event", help="Event column name (1 = event, 0 = censored)")


def _add_estimator_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=["bini", "mini"], default="bini", help="Estimator")
    p.add_argument("--bins", type=int, default=None, help="Bins per feature")
    p.add_argument("--strategy", choices=["quantile", "uniform"], default=None, help="Grid strategy")
    p.add_argument("--folds", type=int, default=None, help="Cross-validation folds")
    p.add_argument("--selection", choices=["lambda_min", "lambda_1se"], default=None)
    p.add_argument("--n-lambdas", dest="n_lambdas", type=int, default=None, help="Path length")
    p.add_argument("--max-cuts", dest="max_cuts", type=int, default=None, help="Per-feature cut-point cap")
    p.add_argument("--mode", choices=["one-step", "two-step"], default="two-step", help="Limited procedure")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Master seed (default from config)")
    common.add_argument("--threads", type=int, default=None, help="Parallel workers; results do not depend on it")
    common.add_argument("--strict", action="store_true", help="Exit 2 on convergence or numerical failure")
    common.add_argument("--config", default=None, help="JSON config merged over the defaults")
    common.add_argument("--log-level", dest="log_level", default=None, help="DEBUG, INFO, WARNING, ...")

    p = argparse.ArgumentParser(prog="cutpoint-lasso", description="Data-driven cut-points for Cox models")
    sub = p.add_subparsers(dest="cmd")
    sub_map = {}

    fit_p = sub.add_parser("fit", parents=[common], help="Detect cut-points on a dataset")
    _add_data_args(fit_p)
    _add_estimator_args(fit_p)
    fit_p.add_argument("--ranking", choices=["entry-order", "max-abs-coef"], default="entry-order")
    fit_p.add_argument("--loo", choices=["exact", "one_step"], default="exact", help="miniLasso LOO method")
    fit_p.add_argument("--boundary-indicators", dest="boundary_indicators", action="store_true")
    fit_p.add_argument("--standardize", action="store_true", help="Build the grid on standardized features")
    fit_p.add_argument("--evaluate", action="store_true", help="Also write <out>.evaluation.json")
    fit_p.add_argument("--out", "-o", required=True, help="Report JSON path")
    sub_map["fit"] = fit_p

    sim_p = sub.add_parser("simulate", parents=[common], help="Write one simulated dataset")
    sim_p.add_argument("--scenario", type=int, choices=[1, 2, 3, 4], required=True)
    sim_p.add_argument("--n", type=int, required=True)
    sim_p.add_argument("--p", type=int, default=None)
    sim_p.add_argument("--sparsity", type=float, default=None)
    sim_p.add_argument("--censor", type=float, default=None, help="Target censored fraction")
    sim_p.add_argument("--replicate", type=int, default=0)
    sim_p.add_argument("--out", "-o", required=True, help="CSV path")
    sub_map["simulate"] = sim_p

    bench_p = sub.add_parser("benchmark", parents=[common], help="Run simulation benchmarks")
    bench_p.add_argument("--scenario", type=_int_list, required=True, help="e.g. 1 or 1,3")
    bench_p.add_argument("--n", type=_int_list, default=None, help="e.g. 300,500,1000")
    bench_p.add_argument("--replicates", type=int, default=None)
    bench_p.add_argument("--methods", type=_str_list, default=None, help="e.g. bini,mini")
    bench_p.add_argument("--bins", type=int, default=None)
    bench_p.add_argument("--folds", type=int, default=None)
    bench_p.add_argument("--n-lambdas", dest="n_lambdas", type=int, default=None)
    bench_p.add_argument("--max-cuts", dest="max_cuts", type=int, default=None)
    bench_p.add_argument("--mode", choices=["one-step", "two-step"], default="two-step")
    bench_p.add_argument("--out", "-o", required=True, help="Output directory")
    sub_map["benchmark"] = bench_p

    screen_p = sub.add_parser("screen", parents=[common], help="Rank features by univariate AIC and IBS")
    _add_data_args(screen_p)
    screen_p.add_argument("--top", type=int, default=50, help="Features kept per metric")
    screen_p.add_argument("--out", "-o", required=True, help="Ranking table CSV path")
    sub_map["screen"] = screen_p

    eval_p = sub.add_parser("evaluate", parents=[common], help="Refit a saved report and score it")
    _add_data_args(eval_p)
    eval_p.add_argument("--report", required=True, help="Cut-point report JSON")
    eval_p.add_argument(
        "--folds", dest="eval_folds", type=int, default=0, help="Out-of-fold evaluation (0: in-sample)"
    )
    eval_p.add_argument("--out", "-o", required=True, help="Evaluation JSON path")
    sub_map["evaluate"] = eval_p

    help_p = sub.add_parser("help", help="Show full help or help for a specific subcommand")
    help_p.add_argument("command", nargs="?", help="Command to show help for (default: full help)")
    sub_map["help"] = help_p

    return p, sub_map


def _configure_logging(name: str) -> None:
    level = logging.getLevelName(str(name).upper())
    if not isinstance(level, int):
        raise InvalidConfig(f"Unknown log level: {name!r}")
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv=None):
    parser, sub_map = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1

    if args.cmd is None:
        parser.print_help(sys.stderr)
        return 1
    if args.cmd == "help":
        if args.command:
            sp = sub_map.get(args.command)
            if not sp:
                print(f"No such command: {args.command}", file=sys.stderr)
                return 1
            sp.print_help()
            return 0
        print(parser.format_help())
        return 0

    strict = args.strict
    _configure_logging("INFO")
    try:
        config = resolve_config(args)
        _configure_logging(args.log_level or config["runtime"]["log_level"])
        manifest = RunManifest(command=args.cmd, argv=argv, config=config, seed=config["cv"]["seed"], started=_now())
        code = COMMANDS[args.cmd](args, config, manifest)
        path = manifest.write(args.out)
        logger.debug("Manifest written to %s", path)
        return code
    except (InputError, InvalidConfig, FileNotFoundError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        return 1
    except NumericalError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return 2 if strict else 1


if __name__ == "__main__":
    sys.exit(main())
