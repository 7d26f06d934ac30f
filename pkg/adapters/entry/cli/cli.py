"""
Command line entry: `python -m adapters.entry.cli <subcommand> ...`.

stdout carries only the JSON envelope of the command; logs and error envelopes go to stderr.
Exit codes: 0 success, 2 invalid input or missing file, 1 any other pipeline failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from config import get_settings
from core.domain.enums.method_enums import Method
from core.domain.enums.powerflow_enums import FlowModel
from core.domain.enums.solver_enums import HierarchyRule, SelectionCriterion, StepPolicy
from core.services.exceptions import ConfigError, GridVolterraError, StageError
from core.services.utils import to_json_safe
from core.use_cases.evaluate_usecase import EvaluateUseCase
from core.use_cases.identify_usecase import IdentifyUseCase
from core.use_cases.pipeline_usecase import PipelineUseCase
from core.use_cases.schema_usecase import SchemaUseCase
from core.use_cases.simulate_usecase import SimulateUseCase
from core.use_cases.synthesis_usecase import SynthesisUseCase

logger = logging.getLogger("gridvolterra.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2


# ---------- parser ----------

def _add_solver_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--lambda", dest="lam", type=float, default=None, help="l1 weight")
    g.add_argument("--mu", type=float, default=None, help="row-group (l2,1) weight")
    g.add_argument("--tol", type=float, default=None, help="relative objective change threshold")
    g.add_argument("--max-iter", type=int, default=None)
    g.add_argument("--step", choices=[s.value for s in StepPolicy], default=None)
    g.add_argument("--sweep", action="store_true", default=None, help="select the model of every bus (see --criterion)")
    g.add_argument("--criterion", choices=[c.value for c in SelectionCriterion], default=None)
    g.add_argument("--ebic-gamma", type=float, default=None)
    g.add_argument("--n-lambda", type=int, default=None)
    g.add_argument("--ratio-min", type=float, default=None)
    g.add_argument("--mu-ratio", type=float, default=None)
    g.add_argument("--hierarchy", choices=[h.value for h in HierarchyRule], default=None)
    g.add_argument(
        "--no-enforce-hierarchy",
        dest="enforce_hierarchy",
        action="store_false",
        default=None,
        help="keep pair coefficients whose partners have zero first-order coefficients",
    )


def _solver_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    fields = {
        "lambda": args.lam,
        "mu": args.mu,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "step": args.step,
        "sweep": args.sweep,
        "criterion": args.criterion,
        "ebic_gamma": args.ebic_gamma,
        "n_lambda": args.n_lambda,
        "ratio_min": args.ratio_min,
        "mu_ratio": args.mu_ratio,
        "hierarchy": args.hierarchy,
        "enforce_hierarchy": args.enforce_hierarchy,
    }
    return {k: v for k, v in fields.items() if v is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridvolterra",
        description="Radial grid topology identification with self-driven graph Volterra models.",
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ... (default: LOG_LEVEL)")
    parser.add_argument("--version", action="version", version=f"%(prog)s {get_settings().APP_VERSION}")
    parser.add_argument("--jobs", type=int, default=None, help="worker threads (default: GRIDVOLTERRA_JOBS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-grid", help="random radial feeder")
    p.add_argument("--N", "--buses", dest="n_buses", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--degree-bias", type=float, default=1.0)
    p.add_argument("--out", default=None, help="grid JSON path (omit to print only)")

    p = sub.add_parser("synth-profiles", help="synthetic load / solar injections")
    p.add_argument("--grid", required=True)
    p.add_argument("--T", dest="T", type=int, default=240)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--base-load", type=float, default=0.005)
    p.add_argument("--volatility", type=float, default=0.3)
    p.add_argument("--solar-fraction", type=float, default=0.3)
    p.add_argument("--v0", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="voltage series from injections")
    p.add_argument("--grid", required=True)
    p.add_argument("--profiles", required=True)
    p.add_argument("--model", choices=[m.value for m in FlowModel], default=FlowModel.EXACT.value)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--v0", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("identify", help="estimate graph Volterra kernels")
    p.add_argument("--series", required=True)
    p.add_argument("--out", required=True, help="kernels JSON path")
    p.add_argument("--diagnostics", default=None, help="sidecar JSON (default: <out>.diagnostics.json)")
    _add_solver_args(p)

    p = sub.add_parser("evaluate", help="ROC / AUC against the grid topology")
    p.add_argument("--grid", required=True)
    p.add_argument("--series", required=True)
    p.add_argument("--methods", default=",".join(m.value for m in Method))
    p.add_argument("--no-ridge", dest="ridge", action="store_false", help="fail on singular covariance")
    p.add_argument("--kernels", default=None, help="kernels JSON from `identify` (skips the Volterra solve)")
    p.add_argument("--out", required=True, help="report directory")
    _add_solver_args(p)

    p = sub.add_parser("pipeline", help="synthesize -> simulate -> identify -> evaluate")
    p.add_argument("--config", default=None, help="TOML run configuration")
    p.add_argument("--dry-run", action="store_true", help="validate the configuration only")
    p.add_argument("--out", dest="output_dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--model", choices=[m.value for m in FlowModel], default=None)
    p.add_argument("--noise-std", type=float, default=None)
    p.add_argument("--methods", default=None)
    _add_solver_args(p)

    sub.add_parser("schema", help="file format schemas and version")
    return parser


# ---------- commands ----------

def _run(args: argparse.Namespace, jobs: int) -> dict:
    cmd = args.command
    if cmd == "synth-grid":
        return SynthesisUseCase.from_settings().synth_grid(
            n_buses=args.n_buses, seed=args.seed, degree_bias=args.degree_bias, out=args.out
        )
    if cmd == "synth-profiles":
        return SynthesisUseCase.from_settings().synth_profiles(
            grid_path=args.grid,
            T=args.T,
            seed=args.seed,
            base_load=args.base_load,
            volatility=args.volatility,
            solar_fraction=args.solar_fraction,
            v0=args.v0,
            out=args.out,
        )
    if cmd == "simulate":
        return SimulateUseCase.from_settings().execute(
            grid_path=args.grid,
            profiles_path=args.profiles,
            model=args.model,
            noise_std=args.noise_std,
            seed=args.seed,
            v0=args.v0,
            jobs=jobs,
            out=args.out,
        )
    if cmd == "identify":
        return IdentifyUseCase.from_settings().execute(
            series_path=args.series,
            solver=_solver_overrides(args),
            jobs=jobs,
            out=args.out,
            diagnostics_out=args.diagnostics,
        )
    if cmd == "evaluate":
        return EvaluateUseCase.from_settings().execute(
            grid_path=args.grid,
            series_path=args.series,
            methods=args.methods,
            solver=_solver_overrides(args),
            jobs=jobs,
            ridge=args.ridge,
            kernels_path=args.kernels,
            out_dir=args.out,
        )
    if cmd == "pipeline":
        use_case = PipelineUseCase.from_settings()
        overrides = {
            "output_dir": args.output_dir,
            "seed": args.seed,
            "model": args.model,
            "noise_std": args.noise_std,
            "methods": args.methods.split(",") if args.methods else None,
            "jobs": args.jobs,
            "solver": _solver_overrides(args) or None,
        }
        config = use_case.load_config(args.config, overrides)
        return use_case.execute(config=config, dry_run=args.dry_run)
    if cmd == "schema":
        return SchemaUseCase.from_settings().execute()
    raise ConfigError(f"unknown command {cmd!r}", field="command")


def _error_envelope(exc: BaseException, stage: Optional[str]) -> dict:
    if isinstance(exc, GridVolterraError):
        body = exc.as_dict()
    else:
        body = {"error": type(exc).__name__, "message": str(exc), "details": {}}
    return {"ok": False, "stage": stage, **body}


def _emit(payload: dict, stream) -> None:
    stream.write(json.dumps(to_json_safe(payload), indent=2) + "\n")
    stream.flush()


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()

    logging.basicConfig(
        level=(args.log_level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s [%(levelname)s] %(name)s - %(message)s",
        stream=sys.stderr,
    )
    logging.captureWarnings(True)
    jobs = max(1, args.jobs if args.jobs is not None else settings.JOBS)

    try:
        result = _run(args, jobs)
    except StageError as exc:
        cause = exc.cause
        code = EXIT_INPUT if isinstance(cause, (ConfigError, FileNotFoundError)) else EXIT_FAILURE
        logger.error("%s failed at stage %s: %s", args.command, exc.stage, cause)
        _emit(_error_envelope(cause, exc.stage), sys.stderr)
        return code
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        # pydantic ValidationError is a ValueError: malformed input
        logger.error("%s: invalid input: %s", args.command, exc)
        _emit(_error_envelope(exc, args.command), sys.stderr)
        return EXIT_INPUT
    except GridVolterraError as exc:
        logger.error("%s failed: %s", args.command, exc)
        _emit(_error_envelope(exc, args.command), sys.stderr)
        return EXIT_FAILURE

    _emit(result, sys.stdout)
    return EXIT_OK
