"""Command line entry points.

    reportloom cases build --out cases/
    reportloom eval run --cases cases/ --mode both --out results/
    reportloom serve --host 127.0.0.1 --port 8080
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .agents.backends import RemoteBackend
from .agents.mock import RuleBackend
from .evaluation import (
    MODE_REFINEMENT,
    MODE_REGENERATION,
    build_suite,
    format_results,
    load_suite,
    run_harness,
    save_case,
    verify_case,
    write_results,
)
from .service import ServiceConfig, create_app


def _build_backend(name: str):
    if name == "mock":
        return RuleBackend()
    if name == "remote":
        return RemoteBackend.from_env()
    raise SystemExit(f"unknown backend {name!r} (expected mock or remote)")


def _cmd_cases_build(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cases = build_suite()
    problems = []
    for case in cases:
        problems.extend(f"{case.id}: {p}" for p in verify_case(case))
        path = save_case(case, out)
        print(f"wrote {path}")
    if problems:
        for problem in problems:
            print(f"INVALID {problem}", file=sys.stderr)
        return 1
    print(f"{len(cases)} cases -> {out}")
    return 0


def _cmd_eval_run(args: argparse.Namespace) -> int:
    cases = load_suite(Path(args.cases))
    backend = _build_backend(args.backend)
    modes = [args.mode] if args.mode != "both" else [MODE_REFINEMENT, MODE_REGENERATION]
    out_root = Path(args.out)
    for mode in modes:
        result = run_harness(cases, backend, mode)
        out_dir = out_root / mode if len(modes) > 1 else out_root
        json_path, text_path = write_results(result, out_dir)
        print(format_results(result))
        print(f"[{mode}] wrote {json_path} and {text_path}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    config = ServiceConfig.from_env()
    overrides = {
        "host": args.host,
        "port": args.port,
        "backend": args.backend,
        "data_dir": None if args.data_dir is None else Path(args.data_dir),
    }
    config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    app = create_app(config=config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reportloom")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    cases = sub.add_parser("cases", help="evaluation case management")
    cases_sub = cases.add_subparsers(dest="cases_command", required=True)
    cases_build = cases_sub.add_parser("build", help="write the built-in suite to a directory")
    cases_build.add_argument("--out", default="cases", help="output directory")
    cases_build.set_defaults(func=_cmd_cases_build)

    evalp = sub.add_parser("eval", help="run the evaluation harness")
    eval_sub = evalp.add_subparsers(dest="eval_command", required=True)
    eval_run = eval_sub.add_parser("run", help="score a case directory")
    eval_run.add_argument("--cases", default="cases", help="case directory")
    eval_run.add_argument(
        "--mode",
        choices=[MODE_REFINEMENT, MODE_REGENERATION, "both"],
        default="both",
    )
    eval_run.add_argument("--backend", choices=["mock", "remote"], default="mock")
    eval_run.add_argument("--out", default="results", help="output directory")
    eval_run.set_defaults(func=_cmd_eval_run)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--data-dir", default=None)
    serve.add_argument("--backend", choices=["mock", "remote"], default=None)
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
