"""Command-line entry points.

    expsim simulate --config FILE --out DIR [--seed N] [--format csv|markdown]
    expsim check    --results DIR --expect FILE
    expsim stimuli  --config FILE --out FILE [--seed N]
    expsim serve    --study-dir DIR [--host H] [--port P]

Output directory defaults to $EXPSIM_OUT or ./expsim-out.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .experiments import (ExperimentConfig, ResultTable, check_expectations,
                          emit_table, export_run, run_experiment)
from .stimuli import StudySpec, build_study_stimuli, write_stimulus_file


def _default_out() -> str:
    return os.environ.get("EXPSIM_OUT", "expsim-out")


def _cmd_simulate(args) -> int:
    if args.config:
        config = ExperimentConfig.from_text(Path(args.config).read_text())
    else:
        config = ExperimentConfig()
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    table = run_experiment(config)
    out_dir = Path(args.out or _default_out())
    export_run(config, table, out_dir)
    print(emit_table(table, args.format))
    print(f"results written to {out_dir}", file=sys.stderr)
    return 0


def _cmd_check(args) -> int:
    results = Path(args.results)
    csv_path = results / "results.csv" if results.is_dir() else results
    table = ResultTable.from_csv(csv_path.read_text())
    report = check_expectations(table, Path(args.expect).read_text())
    print(report)
    return 0 if report.passed else 1


def _cmd_stimuli(args) -> int:
    spec = StudySpec.from_text(Path(args.config).read_text())
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    stimuli = build_study_stimuli(spec)
    write_stimulus_file(args.out, stimuli)
    n_train = len(stimuli.for_kind(stimuli.best_kind, "training"))
    n_test = len(stimuli.for_kind(stimuli.best_kind, "test"))
    print(f"wrote {args.out}: {n_train} training + {n_test} test items per kind",
          file=sys.stderr)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn
    from .study.server import create_app
    app = create_app(args.study_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="expsim")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run seeded experiments and write result tables")
    sim.add_argument("--config", help="experiment config file (key = value lines)")
    sim.add_argument("--out", help="output directory (default $EXPSIM_OUT)")
    sim.add_argument("--seed", type=int, help="override the master seed")
    sim.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    sim.set_defaults(func=_cmd_simulate)

    chk = sub.add_parser("check", help="evaluate expectation assertions against results")
    chk.add_argument("--results", required=True, help="results directory or CSV file")
    chk.add_argument("--expect", required=True, help="expectation file")
    chk.set_defaults(func=_cmd_check)

    sti = sub.add_parser("stimuli", help="emit the study stimulus table")
    sti.add_argument("--config", required=True, help="study spec file (key = value lines)")
    sti.add_argument("--out", required=True, help="stimulus file to write")
    sti.add_argument("--seed", type=int, help="override the stimulus seed")
    sti.set_defaults(func=_cmd_stimuli)

    srv = sub.add_parser("serve", help="serve a configured study over HTTP")
    srv.add_argument("--study-dir", required=True,
                     help="directory with study.txt, stimuli.tsv, content.json")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
