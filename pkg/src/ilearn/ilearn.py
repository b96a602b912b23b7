"""Console driver for incremental learning experiments.

The ilearn shell script reproduces the OCR and wine protocols, runs
configured experiments, resumes training of a saved model on a new increment,
evaluates saved models and converts reports. Access its documentation via
$ ilearn --help
for detailed usage instructions.
"""

from ._version import __author__, __version__, _author_email, _copyright_year
from ilearn.data.datasets import load_csv
from ilearn.harness.experiment import (METHODS, PROTOCOLS, ExperimentConfig,
                                       compare_methods, evaluate_model,
                                       reproduce, resume_training,
                                       run_experiment)
from ilearn.harness.report import FORMATS, load_report, report_emit
from ilearn.learn.modelio import load_model

import argparse
import logging
import sys

# Exit codes
EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

# Define help strings
_desc = "Incremental learning with GA-optimized SVM ensembles."
_vers = ("ilearn v" + __version__ + "\nCopyright (c) " + _copyright_year
            + " " + __author__ + "\n" + _author_email)
_epil = """
This shell script trains incremental-learning ensembles and reports their
accuracy after every increment. Commands include:
    reproduce   run the OCR (optdigits) or wine protocol and check the
                accuracy thresholds
    train       run an experiment from a JSON configuration, or resume a
                saved model on a new increment (--resume)
    eval        evaluate a saved model on a labelled CSV file
    report      convert a JSON report to csv, json or text

The UCI files (optdigits.tra, optdigits.tes, wine.data) are read from
--data-dir, or from the directory named by ILEARN_DATA_DIR.

Exit status is 0 when every acceptance check passes (or the command simply
succeeds), 1 when a check fails, and 2 on any error.
"""

#=============================================================================

def _parser():
    parser = argparse.ArgumentParser(prog="ilearn", description=_desc,
                         epilog=_epil,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--version", action="version", version=_vers)
    parser.add_argument("-q", "--quiet", action="store_true",
                        help="silence result message")
    parser.add_argument("--log-level", default="WARNING",
                        choices=LOG_LEVELS, type=str.upper,
                        help="logging level (default WARNING)")
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    rep = commands.add_parser("reproduce",
                              help="run a canonical protocol")
    rep.add_argument("name", choices=sorted(PROTOCOLS))
    rep.add_argument("--method", choices=METHODS, default="iluga")
    rep.add_argument("--reps", type=int, default=5,
                     help="repetitions (default 5)")
    rep.add_argument("--seed", type=int, default=0,
                     help="seed of repetition 0 (default 0; -1 for random)")
    rep.add_argument("--data-dir", help="directory of the UCI files")
    rep.add_argument("--jobs", type=int, default=1,
                     help="worker processes (default 1)")
    rep.add_argument("--full", action="store_true",
                     help="use the full repetition count of 30")
    rep.add_argument("--compare-baseline", action="store_true",
                     help="also run Learn++.MT on the same seeds and check "
                     "the ordering")
    _add_output(rep)

    train = commands.add_parser("train",
                                help="run a configured experiment or "
                                "resume a saved model")
    train.add_argument("--config", help="JSON experiment configuration")
    train.add_argument("--resume", metavar="MODEL",
                       help="saved model to continue training")
    train.add_argument("--increment", metavar="CSV",
                       help="new increment for --resume")
    train.add_argument("--model-out", metavar="OUT",
                       help="where to save the trained model")
    train.add_argument("--variant", choices=("learnpp", "learnpp_mt"),
                       default="learnpp_mt",
                       help="Learn++ rule for resumed Learn++ models")
    _add_output(train)

    ev = commands.add_parser("eval", help="evaluate a saved model")
    ev.add_argument("--model", required=True, help="saved model file")
    ev.add_argument("--test", required=True, help="labelled CSV test set")
    ev.add_argument("--variant", choices=("learnpp", "learnpp_mt"),
                    default="learnpp_mt",
                    help="Learn++ rule for Learn++ models")

    rpt = commands.add_parser("report", help="convert a JSON report")
    rpt.add_argument("--in", dest="source", required=True,
                     help="JSON report")
    _add_output(rpt)
    return parser

def _add_output(parser):
    parser.add_argument("--out", help="output file (prints to screen if "
                        "blank)")
    parser.add_argument("--format", choices=FORMATS, default=None,
                        help="report format (default json for files, text "
                        "for the screen)")
    parser.add_argument("--with-timing", action="store_true",
                        help="include wall-clock timing in JSON reports")

#=============================================================================

def main(argv=None):
    """The main driver for use when ilearn is called from the console.

    This function is called when ilearn is executed as a module, or when it
    is called from the console using:
        $ ilearn [args]

    Returns the exit status: 0 on success (all acceptance checks passed), 1
    if an acceptance check failed, 2 on errors.
    """

    args = _parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: "
                        "%(message)s")

    try:
        if args.command == "reproduce":
            return _reproduce(args)
        if args.command == "train":
            return _train(args)
        if args.command == "eval":
            return _eval(args)
        return _report(args)
    except (ValueError, RuntimeError, OSError) as e:
        print(f"ilearn: error: {e}", file=sys.stderr)
        return EXIT_ERROR

#-----------------------------------------------------------------------------

def _say(args, message):
    if not args.quiet:
        print(message)

def _emit(args, report):
    fmt = args.format or ("json" if args.out else "text")
    text = report_emit(report, fmt, path=args.out,
                       with_timing=args.with_timing)
    if args.out is None:
        sys.stdout.write(text)
    else:
        _say(args, "Report successfully written to " + args.out)

def _checks_status(args, checks):
    for check in checks:
        _say(args, f"[{'PASS' if check.passed else 'FAIL'}] {check.name}: "
             f"{check.detail}")
    return EXIT_PASS if all(c.passed for c in checks) else EXIT_FAIL

#-----------------------------------------------------------------------------

def _reproduce(args):
    report, checks = reproduce(args.name, method=args.method,
                               repetitions=args.reps, seed=args.seed,
                               data_dir=args.data_dir, jobs=args.jobs,
                               full=args.full)
    if args.compare_baseline and args.method != "learnpp_mt":
        baseline, _ = reproduce(args.name, method="learnpp_mt",
                                repetitions=len(report.runs),
                                seed=report.config["seed"],
                                data_dir=args.data_dir, jobs=args.jobs)
        checks.append(compare_methods(report, baseline))
    _emit(args, report)
    return _checks_status(args, checks)

#-----------------------------------------------------------------------------

def _train(args):
    if args.resume is not None:
        if args.increment is None or args.model_out is None:
            raise ValueError("--resume needs --increment and --model-out")
        settings = None
        if args.config is not None:
            cfg = ExperimentConfig.from_file(args.config)
            settings = cfg.learner_config(cfg.seed)
        model = resume_training(args.resume, load_csv(args.increment),
                                args.model_out, cfg=settings,
                                variant=args.variant)
        _say(args, f"Model extended to {len(model)} members and written to "
             f"{args.model_out}")
        return EXIT_PASS

    if args.config is None:
        raise ValueError("train needs --config or --resume")
    cfg = ExperimentConfig.from_file(args.config)
    if args.model_out is not None:
        cfg.model_out = args.model_out
    _emit(args, run_experiment(cfg))
    return EXIT_PASS

#-----------------------------------------------------------------------------

def _eval(args):
    gen, per_class = evaluate_model(load_model(args.model),
                                    load_csv(args.test), args.variant)
    for c, accuracy in per_class.items():
        print(f"class {c}: {accuracy:.4f}")
    print(f"generalized: {gen:.4f}")
    return EXIT_PASS

#-----------------------------------------------------------------------------

def _report(args):
    _emit(args, load_report(args.source))
    return EXIT_PASS

#-----------------------------------------------------------------------------

if __name__ == "__main__":
    # Run main script to parse command line arguments and run the command
    sys.exit(main())
