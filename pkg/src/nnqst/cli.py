"""Command-line interface: ``nnqst <subcommand> [options]``.

Exit status is 0 on success, 1 for invalid input (bad flags, malformed
files, schema violations) and 2 for failures during computation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import nullcontext
from dataclasses import fields

import numpy as np

from . import fileio, harness
from .errors import QSTError, ValidationError
from .measurement import pauli_set, simulate_counts
from .mle import MleConfig, mle_estimate
from .nne import (
    TABLE_TRAINING_EXAMPLES,
    TrainingConfig,
    estimate,
    generate_training_set,
    load_model,
    save_model,
    train,
)
from .rng import seeded_rng
from .states import sample_bures

log = logging.getLogger("nnqst")

# stream ids keep the random draws of different subcommands apart
_STREAM_STATES = 1
_STREAM_TRAINSET = 2
_STREAM_TRAIN = 3
_STREAM_MEASURE = 4
_STREAM_TESTSET = 5
_STREAM_EVALSET = 6


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n\n{self.format_help()}")


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        fileio.atomic_write_text(out, text)


def _emit_rows(args, rows, columns) -> None:
    fmt = fileio.rows_to_jsonl if getattr(args, "json", False) else fileio.rows_to_csv
    _emit(args, fmt(rows, columns))


# -- subcommands ----------------------------------------------------------


def cmd_gen_states(args):
    rng = seeded_rng(args.seed, _STREAM_STATES)
    states = [sample_bures(args.qubits, rng) for _ in range(args.count)]
    _emit(args, fileio.dump_states(states, args.qubits, args.seed))


def cmd_gen_trainset(args):
    count = args.count if args.count is not None else TABLE_TRAINING_EXAMPLES.get(args.qubits)
    if count is None:
        raise UsageError(f"--count is required for {args.qubits} qubits")
    ts = generate_training_set(args.qubits, count, seeded_rng(args.seed, _STREAM_TRAINSET), args.seed)
    fileio.save_training_set(args.out, ts)
    log.info("wrote %d training examples to %s", count, args.out)


def _training_config(args) -> TrainingConfig:
    return TrainingConfig(
        hidden=tuple(args.hidden) if args.hidden else None,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        test_n0=args.test_n0,
        eval_interval=args.eval_interval,
        patience=args.patience,
        min_improvement=args.min_improvement,
        max_epochs=args.max_epochs,
        output_activation=args.output_activation,
        seed=args.seed,
    )


def cmd_train(args):
    ts = fileio.load_training_set(args.trainset)
    config = _training_config(args)
    test = harness.bures_test_set(ts.n_qubits, args.test_count, args.seed, _STREAM_TESTSET)
    res = train(ts, test, config, seeded_rng(args.seed, _STREAM_TRAIN))
    save_model(res.model, args.out)
    if args.curve:
        rows = [{"step": s, "train_mlse": a, "test_mlse": b} for s, a, b in res.curve]
        fileio.atomic_write_text(args.curve, fileio.rows_to_csv(rows, ["step", "train_mlse", "test_mlse"]))
    log.info("best test MLSE %.6f (early stop: %s)", res.model.metadata["test_mlse"], res.stopped_early)


def cmd_estimate(args):
    values, n, _ = fileio.load_freq(args.freq)
    model = load_model(args.model, n_qubits=n)
    res = estimate(model, values)
    if res.fallback:
        log.warning("degenerate network output; wrote the maximally mixed state")
    _emit(args, json.dumps(fileio.density_to_json(res.rho_hat)) + "\n")


def cmd_simulate_measure(args):
    rho = fileio.load_density(args.state)
    n = int(np.log2(rho.shape[0]))
    values = simulate_counts(rho, pauli_set(n), args.n0, seeded_rng(args.seed, _STREAM_MEASURE))
    _emit(args, json.dumps(fileio.freq_to_json(values, n, args.n0)) + "\n")


def _mle_config(args) -> MleConfig:
    return MleConfig(args.max_iterations, args.tolerance, args.dilution)


def cmd_mle(args):
    values, n, _ = fileio.load_freq(args.freq)
    res = mle_estimate(values, pauli_set(n), _mle_config(args))
    if not res.converged:
        log.warning("MLE stopped at the iteration cap (%d) without converging", res.iterations)
    _emit(args, json.dumps(fileio.density_to_json(res.rho)) + "\n")


def _estimators(args, n_qubits):
    ests = []
    if getattr(args, "model", None):
        ests.append(harness.NNEEstimator(load_model(args.model, n_qubits=n_qubits)))
    if getattr(args, "mle", False):
        ests.append(harness.MLEEstimator(n_qubits, _mle_config(args)))
    if not ests:
        raise UsageError("nothing to evaluate: give --model and/or --mle")
    return ests


def cmd_evaluate(args):
    if args.states:
        header, states = fileio.load_states(args.states)
        n = header["n_qubits"]
    else:
        if args.qubits is None:
            raise UsageError("--qubits is required without --states")
        n = args.qubits
        count = args.count if args.count is not None else harness.default_test_set_size(n)
        # a stream of its own: never the states that steered early stopping
        states = harness.bures_test_set(n, count, args.seed, _STREAM_EVALSET)
    rows = []
    for est in _estimators(args, n):
        for n0 in args.n0:
            recs = harness.simulate_tomography(states, est, n0, args.seed)
            good = [r for r in recs if not r.flagged]
            if good:
                log.info("%s N0=%d: F_av = %.6f over %d states (%d flagged)",
                         est.name, n0, harness.average_fidelity(good), len(good), len(recs) - len(good))
            rows += [r.as_row() for r in recs]
    _emit_rows(args, rows, harness.RECORD_COLUMNS)


def cmd_werner(args):
    rows = harness.werner_sweep(args.q_values, _estimators(args, 2), args.n0, args.seed, args.repeats)
    _emit_rows(args, rows, harness.WERNER_COLUMNS)


def _parse_model_map(items) -> dict[int, str]:
    out = {}
    for item in items or []:
        try:
            n, path = item.split("=", 1)
            out[int(n)] = path
        except ValueError:
            raise UsageError(f"--model expects N=PATH, got {item!r}") from None
    return out


def cmd_mixed(args):
    paths = _parse_model_map(args.model)
    ests = {}
    for n in args.qubits:
        ests[n] = []
        if n in paths:
            ests[n].append(harness.NNEEstimator(load_model(paths[n], n_qubits=n)))
        if args.mle:
            ests[n].append(harness.MLEEstimator(n, _mle_config(args)))
    rows = harness.mixed_state_study(args.qubits, ests, args.n0, args.seed, args.repeats)
    _emit_rows(args, rows, harness.MIXED_COLUMNS)


def cmd_bench(args):
    rows = harness.bench_feedforward(range(args.min_qubits, args.max_qubits + 1), args.seed, args.repeats)
    _emit_rows(args, rows, harness.BENCH_COLUMNS)


def cmd_fit_scaling(args):
    rows = fileio.read_csv_rows(args.input)
    try:
        fit = harness.fit_scaling(rows, args.column)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"timing rows lack column {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise UsageError(f"cannot parse timing rows: {exc}") from exc
    doc = {f.name: getattr(fit, f.name) for f in fields(fit)}
    _emit(args, json.dumps(doc) + "\n")
    if fit.rejected:
        log.warning("fit rejected: residual %.3g, x = %.3g", fit.residual, fit.x)


# -- parser ---------------------------------------------------------------


def _add_mle_flags(p):
    d = MleConfig()
    p.add_argument("--max-iterations", type=int, default=d.max_iterations,
                   help="MLE iteration cap (default: %(default)s)")
    p.add_argument("--tolerance", type=float, default=d.tolerance,
                   help="MLE stop when successive iterates are this close in trace distance (default: %(default)s)")
    p.add_argument("--dilution", type=float, default=d.dilution,
                   help="MLE dilution parameter in (0, 1] (default: %(default)s)")


def _add_out(p, required=False):
    p.add_argument("--out", required=required, default=None if required else "-",
                   help="output path" + ("" if required else "; '-' for stdout (default: %(default)s)"))


def _add_seed(p):
    p.add_argument("--seed", type=int, required=True, help="random seed (required)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nnqst", description="Neural-network quantum state tomography toolkit.")
    parser.add_argument("--threads", type=int, default=1,
                        help="BLAS threads; 1 keeps results bitwise reproducible (default: %(default)s)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("gen-states", help="sample Bures-distributed states", formatter_class=fmt)
    p.add_argument("--qubits", type=int, required=True, help="number of qubits")
    p.add_argument("--count", type=int, required=True, help="number of states")
    _add_seed(p)
    _add_out(p)
    p.set_defaults(func=cmd_gen_states)

    p = sub.add_parser("gen-trainset", help="generate an ideal-feature training set", formatter_class=fmt)
    p.add_argument("--qubits", type=int, required=True, help="number of qubits")
    p.add_argument("--count", type=int, default=None,
                   help="number of examples (default: tabulated size for 1-5 qubits)")
    _add_seed(p)
    _add_out(p, required=True)
    p.set_defaults(func=cmd_gen_trainset)

    d = TrainingConfig()
    p = sub.add_parser("train", help="train a network on a training-set file", formatter_class=fmt)
    p.add_argument("--trainset", required=True, help="training-set file (JSON lines)")
    _add_seed(p)
    _add_out(p, required=True)
    p.add_argument("--curve", default=None, help="write the training curve CSV here")
    p.add_argument("--test-count", type=int, default=1000, help="number of Bures test states")
    p.add_argument("--hidden", type=int, nargs=2, default=None, metavar=("H1", "H2"),
                   help="hidden widths (default: tabulated by qubit count)")
    p.add_argument("--batch-size", type=int, default=d.batch_size, help="minibatch size")
    p.add_argument("--learning-rate", type=float, default=d.learning_rate, help="Adam step size")
    p.add_argument("--test-n0", type=int, default=d.test_n0, help="shots per setting for test features")
    p.add_argument("--eval-interval", type=int, default=d.eval_interval, help="batches between evaluations")
    p.add_argument("--patience", type=int, default=d.patience, help="evaluations without improvement before stopping")
    p.add_argument("--min-improvement", type=float, default=d.min_improvement, help="improvement threshold")
    p.add_argument("--max-epochs", type=int, default=d.max_epochs, help="epoch cap")
    p.add_argument("--output-activation", choices=["sigmoid_sym", "sigmoid"], default=d.output_activation,
                   help="output-layer activation")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("estimate", help="estimate a state from a frequency file", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--freq", required=True, help="frequency file")
    _add_out(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate-measure", help="simulate Pauli measurements of a state", formatter_class=fmt)
    p.add_argument("--state", required=True, help="density-matrix JSON file")
    p.add_argument("--n0", type=int, required=True, help="shots per setting")
    _add_seed(p)
    _add_out(p)
    p.set_defaults(func=cmd_simulate_measure)

    p = sub.add_parser("mle", help="maximum-likelihood estimate from a frequency file", formatter_class=fmt)
    p.add_argument("--freq", required=True, help="frequency file")
    _add_mle_flags(p)
    _add_out(p)
    p.set_defaults(func=cmd_mle)

    p = sub.add_parser("evaluate", help="simulated tomography on a Bures test set", formatter_class=fmt)
    p.add_argument("--model", default=None, help="model file (NNE)")
    p.add_argument("--mle", action="store_true", help="also run the MLE baseline")
    p.add_argument("--states", default=None, help="state-set file (default: sample a Bures set)")
    p.add_argument("--qubits", type=int, default=None, help="qubits when sampling the test set")
    p.add_argument("--count", type=int, default=None,
                   help="test-set size (default: 5000*2^n, capped at 5000 for n >= 3)")
    p.add_argument("--n0", type=int, nargs="+", default=[2000, 20000], help="shots per setting")
    _add_seed(p)
    _add_mle_flags(p)
    _add_out(p)
    p.add_argument("--json", action="store_true", help="emit JSON lines instead of CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("werner", help="NNE/MLE infidelity on Werner states", formatter_class=fmt)
    p.add_argument("--model", default=None, help="2-qubit model file")
    p.add_argument("--mle", action="store_true", help="include the MLE baseline")
    p.add_argument("--q-values", type=float, nargs="+", default=[round(0.1 * i, 1) for i in range(11)],
                   help="Werner parameters")
    p.add_argument("--n0", type=int, default=2000, help="shots per setting")
    p.add_argument("--repeats", type=int, default=100, help="noise draws per q")
    _add_seed(p)
    _add_mle_flags(p)
    _add_out(p)
    p.add_argument("--json", action="store_true", help="emit JSON lines instead of CSV")
    p.set_defaults(func=cmd_werner)

    p = sub.add_parser("mixed", help="NNE/MLE infidelity on maximally mixed states", formatter_class=fmt)
    p.add_argument("--model", action="append", default=None, metavar="N=PATH",
                   help="model for N qubits; repeatable")
    p.add_argument("--mle", action="store_true", help="include the MLE baseline")
    p.add_argument("--qubits", type=int, nargs="+", required=True, help="qubit counts")
    p.add_argument("--n0", type=int, default=2000, help="shots per setting")
    p.add_argument("--repeats", type=int, default=100, help="noise draws per qubit count")
    _add_seed(p)
    _add_mle_flags(p)
    _add_out(p)
    p.add_argument("--json", action="store_true", help="emit JSON lines instead of CSV")
    p.set_defaults(func=cmd_mixed)

    p = sub.add_parser("bench", help="time the feed-forward steps of untrained networks", formatter_class=fmt)
    p.add_argument("--min-qubits", type=int, default=2, help="smallest qubit count")
    p.add_argument("--max-qubits", type=int, default=8, help="largest qubit count")
    p.add_argument("--repeats", type=int, default=None,
                   help="timed repetitions (default: 100 up to 6 qubits, 10 above)")
    _add_seed(p)
    _add_out(p)
    p.add_argument("--json", action="store_true", help="emit JSON lines instead of CSV")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("fit-scaling", help="fit t = A x^n log n to bench output", formatter_class=fmt)
    p.add_argument("--in", dest="input", required=True, help="bench CSV")
    p.add_argument("--column", default="step1_seconds", help="timing column to fit")
    _add_out(p)
    p.set_defaults(func=cmd_fit_scaling)
    return parser


def _thread_limit(n: int):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return nullcontext()
    return threadpool_limits(limits=n)


def run(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.getLogger().setLevel(logging.DEBUG if args.verbose else logging.INFO)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        with _thread_limit(args.threads):
            args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (QSTError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
