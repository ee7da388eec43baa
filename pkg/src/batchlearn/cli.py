"""Command-line entry point: ``batchlearn <subcommand> ...``.

Exit codes: 0 success, 2 invalid arguments or config, 3 the estimator
returned a degraded result (``estimate`` only), 4 IO failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
import warnings

import numpy as np

from .adversary import IndistinguishableAdversary, lower_bound_instance, parse_adversary
from .core import tv_distance
from .distset import learn_tensor
from .files import (
    FormatError,
    fmt,
    read_batch_file,
    read_distribution,
    write_batch_file,
    write_distribution,
    write_provenance,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    empirical_baseline,
    parse_perturbation,
    run_experiment,
    simulate,
    write_distributions,
    write_results,
)
from .subsetlp import ConstantsWarning, learn_subset_lp
from .verify import LEMMA_CHECKS, run_lemma_checks

EXIT_OK, EXIT_CONFIG, EXIT_DEGRADED, EXIT_IO = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _cmd_simulate(args) -> int:
    if args.truth:
        p = read_distribution(args.truth)
    else:
        p = np.full(args.n, 1.0 / args.n)
    adversary = parse_adversary(args.adversary, args.eta)
    if isinstance(adversary, IndistinguishableAdversary) and args.n != 2:
        raise ConfigError("the indistinguishable adversary needs n = 2")
    data, _ = simulate(p, args.n, args.k, args.m, args.eps, args.eta, adversary,
                       parse_perturbation(args.perturbation), args.seed)
    write_batch_file(args.out, data.batches, args.n, args.k)
    write_provenance(args.out, data.good)
    return EXIT_OK


def _cmd_estimate(args) -> int:
    batches, n, k = read_batch_file(args.batches)
    degraded = False
    if args.algo == "empirical":
        q = empirical_baseline(batches, n)
    elif args.algo == "subsetlp":
        if args.eps is None:
            raise ConfigError("subsetlp needs --eps")
        with warnings.catch_warnings():
            warnings.simplefilter("always", ConstantsWarning)
            res = learn_subset_lp(batches, n, k, args.eps, args.eta, args.delta)
        q, degraded = res.q, res.degraded
        if args.dump_subsets:
            with open(args.dump_subsets, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["subset_bitmask", "estimate", "feasible_i", "lp_solve_ms"])
                for s, est in sorted(res.estimates.items()):
                    w.writerow([s, "" if est.estimate is None else fmt(est.estimate),
                                "" if est.feasible_i is None else est.feasible_i, fmt(est.lp_solve_ms)])
    else:
        res = learn_tensor(batches, n, k)
        q = res.q
        if args.dump_candidates:
            truth = read_distribution(args.truth) if args.truth else None
            with open(args.dump_candidates, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["candidate_index", "origin_path", "l1_objective", "tv_to_truth_if_known"])
                for i, (c, o) in enumerate(zip(res.candidates.candidates, res.candidates.origins)):
                    path = "/".join(str(v + 1) if isinstance(v, int) else v for v in o)
                    tv = "" if truth is None else fmt(tv_distance(truth, c))
                    w.writerow([i, path, fmt(2 * res.objectives[i]), tv])
    write_distribution(args.out, q)
    if degraded:
        print("warning: some subset estimates failed; result is degraded", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def _cmd_experiment(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.workers is not None:
        config.workers = args.workers
    out = args.out or config.output_path
    records = run_experiment(config)
    write_results(records, out)
    if args.dump_distributions:
        write_distributions(records, out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    rows = []
    for lemma in ([args.lemma] if args.lemma else list(LEMMA_CHECKS)):
        start = time.perf_counter()
        try:
            (report,) = run_lemma_checks(lemma, args.dense)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        rows.append((report, 1000 * (time.perf_counter() - start)))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lemma_id", "grid_size", "worst_margin", "worst_point", "wall_ms"])
        for r, ms in rows:
            w.writerow([r.lemma_id, r.grid_size, fmt(r.worst_margin), " ".join(map(str, r.worst_point)),
                        f"{ms:.1f}"])
    failed = [r.lemma_id for r, _ in rows if not r.passed]
    if failed:
        print(f"checks with negative margin: {', '.join(failed)}", file=sys.stderr)
        return 1
    return EXIT_OK


def _cmd_lowerbound(args) -> int:
    inst = lower_bound_instance(args.eps, args.eta, args.k)
    parts = [f"# eps={fmt(inst.eps)} eta={fmt(inst.eta)} k={inst.k} alpha={fmt(inst.alpha)}"]
    for name in ("p", "q", "p_prime", "q_prime", "N_p", "N_q"):
        arr = np.asarray(getattr(inst, name))
        parts.append(f"# {name} shape={'x'.join(map(str, arr.shape))}")
        parts.append(" ".join(fmt(float(v)) for v in arr.reshape(-1)))
    with open(args.out, "w") as fh:
        fh.write("\n".join(parts) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="batchlearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="draw a contaminated batch dataset")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--eps", type=float, default=0.0)
    s.add_argument("--eta", type=float, default=0.0)
    s.add_argument("--adversary", default="point_mass:1")
    s.add_argument("--perturbation", default="random")
    s.add_argument("--truth", help="file with one probability per line (default uniform)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_simulate)

    e = sub.add_parser("estimate", help="estimate the distribution from a batch file")
    e.add_argument("--algo", choices=("empirical", "subsetlp", "distset"), required=True)
    e.add_argument("--batches", required=True)
    e.add_argument("--eps", type=float)
    e.add_argument("--eta", type=float, default=0.0)
    e.add_argument("--delta", type=float, default=0.1)
    e.add_argument("--out", required=True)
    e.add_argument("--dump-subsets")
    e.add_argument("--dump-candidates")
    e.add_argument("--truth", help="true distribution file, only used to annotate --dump-candidates")
    e.set_defaults(func=_cmd_estimate)

    x = sub.add_parser("experiment", help="run a Monte Carlo experiment from a config file")
    x.add_argument("--config", required=True)
    x.add_argument("--out")
    x.add_argument("--dump-distributions", action="store_true")
    x.add_argument("--workers", type=int)
    x.set_defaults(func=_cmd_experiment)

    v = sub.add_parser("verify-lemmas", help="numerically check the supporting inequalities")
    v.add_argument("--lemma")
    v.add_argument("--dense", action="store_true")
    v.add_argument("--out", required=True)
    v.set_defaults(func=_cmd_verify)

    lb = sub.add_parser("lowerbound", help="dump the two-point lower-bound instance")
    lb.add_argument("--eps", type=float, required=True)
    lb.add_argument("--eta", type=float, default=0.0)
    lb.add_argument("--k", type=int, required=True)
    lb.add_argument("--out", required=True)
    lb.set_defaults(func=_cmd_lowerbound)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
