"""Monte Carlo experiments comparing the robust learners with the pooled
empirical distribution.

Every trial derives its own seed from the master seed through
``numpy.random.SeedSequence.spawn``, so trials are independent of one
another and of the order in which they are executed.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adversary import (
    FixedShift,
    GoodBatchSpec,
    IndistinguishableAdversary,
    NoPerturbation,
    PerBatchRandom,
    assemble_dataset,
    generate_adversarial_batches,
    lower_bound_instance,
    make_rng,
    num_bad_batches,
    parse_adversary,
    sample_good_batches,
)
from .core import MAX_TENSOR_ENTRIES, check_distribution, tv_distance
from .distset import learn_tensor
from .files import fmt
from .subsetlp import EPS_CAP, MAX_SUBSET_N, learn_subset_lp, required_batches

ALGORITHMS = ("empirical", "subsetlp", "distset")
RESULT_COLUMNS = ["trial_index", "algorithm", "n", "k", "m", "eps", "eta", "adversary",
                  "seed_used", "tv_error", "runtime_ms", "degraded"]


class ConfigError(ValueError):
    pass


class ResultsFormatError(ValueError):
    pass


def empirical_baseline(batches, n: int) -> np.ndarray:
    """Pooled frequency of all ``m * k`` samples (not robust)."""
    batches = np.asarray(batches, dtype=np.int64)
    if batches.size == 0:
        raise ValueError("need at least one batch")
    return np.bincount(batches.reshape(-1), minlength=n)[:n] / batches.size


def parse_perturbation(text: str):
    name, _, arg = text.partition(":")
    if name == "none":
        return NoPerturbation()
    if name == "random":
        return PerBatchRandom()
    if name == "shift":
        donor, receiver = (int(v) - 1 for v in arg.split(","))
        return FixedShift(donor, receiver)
    raise ConfigError(f"unknown perturbation {text!r}")


@dataclass
class ExperimentConfig:
    n: int = 2
    k: int = 10
    m: int = 0  # 0 means: derive from sample_multiplier
    trials: int = 1
    eps: float = 0.0
    eta: float = 0.0
    delta: float = 0.1
    adversary: str = "point_mass:1"
    algorithms: tuple = ("empirical",)
    seed: int = 0
    output_path: str = "results.csv"
    sample_multiplier: float = 40.0
    truth: str = "uniform"  # "uniform", "dirichlet", or comma-separated probabilities
    perturbation: str = "random"  # "none", "random", or "shift:<donor>,<receiver>" (1-based)
    record_timing: bool = False
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.algorithms, str):
            self.algorithms = tuple(a.strip() for a in self.algorithms.split(",") if a.strip())
        self.algorithms = tuple(self.algorithms)

    @property
    def num_batches(self) -> int:
        if self.m > 0:
            return self.m
        if self.eps <= 0:
            raise ConfigError("m must be given explicitly when eps = 0")
        return required_batches(self.n, self.k, self.eps, self.delta, self.sample_multiplier)

    def validate(self) -> None:
        if self.n < 1 or self.k < 1:
            raise ConfigError("n and k must be positive")
        if self.m < 0 or self.trials < 1:
            raise ConfigError("m must be >= 1 (or 0 for the default) and trials >= 1")
        if not 0 <= self.eps < 0.5:
            raise ConfigError("eps must lie in [0, 1/2)")
        if not 0 <= self.eta < 1:
            raise ConfigError("eta must lie in [0, 1)")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ConfigError(f"algorithms must be a non-empty subset of {ALGORITHMS}")
        try:
            adversary = parse_adversary(self.adversary, self.eta)
            parse_perturbation(self.perturbation)
            self.ground_truth(make_rng(0))
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if isinstance(adversary, IndistinguishableAdversary):
            if self.n != 2:
                raise ConfigError("the indistinguishable adversary needs n = 2")
            if self.eta >= 0.25 or self.eps <= 0:
                raise ConfigError("the indistinguishable adversary needs 0 < eps < 1/2 and eta < 1/4")
        if "subsetlp" in self.algorithms:
            if not 0 < self.eps < EPS_CAP:
                raise ConfigError("subsetlp needs 0 < eps < 1/15")
            if self.n > MAX_SUBSET_N:
                raise ConfigError(f"subsetlp needs n <= {MAX_SUBSET_N}")
        if "distset" in self.algorithms and self.n ** self.k > MAX_TENSOR_ENTRIES:
            raise ConfigError("distset needs n^k within the dense tensor cap")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def ground_truth(self, rng) -> np.ndarray:
        if self.truth == "uniform":
            return np.full(self.n, 1.0 / self.n)
        if self.truth == "dirichlet":
            return rng.dirichlet(np.ones(self.n))
        p = check_distribution([float(v) for v in self.truth.split(",")])
        if p.size != self.n:
            raise ConfigError(f"truth has {p.size} entries, expected n = {self.n}")
        return p

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        """Parse flat ``key=value`` lines; ``#`` starts a comment."""
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (s.strip() for s in line.partition("="))
            if not sep or key not in types:
                raise ConfigError(f"{path}:{lineno}: unknown or malformed entry {raw!r}")
            values[key] = _coerce(types[key], value, f"{path}:{lineno}")
        config = cls(**values)
        config.validate()
        return config


def _coerce(type_name, value: str, where: str):
    type_name = str(type_name)
    try:
        if type_name == "int":
            return int(value)
        if type_name == "float":
            return float(value)
        if type_name == "bool":
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return value.lower() in ("true", "1", "yes")
        return value
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {value!r} as {type_name}") from None


@dataclass
class TrialRecord:
    trial_index: int
    algorithm: str
    n: int
    k: int
    m: int
    eps: float
    eta: float
    adversary: str
    seed_used: int
    tv_error: float
    runtime_ms: float
    degraded: bool
    truth: np.ndarray | None = field(default=None, compare=False, repr=False)
    estimate: np.ndarray | None = field(default=None, compare=False, repr=False)


def trial_seeds(master_seed: int, trials: int) -> list[int]:
    children = np.random.SeedSequence(master_seed).spawn(trials)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def simulate(p, n: int, k: int, m: int, eps: float, eta: float, adversary, perturbation, seed):
    """Draw one contaminated dataset; returns ``(dataset, truth)``.

    For the lower-bound adversary the truth is replaced by the instance's
    ``p`` (or ``q``) and good batches come from its ``eta``-shifted partner.
    """
    streams = [make_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]
    if isinstance(adversary, IndistinguishableAdversary):
        inst = lower_bound_instance(eps, eta, k)
        if adversary.side == "p":
            p, perturbation = inst.p, FixedShift(0, 1)
        else:
            p, perturbation = inst.q, FixedShift(1, 0)
    bad_count = num_bad_batches(m, eps) if adversary is not None else 0
    spec = GoodBatchSpec(p, eta, perturbation)
    good = sample_good_batches(spec, k, m - bad_count, streams[0])
    bad = (generate_adversarial_batches(adversary, good, p, eps, k, bad_count, streams[1])
           if bad_count else np.zeros((0, k), dtype=np.int64))
    return assemble_dataset(good, bad, n, streams[2], eta), p


def run_algorithm(name: str, batches, n: int, k: int, eps: float, eta: float, delta: float):
    """Returns ``(estimate, degraded)``."""
    if name == "empirical":
        return empirical_baseline(batches, n), False
    if name == "subsetlp":
        res = learn_subset_lp(batches, n, k, eps, eta, delta)
        return res.q, res.degraded
    if name == "distset":
        return learn_tensor(batches, n, k).q, False
    raise ValueError(f"unknown algorithm {name!r}")


def run_trial(config: ExperimentConfig, trial_index: int, seed: int) -> list[TrialRecord]:
    truth_rng = make_rng(np.random.SeedSequence(seed).spawn(4)[3])
    p = config.ground_truth(truth_rng)
    adversary = parse_adversary(config.adversary, config.eta)
    m = config.num_batches
    data, p = simulate(p, config.n, config.k, m, config.eps, config.eta, adversary,
                       parse_perturbation(config.perturbation), seed)
    records = []
    for name in config.algorithms:
        start = time.perf_counter()
        try:
            est, degraded = run_algorithm(name, data.batches, config.n, config.k,
                                          config.eps, config.eta, config.delta)
            err = tv_distance(p, est)
        except (ValueError, ArithmeticError, RuntimeError):
            est, degraded, err = None, True, math.nan
        ms = 1000 * (time.perf_counter() - start) if config.record_timing else math.nan
        records.append(TrialRecord(trial_index, name, config.n, config.k, m, config.eps, config.eta,
                                   config.adversary, seed, err, ms, degraded, p, est))
    return records


def _run_trial_args(args):
    return run_trial(*args)


def run_experiment(config: ExperimentConfig) -> list[TrialRecord]:
    """All trials, in trial-index order regardless of ``config.workers``."""
    config.validate()
    seeds = trial_seeds(config.seed, config.trials)
    jobs = [(config, i, s) for i, s in enumerate(seeds)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            nested = list(pool.map(_run_trial_args, jobs))
    else:
        nested = [run_trial(*job) for job in jobs]
    return [rec for group in nested for rec in group]


def paired_lower_bound_errors(eps: float, eta: float, k: int, m: int, seed: int,
                              algorithms=ALGORITHMS, delta: float = 0.1) -> dict:
    """Errors of each algorithm on the two sides of the lower-bound instance.

    Returns ``{algorithm: (error_vs_p, error_vs_q)}``; both datasets have
    the same batch distribution, so no estimator can be close to both.
    """
    seeds = trial_seeds(seed, 2)
    out = {}
    sides = {}
    for side, s in zip("pq", seeds):
        sides[side] = simulate(None, 2, k, m, eps, eta, IndistinguishableAdversary(eta, side), None, s)
    for name in algorithms:
        errs = []
        for side in "pq":
            data, truth = sides[side]
            est, _ = run_algorithm(name, data.batches, 2, k, eps, eta, delta)
            errs.append(tv_distance(truth, est))
        out[name] = tuple(errs)
    return out


# -- results CSV ------------------------------------------------------------

def _row(rec: TrialRecord) -> list[str]:
    return [str(rec.trial_index), rec.algorithm, str(rec.n), str(rec.k), str(rec.m), fmt(rec.eps),
            fmt(rec.eta), rec.adversary, str(rec.seed_used), fmt(rec.tv_error), fmt(rec.runtime_ms),
            str(int(rec.degraded))]


def write_results(records, path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RESULT_COLUMNS)
            writer.writerows(_row(r) for r in records)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_results(path) -> list[TrialRecord]:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc
    records = []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULT_COLUMNS:
            raise ResultsFormatError(f"{path}:1: unexpected header {header}")
        for row in reader:
            lineno = reader.line_num
            if len(row) != len(RESULT_COLUMNS):
                raise ResultsFormatError(f"{path}:{lineno}: expected {len(RESULT_COLUMNS)} fields")
            try:
                records.append(TrialRecord(
                    int(row[0]), row[1], int(row[2]), int(row[3]), int(row[4]), float(row[5]),
                    float(row[6]), row[7], int(row[8]), float(row[9]), float(row[10]),
                    bool(int(row[11]))))
            except ValueError as exc:
                raise ResultsFormatError(f"{path}:{lineno}: {exc}") from None
    return records


def distributions_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".dists.csv")


def write_distributions(records, path) -> None:
    """Truth and estimate for every record, for re-scoring outside the harness."""
    with open(distributions_path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial_index", "algorithm", "truth", "estimate"])
        for r in records:
            est = "" if r.estimate is None else " ".join(fmt(float(v)) for v in r.estimate)
            writer.writerow([r.trial_index, r.algorithm, " ".join(fmt(float(v)) for v in r.truth), est])
