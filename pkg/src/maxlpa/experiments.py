"""Seeded trial batteries on random graphs and their summaries.

Every trial is a pure function of ``(experiment, n, c, trial index, base seed)``.
Per-trial seeds come from :func:`trial_seed`, so adding or removing cells never
changes the trials of other cells, and rows are emitted in ``(n, c, trial)``
order whatever the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
import re
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Callable, Iterable, Optional, Sequence

import numpy as np

from .analysis import compare_partition
from .engine import RunResult, count_communities, init_labels, run
from .graph import Graph, PlantedModel, Seed, gen_clustered_er, gen_er, is_connected

KINDS = ("table1", "table2", "rounds", "single")

CSV_HEADER = ("experiment", "n", "c", "trial", "graph_seed", "label_seed", "connected",
              "rounds", "period", "communities", "matches_planted", "truncated")

LOG_BASES: dict[str, Callable[[float], float]] = {
    "2": math.log2,
    "e": math.log,
    "10": math.log10,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PPrimeRule:
    """Inter-block probability: an absolute value or ``coef / n``."""

    value: float
    per_n: bool = False

    @classmethod
    def parse(cls, text: str | float) -> "PPrimeRule":
        if not isinstance(text, str):
            return cls(float(text))
        m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*/\s*n\s*", text)
        try:
            if m:
                return cls(float(m.group(1)), per_n=True)
            return cls(float(text))
        except ValueError:
            raise ConfigError(f"cannot parse p' rule {text!r}") from None

    def resolve(self, n: int) -> float:
        return self.value / n if self.per_n else self.value

    def __str__(self) -> str:
        return f"{self.value:g}/n" if self.per_n else f"{self.value:g}"


def edge_probability(n: int, c: float, log_base: str = "2") -> float:
    """``c * log(n) / n`` in the configured logarithm base.

    Values within rounding error above 1 are clamped to 1.
    """
    p = c * LOG_BASES[log_base](n) / n
    return 1.0 if 1.0 < p <= 1.0 + 1e-9 else p


@dataclass
class ExperimentConfig:
    kind: str
    n_values: Sequence[int]
    c_values: Sequence[float]
    trials: int = 50
    seed: int = 0
    p_prime: PPrimeRule = field(default_factory=lambda: PPrimeRule(0.6, per_n=True))
    max_rounds: Optional[int] = None
    threads: int = 1
    log_base: str = "2"

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.n_values or not self.c_values:
            raise ConfigError("need at least one n and one c value")
        if self.log_base not in LOG_BASES:
            raise ConfigError(f"log base must be one of {sorted(LOG_BASES)}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ConfigError("max_rounds must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        for n in self.n_values:
            if n < 2:
                raise ConfigError(f"n must be >= 2, got {n}")
            if self.kind == "table2" and n % 2:
                raise ConfigError(f"table2 needs even n, got {n}")
            for c in self.c_values:
                if c <= 0:
                    raise ConfigError(f"c must be positive, got {c}")
                p = edge_probability(n, c, self.log_base)
                if p > 1.0:
                    raise ConfigError(f"p = {p:.4g} exceeds 1 for n={n}, c={c}")
                if self.kind == "table2":
                    pp = self.p_prime.resolve(n)
                    if not 0.0 <= pp < p:
                        raise ConfigError(f"p' = {pp:.4g} must lie in [0, p) for n={n}, c={c}")

    def cells(self) -> list[tuple[int, float]]:
        return [(n, c) for n in self.n_values for c in self.c_values]


def c_key(c: float) -> int:
    """Integer key for a c value (micro-units), used in seed derivation."""
    return int(round(c * 1_000_000))


def trial_seed(base: int, n: int, c: float, trial: int) -> Seed:
    """Derive the graph and label seeds of one trial.

    The rule is ``SeedSequence(base, spawn_key=(n, round(c * 1e6), trial))``
    expanded to two 64-bit words: the first seeds the graph, the second the
    labels.
    """
    ss = np.random.SeedSequence(int(base), spawn_key=(int(n), c_key(c), int(trial)))
    gs, ls = ss.generate_state(2, np.uint64)
    return Seed(int(gs), int(ls))


@dataclass
class TrialRecord:
    experiment: str
    n: int
    c: float
    trial: int
    graph_seed: int
    label_seed: int
    connected: bool
    rounds: int
    period: int
    communities: int
    matches_planted: Optional[bool]
    truncated: bool

    @property
    def single_community(self) -> bool:
        return self.communities == 1 and self.period == 1 and not self.truncated

    @property
    def correct(self) -> bool:
        return bool(self.matches_planted) and self.period == 1 and not self.truncated

    def as_row(self) -> list[str]:
        mp = "n/a" if self.matches_planted is None else str(int(self.matches_planted))
        return [self.experiment, str(self.n), f"{self.c:g}", str(self.trial), str(self.graph_seed),
                str(self.label_seed), str(int(self.connected)), str(self.rounds), str(self.period),
                str(self.communities), mp, str(int(self.truncated))]

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "TrialRecord":
        mp = row["matches_planted"]
        return cls(row["experiment"], int(row["n"]), float(row["c"]), int(row["trial"]),
                   int(row["graph_seed"]), int(row["label_seed"]), row["connected"] == "1",
                   int(row["rounds"]), int(row["period"]), int(row["communities"]),
                   None if mp == "n/a" else mp == "1", row["truncated"] == "1")


def two_block_model(n: int, p: float, p_prime: float) -> PlantedModel:
    return PlantedModel.equal_blocks(n, 2, p, p_prime)


def run_trial(cfg: ExperimentConfig, n: int, c: float, trial: int) -> TrialRecord:
    seed = trial_seed(cfg.seed, n, c, trial)
    p = edge_probability(n, c, cfg.log_base)
    model = None
    if cfg.kind == "table2":
        model = two_block_model(n, p, cfg.p_prime.resolve(n))
        g = gen_clustered_er(model, seed)
    else:
        g = gen_er(n, p, seed)
    result = run(g, init_labels(n, seed.label_seed), cfg.max_rounds)
    matches = None
    if model is not None:
        matches = compare_partition(result.final, model, result).exact_match
    return record_from_result(cfg.kind, n, c, trial, seed, g, result, matches)


def record_from_result(kind: str, n: int, c: float, trial: int, seed: Seed, g: Graph,
                       result: RunResult, matches: Optional[bool]) -> TrialRecord:
    return TrialRecord(kind, n, c, trial, seed.graph_seed, seed.label_seed, is_connected(g),
                       result.t_star, result.period, count_communities(result.final), matches,
                       result.truncated)


def run_experiment(cfg: ExperimentConfig, progress: Optional[Callable[[TrialRecord], None]] = None
                   ) -> list[TrialRecord]:
    """Run every trial of every cell; rows come back in ``(n, c, trial)`` order."""
    cfg.validate()
    jobs = [(n, c, t) for n, c in cfg.cells() for t in range(cfg.trials)]
    if cfg.threads == 1:
        records = []
        for job in jobs:
            rec = run_trial(cfg, *job)
            if progress:
                progress(rec)
            records.append(rec)
        return records
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        futures = [pool.submit(run_trial, cfg, *job) for job in jobs]
        records = []
        for fut in futures:
            rec = fut.result()
            if progress:
                progress(rec)
            records.append(rec)
        return records


def write_csv(records: Iterable[TrialRecord], sink: IO[str]) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        w.writerow(rec.as_row())


def format_csv(records: Iterable[TrialRecord]) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def read_csv(source: IO[str]) -> list[TrialRecord]:
    reader = csv.DictReader(source)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [TrialRecord.from_row(row) for row in reader]


# -- summaries --------------------------------------------------------------

@dataclass
class CellSummary:
    n: int
    c: float
    trials: int
    successes: int  # single community (table1) or exact recovery (table2)
    connected: int
    mean_rounds: float  # over single-community trials; nan if none
    anomalies: int  # period-2 or truncated trials


def summarize(records: Sequence[TrialRecord]) -> "OrderedDict[tuple[int, float], CellSummary]":
    cells: "OrderedDict[tuple[int, float], list[TrialRecord]]" = OrderedDict()
    for rec in records:
        cells.setdefault((rec.n, rec.c), []).append(rec)
    out: "OrderedDict[tuple[int, float], CellSummary]" = OrderedDict()
    for (n, c), recs in cells.items():
        if recs[0].experiment == "table2":
            succ = sum(r.correct for r in recs)
        else:
            succ = sum(r.single_community for r in recs)
        single_rounds = [r.rounds for r in recs if r.single_community]
        out[(n, c)] = CellSummary(
            n, c, len(recs), succ, sum(r.connected for r in recs),
            float(np.mean(single_rounds)) if single_rounds else math.nan,
            sum(r.truncated or r.period != 1 for r in recs))
    return out


def format_table(summary: "OrderedDict[tuple[int, float], CellSummary]") -> str:
    """Paper-style grid: one row per n, entries ``successes (connected)``."""
    ns = sorted({n for n, _ in summary})
    cs = sorted({c for _, c in summary})
    width = 12
    lines = [("n".ljust(8) + "".join(f"c={c:g}".ljust(width) for c in cs)).rstrip()]
    for n in ns:
        row = str(n).ljust(8)
        for c in cs:
            s = summary.get((n, c))
            row += ("-" if s is None else f"{s.successes} ({s.connected})").ljust(width)
        lines.append(row.rstrip())
    return "\n".join(lines) + "\n"


def rounds_series(summary: "OrderedDict[tuple[int, float], CellSummary]") -> dict[float, list[tuple[float, float]]]:
    """Per c: points ``(log2(n / 1000), mean rounds)`` in ascending n."""
    series: dict[float, list[tuple[float, float]]] = {}
    for (n, c), s in sorted(summary.items()):
        series.setdefault(c, []).append((math.log2(n / 1000.0), s.mean_rounds))
    return series


def format_plot_data(series: dict[float, list[tuple[float, float]]]) -> str:
    out = []
    for c in sorted(series):
        out.append(f"# series c={c:g}")
        out.extend(f"{x:g} {y:.6g}" for x, y in series[c])
    return "\n".join(out) + "\n"


def parse_plot_data(text: str) -> dict[float, list[tuple[float, float]]]:
    series: dict[float, list[tuple[float, float]]] = {}
    current = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("# series c="):
            current = float(line.split("=", 1)[1])
            series[current] = []
        else:
            x, y = line.split()
            series[current].append((float(x), float(y)))
    return series
