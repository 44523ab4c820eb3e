"""Structural measurements on label states: k-hop maxima, path bounds,
planted-partition recovery and the clustered-graph sufficient conditions.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numba
import numpy as np

from .engine import Communities, LabelState, RunResult, count_communities, init_labels
from .graph import Graph, InvalidParameterError, PlantedModel, gen_path, partition_from_blocks


@numba.njit(cache=True, nogil=True)
def _khop_kernel(indptr, indices, labels, k, out):
    n = labels.size
    stamp = np.full(n, -1, dtype=np.int64)
    frontier = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    for v in range(n):
        lv = labels[v]
        stamp[v] = v
        frontier[0] = v
        fsize = 1
        ok = True
        for _ in range(k):
            nsize = 0
            for i in range(fsize):
                x = frontier[i]
                for j in range(indptr[x], indptr[x + 1]):
                    w = indices[j]
                    if stamp[w] == v:
                        continue
                    if labels[w] >= lv:
                        ok = False
                        break
                    stamp[w] = v
                    nxt[nsize] = w
                    nsize += 1
                if not ok:
                    break
            if not ok or nsize == 0:
                break
            frontier[:nsize] = nxt[:nsize]
            fsize = nsize
        out[v] = ok


@dataclass
class MaximaReport:
    """Nodes whose label beats every other label within ``k`` hops.

    ``max_gap`` is the largest index difference between consecutive maxima
    and is ``None`` with fewer than two maxima (meaningful on paths only).
    """

    k: int
    maxima: np.ndarray
    max_gap: Optional[int]

    @property
    def count(self) -> int:
        return int(self.maxima.size)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.maxima)


def khop_maxima(g: Graph, s: LabelState, k: int) -> MaximaReport:
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    if s.n != g.n:
        raise InvalidParameterError("state and graph sizes differ")
    flags = np.zeros(g.n, dtype=np.bool_)
    if g.n:
        _khop_kernel(g.indptr, g.indices, s.labels, int(k), flags)
    maxima = np.flatnonzero(flags)
    gap = int(np.diff(maxima).max()) if maxima.size >= 2 else None
    return MaximaReport(int(k), maxima, gap)


@dataclass
class PathMaximaSummary:
    n: int
    trials: int
    counts: np.ndarray
    max_gaps: np.ndarray  # -1 where a trial had fewer than two maxima
    mean_gap: float

    @property
    def mean_count(self) -> float:
        return float(self.counts.mean())

    @property
    def worst_gap(self) -> int:
        return int(self.max_gaps.max())


def trial_label_seeds(seed: int, trials: int) -> np.ndarray:
    return np.random.SeedSequence(int(seed)).generate_state(trials, np.uint64)


def path_maxima_statistics(n: int, trials: int, seed: int) -> PathMaximaSummary:
    """2-hop maxima counts and gaps on ``P_n`` over ``trials`` fresh labellings."""
    if n < 5:
        raise InvalidParameterError(f"path maxima statistics need n >= 5, got {n}")
    g = gen_path(n)
    counts = np.empty(trials, dtype=np.int64)
    max_gaps = np.empty(trials, dtype=np.int64)
    gap_sum = 0
    gap_num = 0
    for i, ls in enumerate(trial_label_seeds(seed, trials)):
        rep = khop_maxima(g, init_labels(n, int(ls)), 2)
        counts[i] = rep.count
        max_gaps[i] = -1 if rep.max_gap is None else rep.max_gap
        gap_sum += int(rep.gaps.sum())
        gap_num += rep.gaps.size
    return PathMaximaSummary(n, trials, counts, max_gaps, gap_sum / gap_num if gap_num else math.nan)


@dataclass
class RecoveryVerdict:
    exact_match: bool
    num_communities: int
    rounds: Optional[int] = None
    period: Optional[int] = None


PartitionLike = Union[Communities, LabelState, np.ndarray, Iterable[Iterable[int]]]


def _as_assignment(found: PartitionLike, n: int) -> np.ndarray:
    if isinstance(found, LabelState):
        found = found.labels
    if isinstance(found, Communities):
        found = found.members
    if isinstance(found, np.ndarray) and found.ndim == 1 and found.dtype.kind in "iu":
        if found.size != n:
            raise InvalidParameterError(f"assignment covers {found.size} nodes, expected {n}")
        return found.astype(np.int64)
    return partition_from_blocks(found, n)


def same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    """Whether two per-node group assignments induce the same set partition."""
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    na, nb = int(ai.max()) + 1, int(bi.max()) + 1
    if na != nb:
        return False
    return np.unique(ai.astype(np.int64) * nb + bi).size == na


def compare_partition(found: PartitionLike, planted: PlantedModel,
                      result: Optional[RunResult] = None) -> RecoveryVerdict:
    """Label-agnostic exact comparison of a found partition with the planted blocks.

    ``found`` may be a per-node label array, a :class:`LabelState`, a
    :class:`Communities` or an iterable of node sets covering every node.
    """
    assign = _as_assignment(found, planted.n)
    exact = same_partition(assign, planted.block_of)
    verdict = RecoveryVerdict(exact, int(np.unique(assign).size))
    if result is not None:
        verdict.rounds = result.t_star
        verdict.period = result.period
        if result.period != 1:
            verdict.exact_match = False
    return verdict


@dataclass
class BlockConditions:
    """Both sufficient conditions for one block, with their two sides."""

    block: int
    density_lhs: float      # n_i p_i^2
    density_rhs: float      # 8 n p'
    concentration_lhs: float  # n_i p_i^4
    concentration_rhs: float  # 1800 c ln n

    @property
    def condition_i(self) -> bool:
        return self.density_lhs > self.density_rhs

    @property
    def condition_ii(self) -> bool:
        return self.concentration_lhs > self.concentration_rhs

    @property
    def margin_i(self) -> float:
        return self.density_lhs - self.density_rhs

    @property
    def margin_ii(self) -> float:
        return self.concentration_lhs - self.concentration_rhs


def theorem2_conditions(model: PlantedModel, c: float, n: Optional[int] = None) -> list[BlockConditions]:
    """Evaluate ``n_i p_i^2 > 8 n p'`` and ``n_i p_i^4 > 1800 c ln n`` per block."""
    if c <= 0:
        raise InvalidParameterError("c must be positive")
    n = model.n if n is None else int(n)
    out = []
    for i, (ni, pi) in enumerate(zip(model.block_sizes, model.intra_probs)):
        out.append(BlockConditions(
            block=i,
            density_lhs=ni * pi ** 2,
            density_rhs=8.0 * n * model.inter_prob,
            concentration_lhs=ni * pi ** 4,
            concentration_rhs=1800.0 * c * math.log(n),
        ))
    return out


# -- path lemmas ------------------------------------------------------------

def is_path_graph(g: Graph) -> bool:
    if g.m != max(g.n - 1, 0):
        return False
    u, v = g.edges()
    return bool(np.all(v == u + 1) and np.array_equal(u, np.arange(g.n - 1)))


def path_classes_contiguous(labels: np.ndarray) -> bool:
    """On a path, whether every label occupies one contiguous run of nodes."""
    runs = 1 + int(np.count_nonzero(labels[1:] != labels[:-1]))
    return runs == np.unique(labels).size


@dataclass
class PropertyViolation:
    seed: Optional[int]
    n: int
    params: str
    property: str
    margin: float

    HEADER = ("seed", "n", "params", "property", "margin")

    def to_csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(
            ["" if self.seed is None else self.seed, self.n, self.params, self.property, self.margin])
        return buf.getvalue()


@dataclass
class LemmaReport:
    communities: int
    maxima: int
    t_star: int
    gap: Optional[int]
    round_bound: int
    violations: list[PropertyViolation] = field(default_factory=list)

    @property
    def community_margin(self) -> int:
        return self.communities - self.maxima

    @property
    def round_margin(self) -> int:
        return self.round_bound - self.t_star

    @property
    def ok(self) -> bool:
        return not self.violations


def lemma_bounds_check(g: Graph, s0: LabelState, result: RunResult,
                       seed: Optional[int] = None) -> LemmaReport:
    """Check the path bounds on a finished run.

    The final community count must be at least the number of 2-hop maxima of
    ``s0`` and ``t_star`` at most ``D + 2``, where ``D`` is the largest gap
    between consecutive 2-hop maxima (``n - 1`` when there are fewer than two).
    A period other than 1 is reported as well.
    """
    if not is_path_graph(g):
        raise InvalidParameterError("lemma bounds apply to path graphs only")
    if result.truncated:
        raise InvalidParameterError("run was truncated")
    rep = khop_maxima(g, s0, 2)
    gap = rep.max_gap
    bound = (g.n - 1 if gap is None else gap) + 2
    communities = count_communities(result.final)
    report = LemmaReport(communities, rep.count, result.t_star, gap, bound)
    params = f"path n={g.n}"
    if report.community_margin < 0:
        report.violations.append(PropertyViolation(seed, g.n, params, "communities>=2hop_maxima",
                                                   report.community_margin))
    if report.round_margin < 0:
        report.violations.append(PropertyViolation(seed, g.n, params, "t_star<=D+2", report.round_margin))
    if result.period != 1:
        report.violations.append(PropertyViolation(seed, g.n, params, "period==1", result.period - 1))
    return report
