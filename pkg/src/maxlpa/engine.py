"""Synchronous Max-LPA: label initialisation, the update round and cycle detection.

In every round each node looks at the labels in its closed neighbourhood
(its neighbours plus itself), finds the labels of highest multiplicity and
adopts the largest of them. All nodes update simultaneously from the previous
round's labels.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Sequence, Union

import numba
import numpy as np

from .graph import Graph, InvalidParameterError

LABEL_DTYPE = np.int64


@numba.njit(cache=True, nogil=True)
def _step_kernel(indptr, indices, labels, out):
    n = labels.size
    max_deg = 0
    for v in range(n):
        d = indptr[v + 1] - indptr[v]
        if d > max_deg:
            max_deg = d
    buf = np.empty(max_deg + 1, dtype=labels.dtype)
    for v in range(n):
        lo = indptr[v]
        d = indptr[v + 1] - lo
        if d == 0:
            out[v] = labels[v]
            continue
        buf[0] = labels[v]
        if d < 32:
            # insertion sort; closed neighbourhoods are small on sparse graphs
            for j in range(d):
                x = labels[indices[lo + j]]
                i = j
                while i >= 0 and buf[i] > x:
                    buf[i + 1] = buf[i]
                    i -= 1
                buf[i + 1] = x
        else:
            for j in range(d):
                buf[j + 1] = labels[indices[lo + j]]
            buf[:d + 1].sort()
        nb = buf
        best = nb[0]
        best_count = 0
        run = 0
        for j in range(d + 1):
            if j > 0 and nb[j] == nb[j - 1]:
                run += 1
            else:
                run = 1
            # >= lets the later (larger) label win ties
            if run >= best_count:
                best_count = run
                best = nb[j]
        out[v] = best


@dataclass(frozen=True, eq=False)
class LabelState:
    """Labels of every node just after ``round`` update rounds (0 = initial)."""

    labels: np.ndarray
    round: int = 0

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels)
        if labels.dtype != LABEL_DTYPE:
            labels = labels.astype(LABEL_DTYPE)
        if labels.flags.writeable:
            labels = labels.copy()
            labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    def same_labels(self, other: "LabelState") -> bool:
        return np.array_equal(self.labels, other.labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelState):
            return NotImplemented
        return self.round == other.round and self.same_labels(other)

    def __hash__(self) -> int:
        return hash((self.round, self.labels.tobytes()))

    def __repr__(self) -> str:
        return f"LabelState(round={self.round}, n={self.n})"


@dataclass(eq=False)
class RunResult:
    """Outcome of :func:`run`.

    ``t_star`` is the first round whose state belongs to the limit cycle; the
    cycle is ``final_states`` (one state for period 1, two for period 2,
    starting with the state at round ``t_star``). When ``max_rounds`` ran out
    first, ``truncated`` is set, ``period`` is 0 and ``final_states`` holds the
    last two states reached.
    """

    t_star: int
    period: int
    final_states: tuple[LabelState, ...]
    truncated: bool = False
    history: Optional[list[LabelState]] = field(default=None, repr=False)

    @property
    def final(self) -> LabelState:
        return self.final_states[0]

    @property
    def rounds_executed(self) -> int:
        return self.final_states[-1].round if self.truncated else self.t_star + self.period

    def oscillating_nodes(self) -> np.ndarray:
        """Nodes whose label differs between the two states of a period-2 cycle."""
        if self.period != 2:
            return np.empty(0, dtype=np.int64)
        a, b = self.final_states
        return np.flatnonzero(a.labels != b.labels)


def init_labels(n: int, label_seed: int) -> LabelState:
    """A uniformly random permutation of ``1..n`` as round-0 labels."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(int(label_seed))
    return LabelState(rng.permutation(n).astype(LABEL_DTYPE) + 1, 0)


def labels_from_values(values: Sequence[float]) -> LabelState:
    """Round-0 state whose labels are the ranks (1 = smallest) of ``values``.

    Only the relative order of labels matters to the update rule, so real
    valued labels can be replaced by their ranks. Values must be distinct.
    """
    values = np.asarray(values)
    if np.unique(values).size != values.size:
        raise InvalidParameterError("initial label values must be pairwise distinct")
    ranks = np.empty(values.size, dtype=LABEL_DTYPE)
    ranks[np.argsort(values, kind="stable")] = np.arange(1, values.size + 1)
    return LabelState(ranks, 0)


def step(g: Graph, s: LabelState) -> LabelState:
    """Apply one synchronous round to ``s``; ``s`` itself is left untouched."""
    if s.n != g.n:
        raise InvalidParameterError(f"state has {s.n} labels but graph has {g.n} nodes")
    out = np.empty(g.n, dtype=LABEL_DTYPE)
    if g.n:
        _step_kernel(g.indptr, g.indices, s.labels, out)
    out.flags.writeable = False
    return LabelState(out, s.round + 1)


def default_max_rounds(n: int) -> int:
    return 4 * n + 16


def iterate(g: Graph, s0: LabelState) -> Iterable[LabelState]:
    """Yield ``s0`` and then every subsequent state, forever."""
    s = s0
    while True:
        yield s
        s = step(g, s)


def run(g: Graph, s0: LabelState, max_rounds: Optional[int] = None,
        keep_history: bool = False) -> RunResult:
    """Iterate until the state repeats with period 1 or 2.

    Only the last two states are retained unless ``keep_history`` is set.
    """
    if max_rounds is None:
        max_rounds = default_max_rounds(g.n)
    if max_rounds < 1:
        raise InvalidParameterError("max_rounds must be positive")
    history = [s0] if keep_history else None
    prev2: Optional[LabelState] = None
    prev = s0
    for _ in range(max_rounds):
        cur = step(g, prev)
        if history is not None:
            history.append(cur)
        if cur.same_labels(prev):
            return RunResult(prev.round, 1, (prev,), False, history)
        if prev2 is not None and cur.same_labels(prev2):
            return RunResult(prev2.round, 2, (prev2, prev), False, history)
        prev2, prev = prev, cur
    tail = (prev,) if prev2 is None else (prev2, prev)
    return RunResult(prev.round, 0, tail, True, history)


@dataclass
class Communities:
    """Nodes grouped by label, with an optional induced-connectivity flag per group."""

    labels: np.ndarray
    members: list[np.ndarray]
    connected: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.members)

    def as_dict(self) -> dict[int, list[int]]:
        return {int(lab): m.tolist() for lab, m in zip(self.labels, self.members)}

    def as_sets(self) -> list[frozenset[int]]:
        return [frozenset(m.tolist()) for m in self.members]


def extract_communities(s: LabelState, g: Optional[Graph] = None) -> Communities:
    """Group nodes by their current label (groups ordered by label).

    If ``g`` is given, also report whether each group induces a connected
    subgraph of ``g``.
    """
    labs, inverse = np.unique(s.labels, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    members = np.split(order, np.cumsum(np.bincount(inverse, minlength=labs.size))[:-1])
    connected = None
    if g is not None:
        connected = induced_connectivity(g, inverse, labs.size)
    return Communities(labs, members, connected)


def count_communities(s: LabelState) -> int:
    return int(np.unique(s.labels).size)


def induced_connectivity(g: Graph, group: np.ndarray, num_groups: int) -> np.ndarray:
    """For each group id, whether its nodes induce a connected subgraph."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    u, v = g.edges()
    keep = group[u] == group[v]
    u, v = u[keep], v[keep]
    adj = csr_matrix((np.ones(u.size, dtype=np.int8), (u, v)), shape=(g.n, g.n))
    _, comp = connected_components(adj, directed=False)
    # a group is connected iff all its nodes share one component
    pieces = np.unique(np.column_stack([group, comp]), axis=0)[:, 0]
    return np.bincount(pieces, minlength=num_groups) == 1


# -- trajectory dump --------------------------------------------------------

def write_trajectory(states: Iterable[LabelState], sink: Union[str, os.PathLike, IO[str]]) -> None:
    """One line per round, labels separated by single spaces."""
    lines = "".join(" ".join(map(str, s.labels.tolist())) + "\n" for s in states)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="ascii", newline="\n") as f:
            f.write(lines)
    else:
        sink.write(lines)


def read_trajectory(source: Union[str, os.PathLike, IO[str]]) -> list[LabelState]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="ascii") as f:
            text = f.read()
    else:
        text = source.read()
    return [LabelState(np.array(line.split(), dtype=LABEL_DTYPE), t)
            for t, line in enumerate(ln for ln in text.splitlines() if ln.strip())]


def read_labels(source: Union[str, os.PathLike, IO[str]]) -> LabelState:
    """Read an initial labelling: whitespace-separated values, one per node.

    Values may be integers or reals; they are replaced by their ranks.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="ascii") as f:
            text = f.read()
    else:
        text = source.read()
    values = np.array([float(x) for x in text.split()])
    return labels_from_values(values)
