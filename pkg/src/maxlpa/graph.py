"""Undirected simple graphs in CSR form, random generators and text I/O.

Nodes are dense 0-indexed integers. A :class:`Graph` stores, for every node,
a strictly ascending list of neighbours (``indices[indptr[v]:indptr[v + 1]]``).
Graphs are immutable once built; the backing arrays are flagged read-only.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

PathOrFile = Union[str, os.PathLike, IO[str]]


class InvalidParameterError(ValueError):
    """A generator or constructor received out-of-range parameters."""


class GraphFormatError(ValueError):
    """A graph or sidecar file is malformed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph in compressed adjacency form."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n: int, u: Sequence[int] | np.ndarray, v: Sequence[int] | np.ndarray,
                   validate: bool = True) -> "Graph":
        """Build a graph from an undirected edge list.

        Each edge must appear once (in either orientation). With ``validate``
        set, self-loops, duplicates and out-of-range ids raise
        :class:`InvalidParameterError`.
        """
        if n < 0:
            raise InvalidParameterError(f"node count must be non-negative, got {n}")
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        if u.shape != v.shape:
            raise InvalidParameterError("edge endpoint arrays differ in length")
        if validate and u.size:
            if u.min() < 0 or v.min() < 0 or u.max() >= n or v.max() >= n:
                raise InvalidParameterError("edge endpoint out of range")
            if np.any(u == v):
                raise InvalidParameterError("self-loop in edge list")
        keys = np.concatenate([u * n + v, v * n + u])
        keys.sort()
        src, dst = np.divmod(keys, n) if n else (keys, keys)
        if validate and src.size > 1:
            dup = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if np.any(dup):
                raise InvalidParameterError("duplicate edge in edge list")
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, _readonly(indptr), _readonly(dst))

    @property
    def m(self) -> int:
        return int(self.indices.size // 2)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def adjacency(self) -> list[list[int]]:
        """Per-node ascending neighbour lists as plain Python lists."""
        return [self.neighbors(v).tolist() for v in range(self.n)]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(u, v)`` arrays with ``u < v`` in lexicographic order."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        keep = src < self.indices
        return src[keep], self.indices[keep]

    def to_csr(self) -> csr_matrix:
        data = np.ones(self.indices.size, dtype=np.int8)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self) -> int:
        return hash((self.n, self.indices.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


@dataclass(frozen=True, eq=False)
class PlantedModel:
    """Ground truth for a clustered Erdős–Rényi graph.

    ``block_of[v]`` is the block index of node ``v``; block ``i`` has
    intra-block edge probability ``intra_probs[i]`` and every pair spanning
    two blocks is joined with probability ``inter_prob``.
    """

    block_of: np.ndarray
    intra_probs: tuple[float, ...]
    inter_prob: float
    block_sizes: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        block_of = np.asarray(self.block_of, dtype=np.int64).copy()
        probs = tuple(float(p) for p in self.intra_probs)
        k = len(probs)
        if k == 0:
            raise InvalidParameterError("planted model needs at least one block")
        if block_of.ndim != 1 or block_of.size == 0:
            raise InvalidParameterError("block_of must be a non-empty 1-d array")
        if block_of.min() < 0 or block_of.max() >= k:
            raise InvalidParameterError("block index out of range")
        sizes = np.bincount(block_of, minlength=k)
        if np.any(sizes == 0):
            raise InvalidParameterError("empty block in planted model")
        for p in probs + (float(self.inter_prob),):
            if not 0.0 <= p <= 1.0:
                raise InvalidParameterError(f"probability {p} outside [0, 1]")
        if not self.inter_prob < min(probs):
            raise InvalidParameterError(
                f"inter-block probability {self.inter_prob} must be below "
                f"every intra-block probability (min {min(probs)})")
        object.__setattr__(self, "block_of", _readonly(block_of))
        object.__setattr__(self, "intra_probs", probs)
        object.__setattr__(self, "inter_prob", float(self.inter_prob))
        object.__setattr__(self, "block_sizes", tuple(int(s) for s in sizes))

    @classmethod
    def equal_blocks(cls, n: int, k: int, p: float | Sequence[float], p_inter: float) -> "PlantedModel":
        """Contiguous blocks of size ``n // k`` (the first ``n % k`` get one extra node)."""
        if k < 1 or n < k:
            raise InvalidParameterError(f"cannot split {n} nodes into {k} blocks")
        sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
        block_of = np.repeat(np.arange(k), sizes)
        probs = (p,) * k if np.isscalar(p) else tuple(p)
        return cls(block_of, probs, p_inter)

    @property
    def n(self) -> int:
        return int(self.block_of.size)

    @property
    def k(self) -> int:
        return len(self.intra_probs)

    def blocks(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.block_of == i) for i in range(self.k)]


@dataclass(frozen=True)
class Seed:
    """Independent 64-bit seeds for graph sampling and label assignment."""

    graph_seed: int
    label_seed: int

    def __post_init__(self) -> None:
        for name in ("graph_seed", "label_seed"):
            val = getattr(self, name)
            if not 0 <= int(val) < 2**64:
                raise InvalidParameterError(f"{name} must fit in 64 unsigned bits")


def _graph_rng(seed: Seed | int) -> np.random.Generator:
    gs = seed.graph_seed if isinstance(seed, Seed) else int(seed)
    return np.random.default_rng(gs)


def _check_prob(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"probability {p} outside [0, 1]")
    return p


def _skip_sample(rng: np.random.Generator, total: int, p: float) -> np.ndarray:
    """Ranks in ``[0, total)`` each kept independently with probability ``p``.

    Gaps between kept ranks are geometric, so the cost is linear in the
    number of kept ranks rather than in ``total``.
    """
    if total <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    mean = total * p
    chunk = int(mean + 6.0 * np.sqrt(mean) + 16)
    parts = []
    pos = -1
    while True:
        # geometric saturates at int64 max for tiny p; clip before summing
        gaps = np.minimum(rng.geometric(p, size=chunk), total + 1)
        ranks = pos + np.cumsum(gaps)
        if ranks[-1] >= total:
            parts.append(ranks[ranks < total])
            break
        parts.append(ranks)
        pos = int(ranks[-1])
        chunk = max(16, int(6.0 * np.sqrt(mean)) + 16)
    return np.concatenate(parts)


def _triangle_pairs(ranks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map rank r to the pair (u, v), u < v, ordered by v then u."""
    v = ((1.0 + np.sqrt(1.0 + 8.0 * ranks.astype(np.float64))) / 2.0).astype(np.int64)
    # correct float rounding in either direction
    v = np.where(v * (v - 1) // 2 > ranks, v - 1, v)
    v = np.where((v + 1) * v // 2 <= ranks, v + 1, v)
    u = ranks - v * (v - 1) // 2
    return u, v


def _sample_er_edges(rng: np.random.Generator, n: int, p: float) -> tuple[np.ndarray, np.ndarray]:
    ranks = _skip_sample(rng, n * (n - 1) // 2, p)
    return _triangle_pairs(ranks)


def gen_path(n: int) -> Graph:
    """The path on nodes ``0..n-1`` with edges ``(i, i+1)``."""
    if n < 1:
        raise InvalidParameterError(f"path needs n >= 1, got {n}")
    u = np.arange(n - 1, dtype=np.int64)
    return Graph.from_edges(n, u, u + 1, validate=False)


def gen_er(n: int, p: float, seed: Seed | int) -> Graph:
    """Sample G(n, p) in expected O(n + m) time.

    Args:
        n: number of nodes (>= 1).
        p: independent edge probability.
        seed: a :class:`Seed` (its ``graph_seed`` is used) or a plain integer.
    """
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    p = _check_prob(p)
    u, v = _sample_er_edges(_graph_rng(seed), n, p)
    return Graph.from_edges(n, u, v, validate=False)


def gen_clustered_er(model: PlantedModel, seed: Seed | int) -> Graph:
    """Sample a clustered Erdős–Rényi graph from ``model``.

    Blocks are sampled in index order, then each block pair ``(a, b)`` with
    ``a < b``, all from one generator stream. With a single block whose nodes
    are ``0..n-1`` the output is identical to :func:`gen_er` with the same seed.
    """
    if not isinstance(model, PlantedModel):
        raise InvalidParameterError("gen_clustered_er expects a PlantedModel")
    rng = _graph_rng(seed)
    blocks = model.blocks()
    us, vs = [], []
    for nodes, p in zip(blocks, model.intra_probs):
        lu, lv = _sample_er_edges(rng, nodes.size, p)
        us.append(nodes[lu])
        vs.append(nodes[lv])
    for a in range(model.k):
        for b in range(a + 1, model.k):
            na, nb = blocks[a].size, blocks[b].size
            ranks = _skip_sample(rng, na * nb, model.inter_prob)
            us.append(blocks[a][ranks // nb])
            vs.append(blocks[b][ranks % nb])
    return Graph.from_edges(model.n, np.concatenate(us), np.concatenate(vs), validate=False)


def component_labels(g: Graph) -> np.ndarray:
    """Component id per node; ids are numbered in order of each component's smallest node."""
    _, raw = _cc(g.to_csr(), directed=False)
    # first occurrence order == order of minimum node id
    _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse]


def connected_components(g: Graph) -> list[np.ndarray]:
    """Maximal connected node sets, each ascending, ordered by minimum node id."""
    comp = component_labels(g)
    order = np.argsort(comp, kind="stable")
    bounds = np.cumsum(np.bincount(comp))[:-1]
    return np.split(order, bounds)


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    return int(_cc(g.to_csr(), directed=False)[0]) == 1


# -- text I/O ---------------------------------------------------------------

def _open_for_read(source: PathOrFile):
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="ascii")
    return _NoClose(source)


def _open_for_write(sink: PathOrFile):
    if isinstance(sink, (str, os.PathLike)):
        return open(sink, "w", encoding="ascii", newline="\n")
    return _NoClose(sink)


class _NoClose:
    def __init__(self, f):
        self.f = f

    def __enter__(self):
        return self.f

    def __exit__(self, *exc):
        return False


def _parse_ints(line: str, count: int, lineno: int) -> list[int]:
    parts = line.split()
    if len(parts) != count:
        raise GraphFormatError(f"expected {count} integers, got {len(parts)}", lineno)
    try:
        return [int(x) for x in parts]
    except ValueError:
        raise GraphFormatError(f"non-integer token in {line.strip()!r}", lineno) from None


def read_graph(source: PathOrFile) -> Graph:
    """Parse the ``"<n> <m>"`` + ``m`` lines of ``"<u> <v>"`` edge-list format.

    Edges must satisfy ``u < v``; self-loops, reversed or repeated edges and
    out-of-range ids raise :class:`GraphFormatError` naming the line.
    """
    with _open_for_read(source) as f:
        lines = f.read().splitlines()
    if not lines:
        raise GraphFormatError("empty graph file", 1)
    n, m = _parse_ints(lines[0], 2, 1)
    if n < 1 or m < 0:
        raise GraphFormatError(f"invalid header n={n} m={m}", 1)
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != m:
        raise GraphFormatError(f"header declares {m} edges, found {len(body)}", len(lines))
    us = np.empty(m, dtype=np.int64)
    vs = np.empty(m, dtype=np.int64)
    seen = set()
    for i, line in enumerate(body):
        lineno = i + 2
        u, v = _parse_ints(line, 2, lineno)
        if u == v:
            raise GraphFormatError(f"self-loop on node {u}", lineno)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"node id out of range in edge ({u}, {v})", lineno)
        if u > v:
            raise GraphFormatError(f"edge ({u}, {v}) must be written with u < v", lineno)
        if (u, v) in seen:
            raise GraphFormatError(f"duplicate edge ({u}, {v})", lineno)
        seen.add((u, v))
        us[i] = u
        vs[i] = v
    return Graph.from_edges(n, us, vs, validate=False)


def write_graph(g: Graph, sink: PathOrFile) -> None:
    """Write ``g`` in canonical form (edges lexicographically ascending)."""
    u, v = g.edges()
    buf = io.StringIO()
    buf.write(f"{g.n} {g.m}\n")
    if u.size:
        np.savetxt(buf, np.column_stack([u, v]), fmt="%d")
    with _open_for_write(sink) as f:
        f.write(buf.getvalue())


def format_graph(g: Graph) -> str:
    buf = io.StringIO()
    write_graph(g, buf)
    return buf.getvalue()


def read_planted(source: PathOrFile, intra_probs: Sequence[float], inter_prob: float) -> PlantedModel:
    """Read a block-membership sidecar (``"<k>"`` then one block index per node)."""
    with _open_for_read(source) as f:
        lines = [ln for ln in f.read().splitlines()]
    if not lines:
        raise GraphFormatError("empty planted-model file", 1)
    (k,) = _parse_ints(lines[0], 1, 1)
    block_of = []
    for i, line in enumerate(lines[1:]):
        if not line.strip():
            continue
        (b,) = _parse_ints(line, 1, i + 2)
        if not 0 <= b < k:
            raise GraphFormatError(f"block index {b} outside [0, {k})", i + 2)
        block_of.append(b)
    if len(intra_probs) != k:
        raise InvalidParameterError(f"sidecar declares {k} blocks, got {len(intra_probs)} probabilities")
    return PlantedModel(np.array(block_of, dtype=np.int64), tuple(intra_probs), inter_prob)


def write_planted(model: PlantedModel, sink: PathOrFile) -> None:
    with _open_for_write(sink) as f:
        f.write(f"{model.k}\n")
        f.write("".join(f"{b}\n" for b in model.block_of.tolist()))


def partition_from_blocks(blocks: Iterable[Iterable[int]], n: int) -> np.ndarray:
    """Turn a collection of node sets into a per-node block index array."""
    out = np.full(n, -1, dtype=np.int64)
    for i, nodes in enumerate(blocks):
        idx = np.fromiter(nodes, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise InvalidParameterError("node id out of range in partition")
        if np.any(out[idx] != -1):
            raise InvalidParameterError("node assigned to more than one block")
        out[idx] = i
    if np.any(out == -1):
        raise InvalidParameterError("partition does not cover every node")
    return out
