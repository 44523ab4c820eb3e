"""Slow reference implementations used only as test oracles."""

from collections import Counter
from itertools import combinations


def brute_step(adj, labels):
    """Recompute one round by explicit frequency counting over N'(v)."""
    out = []
    for v, nbrs in enumerate(adj):
        freq = Counter(labels[u] for u in list(nbrs) + [v])
        top = max(freq.values())
        out.append(max(lab for lab, cnt in freq.items() if cnt == top))
    return out


def brute_trajectory(adj, labels, max_rounds=1000):
    """All states up to and including the first repeat of period 1 or 2."""
    states = [list(labels)]
    for _ in range(max_rounds):
        states.append(brute_step(adj, states[-1]))
        if states[-1] == states[-2]:
            return states
        if len(states) >= 3 and states[-1] == states[-3]:
            return states
    raise RuntimeError("no convergence")


def brute_khop_maxima(adj, labels, k):
    n = len(adj)
    out = []
    for v in range(n):
        dist = {v: 0}
        frontier = [v]
        for d in range(1, k + 1):
            nxt = []
            for x in frontier:
                for w in adj[x]:
                    if w not in dist:
                        dist[w] = d
                        nxt.append(w)
            frontier = nxt
        if all(labels[v] > labels[w] for w in dist if w != v):
            out.append(v)
    return out


def all_pairs(n):
    return list(combinations(range(n), 2))
