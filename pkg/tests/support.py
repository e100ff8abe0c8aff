"""Shared helpers for the simulator and acceptance tests."""

import random

from lclgame.graph_core import Graph, bfs_distances
from lclgame.lcl_lang import parse_language
from lclgame.simulator import run


def with_pendant(graph, w, length=2):
    """``graph`` with a fresh path of ``length`` vertices hung off ``w``.

    Existing vertex ids are kept, so per-vertex random streams are too.
    """
    n = graph.n
    edges = graph.edges() + [(w, n)] + [(n + i, n + i + 1) for i in range(length - 1)]
    return Graph.from_edges(n + length, edges)


def locality_pair(graph, lang_name, strategy, seed, rng, max_rounds=60):
    """Run ``graph`` and a copy mutated far from a random vertex ``v``.

    Returns ``(v, r, a, b)``: the actions and observation histories of
    ``v`` through round ``r`` in both runs, where everything the mutation
    touches is more than ``3 t r`` hops away from ``v``. ``None`` when the
    graph has no vertex far enough away.
    """
    t = 1
    pairs = []
    for v in range(graph.n):
        dist = bfs_distances(graph, v)
        pairs += [(v, w, d) for w, d in dist.items() if d > 3 * t]
    if not pairs:
        return None
    v, w, d = rng.choice(pairs)
    r = (d - 1) // (3 * t)
    mutated = with_pendant(graph, w)
    if lang_name == "coloring":
        # enough colors for both graphs; the language is shared by both runs
        lang = parse_language(f"coloring:{mutated.delta + 1}")
    else:
        lang = parse_language(lang_name)
    a = run(graph, lang, [strategy] * graph.n, seed, max_rounds, record=True)
    b = run(mutated, lang, [strategy] * mutated.n, seed, max_rounds, record=True)
    view = lambda res: (res.actions[v][: r + 1], res.observations[v][: r + 1])
    return v, r, view(a), view(b)


def random_pairs(graph, lang_name, strategy, count, seed=0):
    rng = random.Random(seed)
    out = []
    for i in range(count):
        got = locality_pair(graph, lang_name, strategy, 10_000 + i, rng)
        if got is not None:
            out.append(got)
    return out
