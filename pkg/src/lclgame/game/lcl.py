"""LCL games: the round dynamics shared by the explicit tree and the lumped DAG."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from ..graph_core import Graph, ball, ball_shape
from ..lcl_lang import (
    BudgetExceeded,
    LanguageError,
    LclLanguage,
    Preference,
    compatible_actions,
    settle,
)
from ..simulator import StuckError
from .tree import CHANCE, GameTree


@dataclass(frozen=True)
class RoundState:
    """Public state at the start of a round."""

    graph: int
    round: int
    states: tuple
    counts: tuple
    inactive: frozenset


@dataclass(frozen=True)
class Outcome:
    """Result of one round: either terminal payoffs or the next round state."""

    terminal: bool
    payoff: tuple | None = None
    next: RoundState | None = None
    final_states: tuple = ()


class LclDynamics:
    """Round mechanics of the LCL game on a graph (or a distribution of graphs).

    Active players move in ascending order within a round, each seeing only
    past-round actions in its ball. After the round, labeled vertices
    whose balls qualify become inactive. Payoff of player ``i`` is
    ``delta**time_i * pref(ball_i)`` once its whole ball is inactive, where
    ``time_i`` is the last decision round inside the ball.
    """

    def __init__(self, lang: LclLanguage, graphs, pref: Preference, delta: float):
        if isinstance(graphs, Graph):
            graphs = [(graphs, 1.0)]
        graphs = [(g, float(p)) for g, p in graphs]
        if not graphs:
            raise ValueError("need at least one graph")
        if len({g.n for g, _ in graphs}) != 1:
            raise ValueError("all graphs in a distribution must have the same size")
        total = sum(p for _, p in graphs)
        if abs(total - 1.0) > 1e-9 or any(p <= 0 for _, p in graphs):
            raise ValueError("graph probabilities must be positive and sum to 1")
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        self.lang = lang
        self.graphs = [g for g, _ in graphs]
        self.graph_probs = [p for _, p in graphs]
        self.pref = pref
        self.delta = float(delta)
        self.n = self.graphs[0].n
        self._balls = [
            [ball_shape(g, v, lang.radius).vertices for v in range(self.n)] for g in self.graphs
        ]
        self._outcomes: dict = {}
        self._available: dict = {}

    @property
    def chance(self) -> bool:
        return len(self.graphs) > 1

    @cached_property
    def full_observation(self) -> bool:
        everyone = tuple(range(self.n))
        return all(b == everyone for balls in self._balls for b in balls)

    @property
    def bound(self) -> float:
        return float(self.pref.bound)

    def ball_of(self, g: int, v: int) -> tuple:
        return self._balls[g][v]

    def initial(self) -> list[tuple[float, RoundState]]:
        zero = (None,) * self.n
        counts = (0,) * self.n
        return [
            (p, RoundState(g, 0, zero, counts, frozenset()))
            for g, p in enumerate(self.graph_probs)
        ]

    def movers(self, rs: RoundState) -> tuple:
        return tuple(v for v in range(self.n) if v not in rs.inactive)

    def available(self, rs: RoundState, v: int) -> tuple:
        key = (rs.graph, rs.round == 0, rs.states, rs.inactive, v)
        hit = self._available.get(key)
        if hit is None:
            hit = compatible_actions(
                self.lang, self.graphs[rs.graph], rs.states, v, rs.inactive, rs.round
            )
            if not hit:
                raise StuckError(f"vertex {v} has no compatible action in round {rs.round}")
            self._available[key] = hit
        return hit

    def markov_key(self, rs: RoundState, v: int) -> tuple:
        b = self._balls[rs.graph][v]
        key = (rs.round, tuple(rs.states[j] for j in b), tuple(j in rs.inactive for j in b))
        if self.chance:
            key += (b, ball_shape(self.graphs[rs.graph], v, self.lang.radius).edges)
        return key

    def outcome(self, rs: RoundState, joint: tuple) -> Outcome:
        """Apply the movers' actions (ascending order) and settle."""
        key = (rs, joint)
        hit = self._outcomes.get(key)
        if hit is not None:
            return hit
        movers = self.movers(rs)
        states = list(rs.states)
        counts = list(rs.counts)
        for v, a in zip(movers, joint):
            states[v] = a
            counts[v] += 1
        states = tuple(states)
        g = self.graphs[rs.graph]
        inactive = rs.inactive | settle(self.lang, g, states, rs.inactive)
        counts = tuple(counts)
        if len(inactive) == self.n:
            hit = Outcome(True, self.payoffs(rs.graph, states, counts, inactive), None, states)
        else:
            hit = Outcome(False, None, RoundState(rs.graph, rs.round + 1, states, counts, inactive), states)
        self._outcomes[key] = hit
        return hit

    def payoffs(self, g: int, states, counts, inactive) -> tuple:
        """Exact payoffs for players whose ball is inactive, 0 for the rest."""
        out = []
        for i in range(self.n):
            b = self._balls[g][i]
            if all(j in inactive for j in b):
                time = max(counts[j] for j in b) - 1
                value = self.pref(ball(self.graphs[g], states, i, self.lang.radius))
                out.append(self.delta**time * value)
            else:
                out.append(0.0)
        return tuple(out)

    def open_players(self, g: int, inactive) -> tuple:
        return tuple(
            i for i in range(self.n) if not all(j in inactive for j in self._balls[g][i])
        )

    def info_key(self, g: int, v: int, seqs: tuple, inactive=frozenset()) -> str:
        """Canonical information-set key: the player's id and the past-round
        actions of every vertex in its ball, e.g. ``"p0|0:G,R|1:G,G"``.

        Ball vertices that have already settled are marked with ``*``:
        availability depends on them, and settlement can hinge on labels
        outside the ball.
        """
        parts = [f"p{v}"]
        b = self._balls[g][v]
        if self.chance:
            edges = ball_shape(self.graphs[g], v, self.lang.radius).edges
            parts.append("b" + ";".join(f"{a}-{c}" for a, c in edges))
        for j in b:
            mark = "*" if j in inactive else ""
            parts.append(f"{j}{mark}:" + ",".join(str(a) for a in seqs[j]))
        return "|".join(parts)


class LclGame:
    """A horizon-``T`` LCL game with an explicit tree (when small) and a
    lumped round-state DAG (always)."""

    def __init__(self, dynamics: LclDynamics, horizon: int, tree: GameTree | None):
        self.dyn = dynamics
        self.horizon = horizon
        self.tree = tree

    @property
    def n_players(self) -> int:
        return self.dyn.n

    @property
    def tail_bound(self) -> float:
        """Payoff a horizon leaf can still be missing: ``delta**T * M``."""
        return self.dyn.delta**self.horizon * self.dyn.bound

    def round_states(self) -> list[list[RoundState]]:
        """Round states reachable under some play, grouped by round."""
        layers = [[rs for _, rs in self.dyn.initial()]]
        for r in range(self.horizon):
            nxt = {}
            for rs in layers[-1]:
                for joint in joint_actions(self.dyn, rs):
                    out = self.dyn.outcome(rs, joint)
                    if not out.terminal:
                        nxt[out.next] = None
            if not nxt:
                break
            layers.append(list(nxt))
        return layers


def joint_actions(dyn: LclDynamics, rs: RoundState):
    return itertools.product(*(dyn.available(rs, v) for v in dyn.movers(rs)))


def build_lcl_game(
    lang: LclLanguage,
    graphs,
    pref: Preference,
    delta: float,
    horizon: int,
    budget: int | None = 200_000,
    explicit: bool = True,
) -> LclGame:
    """Build the horizon-``horizon`` game.

    ``graphs`` is a :class:`Graph` or a list of ``(graph, probability)``
    pairs, in which case chance picks the graph at the root. With
    ``explicit`` the full history tree is built, raising
    :class:`BudgetExceeded` past ``budget`` nodes.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    dyn = LclDynamics(lang, graphs, pref, delta)
    tree = _build_tree(dyn, horizon, budget) if explicit else None
    return LclGame(dyn, horizon, tree)


def _build_tree(dyn: LclDynamics, horizon: int, budget: int | None) -> GameTree:
    tree = GameTree(dyn.n)
    empty = tuple(() for _ in range(dyn.n))

    def check_budget():
        if budget is not None and len(tree.nodes) > budget:
            raise BudgetExceeded(f"explicit tree exceeds {budget} nodes")

    def decision(rs: RoundState, v: int, seqs) -> dict:
        return dict(
            mover=v,
            key=dyn.info_key(rs.graph, v, seqs, rs.inactive),
            markov=dyn.markov_key(rs, v),
        )

    def expand(node: int, rs: RoundState, seqs, pos: int, partial: tuple):
        movers = dyn.movers(rs)
        v = movers[pos]
        for a in dyn.available(rs, v):
            check_budget()
            joint = partial + (a,)
            if pos + 1 < len(movers):
                child = tree.add_child(node, a, **decision(rs, movers[pos + 1], seqs))
                expand(child, rs, seqs, pos + 1, joint)
                continue
            out = dyn.outcome(rs, joint)
            if out.terminal:
                tree.add_child(node, a, payoff=out.payoff)
                continue
            nrs = out.next
            if rs.round == horizon:
                tree.add_child(
                    node, a,
                    payoff=dyn.payoffs(rs.graph, nrs.states, nrs.counts, nrs.inactive),
                    horizon=True,
                    open=dyn.open_players(rs.graph, nrs.inactive),
                )
                continue
            nseqs = list(seqs)
            for u, b in zip(movers, joint):
                nseqs[u] = seqs[u] + (b,)
            nseqs = tuple(nseqs)
            first = dyn.movers(nrs)[0]
            child = tree.add_child(node, a, **decision(nrs, first, nseqs))
            expand(child, nrs, nseqs, 0, ())

    starts = dyn.initial()
    if dyn.chance:
        root = tree.add_root(mover=CHANCE, chance={f"g{g}": p for g, (p, _) in enumerate(starts)})
        for g, (_, rs) in enumerate(starts):
            first = dyn.movers(rs)[0]
            child = tree.add_child(root, f"g{g}", **decision(rs, first, empty))
            expand(child, rs, empty, 0, ())
    else:
        rs = starts[0][1]
        root = tree.add_root(mover=dyn.movers(rs)[0], key=dyn.info_key(0, dyn.movers(rs)[0], empty))
        tree.nodes[root].markov = dyn.markov_key(rs, dyn.movers(rs)[0])
        expand(root, rs, empty, 0, ())
    return tree.finalize()


__all__ = [
    "LanguageError",
    "LclDynamics",
    "LclGame",
    "Outcome",
    "RoundState",
    "build_lcl_game",
    "joint_actions",
]
