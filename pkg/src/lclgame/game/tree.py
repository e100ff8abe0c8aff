"""Explicit finite extensive-form game trees and their structural checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterator

CHANCE = -1


@dataclass(frozen=True)
class InfoView:
    """What a profile component gets to see at a decision.

    ``key`` is the information-set key of an explicit tree. ``markov``
    is the coarse ``(round, ball labels, ball inactivity)`` view available
    on LCL games; hand-built trees leave it ``None``.
    """

    player: int
    round: int
    available: tuple
    key: Hashable | None = None
    markov: Hashable | None = None


@dataclass
class Node:
    id: int
    parent: int | None
    action: Hashable | None
    depth: int
    counts: tuple[int, ...]
    mover: int | None = None
    key: Hashable | None = None
    available: tuple = ()
    children: dict = field(default_factory=dict)
    chance: dict | None = None
    payoff: tuple | None = None
    horizon: bool = False
    markov: Hashable | None = None
    open: tuple = ()

    @property
    def terminal(self) -> bool:
        return self.mover is None

    @property
    def round(self) -> int:
        if self.mover is None:
            return self._terminal_round
        return self.counts[self.mover]

    _terminal_round: int = 0


class TreeError(ValueError):
    pass


class GameTree:
    """A finite game tree built node by node.

    Players are ``0..n_players-1``; chance is :data:`CHANCE`. Decision
    nodes carry an information-set key, terminal nodes a payoff vector.
    Horizon leaves (cut by truncation) are terminal with ``horizon=True``
    and a payoff that is a lower bound for the players listed in ``open``.
    """

    def __init__(self, n_players: int):
        self.n_players = n_players
        self.nodes: list[Node] = []
        self.infosets: dict[Hashable, list[int]] = {}

    # -- construction -----------------------------------------------------

    def add_root(self, mover=None, key=None, chance=None, payoff=None) -> int:
        if self.nodes:
            raise TreeError("root already exists")
        node = Node(0, None, None, 0, (0,) * (self.n_players + 1))
        self.nodes.append(node)
        self._assign(node, mover, key, chance, payoff)
        return 0

    def add_child(self, parent: int, action, mover=None, key=None, chance=None, payoff=None,
                  horizon=False, markov=None, open=()) -> int:
        p = self.nodes[parent]
        if p.terminal:
            raise TreeError("cannot extend a terminal node")
        if action in p.children:
            raise TreeError(f"duplicate action {action!r}")
        counts = list(p.counts)
        counts[p.mover] += 1  # CHANCE == -1 indexes the trailing slot
        node = Node(len(self.nodes), parent, action, p.depth + 1, tuple(counts))
        self.nodes.append(node)
        p.children[action] = node.id
        self._assign(node, mover, key, chance, payoff)
        node.horizon = horizon
        node.markov = markov
        node.open = tuple(open)
        return node.id

    def _assign(self, node: Node, mover, key, chance, payoff):
        if mover is None:
            if payoff is None:
                raise TreeError("terminal node needs a payoff")
            node.payoff = tuple(float(x) for x in payoff)
            if node.parent is not None:
                node._terminal_round = self.nodes[node.parent].round
            return
        node.mover = mover
        if mover == CHANCE:
            if not chance:
                raise TreeError("chance node needs probabilities")
            node.chance = dict(chance)
            node.key = ("chance", node.id)
        else:
            node.key = key if key is not None else ("node", node.id)

    def finalize(self) -> "GameTree":
        """Index information sets and fill in available actions."""
        self.infosets = {}
        for node in self.nodes:
            if node.terminal:
                continue
            if not node.children:
                raise TreeError(f"decision node {self.history(node.id)} has no children")
            node.available = tuple(node.children)
            if node.mover == CHANCE:
                total = sum(node.chance.values())
                if abs(total - 1.0) > 1e-9 or set(node.chance) != set(node.children):
                    raise TreeError("chance probabilities must cover the children and sum to 1")
                continue
            self.infosets.setdefault(node.key, []).append(node.id)
        for key, members in self.infosets.items():
            first = self.nodes[members[0]]
            for m in members[1:]:
                other = self.nodes[m]
                if other.mover != first.mover:
                    raise TreeError(f"information set {key!r} mixes players")
                if set(other.available) != set(first.available):
                    raise TreeError(f"information set {key!r} has unequal action sets")
        return self

    # -- queries ------------------------------------------------------------

    @property
    def root(self) -> Node:
        return self.nodes[0]

    def history(self, node_id: int) -> tuple:
        out = []
        node = self.nodes[node_id]
        while node.parent is not None:
            out.append(node.action)
            node = self.nodes[node.parent]
        return tuple(reversed(out))

    def find(self, history) -> int:
        node = self.root
        for a in history:
            if a not in node.children:
                raise KeyError(f"history {tuple(history)!r} not in tree")
            node = self.nodes[node.children[a]]
        return node.id

    def view(self, node: Node) -> InfoView:
        return InfoView(node.mover, node.round, node.available, node.key, node.markov)

    def player_infosets(self, player: int) -> dict[Hashable, list[int]]:
        return {k: m for k, m in self.infosets.items() if self.nodes[m[0]].mover == player}

    def terminals(self) -> Iterator[Node]:
        return (n for n in self.nodes if n.terminal)

    def max_payoff(self) -> float:
        return max((abs(x) for n in self.terminals() for x in n.payoff), default=0.0)


def round_of(tree: GameTree, history) -> int:
    """Number of proper prefixes of ``history`` sharing its mover."""
    return tree.nodes[tree.find(history)].round


# -- structural checks ---------------------------------------------------------


@dataclass(frozen=True)
class StructureWitness:
    check: str
    detail: str
    histories: tuple


def check_well_rounded(tree: GameTree) -> StructureWitness | None:
    """Round must not decrease along any edge (hence along any prefix chain)."""
    for node in tree.nodes:
        if node.parent is None:
            continue
        parent = tree.nodes[node.parent]
        if parent.round > node.round:
            return StructureWitness(
                "well-rounded",
                f"round {parent.round} at prefix exceeds round {node.round}",
                (tree.history(parent.id), tree.history(node.id)),
            )
    return None


def own_moves(tree: GameTree, player: int) -> dict[int, frozenset]:
    """For each decision node of ``player``: its earlier (infoset, action) pairs."""
    out: dict[int, frozenset] = {}
    stack = [(0, frozenset())]
    while stack:
        nid, seen = stack.pop()
        node = tree.nodes[nid]
        if node.terminal:
            continue
        if node.mover == player:
            out[nid] = seen
        for a, child in node.children.items():
            stack.append((child, seen | {(node.key, a)} if node.mover == player else seen))
    return out


def check_perfect_recall(tree: GameTree) -> StructureWitness | None:
    """Every history of an information set must share the player's own past
    information sets and actions."""
    for player in range(tree.n_players):
        own = own_moves(tree, player)
        for key, members in tree.player_infosets(player).items():
            ref = own[members[0]]
            for m in members[1:]:
                if own[m] != ref:
                    missing = sorted(map(repr, ref ^ own[m]))
                    return StructureWitness(
                        "perfect-recall",
                        f"player {player} at {key!r} disagrees on own moves {missing}",
                        (tree.history(members[0]), tree.history(m)),
                    )
    return None


def check_round_coherence(tree: GameTree) -> StructureWitness | None:
    for key, members in tree.infosets.items():
        rounds = {tree.nodes[m].round for m in members}
        if len(rounds) > 1:
            return StructureWitness(
                "round-coherence",
                f"information set {key!r} spans rounds {sorted(rounds)}",
                tuple(tree.history(m) for m in members[:2]),
            )
    return None


# -- pure strategies -------------------------------------------------------------


def enumerate_pure_strategies(tree: GameTree, player: int, limit: int = 100_000):
    """Yield the player's reduced pure strategies as ``{infoset key: action}``.

    Only information sets reachable given the player's own earlier choices
    are assigned. Requires perfect recall. Raises ``OverflowError`` after
    ``limit`` strategies.
    """
    own = own_moves(tree, player)
    roots: list = []
    successors: dict = {}
    seen_keys = set()
    for nid, past in own.items():
        key = tree.nodes[nid].key
        if key in seen_keys:
            continue
        seen_keys.add(key)
        last = _last_own(tree, nid, player)
        if last is None:
            roots.append(key)
        else:
            successors.setdefault(last, []).append(key)
    available = {k: tree.nodes[m[0]].available for k, m in tree.player_infosets(player).items()}
    count = 0

    def rec(frontier, assignment):
        nonlocal count
        if not frontier:
            count += 1
            if count > limit:
                raise OverflowError(f"more than {limit} pure strategies")
            yield dict(assignment)
            return
        u, rest = frontier[0], frontier[1:]
        for a in available[u]:
            assignment[u] = a
            yield from rec(rest + successors.get((u, a), []), assignment)
        del assignment[u]

    yield from rec(roots, {})


def _last_own(tree: GameTree, nid: int, player: int):
    node = tree.nodes[nid]
    while node.parent is not None:
        parent = tree.nodes[node.parent]
        if parent.mover == player:
            return (parent.key, node.action)
        node = parent
    return None
