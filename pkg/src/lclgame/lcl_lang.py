"""LCL languages: good-ball predicates, partial goodness, action availability
and an exhaustive greedy-constructibility checker.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Hashable, Sequence

from .graph_core import BOTTOM, Ball, BallShape, Graph, ball, ball_shape


class LanguageError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    """An exhaustive enumeration would exceed the caller's budget."""


@dataclass(frozen=True, eq=False)
class LclLanguage:
    """A radius-t LCL language given by a good-ball predicate.

    ``reactive`` lists labels a vertex may only settle on in reaction to
    already-settled neighbors: such a vertex becomes inactive only when its
    ball is good whatever the still-active vertices end up playing. MIS
    uses ``{0}``, so that a node leaves the race only after a neighbor has
    entered the set.
    """

    name: str
    alphabet: tuple[Hashable, ...]
    radius: int
    good: Callable[[Ball], bool] = field(repr=False)
    reactive: frozenset = frozenset()

    def index(self, action: Hashable) -> int:
        return self.alphabet.index(action)


def _mis_good(b: Ball) -> bool:
    c = b.center_label()
    nbrs = b.neighbor_labels()
    if c == 1:
        return all(x == 0 for x in nbrs)
    return c == 0 and any(x == 1 for x in nbrs)


def _proper_good(b: Ball) -> bool:
    c = b.center_label()
    return all(x != c for x in b.neighbor_labels())


MIS = LclLanguage("mis", (0, 1), 1, _mis_good, reactive=frozenset({0}))
CONSTRAINED_COLORING = LclLanguage("cc", ("G", "R", "B"), 1, _proper_good)


def builtin_language(name: str, q: int | None = None) -> LclLanguage:
    if name == "mis":
        return MIS
    if name in ("cc", "constrained_coloring"):
        return CONSTRAINED_COLORING
    if name == "coloring":
        if q is None or q < 2:
            raise LanguageError("coloring needs q >= 2")
        return _coloring(q)
    raise LanguageError(f"unknown language {name!r}")


@lru_cache(maxsize=None)
def _coloring(q: int) -> LclLanguage:
    return LclLanguage(f"coloring:{q}", tuple(range(1, q + 1)), 1, _proper_good)


def parse_language(spec: str) -> LclLanguage:
    """CLI syntax: ``mis``, ``coloring:q`` or ``cc``."""
    name, _, arg = spec.partition(":")
    if name == "coloring":
        try:
            return builtin_language("coloring", int(arg))
        except ValueError:
            raise LanguageError(f"bad coloring spec {spec!r}") from None
    if arg:
        raise LanguageError(f"language {name!r} takes no parameter")
    return builtin_language(name)


def is_good(lang: LclLanguage, b: Ball) -> bool:
    if b.radius != lang.radius:
        raise LanguageError(f"ball radius {b.radius} != language radius {lang.radius}")
    if not b.is_complete():
        raise LanguageError("is_good called on a ball with undecided labels")
    return bool(lang.good(b))


@lru_cache(maxsize=1 << 18)
def is_partially_good(lang: LclLanguage, b: Ball) -> bool:
    """True iff some filling of the bottom labels makes the ball good.

    Brute force over alphabet^(#bottom); fine for the small radii and
    degrees this package targets.
    """
    if b.radius != lang.radius:
        raise LanguageError(f"ball radius {b.radius} != language radius {lang.radius}")
    holes = [i for i, lab in enumerate(b.labels) if lab is BOTTOM]
    if not holes:
        return bool(lang.good(b))
    labels = list(b.labels)
    for fill in itertools.product(lang.alphabet, repeat=len(holes)):
        for i, a in zip(holes, fill):
            labels[i] = a
        if lang.good(b.with_labels(labels)):
            return True
    return False


@lru_cache(maxsize=1 << 18)
def _compatible(lang: LclLanguage, shape: BallShape, fixed: tuple) -> tuple:
    # fixed: labels of inactive ball vertices, BOTTOM for the free ones
    ci = shape.index(shape.center)
    free = [i for i, lab in enumerate(fixed) if lab is BOTTOM and i != ci]
    labels = list(fixed)
    out = []
    for a in lang.alphabet:
        labels[ci] = a
        for fill in itertools.product(lang.alphabet, repeat=len(free)):
            for i, x in zip(free, fill):
                labels[i] = x
            if lang.good(Ball(shape, tuple(labels))):
                out.append(a)
                break
    return tuple(out)


def compatible_actions(
    lang: LclLanguage,
    graph: Graph,
    labeling: Sequence[Hashable],
    v: int,
    inactive,
    round_index: int | None = None,
) -> tuple:
    """Actions ``a`` such that some good ball around ``v`` agrees with the
    labels of the inactive vertices and gives ``v`` the label ``a``.

    At round 0 every action is available. An empty tuple means the
    instance is stuck (the language is not greedily constructible there).
    """
    if v in inactive:
        raise LanguageError(f"vertex {v} is inactive")
    if round_index == 0:
        return lang.alphabet
    shape = ball_shape(graph, v, lang.radius)
    fixed = tuple(labeling[u] if u in inactive else BOTTOM for u in shape.vertices)
    return _compatible(lang, shape, fixed)


def _robustly_good(lang: LclLanguage, graph: Graph, labels, v: int, settled) -> bool:
    shape = ball_shape(graph, v, lang.radius)
    fixed = tuple(
        labels[u] if (u in settled or u == v) else BOTTOM for u in shape.vertices
    )
    return _all_completions_good(lang, shape, fixed)


@lru_cache(maxsize=1 << 16)
def _all_completions_good(lang: LclLanguage, shape: BallShape, fixed: tuple) -> bool:
    free = [i for i, lab in enumerate(fixed) if lab is BOTTOM]
    labels = list(fixed)
    for fill in itertools.product(lang.alphabet, repeat=len(free)):
        for i, x in zip(free, fill):
            labels[i] = x
        if not lang.good(Ball(shape, tuple(labels))):
            return False
    return True


def settle(lang: LclLanguage, graph: Graph, labels: Sequence[Hashable], inactive) -> frozenset:
    """Active vertices that become inactive given the current labels.

    A labeled active vertex settles when its ball is (partially) good;
    a vertex holding a reactive label settles only once its ball is good
    for every relabeling of the vertices that are not settled, which is
    computed as a fixpoint so that same-round settlements count.
    """
    t = lang.radius
    settled = set(inactive)
    new = set()
    pending = []
    for v in range(graph.n):
        if v in settled or labels[v] is BOTTOM:
            continue
        if labels[v] in lang.reactive:
            pending.append(v)
        elif is_partially_good(lang, ball(graph, labels, v, t)):
            new.add(v)
    settled |= new
    changed = True
    while changed and pending:
        changed = False
        for v in list(pending):
            if _robustly_good(lang, graph, labels, v, settled):
                settled.add(v)
                new.add(v)
                pending.remove(v)
                changed = True
    return frozenset(new)


def all_balls_good(lang: LclLanguage, graph: Graph, labeling: Sequence[Hashable]) -> bool:
    if any(x is BOTTOM for x in labeling):
        return False
    return all(lang.good(ball(graph, labeling, v, lang.radius)) for v in range(graph.n))


def all_balls_partially_good(lang: LclLanguage, graph: Graph, labeling) -> bool:
    return all(
        is_partially_good(lang, ball(graph, labeling, v, lang.radius)) for v in range(graph.n)
    )


def legal_partial(lang: LclLanguage, graph: Graph, labeling) -> bool:
    """All balls partially good, and every decided vertex holding a reactive
    label already has a ball that no undecided vertex can spoil."""
    if not all_balls_partially_good(lang, graph, labeling):
        return False
    decided = {v for v, x in enumerate(labeling) if x is not BOTTOM}
    return all(
        _robustly_good(lang, graph, labeling, v, decided)
        for v in decided
        if labeling[v] in lang.reactive
    )


def check_labeling(lang: LclLanguage, graph: Graph, labeling: Sequence[Hashable]) -> None:
    if len(labeling) != graph.n:
        raise LanguageError("labeling length must equal n")
    for v, x in enumerate(labeling):
        if x is not BOTTOM and x not in lang.alphabet:
            raise LanguageError(f"label {x!r} of vertex {v} not in alphabet")


# -- preferences -------------------------------------------------------------


class Preference:
    """Value of a good ball to its center, bounded by ``bound``."""

    name = "preference"
    bound = 1.0

    def value(self, b: Ball) -> float:
        raise NotImplementedError

    def __call__(self, b: Ball) -> float:
        x = float(self.value(b))
        if not 0.0 <= x <= self.bound + 1e-12:
            raise LanguageError(f"preference {x} outside [0, {self.bound}]")
        return x


@dataclass(frozen=True)
class MisPreference(Preference):
    member: float = 0.5
    non_member: float = 1.0
    name: str = "mis"

    @property
    def bound(self) -> float:
        return max(self.member, self.non_member)

    def value(self, b: Ball) -> float:
        return self.member if b.center_label() == 1 else self.non_member


@dataclass(frozen=True)
class UniformPreference(Preference):
    level: float = 1.0
    name: str = "uniform"

    @property
    def bound(self) -> float:
        return self.level

    def value(self, b: Ball) -> float:
        return self.level


@dataclass(frozen=True)
class CcPreference(Preference):
    """Constrained coloring: 2-delta for a green/blue pair, delta^k when red is involved."""

    delta: float
    k: int
    name: str = "cc"

    @property
    def bound(self) -> float:
        return max(2.0 - self.delta, self.delta**self.k)

    def value(self, b: Ball) -> float:
        if b.center_label() == "R" or "R" in b.neighbor_labels():
            return self.delta**self.k
        return 2.0 - self.delta


@dataclass(frozen=True)
class TablePreference(Preference):
    """Preference from a JSON-style table keyed by :meth:`Ball.key`."""

    table: tuple[tuple[str, float], ...]
    default: float | None = None
    name: str = "table"

    @classmethod
    def from_dict(cls, table: dict, default: float | None = None) -> "TablePreference":
        if not table:
            raise LanguageError("empty preference table")
        return cls(tuple(sorted((str(k), float(v)) for k, v in table.items())), default)

    @property
    def bound(self) -> float:
        vals = [v for _, v in self.table]
        return max(vals + ([self.default] if self.default is not None else []))

    def value(self, b: Ball) -> float:
        key = b.key()
        for k, v in self.table:
            if k == key:
                return v
        if self.default is None:
            raise LanguageError(f"no preference for ball {key!r}")
        return self.default


PREFERENCE_PRESETS = ("mis", "mis-zero", "uniform", "cc")


def parse_preference(spec: str | None, lang: LclLanguage, delta: float, k: int = 1) -> Preference:
    """Preset name or a path to a JSON table."""
    if spec is None:
        spec = "cc" if lang.name == "cc" else ("mis" if lang.name == "mis" else "uniform")
    if spec == "mis":
        return MisPreference()
    if spec == "mis-zero":
        return MisPreference(0.0, 1.0, name="mis-zero")
    if spec == "uniform":
        return UniformPreference()
    if spec == "cc":
        return CcPreference(delta, k)
    try:
        with open(spec) as fh:
            return TablePreference.from_dict(json.load(fh))
    except OSError:
        raise LanguageError(f"unknown preference preset or file {spec!r}") from None


# -- greedy constructibility -------------------------------------------------


@dataclass(frozen=True)
class GreedyWitness:
    """A partial labeling on which greedy extension fails.

    ``condition`` is ``"no-extension-progress"`` (no extension settles any
    undecided vertex) or ``"bad-extension"`` (some progressing extension
    leaves a ball that cannot be completed).
    """

    lang: LclLanguage
    graph: Graph
    partial: tuple
    condition: str
    extension: tuple | None = None
    result: tuple | None = None

    def replay(self) -> bool:
        undecided = [v for v, x in enumerate(self.partial) if x is BOTTOM]
        decided = frozenset(v for v in range(self.graph.n) if v not in undecided)
        if not undecided or not legal_partial(self.lang, self.graph, self.partial):
            return False
        if self.condition == "no-extension-progress":
            return _first_violation(self.lang, self.graph, self.partial) == (self.condition, None, None)
        new = settle(self.lang, self.graph, self.extension, decided)
        after = tuple(self.extension[v] if v in new else self.partial[v] for v in range(self.graph.n))
        return bool(new) and not legal_partial(self.lang, self.graph, after)

    def to_dict(self) -> dict:
        return {
            "language": self.lang.name,
            "graph": json.loads(self.graph.to_json()),
            "partial": list(self.partial),
            "condition": self.condition,
            "extension": None if self.extension is None else list(self.extension),
            "result": None if self.result is None else list(self.result),
        }


def _first_violation(lang: LclLanguage, graph: Graph, s: tuple):
    undecided = [v for v, x in enumerate(s) if x is BOTTOM]
    decided = frozenset(v for v in range(graph.n) if s[v] is not BOTTOM)
    progress = False
    ext = list(s)
    for fill in itertools.product(lang.alphabet, repeat=len(undecided)):
        for v, a in zip(undecided, fill):
            ext[v] = a
        new = settle(lang, graph, ext, decided)
        if not new:
            continue
        progress = True
        after = tuple(ext[v] if v in new else s[v] for v in range(graph.n))
        if not legal_partial(lang, graph, after):
            return "bad-extension", tuple(ext), after
    if not progress:
        return "no-extension-progress", None, None
    return None


def check_greedy_constructible(
    lang: LclLanguage, graph: Graph, budget: int = 2_000_000
) -> GreedyWitness | None:
    """Exhaustively test greedy constructibility of ``lang`` on ``graph``.

    Partial labelings range over those accepted by :func:`legal_partial`
    (for languages without reactive labels: all balls partially good).
    Returns ``None`` when every such partial labeling can be extended,
    else the first :class:`GreedyWitness` found. Refuses (raises
    :class:`BudgetExceeded`) when ``(|A|+1)^n`` exceeds ``budget``.
    """
    size = (len(lang.alphabet) + 1) ** graph.n
    if size > budget:
        raise BudgetExceeded(f"{size} partial labelings exceed budget {budget}")
    for s in itertools.product((BOTTOM,) + lang.alphabet, repeat=graph.n):
        if BOTTOM not in s or not legal_partial(lang, graph, s):
            continue
        found = _first_violation(lang, graph, s)
        if found is not None:
            condition, ext, after = found
            return GreedyWitness(lang, graph, s, condition, ext, after)
    return None
