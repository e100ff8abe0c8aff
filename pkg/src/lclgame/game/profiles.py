"""Behavior-strategy components, perturbations and profile serialization.

A profile is a sequence with one component per player. A component maps
an :class:`InfoView` to a probability dict over ``view.available``.
Components flagged ``markov`` only look at ``view.markov`` (or the round),
so they can be evaluated on the lumped round-state DAG.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .tree import GameTree, InfoView

PROB_TOL = 1e-9


class ProfileError(ValueError):
    pass


def validate_local(dist: Mapping, available: tuple) -> dict:
    extra = set(dist) - set(available)
    if extra:
        raise ProfileError(f"probability on unavailable actions {sorted(map(str, extra))}")
    if any(p < -PROB_TOL for p in dist.values()):
        raise ProfileError("negative probability")
    total = sum(dist.values())
    if abs(total - 1.0) > 1e-6:
        raise ProfileError(f"probabilities sum to {total}, not 1")
    return {a: float(dist.get(a, 0.0)) for a in available}


def uniform_local(available: tuple) -> dict:
    p = 1.0 / len(available)
    return {a: p for a in available}


class Component:
    markov = False

    def local(self, view: InfoView) -> dict:
        raise NotImplementedError


@dataclass
class Uniform(Component):
    markov = True

    def local(self, view: InfoView) -> dict:
        return uniform_local(view.available)


@dataclass
class Table(Component):
    """Local strategies looked up by information-set key (or Markov key).

    Missing keys raise unless ``fallback`` is given.
    """

    table: dict
    markov: bool = False
    fallback: Component | None = None

    def local(self, view: InfoView) -> dict:
        key = view.markov if self.markov else view.key
        dist = self.table.get(key)
        if dist is None:
            if self.fallback is None:
                raise ProfileError(f"no local strategy for {key!r}")
            return self.fallback.local(view)
        return {a: dist.get(a, 0.0) for a in view.available}


@dataclass
class RoundFunction(Component):
    """A component that depends only on the round and the available actions."""

    fn: Callable[[int, tuple], dict]
    markov = True

    def local(self, view: InfoView) -> dict:
        return self.fn(view.round, view.available)


@dataclass
class Truncated(Component):
    """``base`` up to round ``depth``, uniform afterwards."""

    base: Component
    depth: int

    @property
    def markov(self) -> bool:
        return self.base.markov

    def local(self, view: InfoView) -> dict:
        if view.round <= self.depth:
            return self.base.local(view)
        return uniform_local(view.available)


@dataclass
class RandomComponent(Component):
    """Reproducible random local strategies, a pure function of (seed, key)."""

    seed: int
    markov: bool = True

    def local(self, view: InfoView) -> dict:
        key = view.markov if self.markov else view.key
        h = zlib.crc32(repr((view.player, key)).encode())
        rng = np.random.default_rng([self.seed, h])
        w = rng.dirichlet(np.ones(len(view.available)))
        return dict(zip(view.available, w.tolist()))


@dataclass
class Spliced(Component):
    """``first`` through round ``depth``, ``second`` afterwards."""

    first: Component
    second: Component
    depth: int

    @property
    def markov(self) -> bool:
        return self.first.markov and self.second.markov

    def local(self, view: InfoView) -> dict:
        return (self.first if view.round <= self.depth else self.second).local(view)


def is_markov(profile: Sequence[Component]) -> bool:
    return all(c.markov for c in profile)


def induce_to_full(profile: Sequence[Component], depth: int) -> list[Component]:
    """Extend a profile of a horizon-``depth`` game to any longer horizon by
    playing uniformly at rounds past ``depth``."""
    return [Truncated(c, depth) for c in profile]


# -- perturbations -------------------------------------------------------------


@dataclass(frozen=True)
class PerturbationSpec:
    """Minimum probability per action.

    ``eta`` is a uniform floor, or a callable ``(view, action) -> float``.
    Floors must be positive and sum to less than 1 at every decision; the
    uniform case is checked against ``alphabet_size`` at construction.
    """

    eta: float | Callable[[InfoView, Hashable], float]
    alphabet_size: int | None = None

    def __post_init__(self):
        if callable(self.eta):
            return
        if not self.eta > 0:
            raise ProfileError("perturbation must be positive")
        if self.alphabet_size is None:
            raise ProfileError("uniform perturbation needs the alphabet size")
        if self.eta * self.alphabet_size >= 1:
            raise ProfileError(
                f"perturbation {self.eta} x {self.alphabet_size} actions leaves no free mass"
            )

    def floors(self, view: InfoView) -> dict:
        if callable(self.eta):
            out = {a: float(self.eta(view, a)) for a in view.available}
        else:
            out = {a: float(self.eta) for a in view.available}
        if any(x <= 0 for x in out.values()) or sum(out.values()) >= 1:
            raise ProfileError(f"invalid perturbation at {view.key or view.markov!r}")
        return out

    def pin(self, view: InfoView, best) -> dict:
        """Minimum mass everywhere, all the rest on ``best``."""
        out = self.floors(view)
        out[best] += 1.0 - sum(out.values())
        return out

    def admits(self, view: InfoView, dist: Mapping, tol: float = 1e-12) -> bool:
        floors = self.floors(view)
        return all(dist.get(a, 0.0) >= floors[a] - tol for a in view.available)


# -- serialization ---------------------------------------------------------------


def profile_to_json(tree: GameTree, profile: Sequence[Component]) -> str:
    """Explicit profile document: per player, information-set key to a
    probability vector in the order of the available actions."""
    doc = {"players": []}
    for player in range(tree.n_players):
        table = {}
        for key, members in sorted(tree.player_infosets(player).items(), key=lambda kv: str(kv[0])):
            view = tree.view(tree.nodes[members[0]])
            dist = profile[player].local(view)
            table[str(key)] = {
                "actions": [str(a) for a in view.available],
                "probs": [dist.get(a, 0.0) for a in view.available],
            }
        doc["players"].append(table)
    return json.dumps(doc, indent=1, sort_keys=True)


def profile_from_json(text: str, fallback: Component | None = None) -> list[Component]:
    """Inverse of :func:`profile_to_json`. Action labels are kept as strings
    unless they parse as integers."""
    doc = json.loads(text)
    out = []
    for table in doc["players"]:
        parsed = {}
        for key, entry in table.items():
            if len(entry["actions"]) != len(entry["probs"]):
                raise ProfileError(f"length mismatch at {key!r}")
            parsed[key] = {_action(a): float(p) for a, p in zip(entry["actions"], entry["probs"])}
        out.append(Table(parsed, markov=False, fallback=fallback))
    return out


def _action(text: str):
    try:
        return int(text)
    except ValueError:
        return text
