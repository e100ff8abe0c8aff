"""Expected payoffs, best responses, equilibrium gaps, metrics and the
perturbed equilibrium search, on explicit trees or the lumped DAG."""

from __future__ import annotations

import itertools
import math
import sys
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

from .lcl import LclGame, RoundState
from .profiles import (
    Component,
    PerturbationSpec,
    ProfileError,
    Table,
    Uniform,
    is_markov,
    validate_local,
)
from .tree import CHANCE, GameTree, InfoView, enumerate_pure_strategies

TIE_TOL = 1e-12


class ModeError(ValueError):
    """The requested computation needs an explicit tree or full observation."""


@dataclass(frozen=True)
class PayoffReport:
    values: tuple
    horizon_mass: float
    tail_bound: float
    mode: str

    def bracket(self, player: int) -> tuple[float, float]:
        """Interval holding the untruncated payoff."""
        v = self.values[player]
        return v, v + self.horizon_mass * self.tail_bound

    def to_dict(self) -> dict:
        return {
            "values": list(self.values),
            "horizon_mass": self.horizon_mass,
            "tail_bound": self.tail_bound,
            "mode": self.mode,
        }


@dataclass
class BestResponse:
    player: int
    value: float
    component: Table
    choice: dict
    views: dict = field(repr=False, default_factory=dict)


# -- helpers ------------------------------------------------------------------


def _tree_of(game) -> GameTree:
    tree = game if isinstance(game, GameTree) else game.tree
    if tree is None:
        raise ModeError("this computation needs the explicit tree; rebuild with explicit=True")
    return tree


def _tail(game) -> float:
    return game.tail_bound if isinstance(game, LclGame) else 0.0


class _Locals:
    """Memoized, validated local strategies of a profile on a tree."""

    def __init__(self, profile: Sequence[Component]):
        self.profile = profile
        self.cache: dict = {}

    def __call__(self, view: InfoView) -> dict:
        key = (view.player, view.key if view.key is not None else view.markov)
        hit = self.cache.get(key)
        if hit is None:
            hit = validate_local(self.profile[view.player].local(view), view.available)
            self.cache[key] = hit
        return hit


def _edge_prob(tree: GameTree, node, action, locs: _Locals) -> float:
    if node.mover == CHANCE:
        return node.chance[action]
    return locs(tree.view(node))[action]


def reach_probabilities(tree: GameTree, profile: Sequence[Component], skip: int | None = None) -> list:
    """Realization probability of every node. Moves of player ``skip`` count as 1."""
    locs = _Locals(profile)
    rho = [0.0] * len(tree.nodes)
    rho[0] = 1.0
    for node in tree.nodes:  # parents precede children
        if node.terminal or rho[node.id] == 0.0:
            continue
        for a, child in node.children.items():
            p = 1.0 if node.mover == skip else _edge_prob(tree, node, a, locs)
            rho[child] = rho[node.id] * p
    return rho


def realization_probability(tree: GameTree, profile: Sequence[Component], history) -> float:
    locs = _Locals(profile)
    node = tree.root
    p = 1.0
    for a in history:
        if node.terminal or a not in node.children:
            raise KeyError(f"history {tuple(history)!r} not in tree")
        p *= _edge_prob(tree, node, a, locs)
        node = tree.nodes[node.children[a]]
    return p


def _argmax(q: dict, order: tuple):
    best = max(q.values())
    tol = TIE_TOL * max(1.0, abs(best))
    for a in order:
        if q[a] >= best - tol:
            return a
    return order[0]


def _lumped_view(game: LclGame, rs: RoundState, v: int) -> InfoView:
    dyn = game.dyn
    return InfoView(v, rs.counts[v], dyn.available(rs, v), None, dyn.markov_key(rs, v))


def _resolve_mode(game, profile, mode: str, need_full: bool = False) -> str:
    if mode not in ("auto", "explicit", "lumped"):
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(game, GameTree):
        if mode == "lumped":
            raise ModeError("lumped mode needs an LCL game")
        return "explicit"
    lumped_ok = is_markov(profile) and (game.dyn.full_observation or not need_full)
    if mode == "lumped":
        if not lumped_ok:
            raise ModeError("lumped mode needs Markov components (and full observation for best responses)")
        return "lumped"
    if mode == "explicit":
        _tree_of(game)
        return "explicit"
    if lumped_ok:
        return "lumped"
    _tree_of(game)
    return "explicit"


# -- expected payoff ------------------------------------------------------------


def expected_payoff(game, profile: Sequence[Component], mode: str = "auto") -> PayoffReport:
    """Expected payoff vector of the (truncated) game.

    Horizon leaves contribute their lower-bound payoffs; the report keeps
    their total probability and the per-leaf tail so the untruncated value
    can be bracketed.
    """
    if _resolve_mode(game, profile, mode) == "lumped":
        return _lumped_payoff(game, profile)
    tree = _tree_of(game)
    rho = reach_probabilities(tree, profile)
    values = [0.0] * tree.n_players
    horizon = 0.0
    for node in tree.terminals():
        p = rho[node.id]
        if p == 0.0:
            continue
        for i, x in enumerate(node.payoff):
            values[i] += p * x
        if node.horizon:
            horizon += p
    return PayoffReport(tuple(values), horizon, _tail(game), "explicit")


def _product(game: LclGame, rs: RoundState, dists: list):
    """Joint actions of the movers with their probabilities (support only)."""
    supports = [[(a, p) for a, p in d.items() if p > 0.0] for d in dists]
    for combo in itertools.product(*supports):
        p = 1.0
        for _, q in combo:
            p *= q
        yield tuple(a for a, _ in combo), p


def _lumped_payoff(game: LclGame, profile) -> PayoffReport:
    dyn = game.dyn
    locs = _Locals(profile)
    values = [0.0] * dyn.n
    horizon = 0.0
    layer: dict = defaultdict(float)
    for p, rs in dyn.initial():
        layer[rs] += p
    for r in range(game.horizon + 1):
        nxt: dict = defaultdict(float)
        for rs, mass in layer.items():
            dists = [locs(_lumped_view(game, rs, v)) for v in dyn.movers(rs)]
            for joint, p in _product(game, rs, dists):
                out = dyn.outcome(rs, joint)
                w = mass * p
                if out.terminal:
                    payoff = out.payoff
                elif r == game.horizon:
                    n = out.next
                    payoff = dyn.payoffs(rs.graph, n.states, n.counts, n.inactive)
                    horizon += w
                else:
                    nxt[out.next] += w
                    continue
                for i, x in enumerate(payoff):
                    values[i] += w * x
        layer = nxt
    return PayoffReport(tuple(values), horizon, game.tail_bound, "lumped")


# -- best responses --------------------------------------------------------------


def best_response(
    game,
    player: int,
    profile: Sequence[Component],
    perturbation: PerturbationSpec | None = None,
    mode: str = "auto",
) -> BestResponse:
    """Best response of ``player`` to the others' components.

    Backward induction over the player's information sets in descending
    round order; ties go to the earliest available action. With a
    perturbation the response is restricted to strategies meeting the
    floors, which puts the floor on every action and the rest on the
    best one.
    """
    others = list(profile)
    others[player] = Uniform()
    if _resolve_mode(game, others, mode, need_full=True) == "lumped":
        return _lumped_br(game, player, others, perturbation)
    return _explicit_br(_tree_of(game), player, others, perturbation)


def _explicit_br(tree: GameTree, player: int, profile, perturbation) -> BestResponse:
    locs = _Locals(profile)
    ro = reach_probabilities(tree, profile, skip=player)
    infosets = tree.player_infosets(player)
    chosen: dict = {}
    views: dict = {}
    value: dict = {}

    def decide(key):
        members = infosets[key]
        view = tree.view(tree.nodes[members[0]])
        q = {a: 0.0 for a in view.available}
        for m in members:
            w = ro[m]
            if w == 0.0:
                continue
            node = tree.nodes[m]
            for a in view.available:
                q[a] += w * V(node.children[a])
        best = _argmax(q, view.available)
        local = perturbation.pin(view, best) if perturbation else {a: float(a == best) for a in view.available}
        chosen[key] = (best, local)
        views[key] = view

    def V(nid: int) -> float:
        hit = value.get(nid)
        if hit is not None:
            return hit
        node = tree.nodes[nid]
        if node.terminal:
            out = node.payoff[player]
        elif node.mover == player:
            if node.key not in chosen:
                decide(node.key)
            local = chosen[node.key][1]
            out = sum(p * V(node.children[a]) for a, p in local.items() if p > 0.0)
        else:
            out = 0.0
            for a, child in node.children.items():
                p = _edge_prob(tree, node, a, locs)
                if p > 0.0:
                    out += p * V(child)
        value[nid] = out
        return out

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10_000))
    try:
        total = V(0)
        # information sets the others never reach still need an action
        for key in infosets:
            if key not in chosen:
                decide(key)
    finally:
        sys.setrecursionlimit(old)
    table = {k: local for k, (_, local) in chosen.items()}
    return BestResponse(
        player, total, Table(table, markov=False), {k: b for k, (b, _) in chosen.items()}, views
    )


def _lumped_br(game: LclGame, player: int, profile, perturbation) -> BestResponse:
    dyn = game.dyn
    locs = _Locals(profile)
    layers = game.round_states()
    V: dict = {}
    table: dict = {}
    choice: dict = {}
    views: dict = {}
    T = game.horizon
    for r in range(len(layers) - 1, -1, -1):
        for rs in layers[r]:
            movers = dyn.movers(rs)

            def cont(joint):
                out = dyn.outcome(rs, joint)
                if out.terminal:
                    return out.payoff[player]
                if r == T:
                    n = out.next
                    return dyn.payoffs(rs.graph, n.states, n.counts, n.inactive)[player]
                return V[out.next]

            if player not in movers:
                dists = [locs(_lumped_view(game, rs, v)) for v in movers]
                V[rs] = sum(p * cont(j) for j, p in _product(game, rs, dists))
                continue
            view = _lumped_view(game, rs, player)
            pos = movers.index(player)
            dists = [locs(_lumped_view(game, rs, v)) for v in movers if v != player]
            q = {a: 0.0 for a in view.available}
            for rest, p in _product(game, rs, dists):
                for a in view.available:
                    q[a] += p * cont(rest[:pos] + (a,) + rest[pos:])
            best = _argmax(q, view.available)
            local = perturbation.pin(view, best) if perturbation else {a: float(a == best) for a in view.available}
            V[rs] = sum(local[a] * q[a] for a in view.available)
            table[view.markov] = local
            choice[view.markov] = best
            views[view.markov] = view
    total = sum(p * V[rs] for p, rs in dyn.initial())
    return BestResponse(player, total, Table(table, markov=True, fallback=Uniform()), choice, views)


# -- equilibrium gap ------------------------------------------------------------------


@dataclass(frozen=True)
class GapReport:
    values: tuple
    best_values: tuple
    tail_bound: float
    mode: str

    @property
    def gaps(self) -> tuple:
        return tuple(b - v for b, v in zip(self.best_values, self.values))

    @property
    def max_gap(self) -> float:
        return max(self.gaps)

    def certified(self, eps: float) -> bool:
        """Gap in the untruncated game at most ``eps`` (up to twice the tail)."""
        return self.max_gap <= eps

    def to_dict(self) -> dict:
        return {
            "values": list(self.values),
            "best_values": list(self.best_values),
            "gaps": list(self.gaps),
            "max_gap": self.max_gap,
            "tail_bound": self.tail_bound,
            "mode": self.mode,
        }


def equilibrium_gap(
    game,
    profile: Sequence[Component],
    perturbation: PerturbationSpec | None = None,
    mode: str = "auto",
) -> GapReport:
    """Per player: best-response value minus current value, in the truncated game."""
    report = expected_payoff(game, profile, mode=mode)
    best = []
    used = report.mode
    for i in range(len(profile)):
        br = best_response(game, i, profile, perturbation, mode=mode)
        best.append(br.value)
        if isinstance(br.component, Table) and not br.component.markov:
            used = "explicit"
    return GapReport(report.values, tuple(best), _tail(game), used)


# -- metrics --------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricReport:
    value: float
    error_bound: float
    witness: tuple | None = None


def outcome_metric(tree: GameTree, p1, p2, depth: int | None = None) -> MetricReport:
    """``sup 2**-round(x) |rho1(x) - rho2(x)|`` over histories of round at
    most ``depth``; histories past ``depth`` can add at most ``2**-depth``."""
    r1 = reach_probabilities(tree, p1)
    r2 = reach_probabilities(tree, p2)
    best, witness = 0.0, None
    max_round = 0
    for node in tree.nodes:
        r = node.round
        max_round = max(max_round, r)
        if depth is not None and r > depth:
            continue
        d = math.ldexp(abs(r1[node.id] - r2[node.id]), -r)
        if d > best:
            best, witness = d, tree.history(node.id)
    bound = 0.0 if depth is None or depth >= max_round else math.ldexp(1.0, -depth)
    return MetricReport(best, bound, witness)


def profile_metric(tree: GameTree, p1, p2, depth: int | None = None, limit: int = 2000) -> MetricReport:
    """Outcome distance of the profiles and of every unilateral pure
    deviation played against each (up to ``limit`` deviations per player)."""
    out = outcome_metric(tree, p1, p2, depth)
    best, witness, bound = out.value, out.witness, out.error_bound
    for i in range(tree.n_players):
        for k, pure in enumerate(enumerate_pure_strategies(tree, i, limit=10**9)):
            if k >= limit:
                break
            comp = pure_component(pure)
            a = list(p1)
            b = list(p2)
            a[i] = comp
            b[i] = comp
            m = outcome_metric(tree, a, b, depth)
            if m.value > best:
                best, witness = m.value, m.witness
    return MetricReport(best, bound, witness)


def pure_component(assignment: dict) -> Table:
    table = {k: {a: 1.0} for k, a in assignment.items()}
    return Table(table, markov=False, fallback=Uniform())


# -- perturbed equilibrium search ---------------------------------------------------------


@dataclass
class SearchResult:
    profile: list
    gap: GapReport
    iterations: int
    converged: bool
    method: str
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
            "gap": self.gap.to_dict(),
            "history": self.history,
        }


@dataclass
class Stationary(Component):
    """Same weights at every decision, renormalized to the available actions."""

    weights: dict
    markov = True

    def local(self, view: InfoView) -> dict:
        w = {a: self.weights.get(a, 0.0) for a in view.available}
        if set(self.weights) <= set(view.available):
            return w  # keep exact weights when nothing is cut away
        total = sum(w.values())
        if total <= 0:
            raise ProfileError("stationary weights vanish on the available actions")
        return {a: x / total for a, x in w.items()}


def perturbed_equilibrium_search(
    game,
    perturbation: PerturbationSpec,
    method: str = "iterated-br",
    eps: float = 1e-6,
    max_iter: int = 200,
    damping: float = 0.5,
    patience: int = 2,
    grid: int = 10,
    mode: str = "auto",
) -> SearchResult:
    """Search for a profile whose perturbed equilibrium gap is at most ``eps``.

    ``iterated-br`` alternates damped perturbed best responses; once the
    best actions stop changing it switches to undamped responses and
    certifies the gap. ``symmetric-grid`` scans stationary symmetric
    profiles that meet the floors and refines around the best point.
    """
    if method == "iterated-br":
        return _iterated_br(game, perturbation, eps, max_iter, damping, patience, mode)
    if method == "symmetric-grid":
        return _symmetric_grid(game, perturbation, eps, grid, mode)
    raise ValueError(f"unknown search method {method!r}")


def _mix(old: Component, br: BestResponse, alpha: float) -> Table:
    table = {}
    for key, view in br.views.items():
        prev = old.local(view)
        new = br.component.table[key]
        table[key] = {a: (1 - alpha) * prev.get(a, 0.0) + alpha * new[a] for a in view.available}
    return Table(table, markov=br.component.markov, fallback=Uniform())


def _iterated_br(game, spec, eps, max_iter, damping, patience, mode) -> SearchResult:
    n = game.n_players
    profile: list = [Uniform() for _ in range(n)]
    last, stable, history = None, 0, []
    it = 0
    while it < max_iter:
        it += 1
        pattern = []
        for i in range(n):
            br = best_response(game, i, profile, spec, mode=mode)
            pattern.append(tuple(sorted(br.choice.items(), key=repr)))
            profile[i] = _mix(profile[i], br, damping)
        pattern = tuple(pattern)
        stable = stable + 1 if pattern == last else 0
        last = pattern
        if stable < patience:
            continue
        # undamped sweeps until no player's best actions move
        for _ in range(4 * n + 4):
            moved = False
            for i in range(n):
                br = best_response(game, i, profile, spec, mode=mode)
                current = getattr(profile[i], "table", None)
                if current != br.component.table:
                    moved = True
                profile[i] = br.component
            if not moved:
                break
        gap = equilibrium_gap(game, profile, spec, mode=mode)
        history.append({"iteration": it, "max_gap": gap.max_gap})
        if gap.max_gap <= eps:
            return SearchResult(profile, gap, it, True, "iterated-br", history)
        stable = 0
    gap = equilibrium_gap(game, profile, spec, mode=mode)
    return SearchResult(profile, gap, it, gap.max_gap <= eps, "iterated-br", history)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _symmetric_grid(game, spec, eps, grid, mode) -> SearchResult:
    if callable(spec.eta):
        raise ValueError("symmetric-grid needs a uniform perturbation")
    if not isinstance(game, LclGame):
        raise ModeError("symmetric-grid needs an LCL game")
    alphabet = game.dyn.lang.alphabet
    eta = float(spec.eta)
    free = 1.0 - eta * len(alphabet)

    def candidate(lam):
        total = sum(lam)
        return {a: eta + free * (x / total) for a, x in zip(alphabet, lam)}

    def score(lam):
        comp = Stationary(candidate(lam))
        profile = [comp] * game.n_players
        return equilibrium_gap(game, profile, spec, mode=mode), profile

    history = []
    best = None
    steps = 0
    scale = grid
    points = list(_compositions(grid, len(alphabet)))
    for _ in range(4):
        for lam in points:
            steps += 1
            gap, profile = score(lam)
            if best is None or gap.max_gap < best[0].max_gap - 1e-15:
                best = (gap, profile, lam)
        history.append({"grid": scale, "max_gap": best[0].max_gap})
        if best[0].max_gap <= eps:
            break
        # zoom: double the resolution and scan the neighbourhood of the best point
        center = tuple(2 * x for x in best[2])
        scale *= 2
        points = [
            lam for lam in _compositions(scale, len(alphabet))
            if all(abs(x - c) <= 2 for x, c in zip(lam, center))
        ]
    gap, profile, _ = best
    return SearchResult(profile, gap, steps, gap.max_gap <= eps, "symmetric-grid", history)
