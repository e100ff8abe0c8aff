"""Round-synchronous execution of the generic randomized LCL construction.

Every undecided vertex draws a label from its strategy over the currently
compatible actions; vertices whose balls are good at the end of a round
stop. Randomness is counter-based: the draw of vertex ``v`` at round ``r``
is the ``v``-th output of a Philox stream keyed by the seed with counter
``r``, so replaying a vertex only needs ``(seed, v, r)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .graph_core import BOTTOM, Graph, ball, ball_shape
from .lcl_lang import (
    LclLanguage,
    Preference,
    all_balls_good,
    compatible_actions,
    settle,
)


class _Abstain:
    """Proposal that keeps the vertex undecided for the round (the "fake color")."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ABSTAIN"

    def __reduce__(self):
        return (_Abstain, ())


ABSTAIN = _Abstain()


class SimulationError(RuntimeError):
    pass


class StuckError(SimulationError):
    """An active vertex has no compatible action."""


def round_uniforms(seed: int, round_index: int, n: int) -> np.ndarray:
    """The ``n`` uniforms of round ``round_index``; entry ``v`` belongs to vertex ``v``."""
    bits = np.random.Philox(key=seed % (1 << 64), counter=[round_index, 0, 0, 0])
    return np.random.Generator(bits).random(n)


# -- observations -------------------------------------------------------------


@dataclass(frozen=True)
class BallSnapshot:
    vertices: tuple[int, ...]
    labels: tuple[Hashable, ...]
    decided: tuple[bool, ...]

    def undecided_neighbors(self, center: int, graph_neighbors: Sequence[int]) -> int:
        inside = dict(zip(self.vertices, self.decided))
        return sum(1 for w in graph_neighbors if w in inside and not inside[w])


@dataclass(frozen=True)
class ObservationHistory:
    """What vertex ``vertex`` has seen before choosing at round ``round``.

    ``snapshots[k]`` is its radius-t ball at the start of round ``k``
    (labels plus which vertices had decided), so there are ``round + 1``.
    """

    vertex: int
    round: int
    snapshots: tuple[BallSnapshot, ...]
    neighbors: tuple[int, ...] = ()

    @property
    def latest(self) -> BallSnapshot:
        return self.snapshots[-1]

    def undecided_degree(self) -> int:
        return self.latest.undecided_neighbors(self.vertex, self.neighbors)


# -- strategies ---------------------------------------------------------------


def draw(dist: dict, u: float):
    """Inverse-CDF draw from an ordered ``{action: prob}`` map."""
    acc = 0.0
    last = None
    for a, p in dist.items():
        if p <= 0.0:
            continue
        acc += p
        last = a
        if u < acc:
            return a
    return last


class Strategy:
    """A node strategy: observation history and available actions to a law.

    Subclasses implement :meth:`distribution`; :meth:`sample` inverts it
    with the vertex's uniform for the round.
    """

    name = "strategy"

    def distribution(self, obs: ObservationHistory, available: tuple) -> dict:
        raise NotImplementedError

    def sample(self, obs: ObservationHistory, available: tuple, u: float):
        return draw(self.distribution(obs, available), u)

    def __repr__(self):
        return self.name


def _normalize(weights: dict, available: tuple) -> dict:
    total = sum(weights.get(a, 0.0) for a in available)
    if total <= 0.0:
        return {a: 1.0 / len(available) for a in available}
    return {a: weights.get(a, 0.0) / total for a in available}


class Uniform(Strategy):
    name = "uniform"

    def distribution(self, obs, available):
        p = 1.0 / len(available)
        return {a: p for a in available}


class Luby(Strategy):
    """Propose 1 with probability 1/(2 d), d = number of undecided neighbors."""

    name = "luby"

    def distribution(self, obs, available):
        d = obs.undecided_degree()
        p = 1.0 if d == 0 else 1.0 / (2 * d)
        return _normalize({0: 1.0 - p, 1: p}, available)


class BarenboimElkin(Strategy):
    """Abstain with probability 1/2, else a uniformly chosen available color."""

    name = "be_coloring"

    def distribution(self, obs, available):
        k = len(available)
        dist = {ABSTAIN: 0.5}
        dist.update({a: 1.0 / (2 * k) for a in available})
        return dist


class Biased(Strategy):
    """Uniform reweighted by per-action weights; uniform if no available action has weight."""

    def __init__(self, weights: dict):
        if sum(weights.values()) <= 0 or any(w < 0 for w in weights.values()):
            raise ValueError("weights must be non-negative with positive total mass")
        self.weights = dict(weights)
        self.name = "biased(" + ",".join(f"{a}={w:g}" for a, w in self.weights.items()) + ")"

    def distribution(self, obs, available):
        return _normalize(self.weights, available)


class Stubborn(Strategy):
    """Play R for ``rounds`` rounds, then uniform over {G, B}."""

    def __init__(self, rounds: int):
        if rounds < 0:
            raise ValueError("stubborn needs rounds >= 0")
        self.rounds = rounds
        self.name = f"stubborn({rounds})"

    def distribution(self, obs, available):
        if obs.round < self.rounds:
            return _normalize({"R": 1.0}, available)
        return _normalize({"G": 0.5, "B": 0.5}, available)


STRATEGY_NAMES = ("uniform", "luby", "be_coloring", "biased", "stubborn")


def builtin_strategy(name: str, *params) -> Strategy:
    if name == "uniform":
        return Uniform()
    if name == "luby":
        return Luby()
    if name == "be_coloring":
        return BarenboimElkin()
    if name == "biased":
        (weights,) = params
        return Biased(weights)
    if name == "stubborn":
        (rounds,) = params
        return Stubborn(int(rounds))
    raise ValueError(f"unknown strategy {name!r}")


def parse_strategy(spec: str) -> Strategy:
    """CLI syntax: ``luby``, ``stubborn:2``, ``biased:G=2,R=0.1,B=2``."""
    name, _, arg = spec.partition(":")
    if name == "stubborn":
        return builtin_strategy(name, int(arg))
    if name == "biased":
        weights = {}
        for item in arg.split(","):
            key, _, w = item.partition("=")
            weights[int(key) if key.lstrip("-").isdigit() else key] = float(w)
        return builtin_strategy(name, weights)
    if arg:
        raise ValueError(f"strategy {name!r} takes no parameter")
    return builtin_strategy(name)


# -- runs ---------------------------------------------------------------------


@dataclass
class RunResult:
    graph: Graph
    lang: LclLanguage
    labeling: tuple
    decision_round: tuple
    time: tuple
    rounds: int
    terminated: bool
    seed: int
    trace: list = field(repr=False, default_factory=list)
    actions: list = field(repr=False, default_factory=list)
    observations: list = field(repr=False, default_factory=list)

    def valid(self) -> bool:
        return all_balls_good(self.lang, self.graph, self.labeling)


def run(
    graph: Graph,
    lang: LclLanguage,
    strategies: Sequence[Strategy],
    seed: int,
    max_rounds: int,
    record: bool = False,
) -> RunResult:
    """Simulate synchronous rounds until every vertex is inactive.

    With ``record`` the per-round labelings, per-vertex action lists and
    observation histories are kept on the result.
    """
    n = graph.n
    if len(strategies) != n:
        raise ValueError(f"need {n} strategies, got {len(strategies)}")
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    t = lang.radius
    labels: list = [BOTTOM] * n
    inactive: set[int] = set()
    decided_at: list = [None] * n
    shapes = [ball_shape(graph, v, t) for v in range(n)]
    snaps: list[list[BallSnapshot]] = [[] for _ in range(n)]
    trace, actions = [], [[] for _ in range(n)]
    rounds = 0
    for r in range(max_rounds):
        if len(inactive) == n:
            break
        u = round_uniforms(seed, r, n)
        proposed = list(labels)
        for v in range(n):
            if v in inactive:
                continue
            sh = shapes[v]
            snaps[v].append(
                BallSnapshot(
                    sh.vertices,
                    tuple(labels[w] for w in sh.vertices),
                    tuple(w in inactive for w in sh.vertices),
                )
            )
            available = compatible_actions(lang, graph, labels, v, inactive, r)
            if not available:
                raise StuckError(
                    f"vertex {v} has no compatible action at round {r}; "
                    f"{lang.name} is not greedily constructible on this instance"
                )
            obs = ObservationHistory(v, r, tuple(snaps[v]), graph.adjacency[v])
            a = strategies[v].sample(obs, available, float(u[v]))
            if a is not ABSTAIN and a not in available:
                raise SimulationError(f"strategy {strategies[v]} played unavailable {a!r}")
            proposed[v] = BOTTOM if a is ABSTAIN else a
            actions[v].append(a)
        labels = proposed
        new = settle(lang, graph, labels, inactive)
        for v in new:
            decided_at[v] = r
        inactive |= new
        rounds = r + 1
        if record:
            trace.append((tuple(labels), frozenset(inactive)))
    terminated = len(inactive) == n
    time = []
    for v in range(n):
        ds = [decided_at[w] for w in shapes[v].vertices]
        time.append(None if any(d is None for d in ds) else max(ds))
    return RunResult(
        graph,
        lang,
        tuple(labels),
        tuple(decided_at),
        tuple(time),
        rounds,
        terminated,
        seed,
        trace if record else [],
        actions if record else [],
        [tuple(s) for s in snaps] if record else [],
    )


def payoffs(result: RunResult, pref: Preference, delta: float) -> list[float]:
    """delta^time_v * pref(final ball of v); 0 when the ball never settled."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    out = []
    for v in range(result.graph.n):
        tv = result.time[v]
        if tv is None:
            out.append(0.0)
        else:
            b = ball(result.graph, result.labeling, v, result.lang.radius)
            out.append(delta**tv * pref(b))
    return out


# -- Monte Carlo --------------------------------------------------------------


@dataclass
class Stats:
    trials: int
    base_seed: int
    max_rounds: int
    terminated: int
    histogram: list[int]
    p_leq_r: list[float]
    mean_payoffs: list[float]
    stderr: list[float]
    invalid: int
    irrevocability_violations: int

    @property
    def censored_fraction(self) -> float:
        return 1.0 - self.terminated / self.trials

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "base_seed": self.base_seed,
            "max_rounds": self.max_rounds,
            "terminated": self.terminated,
            "censored_fraction": self.censored_fraction,
            "histogram": self.histogram,
            "p_leq_r": self.p_leq_r,
            "mean_payoffs": self.mean_payoffs,
            "stderr": self.stderr,
            "invalid": self.invalid,
            "irrevocability_violations": self.irrevocability_violations,
        }


def irrevocability_violations(result: RunResult) -> int:
    """Count label changes of vertices after they became inactive (needs ``record``)."""
    bad = 0
    for r, (labels, _) in enumerate(result.trace):
        for v, d in enumerate(result.decision_round):
            if d is not None and d < r and labels[v] != result.labeling[v]:
                bad += 1
    return bad


def _trial_chunk(args):
    graph, lang, strategies, pref, delta, seeds, max_rounds = args
    rows = []
    for s in seeds:
        res = run(graph, lang, strategies, s, max_rounds, record=True)
        rows.append(
            (
                res.rounds,
                res.terminated,
                payoffs(res, pref, delta),
                res.terminated and not res.valid(),
                irrevocability_violations(res),
            )
        )
    return rows


def monte_carlo(
    graph: Graph,
    lang: LclLanguage,
    strategies: Sequence[Strategy],
    delta: float,
    pref: Preference,
    trials: int,
    base_seed: int,
    max_rounds: int = 100,
    jobs: int = 1,
) -> Stats:
    """Independent trials with seeds ``base_seed + i``.

    Results do not depend on ``jobs``. Non-terminated trials count as
    censored: payoff 0 for undecided balls, excluded from the histogram.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seeds = [base_seed + i for i in range(trials)]
    if jobs <= 1:
        rows = _trial_chunk((graph, lang, strategies, pref, delta, seeds, max_rounds))
    else:
        size = math.ceil(trials / jobs)
        chunks = [seeds[i : i + size] for i in range(0, trials, size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(
                _trial_chunk,
                [(graph, lang, strategies, pref, delta, c, max_rounds) for c in chunks],
            )
            rows = [row for part in parts for row in part]
    histogram = [0] * (max_rounds + 1)
    terminated = 0
    for rounds, term, *_ in rows:
        if term:
            terminated += 1
            histogram[rounds] += 1
    acc, p_leq = 0, []
    for count in histogram:
        acc += count
        p_leq.append(acc / trials)
    pay = np.array([row[2] for row in rows], dtype=float)
    mean = pay.mean(axis=0)
    se = pay.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(graph.n)
    return Stats(
        trials,
        base_seed,
        max_rounds,
        terminated,
        histogram,
        p_leq,
        [float(x) for x in mean],
        [float(x) for x in se],
        sum(1 for row in rows if row[3]),
        sum(row[4] for row in rows),
    )
