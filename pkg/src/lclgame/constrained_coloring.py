"""The two-player constrained-coloring game on K2: pure strategies, closed
forms for their payoffs and checkable certificates for the equilibrium facts.

Colors are G, R, B. A green/blue pair pays ``2 - delta`` to both players,
any pair involving red pays ``delta**k``, equal colors replay the round.
``s0`` plays G or B uniformly from round 0; ``s^k`` plays R for k rounds
and then behaves like ``s0``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

from .graph_core import make_family
from .game import Component, build_lcl_game, equilibrium_gap, expected_payoff
from .game.tree import InfoView
from .lcl_lang import CONSTRAINED_COLORING, CcPreference, Preference

COLORS = ("G", "R", "B")
TAILS = ("uniform-GB", "repeat-last", "periodic")
INF = math.inf


@dataclass(frozen=True)
class CcParams:
    delta: float
    k: int

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def bound(self) -> float:
        return max(2.0 - self.delta, self.delta**self.k)


@dataclass(frozen=True)
class CcPureStrategy(Component):
    """A fixed color per round: ``prefix``, then the tail.

    Tails: ``uniform-GB`` mixes G and B evenly (as ``s0`` does),
    ``repeat-last`` repeats the last prefix color, ``periodic`` cycles
    through ``cycle``.
    """

    prefix: tuple = ()
    tail: str = "uniform-GB"
    cycle: tuple = ()
    markov = True

    def __post_init__(self):
        if any(c not in COLORS for c in self.prefix + self.cycle):
            raise ValueError(f"colors must be among {COLORS}")
        if self.tail not in TAILS:
            raise ValueError(f"tail must be one of {TAILS}")
        if self.tail == "repeat-last" and not self.prefix:
            raise ValueError("repeat-last needs a non-empty prefix")
        if self.tail == "periodic" and not self.cycle:
            raise ValueError("periodic tail needs a cycle")

    def action_at(self, r: int) -> str | None:
        """Color played in round ``r``; ``None`` means uniform over G and B."""
        if r < len(self.prefix):
            return self.prefix[r]
        if self.tail == "uniform-GB":
            return None
        if self.tail == "repeat-last":
            return self.prefix[-1]
        return self.cycle[(r - len(self.prefix)) % len(self.cycle)]

    def local(self, view: InfoView) -> dict:
        a = self.action_at(view.round)
        if a is None:
            dist = {"G": 0.5, "B": 0.5}
        else:
            dist = {a: 1.0}
        return {x: dist.get(x, 0.0) for x in view.available}

    def _first(self, red: bool) -> float:
        # rounds are checked up to where the strategy becomes periodic
        horizon = len(self.prefix) + max(1, len(self.cycle))
        for r in range(horizon):
            a = self.action_at(r)
            if (a == "R") == red:
                return r
        return INF

    def first_red(self) -> float:
        return self._first(True)

    def first_green_blue(self) -> float:
        return self._first(False)

    def shift(self, k: int) -> "CcPureStrategy":
        """The strategy from round ``k`` on, as a strategy of its own."""
        if k <= len(self.prefix):
            rest = self.prefix[k:]
            if self.tail == "repeat-last" and not rest:
                rest = (self.prefix[-1],)
            return CcPureStrategy(rest, self.tail, self.cycle)
        if self.tail == "uniform-GB":
            return CcPureStrategy((), "uniform-GB")
        if self.tail == "repeat-last":
            return CcPureStrategy((self.prefix[-1],), "repeat-last")
        off = (k - len(self.prefix)) % len(self.cycle)
        return CcPureStrategy((), "periodic", self.cycle[off:] + self.cycle[:off])

    def label(self) -> str:
        body = "".join(self.prefix) or "-"
        if self.tail == "periodic":
            return f"{body}/periodic:{''.join(self.cycle)}"
        return f"{body}/{self.tail}"


def s0() -> CcPureStrategy:
    return CcPureStrategy((), "uniform-GB")


def sk(k: int) -> CcPureStrategy:
    return CcPureStrategy(("R",) * k, "uniform-GB")


def parse_cc_strategy(text: str) -> CcPureStrategy:
    """``s0``, ``sk:2``, ``RRG`` (uniform tail), ``RG/repeat-last`` or
    ``R/periodic:GB``; ``-`` is the empty prefix."""
    text = text.strip()
    if text == "s0":
        return s0()
    if text.startswith("sk:"):
        return sk(int(text[3:]))
    body, _, tail = text.partition("/")
    prefix = tuple("" if body == "-" else body)
    if not tail:
        return CcPureStrategy(prefix)
    if tail.startswith("periodic:"):
        return CcPureStrategy(prefix, "periodic", tuple(tail[len("periodic:"):]))
    return CcPureStrategy(prefix, tail)


def deviations(depth: int, tails=("uniform-GB", "repeat-last")):
    """All pure strategies with a prefix of length at most ``depth``."""
    for n in range(depth + 1):
        for prefix in itertools.product(COLORS, repeat=n):
            for tail in tails:
                if tail == "repeat-last" and not prefix:
                    continue
                yield CcPureStrategy(prefix, tail)


# -- closed forms -------------------------------------------------------------


def payoff_vs_s0(s: CcPureStrategy, params: CcParams) -> float:
    """Payoff of ``s`` against ``s0``: ``1 - (delta/2)**t (1 - delta**k)``
    with ``t`` the first red round, and 1 if red is never played."""
    t = s.first_red()
    if t == INF:
        return 1.0
    d, k = params.delta, params.k
    return 1.0 - (d / 2) ** t * (1.0 - d**k)


def payoff_vs_sk(s: CcPureStrategy, params: CcParams) -> float:
    """Payoff of ``s`` against ``s^k``, split on the first green/blue round ``t'``."""
    d, k = params.delta, params.k
    t1 = s.first_green_blue()
    if t1 < k:
        return d ** (t1 + k)
    if t1 > k:
        return d ** (2 * k)
    return d**k * payoff_vs_s0(s.shift(k), params)


def convergence_law(r: int) -> float:
    """Probability that ``(s0, s0)`` has finished within ``r`` rounds."""
    return 1.0 - 2.0**-r


# -- certificates ----------------------------------------------------------------


@dataclass
class Check:
    name: str
    lhs: float
    rhs: float
    relation: str
    tol: float
    ok: bool


@dataclass
class Certificate:
    claim: str
    params: dict
    horizon: int
    tail_bound: float
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def counterexample(self) -> Check | None:
        return next((c for c in self.checks if not c.ok), None)

    def add(self, name: str, lhs: float, rhs: float, relation: str, tol: float) -> bool:
        if relation == "==":
            ok = abs(lhs - rhs) <= tol
        elif relation == "<=":
            ok = lhs <= rhs + tol
        elif relation == ">":
            ok = lhs > rhs + tol
        else:
            raise ValueError(relation)
        self.checks.append(Check(name, float(lhs), float(rhs), relation, float(tol), ok))
        return ok

    def to_dict(self, failures_only: bool = False) -> dict:
        checks = [c for c in self.checks if not (failures_only and c.ok)]
        ce = self.counterexample
        return {
            "claim": self.claim,
            "ok": self.ok,
            "params": self.params,
            "horizon": self.horizon,
            "tail_bound": self.tail_bound,
            "n_checks": len(self.checks),
            "counterexample": asdict(ce) if ce else None,
            "checks": [asdict(c) for c in checks],
        }

    def to_json(self, failures_only: bool = False) -> str:
        return json.dumps(self.to_dict(failures_only), indent=1)


def cc_game(params: CcParams, horizon: int = 24, pref: Preference | None = None):
    pref = pref or CcPreference(params.delta, params.k)
    return build_lcl_game(
        CONSTRAINED_COLORING, make_family("k2"), pref, params.delta, horizon, explicit=False
    )


def engine_payoff(game, s: Component, t: Component) -> float:
    """Payoff of player 1 playing ``s`` against ``t``."""
    return expected_payoff(game, [s, t]).values[0]


def verify_fact1_2(params: CcParams, depth: int = 5, horizon: int = 24,
                   pref: Preference | None = None) -> Certificate:
    """Closed forms against the engine for every pure deviation up to ``depth``."""
    game = cc_game(params, horizon, pref)
    tol = game.tail_bound + 1e-9
    cert = Certificate("closed forms", asdict(params), horizon, game.tail_bound)
    base, red = s0(), sk(params.k)
    for s in deviations(depth):
        cert.add(f"{s.label()} vs s0", engine_payoff(game, s, base), payoff_vs_s0(s, params), "==", tol)
        cert.add(f"{s.label()} vs sk", engine_payoff(game, s, red), payoff_vs_sk(s, params), "==", tol)
    return cert


def verify_fact3(params: CcParams, depth: int = 6, horizon: int = 24,
                 pref: Preference | None = None) -> Certificate:
    """``(s^k, s^k)`` is an equilibrium: no pure deviation up to ``depth``
    and no best response in the truncated game beats ``delta**k``."""
    game = cc_game(params, horizon, pref)
    tol = game.tail_bound + 1e-9
    cert = Certificate("(s^k, s^k) is a Nash equilibrium", asdict(params), horizon, game.tail_bound)
    red = sk(params.k)
    eq = engine_payoff(game, red, red)
    target = params.delta**params.k
    cert.add("value of (s^k, s^k)", eq, target, "==", tol)
    for s in deviations(depth):
        got = engine_payoff(game, s, red)
        cert.add(f"deviation {s.label()}", got, eq, "<=", tol)
        cert.add(f"closed form {s.label()}", got, payoff_vs_sk(s, params), "==", tol)
    gap = equilibrium_gap(game, [red, red])
    cert.add("best-response gap", gap.max_gap, 0.0, "<=", 2 * tol)
    return cert


def verify_fact4(params: CcParams, depth: int = 6, horizon: int = 24,
                 pref: Preference | None = None) -> Certificate:
    """``s^k`` is weakly dominated by ``s0``, strictly against ``s0``."""
    game = cc_game(params, horizon, pref)
    tol = game.tail_bound + 1e-9
    cert = Certificate("s^k is weakly dominated by s0", asdict(params), horizon, game.tail_bound)
    base, red = s0(), sk(params.k)
    for t in deviations(depth):
        cert.add(f"against {t.label()}", engine_payoff(game, red, t), engine_payoff(game, base, t), "<=", 2 * tol)
    strict = engine_payoff(game, base, base) - engine_payoff(game, red, base)
    cert.add("strict gap against s0", strict, 1.0 - params.delta**params.k, "==", 2 * tol)
    cert.add("strict gap is positive", strict, 0.0, ">", 0.0)
    return cert
