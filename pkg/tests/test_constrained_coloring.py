import math

import pytest

from lclgame.constrained_coloring import (
    INF,
    CcParams,
    CcPureStrategy,
    cc_game,
    convergence_law,
    deviations,
    engine_payoff,
    parse_cc_strategy,
    payoff_vs_s0,
    payoff_vs_sk,
    s0,
    sk,
    verify_fact1_2,
    verify_fact3,
    verify_fact4,
)
from lclgame.lcl_lang import Preference

P = CcParams(0.5, 2)


def test_strategy_queries():
    s = CcPureStrategy(("R", "G", "R"))
    assert s.first_red() == 0 and s.first_green_blue() == 1
    assert s.action_at(5) is None
    assert CcPureStrategy(("G", "R"), "repeat-last").action_at(9) == "R"
    p = CcPureStrategy(("R",), "periodic", ("G", "B", "R"))
    assert [p.action_at(r) for r in range(5)] == ["R", "G", "B", "R", "G"]
    assert p.shift(2).cycle == ("B", "R", "G")
    assert s0().first_red() == INF and s0().first_green_blue() == 0
    assert sk(3).first_green_blue() == 3
    assert CcPureStrategy(("R",), "repeat-last").first_green_blue() == INF
    assert CcPureStrategy(("G", "R"), "repeat-last").shift(5) == CcPureStrategy(("R",), "repeat-last")


def test_strategy_validation_and_parsing():
    with pytest.raises(ValueError):
        CcPureStrategy(("X",))
    with pytest.raises(ValueError):
        CcPureStrategy((), "repeat-last")
    with pytest.raises(ValueError):
        CcParams(1.0, 2)
    assert parse_cc_strategy("s0") == s0()
    assert parse_cc_strategy("sk:2") == sk(2)
    assert parse_cc_strategy("RG/repeat-last") == CcPureStrategy(("R", "G"), "repeat-last")
    assert parse_cc_strategy("-/periodic:GB") == CcPureStrategy((), "periodic", ("G", "B"))


def test_closed_form_examples():
    # hand-computed: red first at t=1 against s0
    assert payoff_vs_s0(CcPureStrategy(("G", "R")), P) == pytest.approx(1 - 0.25 * 0.75)
    assert payoff_vs_s0(s0(), P) == 1.0
    assert payoff_vs_s0(sk(2), P) == pytest.approx(0.25)
    assert payoff_vs_sk(sk(2), P) == pytest.approx(0.25)
    assert payoff_vs_sk(s0(), P) == pytest.approx(0.5**2)
    assert payoff_vs_sk(CcPureStrategy(("R", "G")), P) == pytest.approx(0.5**3)
    assert payoff_vs_sk(CcPureStrategy(("R",), "repeat-last"), P) == pytest.approx(0.5**4)
    # t' = k, then red right away in the shifted strategy
    assert payoff_vs_sk(CcPureStrategy(("R", "R", "G", "R")), P) == pytest.approx(0.25 * (1 - 0.25 * 0.75))


def test_convergence_law():
    assert convergence_law(1) == 0.5
    assert convergence_law(3) == 0.875
    assert convergence_law(60) == pytest.approx(1.0)


def test_engine_matches_closed_forms_sample():
    game = cc_game(P, 24)
    for s in list(deviations(3))[::7]:
        assert abs(engine_payoff(game, s, s0()) - payoff_vs_s0(s, P)) <= game.tail_bound + 1e-9
        assert abs(engine_payoff(game, s, sk(2)) - payoff_vs_sk(s, P)) <= game.tail_bound + 1e-9


def test_recurrence_against_s0():
    # Pi(s, s0) = (2 - d)/2 + (d/2) Pi(s shifted by one, s0) when s opens with G or B
    game = cc_game(P, 24)
    for s in deviations(3):
        if s.action_at(0) in ("G", "B"):
            lhs = engine_payoff(game, s, s0())
            rhs = (2 - P.delta) / 2 + P.delta / 2 * engine_payoff(game, s.shift(1), s0())
            assert lhs == pytest.approx(rhs, abs=2 * game.tail_bound + 1e-9)


def test_dominance_order():
    game = cc_game(P, 24)
    dk = P.delta**P.k
    for s in deviations(4):
        assert engine_payoff(game, s0(), s) >= dk - game.tail_bound - 1e-9
        assert engine_payoff(game, sk(2), s) <= dk + game.tail_bound + 1e-9


def test_facts_hold():
    for cert in (verify_fact1_2(P, 3), verify_fact3(P, 4), verify_fact4(P, 4)):
        assert cert.ok, cert.counterexample
        doc = cert.to_dict()
        assert doc["ok"] and doc["counterexample"] is None
        assert all({"lhs", "rhs", "tol", "relation"} <= set(c) for c in doc["checks"])


class RedRewarded(Preference):
    """Corrupted table: any red pair pays more than a green/blue pair."""

    bound = 2.0

    def value(self, b):
        return 2.0 if "R" in (b.center_label(), *b.neighbor_labels()) else 1.5


def test_corrupted_payoffs_fail_certification():
    cert = verify_fact3(P, 3, pref=RedRewarded())
    assert not cert.ok
    bad = cert.counterexample
    assert bad.lhs != pytest.approx(bad.rhs)
    assert not verify_fact1_2(P, 2, pref=RedRewarded()).ok


def test_stubborn_zero_equals_s0_in_engine():
    game = cc_game(P, 24)
    assert engine_payoff(game, s0(), s0()) == pytest.approx(1.0, abs=game.tail_bound)
    assert math.isclose(engine_payoff(game, sk(2), s0()), 0.25, abs_tol=1e-12)
