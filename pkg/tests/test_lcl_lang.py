import itertools
import json
import time

import pytest

from lclgame.graph_core import ball, make_family
from lclgame.lcl_lang import (
    CONSTRAINED_COLORING,
    MIS,
    BudgetExceeded,
    CcPreference,
    LanguageError,
    MisPreference,
    TablePreference,
    all_balls_good,
    check_greedy_constructible,
    compatible_actions,
    is_good,
    is_partially_good,
    parse_language,
    parse_preference,
    settle,
)


def brute_partially_good(lang, b):
    holes = [i for i, x in enumerate(b.labels) if x is None]
    for fill in itertools.product(lang.alphabet, repeat=len(holes)):
        labels = list(b.labels)
        for i, a in zip(holes, fill):
            labels[i] = a
        if lang.good(b.with_labels(labels)):
            return True
    return False


def test_mis_good_balls():
    g = make_family("path", 3)
    assert is_good(MIS, ball(g, (0, 1, 0), 1, 1))
    assert is_good(MIS, ball(g, (0, 1, 0), 0, 1))
    assert not is_good(MIS, ball(g, (1, 1, 0), 0, 1))
    assert not is_good(MIS, ball(g, (0, 0, 0), 1, 1))
    with pytest.raises(LanguageError):
        is_good(MIS, ball(g, (0, None, 0), 1, 1))


def test_coloring_and_cc_good_balls():
    g = make_family("k2")
    c3 = parse_language("coloring:3")
    assert c3.alphabet == (1, 2, 3)
    assert is_good(c3, ball(g, (1, 2), 0, 1))
    assert not is_good(c3, ball(g, (2, 2), 0, 1))
    assert is_good(CONSTRAINED_COLORING, ball(g, ("G", "R"), 0, 1))
    assert not is_good(CONSTRAINED_COLORING, ball(g, ("R", "R"), 0, 1))


@pytest.mark.parametrize("lang", [MIS, parse_language("coloring:2"), parse_language("coloring:3")])
def test_partial_goodness_matches_enumeration(lang):
    g = make_family("cycle", 4)
    for labels in itertools.product((None,) + lang.alphabet, repeat=4):
        for v in range(4):
            b = ball(g, labels, v, 1)
            assert is_partially_good(lang, b) == brute_partially_good(lang, b)


def test_compatible_actions():
    g = make_family("path", 3)
    # round 0: everything is available
    assert compatible_actions(MIS, g, (None,) * 3, 1, frozenset(), 0) == (0, 1)
    # a settled member next door forces 0
    assert compatible_actions(MIS, g, (1, None, None), 1, frozenset({0}), 1) == (0,)
    # a settled non-member next door does not force anything
    assert compatible_actions(MIS, g, (0, None, None), 1, frozenset({0}), 1) == (0, 1)
    c2 = parse_language("coloring:2")
    assert compatible_actions(c2, g, (1, None, 1), 1, frozenset({0, 2}), 3) == (2,)
    assert compatible_actions(c2, g, (1, None, 2), 1, frozenset({0, 2}), 3) == ()
    with pytest.raises(LanguageError):
        compatible_actions(MIS, g, (1, None, None), 0, frozenset({0}), 1)


def test_settle_reactive_zero():
    g = make_family("path", 3)
    # the 0 at vertex 2 has no member neighbor yet, so it must wait
    assert settle(MIS, g, (1, 1, 0), frozenset()) == frozenset()
    assert settle(MIS, g, (1, 0, 1), frozenset()) == frozenset({0, 1, 2})
    # a 0 next to a settling 1 settles in the same round
    assert settle(MIS, g, (1, 0, None), frozenset()) == frozenset({0, 1})
    assert settle(MIS, g, (0, 0, 0), frozenset()) == frozenset()


def test_settle_nonreactive_uses_partial_goodness():
    g = make_family("path", 3)
    c3 = parse_language("coloring:3")
    assert settle(c3, g, (1, 1, 2), frozenset()) == frozenset({2})
    assert settle(c3, g, (1, 2, None), frozenset()) == frozenset({0, 1})


@pytest.mark.parametrize(
    "spec, family",
    [("coloring:3", ("complete", 3)), ("coloring:3", ("cycle", 4)), ("mis", ("k2",)),
     ("mis", ("path", 3)), ("mis", ("cycle", 4))],
)
def test_greedy_constructible_positive(spec, family):
    assert check_greedy_constructible(parse_language(spec), make_family(*family)) is None


def test_greedy_witness_for_two_coloring_c4():
    t0 = time.perf_counter()
    w = check_greedy_constructible(parse_language("coloring:2"), make_family("cycle", 4))
    assert time.perf_counter() - t0 < 10
    assert w is not None
    assert w.replay()
    doc = w.to_dict()
    assert doc["language"] == "coloring:2"
    assert None in doc["partial"]
    json.dumps(doc)


def test_greedy_budget():
    with pytest.raises(BudgetExceeded):
        check_greedy_constructible(MIS, make_family("cycle", 12), budget=1000)


def test_preferences():
    g = make_family("path", 3)
    member = ball(g, (0, 1, 0), 1, 1)
    other = ball(g, (0, 1, 0), 0, 1)
    assert MisPreference()(member) == 0.5
    assert MisPreference()(other) == 1.0
    assert parse_preference("mis-zero", MIS, 0.5)(member) == 0.0
    cc = CcPreference(0.5, 2)
    k2 = make_family("k2")
    assert cc(ball(k2, ("G", "B"), 0, 1)) == 1.5
    assert cc(ball(k2, ("G", "R"), 0, 1)) == 0.25
    assert cc.bound == 1.5
    table = TablePreference.from_dict({member.key(): 0.7}, default=0.2)
    assert table(member) == 0.7 and table(other) == 0.2
    with pytest.raises(LanguageError):
        TablePreference.from_dict({member.key(): 0.7})(other)
    with pytest.raises(LanguageError):
        parse_preference("nope", MIS, 0.5)


def test_parse_language_errors():
    for bad in ("coloring", "coloring:1", "coloring:x", "mis:2", "matching"):
        with pytest.raises(LanguageError):
            parse_language(bad)


def test_all_balls_good():
    g = make_family("cycle", 4)
    assert all_balls_good(MIS, g, (1, 0, 1, 0))
    assert not all_balls_good(MIS, g, (1, 0, 0, 0))
    assert not all_balls_good(MIS, g, (1, 0, 1, None))
