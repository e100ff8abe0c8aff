"""Command-line entry point.

Exit codes: 0 success, 1 a verification failed (or a witness was found),
2 usage error. Every command embeds its :class:`ExperimentConfig` in the
output so ``--config`` can reproduce the run.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .graph_core import Graph, GraphError, parse_family, parse_graph
from .lcl_lang import (
    PREFERENCE_PRESETS,
    BudgetExceeded,
    LanguageError,
    check_greedy_constructible,
    parse_language,
    parse_preference,
)
from .simulator import STRATEGY_NAMES, monte_carlo, parse_strategy

COMMANDS = ("simulate", "analyze", "verify-cc", "check-greedy", "info")
CHECKS = ("gap", "br", "metric", "structure", "search")
LANGUAGES = ("mis", "coloring:q", "cc")


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str
    lang: str | None = None
    graph: str | None = None
    family: str | None = None
    strategies: list = field(default_factory=list)
    delta: float = 0.5
    k: int = 2
    pref: str | None = None
    seed: int = 0
    trials: int = 1000
    max_rounds: int = 100
    horizon: int = 6
    depth: int = 6
    check: str | None = None
    perturb: float | None = None
    profile: str | None = None
    profile2: str | None = None
    method: str = "iterated-br"
    budget: int | None = None
    out: str | None = None
    csv: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
        if doc.get("command") not in COMMANDS:
            raise UsageError(f"config command must be one of {COMMANDS}")
        return cls(**doc)


# -- argument parsing ------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lclgame", description="Distributed LCL algorithms as games.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command")

    def graph_args(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--graph", help="edge-list file ('n <count>' header, then 'u v' lines)")
        g.add_argument("--family", help="k2, path:N, cycle:N, complete:N, random_bounded:N:D:SEED")

    def common(sp, lang=True):
        if lang:
            sp.add_argument("--lang", help="mis | coloring:q | cc")
        sp.add_argument("--delta", type=float, default=0.5)
        sp.add_argument("--k", type=int, default=2, help="red exponent of the cc preference")
        sp.add_argument("--pref", help=f"preset {PREFERENCE_PRESETS} or a JSON table file")
        sp.add_argument("--out", help="output JSON path (default: stdout)")
        sp.add_argument("--config", help="re-run a saved ExperimentConfig (other flags ignored)")

    s = sub.add_parser("simulate", help="Monte Carlo runs of the synchronous algorithm")
    graph_args(s)
    common(s)
    s.add_argument("--strategy", help=f"comma list, one per vertex or one for all; names {STRATEGY_NAMES}")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-rounds", type=int, default=100)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--csv", help="also write the histogram as CSV")

    a = sub.add_parser("analyze", help="build the extensive-form game and analyze a profile")
    graph_args(a)
    common(a)
    a.add_argument("--horizon", type=int, default=6)
    a.add_argument("--check", choices=CHECKS, default="gap")
    a.add_argument("--perturb", type=float, help="uniform minimum action probability")
    a.add_argument("--profile", help="profile JSON (default: uniform play)")
    a.add_argument("--profile2", help="second profile for --check metric (default: uniform)")
    a.add_argument("--method", default="iterated-br", choices=("iterated-br", "symmetric-grid"))
    a.add_argument("--budget", type=int, default=200_000, help="explicit tree node limit")

    v = sub.add_parser("verify-cc", help="certify the constrained-coloring facts")
    common(v, lang=False)
    v.add_argument("--horizon", type=int, default=24)
    v.add_argument("--depth", type=int, default=6)

    g = sub.add_parser("check-greedy", help="exhaustive greedy-constructibility check")
    graph_args(g)
    g.add_argument("--lang")
    g.add_argument("--budget", type=int, default=2_000_000)
    g.add_argument("--out")
    g.add_argument("--config")

    sub.add_parser("info", help="version, languages, strategies and presets")
    return p


def config_from_args(ns) -> ExperimentConfig:
    if getattr(ns, "config", None):
        try:
            doc = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        cfg = ExperimentConfig.from_dict(doc.get("config", doc))
        for name in ("out", "csv"):
            if getattr(ns, name, None):
                setattr(cfg, name, getattr(ns, name))
        return cfg
    cfg = ExperimentConfig(ns.command)
    for f in fields(ExperimentConfig):
        if f.name in ("command", "strategies"):
            continue
        if getattr(ns, f.name, None) is not None:
            setattr(cfg, f.name, getattr(ns, f.name))
    if getattr(ns, "strategy", None):
        cfg.strategies = [s for s in ns.strategy.split(",") if s]
    return cfg


# -- helpers -----------------------------------------------------------------------


def _graph(cfg: ExperimentConfig) -> Graph:
    if cfg.graph:
        try:
            text = Path(cfg.graph).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read graph: {exc}") from None
        return parse_graph(text)
    if cfg.family:
        return parse_family(cfg.family)
    raise UsageError("need --graph FILE or --family SPEC")


def _lang(cfg: ExperimentConfig):
    if not cfg.lang:
        raise UsageError("need --lang")
    return parse_language(cfg.lang)


def _emit(cfg: ExperimentConfig, doc: dict, stdout) -> None:
    # output paths are left out so a replay to another path is byte-identical
    config = {k: v for k, v in asdict(cfg).items() if k not in ("out", "csv")}
    doc = {"config": config, **doc}
    text = json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        stdout.write(text)


# -- commands --------------------------------------------------------------------


def cmd_simulate(cfg: ExperimentConfig, stdout, jobs: int = 1) -> int:
    graph = _graph(cfg)
    lang = _lang(cfg)
    if not cfg.strategies:
        raise UsageError("need --strategy")
    strategies = [parse_strategy(s) for s in cfg.strategies]
    if len(strategies) == 1:
        strategies = strategies * graph.n
    if len(strategies) != graph.n:
        raise UsageError(f"need 1 or {graph.n} strategies, got {len(strategies)}")
    pref = parse_preference(cfg.pref, lang, cfg.delta, cfg.k)
    stats = monte_carlo(graph, lang, strategies, cfg.delta, pref, cfg.trials, cfg.seed,
                        max_rounds=cfg.max_rounds, jobs=jobs)
    _emit(cfg, stats.to_dict(), stdout)
    if cfg.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rounds", "count", "p_leq_r"])
        for r, (c, p) in enumerate(zip(stats.histogram, stats.p_leq_r)):
            w.writerow([r, c, repr(p)])
        Path(cfg.csv).write_text(buf.getvalue())
    return 1 if stats.invalid or stats.irrevocability_violations else 0


def cmd_analyze(cfg: ExperimentConfig, stdout) -> int:
    from .game import (
        PerturbationSpec,
        Uniform,
        best_response,
        build_lcl_game,
        check_perfect_recall,
        check_round_coherence,
        check_well_rounded,
        equilibrium_gap,
        outcome_metric,
        perturbed_equilibrium_search,
        profile_from_json,
        profile_to_json,
    )

    graph = _graph(cfg)
    lang = _lang(cfg)
    pref = parse_preference(cfg.pref, lang, cfg.delta, cfg.k)
    spec = PerturbationSpec(cfg.perturb, len(lang.alphabet)) if cfg.perturb is not None else None

    def load(path):
        if not path:
            return [Uniform() for _ in range(graph.n)]
        try:
            return profile_from_json(Path(path).read_text())
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise UsageError(f"cannot read profile: {exc}") from None

    profile = load(cfg.profile)
    # prefer the explicit tree; gap and search can fall back to the lumped graph when it is too big
    lumped_ok = cfg.check in ("gap", "search") and cfg.profile is None
    try:
        game = build_lcl_game(lang, graph, pref, cfg.delta, cfg.horizon, budget=cfg.budget)
    except BudgetExceeded as exc:
        if not lumped_ok:
            raise UsageError(f"{exc}; lower --horizon or raise --budget") from None
        game = build_lcl_game(lang, graph, pref, cfg.delta, cfg.horizon, explicit=False)
    doc: dict = {"horizon": cfg.horizon, "tail_bound": game.tail_bound,
                 "horizon_note": "horizon leaves pay their settled part; the rest lies in [0, tail_bound]"}
    status = 0
    if cfg.check == "structure":
        tree = game.tree
        results = {}
        for name, fn in (("well_rounded", check_well_rounded), ("perfect_recall", check_perfect_recall),
                         ("round_coherence", check_round_coherence)):
            w = fn(tree)
            results[name] = None if w is None else {"detail": w.detail, "histories": [list(h) for h in w.histories]}
            status |= w is not None
        doc.update(nodes=len(tree.nodes), infosets=len(tree.infosets), checks=results)
    elif cfg.check == "gap":
        doc["gap"] = equilibrium_gap(game, profile, spec).to_dict()
    elif cfg.check == "br":
        doc["best_responses"] = []
        for i in range(graph.n):
            br = best_response(game, i, profile, spec, mode="explicit")
            doc["best_responses"].append({"player": i, "value": br.value,
                                          "choice": {str(k): str(a) for k, a in br.choice.items()}})
    elif cfg.check == "metric":
        m = outcome_metric(game.tree, profile, load(cfg.profile2), cfg.horizon)
        doc["metric"] = {"value": m.value, "error_bound": m.error_bound,
                         "witness": None if m.witness is None else list(m.witness)}
    elif cfg.check == "search":
        if spec is None:
            raise UsageError("--check search needs --perturb")
        res = perturbed_equilibrium_search(game, spec, method=cfg.method)
        doc["search"] = res.to_dict()
        if game.tree is not None:
            doc["profile"] = json.loads(profile_to_json(game.tree, res.profile))
        status = 0 if res.converged else 1
    _emit(cfg, doc, stdout)
    return int(status)


def cmd_verify_cc(cfg: ExperimentConfig, stdout) -> int:
    from .constrained_coloring import (
        CcParams,
        convergence_law,
        verify_fact1_2,
        verify_fact3,
        verify_fact4,
    )

    params = CcParams(cfg.delta, cfg.k)
    certs = [
        verify_fact1_2(params, min(cfg.depth, 5), cfg.horizon),
        verify_fact3(params, cfg.depth, cfg.horizon),
        verify_fact4(params, cfg.depth, cfg.horizon),
    ]
    ok = all(c.ok for c in certs)
    _emit(cfg, {
        "ok": ok,
        "certificates": [c.to_dict() for c in certs],
        "convergence_law": {str(r): convergence_law(r) for r in range(1, 11)},
    }, stdout)
    return 0 if ok else 1


def cmd_check_greedy(cfg: ExperimentConfig, stdout) -> int:
    graph = _graph(cfg)
    lang = _lang(cfg)
    try:
        w = check_greedy_constructible(lang, graph, cfg.budget or 2_000_000)
    except BudgetExceeded as exc:
        raise UsageError(str(exc)) from None
    _emit(cfg, {"greedy_constructible": w is None, "witness": None if w is None else w.to_dict()}, stdout)
    return 0 if w is None else 1


def cmd_info(stdout) -> int:
    doc = {
        "version": __version__,
        "languages": list(LANGUAGES),
        "strategies": list(STRATEGY_NAMES),
        "preference_presets": list(PREFERENCE_PRESETS),
        "commands": list(COMMANDS),
    }
    stdout.write(json.dumps(doc, indent=1) + "\n")
    return 0


def dispatch(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise UsageError(f"name a command: {', '.join(COMMANDS)}")
        if ns.command == "info":
            return cmd_info(stdout)
        cfg = config_from_args(ns)
        if cfg.command == "simulate":
            return cmd_simulate(cfg, stdout, jobs=getattr(ns, "jobs", 1) or 1)
        if cfg.command == "analyze":
            return cmd_analyze(cfg, stdout)
        if cfg.command == "verify-cc":
            return cmd_verify_cc(cfg, stdout)
        if cfg.command == "check-greedy":
            return cmd_check_greedy(cfg, stdout)
        return cmd_info(stdout)
    except (UsageError, GraphError, LanguageError, ValueError) as exc:
        stderr.write(f"error: {exc}\n")
        return 2


def main() -> None:
    sys.exit(dispatch())
