"""Command-line surface of the Löb arena.

Usage:
  python cli.py duel DUPOC DUPOC --format json
  python cli.py bounded-duel DUPOC DUPOC --enum oracle --budget 10000
  python cli.py sample --q 0.9 --mode all --n 100000 --seed 7 --seeds 30
  python cli.py evolve other_files/agents.txt --pop other_files/population.yml --steps 200 --restrict C D --shift 0

Results go to stdout and always end with a newline; JSON keys are sorted.
Diagnostics go to stderr. Exit status: 0 success, 2 parse or config error,
3 semantic error, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path

import numpy as np
import pandas as pd

from agents import compile_duel, load_roster, random_agent, resolve_agent
from arena import IDEALIZED_LABEL, duel, duel_matrix, experiment_report
from config import load_settings
from dynamics import default_payoffs, evolve, load_payoffs, load_population, mean_payoffs, tournament, trajectory_csv
from errors import DomainError, LoebArenaError, ParseError, VariableMismatch
from gl_eval import FixedPointSystem, chain_values, evaluate_system, random_system, settle_ranks
from init_db import get_engine
from modal_core import parse_formula, render_formula, variables
from proof_sandbox import (
    CHARSETS,
    ProofBudget,
    ProofSystem,
    bounded_duel,
    make_enumerator,
    proof_search,
    string_generator,
)
from stochastic import CSV_COLUMNS, CouplingMode, coop_bound, cooperation_sigma, sample_pdupoc_selfplay
from utils import record_bounded_duel, record_duel, record_evolution, record_sample, run_history

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv", "text")
DEFAULT_EXPERIMENT = ("DUPOC:CUPOD", "CUPOD:CIMCIC", "DUPOC:DIMCID")
ENUMERATORS = ("lex", "guided", "oracle")


# --------------------------------------------------------------------------
# Output helpers
# --------------------------------------------------------------------------


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    return str(value)


def _json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False, default=_json_default) + "\n"


def _csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator="\n")


def _emit(text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    sys.stdout.write(text)


def _source(arg: str) -> str:
    """File contents when ``arg`` names a file, else ``arg`` itself."""
    path = Path(arg)
    if path.is_file():
        try:
            return path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read {arg}: {exc.strerror}") from exc
    return arg


def _charset(value: str | None) -> str | None:
    if value is None:
        return None
    return CHARSETS.get(value, value)


def _pair(text: str) -> tuple[str, str]:
    parts = text.split(":")
    if len(parts) != 2 or not all(parts):
        raise ParseError(f"expected a pair 'A:B', got {text!r}")
    return parts[0], parts[1]


def _engine(args):
    return get_engine(args.db) if args.db else None


def _record(args, recorder, *payload) -> None:
    if not args.record:
        return
    ok, message = recorder(*payload, engine=_engine(args))
    if ok:
        logger.info(message)
    else:
        logger.warning(message)


def _payoff_matrix(args):
    m = load_payoffs(args.payoffs) if args.payoffs else default_payoffs()
    if args.restrict:
        m = m.restrict(args.restrict)
    return m


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_eval(args) -> int:
    text = _source(args.source)
    try:
        system = FixedPointSystem.parse(text)
    except VariableMismatch:
        formula = parse_formula(text.strip())
        free = variables(formula)
        if free:
            raise VariableMismatch(f"free variables {', '.join(free)}; give equations 'name <-> formula'") from None
        return _eval_closed(args, formula)

    result = evaluate_system(system, max_rank=args.max_rank)
    if args.format == "json":
        _emit(_json({"stable": result.stable, "stabilization_rank": result.stabilization_rank, "trace": result.trace_json()}))
    elif args.format == "csv":
        _emit(_csv(_trace_frame(result.trace)))
    else:
        lines = [f"{name} = {'true' if value else 'false'}" for name, value in result.stable.items()]
        lines.append(f"stabilization rank: {result.stabilization_rank}")
        _emit("\n".join(lines))
    return 0


def _eval_closed(args, formula) -> int:
    rows = settle_ranks(FixedPointSystem((), ()), extra=(formula,), max_rank=args.max_rank)
    value = rows[-1].extra_values[0]
    rendered = render_formula(formula)
    if args.format == "json":
        _emit(
            _json(
                {
                    "formula": rendered,
                    "value": value,
                    "stabilization_rank": rows[-1].rank,
                    "trace": [row.to_json() for row in rows],
                }
            )
        )
    elif args.format == "csv":
        _emit(_csv(_trace_frame(rows)))
    else:
        _emit(f"{rendered} = {'true' if value else 'false'}\nstabilization rank: {rows[-1].rank}")
    return 0


def _trace_frame(rows) -> pd.DataFrame:
    records = []
    for row in rows:
        data = row.to_json()
        records.append({"rank": data["rank"], **data["vars"], **data["boxes"]})
    return pd.DataFrame(records)


def cmd_duel(args) -> int:
    a, b = resolve_agent(args.agent_a), resolve_agent(args.agent_b)
    outcome = duel(a, b)
    _record(args, record_duel, outcome)
    if args.format == "json":
        _emit(_json(outcome.to_json()))
    elif args.format == "csv":
        data = outcome.to_json()
        data.pop("trace")
        _emit(_csv(pd.DataFrame([data])))
    else:
        _emit(
            f"{a.name} vs {b.name}: ({outcome.row_action}, {outcome.col_action})"
            f" at rank {outcome.evidence.stabilization_rank}"
        )
    return 0


def cmd_bounded_duel(args) -> int:
    a, b = resolve_agent(args.agent_a), resolve_agent(args.agent_b)
    charset = _charset(args.charset)
    result = bounded_duel(
        a,
        ProofBudget(args.budget if args.budget_a is None else args.budget_a),
        make_enumerator(args.enum_a or args.enum, charset),
        b,
        ProofBudget(args.budget if args.budget_b is None else args.budget_b),
        make_enumerator(args.enum_b or args.enum, charset),
        max_candidates=args.max_candidates,
    )
    _record(args, record_bounded_duel, result)
    outcome = result.outcome
    if args.format == "json":
        _emit(_json(result.to_json()))
        return 0
    records = []
    for side, agent, searches in (("row", a, result.row_searches), ("col", b, result.col_searches)):
        for search in searches:
            for report in search.reports:
                data = report.to_json()
                records.append({"side": side, "agent": agent.name, "rule": search.rule_index, "action": search.action, **data})
    if args.format == "csv":
        columns = ["side", "agent", "rule", "action", "goal", "found", "proof_length", "candidates_examined", "enumerator", "budget", "capped"]
        _emit(_csv(pd.DataFrame(records, columns=columns)))
        return 0
    lines = [f"{a.name} vs {b.name}: ({outcome.row_action}, {outcome.col_action})"]
    for record in records:
        if record["found"]:
            detail = f"proved in {record['proof_length']} characters"
        else:
            detail = "no proof within budget" + (" (candidate cap reached)" if record["capped"] else "")
        lines.append(
            f"  {record['agent']} rule {record['rule']} -> {record['action']}: {record['goal']}: {detail},"
            f" {record['candidates_examined']} candidates"
        )
    _emit("\n".join(lines))
    return 0


def cmd_tournament(args) -> int:
    roster = load_roster(args.agents_file)
    m = _payoff_matrix(args)
    games = tournament(duel_matrix(roster, alphabet=m.actions), m)
    means = mean_payoffs(games)
    if args.format == "json":
        _emit(
            _json(
                {
                    "games": games.to_dict(orient="records"),
                    "mean_payoffs": {name: float(value) for name, value in means.items()},
                }
            )
        )
    elif args.format == "csv":
        _emit(_csv(games))
    else:
        _emit(games.to_string(index=False) + "\n\nmean payoff\n" + means.to_string())
    return 0


def cmd_evolve(args) -> int:
    roster = {agent.name: agent for agent in load_roster(args.agents_file)}
    pop = load_population(args.pop)
    agents = [roster[name] if name in roster else resolve_agent(name) for name in pop.names]
    m = _payoff_matrix(args)
    dynamics = load_settings().dynamics
    shift = dynamics.payoff_shift if args.shift is None else args.shift
    mutation = dynamics.mutation if args.mutation is None else args.mutation
    trajectory = evolve(pop, duel_matrix(agents, alphabet=m.actions), m, args.steps, shift, mutation)
    _record(args, record_evolution, pop, trajectory, shift, mutation)
    if args.format == "json":
        _emit(_json(trajectory.to_dict(orient="records")))
    elif args.format == "csv":
        _emit(trajectory_csv(trajectory))
    else:
        _emit(trajectory.to_string(index=False))
    return 0


def cmd_sample(args) -> int:
    if args.seeds < 1:
        raise DomainError(f"--seeds must be at least 1, got {args.seeds}")
    modes = list(CouplingMode) if args.mode == "all" else [CouplingMode(args.mode)]
    rows = []
    for q in args.q:
        for mode in modes:
            for seed in range(args.seed, args.seed + args.seeds):
                frequency = sample_pdupoc_selfplay(q, mode, args.n, seed)
                _record(args, record_sample, frequency)
                rows.append(frequency.to_row())
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
    if args.format == "json":
        _emit(_json(rows))
    elif args.format == "csv":
        _emit(_csv(frame))
    else:
        frame["cc_freq"] = frame["cc"] / frame["n"]
        frame["bound"] = [coop_bound(q, CouplingMode(mode)) for q, mode in zip(frame["q"], frame["mode"])]
        frame["sigma"] = [cooperation_sigma(q, n) for q, n in zip(frame["q"], frame["n"])]
        _emit(frame.to_string(index=False))
    return 0


def _prove_system(arg: str) -> FixedPointSystem:
    if ":" in arg and not Path(arg).is_file():
        a, b = _pair(arg)
        return compile_duel(resolve_agent(a), resolve_agent(b))
    return FixedPointSystem.parse(_source(arg))


def cmd_prove(args) -> int:
    fixed_point = _prove_system(args.system)
    goal = parse_formula(args.goal)
    fixed_point.validate((goal,))
    report = proof_search(
        ProofBudget(args.budget),
        ProofSystem.for_system(fixed_point),
        goal,
        make_enumerator(args.enum, _charset(args.charset)),
        max_candidates=args.max_candidates,
    )
    if args.format == "json":
        _emit(_json(report.to_json()))
    elif args.format == "csv":
        data = report.to_json()
        data.pop("proof")
        _emit(_csv(pd.DataFrame([data])))
    elif report.found:
        _emit(report.proof_text)
    else:
        _emit(
            f"no proof of {render_formula(goal)} within {args.budget} characters"
            f" ({report.candidates_examined} candidates examined)"
        )
    return 0


def cmd_experiment(args) -> int:
    pairs = [_pair(text) for text in (args.pairs or DEFAULT_EXPERIMENT)]
    entries = experiment_report([(resolve_agent(a), resolve_agent(b)) for a, b in pairs])
    if args.format == "json":
        _emit(_json({"label": IDEALIZED_LABEL, "entries": [entry.to_json() for entry in entries]}))
    elif args.format == "csv":
        rows = []
        for entry in entries:
            data = entry.to_json()
            data.pop("trace")
            data["conjecture"] = ",".join(entry.conjecture) if entry.conjecture else ""
            rows.append(data)
        _emit(_csv(pd.DataFrame(rows)))
    else:
        lines = [IDEALIZED_LABEL]
        for entry in entries:
            outcome = entry.outcome
            lines.append(
                f"{outcome.row_agent} vs {outcome.col_agent}: ({outcome.row_action}, {outcome.col_action})"
                f" at rank {outcome.evidence.stabilization_rank}; {entry.status}"
            )
        _emit("\n".join(lines))
    return 0


def cmd_strings(args) -> int:
    strings = list(string_generator(args.bound, _charset(args.charset)))
    if args.format == "json":
        _emit(_json(strings))
    else:
        _emit("".join(s + "\n" for s in strings))
    return 0


def cmd_exploit_check(args) -> int:
    agent = resolve_agent(args.agent)
    rng = np.random.default_rng(args.seed)
    counts: Counter[str] = Counter()
    for i in range(args.opponents):
        opponent = random_agent(rng, name=f"R{i}")
        outcome = duel(agent, opponent)
        counts[",".join(outcome.actions)] += 1
    report = {
        "agent": agent.name,
        "opponents": args.opponents,
        "seed": args.seed,
        "outcomes": dict(sorted(counts.items())),
        "sucker": counts["C,D"],
        "exploits": counts["D,C"],
    }
    if args.format == "json":
        _emit(_json(report))
    elif args.format == "csv":
        frame = pd.DataFrame(
            [{"row_action": key.split(",")[0], "col_action": key.split(",")[1], "count": n} for key, n in sorted(counts.items())]
        )
        _emit(_csv(frame))
    else:
        lines = [f"{agent.name} against {args.opponents} random opponents (seed {args.seed})"]
        lines += [f"  ({key.replace(',', ', ')}): {n}" for key, n in sorted(counts.items())]
        _emit("\n".join(lines))
    return 0


def cmd_oracle_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    mismatches = []
    for _ in range(args.systems):
        system = random_system(rng, max_boxes=args.max_boxes)
        if evaluate_system(system).stable != chain_values(system, args.worlds)[-1]:
            mismatches.append(system.render())
    report = {"systems": args.systems, "seed": args.seed, "mismatches": len(mismatches), "examples": mismatches[:5]}
    if args.format == "json":
        _emit(_json(report))
    else:
        _emit(f"{args.systems} systems, {len(mismatches)} mismatches")
    if mismatches:
        logger.error("rank evaluation disagrees with the %d-world chain on %d systems", args.worlds, len(mismatches))
        return 4
    return 0


def cmd_history(args) -> int:
    frame = run_history(args.kind, engine=_engine(args))
    if args.format == "json":
        _emit(_json(frame.to_dict(orient="records")))
    elif frame.empty:
        _emit("" if args.format == "csv" else f"no recorded {args.kind}")
    elif args.format == "csv":
        _emit(_csv(frame))
    else:
        _emit(frame.to_string(index=False))
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _common(default_format: str, record: bool = False) -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--format", choices=FORMATS, default=default_format, help="Output format")
    parent.add_argument("--config", help="Settings YAML (default: LOEBARENA_CONFIG or other_files/config.yml)")
    parent.add_argument("-v", "--verbose", action="count", default=0, help="More log output on stderr")
    parent.add_argument("--db", help="SQLite file for --record and history (default: from config)")
    if record:
        parent.add_argument("--record", action="store_true", help="Store the result in the results database")
    else:
        parent.set_defaults(record=False)
    return parent


def _add_search_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--charset", help="Lexicographic charset: printable_ascii, python_printable or literal characters")
    parser.add_argument("--max-candidates", type=int, default=None, help="Cap on examined candidates per search")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loeb-arena", description="Open-source games between provability-logic agents")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[_common("text")], help="Evaluate a closed formula or a fixed-point system")
    p.add_argument("source", help="Formula, equations 'p <-> []p; q <-> ...', or a file of equations")
    p.add_argument("--max-rank", type=int, default=None, help="Rank cap (default: evaluation.max_rank)")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("duel", parents=[_common("text", record=True)], help="Idealized duel between two agents")
    p.add_argument("agent_a")
    p.add_argument("agent_b")
    p.set_defaults(handler=cmd_duel)

    p = sub.add_parser("bounded-duel", parents=[_common("text", record=True)], help="Duel with budgeted proof search")
    p.add_argument("agent_a")
    p.add_argument("agent_b")
    p.add_argument("--budget", type=int, default=10_000, help="Proof budget k for both agents")
    p.add_argument("--budget-a", type=int, default=None)
    p.add_argument("--budget-b", type=int, default=None)
    p.add_argument("--enum", choices=ENUMERATORS, default="guided")
    p.add_argument("--enum-a", choices=ENUMERATORS, default=None)
    p.add_argument("--enum-b", choices=ENUMERATORS, default=None)
    _add_search_options(p)
    p.set_defaults(handler=cmd_bounded_duel)

    p = sub.add_parser("tournament", parents=[_common("text")], help="Round-robin with payoffs")
    p.add_argument("agents_file")
    p.add_argument("--payoffs", help="Payoff YAML (default: payoffs from config)")
    p.add_argument("--restrict", nargs="+", metavar="ACTION", help="Play the sub-game on these actions")
    p.set_defaults(handler=cmd_tournament)

    p = sub.add_parser("evolve", parents=[_common("csv", record=True)], help="Discrete replicator dynamics")
    p.add_argument("agents_file")
    p.add_argument("--pop", required=True, help="Population YAML mapping agent names to weights")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--payoffs")
    p.add_argument("--restrict", nargs="+", metavar="ACTION")
    p.add_argument("--shift", type=float, default=None, help="Constant added to every payoff")
    p.add_argument("--mutation", type=float, default=None, help="Uniform mutation rate per step")
    p.set_defaults(handler=cmd_evolve)

    p = sub.add_parser("sample", parents=[_common("csv", record=True)], help="Probabilistic self-play counts")
    p.add_argument("--q", type=float, nargs="+", required=True)
    p.add_argument("--mode", choices=[mode.value for mode in CouplingMode] + ["all"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=1, help="Run seeds seed, seed+1, ...")
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("prove", parents=[_common("text")], help="Budgeted proof search in a system")
    p.add_argument("system", help="Equations file, inline equations, or a duel 'A:B'")
    p.add_argument("--goal", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--enum", choices=ENUMERATORS, default="guided")
    _add_search_options(p)
    p.set_defaults(handler=cmd_prove)

    p = sub.add_parser("experiment", parents=[_common("text")], help="Idealized outcomes for open-problem pairs")
    p.add_argument("pairs", nargs="*", metavar="A:B")
    p.set_defaults(handler=cmd_experiment)

    p = sub.add_parser("strings", parents=[_common("text")], help="Enumerate strings in length-then-lex order")
    p.add_argument("--bound", type=int, required=True)
    p.add_argument("--charset", required=True)
    p.set_defaults(handler=cmd_strings)

    p = sub.add_parser("exploit-check", parents=[_common("text")], help="Duel an agent against random opponents")
    p.add_argument("agent")
    p.add_argument("--opponents", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_exploit_check)

    p = sub.add_parser("oracle-check", parents=[_common("text")], help="Rank evaluation against a finite chain")
    p.add_argument("--systems", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-boxes", type=int, default=3)
    p.add_argument("--worlds", type=_positive_int, default=10)
    p.set_defaults(handler=cmd_oracle_check)

    p = sub.add_parser("history", parents=[_common("text")], help="Show recorded runs")
    p.add_argument("--kind", choices=["duels", "searches", "samples", "evolutions"], default="duels")
    p.set_defaults(handler=cmd_history)

    return parser


def _configure_logging(verbose: int) -> None:
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.getLevelName(load_settings().logging.level.upper())
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    previous = os.environ.get("LOEBARENA_CONFIG")
    if args.config:
        os.environ["LOEBARENA_CONFIG"] = args.config
    try:
        _configure_logging(args.verbose)
        return args.handler(args)
    except LoebArenaError as exc:
        logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)
        logger.error("%s", exc)
        return exc.exit_code
    finally:
        if args.config:
            if previous is None:
                os.environ.pop("LOEBARENA_CONFIG", None)
            else:
                os.environ["LOEBARENA_CONFIG"] = previous


if __name__ == "__main__":
    sys.exit(main())
