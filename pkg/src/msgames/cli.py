"""Command-line entry point: ``msgames <subcommand> ...``.

Exit status is 0 for a definite answer, 2 when a search budget ran out and 1
for usage, parse or structural errors.  Output is deterministic unless
``--timing`` asks for wall-clock figures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import oracles
from .ef import EfPosition, ef_winner
from .gadgets import GadgetOutput, build_domset_structure, build_I_np, build_I_pspace, build_J, build_J_prime, build_skyscraper
from .graphs import read_dimacs_graph
from .logic import separates
from .ms import (
    MsPosition,
    check_duplicator_strategy,
    ef_guided_duplicator,
    mirror_duplicator,
    ms_certificate,
    ms_strategy_to_formula,
    ms_winner,
    run_spoiler_script,
)
from .qbf import parse_qdimacs
from .reductions import (
    ReductionOutput,
    approx_domset,
    approx_maxqsat,
    hybrid_solver,
    reduce_domset_to_ms,
    reduce_qsat_to_ms,
)
from .search import BudgetExceeded, SearchLimits, SearchStats, Winner
from .structures import ParseError, PebbledStructure, StructuralError, load_pebbled, save_structure, structure_from_json
from .synthesis import synth_separating

EXIT_OK, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output


class Reporter:
    def __init__(self, args):
        self.json = getattr(args, "json", False)
        self.timing = getattr(args, "timing", False)
        self.record: dict = {}
        self.lines: list[str] = []

    def put(self, key: str, value, text: str | None = None):
        self.record[key] = value
        if text is not None:
            self.lines.append(text)

    def say(self, text: str):
        self.lines.append(text)

    def stats(self, stats: SearchStats, limits: SearchLimits | None = None):
        data = {"nodes": stats.nodes, "memo_hits": stats.memo_hits}
        if self.timing:
            data["seconds"] = round(stats.seconds, 3)
        self.record["stats"] = data
        text = f"nodes={stats.nodes} memo_hits={stats.memo_hits}"
        if self.timing:
            text += f" seconds={stats.seconds:.3f}"
        self.lines.append(text)
        if limits is not None:
            self.budget(limits)

    def budget(self, limits: SearchLimits):
        self.record["budget"] = {"max_nodes": limits.max_nodes, "max_seconds": limits.max_seconds}
        self.lines.append(f"budget {limits.describe()}")

    def emit(self, out):
        if self.json:
            out.write(json.dumps(self.record, sort_keys=True) + "\n")
        else:
            for line in self.lines:
                out.write(line + "\n")


def _limits(args) -> SearchLimits:
    return SearchLimits.from_env(getattr(args, "max_nodes", None), getattr(args, "max_seconds", None))


def _code(verdict) -> int:
    return EXIT_UNKNOWN if verdict is Winner.UNKNOWN else EXIT_OK


# ---------------------------------------------------------------- inputs


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _pebbled(path: str) -> PebbledStructure:
    return load_pebbled(_read(path))


def _member(entry, base: Path, where: str) -> PebbledStructure:
    if isinstance(entry, str):
        return load_pebbled((base / entry).read_text(encoding="utf-8"))
    S, pebbles = structure_from_json(entry, where)
    return PebbledStructure(S, pebbles)


def load_instance(path: str) -> tuple[MsPosition, dict]:
    """Instance file: ``{"left": [...], "right": [...], "rounds": m}``; entries are paths or inline structures."""
    try:
        obj = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict) or not all(k in obj for k in ("left", "right", "rounds")):
        raise ParseError(f"{path}: expected an object with left, right and rounds")
    base = Path(path).parent
    left = [_member(e, base, f"left[{i}]") for i, e in enumerate(obj["left"])]
    right = [_member(e, base, f"right[{i}]") for i, e in enumerate(obj["right"])]
    return MsPosition(tuple(left), tuple(right), int(obj["rounds"])), obj.get("provenance", {})


def _graph(path: str):
    return read_dimacs_graph(_read(path))


def _qbf(path: str):
    return parse_qdimacs(_read(path))


# ---------------------------------------------------------------- subcommands


def cmd_solve_ef(args, rep: Reporter) -> int:
    limits, stats = _limits(args), SearchStats()
    pos = EfPosition(_pebbled(args.left), _pebbled(args.right), args.rounds)
    verdict = ef_winner(pos, limits, stats=stats)
    rep.put("verdict", verdict.value, verdict.value)
    rep.stats(stats, limits)
    return _code(verdict)


def cmd_solve_ms(args, rep: Reporter) -> int:
    limits, stats = _limits(args), SearchStats()
    pos = MsPosition(tuple(map(_pebbled, args.left)), tuple(map(_pebbled, args.right)), args.rounds)
    verdict = ms_winner(pos, limits, stats=stats)
    rep.put("verdict", verdict.value, verdict.value)
    if args.certificate and verdict is Winner.SPOILER:
        result = ms_certificate(pos, limits)
        phi = ms_strategy_to_formula(result)
        Path(args.certificate).write_text(phi.to_text() + "\n", encoding="utf-8")
        rep.put("certificate", args.certificate, f"certificate {args.certificate}")
    rep.stats(stats, limits)
    return _code(verdict)


def _script_from_provenance(name: str, provenance: dict, pos: MsPosition):
    from .scripts import spoiler_script_domset, spoiler_script_skyscraper
    from .qbf import QbfInstance
    import networkx as nx

    if name == "domset-spoiler":
        if provenance.get("problem") != "domset":
            raise UsageError("domset-spoiler needs an instance written by 'reduce domset'")
        graph = provenance["graph"]
        G = nx.Graph()
        G.add_nodes_from(range(1, graph["vertices"] + 1))
        G.add_edges_from(tuple(e) for e in graph["edges"])
        k = int(provenance["k"])
        compiled = reduce_domset_to_ms(G, k)
        _same_structure(compiled, pos)
        witness = oracles.dominating_witness(G, k)
        if witness is None:
            return None, compiled
        return spoiler_script_domset(compiled.gadget, witness), compiled
    if name == "skyscraper-spoiler":
        if provenance.get("problem") != "qsat":
            raise UsageError("skyscraper-spoiler needs an instance written by 'reduce qsat'")
        phi = QbfInstance(int(provenance["num_vars"]), tuple(map(tuple, provenance["prefix"])), tuple(map(tuple, provenance["clauses"])))
        compiled = reduce_qsat_to_ms(phi, int(provenance["t"]))
        _same_structure(compiled, pos)
        if oracles.maxqsat_value(phi) < int(provenance["t"]):
            return None, compiled
        return spoiler_script_skyscraper(compiled.gadget, phi), compiled
    raise UsageError(f"unknown script {name!r}")


def _same_structure(compiled: ReductionOutput, pos: MsPosition):
    for P in pos.left + pos.right:
        if P.structure != compiled.gadget.structure:
            raise StructuralError("instance structure differs from the one its provenance rebuilds")


def cmd_check_strategy(args, rep: Reporter) -> int:
    pos, provenance = load_instance(args.instance)
    if args.rounds is not None:
        pos = pos.with_rounds(args.rounds)
    if args.script in ("mirror-duplicator", "ef-duplicator"):
        strategy = mirror_duplicator() if args.script == "mirror-duplicator" else ef_guided_duplicator(_limits(args))
        try:
            holds = check_duplicator_strategy(strategy, pos, _limits(args))
        except BudgetExceeded:
            rep.put("verdict", "UNKNOWN", "UNKNOWN")
            rep.budget(_limits(args))
            return EXIT_UNKNOWN
        verdict = "HOLDS" if holds else "INCONCLUSIVE"
        rep.put("verdict", verdict, verdict)
        return EXIT_OK
    script, compiled = _script_from_provenance(args.script, provenance, pos)
    if script is None:
        why = "the source instance is a NO instance"
        rep.put("verdict", "NOT-APPLICABLE", f"NOT-APPLICABLE ({why})")
        return EXIT_OK
    result = run_spoiler_script(script, pos)
    verdict = "WIN" if result.won else "FAIL"
    rep.put("verdict", verdict, result.summary())
    rep.put("rounds_used", result.rounds_used)
    rep.put("sides", "".join(s.move.side for s in result.trace))
    if result.won and args.certificate:
        phi = ms_strategy_to_formula(result)
        ok = separates(phi, pos.left, pos.right, compiled.generators)
        Path(args.certificate).write_text(phi.to_text() + "\n", encoding="utf-8")
        rep.put("certificate", args.certificate, f"certificate {args.certificate} separates={ok}")
        rep.put("certificate_separates", ok)
    return EXIT_OK


def _gadget(args) -> GadgetOutput:
    kind = args.kind
    colored = not args.plain
    if kind == "i-np":
        return build_I_np(_need(args.j, "--j"), colored)
    if kind == "j":
        return build_J(_need(args.j, "--j"))
    if kind == "j-prime":
        return build_J_prime(_need(args.j, "--j"))
    if kind == "i-pspace":
        return build_I_pspace(_need(args.j, "--j"))
    if kind == "domset":
        return build_domset_structure(_graph(_need(args.graph, "--graph")), _need(args.k, "--k"), colored)
    if kind == "skyscraper":
        return build_skyscraper(_qbf(_need(args.qbf, "--qbf")), _need(args.t, "--t"))
    raise UsageError(f"unknown gadget kind {kind!r}")


def _need(value, flag: str):
    if value is None:
        raise UsageError(f"{flag} is required for this gadget")
    return value


def cmd_build_gadget(args, rep: Reporter) -> int:
    g = _gadget(args)
    Path(args.output).write_bytes(save_structure(g.structure))
    rep.put("output", args.output, f"wrote {args.output}")
    rep.put("universe_size", g.structure.n, f"universe_size={g.structure.n}")
    rep.put("designated", dict(sorted(g.designated.items())))
    rep.put("generators", len(g.automorphism_generators), f"automorphism_generators={len(g.automorphism_generators)}")
    return EXIT_OK


def _write_instance(compiled: ReductionOutput, outdir: str, extra: dict) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    S = compiled.gadget.structure
    (out / "structure.json").write_bytes(save_structure(S))
    pos = compiled.instance
    provenance = dict(compiled.provenance, **extra)
    obj = {
        "left": [_pebbled_entry(P) for P in pos.left],
        "right": [_pebbled_entry(P) for P in pos.right],
        "rounds": compiled.spoiler_rounds,
        "spoiler_rounds": compiled.spoiler_rounds,
        "duplicator_rounds": compiled.duplicator_rounds,
        "provenance": provenance,
    }
    path = out / "instance.json"
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return path


def _pebbled_entry(P: PebbledStructure) -> dict:
    return json.loads(save_structure(P.structure, P.pebbles))


def cmd_reduce(args, rep: Reporter) -> int:
    if args.problem == "domset":
        compiled = reduce_domset_to_ms(_graph(_need(args.graph, "--graph")), _need(args.k, "--k"))
        extra = {}
    else:
        phi = _qbf(_need(args.qbf, "--qbf")).alternating()
        compiled = reduce_qsat_to_ms(phi, _need(args.t, "--t"))
        extra = {"num_vars": phi.num_vars, "prefix": [list(p) for p in phi.prefix]}
    path = _write_instance(compiled, args.output, extra)
    rep.put("instance", str(path), f"wrote {path}")
    rep.put("spoiler_rounds", compiled.spoiler_rounds, f"spoiler_rounds={compiled.spoiler_rounds}")
    rep.put("duplicator_rounds", compiled.duplicator_rounds, f"duplicator_rounds={compiled.duplicator_rounds}")
    return EXIT_OK


def cmd_approx(args, rep: Reporter) -> int:
    limits = _limits(args)
    solver = hybrid_solver(limits)
    queries = []

    def log(param, rounds, verdict):
        queries.append({"parameter": param, "rounds": rounds, "verdict": verdict.value})
        rep.say(f"query parameter={param} rounds={rounds} -> {verdict.value}")

    if args.problem == "domset":
        value = approx_domset(_graph(_need(args.graph, "--graph")), solver, args.text_semantics, log)
    else:
        value = approx_maxqsat(_qbf(_need(args.qbf, "--qbf")), solver, log)
    rep.put("queries", queries)
    shown = value.value if isinstance(value, Winner) else value
    rep.put("value", shown, f"value={shown}")
    rep.budget(limits)
    return EXIT_UNKNOWN if value is Winner.UNKNOWN else EXIT_OK


def cmd_oracle(args, rep: Reporter) -> int:
    if args.problem == "domset":
        G = _graph(_need(args.graph, "--graph"))
        value = oracles.min_domset_bruteforce(G)
        rep.put("min_domset", value, f"min_domset={value}")
    else:
        phi = _qbf(_need(args.qbf, "--qbf"))
        value = oracles.maxqsat_value(phi)
        rep.put("maxqsat_value", value, f"maxqsat_value={value} of {phi.num_clauses}")
        rep.put("true", value == phi.num_clauses, f"true={value == phi.num_clauses}")
    return EXIT_OK


def cmd_synth(args, rep: Reporter) -> int:
    limits, stats = _limits(args), SearchStats()
    left, right = tuple(map(_pebbled, args.left)), tuple(map(_pebbled, args.right))
    phi = synth_separating(left, right, args.m, limits, stats)
    if phi is Winner.UNKNOWN:
        rep.put("verdict", "UNKNOWN", "UNKNOWN")
        rep.stats(stats, limits)
        return EXIT_UNKNOWN
    if phi is None:
        rep.put("verdict", "NONE", "NONE")
    else:
        rep.put("verdict", "FOUND", "FOUND")
        rep.put("formula", phi.to_text(), phi.to_text())
    rep.stats(stats, limits)
    return EXIT_OK


def cmd_corpus(args, rep: Reporter) -> int:
    from .corpus import CHECKS

    names = args.checks or sorted(CHECKS)
    failed = unknown = False
    for name in names:
        if name not in CHECKS:
            raise UsageError(f"unknown corpus check {name!r}; choose from {', '.join(sorted(CHECKS))}")
        kwargs = {"seed": args.seed} if name != "discard" else {}
        report = CHECKS[name](**kwargs)
        rep.say(report.line())
        rep.record.setdefault("checks", {})[name] = {
            "checked": report.checked,
            "disagreements": len(report.disagreements),
            "unknown": report.unknown,
        }
        failed |= bool(report.disagreements)
        unknown |= bool(report.unknown)
    verdict = "FAIL" if failed else ("UNKNOWN" if unknown else "PASS")
    rep.put("verdict", verdict, verdict)
    return EXIT_ERROR if failed else (EXIT_UNKNOWN if unknown else EXIT_OK)


# ---------------------------------------------------------------- parser


def _budget_flags(p):
    p.add_argument("--max-nodes", type=int, default=None)
    p.add_argument("--max-seconds", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msgames", description="Multi-structural and EF game laboratory.")
    parser.add_argument("--json", action="store_true", help="print one JSON object instead of text")
    parser.add_argument("--timing", action="store_true", help="include wall-clock seconds (output no longer reproducible)")
    parser.add_argument("--threads", type=int, default=1, help="accepted for compatibility; solving is single-threaded")
    # the output flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("--timing", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)
    add = sub.add_parser

    def add_parser(name, **kw):
        return add(name, parents=[common], **kw)

    sub.add_parser = add_parser  # type: ignore[method-assign]

    p = sub.add_parser("solve-ef", help="winner of the EF game on two structure files")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--rounds", type=int, required=True)
    _budget_flags(p)
    p.set_defaults(func=cmd_solve_ef)

    p = sub.add_parser("solve-ms", help="winner of the MS game on two sets of structure files")
    p.add_argument("--left", nargs="+", required=True)
    p.add_argument("--right", nargs="+", required=True)
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--certificate", help="write a separating formula here when Spoiler wins")
    _budget_flags(p)
    p.set_defaults(func=cmd_solve_ms)

    p = sub.add_parser("check-strategy", help="run a built-in strategy on an instance file")
    p.add_argument(
        "--script", required=True, choices=["domset-spoiler", "skyscraper-spoiler", "mirror-duplicator", "ef-duplicator"]
    )
    p.add_argument("--instance", required=True)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--certificate", help="write the extracted formula here on a win")
    _budget_flags(p)
    p.set_defaults(func=cmd_check_strategy)

    p = sub.add_parser("build-gadget", help="write a gadget structure file")
    p.add_argument("--kind", required=True, choices=["i-np", "j", "j-prime", "i-pspace", "domset", "skyscraper"])
    p.add_argument("--j", type=int)
    p.add_argument("--graph")
    p.add_argument("--k", type=int)
    p.add_argument("--qbf")
    p.add_argument("--t", type=int)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--colored", action="store_true", default=True)
    mode.add_argument("--plain", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_build_gadget)

    p = sub.add_parser("reduce", help="compile a problem instance into a game instance directory")
    p.add_argument("problem", choices=["domset", "qsat"])
    p.add_argument("--graph")
    p.add_argument("--k", type=int)
    p.add_argument("--qbf")
    p.add_argument("--t", type=int)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("approx", help="run an approximation driver")
    p.add_argument("problem", choices=["domset", "qsat"])
    p.add_argument("--graph")
    p.add_argument("--qbf")
    p.add_argument("--text-semantics", action="store_true", help="play k+1 rounds and report k")
    _budget_flags(p)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("oracle", help="brute-force reference values")
    p.add_argument("problem", choices=["domset", "qsat"])
    p.add_argument("--graph")
    p.add_argument("--qbf")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("synth-formula", help="search for a separating formula")
    p.add_argument("--left", nargs="+", required=True)
    p.add_argument("--right", nargs="+", required=True)
    p.add_argument("--m", type=int, required=True)
    _budget_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("corpus", help="run the seeded cross-check corpora")
    p.add_argument("checks", nargs="*")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    rep = Reporter(args)
    try:
        code = args.func(args, rep)
    except (UsageError, ParseError, StructuralError, ValueError, OSError) as exc:
        if rep.json:
            sys.stdout.write(json.dumps({"error": str(exc)}, sort_keys=True) + "\n")
        else:
            sys.stderr.write(f"msgames: error: {exc}\n")
        return EXIT_ERROR
    rep.emit(sys.stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
