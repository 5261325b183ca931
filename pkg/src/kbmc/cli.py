"""Command-line front end: load a knowledge base, answer queries, export
diagrams and traces.

Exit codes: 0 answered, 1 construction failed, 2 parse/validation errors,
3 I/O errors.  Output is byte-deterministic for a fixed knowledge base,
query, and flag set.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from .construct import (
    ConstructionFailure,
    ConstructionResult,
    construct,
    enumerate_models,
)
from .diagram import to_dot
from .evaluate import Policy, SolveReport, solve_decision, solve_distribution
from .knowledge import DecideQuery, DistQuery, KnowledgeBase, LogicQuery, Query
from .logic import ProofConfig, derivable_facts
from .oracle import oracle_distribution, oracle_policy
from .parser import ParseFailure, parse_kb, parse_query, validate_query
from .tables import Distribution


@dataclass
class CliConfig:
    kb_path: str
    query: str | None = None
    query_file: str | None = None
    trace: bool = False
    explain: bool = False
    dot: str | None = None
    models: int | None = None
    depth: int = 64
    format: str = "text"


@dataclass
class Answer:
    result: ConstructionResult
    distribution: Distribution | None = None
    policy: Policy | None = None
    expected_value: float | None = None
    report: SolveReport | None = None


def _solve(result: ConstructionResult) -> Answer:
    if result.kind == "logical":
        return Answer(result)
    if result.kind == "probabilistic":
        dist, report = solve_distribution(result.diagram, result.query_node)
        return Answer(result, distribution=dist, report=report)
    policy, eu, report = solve_decision(result.diagram)
    return Answer(result, policy=policy, expected_value=eu, report=report)


def _fmt_dist(dist: Distribution) -> str:
    return " / ".join(
        f"{o.label()} {p:.6f}" for o, p in zip(dist.outcomes, dist.probs)
    )


def _fmt_bindings(answer) -> str:
    if not answer.pairs:
        return "yes"
    return "yes " + " ".join(f"?{n}={t}" for n, t in answer.pairs)


def _fmt_policy(ans: Answer) -> list[str]:
    lines = []
    d = ans.result.diagram
    for nid in sorted(ans.policy.rules):
        lines.append(f"policy {d.node(nid).label}:")
        for ctx, alt in ans.policy.rules[nid].items():
            key = " ".join(o.label() for o in ctx) or "always"
            lines.append(f"  {key} -> {alt}")
    lines.append(f"expected value {ans.expected_value:.6f}")
    return lines


def _render_text(ans: Answer, cfg: CliConfig, kb: KnowledgeBase) -> str:
    lines: list[str] = []
    if ans.result.kind == "logical":
        lines.append(_fmt_bindings(ans.result.answer))
    elif ans.result.kind == "probabilistic":
        lines.append(_fmt_dist(ans.distribution))
    else:
        lines.extend(_fmt_policy(ans))
    if cfg.trace:
        lines.append("trace:")
        rendered = ans.result.trace.render()
        lines.extend(rendered.split("\n") if rendered else ["  (empty)"])
        background = sorted(str(f) for f in derivable_facts(kb))
        lines.append("background facts: " + (", ".join(background) or "(none)"))
    if cfg.explain:
        lines.append("operations:")
        if ans.report and ans.report.operations:
            lines.extend("  " + line for line in ans.report.render().split("\n"))
        else:
            lines.append("  (none)")
    return "\n".join(lines)


def _render_json(ans: Answer, query: Query) -> dict:
    kind = {LogicQuery: "logic", DistQuery: "dist", DecideQuery: "decide"}[type(query)]
    obj: dict = {
        "query": kind,
        "kind": ans.result.kind,
        "bindings": {f"?{n}": str(t) for n, t in ans.result.answer.pairs},
        "distribution": None,
        "policy": None,
        "expected_value": ans.expected_value,
        "trace": [
            {
                "rule": s.rule,
                "subgoal": str(s.subgoal),
                "chosen": s.chosen,
                "substitution": str(s.theta),
                "guards": [str(g) for g in s.guards],
            }
            for s in ans.result.trace.steps
        ],
        "operations": [op.render() for op in ans.report.operations] if ans.report else [],
    }
    if ans.distribution is not None:
        obj["distribution"] = {
            "outcomes": [o.label() for o in ans.distribution.outcomes],
            "probabilities": list(ans.distribution.probs),
        }
    if ans.policy is not None:
        d = ans.result.diagram
        obj["policy"] = [
            {
                "decision": str(d.node(nid).label),
                "rules": [
                    {"context": " ".join(o.label() for o in ctx) or "always", "choice": alt}
                    for ctx, alt in ans.policy.rules[nid].items()
                ],
            }
            for nid in sorted(ans.policy.rules)
        ]
    return obj


def _run_query(
    kb: KnowledgeBase, query_text: str, cfg: CliConfig, out
) -> int:
    try:
        query = validate_query(parse_query(query_text), kb)
    except ParseFailure as exc:
        for e in exc.errors:
            print(e, file=out)
        return 2
    proof_cfg = ProofConfig(depth_limit=cfg.depth)
    try:
        if cfg.models is not None:
            results = enumerate_models(query, kb, limit=cfg.models, cfg=proof_cfg)
            if not results:
                construct(query, kb, proof_cfg)  # raises with the failure kind
            answers = [_solve(r) for r in results]
            if cfg.dot:
                with open(cfg.dot, "w") as fh:
                    fh.write(to_dot(results[0].diagram))
            if cfg.format == "json":
                payload = {"models": [_render_json(a, query) for a in answers]}
                print(json.dumps(payload, indent=2), file=out)
            else:
                blocks = []
                for i, a in enumerate(answers, 1):
                    blocks.append(f"model {i}:\n" + _render_text(a, cfg, kb))
                print("\n\n".join(blocks), file=out)
            return 0
        result = construct(query, kb, proof_cfg)
    except ConstructionFailure as exc:
        print(f"construction failed: {exc.kind}", file=out)
        return 1
    if cfg.dot:
        with open(cfg.dot, "w") as fh:
            fh.write(to_dot(result.diagram))
    ans = _solve(result)
    if cfg.format == "json":
        print(json.dumps(_render_json(ans, query), indent=2), file=out)
    else:
        print(_render_text(ans, cfg, kb), file=out)
    return 0


def _load_kb(path: str, out) -> tuple[KnowledgeBase | None, int]:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"cannot read {path}: {exc.strerror}", file=out)
        return None, 3
    try:
        return parse_kb(text, filename=path), 0
    except ParseFailure as exc:
        for e in exc.errors:
            print(e, file=out)
        return None, 2


def run(cfg: CliConfig, out=None) -> int:
    out = out or sys.stdout
    kb, code = _load_kb(cfg.kb_path, out)
    if kb is None:
        return code
    if cfg.query is not None:
        return _run_query(kb, cfg.query, cfg, out)
    if cfg.query_file is not None:
        try:
            with open(cfg.query_file) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"cannot read {cfg.query_file}: {exc.strerror}", file=out)
            return 3
        return _run_query(kb, text.strip(), cfg, out)
    # REPL: one query per line from standard input; the loaded knowledge
    # base is the only state and is never mutated.
    for line in sys.stdin:
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        _run_query(kb, line, cfg, out)
    return 0


def validate(kb_path: str, out=None) -> int:
    out = out or sys.stdout
    kb, code = _load_kb(kb_path, out)
    if kb is None:
        return code
    print(f"domains {len(kb.domains)}", file=out)
    print(f"facts {len(kb.facts)}", file=out)
    print(f"influences {len(kb.influences)}", file=out)
    print("ok", file=out)
    return 0


def run_oracle(cfg: CliConfig, out=None) -> int:
    """Hidden helper: answer via brute-force enumeration, for golden values."""
    out = out or sys.stdout
    kb, code = _load_kb(cfg.kb_path, out)
    if kb is None:
        return code
    try:
        query = validate_query(parse_query(cfg.query or ""), kb)
    except ParseFailure as exc:
        for e in exc.errors:
            print(e, file=out)
        return 2
    try:
        result = construct(query, kb, ProofConfig(depth_limit=cfg.depth))
    except ConstructionFailure as exc:
        print(f"construction failed: {exc.kind}", file=out)
        return 1
    if result.kind == "logical":
        print(_fmt_bindings(result.answer), file=out)
    elif result.kind == "probabilistic":
        print(_fmt_dist(oracle_distribution(result.diagram, result.query_node)), file=out)
    else:
        policy, eu = oracle_policy(result.diagram)
        ans = Answer(result, policy=policy, expected_value=eu)
        print("\n".join(_fmt_policy(ans)), file=out)
    return 0


def _build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kbmc",
        description="Answer logical, probabilistic and decision queries over "
        "a declarative knowledge base.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="answer a query (or start a REPL on stdin)")
    runp.add_argument("kb_path")
    src = runp.add_mutually_exclusive_group()
    src.add_argument("-q", "--query", help="query text, e.g. '?dist (weather ?x monday).'")
    src.add_argument("--query-file", help="file holding one query")
    runp.add_argument("--trace", action="store_true", help="append the construction trace")
    runp.add_argument("--explain", action="store_true", help="append the solver operations")
    runp.add_argument("--dot", metavar="PATH", help="write the constructed diagram as DOT")
    runp.add_argument("--models", type=int, metavar="K", help="enumerate up to K models")
    runp.add_argument("--depth", type=int, default=64, help="proof/construction depth bound")
    runp.add_argument("--format", choices=["text", "json"], default="text")

    vp = sub.add_parser("validate", help="parse and check a knowledge base")
    vp.add_argument("kb_path")

    op = sub.add_parser("oracle")
    op.add_argument("kb_path")
    op.add_argument("-q", "--query", required=True)
    op.add_argument("--depth", type=int, default=64)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _build_arg_parser().parse_args(argv)
    if args.command == "validate":
        return validate(args.kb_path)
    if args.command == "oracle":
        return run_oracle(CliConfig(args.kb_path, query=args.query, depth=args.depth))
    cfg = CliConfig(
        kb_path=args.kb_path,
        query=args.query,
        query_file=args.query_file,
        trace=args.trace,
        explain=args.explain,
        dot=args.dot,
        models=args.models,
        depth=args.depth,
        format=args.format,
    )
    if cfg.depth < 1:
        print("--depth must be at least 1", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
