"""Horn-clause proof over facts and logic clauses.

Depth-first SLD resolution with chronological backtracking: facts are
tried first, then clauses, each in declaration order, subgoals left to
right.  Absence of a proof is never a conclusion here; it only means the
caller falls through to its next inference level.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import count
from typing import Iterator, Sequence

from .knowledge import KnowledgeBase, rename_influence
from .terms import (
    EMPTY,
    Proposition,
    Substitution,
    Variable,
    apply,
    apply_term,
    unify,
    variables_of,
)


@dataclass(frozen=True)
class ProofConfig:
    """depth_limit bounds the resolution tree depth (clause expansions along
    one branch), not the number of solutions."""

    depth_limit: int = 64
    solution_limit: int | None = None

    def __post_init__(self) -> None:
        if self.depth_limit < 1:
            raise ValueError("depth_limit must be positive")


class AnswerStream:
    """Lazy answer substitutions in depth-first discovery order.

    ``depth_limited`` reports whether any branch was cut by the depth
    bound — a truncated search is not a proof of absence.  The flag is
    complete once the stream is exhausted.  Single pass.
    """

    def __init__(self) -> None:
        self._gen: Iterator[Substitution] | None = None
        self.depth_limited = False

    def __iter__(self) -> Iterator[Substitution]:
        assert self._gen is not None
        return self._gen


def prove(
    goals: Sequence[Proposition], kb: KnowledgeBase, cfg: ProofConfig = ProofConfig()
) -> AnswerStream:
    """Prove a conjunction, yielding each distinct answer substitution once,
    projected onto the goal's variables.

    Goals must not contain value sets; restricted subgoals are handled a
    level up, never here.
    """
    goals = tuple(goals)
    for g in goals:
        if g.is_restricted:
            raise ValueError(f"goal {g} contains a value set")
    goal_vars = variables_of(goals)
    clauses = tuple(kb.logic_clauses())
    stream = AnswerStream()

    def project(theta: Substitution) -> Substitution:
        fresh: dict[str, str] = {}
        out = {}
        for n in goal_vars:
            t = apply_term(theta, Variable(n))
            if isinstance(t, Variable):
                if t.name == n:
                    continue
                # Unbound renamed variables get stable reified names.
                t = Variable(fresh.setdefault(t.name, f"_{len(fresh)}"))
            out[n] = t
        return Substitution.of(out)

    def gen() -> Iterator[Substitution]:
        seen: set = set()
        renames = count(1)

        def solve(items: tuple, theta: Substitution) -> Iterator[Substitution]:
            if not items:
                ans = project(theta)
                if ans.pairs not in seen:
                    seen.add(ans.pairs)
                    yield ans
                return
            (raw, depth), rest = items[0], items[1:]
            goal = apply(theta, raw)
            for fact in kb.facts:
                t2 = unify(goal, fact, theta)
                if t2 is not None:
                    yield from solve(rest, t2)
            for clause in clauses:
                if depth + 1 > cfg.depth_limit:
                    stream.depth_limited = True
                    break
                renamed = rename_influence(clause, next(renames))
                t2 = unify(goal, renamed.head, theta)
                if t2 is not None:
                    body = tuple((b, depth + 1) for b in renamed.body)
                    yield from solve(body + rest, t2)

        emitted = 0
        for ans in solve(tuple((g, 0) for g in goals), EMPTY):
            yield ans
            emitted += 1
            if cfg.solution_limit is not None and emitted >= cfg.solution_limit:
                return

    stream._gen = gen()
    return stream


def derivable_facts(kb: KnowledgeBase, bound: int = 32) -> frozenset[Proposition]:
    """All ground consequences reachable by bottom-up iteration, up to
    ``bound`` sweeps or a fixpoint, whichever comes first.

    This is the background state of information that deterministic guards
    are checked against, and the independent oracle for the resolution
    prover.
    """
    known: dict[Proposition, None] = {f: None for f in kb.facts}
    clauses = tuple(kb.logic_clauses())
    for _ in range(bound):
        fresh: list[Proposition] = []
        for clause in clauses:
            for theta in _ground_matches(clause.body, known):
                head = apply(theta, clause.head)
                if head.is_ground and head not in known:
                    if all(head != f for f in fresh):
                        fresh.append(head)
        if not fresh:
            break
        for f in fresh:
            known[f] = None
    return frozenset(known)


def _ground_matches(
    body: tuple[Proposition, ...], known: dict[Proposition, None]
) -> Iterator[Substitution]:
    def rec(i: int, theta: Substitution) -> Iterator[Substitution]:
        if i == len(body):
            yield theta
            return
        goal = apply(theta, body[i])
        for fact in known:
            t2 = unify(goal, fact, theta)
            if t2 is not None:
                yield from rec(i + 1, t2)

    yield from rec(0, EMPTY)
