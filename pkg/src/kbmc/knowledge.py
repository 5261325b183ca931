"""Influence forms, domain declarations, the knowledge base, and queries."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .tables import ConditionalTable, Distribution, ValueTable
from .terms import AltSet, Proposition, rename_proposition


@dataclass(frozen=True)
class LogicClause:
    """Horn clause: if every body proposition holds, the head holds."""

    head: Proposition
    body: tuple[Proposition, ...]


@dataclass(frozen=True)
class Prior:
    """Unconditional distribution over a restricted proposition's outcomes."""

    subject: Proposition
    dist: Distribution


@dataclass(frozen=True)
class ProbInfluence:
    """Conditional distribution for the subject given its restricted
    conditions; unrestricted conditions are deterministic guards that must
    be proved logically before the influence applies."""

    subject: Proposition
    conditions: tuple[Proposition, ...]
    cpt: ConditionalTable

    @property
    def restricted_conditions(self) -> tuple[Proposition, ...]:
        return tuple(c for c in self.conditions if c.is_restricted)

    @property
    def guard_conditions(self) -> tuple[Proposition, ...]:
        return tuple(c for c in self.conditions if not c.is_restricted)


@dataclass(frozen=True)
class InfoInfluence:
    """Marks the decision proposition's outcomes as choices, with the
    observed propositions known at decision time."""

    decision: Proposition
    observed: tuple[Proposition, ...]


@dataclass(frozen=True)
class ValueInfluence:
    """Associates outcomes of the restricted conditions with a real value,
    bound to the single free variable of the subject."""

    subject: Proposition
    conditions: tuple[Proposition, ...]
    vtable: ValueTable

    @property
    def restricted_conditions(self) -> tuple[Proposition, ...]:
        return tuple(c for c in self.conditions if c.is_restricted)

    @property
    def guard_conditions(self) -> tuple[Proposition, ...]:
        return tuple(c for c in self.conditions if not c.is_restricted)


Influence = Union[LogicClause, Prior, ProbInfluence, InfoInfluence, ValueInfluence]


def rename_influence(inf: Influence, suffix: int) -> Influence:
    """Rename all clause-scoped variables apart before a unification attempt."""
    r = lambda p: rename_proposition(p, suffix)
    if isinstance(inf, LogicClause):
        return LogicClause(r(inf.head), tuple(r(b) for b in inf.body))
    if isinstance(inf, Prior):
        return Prior(r(inf.subject), inf.dist.rebased(r(inf.subject)))
    if isinstance(inf, ProbInfluence):
        subject = r(inf.subject)
        conds = tuple(r(c) for c in inf.conditions)
        axes = tuple(r(a) for a in inf.cpt.row_axes)
        rows = tuple(
            (tuple(o.__class__(r(o.base), o.choices) for o in key), d.rebased(subject))
            for key, d in inf.cpt.rows
        )
        return ProbInfluence(subject, conds, ConditionalTable(axes, rows))
    if isinstance(inf, InfoInfluence):
        return InfoInfluence(r(inf.decision), tuple(r(o) for o in inf.observed))
    if isinstance(inf, ValueInfluence):
        subject = r(inf.subject)
        conds = tuple(r(c) for c in inf.conditions)
        axes = tuple(r(a) for a in inf.vtable.row_axes)
        rows = tuple(
            (tuple(o.__class__(r(o.base), o.choices) for o in key), v)
            for key, v in inf.vtable.rows
        )
        return ValueInfluence(subject, conds, ValueTable(axes, rows))
    raise TypeError(f"unknown influence {inf!r}")


@dataclass(frozen=True)
class DomainDecl:
    relation: str
    arity: int
    restricted: tuple[tuple[int, AltSet], ...] = ()

    def altset_at(self, position: int) -> AltSet | None:
        for pos, alts in self.restricted:
            if pos == position:
                return alts
        return None


@dataclass(frozen=True)
class KnowledgeBase:
    domains: tuple[DomainDecl, ...] = ()
    facts: tuple[Proposition, ...] = ()
    influences: tuple[Influence, ...] = ()

    def domain_for(self, relation: str) -> DomainDecl | None:
        for d in self.domains:
            if d.relation == relation:
                return d
        return None

    def logic_clauses(self) -> Iterator[LogicClause]:
        for inf in self.influences:
            if isinstance(inf, LogicClause):
                yield inf

    def validate(self) -> None:
        for f in self.facts:
            if not f.is_ground:
                raise ValueError(f"fact {f} is not ground")
        for inf in self.influences:
            subject = getattr(inf, "subject", None) or getattr(inf, "decision", None)
            if subject is None:
                continue
            decl = self.domain_for(subject.relation)
            if decl is None:
                raise ValueError(f"no domain declaration for {subject.relation}")
            for pos in subject.restricted_positions:
                if decl.altset_at(pos) != subject.args[pos]:
                    raise ValueError(
                        f"restricted position {pos + 1} of {subject} does not "
                        f"match the domain declaration"
                    )


@dataclass(frozen=True)
class LogicQuery:
    goals: tuple[Proposition, ...]


@dataclass(frozen=True)
class DistQuery:
    pattern: Proposition


@dataclass(frozen=True)
class DecideQuery:
    pattern: Proposition


Query = Union[LogicQuery, DistQuery, DecideQuery]


def query_goals(q: Query) -> tuple[Proposition, ...]:
    if isinstance(q, LogicQuery):
        return q.goals
    return (q.pattern,)
