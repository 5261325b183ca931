"""Flat first-order terms, propositions, outcomes, and the substitution algebra.

The language is deliberately flat: an argument is a constant symbol, a
variable, or an ordered set of alternative values.  There are no function
symbols, so unification needs no recursive occurs check; the only cycle a
binding could introduce is a variable bound to itself, which ``unify``
never produces.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Sequence, Union


@dataclass(frozen=True)
class Constant:
    symbol: str

    def __str__(self) -> str:
        return self.symbol


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return "?" + self.name


@dataclass(frozen=True)
class AltSet:
    """Ordered set of mutually exclusive, collectively exhaustive values.

    Order is semantic: it indexes distribution entries and table rows, so
    equality is order-sensitive.
    """

    members: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.members) < 2:
            raise ValueError("alternative set needs at least two members")
        if len(set(self.members)) != len(self.members):
            raise ValueError("alternative set members must be distinct")

    def __str__(self) -> str:
        return "{" + ", ".join(self.members) + "}"


Term = Union[Constant, Variable, AltSet]


@dataclass(frozen=True)
class Proposition:
    relation: str
    args: tuple[Term, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return f"({self.relation})"
        return "(" + " ".join([self.relation] + [str(a) for a in self.args]) + ")"

    @property
    def is_ground(self) -> bool:
        return all(isinstance(a, Constant) for a in self.args)

    @property
    def is_restricted(self) -> bool:
        return any(isinstance(a, AltSet) for a in self.args)

    @property
    def restricted_positions(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.args) if isinstance(a, AltSet))

    def variables(self) -> tuple[str, ...]:
        seen: list[str] = []
        for a in self.args:
            if isinstance(a, Variable) and a.name not in seen:
                seen.append(a.name)
        return tuple(seen)


def variables_of(props: Iterable[Proposition]) -> tuple[str, ...]:
    """Variable names across propositions, in order of first appearance."""
    seen: list[str] = []
    for p in props:
        for name in p.variables():
            if name not in seen:
                seen.append(name)
    return tuple(seen)


@dataclass(frozen=True)
class Outcome:
    """One alternative outcome of a restricted proposition.

    ``choices`` picks a member for every restricted argument position of
    ``base``, in ascending position order.
    """

    base: Proposition
    choices: tuple[tuple[int, str], ...]

    def ground(self) -> Proposition:
        chosen = dict(self.choices)
        args = tuple(
            Constant(chosen[i]) if i in chosen else a
            for i, a in enumerate(self.base.args)
        )
        return Proposition(self.base.relation, args)

    def label(self) -> str:
        return ",".join(m for _, m in self.choices) or "-"


JointOutcome = tuple[Outcome, ...]


def proposition_outcomes(p: Proposition) -> tuple[Outcome, ...]:
    """All outcomes of one proposition, rightmost restricted position fastest."""
    positions = p.restricted_positions
    pools = [p.args[i].members for i in positions]
    return tuple(
        Outcome(p, tuple(zip(positions, combo))) for combo in product(*pools)
    )


def alternative_outcomes(ps: Sequence[Proposition]) -> tuple[JointOutcome, ...]:
    """Joint outcomes of a conjunction: cross product in declaration order,
    rightmost proposition varying fastest.  The empty conjunction has a
    single empty joint outcome."""
    return tuple(product(*(proposition_outcomes(p) for p in ps)))


def rebase_outcome(o: Outcome, new_base: Proposition) -> Outcome:
    """Re-attach an outcome to an instantiated copy of its proposition.

    The restricted positions must carry the same value sets; only the
    non-restricted arguments may have changed.
    """
    for pos, _ in o.choices:
        if new_base.args[pos] != o.base.args[pos]:
            raise ValueError(f"outcome does not fit {new_base}")
    return Outcome(new_base, o.choices)


@dataclass(frozen=True)
class Substitution:
    """Variable bindings ``{x1/t1, ...}``, kept normalized: no variable maps
    to itself and bindings are fully resolved, so applying twice equals
    applying once."""

    pairs: tuple[tuple[str, Term], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "_map", dict(self.pairs))

    @staticmethod
    def of(bindings: Mapping[str, Term]) -> "Substitution":
        clean = {n: t for n, t in bindings.items() if t != Variable(n)}
        return Substitution(tuple(sorted(clean.items(), key=lambda kv: kv[0])))

    def get(self, name: str) -> Term | None:
        return self._map.get(name)  # type: ignore[attr-defined]

    @property
    def domain(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.pairs)

    def __bool__(self) -> bool:
        return bool(self.pairs)

    def __str__(self) -> str:
        return "{" + ", ".join(f"?{n}/{t}" for n, t in self.pairs) + "}"


EMPTY = Substitution()


def apply_term(theta: Substitution, t: Term) -> Term:
    if isinstance(t, Variable):
        bound = theta.get(t.name)
        if bound is not None:
            return bound
    return t


def apply(theta: Substitution, p: Proposition) -> Proposition:
    """``p`` with every bound variable replaced; unbound variables unchanged."""
    if not theta:
        return p
    return Proposition(p.relation, tuple(apply_term(theta, a) for a in p.args))


def compose(t1: Substitution, t2: Substitution) -> Substitution:
    """Composition: applying the result equals applying ``t1`` then ``t2``."""
    dom1 = set(t1.domain)
    out: dict[str, Term] = {}
    for name, t in t1.pairs:
        out[name] = apply_term(t2, t)
    for name, t in t2.pairs:
        if name not in dom1:
            out[name] = t
    return Substitution.of(out)


def unify(p: Proposition, q: Proposition, theta: Substitution = EMPTY) -> Substitution | None:
    """Most general unifier of two propositions, extending ``theta``.

    A variable unifies with any term; two value sets unify only when equal
    as ordered sets; a constant unifies with a value set when it is a
    member (the restriction narrows to a certainty, recorded positionally
    rather than in the substitution).  Returns None on failure.
    """
    if p.relation != q.relation or len(p.args) != len(q.args):
        return None
    b: dict[str, Term] = dict(theta.pairs)

    def walk(t: Term) -> Term:
        while isinstance(t, Variable):
            nxt = b.get(t.name)
            if nxt is None or nxt == t:
                break
            t = nxt
        return t

    for pa, qa in zip(p.args, q.args):
        a, c = walk(pa), walk(qa)
        if a == c:
            continue
        if isinstance(a, Variable):
            b[a.name] = c
            continue
        if isinstance(c, Variable):
            b[c.name] = a
            continue
        if isinstance(a, Constant) and isinstance(c, AltSet) and a.symbol in c.members:
            continue
        if isinstance(c, Constant) and isinstance(a, AltSet) and c.symbol in a.members:
            continue
        return None

    resolved: dict[str, Term] = {}
    for name in b:
        t = walk(Variable(name))
        if t != Variable(name):
            resolved[name] = t
    return Substitution.of(resolved)


def instance_match(pattern: Proposition, label: Proposition) -> Substitution | None:
    """One-way match: bindings over ``pattern``'s variables that make it equal
    to ``label``.  Fails whenever matching would have to instantiate the
    label itself (including narrowing one of its value sets)."""
    if pattern.relation != label.relation or len(pattern.args) != len(label.args):
        return None
    b: dict[str, Term] = {}
    for pa, la in zip(pattern.args, label.args):
        if isinstance(pa, Variable):
            if pa.name in b:
                if b[pa.name] != la:
                    return None
            elif pa == la:
                continue
            elif isinstance(la, Variable):
                return None
            else:
                b[pa.name] = la
        elif pa != la:
            return None
    return Substitution.of(b)


def restrict(theta: Substitution, names: Sequence[str]) -> Substitution:
    """Projection of ``theta`` onto the given variable names."""
    out: dict[str, Term] = {}
    for n in names:
        t = apply_term(theta, Variable(n))
        if t != Variable(n):
            out[n] = t
    return Substitution.of(out)


def rename_proposition(p: Proposition, suffix: int) -> Proposition:
    """Rename variables apart with a derivation counter, e.g. ``?x`` -> ``?x#3``."""
    args = tuple(
        Variable(f"{a.name}#{suffix}") if isinstance(a, Variable) else a
        for a in p.args
    )
    return Proposition(p.relation, args)
