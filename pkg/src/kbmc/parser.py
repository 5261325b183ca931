"""Parser and serializer for the knowledge-base text format and queries.

The grammar is documented in docs/language.md, which is the normative
language reference for this repository.  Declarations end with ``.``,
comments run from ``%`` to end of line, identifiers are normalized to
lower case, and variables start with ``?``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .knowledge import (
    DecideQuery,
    DistQuery,
    DomainDecl,
    InfoInfluence,
    KnowledgeBase,
    LogicClause,
    LogicQuery,
    Prior,
    ProbInfluence,
    Query,
    ValueInfluence,
)
from .tables import ConditionalTable, Distribution, ValueTable
from .terms import (
    AltSet,
    Constant,
    Outcome,
    Proposition,
    Term,
    Variable,
    alternative_outcomes,
    proposition_outcomes,
)

MAX_ERRORS = 20


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    kind: str  # syntax | unknown-relation | arity-mismatch | bad-distribution | duplicate-domain
    message: str

    def __str__(self) -> str:
        return f"{self.span}: {self.kind}: {self.message}"


class ParseFailure(Exception):
    def __init__(self, errors: tuple[ParseError, ...]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<arrow><-)
  | (?P<bar>\|[piv])
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<var>\?[A-Za-z][A-Za-z0-9_-]*)
  | (?P<ident>[A-Za-z][A-Za-z0-9_-]*)
  | (?P<punct>[(){},;:=./@])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str, filename: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseFailure(
                (
                    ParseError(
                        SourceSpan(filename, line, col),
                        "syntax",
                        f"unexpected character {text[pos]!r}",
                    ),
                )
            )
        kind = m.lastgroup or ""
        value = m.group()
        if kind not in ("ws", "comment"):
            norm = value.lower() if kind in ("ident", "var") else value
            tokens.append(_Token(kind, norm, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


@dataclass
class _Entry:
    """One generic table entry: an optional member key and some numbers."""

    key: tuple[str, ...] | None
    numbers: tuple[float, ...]
    span: SourceSpan


class _DeclError(Exception):
    def __init__(self, error: ParseError):
        self.error = error


class _Parser:
    def __init__(self, tokens: list[_Token], filename: str):
        self.tokens = tokens
        self.pos = 0
        self.filename = filename
        self.errors: list[ParseError] = []

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def span(self, tok: _Token | None = None) -> SourceSpan:
        tok = tok or self.peek()
        return SourceSpan(self.filename, tok.line, tok.column)

    def fail(self, kind: str, message: str, tok: _Token | None = None) -> _DeclError:
        return _DeclError(ParseError(self.span(tok), kind, message))

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise self.fail("syntax", f"expected {want!r}, found {tok.text or tok.kind!r}")
        return self.next()

    def expect_punct(self, ch: str) -> _Token:
        return self.expect("punct", ch)

    # -- terms and propositions --------------------------------------------

    def parse_altset(self) -> AltSet:
        open_tok = self.expect_punct("{")
        members = [self.expect("ident").text]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.next()
            members.append(self.expect("ident").text)
        self.expect_punct("}")
        if len(members) < 2:
            raise self.fail("syntax", "value set needs at least two members", open_tok)
        if len(set(members)) != len(members):
            raise self.fail("syntax", "value set members must be distinct", open_tok)
        return AltSet(tuple(members))

    def parse_proposition(self) -> tuple[Proposition, _Token]:
        open_tok = self.expect_punct("(")
        rel = self.expect("ident")
        args: list[Term] = []
        while True:
            tok = self.peek()
            if tok.kind == "ident":
                args.append(Constant(self.next().text))
            elif tok.kind == "var":
                args.append(Variable(self.next().text[1:]))
            elif tok.kind == "punct" and tok.text == "{":
                args.append(self.parse_altset())
            elif tok.kind == "punct" and tok.text == ")":
                self.next()
                return Proposition(rel.text, tuple(args)), rel
            else:
                raise self.fail("syntax", f"unexpected {tok.text or tok.kind!r} in proposition")

    def parse_prop_list(self) -> list[tuple[Proposition, _Token]]:
        props = [self.parse_proposition()]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.next()
            props.append(self.parse_proposition())
        return props

    # -- table literals ------------------------------------------------------

    def parse_table_literal(self) -> list[_Entry]:
        self.expect_punct("{")
        entries: list[_Entry] = []
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            entries.append(self.parse_entry())
            tok = self.peek()
            if tok.kind == "punct" and tok.text in (",", ";"):
                self.next()
            elif not (tok.kind == "punct" and tok.text == "}"):
                raise self.fail("syntax", f"expected ',', ';' or '}}', found {tok.text!r}")
        self.expect_punct("}")
        return entries

    def parse_entry(self) -> _Entry:
        start = self.peek()
        key: tuple[str, ...] | None = None
        if start.kind == "ident":
            # Look ahead for "ident (, ident)* :" before committing to a key.
            probe = self.pos
            while self.tokens[probe].kind == "ident":
                probe += 1
                if self.tokens[probe].kind == "punct" and self.tokens[probe].text == ",":
                    probe += 1
                else:
                    break
            if self.tokens[probe].kind == "punct" and self.tokens[probe].text == ":":
                members = [self.expect("ident").text]
                while self.peek().text == ",":
                    self.next()
                    members.append(self.expect("ident").text)
                self.expect_punct(":")
                key = tuple(members)
        numbers = [self.parse_number()]
        while (
            self.peek().text == ","
            and self.peek(1).kind == "number"
        ):
            self.next()
            numbers.append(self.parse_number())
        return _Entry(key, tuple(numbers), self.span(start))

    def parse_number(self) -> float:
        tok = self.expect("number")
        return float(tok.text)

    def parse_nat(self) -> int:
        tok = self.expect("number")
        try:
            value = int(tok.text)
        except ValueError:
            raise self.fail("syntax", f"expected an integer, found {tok.text!r}", tok)
        if value < 0:
            raise self.fail("syntax", "expected a non-negative integer", tok)
        return value


class _KbBuilder:
    """Turns parsed declarations into a validated KnowledgeBase."""

    def __init__(self, parser: _Parser):
        self.p = parser
        self.domains: dict[str, DomainDecl] = {}
        self.facts: list[Proposition] = []
        self.influences: list = []

    # -- semantic checks -----------------------------------------------------

    def check_prop(
        self,
        prop: Proposition,
        rel_tok: _Token,
        expand: bool,
        allow_altsets: bool = True,
        require_decl: bool = False,
    ) -> Proposition:
        """Validate a proposition against its domain declaration.

        With ``expand``, variables at declared restricted positions are
        replaced by the declared value set (the shorthand used in influence
        subjects and conditions).  Relations used without restriction
        semantics are declared implicitly on first use; anything needing a
        value set (``require_decl``, or a literal set) must be declared.
        """
        decl = self.domains.get(prop.relation)
        if decl is None:
            if require_decl or prop.is_restricted:
                raise self.p.fail(
                    "unknown-relation", f"relation {prop.relation!r} is not declared", rel_tok
                )
            decl = DomainDecl(prop.relation, len(prop.args))
            self.domains[prop.relation] = decl
        if len(prop.args) != decl.arity:
            raise self.p.fail(
                "arity-mismatch",
                f"{prop.relation!r} takes {decl.arity} arguments, found {len(prop.args)}",
                rel_tok,
            )
        args = list(prop.args)
        for i, arg in enumerate(args):
            declared = decl.altset_at(i)
            if isinstance(arg, AltSet):
                if not allow_altsets:
                    raise self.p.fail("syntax", "value sets are not allowed here", rel_tok)
                if declared != arg:
                    raise self.p.fail(
                        "arity-mismatch",
                        f"value set at position {i + 1} of {prop.relation!r} differs "
                        f"from the domain declaration",
                        rel_tok,
                    )
            elif isinstance(arg, Constant) and declared is not None:
                if arg.symbol not in declared.members:
                    raise self.p.fail(
                        "arity-mismatch",
                        f"{arg.symbol!r} is not a member of the declared values for "
                        f"position {i + 1} of {prop.relation!r}",
                        rel_tok,
                    )
            elif isinstance(arg, Variable) and declared is not None and expand:
                if not allow_altsets:
                    raise self.p.fail("syntax", "value sets are not allowed here", rel_tok)
                args[i] = declared
        return Proposition(prop.relation, tuple(args))

    # -- declarations ----------------------------------------------------------

    def declaration(self) -> None:
        tok = self.p.peek()
        if tok.kind != "ident":
            raise self.p.fail("syntax", f"expected a declaration, found {tok.text or tok.kind!r}")
        handler = {
            "domain": self.domain_decl,
            "fact": self.fact_decl,
            "logic": self.logic_decl,
            "prior": self.prior_decl,
            "prob": self.prob_decl,
            "info": self.info_decl,
            "value": self.value_decl,
        }.get(tok.text)
        if handler is None:
            raise self.p.fail("syntax", f"unknown declaration keyword {tok.text!r}")
        self.p.next()
        handler()
        self.p.expect_punct(".")

    def domain_decl(self) -> None:
        rel = self.p.expect("ident")
        self.p.expect_punct("/")
        arity = self.p.parse_nat()
        restricted: list[tuple[int, AltSet]] = []
        while self.p.peek().text == "@":
            self.p.next()
            at = self.p.peek()
            pos = self.p.parse_nat()
            if not (1 <= pos <= arity):
                raise self.p.fail("syntax", f"position {pos} outside 1..{arity}", at)
            if any(existing == pos - 1 for existing, _ in restricted):
                raise self.p.fail("syntax", f"position {pos} restricted twice", at)
            restricted.append((pos - 1, self.p.parse_altset()))
        if rel.text in self.domains:
            raise self.p.fail("duplicate-domain", f"relation {rel.text!r} declared twice", rel)
        self.domains[rel.text] = DomainDecl(rel.text, arity, tuple(restricted))

    def fact_decl(self) -> None:
        prop, rel_tok = self.p.parse_proposition()
        prop = self.check_prop(prop, rel_tok, expand=False, allow_altsets=False)
        if not prop.is_ground:
            raise self.p.fail("syntax", "facts must be ground", rel_tok)
        self.facts.append(prop)

    def logic_decl(self) -> None:
        head, head_tok = self.p.parse_proposition()
        head = self.check_prop(head, head_tok, expand=False, allow_altsets=False)
        self.p.expect("arrow")
        body = []
        for prop, tok in self.p.parse_prop_list():
            body.append(self.check_prop(prop, tok, expand=False, allow_altsets=False))
        self.influences.append(LogicClause(head, tuple(body)))

    def prior_decl(self) -> None:
        subject, rel_tok = self.p.parse_proposition()
        subject = self.check_prop(subject, rel_tok, expand=True, require_decl=True)
        if not subject.is_restricted:
            raise self.p.fail("syntax", "a prior needs a restricted subject", rel_tok)
        self.p.expect_punct("=")
        entries = self.p.parse_table_literal()
        self.influences.append(Prior(subject, self.build_distribution(subject, entries)))

    def prob_decl(self) -> None:
        subject, rel_tok = self.p.parse_proposition()
        subject = self.check_prop(subject, rel_tok, expand=True, require_decl=True)
        if not subject.is_restricted:
            raise self.p.fail("syntax", "a probabilistic influence needs a restricted subject", rel_tok)
        self.p.expect("bar", "|p")
        conditions = self.parse_conditions()
        self.p.expect_punct("=")
        entries = self.p.parse_table_literal()
        axes = tuple(c for c in conditions if c.is_restricted)
        cpt = self.build_cpt(subject, axes, entries)
        self.influences.append(ProbInfluence(subject, conditions, cpt))

    def info_decl(self) -> None:
        decision, rel_tok = self.p.parse_proposition()
        decision = self.check_prop(decision, rel_tok, expand=True, require_decl=True)
        if len(decision.restricted_positions) != 1:
            raise self.p.fail(
                "syntax", "a decision needs exactly one restricted position", rel_tok
            )
        self.p.expect("bar", "|i")
        observed: list[Proposition] = []
        if self.p.peek().text == "(":
            for prop, tok in self.p.parse_prop_list():
                prop = self.check_prop(prop, tok, expand=True)
                if not prop.is_restricted:
                    raise self.p.fail(
                        "syntax", "observed propositions must be restricted", tok
                    )
                observed.append(prop)
        self.influences.append(InfoInfluence(decision, tuple(observed)))

    def value_decl(self) -> None:
        subject, rel_tok = self.p.parse_proposition()
        subject = self.check_prop(subject, rel_tok, expand=False, allow_altsets=False)
        if len(subject.variables()) != 1 or sum(
            isinstance(a, Variable) for a in subject.args
        ) != 1:
            raise self.p.fail(
                "syntax", "the value subject needs exactly one free variable", rel_tok
            )
        self.p.expect("bar", "|v")
        conditions = self.parse_conditions()
        self.p.expect_punct("=")
        entries = self.p.parse_table_literal()
        axes = tuple(c for c in conditions if c.is_restricted)
        vtable = self.build_vtable(axes, entries)
        self.influences.append(ValueInfluence(subject, conditions, vtable))

    def parse_conditions(self) -> tuple[Proposition, ...]:
        out = []
        for prop, tok in self.p.parse_prop_list():
            out.append(self.check_prop(prop, tok, expand=True))
        return tuple(out)

    # -- table construction ------------------------------------------------------

    def build_distribution(self, subject: Proposition, entries: list[_Entry]) -> Distribution:
        outcomes = proposition_outcomes(subject)
        if not entries:
            raise _DeclError(ParseError(self.p.span(), "bad-distribution", "empty distribution"))
        if len(entries) == 1 and entries[0].key is None:
            probs = entries[0].numbers
            if len(probs) != len(outcomes):
                raise _DeclError(ParseError(
                    entries[0].span, "bad-distribution",
                    f"expected {len(outcomes)} probabilities, found {len(probs)}",
                ))
        else:
            by_key: dict[tuple[str, ...], float] = {}
            for e in entries:
                if e.key is None or len(e.numbers) != 1:
                    raise _DeclError(ParseError(
                        e.span, "bad-distribution",
                        "each entry needs an outcome key and a single probability",
                    ))
                if e.key in by_key:
                    raise _DeclError(ParseError(
                        e.span, "bad-distribution", f"duplicate outcome {','.join(e.key)}"
                    ))
                by_key[e.key] = e.numbers[0]
            probs_list = []
            for o in outcomes:
                members = tuple(m for _, m in o.choices)
                if members not in by_key:
                    raise _DeclError(ParseError(
                        entries[0].span, "bad-distribution",
                        f"missing probability for outcome {o.label()}",
                    ))
                probs_list.append(by_key.pop(members))
            if by_key:
                extra = ",".join(next(iter(by_key)))
                raise _DeclError(ParseError(
                    entries[0].span, "bad-distribution", f"unknown outcome {extra}"
                ))
            probs = tuple(probs_list)
        dist = Distribution(outcomes, probs)
        self.validated(dist, subject, entries[0].span)
        return dist

    def validated(self, dist: Distribution, subject: Proposition, span: SourceSpan) -> Distribution:
        try:
            dist.validate(subject)
        except ValueError as exc:
            raise _DeclError(ParseError(span, "bad-distribution", str(exc)))
        return dist

    def build_cpt(
        self,
        subject: Proposition,
        axes: tuple[Proposition, ...],
        entries: list[_Entry],
    ) -> ConditionalTable:
        outcomes = proposition_outcomes(subject)
        joints = alternative_outcomes(axes)
        rows: dict[tuple[tuple[tuple[int, str], ...], ...], tuple[Distribution, SourceSpan]] = {}
        for e in entries:
            if axes and e.key is None:
                raise _DeclError(ParseError(
                    e.span, "bad-distribution", "table row needs a condition key"
                ))
            if not axes and e.key is not None:
                raise _DeclError(ParseError(
                    e.span, "bad-distribution", "unconditional table takes no row keys"
                ))
            joint = self.resolve_joint(axes, e)
            if len(e.numbers) != len(outcomes):
                raise _DeclError(ParseError(
                    e.span, "bad-distribution",
                    f"expected {len(outcomes)} probabilities per row, found {len(e.numbers)}",
                ))
            key = tuple(o.choices for o in joint)
            if key in rows:
                raise _DeclError(ParseError(e.span, "bad-distribution", "duplicate row"))
            rows[key] = (self.validated(Distribution(outcomes, e.numbers), subject, e.span), e.span)
        ordered = []
        for joint in joints:
            key = tuple(o.choices for o in joint)
            if key not in rows:
                missing = "&".join(o.label() for o in joint)
                raise _DeclError(ParseError(
                    entries[0].span if entries else self.p.span(),
                    "bad-distribution", f"missing row for condition {missing}",
                ))
            ordered.append((joint, rows[key][0]))
        return ConditionalTable(axes, tuple(ordered))

    def build_vtable(
        self, axes: tuple[Proposition, ...], entries: list[_Entry]
    ) -> ValueTable:
        joints = alternative_outcomes(axes)
        rows: dict[tuple, tuple[float, SourceSpan]] = {}
        for e in entries:
            if axes and e.key is None:
                raise _DeclError(ParseError(e.span, "bad-distribution", "value row needs a key"))
            if not axes and e.key is not None:
                raise _DeclError(ParseError(e.span, "bad-distribution", "constant value takes no keys"))
            if len(e.numbers) != 1:
                raise _DeclError(ParseError(e.span, "bad-distribution", "one value per row"))
            joint = self.resolve_joint(axes, e)
            key = tuple(o.choices for o in joint)
            if key in rows:
                raise _DeclError(ParseError(e.span, "bad-distribution", "duplicate value row"))
            rows[key] = (e.numbers[0], e.span)
        ordered = []
        for joint in joints:
            key = tuple(o.choices for o in joint)
            if key not in rows:
                missing = "&".join(o.label() for o in joint)
                raise _DeclError(ParseError(
                    entries[0].span if entries else self.p.span(),
                    "bad-distribution", f"missing value for {missing}",
                ))
            ordered.append((joint, rows[key][0]))
        return ValueTable(axes, tuple(ordered))

    def resolve_joint(self, axes: tuple[Proposition, ...], e: _Entry) -> tuple[Outcome, ...]:
        """Map a row key (one member per restricted position, axis by axis)
        to the joint outcome it denotes."""
        members = list(e.key or ())
        joint = []
        for axis in axes:
            positions = axis.restricted_positions
            if len(members) < len(positions):
                raise _DeclError(ParseError(e.span, "bad-distribution", "row key too short"))
            choices = []
            for pos in positions:
                m = members.pop(0)
                if m not in axis.args[pos].members:
                    raise _DeclError(ParseError(
                        e.span, "bad-distribution",
                        f"{m!r} is not an outcome of {axis}",
                    ))
                choices.append((pos, m))
            joint.append(Outcome(axis, tuple(choices)))
        if members:
            raise _DeclError(ParseError(e.span, "bad-distribution", "row key too long"))
        return tuple(joint)


def parse_kb(text: str, filename: str = "<kb>") -> KnowledgeBase:
    """Parse a knowledge-base source into a validated KnowledgeBase.

    Raises ParseFailure carrying every diagnostic (at most MAX_ERRORS) with
    source spans.
    """
    parser = _Parser(_tokenize(text, filename), filename)
    builder = _KbBuilder(parser)
    while parser.peek().kind != "eof":
        try:
            builder.declaration()
        except _DeclError as exc:
            parser.errors.append(exc.error)
            if len(parser.errors) >= MAX_ERRORS:
                break
            # Resynchronize after the offending declaration.
            while parser.peek().kind != "eof" and not (
                parser.peek().kind == "punct" and parser.peek().text == "."
            ):
                parser.next()
            if parser.peek().kind != "eof":
                parser.next()
    if parser.errors:
        raise ParseFailure(tuple(parser.errors))
    kb = KnowledgeBase(
        tuple(builder.domains.values()), tuple(builder.facts), tuple(builder.influences)
    )
    kb.validate()
    return kb


def parse_query(text: str, filename: str = "<query>") -> Query:
    """Parse one of ``?logic``, ``?dist`` or ``?decide``; the final ``.`` is
    optional."""
    parser = _Parser(_tokenize(text, filename), filename)
    try:
        head = parser.expect("var")
        if head.text[1:] not in ("logic", "dist", "decide"):
            raise parser.fail("syntax", f"unknown query form {head.text!r}", head)
        form = head.text[1:]
        props = [p for p, _ in parser.parse_prop_list()]
        if parser.peek().text == ".":
            parser.next()
        if parser.peek().kind != "eof":
            raise parser.fail("syntax", f"unexpected trailing {parser.peek().text!r}")
        if form == "logic":
            return LogicQuery(tuple(props))
        if len(props) != 1:
            raise parser.fail("syntax", f"?{form} takes a single proposition", head)
        return DistQuery(props[0]) if form == "dist" else DecideQuery(props[0])
    except _DeclError as exc:
        raise ParseFailure((exc.error,))


def validate_query(query: Query, kb: KnowledgeBase, filename: str = "<query>") -> Query:
    """Domain-validate a parsed query against a knowledge base.

    Logic goals may not carry value sets (they are not provable, only
    modellable); patterns with literal value sets must match the domain
    declaration.
    """
    span = SourceSpan(filename, 1, 1)

    def check(p: Proposition, allow_altsets: bool) -> None:
        decl = kb.domain_for(p.relation)
        if decl is None:
            raise ParseFailure((ParseError(span, "unknown-relation", f"relation {p.relation!r} is not declared"),))
        if len(p.args) != decl.arity:
            raise ParseFailure((ParseError(
                span, "arity-mismatch",
                f"{p.relation!r} takes {decl.arity} arguments, found {len(p.args)}",
            ),))
        for i, a in enumerate(p.args):
            declared = decl.altset_at(i)
            if isinstance(a, AltSet):
                if not allow_altsets:
                    raise ParseFailure((ParseError(span, "syntax", "value sets are not allowed in logic goals"),))
                if declared != a:
                    raise ParseFailure((ParseError(
                        span, "arity-mismatch",
                        f"value set at position {i + 1} of {p.relation!r} differs from the domain declaration",
                    ),))
            elif isinstance(a, Constant) and declared is not None and a.symbol not in declared.members:
                raise ParseFailure((ParseError(
                    span, "arity-mismatch",
                    f"{a.symbol!r} is not a member of the declared values for position {i + 1} of {p.relation!r}",
                ),))

    if isinstance(query, LogicQuery):
        for g in query.goals:
            check(g, allow_altsets=False)
    else:
        check(query.pattern, allow_altsets=True)
    return query


# -- serialization ------------------------------------------------------------


def _num(x: float) -> str:
    return repr(x)


def _dist_literal(dist: Distribution) -> str:
    parts = [f"{o.label()}: {_num(p)}" for o, p in zip(dist.outcomes, dist.probs)]
    return "{" + ", ".join(parts) + "}"


def _row_key(joint) -> str:
    members = [m for o in joint for _, m in o.choices]
    return ", ".join(members)


def _cpt_literal(cpt: ConditionalTable) -> str:
    if not cpt.row_axes:
        (_, dist), = cpt.rows
        return "{" + ", ".join(_num(p) for p in dist.probs) + "}"
    rows = [
        f"{_row_key(joint)}: " + ", ".join(_num(p) for p in dist.probs)
        for joint, dist in cpt.rows
    ]
    return "{\n  " + ";\n  ".join(rows) + "}"


def _vtable_literal(vt: ValueTable) -> str:
    if not vt.row_axes:
        (_, v), = vt.rows
        return "{" + _num(v) + "}"
    rows = [f"{_row_key(joint)}: {_num(v)}" for joint, v in vt.rows]
    return "{\n  " + ";\n  ".join(rows) + "}"


def serialize_kb(kb: KnowledgeBase) -> str:
    """Canonical text for a knowledge base; parsing it reproduces the input
    exactly (declaration order, value-set order, full-precision numbers)."""
    lines: list[str] = []
    for d in kb.domains:
        decl = f"domain {d.relation}/{d.arity}"
        for pos, alts in d.restricted:
            decl += f" @{pos + 1} {alts}"
        lines.append(decl + ".")
    for f in kb.facts:
        lines.append(f"fact {f}.")
    for inf in kb.influences:
        if isinstance(inf, LogicClause):
            body = ", ".join(str(b) for b in inf.body)
            lines.append(f"logic {inf.head} <- {body}.")
        elif isinstance(inf, Prior):
            lines.append(f"prior {inf.subject} = {_dist_literal(inf.dist)}.")
        elif isinstance(inf, ProbInfluence):
            conds = ", ".join(str(c) for c in inf.conditions)
            lines.append(f"prob {inf.subject} |p {conds} = {_cpt_literal(inf.cpt)}.")
        elif isinstance(inf, InfoInfluence):
            obs = ", ".join(str(o) for o in inf.observed)
            suffix = f" {obs}." if obs else "."
            lines.append(f"info {inf.decision} |i{suffix}")
        elif isinstance(inf, ValueInfluence):
            conds = ", ".join(str(c) for c in inf.conditions)
            lines.append(f"value {inf.subject} |v {conds} = {_vtable_literal(inf.vtable)}.")
    return "\n".join(lines) + ("\n" if lines else "")
