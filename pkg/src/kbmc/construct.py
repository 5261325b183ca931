"""Query-scoped model construction.

A query starts a goal stack and an empty diagram.  Each pending subgoal is
discharged by the first applicable rule, in strict precedence order:

  i    logic proof (facts and Horn clauses; certainty beats probability)
  ii   reuse of a diagram node the subgoal is an instance of
  iii  a prior distribution
  iv   backward chaining through a conditional influence (plus, in decision
       queries, informational and value influences)

Within a rule, candidates follow knowledge-base declaration order; dead
ends backtrack chronologically.  Subgoals are processed last-in-first-out,
depth-first on the most recently generated condition.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Literal

from . import diagram as dg
from .diagram import (
    Chance,
    CycleError,
    Decision,
    InfluenceDiagram,
    Node,
    Value,
    add_arc,
    add_node,
    find_unifying_node,
    reachable,
)
from .knowledge import (
    DecideQuery,
    DistQuery,
    InfoInfluence,
    KnowledgeBase,
    LogicQuery,
    Prior,
    ProbInfluence,
    Query,
    ValueInfluence,
    query_goals,
    rename_influence,
)
from .logic import ProofConfig, prove
from .tables import ConditionalTable, ValueTable
from .terms import (
    AltSet,
    Constant,
    EMPTY,
    Outcome,
    Proposition,
    Substitution,
    Variable,
    apply,
    apply_term,
    compose,
    restrict,
    unify,
    variables_of,
)


class FlounderError(Exception):
    """A substitution left a free unrestricted variable in a node label."""


class ConstructionFailure(Exception):
    """kind is one of: exhausted, cycle, depth, decision-in-dist-query,
    unordered-decisions."""

    def __init__(self, kind: str, message: str = ""):
        super().__init__(message or kind)
        self.kind = kind


@dataclass(frozen=True)
class Subgoal:
    prop: Proposition
    consumer: int | None = None
    # Pending table-axis index on the consumer; None for informational
    # arcs and for the root goal.
    slot: int | None = None
    guard_only: bool = False
    ancestry: tuple[Proposition, ...] = ()
    delayed: bool = False


@dataclass(frozen=True)
class TraceStep:
    rule: Literal["i", "ii", "iii", "iv", "info", "value"]
    subgoal: Proposition
    chosen: str
    theta: Substitution
    guards: tuple[Proposition, ...] = ()
    influence_index: int | None = None
    node_id: int | None = None
    depth: int = 0

    def render(self) -> str:
        indent = "  " * self.depth
        line = f"{indent}{self.rule:<5} {self.subgoal}  {self.chosen}  {self.theta}"
        for g in self.guards:
            line += f"\n{indent}      proved: {g}"
        return line


@dataclass(frozen=True)
class Trace:
    steps: tuple[TraceStep, ...] = ()

    def render(self) -> str:
        return "\n".join(s.render() for s in self.steps)


@dataclass(frozen=True)
class GoalState:
    pending: tuple[Subgoal, ...]
    diagram: InfluenceDiagram
    theta: Substitution
    trace: tuple[TraceStep, ...] = ()
    query_kind: Literal["logic", "dist", "decide"] = "dist"
    query_node: int | None = None


@dataclass(frozen=True)
class ConstructionResult:
    diagram: InfluenceDiagram
    query_node: int | None
    answer: Substitution
    trace: Trace
    kind: Literal["logical", "probabilistic", "decision"]


def _rebased_outcome(o: Outcome, base: Proposition) -> Outcome:
    return Outcome(base, o.choices)


def instantiate_influence(
    inf: Prior | ProbInfluence | ValueInfluence,
    theta: Substitution,
    node_id: int = 0,
) -> Node:
    """Build the diagram node for an influence under a substitution.

    The label is the instantiated subject; restricted positions stay value
    sets, everything else must be ground (free variables flounder).  Table
    axes are instantiated alongside; their parent slots start pending.
    """
    label = apply(theta, inf.subject)
    free = label.variables()
    if isinstance(inf, ValueInfluence):
        # The one free variable is the value slot itself.
        if len(free) > 1:
            raise FlounderError(f"free variable in value label {label}")
    elif free:
        raise FlounderError(f"free variable in node label {label}")

    if isinstance(inf, Prior):
        return Node(node_id, label, Chance(inf.dist.rebased(label)), ())

    axes = tuple(apply(theta, a) for a in (
        inf.cpt.row_axes if isinstance(inf, ProbInfluence) else inf.vtable.row_axes
    ))
    if isinstance(inf, ProbInfluence):
        rows = tuple(
            (
                tuple(_rebased_outcome(o, axes[k]) for k, o in enumerate(key)),
                dist.rebased(label),
            )
            for key, dist in inf.cpt.rows
        )
        kind: dg.NodeKind = Chance(ConditionalTable(axes, rows))
    else:
        vrows = tuple(
            (tuple(_rebased_outcome(o, axes[k]) for k, o in enumerate(key)), v)
            for key, v in inf.vtable.rows
        )
        kind = Value(ValueTable(axes, vrows))
    return Node(node_id, label, kind, (None,) * len(axes))


def attach_decision(
    inf: InfoInfluence,
    theta: Substitution,
    state: GoalState,
    influence_index: int | None = None,
) -> GoalState:
    """Discharge the pending subgoal as a decision node; the observed
    propositions become subgoals whose nodes turn into informational
    parents."""
    if state.query_kind != "decide":
        raise ConstructionFailure(
            "decision-in-dist-query",
            "a distribution over a choice is undefined without a policy",
        )
    sg = state.pending[-1]
    rest = state.pending[:-1]
    p = apply(state.theta, sg.prop)
    label = apply(theta, inf.decision)
    if label.variables():
        raise FlounderError(f"free variable in decision label {label}")
    (alts,) = [a for a in label.args if isinstance(a, AltSet)]
    nid = state.diagram.next_id
    d2 = add_node(state.diagram, Node(nid, label, Decision(alts.members), ()))
    if sg.consumer is not None:
        d2 = add_arc(d2, nid, sg.consumer, slot=sg.slot)
    subs = tuple(
        Subgoal(o, consumer=nid, ancestry=sg.ancestry + (p,)) for o in inf.observed
    )
    ts = TraceStep(
        "info", p, f"info#{influence_index}", theta,
        influence_index=influence_index, node_id=nid, depth=len(sg.ancestry),
    )
    return replace(
        state,
        pending=rest + subs,
        diagram=d2,
        theta=compose(state.theta, theta),
        trace=state.trace + (ts,),
        query_node=nid if sg.consumer is None and state.query_node is None else state.query_node,
    )


class _Engine:
    def __init__(self, kb: KnowledgeBase, cfg: ProofConfig, query_kind: str):
        self.kb = kb
        self.cfg = cfg
        self.query_kind = query_kind
        self.flags: dict[str, bool] = {}

    # -- subgoal scheduling --------------------------------------------------

    def _needs_delay(self, p: Proposition) -> bool:
        """A restricted subgoal floats to the end of the queue once while its
        non-restricted argument positions are still unbound."""
        decl = self.kb.domain_for(p.relation)
        rpos = set(p.restricted_positions)
        if decl is not None:
            rpos |= {pos for pos, _ in decl.restricted}
        if not rpos:
            return False
        return any(
            isinstance(a, Variable) for i, a in enumerate(p.args) if i not in rpos
        )

    # -- rule candidates -----------------------------------------------------

    def expand(self, state: GoalState) -> list[GoalState]:
        sg = state.pending[-1]
        rest = state.pending[:-1]
        p = apply(state.theta, sg.prop)
        depth = len(sg.ancestry)

        for anc in sg.ancestry:
            if apply(state.theta, anc) == p:
                # Infinite regress: the goal depends on itself.
                self.flags["cycle"] = True
                return []
        if depth > self.cfg.depth_limit:
            self.flags["depth"] = True
            return []

        if not sg.guard_only and self._needs_delay(p):
            if sg.delayed:
                return []
            moved = replace(sg, delayed=True)
            return [replace(state, pending=(moved,) + rest)]

        cands: list[GoalState] = []
        stepno = len(state.trace) + 1

        cands.extend(self._rule_i(state, sg, rest, p, depth, stepno))
        if sg.guard_only:
            return cands
        # The root of a decision query names the value to maximize; it is
        # settled logically or by a value influence, never modelled as a
        # chance variable.
        decide_root = self.query_kind == "decide" and sg.consumer is None
        if not decide_root:
            hit = self._rule_ii(state, sg, rest, p, depth)
            if hit is not None:
                cands.append(hit)
            cands.extend(self._rule_iii(state, sg, rest, p, depth, stepno))
        cands.extend(self._rule_iv(state, sg, rest, p, depth, stepno))
        return cands

    def _rule_i(self, state, sg, rest, p, depth, stepno) -> list[GoalState]:
        out = []
        if not p.is_restricted:
            stream = prove([p], self.kb, self.cfg)
            for ans in stream:
                proved = apply(ans, p)
                ts = TraceStep(
                    "i", p, f"proved {proved}", ans,
                    guards=(proved,) if proved.is_ground else (), depth=depth,
                )
                out.append(replace(
                    state,
                    pending=rest,
                    theta=compose(state.theta, ans),
                    trace=state.trace + (ts,),
                ))
            return out
        # Restricted subgoal: look for a fact that settles one outcome
        # categorically.  The proof goal carries fresh variables in place of
        # the value sets; an answer counts only if it picks members.
        fresh = {
            pos: Variable(f"_o{pos}_{stepno}") for pos in p.restricted_positions
        }
        goal = Proposition(
            p.relation,
            tuple(fresh.get(i, a) for i, a in enumerate(p.args)),
        )
        for ans in prove([goal], self.kb, self.cfg):
            choices = []
            ok = True
            for pos, var in fresh.items():
                t = apply_term(ans, var)
                if isinstance(t, Constant) and t.symbol in p.args[pos].members:
                    choices.append((pos, t.symbol))
                else:
                    ok = False
                    break
            if not ok:
                continue
            proved = apply(ans, goal)
            theta_step = restrict(ans, p.variables())
            d2, rest2 = state.diagram, rest
            if sg.consumer is not None and sg.slot is not None:
                d2 = dg.resolve_axis_by_fact(
                    d2, sg.consumer, sg.slot, tuple(choices)
                )
                rest2 = tuple(
                    replace(s, slot=s.slot - 1)
                    if s.consumer == sg.consumer and s.slot is not None and s.slot > sg.slot
                    else s
                    for s in rest
                )
            ts = TraceStep(
                "i", p, f"proved {proved}", theta_step,
                guards=(proved,) if proved.is_ground else (), depth=depth,
            )
            out.append(replace(
                state,
                pending=rest2,
                diagram=d2,
                theta=compose(state.theta, theta_step),
                trace=state.trace + (ts,),
            ))
        return out

    def _rule_ii(self, state, sg, rest, p, depth) -> GoalState | None:
        hit = find_unifying_node(state.diagram, p)
        if hit is None:
            return None
        nid, theta = hit
        d2 = state.diagram
        if sg.consumer is not None:
            try:
                d2 = add_arc(d2, nid, sg.consumer, slot=sg.slot)
            except CycleError:
                self.flags["cycle"] = True
                return None
        ts = TraceStep("ii", p, f"node n{nid}", theta, node_id=nid, depth=depth)
        return replace(
            state,
            pending=rest,
            diagram=d2,
            theta=compose(state.theta, theta),
            trace=state.trace + (ts,),
            query_node=nid if sg.consumer is None and state.query_node is None else state.query_node,
        )

    def _rule_iii(self, state, sg, rest, p, depth, stepno) -> list[GoalState]:
        out = []
        for idx, inf in enumerate(self.kb.influences):
            if not isinstance(inf, Prior):
                continue
            renamed = rename_influence(inf, stepno)
            theta = unify(renamed.subject, p)
            if theta is None:
                continue
            try:
                node = instantiate_influence(renamed, theta, state.diagram.next_id)
            except FlounderError:
                continue
            d2 = add_node(state.diagram, node)
            if sg.consumer is not None:
                try:
                    d2 = add_arc(d2, node.id, sg.consumer, slot=sg.slot)
                except CycleError:
                    self.flags["cycle"] = True
                    continue
            ts = TraceStep(
                "iii", p, f"prior#{idx}", theta,
                influence_index=idx, node_id=node.id, depth=depth,
            )
            out.append(replace(
                state,
                pending=rest,
                diagram=d2,
                theta=compose(state.theta, theta),
                trace=state.trace + (ts,),
                query_node=node.id if sg.consumer is None and state.query_node is None else state.query_node,
            ))
        return out

    def _rule_iv(self, state, sg, rest, p, depth, stepno) -> list[GoalState]:
        out = []
        decide_root = self.query_kind == "decide" and sg.consumer is None
        for idx, inf in enumerate(self.kb.influences):
            if isinstance(inf, ProbInfluence):
                if decide_root:
                    continue
                renamed = rename_influence(inf, stepno)
                theta = unify(renamed.subject, p)
                if theta is None:
                    continue
                try:
                    node = instantiate_influence(renamed, theta, state.diagram.next_id)
                except FlounderError:
                    continue
                d2 = add_node(state.diagram, node)
                if sg.consumer is not None:
                    try:
                        d2 = add_arc(d2, node.id, sg.consumer, slot=sg.slot)
                    except CycleError:
                        self.flags["cycle"] = True
                        continue
                subs = []
                axis = 0
                for cond in renamed.conditions:
                    if cond.is_restricted:
                        subs.append(Subgoal(
                            cond, consumer=node.id, slot=axis,
                            ancestry=sg.ancestry + (p,),
                        ))
                        axis += 1
                    else:
                        subs.append(Subgoal(
                            cond, consumer=node.id, guard_only=True,
                            ancestry=sg.ancestry + (p,),
                        ))
                ts = TraceStep(
                    "iv", p, f"influence#{idx}", theta,
                    influence_index=idx, node_id=node.id, depth=depth,
                )
                out.append(replace(
                    state,
                    pending=rest + tuple(subs),
                    diagram=d2,
                    theta=compose(state.theta, theta),
                    trace=state.trace + (ts,),
                    query_node=node.id if sg.consumer is None and state.query_node is None else state.query_node,
                ))
            elif isinstance(inf, InfoInfluence):
                if decide_root:
                    continue
                renamed = rename_influence(inf, stepno)
                theta = unify(renamed.decision, p)
                if theta is None:
                    continue
                if self.query_kind != "decide":
                    self.flags["info-in-dist"] = True
                    continue
                try:
                    out.append(attach_decision(renamed, theta, state, influence_index=idx))
                except FlounderError:
                    continue
                except CycleError:
                    self.flags["cycle"] = True
                    continue
            elif isinstance(inf, ValueInfluence):
                if self.query_kind != "decide" or sg.consumer is not None:
                    continue
                renamed = rename_influence(inf, stepno)
                theta = unify(renamed.subject, p)
                if theta is None:
                    continue
                try:
                    node = instantiate_influence(renamed, theta, state.diagram.next_id)
                except FlounderError:
                    continue
                d2 = add_node(state.diagram, node)
                subs = []
                axis = 0
                for cond in renamed.conditions:
                    if cond.is_restricted:
                        subs.append(Subgoal(
                            cond, consumer=node.id, slot=axis,
                            ancestry=sg.ancestry + (p,),
                        ))
                        axis += 1
                    else:
                        subs.append(Subgoal(
                            cond, consumer=node.id, guard_only=True,
                            ancestry=sg.ancestry + (p,),
                        ))
                ts = TraceStep(
                    "value", p, f"value#{idx}", theta,
                    influence_index=idx, node_id=node.id, depth=depth,
                )
                out.append(replace(
                    state,
                    pending=rest + tuple(subs),
                    diagram=d2,
                    theta=compose(state.theta, theta),
                    trace=state.trace + (ts,),
                    query_node=node.id if state.query_node is None else state.query_node,
                ))
        return out

    # -- completion ------------------------------------------------------------

    def finalize(self, state: GoalState, query: Query) -> ConstructionResult | None:
        d = _refresh(state.diagram, state.theta)
        dg.validate(d, complete=True)
        decisions = [n.id for n in d.nodes if isinstance(n.kind, Decision)]
        if len(decisions) > 1 and not _totally_ordered(d, decisions):
            self.flags["unordered"] = True
            return None
        if not d.nodes:
            kind = "logical"
        elif self.query_kind == "decide":
            kind = "decision"
        else:
            kind = "probabilistic"
        answer = restrict(state.theta, variables_of(query_goals(query)))
        if kind == "logical":
            query_node = None
        elif kind == "decision":
            query_node = d.value_node
        else:
            query_node = state.query_node
        return ConstructionResult(d, query_node, answer, Trace(state.trace), kind)

    def failure(self) -> ConstructionFailure:
        for flag, kind in (
            ("unordered", "unordered-decisions"),
            ("info-in-dist", "decision-in-dist-query"),
            ("cycle", "cycle"),
            ("depth", "depth"),
        ):
            if self.flags.get(flag):
                return ConstructionFailure(kind)
        return ConstructionFailure("exhausted")

    def search(self, state: GoalState, query: Query) -> Iterator[ConstructionResult]:
        if not state.pending:
            result = self.finalize(state, query)
            if result is not None:
                yield result
            return
        for cand in self.expand(state):
            yield from self.search(cand, query)


def _refresh(d: InfluenceDiagram, theta: Substitution) -> InfluenceDiagram:
    """Apply the final answer substitution to every stored axis proposition
    so table axes match their (always ground) parent labels."""
    if not theta:
        return d
    nodes = []
    for n in d.nodes:
        label = apply(theta, n.label)
        kind = n.kind
        if isinstance(kind, Chance) and isinstance(kind.table, ConditionalTable):
            axes = tuple(apply(theta, a) for a in kind.table.row_axes)
            rows = tuple(
                (tuple(Outcome(axes[k], o.choices) for k, o in enumerate(key)), dist.rebased(label))
                for key, dist in kind.table.rows
            )
            kind = Chance(ConditionalTable(axes, rows))
        elif isinstance(kind, Chance):
            kind = Chance(kind.table.rebased(label))
        elif isinstance(kind, Value):
            axes = tuple(apply(theta, a) for a in kind.table.row_axes)
            vrows = tuple(
                (tuple(Outcome(axes[k], o.choices) for k, o in enumerate(key)), v)
                for key, v in kind.table.rows
            )
            kind = Value(ValueTable(axes, vrows))
        nodes.append(replace(n, label=label, kind=kind))
    return InfluenceDiagram(tuple(nodes))


def _totally_ordered(d: InfluenceDiagram, decisions: list[int]) -> bool:
    for i, a in enumerate(decisions):
        for b in decisions[i + 1 :]:
            if not (reachable(d, a, b) or reachable(d, b, a)):
                return False
    return True


def _initial_state(query: Query) -> GoalState:
    if isinstance(query, LogicQuery):
        # Reversed so the leftmost goal pops first, mirroring the prover.
        pending = tuple(Subgoal(g, guard_only=True) for g in reversed(query.goals))
        kind = "logic"
    elif isinstance(query, DistQuery):
        pending = (Subgoal(query.pattern),)
        kind = "dist"
    elif isinstance(query, DecideQuery):
        pending = (Subgoal(query.pattern),)
        kind = "decide"
    else:
        raise TypeError(f"unknown query {query!r}")
    return GoalState(pending, InfluenceDiagram(), EMPTY, query_kind=kind)


def step(
    state: GoalState, kb: KnowledgeBase, cfg: ProofConfig = ProofConfig()
) -> list[GoalState]:
    """Candidate successor states for the top pending subgoal, ordered by
    rule precedence then declaration order.  Empty means dead end."""
    return _Engine(kb, cfg, state.query_kind).expand(state)


def construct(
    query: Query, kb: KnowledgeBase, cfg: ProofConfig = ProofConfig()
) -> ConstructionResult:
    """First model for the query, or ConstructionFailure."""
    engine = _Engine(kb, cfg, _initial_state(query).query_kind)
    for result in engine.search(_initial_state(query), query):
        return result
    raise engine.failure()


def enumerate_models(
    query: Query,
    kb: KnowledgeBase,
    limit: int = 16,
    cfg: ProofConfig = ProofConfig(),
) -> list[ConstructionResult]:
    """Distinct models in backtracking order, up to ``limit``.

    Distinctness is structural diagram inequality, together with the
    answer substitution so that purely logical queries enumerate their
    distinct answers.
    """
    engine = _Engine(kb, cfg, _initial_state(query).query_kind)
    out: list[ConstructionResult] = []
    seen = set()
    for result in engine.search(_initial_state(query), query):
        key = (result.kind, result.answer.pairs, dg.structural_key(result.diagram))
        if key in seen:
            continue
        seen.add(key)
        out.append(result)
        if len(out) >= limit:
            break
    return out


class ReplayError(Exception):
    pass


def replay_trace(
    trace: Trace, query: Query, kb: KnowledgeBase, cfg: ProofConfig = ProofConfig()
) -> InfluenceDiagram:
    """Re-run a construction following the recorded choices instead of
    searching; returns the rebuilt diagram."""
    engine = _Engine(kb, cfg, _initial_state(query).query_kind)
    state = _initial_state(query)
    pos = 0
    while state.pending:
        cands = engine.expand(state)
        if not cands:
            raise ReplayError("trace leads to a dead end")
        if len(cands) == 1 and len(cands[0].trace) == len(state.trace):
            state = cands[0]  # scheduling move (delay), no recorded step
            continue
        if pos >= len(trace.steps):
            raise ReplayError("trace ended before the goal stack emptied")
        want = trace.steps[pos]
        chosen = None
        for c in cands:
            got = c.trace[-1]
            if (
                got.rule == want.rule
                and got.subgoal == want.subgoal
                and got.theta == want.theta
                and got.influence_index == want.influence_index
                and got.node_id == want.node_id
            ):
                chosen = c
                break
        if chosen is None:
            raise ReplayError(f"no candidate matches step {pos}: {want.render()}")
        state = chosen
        pos += 1
    if pos != len(trace.steps):
        raise ReplayError("unused trailing trace steps")
    return _refresh(state.diagram, state.theta)
