"""Exact diagram solution by value-preserving transformations.

Bayes-rule arc reversal, barren-node removal, conditional expectation into
the value node, and expected-utility maximization out of decision nodes,
sequenced so the diagram shrinks to the query node (distributions) or the
bare value node (decisions).  Every transformation preserves the joint
distribution over the remaining nodes, so any legal order yields the same
answer; the order here only bounds intermediate table growth and keeps the
operation log deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

from .diagram import (
    Chance,
    Decision,
    DiagramError,
    InfluenceDiagram,
    Node,
    Value,
    node_outcomes,
    reachable,
    remove_node,
    successors,
    topological_order,
    _swap,
)
from .tables import ConditionalTable, Distribution, ValueTable
from .terms import JointOutcome, Outcome, alternative_outcomes

DIST_SUM_TOLERANCE = 1e-9


class TransformError(DiagramError):
    """A transformation's precondition does not hold."""


@dataclass
class Policy:
    """Per decision node: a chosen alternative for every joint outcome of
    its informational parents."""

    rules: dict[int, dict[JointOutcome, str]] = field(default_factory=dict)

    def choice(self, decision: int, context: JointOutcome) -> str:
        table = self.rules[decision]
        key = tuple(o.choices for o in context)
        for ctx, alt in table.items():
            if tuple(o.choices for o in ctx) == key:
                return alt
        raise KeyError(f"no rule for decision n{decision} in context {key}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Policy):
            return NotImplemented
        def canon(p):
            return {
                d: {tuple(o.choices for o in ctx): alt for ctx, alt in t.items()}
                for d, t in p.rules.items()
            }
        return canon(self) == canon(other)


@dataclass(frozen=True)
class Operation:
    kind: str  # barren | reverse | expect | decide | uniform-fill
    node: int | None = None
    other: int | None = None
    detail: str = ""

    def render(self) -> str:
        if self.kind == "barren":
            return f"remove barren {self.detail}"
        if self.kind == "reverse":
            return f"reverse {self.detail}"
        if self.kind == "expect":
            return f"expect {self.detail} into value"
        if self.kind == "decide":
            return f"decide {self.detail}"
        return f"note: {self.detail}"


@dataclass(frozen=True)
class SolveReport:
    operations: tuple[Operation, ...] = ()

    def render(self) -> str:
        return "\n".join(op.render() for op in self.operations)


def _chance(d: InfluenceDiagram, nid: int) -> Node:
    n = d.node(nid)
    if not isinstance(n.kind, Chance):
        raise TransformError(f"n{nid} is not a chance node")
    return n


def _prob(d: InfluenceDiagram, n: Node, ctx: Mapping[int, Outcome], out: Outcome) -> float:
    table = n.kind.table
    if isinstance(table, Distribution):
        return table.prob_of(out)
    key = tuple(ctx[p] for p in n.parents)
    return table.row_for(key).prob_of(out)


def _chance_kind(axes, rows) -> Chance:
    if not axes:
        ((_, dist),) = rows
        return Chance(dist)
    return Chance(ConditionalTable(tuple(axes), tuple(rows)))


def reverse_arc(
    d: InfluenceDiagram, i: int, j: int, log: list[Operation] | None = None
) -> InfluenceDiagram:
    """Reverse the arc between chance nodes i -> j by Bayes rule.

    Both nodes take the union of the prior parent sets (j additionally
    gains i's place, i gains j).  The joint distribution over all chance
    nodes is unchanged.  Requires that no other directed path leads from i
    to j.  Conditioning contexts that get probability zero leave the
    reversed row undefined; those rows are set uniform and flagged.
    """
    ni, nj = _chance(d, i), _chance(d, j)
    if list(nj.parents).count(i) != 1:
        raise TransformError(f"no single arc n{i} -> n{j}")
    without = replace(nj, parents=tuple(p for p in nj.parents if p != i))
    if reachable(_swap(d, without), i, j):
        raise TransformError(f"another directed path n{i} -> n{j} exists")

    union: list[int] = [p for p in nj.parents if p != i]
    for p in ni.parents:
        if p not in union:
            union.append(p)
    axes_u = [d.node(u).label for u in union]
    out_i, out_j = node_outcomes(ni), node_outcomes(nj)

    rows_j = []
    rows_i = []
    for ju in alternative_outcomes(axes_u):
        ctx = {u: o for u, o in zip(union, ju)}
        weights = [
            [
                _prob(d, nj, {**ctx, i: x}, y) * _prob(d, ni, ctx, x)
                for x in out_i
            ]
            for y in out_j
        ]
        marg = [sum(w) for w in weights]
        rows_j.append((ju, Distribution(out_j, tuple(marg))))
        for yi, y in enumerate(out_j):
            if marg[yi] == 0.0:
                row = tuple(1.0 / len(out_i) for _ in out_i)
                if log is not None:
                    log.append(Operation(
                        "uniform-fill", i, j,
                        f"unreachable context {y.label()} while reversing "
                        f"{ni.label} -> {nj.label}",
                    ))
            else:
                row = tuple(w / marg[yi] for w in weights[yi])
            rows_i.append((ju + (y,), Distribution(out_i, row)))

    d2 = _swap(d, replace(nj, kind=_chance_kind(axes_u, rows_j), parents=tuple(union)))
    d2 = _swap(d2, replace(
        ni,
        kind=_chance_kind(axes_u + [nj.label], rows_i),
        parents=tuple(union) + (j,),
    ))
    return d2


def remove_barren(
    d: InfluenceDiagram, nid: int, protect: int | None = None
) -> InfluenceDiagram:
    """Delete a chance or decision node with no successors; the marginal
    over the remaining nodes is untouched."""
    n = d.node(nid)
    if isinstance(n.kind, Value):
        raise TransformError("the value node is never barren")
    if nid == protect:
        raise TransformError(f"n{nid} is the protected query node")
    if successors(d, nid):
        raise TransformError(f"n{nid} still has successors")
    return remove_node(d, nid)


def remove_chance_into_value(d: InfluenceDiagram, nid: int) -> InfluenceDiagram:
    """Replace the value table by its conditional expectation over ``nid``,
    which must feed only the value node; the value node inherits its
    parents."""
    vid = d.value_node
    if vid is None:
        raise TransformError("no value node")
    n = _chance(d, nid)
    if successors(d, nid) != (vid,):
        raise TransformError(f"n{nid} must feed only the value node")
    vnode = d.node(vid)
    vt = vnode.kind.table

    new_parents: list[int] = [p for p in vnode.parents if p != nid]
    for p in n.parents:
        if p not in new_parents:
            new_parents.append(p)
    axes = [d.node(p).label for p in new_parents]
    rows = []
    for ju in alternative_outcomes(axes):
        ctx = {p: o for p, o in zip(new_parents, ju)}
        total = 0.0
        for x in node_outcomes(n):
            key = tuple(x if p == nid else ctx[p] for p in vnode.parents)
            total += _prob(d, n, ctx, x) * vt.value_for(key)
        rows.append((ju, total))
    d2 = _swap(d, replace(
        vnode,
        kind=Value(ValueTable(tuple(axes), tuple(rows))),
        parents=tuple(new_parents),
    ))
    return remove_node(d2, nid)


def remove_decision(
    d: InfluenceDiagram, nid: int
) -> tuple[InfluenceDiagram, dict[JointOutcome, str]]:
    """Maximize the value table over a decision whose only successor is the
    value node and whose information covers every other value parent.

    Returns the shrunk diagram and the decision's policy fragment: the
    best alternative per joint outcome of its informational parents, ties
    broken by declaration order.
    """
    vid = d.value_node
    if vid is None:
        raise TransformError("no value node")
    n = d.node(nid)
    if not isinstance(n.kind, Decision):
        raise TransformError(f"n{nid} is not a decision node")
    if successors(d, nid) != (vid,):
        raise TransformError(f"n{nid} must feed only the value node")
    vnode = d.node(vid)
    others = [p for p in vnode.parents if p != nid]
    if not set(others) <= set(n.parents):
        raise TransformError(
            f"value parents {others} are not all informational parents of n{nid}"
        )
    vt = vnode.kind.table
    alt_outs = node_outcomes(n)

    def best_for(ctx: Mapping[int, Outcome]) -> tuple[Outcome, float]:
        best, best_v = None, 0.0
        for a in alt_outs:
            key = tuple(a if p == nid else ctx[p] for p in vnode.parents)
            v = vt.value_for(key)
            if best is None or v > best_v:
                best, best_v = a, v
        return best, best_v

    policy: dict[JointOutcome, str] = {}
    info_axes = [d.node(p).label for p in n.parents]
    for ju in alternative_outcomes(info_axes):
        ctx = {p: o for p, o in zip(n.parents, ju)}
        chosen, _ = best_for(ctx)
        policy[ju] = chosen.label()

    axes = [d.node(p).label for p in others]
    rows = []
    for ju in alternative_outcomes(axes):
        ctx = {p: o for p, o in zip(others, ju)}
        _, v = best_for(ctx)
        rows.append((ju, v))
    d2 = _swap(d, replace(
        vnode, kind=Value(ValueTable(tuple(axes), tuple(rows))), parents=tuple(others)
    ))
    return remove_node(d2, nid), policy


def _label(d: InfluenceDiagram, nid: int) -> str:
    return str(d.node(nid).label)


def solve_distribution(
    d: InfluenceDiagram, query_node: int
) -> tuple[Distribution, SolveReport]:
    """Reduce the diagram to the query node alone; its table is then the
    unconditional distribution over the query's outcomes."""
    if d.value_node is not None or any(isinstance(n.kind, Decision) for n in d.nodes):
        raise TransformError("distribution solving takes a chance-only diagram")
    if not d.has(query_node):
        raise TransformError(f"query node n{query_node} missing")
    ops: list[Operation] = []
    while True:
        barren = sorted(
            n.id for n in d.nodes if n.id != query_node and not successors(d, n.id)
        )
        if barren:
            ops.append(Operation("barren", barren[0], detail=_label(d, barren[0])))
            d = remove_barren(d, barren[0], protect=query_node)
            continue
        if len(d.nodes) == 1:
            break
        # Every remaining node is an ancestor of the query; reverse an arc
        # out of a node whose only successor is the query, preferring the
        # reversal with the smallest merged parent set.
        cands = [
            n.id for n in d.nodes
            if n.id != query_node and successors(d, n.id) == (query_node,)
        ]
        assert cands, "reduction stalled"

        def union_size(nid: int) -> int:
            merged = {p for p in d.node(query_node).parents if p != nid}
            merged.update(d.node(nid).parents)
            return len(merged)

        nid = min(cands, key=lambda c: (union_size(c), c))
        ops.append(Operation(
            "reverse", nid, query_node,
            detail=f"{_label(d, nid)} -> {_label(d, query_node)}",
        ))
        d = reverse_arc(d, nid, query_node, log=ops)
    (node,) = d.nodes
    dist = node.kind.table
    assert isinstance(dist, Distribution)
    total = sum(dist.probs)
    if abs(total - 1.0) > DIST_SUM_TOLERANCE:
        raise TransformError(f"result sums to {total!r}")
    return dist, SolveReport(tuple(ops))


def _decision_order(d: InfluenceDiagram) -> list[int]:
    decisions = [nid for nid in topological_order(d) if isinstance(d.node(nid).kind, Decision)]
    for i, a in enumerate(decisions):
        for b in decisions[i + 1 :]:
            if not reachable(d, a, b):
                raise TransformError("decision nodes are not totally ordered")
    return decisions


def solve_decision(d: InfluenceDiagram) -> tuple[Policy, float, SolveReport]:
    """Reduce to the bare value node: expectation removes chance nodes,
    maximization removes decisions in reverse information order; the final
    scalar is the maximal expected value and the collected choices form
    the optimal policy."""
    vid = d.value_node
    if vid is None:
        raise TransformError("no value node")
    order = _decision_order(d)
    policy = Policy()
    ops: list[Operation] = []
    while len(d.nodes) > 1:
        barren = sorted(
            n.id for n in d.nodes
            if n.id != vid and not successors(d, n.id)
        )
        if barren:
            nid = barren[0]
            node = d.node(nid)
            if isinstance(node.kind, Decision):
                # Irrelevant decision: any rule is optimal, document the
                # declared-first tie-break.
                contexts = alternative_outcomes([d.node(p).label for p in node.parents])
                policy.rules[nid] = {
                    ctx: node.kind.alternatives[0] for ctx in contexts
                }
            ops.append(Operation("barren", nid, detail=_label(d, nid)))
            d = remove_barren(d, nid)
            continue
        remaining = [nid for nid in order if d.has(nid)]
        if remaining:
            last = remaining[-1]
            node = d.node(last)
            vparents = d.node(vid).parents
            if successors(d, last) == (vid,) and set(p for p in vparents if p != last) <= set(node.parents):
                ops.append(Operation("decide", last, detail=_label(d, last)))
                d, fragment = remove_decision(d, last)
                policy.rules[last] = fragment
                continue
        expandable = [
            n.id for n in d.nodes
            if isinstance(n.kind, Chance) and successors(d, n.id) == (vid,)
        ]
        if expandable:
            nid = min(expandable, key=lambda c: (len(d.node(c).parents), c))
            ops.append(Operation("expect", nid, detail=_label(d, nid)))
            d = remove_chance_into_value(d, nid)
            continue
        # Reverse arcs out of a blocked chance node (one with chance
        # successors and no decision successors) until it can be removed.
        targets = []
        for n in d.nodes:
            if not isinstance(n.kind, Chance):
                continue
            succ = successors(d, n.id)
            kinds = [type(d.node(s).kind) for s in succ]
            if Decision in kinds or not any(k is Chance for k in kinds):
                continue
            blocked = sum(1 for s in succ if s != vid)
            targets.append((blocked, n.id))
        if not targets:
            raise TransformError("reduction stalled; no admissible transformation")
        _, tid = min(targets)
        topo = topological_order(d)
        succ_chance = [
            s for s in topo
            if s in successors(d, tid) and isinstance(d.node(s).kind, Chance)
        ]
        jid = succ_chance[0]
        ops.append(Operation(
            "reverse", tid, jid, detail=f"{_label(d, tid)} -> {_label(d, jid)}"
        ))
        d = reverse_arc(d, tid, jid, log=ops)
    (vnode,) = d.nodes
    vt = vnode.kind.table
    assert not vt.row_axes, "value node still conditioned"
    expected = vt.rows[0][1]
    return policy, expected, SolveReport(tuple(ops))


def apply_operation(d: InfluenceDiagram, op: Operation) -> InfluenceDiagram:
    """Replay one logged transformation (notes replay to no-ops)."""
    if op.kind == "barren":
        return remove_barren(d, op.node)
    if op.kind == "reverse":
        return reverse_arc(d, op.node, op.other)
    if op.kind == "expect":
        return remove_chance_into_value(d, op.node)
    if op.kind == "decide":
        return remove_decision(d, op.node)[0]
    return d
