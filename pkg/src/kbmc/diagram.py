"""The influence diagram: typed nodes, arcs, validity checks, graph queries.

Diagrams are values: every mutation returns a new diagram, so concurrent
reads and backtracking over construction states are safe.  Parent order is
significant — it is the table-axis order, the bit-level contract between
construction and evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

from .tables import ConditionalTable, Distribution, ValueTable
from .terms import (
    AltSet,
    Proposition,
    Substitution,
    instance_match,
    proposition_outcomes,
)


class DiagramError(Exception):
    pass


class CycleError(DiagramError):
    pass


@dataclass(frozen=True)
class Chance:
    table: Union[Distribution, ConditionalTable]


@dataclass(frozen=True)
class Decision:
    alternatives: tuple[str, ...]


@dataclass(frozen=True)
class Value:
    table: ValueTable


NodeKind = Union[Chance, Decision, Value]


@dataclass(frozen=True)
class Node:
    id: int
    label: Proposition
    kind: NodeKind
    # For chance/value nodes the k-th slot is the k-th table axis; None
    # marks an axis whose arc has not arrived yet (mid-construction only).
    parents: tuple[int | None, ...] = ()

    def resolved_parents(self) -> tuple[int, ...]:
        return tuple(p for p in self.parents if p is not None)


@dataclass(frozen=True)
class InfluenceDiagram:
    nodes: tuple[Node, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})
        if len(self._by_id) != len(self.nodes):  # type: ignore[attr-defined]
            raise DiagramError("duplicate node id")

    def node(self, nid: int) -> Node:
        return self._by_id[nid]  # type: ignore[attr-defined]

    def has(self, nid: int) -> bool:
        return nid in self._by_id  # type: ignore[attr-defined]

    @property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes)

    @property
    def value_node(self) -> int | None:
        for n in self.nodes:
            if isinstance(n.kind, Value):
                return n.id
        return None

    @property
    def next_id(self) -> int:
        return max((n.id for n in self.nodes), default=-1) + 1


def add_node(d: InfluenceDiagram, n: Node) -> InfluenceDiagram:
    if d.has(n.id):
        raise DiagramError(f"node id {n.id} already present")
    if isinstance(n.kind, Value) and d.value_node is not None:
        raise DiagramError("a diagram holds at most one value node")
    return InfluenceDiagram(d.nodes + (n,))


def _swap(d: InfluenceDiagram, n: Node) -> InfluenceDiagram:
    return InfluenceDiagram(tuple(n if old.id == n.id else old for old in d.nodes))


def remove_node(d: InfluenceDiagram, nid: int) -> InfluenceDiagram:
    return InfluenceDiagram(tuple(n for n in d.nodes if n.id != nid))


def predecessors(d: InfluenceDiagram, nid: int) -> tuple[int, ...]:
    return d.node(nid).resolved_parents()


def successors(d: InfluenceDiagram, nid: int) -> tuple[int, ...]:
    return tuple(n.id for n in d.nodes if nid in n.parents)


def reachable(d: InfluenceDiagram, src: int, dst: int) -> bool:
    """True when a directed path src -> ... -> dst exists."""
    stack, seen = [src], set()
    while stack:
        cur = stack.pop()
        if cur == dst:
            return True
        if cur in seen:
            continue
        seen.add(cur)
        stack.extend(successors(d, cur))
    return False


def add_arc(
    d: InfluenceDiagram, frm: int, to: int, slot: int | None = None
) -> InfluenceDiagram:
    """Add an arc into ``to``; with ``slot`` it fills that pending table
    axis, otherwise it appends (informational arcs, free-form graphs).

    Raises CycleError when the arc would close a directed cycle; the
    diagram is left untouched in that case.
    """
    if not d.has(frm) or not d.has(to):
        raise DiagramError("arc endpoint missing")
    if frm == to or reachable(d, to, frm):
        raise CycleError(f"arc n{frm} -> n{to} closes a cycle")
    child = d.node(to)
    if slot is None:
        parents = child.parents + (frm,)
    else:
        if not (0 <= slot < len(child.parents)) or child.parents[slot] is not None:
            raise DiagramError(f"slot {slot} of n{to} is not pending")
        parents = child.parents[:slot] + (frm,) + child.parents[slot + 1 :]
    return _swap(d, replace(child, parents=parents))


def find_unifying_node(
    d: InfluenceDiagram, p: Proposition
) -> tuple[int, Substitution] | None:
    """Earliest-created node whose label ``p`` is an instance of.

    Reuse never instantiates an existing node's label further: the match
    may bind only ``p``'s own variables.
    """
    for n in d.nodes:
        theta = instance_match(p, n.label)
        if theta is not None:
            return n.id, theta
    return None


def topological_order(d: InfluenceDiagram) -> tuple[int, ...]:
    """Parents before children; ties broken by creation (id) order."""
    remaining = {n.id: set(n.resolved_parents()) for n in d.nodes}
    order: list[int] = []
    while remaining:
        ready = sorted(nid for nid, deps in remaining.items() if not deps)
        if not ready:
            raise CycleError("diagram contains a directed cycle")
        nid = ready[0]
        order.append(nid)
        del remaining[nid]
        for deps in remaining.values():
            deps.discard(nid)
    return tuple(order)


def node_outcomes(n: Node):
    return proposition_outcomes(n.label)


def resolve_axis_by_fact(
    d: InfluenceDiagram, nid: int, slot: int, choices: tuple[tuple[int, str], ...]
) -> InfluenceDiagram:
    """Condition a node's table on a logically proved outcome of one axis.

    The axis and its pending parent slot disappear; the table keeps only
    the rows agreeing with the proved outcome.  Certainty never becomes a
    diagram node.
    """
    n = d.node(nid)
    if n.parents[slot] is not None:
        raise DiagramError(f"axis {slot} of n{nid} already has a parent")
    parents = n.parents[:slot] + n.parents[slot + 1 :]
    if isinstance(n.kind, Chance):
        table = n.kind.table
        if not isinstance(table, ConditionalTable):
            raise DiagramError("cannot condition an unconditional node")
        axes = table.row_axes[:slot] + table.row_axes[slot + 1 :]
        rows = tuple(
            (key[:slot] + key[slot + 1 :], dist)
            for key, dist in table.rows
            if key[slot].choices == choices
        )
        new_table = (
            ConditionalTable(axes, rows) if axes else rows[0][1]
        )
        return _swap(d, replace(n, kind=Chance(new_table), parents=parents))
    if isinstance(n.kind, Value):
        table = n.kind.table
        axes = table.row_axes[:slot] + table.row_axes[slot + 1 :]
        rows = tuple(
            (key[:slot] + key[slot + 1 :], v)
            for key, v in table.rows
            if key[slot].choices == choices
        )
        return _swap(d, replace(n, kind=Value(ValueTable(axes, rows)), parents=parents))
    raise DiagramError("decision nodes have no table axes")


def validate(d: InfluenceDiagram, complete: bool = True) -> None:
    """Check every structural invariant; raises DiagramError on violation."""
    topological_order(d)  # raises on cycles
    value_seen = False
    for n in d.nodes:
        for p in n.parents:
            if p is None:
                if complete:
                    raise DiagramError(f"n{n.id} has an unresolved parent slot")
                continue
            if not d.has(p):
                raise DiagramError(f"n{n.id} references missing parent n{p}")
        if isinstance(n.kind, Chance):
            table = n.kind.table
            if isinstance(table, Distribution):
                if n.parents:
                    raise DiagramError(f"unconditional n{n.id} must have no parents")
                table.validate(n.label)
            else:
                if len(table.row_axes) != len(n.parents):
                    raise DiagramError(f"n{n.id}: axis/parent count mismatch")
                for slot, (axis, parent) in enumerate(zip(table.row_axes, n.parents)):
                    if parent is not None and d.node(parent).label != axis:
                        raise DiagramError(
                            f"n{n.id}: axis {slot} does not match its parent's label"
                        )
                table.validate(n.label)
        elif isinstance(n.kind, Decision):
            alts = [a for a in n.label.args if isinstance(a, AltSet)]
            if len(alts) != 1 or alts[0].members != n.kind.alternatives:
                raise DiagramError(f"decision n{n.id} alternatives do not match its label")
        elif isinstance(n.kind, Value):
            if value_seen:
                raise DiagramError("a diagram holds at most one value node")
            value_seen = True
            if successors(d, n.id):
                raise DiagramError("the value node must have no successors")
            table = n.kind.table
            if len(table.row_axes) != len(n.parents):
                raise DiagramError(f"n{n.id}: axis/parent count mismatch")
            for slot, (axis, parent) in enumerate(zip(table.row_axes, n.parents)):
                if parent is not None and d.node(parent).label != axis:
                    raise DiagramError(
                        f"n{n.id}: axis {slot} does not match its parent's label"
                    )
            table.validate()


def structural_key(d: InfluenceDiagram):
    """Canonical structure: labels, kinds, tables and parent labels, blind to
    node numbering.  Ambiguous only if two nodes share a label, which
    construction never produces."""
    def kind_key(n: Node):
        if isinstance(n.kind, Chance):
            t = n.kind.table
            if isinstance(t, Distribution):
                return ("chance", t.probs)
            return ("chance", tuple((tuple(o.choices for o in k), dd.probs) for k, dd in t.rows))
        if isinstance(n.kind, Decision):
            return ("decision", n.kind.alternatives)
        return ("value", tuple((tuple(o.choices for o in k), v) for k, v in n.kind.table.rows))

    entries = []
    for n in d.nodes:
        parent_labels = tuple(
            str(d.node(p).label) if p is not None else "?" for p in n.parents
        )
        entries.append((str(n.label), kind_key(n), parent_labels))
    return tuple(sorted(entries, key=lambda e: (e[0], str(e[1]))))


def structurally_equal(d1: InfluenceDiagram, d2: InfluenceDiagram) -> bool:
    return structural_key(d1) == structural_key(d2)


def to_dot(d: InfluenceDiagram) -> str:
    """Deterministic DOT text: ellipses for chance, boxes for decisions, a
    diamond for the value node."""
    shapes = {Chance: "ellipse", Decision: "box", Value: "diamond"}
    lines = ["digraph kb {", "  rankdir=LR;"]
    for n in d.nodes:
        shape = shapes[type(n.kind)]
        lines.append(f'  n{n.id} [shape={shape}, label="{n.label}"];')
    for n in d.nodes:
        for p in n.parents:
            if p is not None:
                lines.append(f"  n{p} -> n{n.id};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump(d: InfluenceDiagram) -> str:
    """Diagnostic plain-text listing with 6-decimal probabilities."""
    out = []
    for n in d.nodes:
        kind = type(n.kind).__name__.lower()
        out.append(f"n{n.id} {kind} {n.label}")
        parents = " ".join("?" if p is None else f"n{p}" for p in n.parents) or "-"
        out.append(f"  parents: {parents}")
        if isinstance(n.kind, Chance):
            t = n.kind.table
            if isinstance(t, Distribution):
                row = " / ".join(
                    f"{o.label()} {p:.6f}" for o, p in zip(t.outcomes, t.probs)
                )
                out.append(f"  table: {row}")
            else:
                for key, dist in t.rows:
                    cond = "&".join(o.label() for o in key) or "-"
                    row = " / ".join(
                        f"{o.label()} {p:.6f}" for o, p in zip(dist.outcomes, dist.probs)
                    )
                    out.append(f"  {cond}: {row}")
        elif isinstance(n.kind, Decision):
            out.append("  alternatives: " + ", ".join(n.kind.alternatives))
        elif isinstance(n.kind, Value):
            for key, v in n.kind.table.rows:
                cond = "&".join(o.label() for o in key) or "-"
                out.append(f"  {cond}: {v:.6f}")
    return "\n".join(out) + ("\n" if out else "")
