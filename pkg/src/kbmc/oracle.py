"""Brute-force ground truth: joint enumeration and exhaustive policy search.

This module deliberately shares no solving machinery with the evaluator —
it multiplies table entries over full cross products and scores every
total policy directly, so it can arbitrate the transformation-based
solver.  Size caps keep it honest; exceeding them is an error, never
silent truncation.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import prod

from .diagram import Chance, Decision, InfluenceDiagram, node_outcomes, topological_order
from .evaluate import Policy
from .tables import Distribution
from .terms import Outcome, alternative_outcomes

MAX_ENUMERATION = 10**6


class OracleSizeError(Exception):
    pass


@dataclass(frozen=True)
class JointTable:
    """One row per assignment of outcomes to chance (and resolved decision)
    nodes, with the chain-rule probability of that assignment."""

    rows: tuple[tuple[dict, float], ...]

    def validate(self, tol: float = 1e-12) -> None:
        total = sum(p for _, p in self.rows)
        if abs(total - 1.0) > tol:
            raise ValueError(f"joint sums to {total!r}")


def _entry(d: InfluenceDiagram, node, assignment: dict) -> float:
    table = node.kind.table
    if isinstance(table, Distribution):
        return table.prob_of(assignment[node.id])
    key = tuple(assignment[p] for p in node.parents)
    return table.row_for(key).prob_of(assignment[node.id])


def enumerate_joint(
    d: InfluenceDiagram, fixed_decisions: Policy | None = None
) -> JointTable:
    """Every joint assignment with its probability: the product of the
    chance-table entries selected by the assignment.  Decisions must be
    resolved by ``fixed_decisions`` (their values follow deterministically
    from their informational parents)."""
    topo = topological_order(d)
    chance = [nid for nid in topo if isinstance(d.node(nid).kind, Chance)]
    decisions = [nid for nid in topo if isinstance(d.node(nid).kind, Decision)]
    if decisions and fixed_decisions is None:
        raise ValueError("decision nodes present but no policy given")
    size = prod(len(node_outcomes(d.node(nid))) for nid in chance)
    if size > MAX_ENUMERATION:
        raise OracleSizeError(f"joint has {size} assignments (cap {MAX_ENUMERATION})")

    rows = []
    pools = [node_outcomes(d.node(nid)) for nid in chance]
    for combo in product(*pools):
        assignment = dict(zip(chance, combo))
        for nid in topo:
            node = d.node(nid)
            if isinstance(node.kind, Decision):
                context = tuple(assignment[p] for p in node.parents)
                alt = fixed_decisions.choice(nid, context)
                (pos,) = node.label.restricted_positions
                assignment[nid] = Outcome(node.label, ((pos, alt),))
        p = 1.0
        for nid in chance:
            p *= _entry(d, d.node(nid), assignment)
        rows.append((assignment, p))
    return JointTable(tuple(rows))


def oracle_distribution(d: InfluenceDiagram, nid: int) -> Distribution:
    """Marginal of the enumerated joint over one node."""
    node = d.node(nid)
    outcomes = node_outcomes(node)
    sums = {o.choices: 0.0 for o in outcomes}
    for assignment, p in enumerate_joint(d).rows:
        sums[assignment[nid].choices] += p
    return Distribution(outcomes, tuple(sums[o.choices] for o in outcomes))


def _policy_space(d: InfluenceDiagram, decisions: list[int]):
    """Per decision, the list of contexts and the alternative symbols."""
    spaces = []
    for nid in decisions:
        node = d.node(nid)
        contexts = alternative_outcomes([d.node(p).label for p in node.parents])
        spaces.append((nid, contexts, node.kind.alternatives))
    return spaces


def expected_value(d: InfluenceDiagram, policy: Policy) -> float:
    vid = d.value_node
    vnode = d.node(vid)
    vt = vnode.kind.table
    total = 0.0
    for assignment, p in enumerate_joint(d, policy).rows:
        key = tuple(assignment[q] for q in vnode.parents)
        total += p * vt.value_for(key)
    return total


def oracle_policy(d: InfluenceDiagram) -> tuple[Policy, float]:
    """Exhaustively score every total policy and return the maximum.

    Enumeration order makes ties agree with per-context maximization:
    alternatives vary in declaration order and later contexts vary
    fastest, and only strictly better policies replace the incumbent.
    """
    if d.value_node is None:
        raise ValueError("no value node")
    decisions = [
        nid for nid in topological_order(d) if isinstance(d.node(nid).kind, Decision)
    ]
    spaces = _policy_space(d, decisions)
    size = prod(
        len(alts) ** len(contexts) for _, contexts, alts in spaces
    ) if spaces else 1
    if size > MAX_ENUMERATION:
        raise OracleSizeError(f"{size} total policies (cap {MAX_ENUMERATION})")

    best: Policy | None = None
    best_eu = 0.0
    rule_pools = [
        product(alts, repeat=len(contexts)) for _, contexts, alts in spaces
    ]
    for combo in product(*rule_pools):
        policy = Policy({
            nid: dict(zip(contexts, rule))
            for (nid, contexts, _), rule in zip(spaces, combo)
        })
        eu = expected_value(d, policy)
        if best is None or eu > best_eu:
            best, best_eu = policy, eu
    assert best is not None
    return best, best_eu
