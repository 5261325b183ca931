"""Shared builders for hand-made and randomized diagrams and knowledge bases."""
from __future__ import annotations

import random

from kbmc.diagram import Chance, Decision, InfluenceDiagram, Node, Value
from kbmc.knowledge import (
    DomainDecl,
    KnowledgeBase,
    LogicClause,
    Prior,
    ProbInfluence,
)
from kbmc.tables import ConditionalTable, Distribution, ValueTable
from kbmc.terms import (
    AltSet,
    Constant,
    Proposition,
    Variable,
    alternative_outcomes,
    proposition_outcomes,
)


def term(x):
    if isinstance(x, str):
        return Variable(x[1:]) if x.startswith("?") else Constant(x)
    if isinstance(x, (tuple, list)):
        return AltSet(tuple(x))
    return x


def prop(rel, *args) -> Proposition:
    return Proposition(rel, tuple(term(a) for a in args))


def dist_for(subject: Proposition, probs) -> Distribution:
    return Distribution(proposition_outcomes(subject), tuple(probs))


def prior_node(nid: int, subject: Proposition, probs) -> Node:
    return Node(nid, subject, Chance(dist_for(subject, probs)), ())


def cpt_node(nid: int, subject: Proposition, parents: dict[int, Proposition], rows) -> Node:
    """rows: mapping from a tuple of member names (one per restricted
    position across the axes, in axis order) to the subject's probabilities."""
    axes = tuple(parents.values())
    table_rows = []
    for joint in alternative_outcomes(axes):
        key = tuple(m for o in joint for _, m in o.choices)
        table_rows.append((joint, dist_for(subject, rows[key])))
    return Node(
        nid,
        subject,
        Chance(ConditionalTable(axes, tuple(table_rows))),
        tuple(parents.keys()),
    )


def value_node(nid: int, subject: Proposition, parents: dict[int, Proposition], rows) -> Node:
    axes = tuple(parents.values())
    table_rows = []
    for joint in alternative_outcomes(axes):
        key = tuple(m for o in joint for _, m in o.choices)
        table_rows.append((joint, float(rows[key])))
    return Node(nid, subject, Value(ValueTable(axes, tuple(table_rows))), tuple(parents.keys()))


def decision_node(nid: int, subject: Proposition, parents=()) -> Node:
    (alts,) = [a for a in subject.args if isinstance(a, AltSet)]
    return Node(nid, subject, Decision(alts.members), tuple(parents))


# -- randomized diagrams -------------------------------------------------------


def _random_probs(rng: random.Random, n: int) -> tuple[float, ...]:
    raw = [rng.uniform(0.05, 1.0) for _ in range(n)]
    total = sum(raw)
    return tuple(x / total for x in raw)


def random_chance_diagram(rng: random.Random, max_nodes: int = 6) -> InfluenceDiagram:
    """A random chance-only DAG with 2-3 outcomes per node and at most two
    parents each, strictly positive probabilities."""
    n = rng.randint(1, max_nodes)
    nodes = []
    labels = {}
    for k in range(n):
        size = rng.choice([2, 3])
        label = prop(f"v{k}", tuple(f"s{i}" for i in range(size)), "t")
        labels[k] = label
        pool = list(range(k))
        parents = sorted(rng.sample(pool, min(len(pool), rng.randint(0, 2))))
        count = len(proposition_outcomes(label))
        if not parents:
            nodes.append(prior_node(k, label, _random_probs(rng, count)))
        else:
            axes = {p: labels[p] for p in parents}
            rows = {}
            for joint in alternative_outcomes(tuple(axes.values())):
                key = tuple(m for o in joint for _, m in o.choices)
                rows[key] = _random_probs(rng, count)
            nodes.append(cpt_node(k, label, axes, rows))
    return InfluenceDiagram(tuple(nodes))


def random_decision_diagram(
    rng: random.Random, max_chance: int = 4, with_decision: bool = True
) -> InfluenceDiagram:
    """A random single-decision diagram: a chance DAG, an optional decision
    observing at most one chance node, and a value node over the decision
    plus one or two chance nodes."""
    base = random_chance_diagram(rng, max_chance)
    nodes = list(base.nodes)
    chance_ids = [n.id for n in nodes]
    next_id = len(nodes)

    dec_id = None
    if with_decision:
        alts = tuple(f"d{i}" for i in range(rng.randint(2, 4)))
        label = prop("act", alts, "t")
        observed = rng.sample(chance_ids, min(len(chance_ids), rng.randint(0, 1)))
        nodes.append(decision_node(next_id, label, tuple(observed)))
        dec_id = next_id
        next_id += 1

    v_chance = rng.sample(chance_ids, min(len(chance_ids), rng.randint(1, 2)))
    v_parents = ([dec_id] if dec_id is not None else []) + sorted(v_chance)
    axes = {p: nodes[p].label for p in v_parents}
    rows = {}
    for joint in alternative_outcomes(tuple(axes.values())):
        key = tuple(m for o in joint for _, m in o.choices)
        rows[key] = rng.uniform(-50.0, 100.0)
    nodes.append(value_node(next_id, prop("util", "?u"), axes, rows))
    return InfluenceDiagram(tuple(nodes))


def joint_as_mapping(table) -> dict:
    """Canonical assignment -> probability mapping for joint comparison."""
    out = {}
    for assignment, p in table.rows:
        key = tuple(sorted((nid, o.choices) for nid, o in assignment.items()))
        out[key] = out.get(key, 0.0) + p
    return out


def joints_close(t1, t2, tol: float) -> bool:
    m1, m2 = joint_as_mapping(t1), joint_as_mapping(t2)
    if set(m1) != set(m2):
        return False
    return all(abs(m1[k] - m2[k]) <= tol for k in m1)


# -- randomized knowledge bases ------------------------------------------------


def random_kb(rng: random.Random, declarations: int = 20) -> KnowledgeBase:
    """A structurally valid random knowledge base for round-trip testing."""
    n_rel = rng.randint(2, 5)
    domains = []
    for i in range(n_rel):
        arity = rng.randint(1, 3)
        restricted = []
        for pos in range(arity):
            if rng.random() < 0.5:
                size = rng.randint(2, 4)
                restricted.append((pos, AltSet(tuple(f"m{i}{pos}{j}" for j in range(size)))))
        domains.append(DomainDecl(f"r{i}", arity, tuple(restricted)))

    consts = [f"c{i}" for i in range(4)]

    def ground_prop(decl: DomainDecl) -> Proposition:
        args = []
        for pos in range(decl.arity):
            alts = decl.altset_at(pos)
            args.append(Constant(rng.choice(alts.members) if alts else rng.choice(consts)))
        return Proposition(decl.relation, tuple(args))

    def restricted_prop(decl: DomainDecl) -> Proposition:
        args = []
        for pos in range(decl.arity):
            alts = decl.altset_at(pos)
            args.append(alts if alts else Constant(rng.choice(consts)))
        return Proposition(decl.relation, tuple(args))

    facts = []
    influences = []
    restricted_decls = [d for d in domains if d.restricted]
    for _ in range(declarations):
        kind = rng.choice(["fact", "clause", "prior", "prob"])
        if kind == "fact" or not restricted_decls:
            facts.append(ground_prop(rng.choice(domains)))
        elif kind == "clause":
            head = ground_prop(rng.choice(domains))
            body = tuple(ground_prop(rng.choice(domains)) for _ in range(rng.randint(1, 2)))
            influences.append(LogicClause(head, body))
        elif kind == "prior":
            subject = restricted_prop(rng.choice(restricted_decls))
            outs = proposition_outcomes(subject)
            influences.append(Prior(subject, Distribution(outs, _random_probs(rng, len(outs)))))
        else:
            subject = restricted_prop(rng.choice(restricted_decls))
            cond = restricted_prop(rng.choice(restricted_decls))
            guard = ground_prop(rng.choice(domains))
            conditions = (cond, guard) if rng.random() < 0.5 else (cond,)
            outs = proposition_outcomes(subject)
            rows = []
            for joint in alternative_outcomes((cond,)):
                rows.append((joint, Distribution(outs, _random_probs(rng, len(outs)))))
            cpt = ConditionalTable((cond,), tuple(rows))
            influences.append(ProbInfluence(subject, conditions, cpt))
    return KnowledgeBase(tuple(domains), tuple(facts), tuple(influences))
