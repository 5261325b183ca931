"""Logical, probabilistic and decision-theoretic queries over a declarative
first-order knowledge base.

A query is answered by Horn-clause proof when possible; otherwise an
influence diagram scoped to the query is constructed from the declared
influences and solved exactly by arc reversal and node removal.
"""
from .construct import (
    ConstructionFailure,
    ConstructionResult,
    construct,
    enumerate_models,
    replay_trace,
)
from .diagram import InfluenceDiagram
from .evaluate import Policy, SolveReport, solve_decision, solve_distribution
from .knowledge import (
    DecideQuery,
    DistQuery,
    KnowledgeBase,
    LogicQuery,
)
from .logic import ProofConfig, derivable_facts, prove
from .oracle import enumerate_joint, oracle_distribution, oracle_policy
from .parser import ParseFailure, parse_kb, parse_query, serialize_kb, validate_query

__all__ = [
    "ConstructionFailure",
    "ConstructionResult",
    "DecideQuery",
    "DistQuery",
    "InfluenceDiagram",
    "KnowledgeBase",
    "LogicQuery",
    "ParseFailure",
    "Policy",
    "ProofConfig",
    "SolveReport",
    "construct",
    "derivable_facts",
    "enumerate_joint",
    "enumerate_models",
    "oracle_distribution",
    "oracle_policy",
    "parse_kb",
    "parse_query",
    "prove",
    "replay_trace",
    "serialize_kb",
    "solve_decision",
    "solve_distribution",
    "validate_query",
]
