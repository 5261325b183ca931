"""Discrete probability distributions and the tables carried by influences."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .terms import (
    JointOutcome,
    Outcome,
    Proposition,
    alternative_outcomes,
    proposition_outcomes,
    rebase_outcome,
)

ROW_SUM_TOLERANCE = 1e-6


class TableError(ValueError):
    pass


def _choices_key(joint: JointOutcome) -> tuple:
    # Row lookup ignores the outcome's base proposition so that keys built
    # from a node label and keys built from the stored axis compare equal.
    return tuple(o.choices for o in joint)


@dataclass(frozen=True)
class Distribution:
    """Probabilities over the alternative outcomes of one proposition,
    in value-set declaration order (rightmost position fastest)."""

    outcomes: tuple[Outcome, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.outcomes) != len(self.probs):
            raise TableError("outcome/probability length mismatch")
        object.__setattr__(
            self, "_index", {o.choices: i for i, o in enumerate(self.outcomes)}
        )

    def prob_of(self, outcome: Outcome) -> float:
        return self.probs[self._index[outcome.choices]]  # type: ignore[attr-defined]

    def validate(self, subject: Proposition | None = None, tol: float = ROW_SUM_TOLERANCE) -> None:
        if subject is not None and self.outcomes != proposition_outcomes(subject):
            raise TableError(f"distribution outcomes do not match {subject}")
        for p in self.probs:
            if not (0.0 <= p <= 1.0):
                raise TableError(f"probability {p!r} outside [0, 1]")
        total = sum(self.probs)
        if abs(total - 1.0) > tol:
            raise TableError(f"probabilities sum to {total!r}, not 1")

    def rebased(self, new_base: Proposition) -> "Distribution":
        return Distribution(
            tuple(rebase_outcome(o, new_base) for o in self.outcomes), self.probs
        )


@dataclass(frozen=True)
class ConditionalTable:
    """One distribution over the subject's outcomes per joint outcome of the
    restricted condition propositions (the row axes)."""

    row_axes: tuple[Proposition, ...]
    rows: tuple[tuple[JointOutcome, Distribution], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "_lookup", {_choices_key(k): d for k, d in self.rows}
        )

    @staticmethod
    def from_mapping(
        axes: tuple[Proposition, ...], mapping: Mapping[JointOutcome, Distribution]
    ) -> "ConditionalTable":
        by_key = {_choices_key(k): (k, d) for k, d in mapping.items()}
        ordered = []
        for joint in alternative_outcomes(axes):
            key = _choices_key(joint)
            if key not in by_key:
                raise TableError(f"missing row for {'&'.join(o.label() for o in joint)}")
            ordered.append((joint, by_key[key][1]))
        if len(mapping) != len(ordered):
            raise TableError("duplicate or extraneous table rows")
        return ConditionalTable(axes, tuple(ordered))

    def row_for(self, joint: JointOutcome) -> Distribution:
        return self._lookup[_choices_key(joint)]  # type: ignore[attr-defined]

    def validate(self, subject: Proposition, tol: float = ROW_SUM_TOLERANCE) -> None:
        expected = alternative_outcomes(self.row_axes)
        if tuple(k for k, _ in self.rows) != expected:
            raise TableError("rows do not cover the condition outcomes exactly once")
        for _, dist in self.rows:
            dist.validate(subject, tol)


@dataclass(frozen=True)
class ValueTable:
    """A real number per joint outcome of the restricted condition propositions."""

    row_axes: tuple[Proposition, ...]
    rows: tuple[tuple[JointOutcome, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "_lookup", {_choices_key(k): v for k, v in self.rows}
        )

    @staticmethod
    def from_mapping(
        axes: tuple[Proposition, ...], mapping: Mapping[JointOutcome, float]
    ) -> "ValueTable":
        by_key = {_choices_key(k): v for k, v in mapping.items()}
        ordered = []
        for joint in alternative_outcomes(axes):
            key = _choices_key(joint)
            if key not in by_key:
                raise TableError(f"missing value for {'&'.join(o.label() for o in joint)}")
            ordered.append((joint, by_key[key]))
        if len(mapping) != len(ordered):
            raise TableError("duplicate or extraneous value rows")
        return ValueTable(axes, tuple(ordered))

    def value_for(self, joint: JointOutcome) -> float:
        return self._lookup[_choices_key(joint)]  # type: ignore[attr-defined]

    def validate(self) -> None:
        expected = alternative_outcomes(self.row_axes)
        if tuple(k for k, _ in self.rows) != expected:
            raise TableError("value rows do not cover the condition outcomes exactly once")
