"""Dataset containers: per-grader feedback, datasets, and estimates."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Any

from .errors import ValidationError
from .rankings import WeakRanking

__all__ = ["GraderFeedback", "Dataset", "Estimate", "induced_ordinal"]


def induced_ordinal(grades: Mapping[str, float]) -> WeakRanking:
    """Ordinal ranking induced by cardinal grades: descending, exact ties grouped."""
    if not grades:
        raise ValidationError("cannot induce an ordinal ranking from no grades")
    ordered = sorted(grades, key=lambda x: (-grades[x], x))
    groups: list[list[str]] = [[ordered[0]]]
    for item in ordered[1:]:
        if grades[item] == grades[groups[-1][0]]:
            groups[-1].append(item)
        else:
            groups.append([item])
    return WeakRanking(groups)


@dataclass(frozen=True)
class GraderFeedback:
    """One grader's feedback on the items they graded.

    At least one of ``ordinal`` (a weak ranking over exactly ``items``) and
    ``cardinal`` (item -> grade) must be present. Treat instances as
    immutable after construction.
    """

    grader: str
    items: tuple[str, ...]
    ordinal: WeakRanking | None = None
    cardinal: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.grader, str) or not self.grader:
            raise ValidationError(f"grader id must be a non-empty string, got {self.grader!r}")
        items = tuple(sorted(self.items))
        if not items:
            raise ValidationError(f"grader {self.grader!r} has no items")
        if len(set(items)) != len(items):
            raise ValidationError(f"grader {self.grader!r} lists duplicate items")
        object.__setattr__(self, "items", items)
        if self.ordinal is None and self.cardinal is None:
            raise ValidationError(f"grader {self.grader!r} has neither ordinal nor cardinal feedback")
        if self.ordinal is not None and self.ordinal.items != frozenset(items):
            raise ValidationError(f"ordinal feedback of grader {self.grader!r} does not cover its items")
        if self.cardinal is not None:
            if set(self.cardinal) != set(items):
                raise ValidationError(f"cardinal feedback of grader {self.grader!r} does not cover its items")
            for item, grade in self.cardinal.items():
                if not math.isfinite(grade):
                    raise ValidationError(
                        f"grade of grader {self.grader!r} for item {item!r} is not finite: {grade}"
                    )
            object.__setattr__(self, "cardinal", dict(self.cardinal))

    @classmethod
    def from_ordinal(cls, grader: str, ranking: WeakRanking) -> "GraderFeedback":
        return cls(grader=grader, items=tuple(sorted(ranking.items)), ordinal=ranking)

    @classmethod
    def from_cardinal(cls, grader: str, grades: Mapping[str, float]) -> "GraderFeedback":
        """Cardinal feedback with the induced ordinal ranking attached."""
        return cls(
            grader=grader,
            items=tuple(sorted(grades)),
            ordinal=induced_ordinal(grades),
            cardinal=dict(grades),
        )


@dataclass(frozen=True)
class Dataset:
    """Item and grader rosters plus at most one feedback record per grader."""

    items: tuple[str, ...]
    graders: tuple[str, ...]
    feedback: tuple[GraderFeedback, ...]
    lazy_graders: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        items = tuple(sorted(self.items))
        graders = tuple(sorted(self.graders))
        if len(set(items)) != len(items):
            raise ValidationError("item roster contains duplicates")
        if len(set(graders)) != len(graders):
            raise ValidationError("grader roster contains duplicates")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "graders", graders)
        object.__setattr__(self, "feedback", tuple(self.feedback))
        object.__setattr__(self, "lazy_graders", frozenset(self.lazy_graders))
        item_set = set(items)
        grader_set = set(graders)
        seen: set[str] = set()
        for fb in self.feedback:
            if fb.grader not in grader_set:
                raise ValidationError(f"feedback from unknown grader {fb.grader!r}")
            if fb.grader in seen:
                raise ValidationError(f"grader {fb.grader!r} has more than one feedback record")
            seen.add(fb.grader)
            extra = set(fb.items) - item_set
            if extra:
                raise ValidationError(f"grader {fb.grader!r} graded unknown items: {sorted(extra)}")
        unknown_lazy = self.lazy_graders - grader_set
        if unknown_lazy:
            raise ValidationError(f"lazy labels for unknown graders: {sorted(unknown_lazy)}")

    @classmethod
    def from_feedback(
        cls,
        feedback: Iterable[GraderFeedback],
        items: Iterable[str] | None = None,
        lazy_graders: Iterable[str] = (),
    ) -> "Dataset":
        """Build a dataset, deriving rosters from the feedback when omitted."""
        records = sorted(feedback, key=lambda fb: fb.grader)
        graders = tuple(fb.grader for fb in records)
        if items is None:
            roster: set[str] = set()
            for fb in records:
                roster.update(fb.items)
            items = roster
        return cls(
            items=tuple(sorted(items)),
            graders=graders,
            feedback=tuple(records),
            lazy_graders=frozenset(lazy_graders),
        )

    def feedback_map(self) -> dict[str, GraderFeedback]:
        return {fb.grader: fb for fb in self.feedback}

    def has_full_ordinal(self) -> bool:
        return all(fb.ordinal is not None for fb in self.feedback)

    def has_full_cardinal(self) -> bool:
        return all(fb.cardinal is not None for fb in self.feedback)


@dataclass(frozen=True)
class Estimate:
    """Result of an estimation run.

    ``ranking`` always covers the estimator's item roster. ``scores`` and
    ``reliabilities`` are present only for models that produce them.
    ``metadata`` records run details such as seeded tie-breaking.
    """

    ranking: WeakRanking
    scores: dict[str, float] | None = None
    reliabilities: dict[str, float] | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.scores is not None:
            unknown = set(self.scores) - self.ranking.items
            if unknown:
                raise ValidationError(f"scores for unranked items: {sorted(unknown)}")
            for item, s in self.scores.items():
                if not math.isfinite(s):
                    raise ValidationError(f"estimated score for {item!r} is not finite: {s}")
        if self.reliabilities is not None:
            for grader, eta in self.reliabilities.items():
                if not (math.isfinite(eta) and eta > 0):
                    raise ValidationError(f"reliability of {grader!r} must be finite and > 0, got {eta}")
