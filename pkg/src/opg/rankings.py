"""Weak rankings (orderings with ties) and distances between them.

A weak ranking is an ordered sequence of tie groups, best group first.
The rank of an item is 1 + the number of items in strictly better groups,
so tied items share a rank and rank 1 is best.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from typing import NamedTuple

import numpy as np

from .errors import ValidationError

__all__ = [
    "WeakRanking",
    "PreferencePair",
    "extract_preferences",
    "kendall_tau_distance",
    "score_weighted_kt_distance",
    "ranking_from_scores",
    "break_ties",
    "consistent_total_orders",
]


class _PreferencePairBase(NamedTuple):
    better: str
    worse: str


class PreferencePair(_PreferencePairBase):
    """A strict pairwise preference: ``better`` is ranked above ``worse``."""

    __slots__ = ()

    def __new__(cls, better: str, worse: str):
        if better == worse:
            raise ValidationError(
                f"preference pair must relate two distinct items, got {better!r} twice"
            )
        return super().__new__(cls, better, worse)


class WeakRanking:
    """Immutable ordering of item ids with ties.

    ``groups`` is a tuple of tie groups (tuples of item ids, each sorted
    lexicographically), best group first. Items appear exactly once.
    """

    __slots__ = ("_groups", "_rank")

    def __init__(self, groups: Iterable[Iterable[str]]):
        canon: list[tuple[str, ...]] = []
        seen: set[str] = set()
        for group in groups:
            g = tuple(sorted(group))
            if not g:
                raise ValidationError("tie groups must be non-empty")
            for item in g:
                if not isinstance(item, str) or not item:
                    raise ValidationError(f"item ids must be non-empty strings, got {item!r}")
                if item in seen:
                    raise ValidationError(f"item {item!r} appears in more than one tie group")
                seen.add(item)
            canon.append(g)
        if not canon:
            raise ValidationError("a ranking must contain at least one tie group")
        self._groups = tuple(canon)
        rank: dict[str, int] = {}
        n_better = 0
        for g in self._groups:
            for item in g:
                rank[item] = n_better + 1
            n_better += len(g)
        self._rank = rank

    @classmethod
    def from_order(cls, order: Iterable[str]) -> "WeakRanking":
        """Build a total order (all groups singletons), best first."""
        return cls([item] for item in order)

    @property
    def groups(self) -> tuple[tuple[str, ...], ...]:
        return self._groups

    @property
    def items(self) -> frozenset[str]:
        return frozenset(self._rank)

    @property
    def is_total(self) -> bool:
        return all(len(g) == 1 for g in self._groups)

    def __len__(self) -> int:
        return len(self._rank)

    def __contains__(self, item: str) -> bool:
        return item in self._rank

    def rank_of(self, item: str) -> int:
        try:
            return self._rank[item]
        except KeyError:
            raise ValidationError(f"item {item!r} is not ranked") from None

    def ranks(self) -> dict[str, int]:
        """Item -> rank map (1 + number of strictly better items)."""
        return dict(self._rank)

    def order(self) -> tuple[str, ...]:
        """Items best to worst; only defined for total orders."""
        if not self.is_total:
            raise ValidationError("ranking contains ties; no unique total order")
        return tuple(g[0] for g in self._groups)

    def restrict(self, subset: Iterable[str]) -> "WeakRanking":
        """Ranking induced on ``subset``, dropping groups that become empty."""
        keep = set(subset)
        missing = keep - self._rank.keys()
        if missing:
            raise ValidationError(f"cannot restrict to unranked items: {sorted(missing)}")
        groups = [tuple(x for x in g if x in keep) for g in self._groups]
        return WeakRanking(g for g in groups if g)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeakRanking):
            return NotImplemented
        return self._groups == other._groups

    def __hash__(self) -> int:
        return hash(self._groups)

    def __repr__(self) -> str:
        body = " > ".join("{" + ",".join(g) + "}" for g in self._groups)
        return f"WeakRanking({body})"


def extract_preferences(ranking: WeakRanking) -> set[PreferencePair]:
    """All strict pairwise preferences implied by a weak ranking.

    Pairs are taken across tie groups only; tied items induce no preference.
    """
    pairs: set[PreferencePair] = set()
    groups = ranking.groups
    for i, better_group in enumerate(groups):
        for worse_group in groups[i + 1:]:
            for a in better_group:
                for b in worse_group:
                    pairs.add(PreferencePair(a, b))
    return pairs


def _require_same_items(r1: WeakRanking, r2: WeakRanking) -> None:
    if r1.items != r2.items:
        raise ValidationError("rankings must cover the same item set")


def kendall_tau_distance(r1: WeakRanking, r2: WeakRanking) -> int:
    """Number of discordant pairs between two total orders over the same items."""
    if not (r1.is_total and r2.is_total):
        raise ValidationError("kendall_tau_distance is defined for total orders only")
    _require_same_items(r1, r2)
    pos2 = {item: i for i, item in enumerate(r2.order())}
    seq = np.fromiter((pos2[x] for x in r1.order()), dtype=np.int64, count=len(r1))
    discordant = seq[:, None] > seq[None, :]
    return int(np.triu(discordant, k=1).sum())


def score_weighted_kt_distance(
    r1: WeakRanking, r2: WeakRanking, scores: Mapping[str, float]
) -> float:
    """Sum of score gaps over pairs that ``r2`` orders against ``r1``.

    ``r1`` must be a total order consistent with ``scores`` (non-increasing
    along the order), so every counted gap is non-negative.
    """
    if not (r1.is_total and r2.is_total):
        raise ValidationError("score_weighted_kt_distance is defined for total orders only")
    _require_same_items(r1, r2)
    order1 = r1.order()
    missing = [x for x in order1 if x not in scores]
    if missing:
        raise ValidationError(f"scores missing for items: {missing}")
    svec = np.array([scores[x] for x in order1], dtype=float)
    if not np.all(np.isfinite(svec)):
        raise ValidationError("scores must be finite")
    if np.any(np.diff(svec) > 0):
        raise ValidationError("r1 must be sorted consistently with the scores")
    pos2 = {item: i for i, item in enumerate(r2.order())}
    seq = np.fromiter((pos2[x] for x in order1), dtype=np.int64, count=len(order1))
    discordant = np.triu(seq[:, None] > seq[None, :], k=1)
    gaps = svec[:, None] - svec[None, :]
    return float((gaps * discordant).sum())


def ranking_from_scores(
    scores: Mapping[str, float], tie_epsilon: float = 1e-9
) -> WeakRanking:
    """Rank items by descending score, merging near-ties into tie groups.

    Items whose scores differ by at most ``tie_epsilon`` are merged, applied
    transitively along the sorted score sequence (a chain of small gaps forms
    one group even if its endpoints differ by more than the epsilon).
    """
    if not scores:
        raise ValidationError("scores must be non-empty")
    if not (tie_epsilon >= 0.0 and math.isfinite(tie_epsilon)):
        raise ValidationError(f"tie_epsilon must be finite and >= 0, got {tie_epsilon}")
    for item, s in scores.items():
        if not math.isfinite(s):
            raise ValidationError(f"score for {item!r} is not finite: {s}")
    ordered = sorted(scores, key=lambda x: (-scores[x], x))
    groups: list[list[str]] = [[ordered[0]]]
    prev = scores[ordered[0]]
    for item in ordered[1:]:
        s = scores[item]
        if prev - s <= tie_epsilon:
            groups[-1].append(item)
        else:
            groups.append([item])
        prev = s
    return WeakRanking(groups)


def break_ties(ranking: WeakRanking, rng: np.random.Generator) -> WeakRanking:
    """Total order obtained by shuffling each tie group with ``rng``."""
    groups: list[list[str]] = []
    for g in ranking.groups:
        perm = rng.permutation(len(g))
        groups.extend([[g[i]] for i in perm])
    return WeakRanking(groups)


def consistent_total_orders(ranking: WeakRanking) -> Iterator[tuple[str, ...]]:
    """All total orders obtained by permuting items within each tie group."""
    per_group: Sequence[Iterable[tuple[str, ...]]] = [
        itertools.permutations(g) for g in ranking.groups
    ]
    for combo in itertools.product(*per_group):
        yield tuple(itertools.chain.from_iterable(combo))
