"""Latent-score models for ordinal feedback and their MAP fitting.

Four model families map latent item scores s (and a per-grader reliability
eta) to a likelihood of the observed rankings:

* pairwise logistic: P(i above j) = 1 / (1 + exp(-eta * (s_i - s_j)));
  tied pairs express no preference and contribute nothing,
* pairwise probit: P(i above j) = Phi(sqrt(eta) * (s_i - s_j)),
* listwise choice: sequential choice of each ranked item against the items
  at or below it, P proportional to exp(eta * s),
* score-weighted permutation model: probability proportional to
  exp(-eta * weighted inversion count), where each inverted pair costs the
  score gap between its items; tie groups are handled by summing over all
  consistent total orders (exact enumeration, capped).

All fits are MAP under an independent normal prior on scores and (for the
"+g" variants) a gamma prior on reliabilities, optimized by per-grader
stochastic gradient steps with alternating reliability/score rounds.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import expit, log_ndtr, ndtr

from .config import ReliabilityPrior, ScorePrior, SgdConfig
from .data import Dataset, Estimate, GraderFeedback
from .errors import EnumerationCapError, ValidationError
from .mallows import greedy_mle_ranking
from .rankings import WeakRanking, break_ties, ranking_from_scores

__all__ = [
    "SCORE_MODELS",
    "Objective",
    "bt_pair_probability",
    "thurstone_pair_probability",
    "pl_ranking_log_probability",
    "mals_log_likelihood",
    "negative_log_posterior",
    "fit",
]

SCORE_MODELS = ("bt", "thur", "pl", "mals")

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_eta(eta: float) -> None:
    if not (math.isfinite(eta) and eta > 0):
        raise ValidationError(f"eta must be finite and > 0, got {eta}")


def bt_pair_probability(s_i: float, s_j: float, eta: float = 1.0) -> float:
    """Logistic probability that the item scored ``s_i`` beats the one scored ``s_j``."""
    _check_eta(eta)
    return float(expit(eta * (s_i - s_j)))


def thurstone_pair_probability(s_i: float, s_j: float, eta: float = 1.0) -> float:
    """Probit probability that the item scored ``s_i`` beats the one scored ``s_j``.

    Each item's observed value is normal with variance 1/2 around its score
    (variance 1 for the difference), scaled by the grader reliability.
    """
    _check_eta(eta)
    return float(ndtr(math.sqrt(eta) * (s_i - s_j)))


def pl_ranking_log_probability(
    order: WeakRanking | Sequence[str], scores: Mapping[str, float], eta: float = 1.0
) -> float:
    """Log probability of a total order under the sequential-choice model.

    Each position's item is chosen against all items at or below it with
    probability proportional to exp(eta * score).
    """
    _check_eta(eta)
    if isinstance(order, WeakRanking):
        seq = order.order()
    else:
        seq = tuple(order)
        if len(set(seq)) != len(seq):
            raise ValidationError("order contains duplicate items")
    missing = [x for x in seq if x not in scores]
    if missing:
        raise ValidationError(f"scores missing for items: {missing}")
    u = eta * np.array([scores[x] for x in seq], dtype=float)
    suffix_lse = np.logaddexp.accumulate(u[::-1])[::-1]
    return float((u - suffix_lse).sum())


# --- exact enumeration over permutations, cached per item count -------------

_PERM_TABLES: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _perm_tables(m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(inversion matrix over pairs, pair row index, pair col index) for m items.

    Row r of the inversion matrix flags, for permutation r of (0..m-1), which
    pairs (i, j) with i < j appear inverted (i below j). Tables are cached;
    m = 9 costs roughly 100 MB, hence the enumeration cap.
    """
    cached = _PERM_TABLES.get(m)
    if cached is not None:
        return cached
    perms = np.array(list(itertools.permutations(range(m))), dtype=np.int8)
    pos = np.argsort(perms, axis=1)
    pi, pj = np.triu_indices(m, k=1)
    inv = (pos[:, pi] > pos[:, pj]).astype(np.float64)
    _PERM_TABLES[m] = (inv, pi, pj)
    return _PERM_TABLES[m]


def _orders_logsumexp(
    svec: np.ndarray, eta: float, need_s: bool, need_eta: bool
) -> tuple[float, np.ndarray | None, float | None]:
    """log sum over all orders of exp(-eta * weighted inversions), with grads.

    ``svec`` holds the scores sorted descending (the reference order); an
    inverted pair costs its score gap. Returns the log-sum, its gradient with
    respect to ``svec``, and its eta derivative.
    """
    m = len(svec)
    if m <= 1:
        return 0.0, (np.zeros(m) if need_s else None), (0.0 if need_eta else None)
    inv, pi, pj = _perm_tables(m)
    gaps = svec[pi] - svec[pj]
    d = inv @ gaps
    a = -eta * d
    amax = float(a.max())
    w = np.exp(a - amax)
    total = float(w.sum())
    logz = amax + math.log(total)
    grad_s = None
    grad_eta = None
    if need_s or need_eta:
        p = w / total
        if need_s:
            dgap = -eta * (p @ inv)
            grad_s = np.bincount(pi, weights=dgap, minlength=m) - np.bincount(
                pj, weights=dgap, minlength=m
            )
        if need_eta:
            grad_eta = -float(p @ d)
    return logz, grad_s, grad_eta


def _sorted_desc(svals: np.ndarray) -> np.ndarray:
    """Indices sorting scores descending, equal scores by index (deterministic)."""
    return np.lexsort((np.arange(len(svals)), -svals))


# --- per-grader likelihood terms --------------------------------------------


class _PairTerm:
    """Strict pairwise preferences of one grader (logistic or probit link)."""

    __slots__ = ("global_idx", "wl", "ll", "probit")

    def __init__(self, global_idx: np.ndarray, wl: np.ndarray, ll: np.ndarray, probit: bool):
        self.global_idx = global_idx
        self.wl = wl
        self.ll = ll
        self.probit = probit

    def value_and_grads(
        self, s: np.ndarray, eta: float, need_s: bool, need_eta: bool
    ) -> tuple[float, np.ndarray | None, float | None]:
        m = len(self.global_idx)
        if len(self.wl) == 0:
            return 0.0, (np.zeros(m) if need_s else None), (0.0 if need_eta else None)
        s_local = s[self.global_idx]
        dz = s_local[self.wl] - s_local[self.ll]
        if self.probit:
            rt = math.sqrt(eta)
            z = rt * dz
            logphi = log_ndtr(z)
            nll = -float(logphi.sum())
            grad_s = None
            grad_eta = None
            if need_s or need_eta:
                ratio = np.exp(-0.5 * z * z - _LOG_SQRT_2PI - logphi)
                if need_s:
                    grad_s = np.bincount(self.wl, weights=-rt * ratio, minlength=m) + np.bincount(
                        self.ll, weights=rt * ratio, minlength=m
                    )
                if need_eta:
                    grad_eta = -float((ratio * dz).sum()) / (2.0 * rt)
            return nll, grad_s, grad_eta
        z = eta * dz
        nll = float(np.logaddexp(0.0, -z).sum())
        grad_s = None
        grad_eta = None
        if need_s or need_eta:
            q = expit(-z)
            if need_s:
                grad_s = np.bincount(self.wl, weights=-eta * q, minlength=m) + np.bincount(
                    self.ll, weights=eta * q, minlength=m
                )
            if need_eta:
                grad_eta = -float((dz * q).sum())
        return nll, grad_s, grad_eta


class _ListTerm:
    """One grader's total order under the sequential-choice model."""

    __slots__ = ("global_idx", "order_local")

    def __init__(self, global_idx: np.ndarray, order_local: np.ndarray):
        self.global_idx = global_idx
        self.order_local = order_local

    def value_and_grads(
        self, s: np.ndarray, eta: float, need_s: bool, need_eta: bool
    ) -> tuple[float, np.ndarray | None, float | None]:
        m = len(self.global_idx)
        s_ord = s[self.global_idx][self.order_local]
        u = eta * s_ord
        suffix_lse = np.logaddexp.accumulate(u[::-1])[::-1]
        nll = float((suffix_lse - u).sum())
        grad_s = None
        grad_eta = None
        if need_s or need_eta:
            gu = np.zeros(m)
            for i in range(m - 1):
                gu[i:] += np.exp(u[i:] - suffix_lse[i])
                gu[i] -= 1.0
            if need_s:
                grad_s = np.zeros(m)
                grad_s[self.order_local] = eta * gu
            if need_eta:
                grad_eta = float(gu @ s_ord)
        return nll, grad_s, grad_eta


class _WeightedPermTerm:
    """One grader's weak ranking under the score-weighted permutation model."""

    __slots__ = ("global_idx", "groups_local")

    def __init__(self, global_idx: np.ndarray, groups_local: list[np.ndarray]):
        self.global_idx = global_idx
        self.groups_local = groups_local

    def value_and_grads(
        self, s: np.ndarray, eta: float, need_s: bool, need_eta: bool
    ) -> tuple[float, np.ndarray | None, float | None]:
        m = len(self.global_idx)
        s_local = s[self.global_idx]
        grad_s = np.zeros(m) if need_s else None
        grad_eta = 0.0 if need_eta else None

        # Denominator: all total orders of the grader's items.
        perm = _sorted_desc(s_local)
        logz_den, g_sorted, de = _orders_logsumexp(s_local[perm], eta, need_s, need_eta)
        nll = logz_den
        if need_s:
            grad_s[perm] += g_sorted
        if need_eta:
            grad_eta += de

        # Numerator: cross-group pairs are fixed by the tie groups; a pair
        # scored against the group order costs its gap in every consistent
        # order. Within-group arrangements enumerate freely per group.
        x = 0.0
        for gi, better in enumerate(self.groups_local):
            for worse in self.groups_local[gi + 1:]:
                v = s_local[worse][:, None] - s_local[better][None, :]
                pos = v > 0.0
                if pos.any():
                    x += float(v[pos].sum())
                    if need_s:
                        np.add.at(grad_s, worse, eta * pos.sum(axis=1).astype(float))
                        np.add.at(grad_s, better, -eta * pos.sum(axis=0).astype(float))
        nll += eta * x
        if need_eta:
            grad_eta += x
        for group in self.groups_local:
            if len(group) < 2:
                continue
            gvals = s_local[group]
            gperm = _sorted_desc(gvals)
            logz_g, gg, de_g = _orders_logsumexp(gvals[gperm], eta, need_s, need_eta)
            nll -= logz_g
            if need_s:
                np.subtract.at(grad_s, group[gperm], gg)
            if need_eta:
                grad_eta -= de_g
        return nll, grad_s, grad_eta


def mals_log_likelihood(
    feedback: GraderFeedback,
    scores: Mapping[str, float],
    eta: float = 1.0,
    enumeration_cap: int = 9,
) -> float:
    """Log probability of one grader's weak ranking given latent scores.

    Probability of a weak ranking is the sum of exp(-eta * weighted
    inversions against the score order) over its consistent total orders,
    normalized over all total orders of the grader's items. Exact; the
    grader's item count must not exceed ``enumeration_cap``.
    """
    _check_eta(eta)
    if feedback.ordinal is None:
        raise ValidationError(f"grader {feedback.grader!r} has no ordinal feedback")
    items = feedback.items
    if len(items) > enumeration_cap:
        raise EnumerationCapError(
            f"grader {feedback.grader!r} graded {len(items)} items, above the exact-enumeration "
            f"cap {enumeration_cap}; exclude this model or raise the cap"
        )
    missing = [x for x in items if x not in scores]
    if missing:
        raise ValidationError(f"scores missing for items: {missing}")
    index = {item: i for i, item in enumerate(items)}
    term = _WeightedPermTerm(
        global_idx=np.arange(len(items)),
        groups_local=[np.array([index[x] for x in g]) for g in feedback.ordinal.groups],
    )
    svec = np.array([float(scores[x]) for x in items])
    nll, _, _ = term.value_and_grads(svec, eta, need_s=False, need_eta=False)
    return -nll


# --- model preparation and objective ----------------------------------------


@dataclass
class _Prepared:
    model: str
    items: tuple[str, ...]
    graders: tuple[str, ...]
    terms: list[Any]
    metadata: dict[str, Any] = field(default_factory=dict)


def _prepare(model: str, data: Dataset, rng: np.random.Generator, enumeration_cap: int) -> _Prepared:
    if model not in SCORE_MODELS:
        raise ValidationError(f"unknown score model {model!r}; expected one of {SCORE_MODELS}")
    if not data.feedback:
        raise ValidationError("dataset has no feedback")
    items = tuple(sorted(data.items))
    index = {item: i for i, item in enumerate(items)}
    terms: list[Any] = []
    graders: list[str] = []
    metadata: dict[str, Any] = {}
    for fb in data.feedback:
        if fb.ordinal is None:
            raise ValidationError(f"grader {fb.grader!r} has no ordinal feedback")
        graders.append(fb.grader)
        member_index = {item: i for i, item in enumerate(fb.items)}
        global_idx = np.array([index[x] for x in fb.items], dtype=np.int64)
        ranking = fb.ordinal
        if model in ("bt", "thur"):
            wl: list[int] = []
            ll: list[int] = []
            groups = ranking.groups
            for gi, better in enumerate(groups):
                for worse in groups[gi + 1:]:
                    for a in better:
                        for b in worse:
                            wl.append(member_index[a])
                            ll.append(member_index[b])
            terms.append(
                _PairTerm(
                    global_idx,
                    np.array(wl, dtype=np.int64),
                    np.array(ll, dtype=np.int64),
                    probit=(model == "thur"),
                )
            )
        elif model == "pl":
            if not ranking.is_total:
                ranking = break_ties(ranking, rng)
                metadata["tie_break"] = "seeded"
            order_local = np.array([member_index[x] for x in ranking.order()], dtype=np.int64)
            terms.append(_ListTerm(global_idx, order_local))
        else:
            if len(fb.items) > enumeration_cap:
                raise EnumerationCapError(
                    f"grader {fb.grader!r} graded {len(fb.items)} items, above the exact-enumeration "
                    f"cap {enumeration_cap}; exclude this model or raise the cap"
                )
            groups_local = [np.array([member_index[x] for x in g], dtype=np.int64) for g in ranking.groups]
            terms.append(_WeightedPermTerm(global_idx, groups_local))
    return _Prepared(model=model, items=items, graders=tuple(graders), terms=terms, metadata=metadata)


@dataclass(frozen=True)
class Objective:
    """Negative log-posterior value with gradients at one parameter point."""

    value: float
    score_gradient: dict[str, float]
    reliability_gradient: dict[str, float] | None = None


def _total_objective(
    prep: _Prepared,
    s: np.ndarray,
    etas: np.ndarray,
    score_prior: ScorePrior,
    reliability_prior: ReliabilityPrior | None,
) -> float:
    total = 0.0
    for gi, term in enumerate(prep.terms):
        nll, _, _ = term.value_and_grads(s, float(etas[gi]), need_s=False, need_eta=False)
        total += nll
    total += float(((s - score_prior.mean) ** 2).sum()) / (2.0 * score_prior.variance)
    if reliability_prior is not None:
        total += float(
            (etas / reliability_prior.scale - (reliability_prior.shape - 1.0) * np.log(etas)).sum()
        )
    return total


def negative_log_posterior(
    model: str,
    data: Dataset,
    scores: Mapping[str, float],
    reliabilities: Mapping[str, float] | None = None,
    *,
    score_prior: ScorePrior | None = None,
    reliability_prior: ReliabilityPrior | None = None,
    seed: int = 0,
    enumeration_cap: int = 9,
) -> Objective:
    """Negative log-posterior of a score model, with analytic gradients.

    With ``reliabilities`` omitted every grader has eta = 1 and the
    reliability prior and gradient are excluded. Additive constants are
    dropped throughout.
    """
    score_prior = score_prior or ScorePrior()
    rng = np.random.default_rng(seed)
    prep = _prepare(model, data, rng, enumeration_cap)
    missing = [x for x in prep.items if x not in scores]
    if missing:
        raise ValidationError(f"scores missing for items: {missing}")
    s = np.array([float(scores[x]) for x in prep.items])
    with_rel = reliabilities is not None
    if with_rel:
        absent = [g for g in prep.graders if g not in reliabilities]
        if absent:
            raise ValidationError(f"reliabilities missing for graders: {absent}")
        etas = np.array([float(reliabilities[g]) for g in prep.graders])
        if not (np.all(np.isfinite(etas)) and np.all(etas > 0)):
            raise ValidationError("reliabilities must be finite and > 0")
        rprior = reliability_prior or ReliabilityPrior()
    else:
        etas = np.ones(len(prep.graders))
        rprior = None

    value = 0.0
    grad_s = (s - score_prior.mean) / score_prior.variance
    value += float(((s - score_prior.mean) ** 2).sum()) / (2.0 * score_prior.variance)
    grad_eta = np.zeros(len(prep.graders))
    for gi, term in enumerate(prep.terms):
        nll, gs, ge = term.value_and_grads(s, float(etas[gi]), need_s=True, need_eta=with_rel)
        value += nll
        grad_s[term.global_idx] += gs
        if with_rel:
            grad_eta[gi] = ge
    reliability_gradient = None
    if with_rel:
        value += float((etas / rprior.scale - (rprior.shape - 1.0) * np.log(etas)).sum())
        grad_eta += 1.0 / rprior.scale - (rprior.shape - 1.0) / etas
        reliability_gradient = {g: float(grad_eta[i]) for i, g in enumerate(prep.graders)}
    return Objective(
        value=value,
        score_gradient={item: float(grad_s[i]) for i, item in enumerate(prep.items)},
        reliability_gradient=reliability_gradient,
    )


# --- stochastic gradient fitting --------------------------------------------


def _sgd_scores(
    prep: _Prepared,
    s0: np.ndarray,
    etas: np.ndarray,
    cfg: SgdConfig,
    rng: np.random.Generator,
    score_prior: ScorePrior,
    reliability_prior: ReliabilityPrior | None,
) -> np.ndarray:
    s = s0.copy()
    n_terms = len(prep.terms)
    prev = _total_objective(prep, s, etas, score_prior, reliability_prior)
    for epoch in range(1, cfg.max_epochs + 1):
        lr = cfg.rate_at(epoch)
        for gi in rng.permutation(n_terms):
            term = prep.terms[gi]
            _, gs, _ = term.value_and_grads(s, float(etas[gi]), need_s=True, need_eta=False)
            s -= lr * (s - score_prior.mean) / (score_prior.variance * n_terms)
            s[term.global_idx] -= lr * gs
        current = _total_objective(prep, s, etas, score_prior, reliability_prior)
        if abs(current - prev) / max(1.0, abs(prev)) < cfg.rel_tolerance:
            break
        prev = current
    return s


_LOG_ETA_BOUND = 3.0 * math.log(10.0)


def _sgd_reliabilities(
    prep: _Prepared,
    s: np.ndarray,
    etas0: np.ndarray,
    cfg: SgdConfig,
    rng: np.random.Generator,
    score_prior: ScorePrior,
    reliability_prior: ReliabilityPrior,
) -> np.ndarray:
    """Stochastic gradient on log(eta) per grader (positivity is structural)."""
    z = np.log(etas0.copy())
    n_terms = len(prep.terms)
    shape, scale = reliability_prior.shape, reliability_prior.scale
    prev = _total_objective(prep, s, np.exp(z), score_prior, reliability_prior)
    for epoch in range(1, cfg.max_epochs + 1):
        lr = cfg.rate_at(epoch)
        for gi in rng.permutation(n_terms):
            eta = math.exp(z[gi])
            _, _, ge = prep.terms[gi].value_and_grads(s, eta, need_s=False, need_eta=True)
            gz = eta * ge + eta / scale - (shape - 1.0)
            z[gi] = min(max(z[gi] - lr * gz, -_LOG_ETA_BOUND), _LOG_ETA_BOUND)
        current = _total_objective(prep, s, np.exp(z), score_prior, reliability_prior)
        if abs(current - prev) / max(1.0, abs(prev)) < cfg.rel_tolerance:
            break
        prev = current
    return np.exp(z)


def _initial_scores(model: str, data: Dataset, prep: _Prepared) -> np.ndarray:
    if model != "mals":
        return np.zeros(len(prep.items))
    # Seed the weighted permutation model with a scaled-down version of the
    # greedy likelihood ranking: equally spaced scores in [-1, 1], times 0.1.
    ranking = greedy_mle_ranking(data)
    n = len(prep.items)
    spaced = np.linspace(1.0, -1.0, n) * 0.1
    index = {item: i for i, item in enumerate(prep.items)}
    s = np.zeros(n)
    for pos, item in enumerate(ranking.order()):
        s[index[item]] = spaced[pos]
    return s


def fit(
    model: str,
    data: Dataset,
    cfg: SgdConfig | None = None,
    *,
    with_reliability: bool = False,
    score_prior: ScorePrior | None = None,
    reliability_prior: ReliabilityPrior | None = None,
    tie_epsilon: float = 1e-9,
    enumeration_cap: int = 9,
) -> Estimate:
    """MAP-fit a score model, optionally alternating with reliability updates.

    The score step runs seeded per-grader stochastic gradient descent from
    zero scores (the weighted permutation model starts from a scaled greedy
    ranking instead). With ``with_reliability``, reliability and score steps
    alternate for ``cfg.alternating_iterations`` rounds after an initial
    score fit at eta = 1; reliabilities follow gradient steps on log(eta),
    clamped to [1e-3, 1e3].
    """
    cfg = cfg or SgdConfig()
    score_prior = score_prior or ScorePrior()
    rprior = reliability_prior or ReliabilityPrior()
    rng = np.random.default_rng(cfg.seed)
    prep = _prepare(model, data, rng, enumeration_cap)

    s = _initial_scores(model, data, prep)
    etas = np.ones(len(prep.graders))
    s = _sgd_scores(prep, s, etas, cfg, rng, score_prior, None)
    reliabilities = None
    if with_reliability:
        for _ in range(cfg.alternating_iterations):
            etas = _sgd_reliabilities(prep, s, etas, cfg, rng, score_prior, rprior)
            s = _sgd_scores(prep, s, etas, cfg, rng, score_prior, rprior)
        reliabilities = {g: float(etas[i]) for i, g in enumerate(prep.graders)}
    scores = {item: float(s[i]) for i, item in enumerate(prep.items)}
    metadata = dict(prep.metadata)
    metadata["model"] = model + ("+g" if with_reliability else "")
    return Estimate(
        ranking=ranking_from_scores(scores, tie_epsilon),
        scores=scores,
        reliabilities=reliabilities,
        metadata=metadata,
    )
