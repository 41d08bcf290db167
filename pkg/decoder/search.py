"""Search strategies over a predictor constellation.

All strategies share the same ranking: hypotheses are ordered by total
cost, ties broken by the lexicographically smallest token sequence;
children of one hypothesis are ordered by their local combined cost
and then by token id. A node expansion is one evaluation of the
ensemble's ``predict_next`` on one partial hypothesis.

``max_len`` bounds the hypothesis length including EOS. A partial
hypothesis of length ``max_len - 1`` can only be closed with EOS.
"""

import logging
import math
from typing import Any, List, Optional, Sequence, Tuple

from decoder.core import Predictor, candidate_tokens, check_weights, extend, predictor_costs, weighted_sum
from decoder.errors import AdmissibilityError, ConfigError, SearchBudgetError
from decoder.models import DecodeResult, Hypothesis, SearchStats
from decoder.utils import EOS_ID, INF

logger = logging.getLogger(__name__)

DEFAULT_EXHAUSTIVE_BUDGET = 1_000_000
ERROR_TOLERANCE = 1e-9

DECODERS = ("greedy", "beam", "dfs", "exhaustive")

# (total cost, token, per-predictor step costs, local combined cost)
Child = Tuple[float, int, Tuple[float, ...], float]


class Ensemble:
    """A predictor constellation with its weights and an expansion
    counter. Hypotheses carry the predictor states, so the ensemble is
    rewound to a hypothesis before every operation on it.
    """

    def __init__(self, predictors: Sequence[Predictor], weights: Sequence[float], stats: SearchStats):
        self.predictors = list(predictors)
        self.weights = check_weights(weights, len(self.predictors))
        self.stats = stats

    def states(self) -> Tuple[Any, ...]:
        return tuple(p.get_state() for p in self.predictors)

    def root(self) -> Hypothesis:
        return Hypothesis.initial(len(self.predictors), self.states())

    def expand(self, hyp: Hypothesis, max_len: int) -> List[Child]:
        """Scores every finite-cost continuation of ``hyp``, cheapest
        first. Counts one node expansion.
        """
        for predictor, state in zip(self.predictors, hyp.states):
            predictor.set_state(state)
        posteriors = [p.predict_next() for p in self.predictors]
        self.stats.expansions += 1
        if len(hyp.tokens) >= max_len - 1:
            candidates = [EOS_ID]
        else:
            candidates = candidate_tokens(posteriors)
        children: List[Child] = []
        for token in candidates:
            costs = predictor_costs(posteriors, token)
            local = weighted_sum(self.weights, costs)
            if local == INF:
                continue
            breakdown = tuple(b + c for b, c in zip(hyp.breakdown, costs))
            children.append((weighted_sum(self.weights, breakdown), token, costs, local))
        children.sort(key=lambda c: (c[3], c[1]))
        return children

    def forced_eos(self, hyp: Hypothesis) -> Child:
        """EOS continuation of ``hyp`` at its true, possibly infinite,
        cost. Assumes the ensemble was just rewound to ``hyp``.
        """
        posteriors = [p.predict_next() for p in self.predictors]
        costs = predictor_costs(posteriors, EOS_ID)
        breakdown = tuple(b + c for b, c in zip(hyp.breakdown, costs))
        return weighted_sum(self.weights, breakdown), EOS_ID, costs, weighted_sum(self.weights, costs)

    def child(self, hyp: Hypothesis, token: int, costs: Sequence[float]) -> Hypothesis:
        if token == EOS_ID:
            return extend(hyp, token, costs, self.weights)
        for predictor, state in zip(self.predictors, hyp.states):
            predictor.set_state(state)
            predictor.consume(token)
        return extend(hyp, token, costs, self.weights, states=self.states())


def _finish(hypotheses: List[Hypothesis], stats: SearchStats) -> DecodeResult:
    hypotheses = sorted(hypotheses, key=lambda h: h.sort_key)
    stats.completes = len(hypotheses)
    stats.best_cost = hypotheses[0].total_cost if hypotheses else INF
    return DecodeResult(hypotheses=hypotheses, stats=stats)


def greedy_decode(predictors: Sequence[Predictor], weights: Sequence[float], max_len: int) -> DecodeResult:
    """Repeatedly appends the cheapest continuation until EOS."""
    stats = SearchStats()
    ensemble = Ensemble(predictors, weights, stats)
    hyp = ensemble.root()
    while not hyp.complete:
        children = ensemble.expand(hyp, max_len)
        if children:
            total, token, costs, _ = min(children, key=lambda c: (c[0], c[1]))
            if len(hyp.tokens) >= max_len - 1:
                stats.forced_eos = True
                logger.warning("Greedy search reached max length %d, forcing EOS", max_len)
        else:
            total, token, costs, _ = ensemble.forced_eos(hyp)
            stats.forced_eos = True
            stats.dead_end = True
            logger.warning("Greedy search hit a dead end after %d tokens, forcing EOS", len(hyp.tokens))
        hyp = ensemble.child(hyp, token, costs)
    return _finish([hyp], stats)


def beam_decode(
    predictors: Sequence[Predictor],
    weights: Sequence[float],
    beam: int,
    max_len: int,
) -> DecodeResult:
    """Breadth-synchronous beam search. Complete hypotheses keep their
    slot and compete with partial ones; search stops when every slot
    holds a complete hypothesis.
    """
    if beam < 1:
        raise ConfigError([{"field": "beam", "message": "beam must be >= 1"}])
    stats = SearchStats()
    ensemble = Ensemble(predictors, weights, stats)
    hypos = [ensemble.root()]
    step = 0
    while hypos and not all(h.complete for h in hypos) and step < max_len:
        step += 1
        # (total, tokens, parent, token, costs)
        pool: List[Tuple[float, Tuple[int, ...], Optional[Hypothesis], int, Tuple[float, ...]]] = []
        for hyp in hypos:
            if hyp.complete:
                pool.append((hyp.total_cost, hyp.tokens, hyp, -1, ()))
                continue
            for total, token, costs, _ in ensemble.expand(hyp, max_len):
                pool.append((total, hyp.tokens + (token,), hyp, token, costs))
        pool.sort(key=lambda e: (e[0], e[1]))
        hypos = [
            parent if token < 0 else ensemble.child(parent, token, costs)
            for _, _, parent, token, costs in pool[:beam]
        ]
        logger.debug("beam step %d: %d hypotheses, best %s", step, len(hypos), hypos[0].total_cost if hypos else None)
    complete = [h for h in hypos if h.complete]
    if not complete:
        logger.warning("Beam search found no complete hypothesis")
    return _finish(complete, stats)


def check_admissible(predictors: Sequence[Predictor], weights: Sequence[float]) -> None:
    """Rejects constellations whose weighted step costs may be negative."""
    for predictor, weight in zip(predictors, weights):
        if weight < 0:
            raise AdmissibilityError(predictor.kind, f"has negative weight {weight}")
        if not predictor.admissible:
            raise AdmissibilityError(predictor.kind, "may produce negative costs")


def dfs_decode(predictors: Sequence[Predictor], weights: Sequence[float], max_len: int) -> DecodeResult:
    """Depth-first search with admissible pruning. Returns every
    cost-minimal complete hypothesis found, ordered by tokens.
    """
    check_weights(weights, len(predictors))
    check_admissible(predictors, weights)
    stats = SearchStats()
    ensemble = Ensemble(predictors, weights, stats)
    best = INF
    found: List[Hypothesis] = []
    stack = [ensemble.root()]
    while stack:
        hyp = stack.pop()
        if hyp.total_cost > best:
            continue
        if hyp.complete:
            found.append(hyp)
            best = min(best, hyp.total_cost)
            continue
        children = ensemble.expand(hyp, max_len)
        for total, token, costs, _ in reversed(children):
            if total > best:
                continue
            stack.append(ensemble.child(hyp, token, costs))
    found = [h for h in found if h.total_cost <= best]
    return _finish(found, stats)


def _estimate_hypotheses(predictors: Sequence[Predictor], weights: Sequence[float], max_len: int) -> float:
    stats = SearchStats()
    ensemble = Ensemble(predictors, weights, stats)
    branching = len(ensemble.expand(ensemble.root(), max_len))
    return float(branching) ** max(max_len - 1, 0)


def exhaustive_decode(
    predictors: Sequence[Predictor],
    weights: Sequence[float],
    max_len: int,
    budget: float = DEFAULT_EXHAUSTIVE_BUDGET,
) -> DecodeResult:
    """Enumerates every complete hypothesis reachable through
    finite-cost continuations. ``budget`` caps the number of generated
    hypotheses, partial and complete.
    """
    check_weights(weights, len(predictors))
    if not any(p.finite_support for p, w in zip(predictors, weights) if w != 0):
        estimate = _estimate_hypotheses(predictors, weights, max_len)
        if estimate > budget:
            raise SearchBudgetError(estimate, budget)
    stats = SearchStats()
    ensemble = Ensemble(predictors, weights, stats)
    complete: List[Hypothesis] = []
    stack = [ensemble.root()]
    generated = 0
    while stack:
        hyp = stack.pop()
        if hyp.complete:
            complete.append(hyp)
            continue
        children = ensemble.expand(hyp, max_len)
        generated += len(children)
        if generated > budget:
            raise SearchBudgetError(generated, budget)
        for _, token, costs, _ in reversed(children):
            stack.append(ensemble.child(hyp, token, costs))
    return _finish(complete, stats)


def count_search_errors(decoder_result: DecodeResult, exact_result: DecodeResult) -> bool:
    """True if the decoder missed the model-optimal cost."""
    if not decoder_result.hypotheses or not exact_result.hypotheses:
        raise ValueError("search errors are only defined for non-empty results")
    return decoder_result.best_cost > exact_result.best_cost + ERROR_TOLERANCE


def default_max_len(src_len: int, factor: float = 3, offset: int = 10) -> int:
    return int(math.floor(factor * src_len)) + offset


def decode(
    decoder: str,
    predictors: Sequence[Predictor],
    weights: Sequence[float],
    max_len: int,
    beam: int = 4,
    budget: float = DEFAULT_EXHAUSTIVE_BUDGET,
) -> DecodeResult:
    """Runs the strategy named ``decoder`` on initialized predictors."""
    if decoder == "greedy":
        return greedy_decode(predictors, weights, max_len)
    if decoder == "beam":
        return beam_decode(predictors, weights, beam, max_len)
    if decoder == "dfs":
        return dfs_decode(predictors, weights, max_len)
    if decoder == "exhaustive":
        return exhaustive_decode(predictors, weights, max_len, budget)
    raise ConfigError([{"field": "decoder", "message": f"unknown decoder '{decoder}'"}])
