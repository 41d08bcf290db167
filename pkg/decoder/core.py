"""The predictor contract and the linear combination of predictor
posteriors shared by all search strategies.

Costs are negative natural-log probabilities: lower is better, the
combination is additive and ``INF`` blocks a token. Weights are free
parameters and are never normalized.
"""

from abc import ABC, abstractmethod
import math
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from decoder.errors import ConfigError, HypothesisError
from decoder.models import Hypothesis, Posterior
from decoder.utils import BOS_ID, EOS_ID, INF


class Predictor(ABC):
    """A scoring module with left-to-right semantics.

    Subclasses implement ``predict_next`` and usually some of the hooks
    ``initialize_state``, ``consume_token``, ``get_internal_state`` and
    ``set_internal_state``. The base class keeps the target history,
    which starts as ``[BOS]`` after ``initialize``.
    """

    kind = "predictor"
    admissible = True
    """False if step costs may be negative, which rules out dfs."""

    finite_support = False
    """True if the default cost is infinite, i.e. the predictor
    bounds the set of reachable hypotheses.
    """

    def __init__(self):
        self.history: List[int] = []
        self.current_sen_id = 0

    def set_current_sen_id(self, sen_id: int) -> None:
        self.current_sen_id = sen_id

    def initialize(self, src_sentence: Sequence[int]) -> None:
        """Initialize the predictor state using the source sentence."""
        self.history = [BOS_ID]
        self.initialize_state(src_sentence)

    def initialize_state(self, src_sentence: Sequence[int]) -> None:
        pass

    @abstractmethod
    def predict_next(self) -> Posterior:
        """Produce the posterior over target tokens for the next
        position. Must not change the predictor state.
        """
        raise NotImplementedError

    def consume(self, token: int) -> None:
        """Update the internal predictor state by adding ``token`` to
        the current history.
        """
        self.history.append(token)
        self.consume_token(token)

    def consume_token(self, token: int) -> None:
        pass

    def get_state(self) -> Tuple[Tuple[int, ...], Any]:
        return tuple(self.history), self.get_internal_state()

    def set_state(self, state: Tuple[Tuple[int, ...], Any]) -> None:
        history, internal = state
        self.history = list(history)
        self.set_internal_state(internal)

    def get_internal_state(self) -> Any:
        return None

    def set_internal_state(self, state: Any) -> None:
        pass


def check_weights(weights: Sequence[float], num_predictors: int) -> Tuple[float, ...]:
    if len(weights) != num_predictors:
        raise ConfigError(
            [{
                "field": "predictor_weights",
                "message": f"{len(weights)} weights given for {num_predictors} predictors",
            }]
        )
    for w in weights:
        if not math.isfinite(w):
            raise ConfigError([{"field": "predictor_weights", "message": f"weight {w} is not finite"}])
    return tuple(float(w) for w in weights)


def weighted_sum(weights: Sequence[float], costs: Sequence[float]) -> float:
    """dot(weights, costs) where a zero weight silences its cost and
    any other weight on an infinite cost blocks.
    """
    total = 0.0
    for w, c in zip(weights, costs):
        if w == 0.0:
            continue
        if c == INF:
            return INF
        total += w * c
    return total


def lookup(posterior: Posterior, token: int) -> float:
    return posterior.entries.get(token, posterior.default_cost)


def predictor_costs(posteriors: Sequence[Posterior], token: int) -> Tuple[float, ...]:
    return tuple(p.entries.get(token, p.default_cost) for p in posteriors)


def combine(
    posteriors: Sequence[Posterior],
    weights: Sequence[float],
    candidates: Iterable[int],
) -> Dict[int, float]:
    """Linear combination of ``posteriors`` for each candidate. Tokens
    outside a predictor's entries get its default (UNK) cost. Blocked
    tokens stay in the result with cost ``INF``.
    """
    if len(posteriors) != len(weights):
        raise ConfigError(
            [{
                "field": "predictor_weights",
                "message": f"{len(weights)} weights for {len(posteriors)} posteriors",
            }]
        )
    return {t: weighted_sum(weights, predictor_costs(posteriors, t)) for t in candidates}


def candidate_tokens(posteriors: Sequence[Posterior]) -> Set[int]:
    """Union of the explicit supports plus EOS."""
    candidates = {EOS_ID}
    for posterior in posteriors:
        candidates.update(posterior.entries)
    return candidates


def extend(
    hyp: Hypothesis,
    token: int,
    per_predictor_costs: Sequence[float],
    weights: Sequence[float],
    states: Optional[Tuple[Any, ...]] = None,
) -> Hypothesis:
    if hyp.complete:
        raise HypothesisError(f"cannot extend complete hypothesis {list(hyp.tokens)}")
    if len(per_predictor_costs) != len(weights):
        raise HypothesisError(f"{len(per_predictor_costs)} costs for {len(weights)} predictors")
    breakdown = tuple(b + c for b, c in zip(hyp.breakdown, per_predictor_costs))
    return Hypothesis(
        tokens=hyp.tokens + (token,),
        total_cost=weighted_sum(weights, breakdown),
        breakdown=breakdown,
        step_costs=hyp.step_costs + (tuple(per_predictor_costs),),
        states=None if token == EOS_ID else states,
    )
