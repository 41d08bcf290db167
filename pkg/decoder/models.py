from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from decoder.utils import EOS_ID, INF


@dataclass(frozen=True)
class Posterior:
    """Costs for the next target position. Tokens outside ``entries``
    cost ``default_cost``.
    """

    entries: Dict[int, float]
    default_cost: float = INF

    def lookup(self, token: int) -> float:
        return self.entries.get(token, self.default_cost)


@dataclass(frozen=True)
class Hypothesis:
    tokens: Tuple[int, ...] = ()
    total_cost: float = 0.0
    breakdown: Tuple[float, ...] = ()
    # per step, per predictor costs; the lattice writers need them
    step_costs: Tuple[Tuple[float, ...], ...] = ()
    states: Optional[Tuple[Any, ...]] = field(default=None, compare=False, repr=False)

    @property
    def complete(self) -> bool:
        return bool(self.tokens) and self.tokens[-1] == EOS_ID

    @property
    def sort_key(self) -> Tuple[float, Tuple[int, ...]]:
        return self.total_cost, self.tokens

    @classmethod
    def initial(cls, num_predictors: int, states: Tuple[Any, ...]) -> "Hypothesis":
        return cls(breakdown=(0.0,) * num_predictors, states=states)


@dataclass
class SearchStats:
    expansions: int = 0
    completes: int = 0
    best_cost: float = INF
    forced_eos: bool = False
    dead_end: bool = False


@dataclass
class DecodeResult:
    hypotheses: List[Hypothesis] = field(default_factory=list)
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def best(self) -> Optional[Hypothesis]:
        return self.hypotheses[0] if self.hypotheses else None

    @property
    def best_cost(self) -> float:
        return self.hypotheses[0].total_cost if self.hypotheses else INF
