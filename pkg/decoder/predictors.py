"""Concrete predictors: automaton constraint (fst), ARPA language model
(lm), lexical translation table (lex), word count penalty (wc) and
MBR-style n-gram posteriors (ngram).
"""

from dataclasses import dataclass, field
import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

from decoder.arpa import ArpaModel, lm_cost
from decoder.automata import WeightedAutomaton, validate_deterministic
from decoder.core import Predictor
from decoder.errors import AutomatonError, DataError, ParseError
from decoder.models import Posterior
from decoder.utils import EOS_ID, INF, UNK_ID

logger = logging.getLogger(__name__)

DEFAULT_LEX_FLOOR = 20.0
DEFAULT_P_EOS = 0.1

Ngram = Tuple[int, ...]


# -------------------------
# Model data
# -------------------------

@dataclass(frozen=True)
class LexTable:
    t: Dict[Tuple[int, int], float]
    by_source: Dict[int, Dict[int, float]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_source: Dict[int, Dict[int, float]] = {}
        for (src, trg), p in self.t.items():
            if not 0.0 < p <= 1.0:
                raise DataError(f"lexical probability t({trg}|{src})={p} outside (0,1]")
            by_source.setdefault(src, {})[trg] = p
        for src, dist in by_source.items():
            mass = math.fsum(dist.values())
            if mass > 1.0 + 1e-6:
                raise DataError(f"lexical probabilities for source token {src} sum to {mass:.6f} > 1")
        object.__setattr__(self, "by_source", by_source)


def load_lex_table(stream: Union[TextIO, Iterable[str]]) -> LexTable:
    """Reads ``src_id trg_id prob`` lines."""
    source = getattr(stream, "name", None)
    t: Dict[Tuple[int, int], float] = {}
    for line_no, line in enumerate(stream, 1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 3:
            raise ParseError("lex lines must be 'src_id trg_id prob'", path=source, line=line_no)
        try:
            key = (int(fields[0]), int(fields[1]))
            p = float(fields[2])
        except ValueError:
            raise ParseError(f"malformed lex line '{line.rstrip()}'", path=source, line=line_no)
        if key in t:
            raise ParseError(f"duplicate entry for pair {key}", path=source, line=line_no)
        t[key] = p
    try:
        return LexTable(t)
    except DataError as e:
        raise DataError(e.message, path=source)


@dataclass(frozen=True)
class NgramPosteriorTable:
    max_order: int
    post: Dict[Ngram, float]
    theta: Tuple[float, ...] = ()

    def theta_for(self, order: int) -> float:
        """Weight of n-grams of ``order``; orders without a configured
        weight default to 1.
        """
        return self.theta[order - 1] if order <= len(self.theta) else 1.0


def load_ngram_posteriors(
    stream: Union[TextIO, Iterable[str]],
    theta: Sequence[float] = (),
) -> NgramPosteriorTable:
    """Reads ``tok1 tok2 ... : prob`` lines as written by the ngram
    output format.
    """
    source = getattr(stream, "name", None)
    post: Dict[Ngram, float] = {}
    for line_no, line in enumerate(stream, 1):
        if not line.strip():
            continue
        ngram_text, sep, value = line.rpartition(":")
        try:
            if not sep:
                raise ValueError("missing ':' separator")
            ngram = tuple(int(tok) for tok in ngram_text.split())
            p = float(value)
        except ValueError as e:
            raise ParseError(f"malformed n-gram posterior line: {e}", path=source, line=line_no)
        if not ngram:
            raise ParseError("empty n-gram", path=source, line=line_no)
        if p < 0.0 or math.isnan(p):
            raise ParseError(f"negative posterior {p}", path=source, line=line_no)
        if p > 1.0:
            logger.debug("n-gram %s has value %f > 1 (expected counts)", ngram, p)
        post[ngram] = p
    max_order = max((len(g) for g in post), default=1)
    return NgramPosteriorTable(max_order=max_order, post=post, theta=tuple(theta))


# -------------------------
# Predictors
# -------------------------

DEAD_POSTERIOR = Posterior({EOS_ID: INF}, INF)


class FstPredictor(Predictor):
    """Walks a deterministic acceptor. Only tokens with an outgoing arc
    from the current node are allowed; EOS costs the final weight.
    Consuming a token without an arc leads to a dead state.
    """

    kind = "fst"
    finite_support = True

    def __init__(self, automaton: WeightedAutomaton):
        super().__init__()
        report = validate_deterministic(automaton)
        if not report.ok:
            raise AutomatonError(
                f"fst predictor needs a deterministic automaton: state {report.state} "
                f"has several arcs labelled {report.label}"
            )
        self.automaton = automaton
        self.admissible = not automaton.has_negative_weights()
        self._transitions: List[Dict[int, int]] = []
        self._posteriors: List[Posterior] = []
        for state in range(automaton.num_states):
            entries = {arc.label: arc.weight for arc in automaton.arcs[state]}
            entries[EOS_ID] = automaton.finals.get(state, INF)
            self._posteriors.append(Posterior(entries, INF))
            self._transitions.append({arc.label: arc.next_state for arc in automaton.arcs[state]})
        self.cur_node: Optional[int] = automaton.start

    def initialize_state(self, src_sentence: Sequence[int]) -> None:
        self.cur_node = self.automaton.start

    def predict_next(self) -> Posterior:
        if self.cur_node is None:
            return DEAD_POSTERIOR
        return self._posteriors[self.cur_node]

    def consume_token(self, token: int) -> None:
        if self.cur_node is None:
            return
        next_node = self._transitions[self.cur_node].get(token)
        if next_node is None:
            logger.warning(
                "Sentence %d: fst has no arc for token %d at node %d, entering dead state",
                self.current_sen_id + 1, token, self.cur_node,
            )
        self.cur_node = next_node

    def get_internal_state(self) -> Optional[int]:
        return self.cur_node

    def set_internal_state(self, state: Optional[int]) -> None:
        self.cur_node = state


class LmPredictor(Predictor):
    """Backoff n-gram language model. Every vocabulary token gets an
    explicit entry; other tokens get the cost of UNK.
    """

    kind = "lm"

    def __init__(self, model: ArpaModel):
        super().__init__()
        self.model = model
        self.admissible = model.admissible
        self._vocabulary = model.vocabulary
        self._cache: Dict[Ngram, Posterior] = {}

    def _context(self) -> Ngram:
        if self.model.order == 1:
            return ()
        return tuple(self.history[max(0, len(self.history) - self.model.order + 1):])

    def predict_next(self) -> Posterior:
        context = self._context()
        posterior = self._cache.get(context)
        if posterior is None:
            entries = {t: lm_cost(self.model, context, t) for t in self._vocabulary}
            posterior = Posterior(entries, lm_cost(self.model, context, UNK_ID))
            self._cache[context] = posterior
        return posterior


class LexPredictor(Predictor):
    """Context-free lexical translation scores:
    ``cost(y) = -ln(mean_i t(y|x_i))`` over the source tokens ``x_i``.
    """

    kind = "lex"

    def __init__(self, table: LexTable, floor: float = DEFAULT_LEX_FLOOR, p_eos: float = DEFAULT_P_EOS):
        super().__init__()
        if not 0.0 < p_eos <= 1.0:
            raise DataError(f"lex p_eos must be in (0,1], got {p_eos}")
        self.table = table
        self.floor = floor
        self.p_eos = p_eos
        self.admissible = floor >= 0.0
        self._posterior = Posterior({EOS_ID: -math.log(p_eos)}, floor)

    def initialize_state(self, src_sentence: Sequence[int]) -> None:
        if not src_sentence:
            raise DataError("lex predictor needs a non-empty source sentence")
        mass: Dict[int, float] = {}
        for x in src_sentence:
            for y, p in self.table.by_source.get(x, {}).items():
                mass[y] = mass.get(y, 0.0) + p
        n = float(len(src_sentence))
        entries = {y: -math.log(m / n) for y, m in mass.items() if m > 0.0}
        entries[EOS_ID] = -math.log(self.p_eos)
        self._posterior = Posterior(entries, self.floor)

    def predict_next(self) -> Posterior:
        return self._posterior


class WordCountPredictor(Predictor):
    """Charges ``penalty`` for every token except EOS."""

    kind = "wc"

    def __init__(self, penalty: float = 1.0):
        super().__init__()
        self.penalty = penalty
        self.admissible = penalty >= 0.0
        self._posterior = Posterior({EOS_ID: 0.0}, penalty)

    def predict_next(self) -> Posterior:
        return self._posterior


class NgramPosteriorPredictor(Predictor):
    """Rewards tokens completing n-grams with high posterior:
    ``cost(y) = -sum_n theta_n * post(suffix_n(history + [y]))``.
    Costs are negative, so this predictor is never admissible.
    """

    kind = "ngram"
    admissible = False

    def __init__(self, table: NgramPosteriorTable):
        super().__init__()
        self.table = table
        self._successors: Dict[Ngram, List[int]] = {}
        for ngram in sorted(table.post):
            self._successors.setdefault(ngram[:-1], []).append(ngram[-1])
        self._cache: Dict[Ngram, Posterior] = {}

    def predict_next(self) -> Posterior:
        target = self.history[1:]
        span = self.table.max_order - 1
        context = tuple(target[max(0, len(target) - span):]) if span > 0 else ()
        posterior = self._cache.get(context)
        if posterior is not None:
            return posterior
        candidates = set()
        for n in range(1, self.table.max_order + 1):
            if n - 1 > len(context):
                break
            candidates.update(self._successors.get(context[len(context) - n + 1:] if n > 1 else (), ()))
        entries = {}
        for y in candidates:
            gain = 0.0
            for n in range(1, self.table.max_order + 1):
                if n - 1 > len(context):
                    break
                ngram = (context[len(context) - n + 1:] if n > 1 else ()) + (y,)
                gain += self.table.theta_for(n) * self.table.post.get(ngram, 0.0)
            entries[y] = -gain
        posterior = Posterior(entries, 0.0)
        self._cache[context] = posterior
        return posterior
