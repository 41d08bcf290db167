"""Output formats: plain text, n-best lists, hypothesis lattices with
standard or sparse tuple arcs, and n-gram posteriors.
"""

from collections import Counter
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from decoder.automata import Arc, SparseTupleWeight, WeightedAutomaton
from decoder.core import weighted_sum
from decoder.errors import DataError
from decoder.models import DecodeResult
from decoder.predictors import NgramPosteriorTable
from decoder.utils import EOS_ID, render_tokens

logger = logging.getLogger(__name__)

FORMATS = ("text", "nbest", "sfst", "fst", "ngram")


def write_text(result: DecodeResult, id2word: Optional[Dict[int, str]] = None) -> str:
    """First best hypothesis without EOS, as one line."""
    if not result.hypotheses:
        logger.warning("Empty decoding result, writing an empty line")
        return ""
    return render_tokens(result.hypotheses[0].tokens, id2word)


def write_nbest(
    result: DecodeResult,
    sen_id: int,
    names: Sequence[str],
    id2word: Optional[Dict[int, str]] = None,
    size: int = 0,
    precision: int = 6,
) -> List[str]:
    """``<id> ||| <tokens> ||| <name>= <cost> ... ||| <total>`` lines,
    best first. ``size`` 0 keeps every hypothesis.
    """
    hypotheses = result.hypotheses[:size] if size > 0 else result.hypotheses
    lines = []
    for hyp in hypotheses:
        scores = " ".join(f"{name}= {cost:.{precision}f}" for name, cost in zip(names, hyp.breakdown))
        lines.append(
            f"{sen_id} ||| {render_tokens(hyp.tokens, id2word)} ||| {scores} ||| {hyp.total_cost:.{precision}f}"
        )
    return lines


def build_hypothesis_lattice(
    result: DecodeResult,
    weights: Sequence[float],
    eos_arcs: bool = True,
) -> WeightedAutomaton:
    """Prefix tree of the complete hypotheses. Each arc carries the
    combined step cost and the per-predictor step costs as a sparse
    tuple. States are numbered in insertion order with the root at 0.

    With ``eos_arcs`` the EOS step is an arc into a final state of
    weight 0. Otherwise the EOS step cost becomes the final weight of
    the last real token's state, which gives an EOS-free acceptor the
    fst predictor can load.
    """
    if not result.hypotheses:
        raise DataError("cannot build a lattice from an empty result")
    arcs: List[List[Arc]] = [[]]
    children: List[Dict[int, int]] = [{}]
    finals: Dict[int, float] = {}
    final_components: Dict[int, SparseTupleWeight] = {}

    for hyp in result.hypotheses:
        if hyp.total_cost == float("inf"):
            logger.warning("Skipping blocked hypothesis %s in lattice", list(hyp.tokens))
            continue
        state = 0
        steps = list(zip(hyp.tokens, hyp.step_costs))
        if not eos_arcs and steps and steps[-1][0] == EOS_ID:
            _, eos_costs = steps.pop()
        else:
            eos_costs = None
        for token, costs in steps:
            next_state = children[state].get(token)
            if next_state is None:
                next_state = len(arcs)
                arcs.append([])
                children.append({})
                children[state][token] = next_state
                arcs[state].append(
                    Arc(token, next_state, weighted_sum(weights, costs), SparseTupleWeight.from_costs(costs, weights))
                )
            state = next_state
        if eos_costs is None:
            finals[state] = 0.0
        else:
            finals[state] = weighted_sum(weights, eos_costs)
            final_components[state] = SparseTupleWeight.from_costs(eos_costs, weights)

    return WeightedAutomaton(
        num_states=len(arcs),
        start=0,
        arcs=tuple(tuple(a) for a in arcs),
        finals=finals,
        final_components=final_components,
    )


def _ngrams(tokens: Sequence[int], max_order: int) -> List[Tuple[int, ...]]:
    tokens = [t for t in tokens if t != EOS_ID]
    return [
        tuple(tokens[start:start + n])
        for n in range(1, max_order + 1)
        for start in range(len(tokens) - n + 1)
    ]


def compute_ngram_posteriors(
    result: DecodeResult,
    max_order: int,
    occurrence: bool = False,
) -> NgramPosteriorTable:
    """Posterior probability of each n-gram under the distribution
    ``p(h) ~ exp(-total_cost(h))`` over the returned hypotheses. An
    n-gram counts once per hypothesis unless ``occurrence`` is set, in
    which case the values are expected counts.
    """
    if not 1 <= max_order <= 5:
        raise ValueError(f"n-gram order must be in 1..5, got {max_order}")
    if not result.hypotheses:
        raise DataError("cannot compute n-gram posteriors of an empty result")
    costs = np.array([h.total_cost for h in result.hypotheses], dtype=np.float64)
    finite = np.isfinite(costs)
    if not finite.any():
        raise DataError("all hypotheses are blocked, no normalizable distribution")
    probs = np.zeros_like(costs)
    probs[finite] = np.exp(-(costs[finite] - costs[finite].min()))
    z = float(probs.sum())

    post: Dict[Tuple[int, ...], float] = {}
    for hyp, p in zip(result.hypotheses, probs):
        if p == 0.0:
            continue
        grams = _ngrams(hyp.tokens, max_order)
        counts = Counter(grams) if occurrence else Counter(set(grams))
        for gram, count in counts.items():
            post[gram] = post.get(gram, 0.0) + float(p) * count
    return NgramPosteriorTable(max_order=max_order, post={g: v / z for g, v in post.items()})


def write_ngram_posteriors(table: NgramPosteriorTable) -> str:
    """``tok1 ... tokn : <posterior>`` lines sorted by order, then ids."""
    return "".join(
        f"{' '.join(str(t) for t in gram)} : {table.post[gram]:.6f}\n"
        for gram in sorted(table.post, key=lambda g: (len(g), g))
    )
