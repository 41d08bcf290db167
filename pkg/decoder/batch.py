from concurrent.futures import ThreadPoolExecutor
import logging
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, TypeVar

from decoder.automata import write_att, write_sparse_att
from decoder.config import RunConfig
from decoder.core import Predictor
from decoder.models import DecodeResult
from decoder.output import (
    build_hypothesis_lattice,
    compute_ngram_posteriors,
    write_nbest,
    write_ngram_posteriors,
    write_text,
)
from decoder.output_store import SentenceOutput
from decoder.predictor_registry import PredictorRegistry
from decoder.search import decode
from decoder.utils import INF, invert_wmap

logger = logging.getLogger(__name__)

T = TypeVar("T")

# (label, decoder name, beam size)
Strategy = Tuple[str, str, int]


def parse_strategy(label: str, default_beam: int) -> Strategy:
    if label.startswith("beam"):
        return label, "beam", int(label[4:]) if label[4:] else default_beam
    return label, label, default_beam


class BatchDecoder:
    """
    Decodes a corpus sentence by sentence. Each sentence gets its own
    predictor instances; with ``jobs > 1`` sentences run on a thread
    pool and results are still returned in sentence order.
    """

    def __init__(self, config: RunConfig, registry: PredictorRegistry):
        self.config = config
        self.registry = registry
        self.id2word = invert_wmap(registry.trg_wmap) if registry.trg_wmap else None

    def _predictors(self, sen_id: int, src: Sequence[int]) -> List[Predictor]:
        predictors = self.registry.build(sen_id)
        for predictor in predictors:
            predictor.initialize(src)
        return predictors

    def decode_sentence(
        self,
        sen_id: int,
        src: Sequence[int],
        decoder: Optional[str] = None,
        beam: Optional[int] = None,
    ) -> DecodeResult:
        cfg = self.config
        return decode(
            decoder or cfg.decoder,
            self._predictors(sen_id, src),
            cfg.predictor_weights,
            cfg.max_len(len(src)),
            beam=beam or cfg.beam,
            budget=cfg.exhaustive_budget,
        )

    def format_sentence(self, sen_id: int, src: Sequence[int]) -> SentenceOutput:
        cfg = self.config
        result = self.decode_sentence(sen_id, src)
        logger.info(
            "Sentence %d: %d hypotheses, best cost %.6f, %d expansions",
            sen_id + 1, len(result.hypotheses), result.best_cost, result.stats.expansions,
        )
        out = SentenceOutput(sen_id)
        if "text" in cfg.outputs:
            out.text = write_text(result, self.id2word)
        if "nbest" in cfg.outputs:
            out.nbest = write_nbest(
                result, sen_id, cfg.names, self.id2word, size=cfg.nbest_size, precision=cfg.nbest_precision
            )
        # forced-EOS hypotheses at +inf carry no probability mass
        if any(h.total_cost != INF for h in result.hypotheses):
            if "sfst" in cfg.outputs or "fst" in cfg.outputs:
                lattice = build_hypothesis_lattice(result, cfg.predictor_weights, eos_arcs=cfg.lattice_eos_arcs)
                if "sfst" in cfg.outputs:
                    out.files["sfst"] = write_att(lattice)
                if "fst" in cfg.outputs:
                    out.files["fst"] = write_sparse_att(lattice)
            if "ngram" in cfg.outputs:
                table = compute_ngram_posteriors(result, cfg.ngram_order, occurrence=cfg.ngram_occurrence)
                out.files["ngram"] = write_ngram_posteriors(table)
        else:
            logger.warning("Sentence %d has no finite-cost hypothesis, writing empty lattice files", sen_id + 1)
            out.files.update({fmt: "" for fmt in ("sfst", "fst", "ngram") if fmt in cfg.outputs})
        return out

    def compare_sentence(self, sen_id: int, src: Sequence[int], strategies: Sequence[Strategy]) -> Dict[str, DecodeResult]:
        return {
            label: self.decode_sentence(sen_id, src, decoder=decoder, beam=beam)
            for label, decoder, beam in strategies
        }

    def map(self, fn: Callable[[int, List[int]], T], sentences: Iterable[Tuple[int, List[int]]]) -> Iterator[T]:
        if self.config.jobs <= 1:
            for sen_id, src in sentences:
                yield fn(sen_id, src)
            return
        with ThreadPoolExecutor(max_workers=self.config.jobs) as pool:
            yield from pool.map(lambda item: fn(*item), sentences)
