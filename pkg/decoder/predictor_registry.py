import logging
import threading
from typing import Any, Callable, Dict, List, Optional, Tuple

from decoder.arpa import ArpaModel, arpa_load_file
from decoder.automata import WeightedAutomaton, load_att_file
from decoder.config import PredictorSpec, RunConfig
from decoder.core import Predictor
from decoder.errors import ParseError
from decoder.predictors import (
    FstPredictor,
    LexPredictor,
    LexTable,
    LmPredictor,
    NgramPosteriorPredictor,
    NgramPosteriorTable,
    WordCountPredictor,
    load_lex_table,
    load_ngram_posteriors,
)
from decoder.utils import fill_template, load_wmap

logger = logging.getLogger(__name__)


def _read_lex_table(path: str) -> LexTable:
    try:
        with open(path, encoding="utf-8") as f:
            return load_lex_table(f)
    except FileNotFoundError:
        raise ParseError("lexical table not found", path=path)


def _read_ngram_table(path: str, theta: Tuple[float, ...]) -> NgramPosteriorTable:
    try:
        with open(path, encoding="utf-8") as f:
            return load_ngram_posteriors(f, theta=theta)
    except FileNotFoundError:
        raise ParseError("n-gram posterior file not found", path=path)


class PredictorRegistry:
    """
    Loads model data once and shares it read-only between sentences.
    Resources behind ``%d`` path templates belong to a single sentence
    and are loaded fresh for it without being cached. Predictor
    instances are created fresh for every sentence.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.trg_wmap: Optional[Dict[str, int]] = load_wmap(config.trg_wmap) if config.trg_wmap else None
        self._resources: Dict[Tuple[Any, ...], Any] = {}
        self._lock = threading.Lock()

    def _resource(self, key: Tuple[Any, ...], template: str, sen_id: int, loader: Callable[[str], Any]) -> Any:
        path = fill_template(template, sen_id)
        if path != template:
            logger.debug("Loading %s for sentence %d from %s", key[0], sen_id + 1, path)
            return loader(path)
        key = key + (path,)
        with self._lock:
            if key in self._resources:
                return self._resources[key]
        logger.debug("Loading %s from %s", key[0], path)
        # concurrent first loads may both read the file; the first stored wins
        value = loader(path)
        with self._lock:
            return self._resources.setdefault(key, value)

    def automaton(self, template: str, sen_id: int, weights: Tuple[float, ...] = ()) -> WeightedAutomaton:
        return self._resource(("fst", weights), template, sen_id, lambda p: load_att_file(p, weights))

    def language_model(self, template: str, sen_id: int, floor: float) -> ArpaModel:
        return self._resource(
            ("lm", floor), template, sen_id, lambda p: arpa_load_file(p, wmap=self.trg_wmap, floor=floor)
        )

    def lex_table(self, template: str, sen_id: int) -> LexTable:
        return self._resource(("lex",), template, sen_id, _read_lex_table)

    def ngram_table(self, template: str, sen_id: int, theta: Tuple[float, ...]) -> NgramPosteriorTable:
        return self._resource(("ngram", theta), template, sen_id, lambda p: _read_ngram_table(p, theta))

    def preload(self) -> None:
        """Loads every sentence-independent resource so missing or
        malformed files fail before decoding starts.
        """
        for spec in self.config.predictors:
            path = spec.options.get("path")
            if path and "%d" not in path:
                self._create(spec, 0)

    def _create(self, spec: PredictorSpec, sen_id: int) -> Predictor:
        opts = spec.options
        if spec.kind == "fst":
            return FstPredictor(self.automaton(opts["path"], sen_id, tuple(opts["weights"])))
        if spec.kind == "lm":
            return LmPredictor(self.language_model(opts["path"], sen_id, opts["floor"]))
        if spec.kind == "lex":
            return LexPredictor(self.lex_table(opts["path"], sen_id), opts["floor"], opts["p_eos"])
        if spec.kind == "wc":
            return WordCountPredictor(opts["penalty"])
        if spec.kind == "ngram":
            return NgramPosteriorPredictor(self.ngram_table(opts["path"], sen_id, tuple(opts["theta"])))
        raise ValueError(f"unknown predictor kind '{spec.kind}'")

    def build(self, sen_id: int) -> List[Predictor]:
        """Fresh predictors for the 0-based sentence ``sen_id``."""
        predictors = []
        for spec in self.config.predictors:
            predictor = self._create(spec, sen_id)
            predictor.set_current_sen_id(sen_id)
            predictors.append(predictor)
        return predictors
