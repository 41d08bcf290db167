"""Backoff n-gram language models in ARPA format.

The file stores log10 probabilities and backoff weights. Costs served
to the decoder are negated natural logs: ``cost = -ln(10 ** log10_p)``.
"""

from dataclasses import dataclass, field
import logging
import math
import re
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

from decoder.errors import ParseError
from decoder.utils import BOS_ID, RESERVED_SYMBOLS, UNK_ID

logger = logging.getLogger(__name__)

LN10 = math.log(10.0)
MAX_ORDER = 5
DEFAULT_FLOOR = 20.0

_COUNT_RE = re.compile(r"^ngram\s+(\d+)\s*=\s*(\d+)$")
_SECTION_RE = re.compile(r"^\\(\d+)-grams:$")

Ngram = Tuple[int, ...]


@dataclass(frozen=True)
class ArpaModel:
    order: int
    prob: Dict[Ngram, float]
    backoff: Dict[Ngram, float] = field(default_factory=dict)
    floor: float = DEFAULT_FLOOR

    @property
    def vocabulary(self) -> Tuple[int, ...]:
        """Unigram tokens the model can predict (BOS excluded)."""
        return tuple(sorted(g[0] for g in self.prob if len(g) == 1 and g[0] != BOS_ID))

    @property
    def admissible(self) -> bool:
        return all(p <= 0.0 for p in self.prob.values())

    def cost(self, history: Sequence[int], token: int) -> float:
        return lm_cost(self, history, token)


def lm_cost(m: ArpaModel, history: Sequence[int], token: int) -> float:
    """Katz backoff cost of ``token`` after ``history``. Only the last
    ``order - 1`` history tokens are used. A unigram miss falls back to
    the UNK unigram, or to the floor cost if the model has none.
    """
    context: Ngram = tuple(history[max(0, len(history) - m.order + 1):]) if m.order > 1 else ()
    cost = 0.0
    while True:
        logp = m.prob.get(context + (token,))
        if logp is not None:
            return cost - logp * LN10
        if not context:
            unk = m.prob.get((UNK_ID,))
            return cost + (m.floor if unk is None else -unk * LN10)
        cost -= m.backoff.get(context, 0.0) * LN10
        context = context[1:]


def _word_to_id(word: str, wmap: Optional[Dict[str, int]]) -> int:
    if word in RESERVED_SYMBOLS:
        return RESERVED_SYMBOLS[word]
    if wmap is not None:
        if word not in wmap:
            raise ValueError(f"word '{word}' not in the target word map")
        return wmap[word]
    token = int(word)
    if token < 0:
        raise ValueError(f"negative token id {token}")
    return token


def arpa_load(
    stream: Union[TextIO, Iterable[str]],
    wmap: Optional[Dict[str, int]] = None,
    floor: float = DEFAULT_FLOOR,
) -> ArpaModel:
    """Reads an ARPA file. Words are integer token ids or reserved
    symbols (``<s>``, ``</s>``, ``<unk>``) unless a target word map is
    given.
    """
    source = getattr(stream, "name", None)
    lines = [line.strip() for line in stream]
    pos = 0

    def fail(message: str, line_idx: Optional[int] = None) -> ParseError:
        return ParseError(message, path=source, line=(line_idx + 1) if line_idx is not None else None)

    while pos < len(lines) and lines[pos] != "\\data\\":
        pos += 1
    if pos == len(lines):
        raise fail("missing \\data\\ section")
    pos += 1

    counts: Dict[int, int] = {}
    while pos < len(lines) and not lines[pos].startswith("\\"):
        if lines[pos]:
            match = _COUNT_RE.match(lines[pos])
            if not match:
                raise fail(f"malformed count line '{lines[pos]}'", pos)
            counts[int(match.group(1))] = int(match.group(2))
        pos += 1
    if not counts:
        raise fail("no n-gram counts in \\data\\ section")
    order = max(counts)
    if order > MAX_ORDER:
        raise fail(f"order {order} exceeds the maximum of {MAX_ORDER}")
    if sorted(counts) != list(range(1, order + 1)):
        raise fail(f"n-gram counts must cover orders 1..{order}")

    prob: Dict[Ngram, float] = {}
    backoff: Dict[Ngram, float] = {}
    seen_sections: List[int] = []
    ended = False
    while pos < len(lines):
        header = lines[pos]
        if not header:
            pos += 1
            continue
        if header == "\\end\\":
            ended = True
            break
        match = _SECTION_RE.match(header)
        if not match:
            raise fail(f"expected an n-gram section header, got '{header}'", pos)
        n = int(match.group(1))
        if n not in counts:
            raise fail(f"section for undeclared order {n}", pos)
        if n in seen_sections:
            raise fail(f"duplicate section for order {n}", pos)
        seen_sections.append(n)
        header_pos = pos
        pos += 1
        found = 0
        while pos < len(lines) and lines[pos] and not lines[pos].startswith("\\"):
            fields = lines[pos].split()
            if len(fields) not in (n + 1, n + 2):
                raise fail(f"expected {n} words in a {n}-gram line", pos)
            try:
                logp = float(fields[0])
                ngram = tuple(_word_to_id(w, wmap) for w in fields[1:n + 1])
                bo = float(fields[n + 1]) if len(fields) == n + 2 else None
            except ValueError as e:
                raise fail(str(e), pos)
            if n > 1 and ngram[:-1] not in prob:
                raise fail(f"prefix of {n}-gram '{' '.join(fields[1:n + 1])}' is missing", pos)
            prob[ngram] = logp
            if bo is not None:
                backoff[ngram] = bo
            found += 1
            pos += 1
        if found != counts[n]:
            raise fail(f"declared {counts[n]} {n}-grams but found {found}", header_pos)

    if not ended:
        raise fail("missing \\end\\ marker")
    missing = [n for n in counts if n not in seen_sections]
    if missing:
        raise fail(f"missing section(s) for order(s) {missing}")
    logger.debug("Loaded %d-gram model with %d n-grams", order, len(prob))
    return ArpaModel(order=order, prob=prob, backoff=backoff, floor=floor)


def arpa_load_file(path: str, wmap: Optional[Dict[str, int]] = None, floor: float = DEFAULT_FLOOR) -> ArpaModel:
    try:
        with open(path, encoding="utf-8") as f:
            return arpa_load(f, wmap=wmap, floor=floor)
    except FileNotFoundError:
        raise ParseError("ARPA file not found", path=path)
