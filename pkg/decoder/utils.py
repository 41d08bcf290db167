import os
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from decoder.errors import ParseError

UNK_ID = 0
BOS_ID = 1
EOS_ID = 2

INF = float("inf")

RESERVED_SYMBOLS = {"<unk>": UNK_ID, "<s>": BOS_ID, "</s>": EOS_ID}


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)


def fill_template(path: str, sen_id: int) -> str:
    """Substitutes ``%d`` in ``path`` with the 1-based id of the
    0-based sentence ``sen_id``.
    """
    if "%d" in path:
        return path.replace("%d", str(sen_id + 1))
    return path


def load_wmap(path: str) -> Dict[str, int]:
    """Reads a word map with one ``<surface-form> <id>`` pair per line."""
    wmap: Dict[str, int] = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ParseError("word map lines must be '<word> <id>'", path=path, line=line_no)
            try:
                word_id = int(parts[1])
            except ValueError:
                raise ParseError(f"non-integer word id '{parts[1]}'", path=path, line=line_no)
            if word_id < 0:
                raise ParseError("word ids must be non-negative", path=path, line=line_no)
            wmap[parts[0]] = word_id
    return wmap


def invert_wmap(wmap: Dict[str, int]) -> Dict[int, str]:
    return {word_id: word for word, word_id in wmap.items()}


def parse_token(word: str, wmap: Optional[Dict[str, int]] = None) -> int:
    """Maps a surface form to a token id. Without a word map the form
    must be an integer id or one of the reserved symbols.
    """
    if word in RESERVED_SYMBOLS:
        return RESERVED_SYMBOLS[word]
    if wmap is not None:
        return wmap.get(word, UNK_ID)
    token = int(word)
    if token < 0:
        raise ValueError(f"negative token id {token}")
    return token


def render_tokens(tokens: Iterable[int], id2word: Optional[Dict[int, str]] = None) -> str:
    """Space-joins ``tokens`` without EOS. Ids missing from ``id2word``
    are rendered with the UNK surface form.
    """
    words: List[str] = []
    unk = (id2word or {}).get(UNK_ID, "<unk>")
    for token in tokens:
        if token == EOS_ID:
            continue
        if id2word is None:
            words.append(str(token))
        else:
            words.append(id2word.get(token, unk))
    return " ".join(words)


def read_sentences(path: str, wmap: Optional[Dict[str, int]] = None) -> List[List[int]]:
    """Reads a source corpus, one whitespace-separated sentence per line."""
    p = Path(path)
    if not p.exists():
        raise ParseError("source file not found", path=path)
    sentences: List[List[int]] = []
    with p.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            try:
                sentences.append([parse_token(w, wmap) for w in line.split()])
            except ValueError as e:
                raise ParseError(f"bad source token: {e}", path=path, line=line_no)
    return sentences
