from pathlib import Path
from typing import Dict, List, Optional, Sequence

from decoder.utils import ensure_dir


class SentenceOutput:
    """Formatted outputs of one sentence, buffered until commit."""

    def __init__(self, sen_id: int):
        self.sen_id = sen_id
        self.text: Optional[str] = None
        self.nbest: List[str] = []
        # format name -> file content (sfst, fst, ngram)
        self.files: Dict[str, str] = {}


class OutputStore:
    """
    Writes per-sentence outputs under the output directory:
    out.text, out.nbest, out.sfst/<id>.fst.txt, out.fst/<id>.fst.txt
    and out.ngram/<id>.ngram, with 1-based ids in file names.
    Commits must come in sentence order.
    """

    SUFFIXES = {"sfst": ".fst.txt", "fst": ".fst.txt", "ngram": ".ngram"}

    def __init__(self, output_dir: str, outputs: Sequence[str]):
        self.root = Path(output_dir)
        self.outputs = list(outputs)
        ensure_dir(str(self.root))
        for fmt in self.SUFFIXES:
            if fmt in self.outputs:
                ensure_dir(str(self.root / f"out.{fmt}"))
        self._text = (self.root / "out.text").open("w", encoding="utf-8") if "text" in self.outputs else None
        self._nbest = (self.root / "out.nbest").open("w", encoding="utf-8") if "nbest" in self.outputs else None
        self._last_id = -1

    def commit(self, out: SentenceOutput) -> None:
        if out.sen_id <= self._last_id:
            raise RuntimeError(f"sentence {out.sen_id} committed after {self._last_id}")
        self._last_id = out.sen_id
        if self._text is not None:
            self._text.write((out.text or "") + "\n")
        if self._nbest is not None:
            for line in out.nbest:
                self._nbest.write(line + "\n")
        for fmt, content in out.files.items():
            path = self.root / f"out.{fmt}" / f"{out.sen_id + 1}{self.SUFFIXES[fmt]}"
            path.write_text(content, encoding="utf-8")

    def close(self) -> None:
        for f in (self._text, self._nbest):
            if f is not None:
                f.close()

    def __enter__(self) -> "OutputStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
