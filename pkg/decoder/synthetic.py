"""Synthetic rescoring suite: random layered lattices rescored with a
bigram language model that knows nothing about the lattice weights.
"""

import logging
from pathlib import Path
from typing import List, Sequence

import numpy as np

from decoder.automata import Arc, WeightedAutomaton, write_att
from decoder.utils import ensure_dir

logger = logging.getLogger(__name__)

FIRST_WORD_ID = 3


def random_layered_lattice(rng: np.random.Generator, vocab: Sequence[int], levels: int = 5, width: int = 4) -> WeightedAutomaton:
    """Start state, then ``levels`` layers of ``width`` states. Every
    state has ``width`` arcs with distinct labels into the next layer;
    the last layer is final with weight 0.
    """
    if width > len(vocab):
        raise ValueError(f"width {width} exceeds the vocabulary size {len(vocab)}")
    num_states = 1 + levels * width
    arcs: List[List[Arc]] = [[] for _ in range(num_states)]
    layer = [0]
    for level in range(levels):
        next_layer = [1 + level * width + i for i in range(width)]
        for state in layer:
            labels = rng.choice(np.asarray(vocab), size=width, replace=False)
            targets = rng.permutation(next_layer)
            weights = np.round(rng.uniform(0.5, 1.5, size=width), 6)
            arcs[state] = [
                Arc(int(label), int(target), float(weight))
                for label, target, weight in sorted(zip(labels, targets, weights))
            ]
        layer = next_layer
    return WeightedAutomaton(
        num_states=num_states,
        start=0,
        arcs=tuple(tuple(a) for a in arcs),
        finals={state: 0.0 for state in layer},
    )


def random_bigram_arpa(rng: np.random.Generator, vocab: Sequence[int], alpha: float = 2.0) -> str:
    """Full bigram ARPA text. Every context (``<s>`` and each word) has
    an explicit entry for every word and ``</s>``, so no backoff occurs.
    """
    words = [str(w) for w in vocab] + ["</s>"]

    def log10_dist() -> np.ndarray:
        p = rng.dirichlet(np.full(len(words), alpha))
        return np.round(np.log10(np.maximum(p, 1e-12)), 6)

    unigram = log10_dist()
    lines = ["\\data\\", f"ngram 1={len(words) + 1}", f"ngram 2={len(words) * len(words)}", "", "\\1-grams:"]
    lines.append("-99.000000\t<s>\t0.000000")
    for word, logp in zip(words, unigram):
        backoff = "" if word == "</s>" else "\t0.000000"
        lines.append(f"{logp:.6f}\t{word}{backoff}")
    lines += ["", "\\2-grams:"]
    for context in ["<s>"] + words[:-1]:
        for word, logp in zip(words, log10_dist()):
            lines.append(f"{logp:.6f}\t{context} {word}")
    lines += ["", "\\end\\"]
    return "\n".join(lines) + "\n"


def generate_suite(
    directory: str,
    sentences: int = 100,
    seed: int = 1,
    levels: int = 5,
    width: int = 4,
    vocab_size: int = 8,
) -> Path:
    """Writes src.txt, lm.arpa, lattices/<id>.fst.txt and analyze.conf
    under ``directory``. Returns the path of analyze.conf.
    """
    root = Path(directory).resolve()
    ensure_dir(str(root / "lattices"))
    rng = np.random.default_rng(seed)
    vocab = list(range(FIRST_WORD_ID, FIRST_WORD_ID + vocab_size))

    (root / "lm.arpa").write_text(random_bigram_arpa(rng, vocab), encoding="utf-8")
    src_lines = []
    for sen_id in range(sentences):
        length = int(rng.integers(3, 7))
        src_lines.append(" ".join(str(int(t)) for t in rng.choice(vocab, size=length)))
        lattice = random_layered_lattice(rng, vocab, levels=levels, width=width)
        (root / "lattices" / f"{sen_id + 1}.fst.txt").write_text(write_att(lattice), encoding="utf-8")
    (root / "src.txt").write_text("".join(line + "\n" for line in src_lines), encoding="utf-8")

    conf = root / "analyze.conf"
    conf.write_text(
        f"# synthetic rescoring suite (seed {seed})\n"
        "predictors = fst,lm\n"
        "predictor_weights = 1.0,1.0\n"
        f"src_test = {root / 'src.txt'}\n"
        f"fst_path = {root / 'lattices'}/%d.fst.txt\n"
        f"lm_path = {root / 'lm.arpa'}\n"
        "strategies = greedy,beam4,beam20,dfs,exhaustive\n"
        f"output_dir = {root / 'analyze'}\n",
        encoding="utf-8",
    )
    logger.info("Wrote %d sentences of synthetic suite to %s", sentences, root)
    return conf
