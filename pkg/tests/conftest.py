"""Shared fixtures: hand-built automata and models plus a seeded factory
of small random decoding instances.
"""

from dataclasses import dataclass
import io
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
import pytest

from decoder.arpa import ArpaModel
from decoder.automata import Arc, WeightedAutomaton, load_att
from decoder.core import Predictor
from decoder.predictors import FstPredictor, LexPredictor, LexTable, LmPredictor, WordCountPredictor
from decoder.utils import BOS_ID, EOS_ID, INF

# labels used by the random instances
LABELS = (3, 4, 5, 6, 7, 8)

CHAIN_ATT = "0 1 3 0.7\n1\n"
DIAMOND_ATT = "0 1 3 1.0\n0 2 4 2.0\n1 3 5 0.5\n2 3 5 0.2\n3\n"

# full-precision log10 values keep costs exact to 1e-9
HALF = repr(math.log10(0.5))
QUARTER = repr(math.log10(0.25))

# consistent bigram model over {3, 4, </s>}; 3 has no (3, 3) bigram
BIGRAM_ARPA = f"""\\data\\
ngram 1=4
ngram 2=4

\\1-grams:
-99.0 <s> 0.0
{HALF} 3 0.0
{QUARTER} 4 0.0
{QUARTER} </s>

\\2-grams:
{HALF} <s> 3
{QUARTER} 3 4
{QUARTER} 3 </s>
{HALF} 4 3

\\end\\
"""


def att(text: str) -> WeightedAutomaton:
    return load_att(io.StringIO(text))


@pytest.fixture
def chain() -> WeightedAutomaton:
    return att(CHAIN_ATT)


@pytest.fixture
def diamond() -> WeightedAutomaton:
    return att(DIAMOND_ATT)


def random_dag(rng: np.random.Generator, max_states: int = 8, max_arcs: int = 3) -> WeightedAutomaton:
    """Deterministic acyclic acceptor; arcs only go to higher states."""
    n = int(rng.integers(2, max_states + 1))
    arcs: List[List[Arc]] = [[] for _ in range(n)]
    for state in range(n - 1):
        k = int(rng.integers(1, max_arcs + 1))
        labels = rng.choice(LABELS, size=k, replace=False)
        for label in sorted(int(x) for x in labels):
            target = int(rng.integers(state + 1, n))
            arcs[state].append(Arc(label, target, round(float(rng.uniform(0.0, 2.0)), 6)))
    finals = {n - 1: round(float(rng.uniform(0.0, 1.0)), 6)}
    for state in range(1, n - 1):
        if rng.random() < 0.3:
            finals[state] = round(float(rng.uniform(0.0, 1.0)), 6)
    return WeightedAutomaton(num_states=n, start=0, arcs=tuple(tuple(a) for a in arcs), finals=finals)


def random_bigram_model(rng: np.random.Generator) -> ArpaModel:
    """Bigram model with random backoff structure; every probability
    and backoff weight is at most 1, so all costs are non-negative.
    """
    vocab = list(LABELS) + [EOS_ID]
    prob: Dict[Tuple[int, ...], float] = {(BOS_ID,): -99.0}
    backoff: Dict[Tuple[int, ...], float] = {}
    for t in vocab:
        prob[(t,)] = float(np.log10(rng.uniform(0.05, 1.0)))
    for h in [BOS_ID] + list(LABELS):
        backoff[(h,)] = float(np.log10(rng.uniform(0.1, 1.0)))
        for t in vocab:
            if rng.random() < 0.5:
                prob[(h, t)] = float(np.log10(rng.uniform(0.05, 1.0)))
    return ArpaModel(order=2, prob=prob, backoff=backoff)


def random_lex_table(rng: np.random.Generator) -> LexTable:
    t = {}
    for src in LABELS:
        targets = rng.choice(LABELS, size=3, replace=False)
        mass = rng.dirichlet(np.ones(4))[:3]
        for trg, p in zip(targets, mass):
            if p > 1e-6:
                t[(int(src), int(trg))] = float(p)
    return LexTable(t)


@dataclass
class Instance:
    automaton: WeightedAutomaton
    model: Optional[ArpaModel]
    lex: Optional[LexTable]
    penalty: Optional[float]
    weights: List[float]
    max_len: int
    src: List[int]

    def predictors(self) -> List[Predictor]:
        """Fresh, initialized predictors in weight order."""
        predictors: List[Predictor] = [FstPredictor(self.automaton)]
        if self.model is not None:
            predictors.append(LmPredictor(self.model))
        if self.lex is not None:
            predictors.append(LexPredictor(self.lex))
        if self.penalty is not None:
            predictors.append(WordCountPredictor(self.penalty))
        for p in predictors:
            p.initialize(self.src)
        return predictors


def make_instance(seed: int) -> Instance:
    rng = np.random.default_rng(seed)
    automaton = random_dag(rng)
    model = random_bigram_model(rng) if rng.random() < 0.8 else None
    lex = random_lex_table(rng) if rng.random() < 0.5 else None
    penalty = round(float(rng.uniform(0.0, 1.0)), 3) if rng.random() < 0.5 else None
    n = 1 + sum(x is not None for x in (model, lex, penalty))
    weights = [round(float(w), 3) for w in rng.uniform(0.1, 2.0, size=n)]
    src = [int(x) for x in rng.choice(LABELS, size=int(rng.integers(1, 5)))]
    return Instance(automaton, model, lex, penalty, weights, int(rng.integers(3, 11)), src)


@pytest.fixture
def random_instance():
    return make_instance


def enumerate_paths(a: WeightedAutomaton, max_tokens: int = 12) -> Dict[Tuple[int, ...], float]:
    """Brute-force cheapest cost of every accepted label sequence."""
    paths: Dict[Tuple[int, ...], float] = {}
    stack = [(a.start, (), 0.0)]
    while stack:
        state, labels, cost = stack.pop()
        if state in a.finals:
            total = cost + a.finals[state]
            paths[labels] = min(paths.get(labels, INF), total)
        if len(labels) >= max_tokens:
            continue
        for arc in a.arcs[state]:
            stack.append((arc.next_state, labels + (arc.label,), cost + arc.weight))
    return paths


def brute_force_best(instance: Instance) -> float:
    """Cheapest combined cost over every token sequence the automaton
    accepts within max_len, scored by stepping the predictors directly.
    """
    best = INF
    for labels in enumerate_paths(instance.automaton, instance.max_len - 1):
        predictors = instance.predictors()
        breakdown = [0.0] * len(predictors)
        for token in labels + (EOS_ID,):
            for k, p in enumerate(predictors):
                breakdown[k] += p.predict_next().lookup(token)
            if token != EOS_ID:
                for p in predictors:
                    p.consume(token)
        total = 0.0
        for w, c in zip(instance.weights, breakdown):
            total = INF if c == INF else total + w * c
        best = min(best, total)
    return best
