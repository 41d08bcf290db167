"""Weighted finite-state acceptors over target tokens.

Arc weights are tropical costs: a path costs the sum of its arc
weights plus the final weight of its last state, and the best path is
the cheapest one. There are no epsilon arcs. End of sequence is
expressed by final weights, so loaded automata never carry EOS labels.

Text format (AT&T style, acceptors only)::

    src dst label [weight]     arc, weight defaults to 0
    state [weight]             final state, weight defaults to 0

The source state of the first line is the start state.
"""

from dataclasses import dataclass, field
import heapq
import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

from decoder.errors import AutomatonError, ParseError
from decoder.utils import EOS_ID, INF

logger = logging.getLogger(__name__)

EMPTY_TUPLE = "-"


@dataclass(frozen=True)
class SparseTupleWeight:
    """Per-predictor costs of one lattice arc, indexed by predictor
    position. Missing components are zero.
    """

    components: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.components.items():
            if k < 0:
                raise ValueError(f"negative component index {k}")
            if not math.isfinite(v):
                raise ValueError(f"component {k} is not finite: {v}")

    def scalar(self, weights: Sequence[float]) -> float:
        total = 0.0
        for k in sorted(self.components):
            if k >= len(weights):
                raise ValueError(f"component index {k} out of range for {len(weights)} predictors")
            total += weights[k] * self.components[k]
        return total

    @classmethod
    def from_costs(cls, costs: Sequence[float], weights: Optional[Sequence[float]] = None) -> "SparseTupleWeight":
        """Drops zero costs, and with ``weights`` the components of
        silenced (zero-weight) predictors, whose costs may be infinite.
        """
        return cls({
            k: float(c)
            for k, c in enumerate(costs)
            if c != 0.0 and (weights is None or weights[k] != 0.0)
        })


def serialize_sparse_tuple(w: SparseTupleWeight) -> str:
    if not w.components:
        return EMPTY_TUPLE
    return ",".join(f"{k}:{w.components[k]:.6f}" for k in sorted(w.components))


def parse_sparse_tuple(text: str) -> SparseTupleWeight:
    text = text.strip()
    if text == EMPTY_TUPLE:
        return SparseTupleWeight()
    components: Dict[int, float] = {}
    for pair in text.split(","):
        key, sep, value = pair.partition(":")
        if not sep:
            raise ParseError(f"malformed tuple component '{pair}'")
        try:
            k = int(key)
            v = float(value)
        except ValueError:
            raise ParseError(f"malformed tuple component '{pair}'")
        if k < 0 or not math.isfinite(v):
            raise ParseError(f"invalid tuple component '{pair}'")
        if k in components:
            raise ParseError(f"duplicate tuple index {k}")
        components[k] = v
    return SparseTupleWeight(components)


@dataclass(frozen=True)
class Arc:
    label: int
    next_state: int
    weight: float
    components: Optional[SparseTupleWeight] = None


@dataclass(frozen=True)
class WeightedAutomaton:
    num_states: int
    start: int
    arcs: Tuple[Tuple[Arc, ...], ...]
    finals: Dict[int, float] = field(default_factory=dict)
    final_components: Dict[int, SparseTupleWeight] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.start < self.num_states:
            raise AutomatonError(f"start state {self.start} out of range")
        if len(self.arcs) != self.num_states:
            raise AutomatonError(f"{len(self.arcs)} arc lists for {self.num_states} states")
        for state, arcs in enumerate(self.arcs):
            for arc in arcs:
                if not 0 <= arc.next_state < self.num_states:
                    raise AutomatonError(f"arc {state}->{arc.next_state} leaves the automaton")
        for state in self.finals:
            if not 0 <= state < self.num_states:
                raise AutomatonError(f"final state {state} out of range")

    def is_final(self, state: int) -> bool:
        return state in self.finals

    def has_negative_weights(self) -> bool:
        if any(w < 0 for w in self.finals.values()):
            return True
        return any(arc.weight < 0 for arcs in self.arcs for arc in arcs)

    def num_arcs(self) -> int:
        return sum(len(arcs) for arcs in self.arcs)


@dataclass(frozen=True)
class DeterminismReport:
    state: Optional[int] = None
    label: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.state is None


def _build(
    source: str,
    arc_lines: List[Tuple[int, int, int, float, Optional[SparseTupleWeight], int]],
    final_lines: Dict[int, Tuple[float, Optional[SparseTupleWeight]]],
    mentioned: List[int],
) -> WeightedAutomaton:
    if not mentioned:
        raise ParseError("empty automaton (no start state)", path=source)
    if sorted(mentioned) == list(range(len(mentioned))):
        mapping = {s: s for s in mentioned}
    else:
        mapping = {s: i for i, s in enumerate(mentioned)}
    arcs: List[List[Arc]] = [[] for _ in mentioned]
    for src, dst, label, weight, components, _ in arc_lines:
        arcs[mapping[src]].append(Arc(label, mapping[dst], weight, components))
    finals = {mapping[s]: w for s, (w, _) in final_lines.items()}
    final_components = {mapping[s]: c for s, (_, c) in final_lines.items() if c is not None}
    return WeightedAutomaton(
        num_states=len(mentioned),
        start=mapping[mentioned[0]],
        arcs=tuple(tuple(a) for a in arcs),
        finals=finals,
        final_components=final_components,
    )


def _read_lines(
    stream: Union[TextIO, Iterable[str]],
    weights: Optional[Sequence[float]],
    allow_eos: bool,
) -> WeightedAutomaton:
    source = getattr(stream, "name", None)
    arc_lines = []
    final_lines: Dict[int, Tuple[float, Optional[SparseTupleWeight]]] = {}
    mentioned: List[int] = []
    seen = set()

    def note(state: int) -> None:
        if state not in seen:
            seen.add(state)
            mentioned.append(state)

    def parse_weight(text: str, line_no: int) -> Tuple[float, Optional[SparseTupleWeight]]:
        if weights is None:
            try:
                value = float(text)
            except ValueError:
                raise ParseError(f"non-numeric weight '{text}'", path=source, line=line_no)
            if math.isnan(value):
                raise ParseError("weight is NaN", path=source, line=line_no)
            return value, None
        try:
            components = parse_sparse_tuple(text)
            return components.scalar(weights), components
        except (ParseError, ValueError) as e:
            raise ParseError(str(e), path=source, line=line_no)

    for line_no, line in enumerate(stream, 1):
        fields = line.split()
        if not fields:
            continue
        try:
            states = [int(f) for f in fields[:2 if len(fields) >= 3 else 1]]
        except ValueError:
            raise ParseError(f"malformed line '{line.rstrip()}'", path=source, line=line_no)
        if any(s < 0 for s in states):
            raise ParseError("negative state id", path=source, line=line_no)

        if len(fields) <= 2:
            state = states[0]
            if state in final_lines:
                raise ParseError(f"state {state} declared final twice", path=source, line=line_no)
            note(state)
            if len(fields) == 2:
                final_lines[state] = parse_weight(fields[1], line_no)
            else:
                final_lines[state] = (0.0, None)
        elif len(fields) <= 4:
            src, dst = states
            try:
                label = int(fields[2])
            except ValueError:
                raise ParseError(f"non-integer label '{fields[2]}'", path=source, line=line_no)
            if label < 0:
                raise ParseError(f"negative label {label}", path=source, line=line_no)
            if label == EOS_ID and not allow_eos:
                raise AutomatonError(
                    "EOS must be expressed by final weights, not as an arc label",
                    path=source,
                    line=line_no,
                )
            weight, components = parse_weight(fields[3], line_no) if len(fields) == 4 else (0.0, None)
            note(src)
            note(dst)
            arc_lines.append((src, dst, label, weight, components, line_no))
        else:
            raise ParseError(f"too many fields in '{line.rstrip()}'", path=source, line=line_no)

    return _build(source, arc_lines, final_lines, mentioned)


def load_att(stream: Union[TextIO, Iterable[str]], allow_eos: bool = False) -> WeightedAutomaton:
    """Parses an AT&T-style acceptor. State ids are kept when they are
    dense and renumbered by first mention otherwise. ``allow_eos`` admits
    EOS arcs, which only hypothesis lattices carry.
    """
    return _read_lines(stream, None, allow_eos)


def load_sparse_att(
    stream: Union[TextIO, Iterable[str]],
    weights: Sequence[float],
    allow_eos: bool = False,
) -> WeightedAutomaton:
    """Parses a lattice whose weights are sparse tuples. Scalar weights
    are dot(weights, components).
    """
    return _read_lines(stream, weights, allow_eos)


def load_att_file(path: str, weights: Optional[Sequence[float]] = None) -> WeightedAutomaton:
    """Reads an acceptor file; with ``weights`` its arcs are sparse tuples."""
    try:
        with open(path, encoding="utf-8") as f:
            return load_sparse_att(f, weights) if weights else load_att(f)
    except FileNotFoundError:
        raise ParseError("automaton file not found", path=path)


def _state_order(a: WeightedAutomaton) -> List[int]:
    return [a.start] + [s for s in range(a.num_states) if s != a.start]


def write_att(a: WeightedAutomaton) -> str:
    """Writes arcs in state order (start state first) followed by the
    final states. Output is deterministic.
    """
    if not a.finals:
        logger.warning("Automaton has no final state and accepts nothing")
    lines = []
    for state in _state_order(a):
        for arc in a.arcs[state]:
            lines.append(f"{state} {arc.next_state} {arc.label} {arc.weight:.6f}")
    for state in sorted(a.finals):
        weight = a.finals[state]
        lines.append(f"{state}" if weight == 0 else f"{state} {weight:.6f}")
    return "".join(line + "\n" for line in lines)


def write_sparse_att(a: WeightedAutomaton) -> str:
    """Like ``write_att`` but prints the sparse tuple of each arc."""
    if not a.finals:
        logger.warning("Automaton has no final state and accepts nothing")
    lines = []
    for state in _state_order(a):
        for arc in a.arcs[state]:
            components = arc.components if arc.components is not None else SparseTupleWeight()
            lines.append(f"{state} {arc.next_state} {arc.label} {serialize_sparse_tuple(components)}")
    for state in sorted(a.finals):
        components = a.final_components.get(state)
        if components is None or not components.components:
            lines.append(f"{state}")
        else:
            lines.append(f"{state} {serialize_sparse_tuple(components)}")
    return "".join(line + "\n" for line in lines)


def validate_deterministic(a: WeightedAutomaton) -> DeterminismReport:
    for state in range(a.num_states):
        labels = set()
        for arc in a.arcs[state]:
            if arc.label in labels:
                return DeterminismReport(state=state, label=arc.label)
            labels.add(arc.label)
    return DeterminismReport()


def shortest_cost(a: WeightedAutomaton) -> float:
    """Cost of the cheapest accepting path (Dijkstra). Returns INF and
    logs a warning if no final state is reachable.
    """
    if a.has_negative_weights():
        raise AutomatonError("shortest_cost requires non-negative weights")
    dist = [INF] * a.num_states
    dist[a.start] = 0.0
    queue = [(0.0, a.start)]
    best = INF
    while queue:
        d, state = heapq.heappop(queue)
        if d > dist[state]:
            continue
        if d >= best:
            break
        if state in a.finals:
            best = min(best, d + a.finals[state])
        for arc in a.arcs[state]:
            nd = d + arc.weight
            if nd < dist[arc.next_state]:
                dist[arc.next_state] = nd
                heapq.heappush(queue, (nd, arc.next_state))
    if best == INF:
        logger.warning("Automaton has no accepting path")
    return best
