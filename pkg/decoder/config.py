"""Run configuration: defaults, config files and command-line flags.

Precedence is flag > file > default for every key. Config files are
``key = value`` lines with ``#`` comments, or flat YAML mappings when
the file name ends in ``.yaml``/``.yml``.
"""

from dataclasses import dataclass, field
from pathlib import Path
import re
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import yaml

from decoder.errors import ConfigError
from decoder.validators import resource_value, validate_run_config

RESOURCE_KEY_RE = re.compile(
    r"^(fst_path|fst_weights|lm_path|lm_floor|lex_path|lex_floor|lex_p_eos|wc_penalty|ngram_path|ngram_theta)(\d*)$"
)


def _as_str(value: Any) -> str:
    return str(value).strip()


def _as_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError("expected an integer")
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError("expected an integer")
        return int(value)
    return int(str(value).strip())


def _as_float(value: Any) -> float:
    if isinstance(value, bool):
        raise ValueError("expected a number")
    return float(str(value).strip()) if isinstance(value, str) else float(value)


def _as_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "yes", "1", "on"):
        return True
    if text in ("false", "no", "0", "off"):
        return False
    raise ValueError("expected true or false")


def _as_list(value: Any) -> List[str]:
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _as_float_list(value: Any) -> List[float]:
    return [_as_float(v) for v in _as_list(value)]


def _as_range(value: Any) -> Tuple[int, int]:
    text = str(value).strip()
    if ":" in text:
        start, end = text.split(":", 1)
        return int(start), int(end)
    return int(text), int(text)


# key -> (parser, default, help)
SCHEMA: Dict[str, Tuple[Callable[[Any], Any], Any, str]] = {
    "predictors": (_as_list, None, "Predictor constellation, comma separated (fst, lm, lex, wc, ngram)"),
    "predictor_weights": (_as_float_list, None, "One weight per predictor (default 1.0 each)"),
    "decoder": (_as_str, "beam", "Search strategy: greedy, beam, dfs, exhaustive"),
    "beam": (_as_int, 4, "Beam size"),
    "max_len_factor": (_as_float, 3.0, "Maximum length is factor * source length + offset"),
    "max_len_offset": (_as_int, 10, "Maximum length offset"),
    "outputs": (_as_list, ["text"], "Output formats: text, nbest, sfst, fst, ngram"),
    "nbest_size": (_as_int, 0, "Maximum n-best entries per sentence (0 = all)"),
    "nbest_precision": (_as_int, 6, "Decimal places of n-best scores"),
    "ngram_order": (_as_int, 4, "Maximum n-gram order of the ngram output"),
    "ngram_occurrence": (_as_bool, False, "Count n-gram occurrences instead of presence"),
    "lattice_eos_arcs": (_as_bool, True, "Lattices end in EOS arcs; false puts the EOS cost into final weights for fst rescoring"),
    "src_test": (_as_str, None, "Source sentences, one per line"),
    "src_wmap": (_as_str, None, "Source word map (source given as surface forms)"),
    "trg_wmap": (_as_str, None, "Target word map for text and n-best output"),
    "output_dir": (_as_str, "out", "Output directory"),
    "range": (_as_range, None, "Sentence range a:b (1-based, inclusive)"),
    "jobs": (_as_int, 1, "Sentences decoded in parallel"),
    "exhaustive_budget": (_as_float, 1e6, "Maximum hypotheses generated by exhaustive enumeration"),
    "strategies": (_as_list, ["greedy", "beam4", "beam20", "dfs", "exhaustive"], "Strategies compared by analyze"),
    "report": (_as_str, "analyze.tsv", "Analyze report file name inside output_dir"),
    "verbosity": (_as_str, "info", "Log level: debug, info, warning, error"),
}

RESOURCE_SCHEMA: Dict[str, Tuple[Callable[[Any], Any], Any, str]] = {
    "fst_path": (_as_str, None, "Acceptor file for fst; %d is the 1-based sentence id"),
    "fst_weights": (_as_float_list, [], "Read fst_path as a sparse-tuple lattice scored with these weights"),
    "lm_path": (_as_str, None, "ARPA file for lm"),
    "lm_floor": (_as_float, 20.0, "Cost of unknown words when the LM has no <unk>"),
    "lex_path": (_as_str, None, "Lexical table for lex ('src trg prob' lines)"),
    "lex_floor": (_as_float, 20.0, "Cost of tokens without lexical mass"),
    "lex_p_eos": (_as_float, 0.1, "EOS probability of lex"),
    "wc_penalty": (_as_float, 1.0, "Cost per non-EOS token of wc"),
    "ngram_path": (_as_str, None, "N-gram posterior file for ngram; %d is the 1-based sentence id"),
    "ngram_theta": (_as_float_list, [], "Per-order weights of ngram (default 1.0)"),
}


@dataclass(frozen=True)
class PredictorSpec:
    name: str
    kind: str
    occurrence: int
    options: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    predictors: List[PredictorSpec]
    predictor_weights: List[float]
    src_test: str
    decoder: str = "beam"
    beam: int = 4
    max_len_factor: float = 3.0
    max_len_offset: int = 10
    outputs: List[str] = field(default_factory=lambda: ["text"])
    nbest_size: int = 0
    nbest_precision: int = 6
    ngram_order: int = 4
    ngram_occurrence: bool = False
    lattice_eos_arcs: bool = True
    src_wmap: Optional[str] = None
    trg_wmap: Optional[str] = None
    output_dir: str = "out"
    range: Optional[Tuple[int, int]] = None
    jobs: int = 1
    exhaustive_budget: float = 1e6
    strategies: List[str] = field(default_factory=list)
    report: str = "analyze.tsv"
    verbosity: str = "info"

    @property
    def names(self) -> List[str]:
        return [spec.name for spec in self.predictors]

    def max_len(self, src_len: int) -> int:
        return int(self.max_len_factor * src_len) + self.max_len_offset


def read_config_file(path: str) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    """Returns (values, errors[]) of a config file."""
    p = Path(path)
    if not p.exists():
        return {}, [{"field": "config", "message": f"config file not found: {path}"}]
    if p.suffix in (".yaml", ".yml"):
        try:
            raw = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            return {}, [{"field": "config", "message": f"invalid YAML: {e}"}]
        if not isinstance(raw, dict):
            return {}, [{"field": "config", "message": "YAML config must be a mapping"}]
        return {str(k): v for k, v in raw.items() if v is not None}, []

    values: Dict[str, Any] = {}
    errors: List[Dict[str, Any]] = []
    for line_no, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            errors.append({"field": "config", "message": f"line {line_no}: expected 'key = value'"})
            continue
        values[key.strip()] = value.strip()
    return values, errors


def _parser_for(key: str) -> Optional[Callable[[Any], Any]]:
    if key in SCHEMA:
        return SCHEMA[key][0]
    match = RESOURCE_KEY_RE.match(key)
    if match:
        return RESOURCE_SCHEMA[match.group(1)][0]
    return None


def _build_specs(payload: Dict[str, Any]) -> List[PredictorSpec]:
    specs = []
    seen: Dict[str, int] = {}
    for kind in payload["predictors"]:
        seen[kind] = seen.get(kind, 0) + 1
        k = seen[kind]
        options = {}
        for key, (_, default, _) in RESOURCE_SCHEMA.items():
            if key.split("_", 1)[0] != kind:
                continue
            value = resource_value(payload, key, k)
            options[key.split("_", 1)[1]] = default if value is None else value
        specs.append(PredictorSpec(name=kind if k == 1 else f"{kind}{k}", kind=kind, occurrence=k, options=options))
    return specs


def load_config(flags: Mapping[str, Any], config_file: Optional[str] = None) -> RunConfig:
    """Merges defaults, the config file and flags into a validated
    RunConfig. Raises ConfigError listing every offending key.
    """
    errors: List[Dict[str, Any]] = []
    raw: Dict[str, Any] = {}
    if config_file:
        file_values, file_errors = read_config_file(config_file)
        raw.update(file_values)
        errors.extend(file_errors)
    raw.update({k: v for k, v in flags.items() if v is not None})

    payload: Dict[str, Any] = {key: default for key, (_, default, _) in SCHEMA.items()}
    for key, value in raw.items():
        parser = _parser_for(key)
        if parser is None:
            errors.append({"field": key, "message": "unknown configuration key"})
            continue
        try:
            payload[key] = parser(value)
        except (TypeError, ValueError):
            errors.append({"field": key, "message": f"cannot parse value '{value}'"})

    _, validation_errors = validate_run_config(payload)
    errors.extend(e for e in validation_errors if e["field"] not in {x["field"] for x in errors})
    if errors:
        raise ConfigError(errors)

    specs = _build_specs(payload)
    weights = payload["predictor_weights"] or [1.0] * len(specs)
    return RunConfig(
        predictors=specs,
        predictor_weights=list(weights),
        src_test=payload["src_test"],
        decoder=payload["decoder"],
        beam=payload["beam"],
        max_len_factor=payload["max_len_factor"],
        max_len_offset=payload["max_len_offset"],
        outputs=list(payload["outputs"]),
        nbest_size=payload["nbest_size"],
        nbest_precision=payload["nbest_precision"],
        ngram_order=payload["ngram_order"],
        ngram_occurrence=payload["ngram_occurrence"],
        lattice_eos_arcs=payload["lattice_eos_arcs"],
        src_wmap=payload.get("src_wmap"),
        trg_wmap=payload.get("trg_wmap"),
        output_dir=payload["output_dir"],
        range=payload.get("range"),
        jobs=payload["jobs"],
        exhaustive_budget=payload["exhaustive_budget"],
        strategies=list(payload["strategies"]),
        report=payload["report"],
        verbosity=payload["verbosity"],
    )
