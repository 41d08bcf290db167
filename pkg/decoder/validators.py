from __future__ import annotations

import re
from typing import Any, Dict, Tuple

PREDICTOR_KINDS = ("fst", "lm", "lex", "wc", "ngram")
DECODER_NAMES = ("greedy", "beam", "dfs", "exhaustive")
OUTPUT_FORMATS = ("text", "nbest", "sfst", "fst", "ngram")
VERBOSITY_LEVELS = ("debug", "info", "warning", "error")

# kinds that cannot run without a resource file
PATH_KEYS = {"fst": "fst_path", "lm": "lm_path", "lex": "lex_path", "ngram": "ngram_path"}

STRATEGY_RE = re.compile(r"^(greedy|dfs|exhaustive|beam(\d*))$")


def _err(field: str, message: str) -> Dict[str, Any]:
    return {"field": field, "message": message}


def resource_value(payload: Dict[str, Any], key: str, occurrence: int) -> Any:
    """Position-indexed lookup: ``key<k>`` for the k-th predictor of a
    kind, falling back to the unsuffixed ``key``.
    """
    value = payload.get(f"{key}{occurrence}")
    if value is None:
        value = payload.get(key)
    return value


def validate_run_config(payload: Dict[str, Any]) -> Tuple[bool, list[Dict[str, Any]]]:
    """
    Validates a merged, type-converted run configuration.
    Returns: (ok, errors[])
    """
    errors: list[Dict[str, Any]] = []

    predictors = payload.get("predictors") or []
    if not predictors:
        errors.append(_err("predictors", "predictors is required (example: fst,lm)"))
    for kind in predictors:
        if kind not in PREDICTOR_KINDS:
            errors.append(_err("predictors", f"unknown predictor '{kind}' (choose from {', '.join(PREDICTOR_KINDS)})"))

    weights = payload.get("predictor_weights")
    if weights is not None and predictors and len(weights) != len(predictors):
        errors.append(
            _err("predictor_weights", f"{len(weights)} weights given for {len(predictors)} predictors")
        )

    decoder = payload.get("decoder")
    if decoder not in DECODER_NAMES:
        errors.append(_err("decoder", f"invalid decoder '{decoder}' (choose from {', '.join(DECODER_NAMES)})"))

    if payload.get("beam", 1) < 1:
        errors.append(_err("beam", "beam must be >= 1"))
    if payload.get("max_len_factor", 0) < 0:
        errors.append(_err("max_len_factor", "max_len_factor must be >= 0"))
    if payload.get("max_len_offset", 1) < 1:
        errors.append(_err("max_len_offset", "max_len_offset must be >= 1"))

    for fmt in payload.get("outputs") or []:
        if fmt not in OUTPUT_FORMATS:
            errors.append(_err("outputs", f"unknown output format '{fmt}' (choose from {', '.join(OUTPUT_FORMATS)})"))

    if payload.get("nbest_size", 0) < 0:
        errors.append(_err("nbest_size", "nbest_size must be >= 0"))
    if not 0 <= payload.get("nbest_precision", 6) <= 17:
        errors.append(_err("nbest_precision", "nbest_precision must be between 0 and 17"))
    if not 1 <= payload.get("ngram_order", 1) <= 5:
        errors.append(_err("ngram_order", "ngram_order must be between 1 and 5"))

    if not payload.get("src_test"):
        errors.append(_err("src_test", "src_test is required"))

    rng = payload.get("range")
    if rng is not None and not 1 <= rng[0] <= rng[1]:
        errors.append(_err("range", "range must be 'a:b' with 1 <= a <= b"))

    if payload.get("jobs", 1) < 1:
        errors.append(_err("jobs", "jobs must be >= 1"))
    if payload.get("exhaustive_budget", 1) <= 0:
        errors.append(_err("exhaustive_budget", "exhaustive_budget must be positive"))

    for strategy in payload.get("strategies") or []:
        match = STRATEGY_RE.match(strategy)
        if not match or match.group(2) == "0":
            errors.append(_err("strategies", f"invalid strategy '{strategy}' (greedy, beamN, dfs, exhaustive)"))

    if payload.get("verbosity", "info") not in VERBOSITY_LEVELS:
        errors.append(_err("verbosity", f"verbosity must be one of {', '.join(VERBOSITY_LEVELS)}"))

    # per-predictor resources
    seen: Dict[str, int] = {}
    for kind in predictors:
        if kind not in PREDICTOR_KINDS:
            continue
        seen[kind] = seen.get(kind, 0) + 1
        k = seen[kind]
        if kind in PATH_KEYS and not resource_value(payload, PATH_KEYS[kind], k):
            errors.append(_err(f"{PATH_KEYS[kind]}{k}", f"predictor '{kind}' #{k} needs {PATH_KEYS[kind]}"))
        if kind == "lex":
            p_eos = resource_value(payload, "lex_p_eos", k)
            if p_eos is not None and not 0.0 < p_eos <= 1.0:
                errors.append(_err(f"lex_p_eos{k}", "lex_p_eos must be in (0, 1]"))

    return (len(errors) == 0, errors)
