from typing import Any, Dict, List, Optional


class DecoderError(Exception):
    """Base class of everything the decoder raises on purpose."""

    exit_code = 1


class ConfigError(DecoderError):
    """Invalid configuration. Carries every offending field at once."""

    exit_code = 1

    def __init__(self, errors: List[Dict[str, Any]] | str):
        if isinstance(errors, str):
            errors = [{"field": "config", "message": errors}]
        self.errors = errors
        super().__init__("; ".join(f"{e['field']}: {e['message']}" for e in errors))


class AdmissibilityError(ConfigError):
    def __init__(self, predictor: str, reason: str):
        self.predictor = predictor
        super().__init__([{"field": "decoder", "message": f"dfs requires admissible predictors: '{predictor}' {reason}"}])


class SearchBudgetError(ConfigError):
    def __init__(self, estimate: float, budget: float):
        self.estimate = estimate
        self.budget = budget
        super().__init__(
            [{
                "field": "exhaustive_budget",
                "message": f"exhaustive enumeration refused: estimated {estimate:.3g} hypotheses exceeds budget {budget:.3g}",
            }]
        )


class DataError(DecoderError):
    """A resource or input file is missing or malformed."""

    exit_code = 2

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.message = message
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(f"{where}{message}")


class ParseError(DataError):
    pass


class AutomatonError(DataError):
    pass


class HypothesisError(DecoderError, ValueError):
    pass
