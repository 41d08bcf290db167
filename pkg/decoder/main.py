import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from decoder.batch import BatchDecoder, parse_strategy
from decoder.config import RESOURCE_KEY_RE, RESOURCE_SCHEMA, SCHEMA, RunConfig, load_config
from decoder.errors import ConfigError, DataError, DecoderError
from decoder.models import DecodeResult
from decoder.output_store import OutputStore
from decoder.predictor_registry import PredictorRegistry
from decoder.search import count_search_errors
from decoder.synthetic import generate_suite
from decoder.utils import ensure_dir, load_wmap, read_sentences
from decoder.validators import VERBOSITY_LEVELS

logger = logging.getLogger("decoder")

LOG_FORMAT = "%(asctime)s %(levelname)s: %(message)s"
REPORT_HEADER = "strategy\tavg_expansions\tsearch_error_rate\tavg_best_cost"


def _configure_logging(verbosity: str) -> None:
    # an invalid level is reported by config validation later
    level = verbosity.upper() if verbosity in VERBOSITY_LEVELS else "INFO"
    logging.basicConfig(format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(level)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="key = value or YAML configuration file")
    for key, (_, default, help_text) in {**SCHEMA, **RESOURCE_SCHEMA}.items():
        # argparse %-formats help strings
        p.add_argument(f"--{key}", default=None, help=f"{help_text} (default: {default})".replace("%", "%%"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decoder",
        description="Left-to-right decoding with a constellation of predictors.",
        epilog="Repeated predictor kinds take indexed resource flags, e.g. --lm_path1 a.arpa --lm_path2 b.arpa.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_config_flags(sub.add_parser("decode", help="Decode the source corpus and write the configured outputs"))
    _add_config_flags(sub.add_parser("analyze", help="Compare search strategies against the exact dfs reference"))

    gen = sub.add_parser("generate-suite", help="Write a synthetic rescoring suite for analyze")
    gen.add_argument("directory")
    gen.add_argument("--sentences", type=int, default=100)
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--levels", type=int, default=5)
    gen.add_argument("--width", type=int, default=4)
    gen.add_argument("--vocab_size", type=int, default=8)
    gen.add_argument("--verbosity", default=None)
    return parser


def _extra_flags(extras: Sequence[str]) -> Dict[str, Any]:
    """Parses indexed resource flags (``--lm_path2 x``) argparse does
    not know about. Anything else is reported as a config error.
    """
    flags: Dict[str, Any] = {}
    errors: List[Dict[str, Any]] = []
    i = 0
    while i < len(extras):
        token = extras[i]
        if not token.startswith("--"):
            errors.append({"field": token, "message": "unexpected argument"})
            i += 1
            continue
        key, sep, value = token[2:].partition("=")
        if not sep:
            if i + 1 >= len(extras):
                errors.append({"field": key, "message": "flag needs a value"})
                break
            value = extras[i + 1]
            i += 1
        i += 1
        if not RESOURCE_KEY_RE.match(key):
            errors.append({"field": key, "message": "unknown configuration key"})
            continue
        flags[key] = value
    if errors:
        raise ConfigError(errors)
    return flags


def _corpus(config: RunConfig) -> List[Tuple[int, List[int]]]:
    wmap = load_wmap(config.src_wmap) if config.src_wmap else None
    indexed = list(enumerate(read_sentences(config.src_test, wmap)))
    if config.range is not None:
        start, end = config.range
        indexed = indexed[start - 1:end]
    return indexed


def decode_command(config: RunConfig) -> int:
    corpus = _corpus(config)
    if not corpus:
        logger.warning("No sentences to decode in %s", config.src_test)
    registry = PredictorRegistry(config)
    registry.preload()
    batch = BatchDecoder(config, registry)
    logger.info(
        "Decoding %d sentences with %s (%s), decoder %s",
        len(corpus), ",".join(config.names), ",".join(str(w) for w in config.predictor_weights), config.decoder,
    )
    start = time.time()
    with OutputStore(config.output_dir, config.outputs) as store:
        for out in batch.map(batch.format_sentence, corpus):
            store.commit(out)
    logger.info("Decoding finished after %.2f s", time.time() - start)
    return 0


class _StrategyTotals:
    def __init__(self):
        self.expansions = 0
        self.sentences = 0
        self.errors = 0
        self.compared = 0
        self.cost_sum = 0.0
        self.costed = 0

    def add(self, result: DecodeResult, reference: DecodeResult) -> None:
        self.sentences += 1
        self.expansions += result.stats.expansions
        if reference.hypotheses:
            self.compared += 1
            if not result.hypotheses or count_search_errors(result, reference):
                self.errors += 1
        if result.hypotheses and result.best_cost != float("inf"):
            self.costed += 1
            self.cost_sum += result.best_cost

    def row(self, label: str) -> str:
        avg_expansions = self.expansions / self.sentences if self.sentences else 0.0
        error_rate = self.errors / self.compared if self.compared else 0.0
        avg_cost = self.cost_sum / self.costed if self.costed else float("inf")
        return f"{label}\t{avg_expansions:.1f}\t{error_rate:.3f}\t{avg_cost:.6f}"


def analyze_command(config: RunConfig) -> int:
    corpus = _corpus(config)
    if not corpus:
        raise DataError("no sentences to analyze", path=config.src_test)
    strategies = [parse_strategy(label, config.beam) for label in config.strategies]
    runs = list(strategies)
    if not any(decoder == "dfs" for _, decoder, _ in runs):
        runs.append(("dfs", "dfs", config.beam))
    reference_label = next(label for label, decoder, _ in runs if decoder == "dfs")

    registry = PredictorRegistry(config)
    registry.preload()
    batch = BatchDecoder(config, registry)
    totals = {label: _StrategyTotals() for label, _, _ in strategies}

    def compare(sen_id: int, src: List[int]) -> Dict[str, DecodeResult]:
        return batch.compare_sentence(sen_id, src, runs)

    for (sen_id, _), results in zip(corpus, batch.map(compare, corpus)):
        reference = results[reference_label]
        if not reference.hypotheses:
            logger.warning("Sentence %d has no complete hypothesis under the model", sen_id + 1)
        for label, _, _ in strategies:
            totals[label].add(results[label], reference)
        logger.debug(
            "Sentence %d: %s", sen_id + 1,
            " ".join(f"{label}={results[label].best_cost:.4f}/{results[label].stats.expansions}" for label in results),
        )

    report = "".join(line + "\n" for line in [REPORT_HEADER] + [totals[label].row(label) for label, _, _ in strategies])
    ensure_dir(config.output_dir)
    (Path(config.output_dir) / config.report).write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    logger.info("Wrote analysis of %d sentences to %s", len(corpus), Path(config.output_dir) / config.report)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args, extras = parser.parse_known_args(argv)
    _configure_logging(args.verbosity or "info")
    try:
        if args.command == "generate-suite":
            if extras:
                parser.error(f"unrecognized arguments: {' '.join(extras)}")
            conf = generate_suite(
                args.directory,
                sentences=args.sentences,
                seed=args.seed,
                levels=args.levels,
                width=args.width,
                vocab_size=args.vocab_size,
            )
            sys.stdout.write(f"{conf}\n")
            return 0

        flags = {key: getattr(args, key) for key in {**SCHEMA, **RESOURCE_SCHEMA}}
        flags.update(_extra_flags(extras))
        config = load_config(flags, args.config)
        logging.getLogger().setLevel(config.verbosity.upper())
        if args.command == "decode":
            return decode_command(config)
        return analyze_command(config)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
        return e.exit_code
    except DataError as e:
        logger.error("Data error: %s", e)
        return e.exit_code
    except (DecoderError, ValueError) as e:
        logger.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
