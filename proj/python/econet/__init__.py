"""Python bindings for the econet concept net toolkit."""

from econet._core import (
    ConceptStore,
    ConfigError,
    ContractError,
    HypernymBenchmark,
    HypernymModel,
    OracleError,
    ParseError,
    StoreError,
    Tagger,
    distant_supervision,
    fuzzy_nll,
    hypernym_benchmark,
    iob_labels,
    log_partition,
    run_hypernym_loop,
    viterbi,
)

__version__ = "0.1.0"

__all__ = [
    "ConceptStore",
    "ConfigError",
    "ContractError",
    "HypernymBenchmark",
    "HypernymModel",
    "OracleError",
    "ParseError",
    "StoreError",
    "Tagger",
    "distant_supervision",
    "fuzzy_nll",
    "hypernym_benchmark",
    "iob_labels",
    "log_partition",
    "run_hypernym_loop",
    "viterbi",
]
