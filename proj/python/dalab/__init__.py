"""Data-annealing transfer learning for sequence labeling."""

from ._core import (
    ConfigError,
    Corpus,
    DataError,
    Error,
    InvariantError,
    TaggedSentence,
    alpha_for_budget,
    approx_source_budget,
    config_keys,
    exact_source_budget,
    extract_chunks,
    log_partition,
    marginals,
    read_conll,
    report,
    schedule_table,
    score,
    source_quota,
    source_ratio,
    subsample,
    synth,
    synth_transfer_pair,
    train,
    viterbi,
    write_conll,
)

__all__ = [name for name in dir() if not name.startswith("_")]
