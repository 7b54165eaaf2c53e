"""Python bindings for the mhel linking core."""

from ._mhel import (
    Index,
    MhelError,
    calibrate_threshold,
    extract_selection,
    harmonic_f1,
    import_kb,
    link,
    mark_mention,
    micro_scores,
    mock_encode,
    nil_scores,
    parse_binary_answer,
    point_biserial,
    select_block_size,
    tally_errors,
)

__all__ = [
    "Index",
    "MhelError",
    "calibrate_threshold",
    "extract_selection",
    "harmonic_f1",
    "import_kb",
    "link",
    "mark_mention",
    "micro_scores",
    "mock_encode",
    "nil_scores",
    "parse_binary_answer",
    "point_biserial",
    "select_block_size",
    "tally_errors",
]
