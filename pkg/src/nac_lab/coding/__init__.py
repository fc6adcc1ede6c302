"""信道与激活编码"""

from .channel import (
    ChannelSpec,
    binary_entropy,
    expected_noisy_dot,
    log_cond_prob,
    log_cond_table,
    transmit,
    transmit_rows,
)
from .codes import (
    ActivationCode,
    as_code_matrix,
    avg_hamming,
    hamming,
    hamming_matrix,
    sign_code,
    sign_codes,
)
from .index import HashIndex, IndexEntry, RetrievalReport, average_precision, mean_average_precision

__all__ = [
    "ActivationCode",
    "ChannelSpec",
    "HashIndex",
    "IndexEntry",
    "RetrievalReport",
    "as_code_matrix",
    "average_precision",
    "avg_hamming",
    "binary_entropy",
    "expected_noisy_dot",
    "hamming",
    "hamming_matrix",
    "log_cond_prob",
    "log_cond_table",
    "mean_average_precision",
    "sign_code",
    "sign_codes",
    "transmit",
    "transmit_rows",
]
