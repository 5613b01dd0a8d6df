"""Card-based secure computation: protocols, exact analysis and a script format."""

from .analyzer import (analysis_report, count_resources, deck_distribution, enumerate_runs, explore,
                       kwh_posteriors, point_prior, run_once, sampled_check, uniform_prior,
                       verify_correctness, verify_security)
from .deck import (Card, CardSequence, Commitment, IntEncoding, Observation, Permutation, Scheme, Suit,
                   apply_perm, decode_bit, decode_int, encode_bit, encode_int, left_shift, right_shift,
                   turn_over)
from .errors import BudgetExceeded, DomainError, ProtocolError, UncoveredBranch
from .protocol import FunctionSpec, Protocol
from .protocols import BUILTINS, build
from .script import ElaborationError, ScriptError, elaborate, parse, serialize, to_script

__all__ = [
    "BUILTINS", "BudgetExceeded", "Card", "CardSequence", "Commitment", "DomainError",
    "ElaborationError", "FunctionSpec", "IntEncoding", "Observation", "Permutation", "Protocol",
    "ProtocolError", "Scheme", "ScriptError", "Suit", "UncoveredBranch", "analysis_report",
    "apply_perm", "build", "count_resources", "deck_distribution", "decode_bit", "decode_int",
    "elaborate", "encode_bit", "encode_int", "enumerate_runs", "explore", "kwh_posteriors",
    "left_shift", "parse", "point_prior", "right_shift", "run_once", "sampled_check", "serialize",
    "to_script", "turn_over", "uniform_prior", "verify_correctness", "verify_security",
]
