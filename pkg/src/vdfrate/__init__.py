"""Rate control for feeless DAG ledgers with RSA-group verifiable delay functions."""

from .group_arith import RSA_2048, GroupElement, RsaGroup, h_prime, next_prime
from .vdf import (
    VdfChallenge,
    VdfProof,
    decode_proof,
    encode_proof,
    evaluate,
    prove_direct,
    prove_long_division,
    prove_parallel,
    verify,
)

__version__ = "0.1.0"

__all__ = [
    "RSA_2048",
    "GroupElement",
    "RsaGroup",
    "VdfChallenge",
    "VdfProof",
    "decode_proof",
    "encode_proof",
    "evaluate",
    "h_prime",
    "next_prime",
    "prove_direct",
    "prove_long_division",
    "prove_parallel",
    "verify",
]
