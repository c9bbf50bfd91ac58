"""Hashcash proof of work: SHA-256(message || BE64(nonce)) with d leading zero bits."""

from __future__ import annotations

import hashlib
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Optional

from .errors import ParameterError

NONCE_LIMIT = 1 << 64


@dataclass(frozen=True)
class PowPuzzle:
    message: bytes
    difficulty: int

    def __post_init__(self):
        if not 0 <= self.difficulty <= 64:
            raise ParameterError("PoW difficulty must be within [0, 64] bits")


@dataclass(frozen=True)
class PowSolution:
    nonce: int
    attempts: int


def leading_zero_bits(digest: bytes) -> int:
    return len(digest) * 8 - int.from_bytes(digest, "big").bit_length()


def pow_hash(message: bytes, nonce: int) -> bytes:
    return hashlib.sha256(message + nonce.to_bytes(8, "big")).digest()


def pow_verify(p: PowPuzzle, nonce: int) -> bool:
    if not 0 <= nonce < NONCE_LIMIT:
        return False
    return leading_zero_bits(pow_hash(p.message, nonce)) >= p.difficulty


def _search(message: bytes, difficulty: int, start: int, stride: int) -> tuple[Optional[int], int]:
    # the prefix hash state is reused for every nonce
    prefix = hashlib.sha256(message)
    limit = 256 - difficulty
    attempts = 0
    for nonce in range(start, NONCE_LIMIT, stride):
        h = prefix.copy()
        h.update(nonce.to_bytes(8, "big"))
        attempts += 1
        if int.from_bytes(h.digest(), "big").bit_length() <= limit:
            return nonce, attempts
    return None, attempts


def pow_solve(p: PowPuzzle, nonce_start: int = 0) -> PowSolution:
    """Smallest nonce >= nonce_start solving the puzzle."""
    nonce, attempts = _search(p.message, p.difficulty, nonce_start, 1)
    if nonce is None:
        raise RuntimeError("nonce space exhausted")
    return PowSolution(nonce, attempts)


def _search_job(args):
    return _search(*args)


def pow_solve_partitioned(
    p: PowPuzzle,
    parts: int = 4,
    nonce_start: int = 0,
    executor: Optional[Executor] = None,
) -> PowSolution:
    """Split the nonce space into ``parts`` disjoint residue classes.

    Worker i scans nonce_start + i, nonce_start + i + parts, ... and stops
    at its first hit; the smallest hit over all workers is returned, which
    is exactly what :func:`pow_solve` finds. ``attempts`` sums all workers.
    """
    if parts < 1:
        raise ParameterError("need at least one partition")
    jobs = [(p.message, p.difficulty, nonce_start + i, parts) for i in range(parts)]
    mapper = executor.map if executor is not None else map
    hits = list(mapper(_search_job, jobs))
    found = [nonce for nonce, _ in hits if nonce is not None]
    if not found:
        raise RuntimeError("nonce space exhausted")
    return PowSolution(min(found), sum(a for _, a in hits))
