import hashlib
import random
import statistics
from concurrent.futures import ThreadPoolExecutor

import pytest

from vdfrate.errors import ParameterError
from vdfrate.pow import (
    PowPuzzle,
    leading_zero_bits,
    pow_hash,
    pow_solve,
    pow_solve_partitioned,
    pow_verify,
)


def test_leading_zero_bits():
    assert leading_zero_bits(b"\x80" + b"\x00" * 31) == 0
    assert leading_zero_bits(b"\x00\x01" + b"\x00" * 30) == 15
    assert leading_zero_bits(b"\x00" * 32) == 256


def test_hash_layout():
    assert pow_hash(b"msg", 258) == hashlib.sha256(b"msg" + bytes([0, 0, 0, 0, 0, 0, 1, 2])).digest()


def test_zero_difficulty():
    sol = pow_solve(PowPuzzle(b"anything", 0), nonce_start=42)
    assert (sol.nonce, sol.attempts) == (42, 1)
    assert pow_verify(PowPuzzle(b"x", 0), 123456)


def test_solutions_verify():
    rng = random.Random(1)
    for _ in range(50):
        p = PowPuzzle(rng.randbytes(16), 6)
        sol = pow_solve(p)
        assert pow_verify(p, sol.nonce)
        assert sol.attempts == sol.nonce + 1
        # it is the first qualifying nonce
        assert not any(pow_verify(p, n) for n in range(sol.nonce))


def test_mean_attempts_d8():
    rng = random.Random(2)
    attempts = [pow_solve(PowPuzzle(rng.randbytes(16), 8)).attempts for _ in range(1000)]
    assert 200 <= statistics.fmean(attempts) <= 320


def test_harder_puzzle_often_rejects():
    rng = random.Random(3)
    rejections = 0
    for _ in range(100):
        p = PowPuzzle(rng.randbytes(16), 6)
        sol = pow_solve(p)
        rejections += not pow_verify(PowPuzzle(p.message, 7), sol.nonce)
    assert rejections >= 30


def test_avalanche():
    rng = random.Random(4)
    rejections = 0
    for _ in range(100):
        msg = rng.randbytes(16)
        sol = pow_solve(PowPuzzle(msg, 10))
        flipped = bytes([msg[0] ^ 1]) + msg[1:]
        rejections += not pow_verify(PowPuzzle(flipped, 10), sol.nonce)
    assert rejections >= 99


def test_partitioned_equals_sequential():
    rng = random.Random(5)
    for _ in range(30):
        p = PowPuzzle(rng.randbytes(8), 7)
        seq = pow_solve(p)
        par = pow_solve_partitioned(p, 4)
        assert par.nonce == seq.nonce
        assert pow_verify(p, par.nonce)
        assert par.attempts >= seq.attempts


def test_partitioned_with_executor():
    p = PowPuzzle(b"threads", 9)
    with ThreadPoolExecutor(4) as pool:
        sol = pow_solve_partitioned(p, 4, executor=pool)
    assert sol.nonce == pow_solve(p).nonce


def test_bounds():
    with pytest.raises(ParameterError):
        PowPuzzle(b"", 65)
    with pytest.raises(ParameterError):
        pow_solve_partitioned(PowPuzzle(b"", 1), 0)
    assert not pow_verify(PowPuzzle(b"", 0), -1)
    assert not pow_verify(PowPuzzle(b"", 0), 1 << 64)
