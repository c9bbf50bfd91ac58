"""VDF over an RSA group with a single-prime proof: evaluate, prove, verify.

The prover publishes {l, pi} where l = H_prime(x + y) and
pi = x^floor(2^tau / l). Three provers compute the same pi:

* ``prove_direct`` materialises the quotient with big-integer division
  (reference path, memory linear in tau);
* ``prove_long_division`` streams the quotient bits, one squaring plus at
  most one multiplication per bit;
* ``prove_parallel`` splits the quotient into s bit-blocks and raises the
  matching evaluation checkpoint to each block independently.
"""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple, Union

from gmpy2 import mpz

from .errors import IntegrityError, MalformedProof, OverflowNegligible, ParameterError
from .group_arith import (
    GroupElement,
    RsaGroup,
    check_k,
    h_prime,
    hash_to_int,
    int_to_bytes,
)
from .multiexp import MultiExpStats, multiexp_interleaved


def derive_input(message: bytes, k: int, group: RsaGroup) -> int:
    """Map a message to the VDF input x with 2 <= x < N.

    H(m) is reduced modulo N (only reachable with test moduli narrower than
    2k bits). x in {0, 1} would make y = x free, so a counter byte string is
    appended and the message rehashed until x >= 2.
    """
    n = group.modulus
    x = hash_to_int(message, k).value % n
    counter = 0
    while x < 2:
        x = hash_to_int(message + int_to_bytes(counter), k).value % n
        counter += 1
    return x


@dataclass(frozen=True)
class VdfChallenge:
    message: Optional[bytes]
    tau: int
    group: RsaGroup
    k: int = 128
    x: Optional[int] = None

    def __post_init__(self):
        check_k(self.k)
        if self.tau < 1:
            raise ParameterError("difficulty tau must be >= 1")
        if self.x is None:
            if self.message is None:
                raise ParameterError("challenge needs a message or an input element")
            object.__setattr__(self, "x", derive_input(self.message, self.k, self.group))
        elif not 2 <= self.x < self.group.modulus:
            raise ParameterError("challenge input must satisfy 2 <= x < N")

    @classmethod
    def from_element(cls, x: int, tau: int, group: RsaGroup, k: int = 128) -> VdfChallenge:
        return cls(None, tau, group, k, x)

    @property
    def element(self) -> GroupElement:
        return GroupElement(self.x, self.group)


@dataclass(frozen=True)
class EvalTranscript:
    y: GroupElement
    squarings: int
    checkpoints: Optional[Tuple[GroupElement, ...]] = None

    @property
    def segments(self) -> Optional[int]:
        return None if self.checkpoints is None else len(self.checkpoints) - 1


@dataclass(frozen=True)
class VdfProof:
    l: int
    pi: GroupElement
    tau: int

    def __post_init__(self):
        if self.l < 0:
            raise MalformedProof("negative proof prime")


class VerifyResult(NamedTuple):
    accepted: bool
    multiplications: int
    stats: Optional[MultiExpStats]
    small_mults: int

    def __bool__(self) -> bool:
        return self.accepted


def evaluate(ch: VdfChallenge, s: Optional[int] = None) -> EvalTranscript:
    """y = x^(2^tau) mod N by tau dependent squarings.

    With ``s`` checkpoints, x^(2^(i*tau/s)) is recorded for i = 0..s along
    the same chain.
    """
    tau = ch.tau
    n = mpz(ch.group.modulus)
    y = mpz(ch.x)
    if s is None:
        for _ in range(tau):
            y = y * y % n
        return EvalTranscript(GroupElement(int(y), ch.group), tau)

    if s < 1 or tau % s:
        raise ParameterError(f"checkpoint count {s} must divide tau={tau}")
    step = tau // s
    marks = [y]
    count = 0
    for _ in range(s):
        for _ in range(step):
            y = y * y % n
        count += step
        marks.append(y)
    points = tuple(GroupElement(int(v), ch.group) for v in marks)
    return EvalTranscript(points[-1], count, points)


def _proof_prime(ch: VdfChallenge, y: GroupElement) -> int:
    if y.group.modulus != ch.group.modulus:
        raise ParameterError("output lives in a different group")
    return h_prime(ch.x, y.value, ch.k)


def pi_direct(x: int, tau: int, l: int, n: int) -> int:
    return int(pow(mpz(x), (1 << tau) // l, mpz(n)))


def pi_long_division(x: int, tau: int, l: int, n: int) -> Tuple[int, int]:
    """Stream the bits of floor(2^tau / l) most significant first.

    Returns (pi, group operations). Each step squares the accumulator and
    multiplies by x when the next quotient bit is 1, so ops <= 2 tau.
    """
    nm = mpz(n)
    xm = mpz(x)
    pi = mpz(1)
    r = 1
    ops = 0
    for _ in range(tau):
        r <<= 1
        pi = pi * pi % nm
        ops += 1
        if r >= l:
            r -= l
            pi = pi * xm % nm
            ops += 1
    return int(pi), ops


def _segment(args) -> int:
    """One block of the quotient, raised on its own checkpoint.

    Block j holds the quotient bits of weight 2^(j*t) .. 2^(j*t + t - 1);
    the remainder entering the block is 2^(tau - (j+1) t) mod l. When
    ``nxt`` is given the worker also re-squares its checkpoint t times and
    compares with the next one.
    """
    start, nxt, t, offset, l, n = args
    nm = mpz(n)
    base = mpz(start)
    if nxt is not None:
        probe = base
        for _ in range(t):
            probe = probe * probe % nm
        if probe != nxt:
            raise IntegrityError("checkpoint chain is broken")
    r = pow(2, offset, l)
    acc = mpz(1)
    for _ in range(t):
        r <<= 1
        acc = acc * acc % nm
        if r >= l:
            r -= l
            acc = acc * base % nm
    return int(acc)


def pi_parallel(
    checkpoints: Sequence[int],
    tau: int,
    l: int,
    n: int,
    executor: Optional[Executor] = None,
    check_chain: bool = True,
) -> int:
    s = len(checkpoints) - 1
    t = tau // s
    jobs = [
        (
            checkpoints[j],
            checkpoints[j + 1] if check_chain else None,
            t,
            tau - (j + 1) * t,
            l,
            n,
        )
        for j in range(s)
    ]
    mapper = executor.map if executor is not None else map
    nm = mpz(n)
    out = mpz(1)
    for part in mapper(_segment, jobs):
        out = out * part % nm
    return int(out)


def prove_direct(ch: VdfChallenge, y: GroupElement) -> VdfProof:
    l = _proof_prime(ch, y)
    pi = pi_direct(ch.x, ch.tau, l, ch.group.modulus)
    return VdfProof(l, GroupElement(pi, ch.group), ch.tau)


def prove_long_division(ch: VdfChallenge, y: GroupElement) -> Tuple[VdfProof, int]:
    l = _proof_prime(ch, y)
    pi, ops = pi_long_division(ch.x, ch.tau, l, ch.group.modulus)
    return VdfProof(l, GroupElement(pi, ch.group), ch.tau), ops


def prove_parallel(
    ch: VdfChallenge,
    transcript: EvalTranscript,
    executor: Optional[Executor] = None,
    check_chain: bool = True,
) -> VdfProof:
    """Checkpoint-parallel proof; pass an executor to spread the segments.

    Segment jobs share nothing and the combine step multiplies them in a
    fixed order, so the result does not depend on scheduling.
    """
    points = transcript.checkpoints
    if points is None or len(points) < 2:
        raise ParameterError("parallel proof needs an evaluation with checkpoints")
    s = len(points) - 1
    if ch.tau % s:
        raise ParameterError(f"{s} segments do not divide tau={ch.tau}")
    if points[0].value != ch.x:
        raise IntegrityError("first checkpoint is not the challenge input")
    if points[-1] != transcript.y:
        raise IntegrityError("last checkpoint is not the evaluation output")
    l = _proof_prime(ch, transcript.y)
    values = [p.value for p in points]
    pi = pi_parallel(values, ch.tau, l, ch.group.modulus, executor, check_chain)
    return VdfProof(l, GroupElement(pi, ch.group), ch.tau)


def pow2_mod(tau: int, l: int) -> Tuple[int, int]:
    """2^tau mod l by square-and-multiply; returns (value, small mults)."""
    if l == 1:
        return 0, 0
    result = 1
    ops = 0
    for bit in bin(tau)[2:]:
        result = result * result % l
        ops += 1
        if bit == "1":
            result = (result << 1) % l
            ops += 1
    return result, ops


XSource = Union[bytes, int, GroupElement]


def verify(
    x_source: XSource,
    tau: Optional[int],
    proof: VdfProof,
    group: RsaGroup,
    k: int = 128,
    w: int = 2,
) -> VerifyResult:
    """Check a proof against an input message (bytes) or input element.

    Rebuilds y = pi^l * x^r with r = 2^tau mod l and accepts iff
    H_prime(x + y) == l. The returned multiplication count covers the
    lambda-bit products of the multi-exponentiation, precomputation included.
    """
    check_k(k)
    if tau is None:
        tau = proof.tau
    n = group.modulus
    if not 0 <= proof.pi.value < n or proof.pi.group.modulus != n:
        raise MalformedProof("pi is not a residue of this group")
    if isinstance(x_source, bytes):
        x = derive_input(x_source, k, group)
    else:
        x = int(x_source)
        if not 0 <= x < n:
            raise ParameterError("input element outside [0, N)")

    l = proof.l
    if tau < 0 or l < 2 or l >= 1 << (2 * k):
        return VerifyResult(False, 0, None, 0)

    r, small = pow2_mod(tau, l)
    pi = GroupElement(proof.pi.value, group)
    # identity digits are still multiplied so the count depends only on bits(l)
    y, stats = multiexp_interleaved(pi, l, GroupElement(x, group), r, w, skip_identity=False)
    try:
        ok = h_prime(x, y.value, k) == l
    except OverflowNegligible:
        ok = False
    return VerifyResult(ok, stats.total, stats, small)


def proof_size(lam: int, k: int) -> int:
    return (lam + 2 * k) // 8


def encode_proof(proof: VdfProof, lam: int, k: int) -> bytes:
    """Fixed-width big-endian l (2k bits) followed by pi (lambda bits)."""
    if lam % 8 or k % 8:
        raise ParameterError("lambda and k must be multiples of 8")
    if proof.l >= 1 << (2 * k) or proof.pi.value >= 1 << lam:
        raise MalformedProof("proof field does not fit its width")
    return int_to_bytes(proof.l, 2 * k // 8) + int_to_bytes(proof.pi.value, lam // 8)


def decode_proof(data: bytes, group: RsaGroup, k: int, *, tau: int) -> VdfProof:
    """Inverse of :func:`encode_proof`; tau travels outside the blob."""
    lam = group.bits
    if lam % 8 or k % 8:
        raise ParameterError("lambda and k must be multiples of 8")
    if len(data) != proof_size(lam, k):
        raise MalformedProof(f"expected {proof_size(lam, k)} bytes, got {len(data)}")
    split = 2 * k // 8
    l = int.from_bytes(data[:split], "big")
    pi = int.from_bytes(data[split:], "big")
    if pi >= group.modulus:
        raise MalformedProof("pi is not reduced modulo N")
    return VdfProof(l, GroupElement(pi, group), tau)
