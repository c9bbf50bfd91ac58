"""Modular arithmetic over RSA groups, hashing to integers and prime search.

Values cross the public API as plain ``int``; the squaring loops run on
``gmpy2.mpz`` internally because they dominate every timing in the package.
"""

from __future__ import annotations

import hashlib
import math
import random
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import gmpy2
from gmpy2 import mpz

from .errors import ConfigError, OverflowNegligible, UnsupportedOperation

MIN_K = 48
MAX_K = 256
PRODUCTION_BITS = (1024, 2048, 3072, 4096)
MR_ROUNDS = 64
TRIAL_DIVISION_LIMIT = 1 << 16

# RSA-2048 factoring challenge number; nobody is known to hold its factors.
RSA_2048 = int(
    "25195908475657893494027183240048398571429282126204032027777137836043662020707595556264018525880784406918290641249515082189298559149176184502808489120072844992687392807287776735971418347270261896375014971824691165077613379859095700097330459748808428401797429100642458691817195118746121515172654632282216869987549182422433637259085141865462043576798423387184774447920739934236584823824281198163815010674810451660377306056201619676256133844143603833904414952634432190114657544454178424020924616515723350778707749817125772467962926386356373289912154831438167899885040445364023527381951378636564391212010397122822120720357"
)


def _sieve(limit: int) -> list[int]:
    flags = bytearray([1]) * limit
    flags[0:2] = b"\x00\x00"
    for i in range(2, math.isqrt(limit - 1) + 1):
        if flags[i]:
            flags[i * i :: i] = bytearray(len(flags[i * i :: i]))
    return [i for i, f in enumerate(flags) if f]


_SMALL_PRIMES = _sieve(TRIAL_DIVISION_LIMIT)
_SMALL_PRIME_SET = frozenset(_SMALL_PRIMES)
# product of the primes below 2000, used as a cheap gcd pre-filter
_PREFILTER = math.prod(p for p in _SMALL_PRIMES if p < 2000)


@dataclass(frozen=True)
class RsaGroup:
    """Multiplicative group of integers modulo an RSA modulus N.

    ``trapdoor`` holds (p, q) and is only populated for test groups; it is
    excluded from equality so a test group equals its public view.
    """

    modulus: int
    trapdoor: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        n = self.modulus
        if n < 3 or n % 2 == 0:
            raise ConfigError(f"modulus must be odd and >= 3, got {n}")
        if self.trapdoor is not None:
            p, q = self.trapdoor
            if p * q != n or p == q:
                raise ConfigError("trapdoor does not factor the modulus")
            if not (is_probable_prime(p) and is_probable_prime(q)):
                raise ConfigError("trapdoor factors are not prime")

    @property
    def bits(self) -> int:
        return self.modulus.bit_length()

    @property
    def byte_length(self) -> int:
        return (self.bits + 7) // 8

    def element(self, value: int) -> GroupElement:
        return GroupElement(value, self)

    def public(self) -> RsaGroup:
        return RsaGroup(self.modulus)

    @property
    def carmichael(self) -> int:
        if self.trapdoor is None:
            raise UnsupportedOperation("group has no trapdoor")
        p, q = self.trapdoor
        return math.lcm(p - 1, q - 1)

    @classmethod
    def generate(cls, bits: int, seed: Optional[int] = None) -> RsaGroup:
        """Build a test group with a known factorization.

        Both primes have their two top bits set so that N has exactly
        ``bits`` bits.
        """
        if bits < 16 or bits % 2:
            raise ConfigError("test modulus size must be even and >= 16 bits")
        rng = random.Random(seed)
        half = bits // 2
        while True:
            p = _random_prime(half, rng)
            q = _random_prime(half, rng)
            if p != q and (p * q).bit_length() == bits:
                return cls(p * q, (p, q))


def _random_prime(bits: int, rng: random.Random) -> int:
    top = (1 << (bits - 1)) | (1 << (bits - 2))
    while True:
        p = next_prime(rng.getrandbits(bits) | top)
        if p.bit_length() == bits:
            return p


def check_production_modulus(bits: int) -> None:
    """Refuse moduli below 1024 bits, warn at 1024."""
    if bits < 1024:
        raise ConfigError(f"{bits}-bit modulus is too weak for deployment")
    if bits not in PRODUCTION_BITS:
        raise ConfigError(f"modulus size must be one of {PRODUCTION_BITS}, got {bits}")
    if bits == 1024:
        warnings.warn(
            "1024-bit RSA moduli are weak; refresh the modulus often or use 2048 bits",
            stacklevel=2,
        )


@dataclass(frozen=True)
class GroupElement:
    value: int
    group: RsaGroup

    def __post_init__(self):
        if not 0 <= self.value < self.group.modulus:
            raise ValueError(f"{self.value} is not a residue modulo N")

    def __int__(self) -> int:
        return self.value


@dataclass(frozen=True)
class HashOutput:
    value: int
    k: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << (2 * self.k)):
            raise ValueError("hash output exceeds 2k bits")

    def __int__(self) -> int:
        return self.value


def check_k(k: int) -> None:
    if not MIN_K <= k <= MAX_K:
        raise ConfigError(f"security parameter k={k} outside [{MIN_K}, {MAX_K}]")


def hash_to_int(m: bytes, k: int = 128) -> HashOutput:
    """Hash ``m`` to a 2k-bit integer.

    For 2k = 256 this is plain SHA-256. Other widths take the leading 2k
    bits of SHA-256(0x00 || m) || SHA-256(0x01 || m).
    """
    check_k(k)
    width = 2 * k
    if width == 256:
        return HashOutput(int.from_bytes(hashlib.sha256(m).digest(), "big"), k)
    wide = hashlib.sha256(b"\x00" + m).digest() + hashlib.sha256(b"\x01" + m).digest()
    return HashOutput(int.from_bytes(wide, "big") >> (512 - width), k)


def int_to_bytes(value: int, width: Optional[int] = None) -> bytes:
    """Big-endian encoding: minimal length (0 -> b'\\x00') or fixed ``width``."""
    if value < 0:
        raise ValueError("negative integers have no encoding")
    if width is None:
        return value.to_bytes(max(1, (value.bit_length() + 7) // 8), "big")
    return value.to_bytes(width, "big")


def _miller_rabin(n: int, rounds: int) -> bool:
    # bases are drawn from a PRNG seeded with n so the test is a pure function
    rng = random.Random(n)
    nm = mpz(n)
    return all(gmpy2.is_strong_prp(nm, rng.randrange(2, n - 1)) for _ in range(rounds))


def is_probable_prime(n: int, rounds: int = MR_ROUNDS) -> bool:
    if n < TRIAL_DIVISION_LIMIT:
        return n in _SMALL_PRIME_SET
    if math.gcd(n, _PREFILTER) != 1:
        return False
    # one fixed-base round discards almost every composite cheaply; primes
    # always pass it, so only likely primes pay for the full seeded rounds
    if not gmpy2.is_strong_prp(mpz(n), 2):
        return False
    return _miller_rabin(n, rounds)


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    if n <= 2:
        return 2
    c = n if n % 2 else n + 1
    while not is_probable_prime(c):
        c += 2
    return c


def h_prime(x: int, y: int, k: int = 128) -> int:
    """Smallest prime >= H(BE(x + y)); must fit in 2k bits."""
    if x < 0 or y < 0:
        raise ValueError("h_prime takes non-negative integers")
    l = next_prime(hash_to_int(int_to_bytes(x + y), k).value)
    if l >= 1 << (2 * k):
        raise OverflowNegligible(f"proof prime exceeds {2 * k} bits")
    return l


def mod_exp(base: GroupElement, exponent: int) -> GroupElement:
    if exponent < 0:
        raise ValueError("negative exponent")
    n = base.group.modulus
    return GroupElement(int(gmpy2.powmod(base.value, exponent, n)), base.group)


def sequential_square(x: GroupElement, tau: int) -> Tuple[GroupElement, int]:
    """Return (x^(2^tau) mod N, number of squarings performed)."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    n = mpz(x.group.modulus)
    y = mpz(x.value)
    count = 0
    for _ in range(tau):
        y = y * y % n
        count += 1
    return GroupElement(int(y), x.group), count


def trapdoor_eval(x: GroupElement, tau: int, group: Optional[RsaGroup] = None) -> GroupElement:
    """Shortcut x^(2^tau) via exponent reduction modulo lambda(N).

    Needs the factorization; agrees with :func:`sequential_square` for x
    coprime to N.
    """
    group = group or x.group
    if group.trapdoor is None:
        raise UnsupportedOperation("trapdoor evaluation needs the factorization of N")
    e = pow(2, tau, group.carmichael)
    return GroupElement(int(gmpy2.powmod(x.value, e, group.modulus)), group)
