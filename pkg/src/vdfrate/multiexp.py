"""Simultaneous double exponentiation a^e1 * b^e2 mod N.

Two methods are provided: a naive one (two square-and-multiply passes and a
final product) and an interleaved fixed-window one sharing a single
squaring chain. Both report how many modular multiplications they issued.
All arithmetic goes through a ``mul`` callable so a caller can wrap it and
count independently.
"""

from __future__ import annotations

import csv
import random
import statistics
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from gmpy2 import mpz

from .group_arith import GroupElement, RsaGroup, next_prime

Mul = Callable[[object, object], object]

CSV_HEADER = ("lambda", "k", "w", "method", "median_ns", "mad_ns", "squarings", "mults")


@dataclass
class MultiExpStats:
    squarings: int = 0
    multiplications: int = 0
    precompute_mults: int = 0
    window_bits: int = 1

    @property
    def total(self) -> int:
        return self.squarings + self.multiplications + self.precompute_mults


def _modmul(n) -> Mul:
    def mul(a, b):
        return a * b % n

    return mul


def _check_pair(a: GroupElement, b: GroupElement, e1: int, e2: int) -> RsaGroup:
    if a.group.modulus != b.group.modulus:
        raise ValueError("bases live in different groups")
    if e1 < 0 or e2 < 0:
        raise ValueError("exponents must be non-negative")
    return a.group


def _square_multiply(base, e: int, mul: Mul, stats: MultiExpStats):
    # left-to-right binary; the leading bit seeds the accumulator
    if e == 0:
        return mpz(1)
    bits = bin(e)[3:]
    acc = base
    for bit in bits:
        acc = mul(acc, acc)
        stats.squarings += 1
        if bit == "1":
            acc = mul(acc, base)
            stats.multiplications += 1
    return acc


def multiexp_naive(
    a: GroupElement, e1: int, b: GroupElement, e2: int, mul: Optional[Mul] = None
) -> tuple[GroupElement, MultiExpStats]:
    group = _check_pair(a, b, e1, e2)
    n = mpz(group.modulus)
    mul = mul or _modmul(n)
    stats = MultiExpStats(window_bits=1)
    left = _square_multiply(mpz(a.value), e1, mul, stats)
    right = _square_multiply(mpz(b.value), e2, mul, stats)
    out = mul(left, right)
    stats.multiplications += 1
    return GroupElement(int(out) % group.modulus, group), stats


def multiexp_interleaved(
    a: GroupElement,
    e1: int,
    b: GroupElement,
    e2: int,
    w: int = 2,
    mul: Optional[Mul] = None,
    skip_identity: bool = True,
) -> tuple[GroupElement, MultiExpStats]:
    """Fixed-window interleaved exponentiation with a 2^w x 2^w table.

    The scan covers max(bits(e1), bits(e2)) rounded up to a multiple of w,
    squaring w times per digit. With ``skip_identity=False`` the (0, 0)
    digit still multiplies by the table's identity entry, so the operation
    count depends only on the exponent lengths.
    """
    if not 1 <= w <= 8:
        raise ValueError("window width must be in [1, 8]")
    group = _check_pair(a, b, e1, e2)
    n = mpz(group.modulus)
    mul = mul or _modmul(n)
    stats = MultiExpStats(window_bits=w)
    size = 1 << w
    mask = size - 1

    one = mpz(1)
    apow = [one, mpz(a.value)]
    bpow = [one, mpz(b.value)]
    for _ in range(2, size):
        apow.append(mul(apow[-1], apow[1]))
        bpow.append(mul(bpow[-1], bpow[1]))
        stats.precompute_mults += 2
    table = [[one] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            if i == 0:
                table[i][j] = bpow[j]
            elif j == 0:
                table[i][j] = apow[i]
            else:
                table[i][j] = mul(apow[i], bpow[j])
                stats.precompute_mults += 1

    digits = -(-max(e1.bit_length(), e2.bit_length()) // w)
    acc = one
    for d in range(digits - 1, -1, -1):
        for _ in range(w):
            acc = mul(acc, acc)
            stats.squarings += 1
        shift = d * w
        i = (e1 >> shift) & mask
        j = (e2 >> shift) & mask
        if i or j or not skip_identity:
            acc = mul(acc, table[i][j])
            stats.multiplications += 1
    return GroupElement(int(acc) % group.modulus, group), stats


def _median_mad(samples: list[int]) -> tuple[float, float]:
    med = statistics.median(samples)
    return med, statistics.median(abs(s - med) for s in samples)


def bench_multiexp(
    lambdas: Iterable[int] = (2048, 4096),
    ks: Iterable[int] = (128, 192, 256),
    ws: Iterable[int] = (2,),
    repetitions: int = 30,
    seed: int = 0,
) -> list[dict]:
    """Time both methods on verification-shaped inputs.

    Exponents mimic (l, r): a 2k-bit prime and a residue below it. Moduli
    are random odd numbers of the requested size, which is enough for
    timing. Every iteration asserts the two methods agree.
    """
    rng = random.Random(seed)
    rows = []
    for lam in lambdas:
        n = rng.getrandbits(lam) | 1 | (1 << (lam - 1))
        group = RsaGroup(n)
        for k in ks:
            e1 = next_prime(rng.getrandbits(2 * k) | (1 << (2 * k - 1)))
            e2 = rng.randrange(e1)
            a = group.element(rng.randrange(2, n))
            b = group.element(rng.randrange(2, n))
            for w in ws:
                methods = {
                    "naive": lambda: multiexp_naive(a, e1, b, e2),
                    "interleaved": lambda: multiexp_interleaved(a, e1, b, e2, w),
                }
                timings: dict[str, list[int]] = {m: [] for m in methods}
                stats = {}
                for rep in range(repetitions):
                    values = {}
                    # alternate the order so drift hits both methods alike
                    for name in sorted(methods, reverse=bool(rep % 2)):
                        t0 = time.perf_counter_ns()
                        values[name], stats[name] = methods[name]()
                        timings[name].append(time.perf_counter_ns() - t0)
                    if values["naive"] != values["interleaved"]:
                        raise AssertionError("multiexp methods disagree")
                for name in methods:
                    med, mad = _median_mad(timings[name])
                    st = stats[name]
                    rows.append(
                        {
                            "lambda": lam,
                            "k": k,
                            "w": w,
                            "method": name,
                            "median_ns": med,
                            "mad_ns": mad,
                            "squarings": st.squarings,
                            "mults": st.multiplications + st.precompute_mults,
                        }
                    )
    return rows


def write_csv(path, rows: list[dict], header=CSV_HEADER) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(header))
        writer.writeheader()
        for row in rows:
            writer.writerow({key: row[key] for key in header})
