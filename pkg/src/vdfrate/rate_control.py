"""Per-node VDF chaining and the verifier-side admission pipeline.

Every transaction carries a VDF whose input is the hash of the issuer's
previous transaction, so one identity cannot run two evaluations at once.
Difficulty scales inversely with the issuer's reputation, keeping allowed
throughput linear in reputation (splitting an identity gains nothing).

Wire format, all integers big-endian::

    version       1 B
    issuer       32 B   Ed25519 public key
    prev_link    32 B   SHA-256(previous tx) or the timestamp left-padded to 32 B
    timestamp     8 B   unix seconds
    tau           8 B
    payload_len   4 B
    payload       payload_len B
    proof         (lambda + 2k) / 8 B
    signature    64 B   over every preceding byte
"""

from __future__ import annotations

import enum
import hashlib
import struct
import threading
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, MutableMapping, NamedTuple, Optional, Union

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .config import ProtocolConfig
from .errors import MalformedProof, MalformedTransaction, ParameterError, SequencingError
from .vdf import (
    VdfChallenge,
    decode_proof,
    encode_proof,
    evaluate,
    proof_size,
    prove_long_division,
    verify,
)

VERSION = 1
HEADER = struct.Struct(">B32s32sQQI")
SIG_SIZE = 64
FIXED_OVERHEAD = HEADER.size + SIG_SIZE  # 149 bytes


class NodeIdentity:
    """A signing key plus the reputation mass it speaks for."""

    def __init__(self, secret: Ed25519PrivateKey, reputation: float = 1.0):
        if reputation < 0:
            raise ParameterError("reputation must be non-negative")
        self._secret = secret
        self.public_key = secret.public_key().public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )
        self.reputation = reputation
        self._issuing = threading.Lock()

    @classmethod
    def generate(cls, reputation: float = 1.0) -> NodeIdentity:
        return cls(Ed25519PrivateKey.generate(), reputation)

    @classmethod
    def from_seed(cls, seed: bytes, reputation: float = 1.0) -> NodeIdentity:
        return cls(Ed25519PrivateKey.from_private_bytes(seed), reputation)

    @property
    def seed(self) -> bytes:
        return self._secret.private_bytes(
            serialization.Encoding.Raw,
            serialization.PrivateFormat.Raw,
            serialization.NoEncryption(),
        )

    @property
    def node_id(self) -> str:
        return self.public_key.hex()

    def sign(self, data: bytes) -> bytes:
        return self._secret.sign(data)

    def __repr__(self):
        return f"NodeIdentity({self.node_id[:16]}..., reputation={self.reputation})"


def signature_valid(public_key: bytes, signature: bytes, data: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, data)
    except (InvalidSignature, ValueError):
        return False
    return True


def timestamp_link(timestamp: int) -> bytes:
    return timestamp.to_bytes(32, "big")


@dataclass(frozen=True)
class Transaction:
    issuer: bytes
    prev_link: bytes
    timestamp: int
    tau: int
    payload: bytes
    proof: bytes
    signature: bytes = b""
    version: int = VERSION

    def signing_bytes(self) -> bytes:
        head = HEADER.pack(
            self.version, self.issuer, self.prev_link, self.timestamp, self.tau, len(self.payload)
        )
        return head + self.payload + self.proof

    def to_bytes(self) -> bytes:
        return self.signing_bytes() + self.signature

    def tx_hash(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()

    @property
    def size(self) -> int:
        return FIXED_OVERHEAD + len(self.payload) + len(self.proof)

    @classmethod
    def from_bytes(cls, data: bytes, lam: int, k: int) -> Transaction:
        if len(data) < HEADER.size:
            raise MalformedTransaction("truncated header")
        version, issuer, prev_link, ts, tau, plen = HEADER.unpack_from(data)
        if version != VERSION:
            raise MalformedTransaction(f"unknown version {version}")
        psize = proof_size(lam, k)
        if len(data) != FIXED_OVERHEAD + plen + psize:
            raise MalformedTransaction("length does not match header")
        body = HEADER.size
        payload = data[body : body + plen]
        proof = data[body + plen : body + plen + psize]
        signature = data[body + plen + psize :]
        return cls(issuer, prev_link, ts, tau, payload, proof, signature, version)


@dataclass
class ReputationMap:
    masses: dict = field(default_factory=dict)
    alpha: float = 0.1

    def __post_init__(self):
        if self.alpha <= 0:
            raise ParameterError("alpha must be positive")
        if any(m < 0 for m in self.masses.values()):
            raise ParameterError("reputation must be non-negative")

    @classmethod
    def from_nodes(cls, nodes: Iterable[NodeIdentity], alpha: float = 0.1) -> ReputationMap:
        return cls({n.node_id: n.reputation for n in nodes}, alpha)

    def mass(self, node: Union[NodeIdentity, bytes, str]) -> float:
        return self.masses.get(_node_key(node), 0.0)

    def throughput(self, node) -> float:
        return self.alpha * self.mass(node)


def _node_key(node) -> str:
    if isinstance(node, NodeIdentity):
        return node.node_id
    if isinstance(node, bytes):
        return node.hex()
    return node


@dataclass(frozen=True)
class CalibrationCurve:
    """Evaluation time is linear in tau: t(tau) = tau / sigma."""

    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ParameterError("squaring rate must be positive")

    def seconds(self, tau: int) -> float:
        return tau / self.sigma

    def tau_for(self, seconds: float) -> int:
        return max(1, round(seconds * self.sigma))

    def throughput(self, tau: int) -> float:
        return self.sigma / tau


class NotPermitted(ParameterError):
    """The node has no reputation and may not issue."""


def difficulty_for(
    node,
    rep: ReputationMap,
    cal: CalibrationCurve,
    tau_min: int = 1,
    tau_max: int = 1 << 40,
) -> int:
    """tau = round(sigma / (alpha * m_i)), clamped to [tau_min, tau_max]."""
    m = rep.mass(node)
    if m <= 0:
        raise NotPermitted(f"node {_node_key(node)[:16]} has no reputation")
    tau = round(cal.sigma / (rep.alpha * m))
    return min(max(tau, tau_min), tau_max)


def speedup(thetas: Iterable) -> Fraction:
    """max(theta) / min(theta) as an exact rational."""
    values = [Fraction(t) for t in thetas]
    if not values:
        raise ValueError("speedup of an empty set")
    if min(values) <= 0:
        raise ValueError("throughputs must be positive")
    return max(values) / min(values)


def issue(
    node: NodeIdentity,
    payload: bytes,
    prev_tx: Optional[Transaction],
    tau: int,
    cfg: ProtocolConfig,
    timestamp: Optional[int] = None,
) -> Transaction:
    """Evaluate, prove, encode and sign the node's next transaction."""
    if not node._issuing.acquire(blocking=False):
        raise SequencingError("previous issue by this identity is still running")
    try:
        ts = int(time.time()) if timestamp is None else timestamp
        if prev_tx is None:
            link = timestamp_link(ts)
        else:
            if prev_tx.issuer != node.public_key:
                raise ParameterError("a node can only chain on its own transactions")
            link = prev_tx.tx_hash()
        ch = VdfChallenge(link, tau, cfg.group, cfg.k)
        out = evaluate(ch)
        proof, _ = prove_long_division(ch, out.y)
        unsigned = Transaction(
            node.public_key, link, ts, tau, payload, encode_proof(proof, cfg.lam, cfg.k)
        )
        return replace(unsigned, signature=node.sign(unsigned.signing_bytes()))
    finally:
        node._issuing.release()


class Reject(enum.Enum):
    MALFORMED = "Malformed"
    BAD_SIGNATURE = "BadSignature"
    NOT_PERMITTED = "NotPermitted"
    INSUFFICIENT_DIFFICULTY = "InsufficientDifficulty"
    STALE_LINK = "StaleLink"
    CLOCK_SKEW = "ClockSkew"
    INVALID_VDF = "InvalidVdf"


class AdmitResult(NamedTuple):
    accepted: bool
    reason: Optional[Reject] = None

    def __bool__(self) -> bool:
        return self.accepted


def admit(
    tx: Union[bytes, Transaction],
    known_prev: MutableMapping[bytes, bytes],
    rep: ReputationMap,
    cal: CalibrationCurve,
    cfg: ProtocolConfig,
    now: Optional[float] = None,
) -> AdmitResult:
    """Run the checks in order and record the tx hash on acceptance.

    ``known_prev`` maps issuer public key to the hash of its last accepted
    transaction; it is the only state and is updated in place.
    """
    # (1) structure
    try:
        if isinstance(tx, (bytes, bytearray)):
            tx = Transaction.from_bytes(bytes(tx), cfg.lam, cfg.k)
        proof = decode_proof(tx.proof, cfg.group, cfg.k, tau=tx.tau)
    except (MalformedTransaction, MalformedProof):
        return AdmitResult(False, Reject.MALFORMED)
    if len(tx.signature) != SIG_SIZE:
        return AdmitResult(False, Reject.MALFORMED)

    # (2) signature
    if not signature_valid(tx.issuer, tx.signature, tx.signing_bytes()):
        return AdmitResult(False, Reject.BAD_SIGNATURE)

    # (3) difficulty
    try:
        required = difficulty_for(tx.issuer, rep, cal, cfg.tau_min, cfg.tau_max)
    except NotPermitted:
        return AdmitResult(False, Reject.NOT_PERMITTED)
    if tx.tau < required:
        return AdmitResult(False, Reject.INSUFFICIENT_DIFFICULTY)

    # (4) chain link
    last = known_prev.get(tx.issuer)
    if last is not None:
        if tx.prev_link != last:
            return AdmitResult(False, Reject.STALE_LINK)
    else:
        if tx.prev_link != timestamp_link(tx.timestamp):
            return AdmitResult(False, Reject.STALE_LINK)
        clock = time.time() if now is None else now
        if abs(tx.timestamp - clock) > cfg.clock_skew:
            return AdmitResult(False, Reject.CLOCK_SKEW)

    # (5) VDF
    if not verify(tx.prev_link, tx.tau, proof, cfg.group, cfg.k, cfg.window_bits):
        return AdmitResult(False, Reject.INVALID_VDF)

    known_prev[tx.issuer] = tx.tx_hash()
    return AdmitResult(True)


class Verifier:
    """Admission state for one verifying node.

    Calls for different issuers may run concurrently; calls for the same
    issuer are serialised so the link record has a single writer.
    """

    def __init__(self, rep: ReputationMap, cal: CalibrationCurve, cfg: ProtocolConfig):
        self.rep = rep
        self.cal = cal
        self.cfg = cfg
        self.known_prev: dict[bytes, bytes] = {}
        self._locks: dict[bytes, threading.Lock] = {}
        self._guard = threading.Lock()

    def _lock_for(self, issuer: bytes) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(issuer, threading.Lock())

    def admit(self, tx: Union[bytes, Transaction], now: Optional[float] = None) -> AdmitResult:
        issuer = tx[1:33] if isinstance(tx, (bytes, bytearray)) else tx.issuer
        with self._lock_for(bytes(issuer)):
            return admit(tx, self.known_prev, self.rep, self.cal, self.cfg, now)
