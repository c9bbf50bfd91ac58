import hashlib
import threading
from dataclasses import replace
from fractions import Fraction

import pytest

from vdfrate.config import ProtocolConfig, load_config, save_config
from vdfrate.errors import ConfigError, ParameterError, SequencingError
from vdfrate.rate_control import (
    FIXED_OVERHEAD,
    CalibrationCurve,
    NodeIdentity,
    NotPermitted,
    Reject,
    ReputationMap,
    Transaction,
    Verifier,
    admit,
    difficulty_for,
    issue,
    speedup,
    timestamp_link,
)
from vdfrate.vdf import VdfChallenge, decode_proof, verify

NOW = 1_700_000_000


@pytest.fixture(scope="module")
def cfg():
    from vdfrate.group_arith import RsaGroup

    return ProtocolConfig(RsaGroup.generate(512, seed=21).public(), squarings_per_sec=100.0, test_mode=True)


@pytest.fixture
def node():
    return NodeIdentity.from_seed(bytes(range(32)), reputation=1.0)


@pytest.fixture
def env(cfg, node):
    rep = ReputationMap.from_nodes([node], cfg.alpha)
    cal = CalibrationCurve(cfg.squarings_per_sec)
    return rep, cal


def test_difficulty_example():
    node = NodeIdentity.generate(1.0)
    rep = ReputationMap.from_nodes([node], 0.1)
    assert difficulty_for(node, rep, CalibrationCurve(1e6)) == 10**7


def test_difficulty_linear():
    a, b = NodeIdentity.generate(1.0), NodeIdentity.generate(2.0)
    rep = ReputationMap.from_nodes([a, b], 0.1)
    cal = CalibrationCurve(1e6)
    assert difficulty_for(b, rep, cal) * 2 == difficulty_for(a, rep, cal)


def test_difficulty_clamped_and_unpermitted():
    a = NodeIdentity.generate(1e9)
    rep = ReputationMap.from_nodes([a], 0.1)
    assert difficulty_for(a, rep, CalibrationCurve(1e6), tau_min=50) == 50
    with pytest.raises(NotPermitted):
        difficulty_for(NodeIdentity.generate(), rep, CalibrationCurve(1e6))


@pytest.mark.parametrize("j", [1, 2, 5, 10])
def test_sybil_split(j):
    cal = CalibrationCurve(1e6)
    whole = 3.0
    nodes = [NodeIdentity.generate(whole / j) for _ in range(j)]
    rep = ReputationMap.from_nodes(nodes, 0.1)
    total = sum(cal.throughput(difficulty_for(n, rep, cal)) for n in nodes)
    tau = difficulty_for(nodes[0], rep, cal)
    quantum = j * (cal.throughput(tau - 1) - cal.throughput(tau))
    assert abs(total - 0.1 * whole) <= quantum


def test_speedup():
    assert speedup([10**4, 10**12]) == 10**8
    assert speedup([10**6, 3 * 10**7]) == 30
    assert speedup([5, 5, 5]) == 1
    assert isinstance(speedup([1, 3]), Fraction)
    with pytest.raises(ValueError):
        speedup([0, 1])


def test_issue_admit_roundtrip(cfg, node, env):
    rep, cal = env
    tau = difficulty_for(node, rep, cal)
    assert tau == 1000
    first = issue(node, b"hello", None, tau, cfg, timestamp=NOW)
    assert first.prev_link == timestamp_link(NOW)
    assert first.size == FIXED_OVERHEAD + 5 + 96
    known = {}
    assert admit(first.to_bytes(), known, rep, cal, cfg, now=NOW) == (True, None)
    second = issue(node, b"again", first, tau, cfg, timestamp=NOW + 5)
    assert second.prev_link == hashlib.sha256(first.to_bytes()).digest()
    assert admit(second, known, rep, cal, cfg, now=NOW + 5).accepted
    assert known[node.public_key] == second.tx_hash()


def test_wire_roundtrip(cfg, node):
    tx = issue(node, b"p" * 40, None, 20, cfg, timestamp=NOW)
    raw = tx.to_bytes()
    assert len(raw) == tx.size == 149 + 40 + 96
    assert Transaction.from_bytes(raw, cfg.lam, cfg.k) == tx
    assert raw[0] == 1 and raw[1:33] == node.public_key


def test_replay_is_stale(cfg, node, env):
    rep, cal = env
    tx = issue(node, b"x", None, 1000, cfg, timestamp=NOW)
    known = {}
    assert admit(tx, known, rep, cal, cfg, now=NOW)
    assert admit(tx, known, rep, cal, cfg, now=NOW) == (False, Reject.STALE_LINK)


def test_insufficient_difficulty(cfg, node, env):
    rep, cal = env
    tx = issue(node, b"x", None, 999, cfg, timestamp=NOW)
    assert admit(tx, {}, rep, cal, cfg, now=NOW) == (False, Reject.INSUFFICIENT_DIFFICULTY)


def test_unknown_issuer(cfg, env):
    rep, cal = env
    stranger = NodeIdentity.generate()
    tx = issue(stranger, b"x", None, 1000, cfg, timestamp=NOW)
    assert admit(tx, {}, rep, cal, cfg, now=NOW) == (False, Reject.NOT_PERMITTED)


def test_bad_signature_and_malformed(cfg, node, env):
    rep, cal = env
    tx = issue(node, b"x", None, 1000, cfg, timestamp=NOW)
    forged = replace(tx, payload=b"y")
    assert admit(forged, {}, rep, cal, cfg, now=NOW) == (False, Reject.BAD_SIGNATURE)
    assert admit(tx.to_bytes()[:-1], {}, rep, cal, cfg, now=NOW) == (False, Reject.MALFORMED)
    assert admit(b"\x02" + tx.to_bytes()[1:], {}, rep, cal, cfg, now=NOW) == (False, Reject.MALFORMED)


def test_clock_skew(cfg, node, env):
    rep, cal = env
    tx = issue(node, b"x", None, 1000, cfg, timestamp=NOW)
    assert admit(tx, {}, rep, cal, cfg, now=NOW + 10_000) == (False, Reject.CLOCK_SKEW)


def test_invalid_vdf(cfg, node, env):
    rep, cal = env
    tx = issue(node, b"x", None, 1000, cfg, timestamp=NOW)
    proof = bytearray(tx.proof)
    proof[-1] ^= 1
    bad = replace(tx, proof=bytes(proof))
    bad = replace(bad, signature=node.sign(bad.signing_bytes()))
    assert admit(bad, {}, rep, cal, cfg, now=NOW) == (False, Reject.INVALID_VDF)


def test_altering_previous_invalidates_next(cfg, node):
    first = issue(node, b"one", None, 50, cfg, timestamp=NOW)
    second = issue(node, b"two", first, 50, cfg, timestamp=NOW + 1)
    proof = decode_proof(second.proof, cfg.group, cfg.k, tau=50)
    assert verify(first.tx_hash(), 50, proof, cfg.group, cfg.k)
    altered = replace(first, payload=b"ONE")
    assert not verify(altered.tx_hash(), 50, proof, cfg.group, cfg.k)


def test_sequencing_error(cfg, node):
    node._issuing.acquire()
    try:
        with pytest.raises(SequencingError):
            issue(node, b"x", None, 10, cfg, timestamp=NOW)
    finally:
        node._issuing.release()
    issue(node, b"x", None, 10, cfg, timestamp=NOW)


def test_cannot_chain_on_foreign_tx(cfg, node):
    other = NodeIdentity.generate()
    tx = issue(other, b"x", None, 10, cfg, timestamp=NOW)
    with pytest.raises(ParameterError):
        issue(node, b"y", tx, 10, cfg, timestamp=NOW)


def test_verifier_concurrent_issuers(cfg):
    nodes = [NodeIdentity.generate(1.0) for _ in range(4)]
    rep = ReputationMap.from_nodes(nodes, cfg.alpha)
    cal = CalibrationCurve(cfg.squarings_per_sec)
    txs = [issue(n, b"c", None, 1000, cfg, timestamp=NOW) for n in nodes]
    v = Verifier(rep, cal, cfg)
    results = []
    threads = [threading.Thread(target=lambda t=t: results.append(v.admit(t, now=NOW))) for t in txs * 2]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    # each tx accepted once, its duplicate rejected as stale
    assert sum(r.accepted for r in results) == 4
    assert sum(r.reason == Reject.STALE_LINK for r in results) == 4


def test_config_roundtrip(tmp_path, cfg):
    path = tmp_path / "c.json"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("[1]")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        ProtocolConfig.from_dict({"lambda": 1024})
    with pytest.raises(ConfigError):
        ProtocolConfig.from_dict({"lambda": 4096, "modulus": "f" * 512})
    assert load_config(None).lam == 2048


def test_small_modulus_needs_test_mode():
    from vdfrate.group_arith import RsaGroup

    with pytest.raises(ConfigError):
        ProtocolConfig(RsaGroup.generate(512, seed=1))


def test_challenge_is_prev_link(cfg, node):
    tx = issue(node, b"x", None, 30, cfg, timestamp=NOW)
    ch = VdfChallenge(tx.prev_link, 30, cfg.group, cfg.k)
    assert verify(ch.x, 30, decode_proof(tx.proof, cfg.group, cfg.k, tau=30), cfg.group)
