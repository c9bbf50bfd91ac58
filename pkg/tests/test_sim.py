from collections import Counter

import pytest

from vdfrate.errors import ConfigError
from vdfrate.sim import (
    DeviceProfile,
    ScenarioConfig,
    build_topology,
    default_devices,
    run_gossip_sim,
    spam_potential,
    speedup_report,
)

# fixed costs keep the simulation independent of the host
COSTS = {"PoW": 2e-6, "VDF": 3e-3}


def rows_by_key(rows):
    return {(r.device, r.function): r for r in rows}


def test_default_devices():
    names = {d.name: d for d in default_devices()}
    assert names["CPU"].hashes_per_sec == 1e4 and names["CPU"].squarings_per_sec == 1e6
    assert names["FPGA"].hashes_per_sec == 1e10 and names["FPGA"].squarings_per_sec == 3e7
    assert names["ASIC"].hashes_per_sec == 1e12 and names["ASIC"].squarings_per_sec is None


def test_spam_rows():
    cfg = ScenarioConfig()
    assert cfg.tau == 10**7
    rows = rows_by_key(spam_potential(cfg))
    assert rows["CPU", "PoW"].tx_per_sec == pytest.approx(0.1)
    assert rows["CPU", "PoW"].bandwidth_bps == pytest.approx(1280)
    assert rows["FPGA", "PoW"].bandwidth_bps == pytest.approx(1.28e9)
    assert rows["FPGA", "VDF"].tx_per_sec == pytest.approx(3)
    assert rows["FPGA", "VDF"].bandwidth_bps == pytest.approx(3 * 1888 * 8)
    assert not rows["ASIC", "VDF"].available
    assert rows["ASIC", "PoW"].speedup_vs_baseline == 10**8
    assert rows["FPGA", "VDF"].speedup_vs_baseline == 30
    for r in rows.values():
        if r.available:
            size = 1600 + (288 if r.function == "VDF" else 0)
            assert r.bandwidth_bps == pytest.approx(r.tx_per_sec * size * 8)


def test_spam_rows_sorted_and_pure():
    cfg = ScenarioConfig()
    first = spam_potential(cfg)
    assert first == spam_potential(cfg)
    assert [r.device for r in first][::2] == ["CPU", "FPGA", "ASIC"]


def test_speedup_pools():
    cfg = ScenarioConfig()
    one = rows_by_key(speedup_report(cfg, 1))
    many = rows_by_key(speedup_report(cfg, 1000))
    assert many["CPU", "PoW"].speedup == 1000 * one["CPU", "PoW"].speedup
    assert one["ASIC", "PoW"].speedup == 10**8
    for p in (1, 7, 1000):
        rows = rows_by_key(speedup_report(cfg, p))
        for dev in ("CPU", "FPGA"):
            assert rows[dev, "VDF"].speedup == one[dev, "VDF"].speedup
            assert rows[dev, "VDF"].cost_usd_per_hour == pytest.approx(p * one[dev, "VDF"].cost_usd_per_hour)
    with pytest.raises(ConfigError):
        speedup_report(cfg, 0)


def test_single_device_speedups():
    cfg = ScenarioConfig(devices=[DeviceProfile("CPU", 1e4, 1e6)], attacker_device=None)
    assert all(r.speedup == 1 for r in speedup_report(cfg, 1))


def test_scenario_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig(nodes=1)
    with pytest.raises(ConfigError):
        ScenarioConfig(nodes=5, neighbors=5)
    with pytest.raises(ConfigError):
        ScenarioConfig(attacker_device="GPU")
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        DeviceProfile("X", hashes_per_sec=-1)


def test_topology_connected():
    import random

    adj = build_topology(30, 4, random.Random(0))
    assert all(len(a) >= 4 for a in adj)
    seen, todo = {0}, [0]
    while todo:
        for j in adj[todo.pop()]:
            if j not in seen:
                seen.add(j)
                todo.append(j)
    assert len(seen) == 30


def test_no_attacker():
    cfg = ScenarioConfig(attacker_device=None, duration=10, verify_seconds=COSTS)
    out = run_gossip_sim(cfg)
    assert out["PoW"].attacker_bandwidth_bps == 0
    assert out["VDF"].attacker_bandwidth_bps == 0
    assert out["VDF"].honest_median_delay is not None


def test_attacker_ratio():
    out = run_gossip_sim(ScenarioConfig(duration=10, verify_seconds=COSTS))
    ratio = out["PoW"].attacker_bandwidth_bps / out["VDF"].attacker_bandwidth_bps
    assert ratio > 1e4
    assert out["PoW"].max_utilization > out["VDF"].max_utilization


def test_dedup_audit():
    cfg = ScenarioConfig(duration=5, verify_seconds=COSTS)
    out = run_gossip_sim(cfg, keep_log=True)
    for metrics in out.values():
        counts = Counter((node, tx) for _, node, tx in metrics.log)
        assert counts and max(counts.values()) == 1


def test_deterministic():
    cfg = ScenarioConfig(duration=5, verify_seconds=COSTS, seed=3)
    a, b = run_gossip_sim(cfg), run_gossip_sim(cfg)
    for fn in a:
        assert a[fn].attacker_bandwidth_bps == b[fn].attacker_bandwidth_bps
        assert a[fn].honest_median_delay == b[fn].honest_median_delay
        assert a[fn].utilization == b[fn].utilization


def test_overload_is_a_metric():
    cfg = ScenarioConfig(duration=5, verify_seconds={"PoW": 1e-3, "VDF": 1e-3}, queue_bound=3)
    out = run_gossip_sim(cfg)
    assert out["PoW"].overload_drops > 0
