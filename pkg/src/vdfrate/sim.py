"""Device-profile analytics and a small gossip simulation of spam vs. honest traffic.

``spam_potential`` and ``speedup_report`` are closed-form and involve no
timing, so they reproduce exactly from a config. ``run_gossip_sim`` is a
single-threaded discrete-event loop, deterministic for a fixed seed.
"""

from __future__ import annotations

import heapq
import itertools
import json
import random
import statistics
from dataclasses import dataclass, field, fields
from fractions import Fraction
from importlib import resources
from typing import Any, Optional

from .errors import ConfigError
from .rate_control import speedup
from .vdf import proof_size

FUNCTIONS = ("PoW", "VDF")


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    hashes_per_sec: Optional[float] = None
    squarings_per_sec: Optional[float] = None
    cost_usd_per_hour: Optional[float] = None

    def __post_init__(self):
        for rate in (self.hashes_per_sec, self.squarings_per_sec):
            if rate is not None and rate <= 0:
                raise ConfigError(f"{self.name}: rates must be positive")

    def rate(self, function: str) -> Optional[float]:
        return self.hashes_per_sec if function == "PoW" else self.squarings_per_sec

    @classmethod
    def from_dict(cls, data: dict) -> DeviceProfile:
        return cls(
            data["name"],
            data.get("hashes_per_sec"),
            data.get("squarings_per_sec"),
            data.get("cost_usd_per_hour"),
        )


def default_devices() -> list[DeviceProfile]:
    text = resources.files("vdfrate").joinpath("data/devices.json").read_text()
    return [DeviceProfile.from_dict(d) for d in json.loads(text)["devices"]]


@dataclass
class ScenarioConfig:
    tx_base_size: int = 1600
    lam: int = 2048
    k: int = 128
    pow_target_seconds_on_cpu: float = 10.0
    # None: the tau a baseline device needs for pow_target_seconds_on_cpu
    vdf_tau: Optional[int] = None
    baseline_device: str = "CPU"
    devices: list = field(default_factory=default_devices)
    # gossip simulation
    nodes: int = 20
    neighbors: int = 4
    attacker_device: Optional[str] = "FPGA"
    duration: float = 30.0
    seed: int = 0
    alpha: float = 0.1
    honest_reputation: float = 1.0
    link_latency: float = 0.05
    # seconds per verification by function; None means measure locally
    verify_seconds: Optional[dict] = None
    queue_bound: int = 10_000
    attacker_batch_hz: float = 200.0

    def __post_init__(self):
        if self.nodes < 2:
            raise ConfigError("need at least two nodes")
        if not 1 <= self.neighbors < self.nodes:
            raise ConfigError("neighbour degree must be in [1, nodes)")
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        names = [d.name for d in self.devices]
        if self.baseline_device not in names:
            raise ConfigError(f"baseline device {self.baseline_device!r} not in device list")
        if self.attacker_device is not None and self.attacker_device not in names:
            raise ConfigError(f"attacker device {self.attacker_device!r} not in device list")

    @property
    def vdf_overhead(self) -> int:
        return proof_size(self.lam, self.k)

    def tx_size(self, function: str) -> int:
        return self.tx_base_size + (self.vdf_overhead if function == "VDF" else 0)

    def device(self, name: str) -> DeviceProfile:
        for d in self.devices:
            if d.name == name:
                return d
        raise KeyError(name)

    @property
    def tau(self) -> int:
        if self.vdf_tau is not None:
            return self.vdf_tau
        sq = self.device(self.baseline_device).squarings_per_sec
        return round(sq * self.pow_target_seconds_on_cpu)

    def tx_rate(self, device: DeviceProfile, function: str) -> Optional[float]:
        """Transactions per second the device sustains under ``function``."""
        rate = device.rate(function)
        if rate is None:
            return None
        if function == "PoW":
            base = self.device(self.baseline_device).hashes_per_sec
            return rate / (self.pow_target_seconds_on_cpu * base)
        return rate / self.tau

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ScenarioConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "devices" in kwargs:
            kwargs["devices"] = [DeviceProfile.from_dict(d) for d in kwargs["devices"]]
        return cls(**kwargs)


@dataclass(frozen=True)
class SpamRow:
    device: str
    function: str
    tx_per_sec: Optional[float]
    bandwidth_bps: Optional[float]
    speedup_vs_baseline: Optional[Fraction]

    @property
    def available(self) -> bool:
        return self.tx_per_sec is not None


def _ordered(devices: list[DeviceProfile]) -> list[DeviceProfile]:
    # weakest hasher first, like the published table
    return sorted(devices, key=lambda d: (d.hashes_per_sec or 0.0, d.name))


def spam_potential(cfg: ScenarioConfig) -> list[SpamRow]:
    rows = []
    base = cfg.device(cfg.baseline_device)
    for dev in _ordered(cfg.devices):
        for fn in FUNCTIONS:
            tps = cfg.tx_rate(dev, fn)
            if tps is None:
                rows.append(SpamRow(dev.name, fn, None, None, None))
                continue
            # both rates share the divisor, so the ratio is exact on raw capacities
            ratio = Fraction(dev.rate(fn)) / Fraction(base.rate(fn))
            rows.append(SpamRow(dev.name, fn, tps, tps * cfg.tx_size(fn) * 8, ratio))
    return rows


@dataclass(frozen=True)
class SpeedupRow:
    device: str
    function: str
    pool_size: int
    throughput: Optional[float]
    speedup: Optional[Fraction]
    cost_usd_per_hour: Optional[float]


def speedup_report(cfg: ScenarioConfig, pool_size: int = 1) -> list[SpeedupRow]:
    """Speedup of each device (or pool of identical devices) over the weakest one.

    Hash rates add up across a pool; a pool of VDF solvers still finishes one
    chain at single-device speed, so only its cost grows.
    """
    if pool_size < 1:
        raise ConfigError("pool size must be >= 1")
    rows = []
    for fn in FUNCTIONS:
        rates = [d.rate(fn) for d in cfg.devices if d.rate(fn) is not None]
        weakest = min(rates) if rates else None
        for dev in _ordered(cfg.devices):
            rate = dev.rate(fn)
            cost = None if dev.cost_usd_per_hour is None else dev.cost_usd_per_hour * pool_size
            if rate is None:
                rows.append(SpeedupRow(dev.name, fn, pool_size, None, None, cost))
                continue
            theta = rate * pool_size if fn == "PoW" else rate
            rows.append(SpeedupRow(dev.name, fn, pool_size, theta, speedup([theta, weakest]), cost))
    return rows


@dataclass
class SimMetrics:
    function: str
    attacker_tx_rate: float
    attacker_bandwidth_bps: float
    honest_median_delay: Optional[float]
    utilization: list
    overload_drops: int
    verifications: int
    log: Optional[list] = None

    @property
    def max_utilization(self) -> float:
        return max(self.utilization)


def build_topology(n: int, degree: int, rng: random.Random) -> list[set]:
    """Ring (for connectivity) plus random links until every node has ``degree``."""
    adj = [set() for _ in range(n)]
    for i in range(n):
        j = (i + 1) % n
        if i != j:
            adj[i].add(j)
            adj[j].add(i)
    for i in range(n):
        candidates = [j for j in range(n) if j != i and j not in adj[i]]
        rng.shuffle(candidates)
        while len(adj[i]) < degree and candidates:
            j = candidates.pop()
            adj[i].add(j)
            adj[j].add(i)
    return adj


_ISSUE, _RECEIVE, _VERIFIED = 0, 1, 2


def _simulate(
    cfg: ScenarioConfig, function: str, verify_cost: float, keep_log: bool
) -> SimMetrics:
    rng = random.Random(f"{cfg.seed}/{function}")
    n = cfg.nodes
    adj = build_topology(n, cfg.neighbors, rng)
    size = cfg.tx_size(function)
    horizon = cfg.duration

    attacker = 0 if cfg.attacker_device is not None else None
    attack_rate = 0.0
    if attacker is not None:
        attack_rate = cfg.tx_rate(cfg.device(cfg.attacker_device), function) or 0.0
    honest_rate = cfg.alpha * cfg.honest_reputation

    seq = itertools.count()
    events: list = []
    tx_ids = itertools.count()
    # txid -> (origin, issue time, count); count > 1 is a burst of identical txs
    txs: dict[int, tuple[int, float, float]] = {}

    def push(t, kind, node, tx=None, src=None):
        if t <= horizon:
            heapq.heappush(events, (t, next(seq), kind, node, tx, src))

    burst = 1.0
    attack_gap = None
    if attack_rate > 0:
        if attack_rate > cfg.attacker_batch_hz:
            burst = attack_rate / cfg.attacker_batch_hz
            attack_gap = 1.0 / cfg.attacker_batch_hz
        else:
            attack_gap = 1.0 / attack_rate
        push(0.0, _ISSUE, attacker)
    for node in range(n):
        if node != attacker and honest_rate > 0:
            push(rng.expovariate(honest_rate), _ISSUE, node)

    seen = [set() for _ in range(n)]
    busy_until = [0.0] * n
    busy = [0.0] * n
    pending = [0] * n
    drops = 0
    verifications = 0
    attacker_bits = 0.0
    delays = []
    log = [] if keep_log else None

    def forward(node, tx, src, t):
        for peer in adj[node]:
            if peer != src:
                push(t + cfg.link_latency, _RECEIVE, peer, tx, node)

    while events:
        t, _, kind, node, tx, src = heapq.heappop(events)
        if kind == _ISSUE:
            tx = next(tx_ids)
            count = burst if node == attacker else 1.0
            txs[tx] = (node, t, count)
            seen[node].add(tx)
            forward(node, tx, None, t)
            if node == attacker:
                push(t + attack_gap, _ISSUE, node)
            else:
                push(t + rng.expovariate(honest_rate), _ISSUE, node)
        elif kind == _RECEIVE:
            if tx in seen[node]:
                continue
            seen[node].add(tx)
            if pending[node] >= cfg.queue_bound:
                drops += 1
                continue
            count = txs[tx][2]
            start = max(t, busy_until[node])
            cost = verify_cost * count
            busy_until[node] = start + cost
            busy[node] += max(0.0, min(start + cost, horizon) - min(start, horizon))
            pending[node] += 1
            push(start + cost, _VERIFIED, node, tx, src)
        else:
            pending[node] -= 1
            verifications += 1
            origin, issued, count = txs[tx]
            if log is not None:
                log.append((t, node, tx))
            if origin == attacker:
                attacker_bits += count * size * 8
            else:
                delays.append(t - issued)
            forward(node, tx, src, t)

    return SimMetrics(
        function=function,
        attacker_tx_rate=attack_rate,
        attacker_bandwidth_bps=attacker_bits / horizon,
        honest_median_delay=statistics.median(delays) if delays else None,
        utilization=[b / horizon for b in busy],
        overload_drops=drops,
        verifications=verifications,
        log=log,
    )


def run_gossip_sim(cfg: ScenarioConfig, keep_log: bool = False) -> dict[str, SimMetrics]:
    """Simulate the network once per rate-control function.

    Attacker bandwidth counts every attacker transaction verified by a node
    other than the attacker. Transactions issued faster than
    ``attacker_batch_hz`` travel as bursts: one event standing for several
    identical transactions, with verification cost scaled accordingly.
    """
    costs = cfg.verify_seconds
    if costs is None:
        from .bench import calibrate

        cal = calibrate(k=cfg.k)
        costs = {"PoW": cal.hash_seconds, "VDF": cal.verify_seconds}
    return {fn: _simulate(cfg, fn, costs[fn], keep_log) for fn in FUNCTIONS}
