"""JSON configuration shared by the CLI, the admission pipeline and the simulator.

Recognised keys (all optional unless noted)::

    {
      "lambda": 2048,              # modulus bits; must match "modulus" if both given
      "modulus": "<hex>",          # defaults to the RSA-2048 challenge number
      "trapdoor": {"p": "<hex>", "q": "<hex>"},   # test groups only
      "test_mode": false,          # allow moduli below 1024 bits
      "k": 128,
      "alpha": 0.1,                # tx/s per unit of reputation
      "squarings_per_sec": 1e6,    # reference squaring rate (calibration)
      "tau_min": 1, "tau_max": 1099511627776,
      "clock_skew_s": 300,
      "window_bits": 2,
      "reputation": {"<pubkey hex>": 1.0},
      "scenario": {...}            # simulator settings, see vdfrate.sim
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError
from .group_arith import RSA_2048, RsaGroup, check_k, check_production_modulus


@dataclass(frozen=True)
class ProtocolConfig:
    group: RsaGroup
    k: int = 128
    alpha: float = 0.1
    squarings_per_sec: float = 1e6
    tau_min: int = 1
    tau_max: int = 1 << 40
    clock_skew: int = 300
    window_bits: int = 2
    reputation: dict = field(default_factory=dict)
    scenario: dict = field(default_factory=dict)
    test_mode: bool = False

    def __post_init__(self):
        check_k(self.k)
        if self.k % 8 or self.group.bits % 8:
            raise ConfigError("lambda and k must be multiples of 8")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if self.squarings_per_sec <= 0:
            raise ConfigError("squarings_per_sec must be positive")
        if not 1 <= self.tau_min <= self.tau_max:
            raise ConfigError("need 1 <= tau_min <= tau_max")
        if not self.test_mode:
            check_production_modulus(self.group.bits)

    @property
    def lam(self) -> int:
        return self.group.bits

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ProtocolConfig:
        test_mode = bool(data.get("test_mode", False))
        if "modulus" in data:
            modulus = int(data["modulus"], 16)
        elif data.get("lambda", 2048) == 2048:
            modulus = RSA_2048
        else:
            raise ConfigError("no modulus given; run `vdfrate setup` first")
        trapdoor = None
        if data.get("trapdoor"):
            trapdoor = (int(data["trapdoor"]["p"], 16), int(data["trapdoor"]["q"], 16))
        group = RsaGroup(modulus, trapdoor)
        if "lambda" in data and data["lambda"] != group.bits:
            raise ConfigError(f"lambda={data['lambda']} but modulus has {group.bits} bits")
        return cls(
            group=group,
            k=int(data.get("k", 128)),
            alpha=float(data.get("alpha", 0.1)),
            squarings_per_sec=float(data.get("squarings_per_sec", 1e6)),
            tau_min=int(data.get("tau_min", 1)),
            tau_max=int(data.get("tau_max", 1 << 40)),
            clock_skew=int(data.get("clock_skew_s", 300)),
            window_bits=int(data.get("window_bits", 2)),
            reputation={str(key): float(v) for key, v in data.get("reputation", {}).items()},
            scenario=dict(data.get("scenario", {})),
            test_mode=test_mode,
        )

    def to_dict(self, include_trapdoor: bool = True) -> dict[str, Any]:
        out: dict[str, Any] = {
            "lambda": self.group.bits,
            "modulus": format(self.group.modulus, "x"),
            "test_mode": self.test_mode,
            "k": self.k,
            "alpha": self.alpha,
            "squarings_per_sec": self.squarings_per_sec,
            "tau_min": self.tau_min,
            "tau_max": self.tau_max,
            "clock_skew_s": self.clock_skew,
            "window_bits": self.window_bits,
            "reputation": dict(self.reputation),
        }
        if include_trapdoor and self.group.trapdoor is not None:
            p, q = self.group.trapdoor
            out["trapdoor"] = {"p": format(p, "x"), "q": format(q, "x")}
        if self.scenario:
            out["scenario"] = dict(self.scenario)
        return out


def load_config(path: Optional[str | Path]) -> ProtocolConfig:
    if path is None:
        return ProtocolConfig.from_dict({})
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return ProtocolConfig.from_dict(data)


def save_config(cfg: ProtocolConfig, path: str | Path, include_trapdoor: bool = True) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(include_trapdoor), indent=2) + "\n")
