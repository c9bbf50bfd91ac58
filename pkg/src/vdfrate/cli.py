"""Command-line entry point.

Exit codes: 0 success or accept, 1 reject or verification failure,
2 usage or configuration error. ``--json`` switches every command to a
single JSON object on stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from .config import ProtocolConfig, load_config, save_config
from .errors import MalformedProof, VdfError
from .group_arith import RsaGroup
from .pow import PowPuzzle, pow_solve, pow_solve_partitioned, pow_verify
from .rate_control import (
    CalibrationCurve,
    NodeIdentity,
    ReputationMap,
    Transaction,
    admit,
    difficulty_for,
    issue,
)
from .sim import ScenarioConfig, run_gossip_sim, spam_potential, speedup_report
from .vdf import (
    VdfChallenge,
    decode_proof,
    encode_proof,
    evaluate,
    prove_direct,
    prove_long_division,
    prove_parallel,
    verify,
)

EXIT_OK, EXIT_REJECT, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _jsonable(value: Any) -> Any:
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else float(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


def _emit(args, result: dict) -> None:
    if args.json:
        print(json.dumps(_jsonable(result), sort_keys=True))
        return
    for key, value in result.items():
        if isinstance(value, list) and value and isinstance(value[0], dict):
            print(f"{key}:")
            for row in value:
                print("  " + "  ".join(f"{k}={_fmt(v)}" for k, v in row.items()))
        else:
            print(f"{key}: {_fmt(value)}")


def _fmt(value: Any) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _config(args) -> ProtocolConfig:
    return load_config(args.config)


def _message(args) -> bytes:
    if args.message_hex is not None:
        try:
            return bytes.fromhex(args.message_hex)
        except ValueError as exc:
            raise UsageError(f"--message-hex: {exc}") from exc
    if args.message is not None:
        return args.message.encode()
    raise UsageError("give --message or --message-hex")


def _read_hex(path: str) -> bytes:
    try:
        return bytes.fromhex(Path(path).read_text().strip())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read hex from {path}: {exc}") from exc


def _scenario(args) -> ScenarioConfig:
    data = dict(_config(args).scenario)
    for key in ("seed", "duration", "nodes"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    return ScenarioConfig.from_dict(data)


# commands


def cmd_setup(args) -> int:
    group = RsaGroup.generate(args.bits, args.seed)
    if not args.trapdoor:
        group = group.public()
    cfg = ProtocolConfig(group, k=args.k, test_mode=args.bits < 1024 or args.trapdoor)
    result = {"lambda": group.bits, "modulus": format(group.modulus, "x")}
    if args.out:
        save_config(cfg, args.out)
        result["config"] = args.out
    _emit(args, result)
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _config(args)
    ch = VdfChallenge(_message(args), args.tau, cfg.group, cfg.k)
    t0 = time.perf_counter()
    out = evaluate(ch)
    _emit(
        args,
        {
            "x": format(ch.x, "x"),
            "y": format(out.y.value, "x"),
            "squarings": out.squarings,
            "seconds": time.perf_counter() - t0,
        },
    )
    return EXIT_OK


def cmd_prove(args) -> int:
    cfg = _config(args)
    ch = VdfChallenge(_message(args), args.tau, cfg.group, cfg.k)
    result: dict[str, Any] = {}
    if args.method == "parallel":
        transcript = evaluate(ch, args.segments)
        proof = prove_parallel(ch, transcript)
    else:
        y = evaluate(ch).y
        if args.method == "direct":
            proof = prove_direct(ch, y)
        else:
            proof, ops = prove_long_division(ch, y)
            result["group_ops"] = ops
    result.update(
        {
            "l": format(proof.l, "x"),
            "pi": format(proof.pi.value, "x"),
            "tau": proof.tau,
            "proof": encode_proof(proof, cfg.lam, cfg.k).hex(),
        }
    )
    _emit(args, result)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    try:
        blob = bytes.fromhex(args.proof)
    except ValueError as exc:
        raise UsageError(f"--proof: {exc}") from exc
    try:
        proof = decode_proof(blob, cfg.group, cfg.k, tau=args.tau)
        res = verify(_message(args), args.tau, proof, cfg.group, cfg.k, cfg.window_bits)
        accepted, mults = res.accepted, res.multiplications
    except MalformedProof as exc:
        accepted, mults = False, 0
        logging.getLogger(__name__).info("malformed proof: %s", exc)
    _emit(args, {"accepted": accepted, "multiplications": mults})
    return EXIT_OK if accepted else EXIT_REJECT


def cmd_pow_solve(args) -> int:
    puzzle = PowPuzzle(_message(args), args.difficulty)
    t0 = time.perf_counter()
    if args.parts > 1:
        sol = pow_solve_partitioned(puzzle, args.parts)
    else:
        sol = pow_solve(puzzle)
    _emit(
        args,
        {"nonce": sol.nonce, "attempts": sol.attempts, "seconds": time.perf_counter() - t0},
    )
    return EXIT_OK


def cmd_pow_verify(args) -> int:
    ok = pow_verify(PowPuzzle(_message(args), args.difficulty), args.nonce)
    _emit(args, {"accepted": ok})
    return EXIT_OK if ok else EXIT_REJECT


def _load_identity(path: str, cfg: ProtocolConfig) -> NodeIdentity:
    key = Path(path)
    if key.exists():
        node = NodeIdentity.from_seed(_read_hex(path))
    else:
        node = NodeIdentity.generate()
        key.write_text(node.seed.hex() + "\n")
    node.reputation = cfg.reputation.get(node.node_id, 0.0)
    return node


def cmd_issue(args) -> int:
    cfg = _config(args)
    node = _load_identity(args.key, cfg)
    prev = None
    if args.prev:
        prev = Transaction.from_bytes(_read_hex(args.prev), cfg.lam, cfg.k)
    tau = args.tau
    if tau is None:
        rep = ReputationMap(dict(cfg.reputation), cfg.alpha)
        tau = difficulty_for(
            node, rep, CalibrationCurve(cfg.squarings_per_sec), cfg.tau_min, cfg.tau_max
        )
    tx = issue(node, args.payload.encode(), prev, tau, cfg, args.timestamp)
    raw = tx.to_bytes().hex()
    if args.out:
        Path(args.out).write_text(raw + "\n")
    _emit(
        args,
        {
            "issuer": node.node_id,
            "tau": tau,
            "size": tx.size,
            "tx_hash": tx.tx_hash().hex(),
            "tx": raw if not args.out else args.out,
        },
    )
    return EXIT_OK


def cmd_admit(args) -> int:
    cfg = _config(args)
    state_path = Path(args.state) if args.state else None
    known: dict[bytes, bytes] = {}
    if state_path is not None and state_path.exists():
        try:
            raw = json.loads(state_path.read_text())
            known = {bytes.fromhex(k): bytes.fromhex(v) for k, v in raw.items()}
        except (ValueError, AttributeError) as exc:
            raise UsageError(f"bad state file {state_path}: {exc}") from exc
    rep = ReputationMap(dict(cfg.reputation), cfg.alpha)
    cal = CalibrationCurve(cfg.squarings_per_sec)
    res = admit(_read_hex(args.tx), known, rep, cal, cfg, args.now)
    if res.accepted and state_path is not None:
        state_path.write_text(
            json.dumps({k.hex(): v.hex() for k, v in known.items()}, indent=2) + "\n"
        )
    _emit(args, {"accepted": res.accepted, "reason": res.reason.value if res.reason else None})
    return EXIT_OK if res.accepted else EXIT_REJECT


def cmd_spam_table(args) -> int:
    cfg = _scenario(args)
    rows = []
    for r in spam_potential(cfg):
        row = asdict(r)
        row["speedup_vs_baseline"] = r.speedup_vs_baseline
        rows.append(row)
    _emit(args, {"tau": cfg.tau, "rows": rows})
    return EXIT_OK


def cmd_speedup(args) -> int:
    cfg = _scenario(args)
    rows = [asdict(r) for r in speedup_report(cfg, args.pool)]
    _emit(args, {"pool_size": args.pool, "rows": rows})
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _scenario(args)
    metrics = run_gossip_sim(cfg)
    rows = []
    for fn, m in metrics.items():
        rows.append(
            {
                "function": fn,
                "attacker_tx_rate": m.attacker_tx_rate,
                "attacker_bandwidth_bps": m.attacker_bandwidth_bps,
                "honest_median_delay": m.honest_median_delay,
                "max_utilization": m.max_utilization,
                "overload_drops": m.overload_drops,
                "verifications": m.verifications,
            }
        )
    _emit(args, {"seed": cfg.seed, "duration": cfg.duration, "rows": rows})
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import bench_all

    kwargs: dict[str, Any] = {"reps": args.reps, "seed": args.seed}
    if args.quick:
        kwargs.update(
            lambdas=(512, 1024),
            taus=tuple(1 << j for j in range(10, 14)),
            multiexp_lambdas=(1024,),
            multiexp_ks=(128,),
            multiexp_reps=5,
        )
    report = bench_all(args.out, **kwargs)
    fits = [
        {"lambda": lam, "series": series, "r_squared": f.r_squared, "relative_drift": f.relative_drift}
        for (lam, series), f in report.fits.items()
    ]
    _emit(args, {"files": [str(p) for p in report.files], "fits": fits})
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .bench import calibrate

    cfg = _config(args)
    cal = calibrate(cfg.group, cfg.k, args.tau)
    _emit(args, asdict(cal))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    msg = argparse.ArgumentParser(add_help=False)
    src = msg.add_mutually_exclusive_group()
    src.add_argument("--message", help="challenge message as UTF-8 text")
    src.add_argument("--message-hex", help="challenge message as hex")

    parser = argparse.ArgumentParser(prog="vdfrate", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("setup", parents=[common], help="generate a test modulus")
    p.add_argument("--bits", type=int, default=2048)
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int, default=128)
    p.add_argument("--trapdoor", action="store_true", help="keep p and q in the config")
    p.add_argument("--out", help="write a config file here")
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("eval", parents=[common, msg], help="evaluate the VDF")
    p.add_argument("--tau", type=int, required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("prove", parents=[common, msg], help="evaluate and prove")
    p.add_argument("--tau", type=int, required=True)
    p.add_argument("--method", choices=("direct", "long", "parallel"), default="long")
    p.add_argument("--segments", type=int, default=4)
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("verify", parents=[common, msg], help="verify a proof blob")
    p.add_argument("--tau", type=int, required=True)
    p.add_argument("--proof", required=True, help="hex proof blob")
    p.set_defaults(func=cmd_verify)

    pow_p = sub.add_parser("pow", help="hashcash baseline")
    pow_sub = pow_p.add_subparsers(dest="pow_command", required=True)
    p = pow_sub.add_parser("solve", parents=[common, msg])
    p.add_argument("--difficulty", type=int, required=True)
    p.add_argument("--parts", type=int, default=1)
    p.set_defaults(func=cmd_pow_solve)
    p = pow_sub.add_parser("verify", parents=[common, msg])
    p.add_argument("--difficulty", type=int, required=True)
    p.add_argument("--nonce", type=int, required=True)
    p.set_defaults(func=cmd_pow_verify)

    p = sub.add_parser("issue", parents=[common], help="issue the next chained transaction")
    p.add_argument("--key", required=True, help="hex Ed25519 seed file (created if missing)")
    p.add_argument("--payload", default="")
    p.add_argument("--prev", help="hex file of this node's previous transaction")
    p.add_argument("--tau", type=int, help="default: derived from reputation")
    p.add_argument("--timestamp", type=int)
    p.add_argument("--out", help="write the hex transaction here")
    p.set_defaults(func=cmd_issue)

    p = sub.add_parser("admit", parents=[common], help="run admission checks on a transaction")
    p.add_argument("--tx", required=True, help="hex transaction file")
    p.add_argument("--state", help="JSON file of last accepted tx hash per issuer")
    p.add_argument("--now", type=float)
    p.set_defaults(func=cmd_admit)

    p = sub.add_parser("spam-table", parents=[common], help="spam potential per device")
    p.set_defaults(func=cmd_spam_table)

    p = sub.add_parser("speedup", parents=[common], help="speedup over the weakest device")
    p.add_argument("--pool", type=int, default=1)
    p.set_defaults(func=cmd_speedup)

    p = sub.add_parser("simulate", parents=[common], help="gossip flooding simulation")
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--nodes", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", parents=[common], help="write timing CSVs")
    p.add_argument("--out", default="bench_out")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="small grid for smoke runs")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("calibrate", parents=[common], help="measure local squaring rate")
    p.add_argument("--tau", type=int, default=1 << 14)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("config", None), ("json", False), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (UsageError, VdfError, ValueError) as exc:
        print(f"vdfrate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
