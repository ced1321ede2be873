"""Command-line front end.

Subcommands: `sweep` (full pipeline to CSV), `overhead` (report bit-width
calculator), `codebook dump` (Type I entries to CSV), `channel probe`
(statistics self-test). Settings resolve with precedence flags > config file
> built-in defaults; `sweep` snapshots the resolved configuration into
manifest.json (written atomically before any results) and a manifest can be
fed back via --config to reproduce a run bit for bit.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy.special import j0

from . import __version__
from .channel import ChannelConfig, generate_channel, load_pdp_file
from .codebook import AntennaConfig, Type2Config, build_type1_codebook, oversampling_factors
from .csi import CqiTable
from .overhead import type1_overhead_bits, type2_overhead_bits
from .sim import (
    CodebookMode,
    Scenario,
    SweepConfig,
    run_sweep,
    write_cqi_hist_csv,
    write_ri_hist_csv,
    write_sweep_csv,
)

__all__ = ["main"]

_DEFAULTS: dict[str, object] = {
    "antenna.n1": 4,
    "antenna.n2": 1,
    "channel.rx": 4,
    "channel.doppler_hz": 5.0,
    "channel.delay_spread_ns": 100.0,
    "channel.subbands": 13,
    "channel.subband_spacing_hz": 720e3,
    "channel.slot_duration_s": 1e-3,
    "channel.pdp_file": "",
    "sweep.snr": "-10:5:40",
    "sweep.slots": 1000,
    "sweep.feedback_delay": 1,
    "sweep.codebook": "type1",
    "sweep.seed": 0,
    "type2.beams": 4,
    "type2.n_psk": 8,
    "csi.cqi_table": "",
    "csi.target_bler": 0.1,
}

# First zero of J0, used by `channel probe` to pick a Doppler that makes
# consecutive slots uncorrelated so the power check averages cleanly.
_J0_FIRST_ZERO = 2.404825557695773


def _load_config_file(path: str) -> dict[str, object]:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        flat = data.get("config", data)
        if not isinstance(flat, dict):
            raise ValueError(f"{path}: manifest 'config' must be an object")
    else:
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ValueError(f"{path}: {exc}") from None
        flat = {
            f"{section}.{key}": value
            for section in parser.sections()
            for key, value in parser.items(section)
        }
    unknown = sorted(set(flat) - set(_DEFAULTS))
    if unknown:
        raise ValueError(f"{path}: unknown config key {unknown[0]!r}")
    return dict(flat)


def _resolve(args: argparse.Namespace, flag_map: dict[str, str]) -> dict[str, object]:
    resolved = dict(_DEFAULTS)
    if getattr(args, "config", None):
        resolved.update(_load_config_file(args.config))
    for attr, key in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _as_int(cfg: dict, key: str) -> int:
    try:
        return int(str(cfg[key]))
    except ValueError:
        raise ValueError(f"{key} must be an integer, got {cfg[key]!r}") from None


def _as_float(cfg: dict, key: str) -> float:
    try:
        return float(str(cfg[key]))
    except ValueError:
        raise ValueError(f"{key} must be a number, got {cfg[key]!r}") from None


def _positive_int(cfg: dict, key: str) -> int:
    value = _as_int(cfg, key)
    if value < 1:
        raise ValueError(f"{key} must be a positive integer, got {value}")
    return value


def _parse_snr(spec: str) -> tuple[float, ...]:
    parts = str(spec).split(":")
    try:
        if len(parts) == 1:
            return (float(parts[0]),)
        if len(parts) == 3:
            lo, step, hi = (float(p) for p in parts)
        else:
            raise ValueError
    except ValueError:
        raise ValueError(f"sweep.snr must be 'min:step:max' or a single value, got {spec!r}") from None
    if step <= 0:
        raise ValueError(f"sweep.snr step must be positive, got {step}")
    if hi < lo:
        raise ValueError(f"sweep.snr has max {hi} below min {lo}")
    points = []
    value = lo
    while value <= hi + 1e-9:
        points.append(round(value, 9))
        value = lo + (len(points)) * step
    return tuple(points)


def _parse_mode(cfg: dict) -> CodebookMode:
    label = str(cfg["sweep.codebook"])
    for mode in CodebookMode:
        if mode.value == label:
            return mode
    raise ValueError(f"sweep.codebook must be one of type1/type2/svd, got {label!r}")


def _build_scenario(cfg: dict) -> Scenario:
    antenna = AntennaConfig(n1=_positive_int(cfg, "antenna.n1"), n2=_positive_int(cfg, "antenna.n2"))
    pdp_file = str(cfg["channel.pdp_file"])
    kwargs = {}
    if pdp_file:
        kwargs["pdp"] = tuple(load_pdp_file(pdp_file))
    channel = ChannelConfig(
        num_tx_ports=antenna.num_ports,
        num_rx_ports=_positive_int(cfg, "channel.rx"),
        doppler_hz=_as_float(cfg, "channel.doppler_hz"),
        delay_spread_ns=_as_float(cfg, "channel.delay_spread_ns"),
        num_subbands=_positive_int(cfg, "channel.subbands"),
        subband_spacing_hz=_as_float(cfg, "channel.subband_spacing_hz"),
        slot_duration_s=_as_float(cfg, "channel.slot_duration_s"),
        **kwargs,
    )
    table_path = str(cfg["csi.cqi_table"])
    target_bler = _as_float(cfg, "csi.target_bler")
    table = CqiTable.from_csv(table_path, target_bler) if table_path else CqiTable.default(target_bler)
    t2 = Type2Config(num_beams=_positive_int(cfg, "type2.beams"), n_psk=_as_int(cfg, "type2.n_psk"))
    return Scenario(antenna=antenna, channel=channel, type2=t2, cqi_table=table)


def _write_json_atomic(path: Path, payload: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _write_manifest(out_dir: Path, command: str, cfg: dict, seed: int, outputs: list[Path]) -> None:
    _write_json_atomic(out_dir / "manifest.json", {
        "tool": "nrsim",
        "version": __version__,
        "command": command,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "seed": seed,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "outputs": [str(p) for p in outputs],
    })


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out) if getattr(args, "out", None) else Path("nrsim_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _resolve(args, {
        "snr": "sweep.snr", "slots": "sweep.slots", "codebook": "sweep.codebook",
        "rx": "channel.rx", "seed": "sweep.seed",
    })
    snr_points = _parse_snr(cfg["sweep.snr"])
    slots = _positive_int(cfg, "sweep.slots")
    delay = _as_int(cfg, "sweep.feedback_delay")
    seed = _as_int(cfg, "sweep.seed")
    mode = _parse_mode(cfg)
    sweep_cfg = SweepConfig(
        scenario=_build_scenario(cfg),
        snr_points_db=snr_points,
        num_slots=slots,
        feedback_delay_slots=delay,
        codebook_mode=mode,
        seed=seed,
    )
    out = _out_dir(args)
    paths = [out / "sweep.csv", out / "ri_hist.csv", out / "cqi_hist.csv"]
    _write_manifest(out, "sweep", cfg, seed, paths)
    result = run_sweep(sweep_cfg)
    write_sweep_csv([result], paths[0])
    write_ri_hist_csv([result], paths[1])
    write_cqi_hist_csv([result], paths[2])
    print(f"{'snr_db':>8}  {'mean_se':>10}  {'mean_mbps':>10}  {'overhead':>9}  {'fail':>6}")
    for pt in result.points:
        print(f"{pt.snr_db:>8.2f}  {pt.mean_throughput:>10.4f}  "
              f"{pt.mean_throughput_mbps:>10.3f}  {pt.mean_overhead_bits:>9.2f}  "
              f"{pt.slots_failed:>6.4f}")
    print(f"wrote {', '.join(str(p) for p in paths)}")
    return 0


def _cmd_overhead(args: argparse.Namespace) -> int:
    cfg = _resolve(args, {
        "codebook": "sweep.codebook", "beams": "type2.beams", "npsk": "type2.n_psk",
    })
    antenna = AntennaConfig(n1=_positive_int(cfg, "antenna.n1"), n2=_positive_int(cfg, "antenna.n2"))
    ov = oversampling_factors(antenna)
    rank = args.rank if args.rank is not None else 1
    subbands = args.subbands if args.subbands is not None else 1
    if subbands < 1:
        raise ValueError(f"subbands must be a positive integer, got {subbands}")
    label = str(cfg["sweep.codebook"])
    if label == "type1":
        breakdown = type1_overhead_bits(antenna, ov, rank, subbands)
    elif label == "type2":
        t2 = Type2Config(num_beams=_positive_int(cfg, "type2.beams"), n_psk=_as_int(cfg, "type2.n_psk"))
        breakdown = type2_overhead_bits(antenna, ov, t2, rank, subbands)
    else:
        raise ValueError(f"codebook must be type1 or type2 for overhead, got {label!r}")
    width = max(len(k) for k in [*breakdown.per_index_bits, "total"])
    for key, bits in breakdown.per_index_bits.items():
        print(f"{key:<{width}}  {bits:>5} bits")
    print(f"{'total':<{width}}  {breakdown.total_bits:>5} bits")
    print()
    print("index,bits")
    for key, bits in breakdown.per_index_bits.items():
        print(f"{key},{bits}")
    print(f"total,{breakdown.total_bits}")
    if getattr(args, "out", None):
        out = _out_dir(args)
        path = out / "overhead.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("index,bits\n")
            for key, bits in breakdown.per_index_bits.items():
                fh.write(f"{key},{bits}\n")
            fh.write(f"total,{breakdown.total_bits}\n")
        _write_manifest(out, "overhead", cfg, 0, [path])
        print(f"wrote {path}")
    return 0


def _cmd_codebook_dump(args: argparse.Namespace) -> int:
    cfg = _resolve(args, {"codebook": "sweep.codebook"})
    label = str(cfg["sweep.codebook"])
    if label != "type1":
        raise ValueError(f"codebook dump materializes type1 only, got {label!r}")
    antenna = AntennaConfig(n1=_positive_int(cfg, "antenna.n1"), n2=_positive_int(cfg, "antenna.n2"))
    ov = oversampling_factors(antenna)
    rank = args.rank if args.rank is not None else 1
    cb = build_type1_codebook(antenna, rank, ov)
    out = _out_dir(args)
    path = out / f"codebook_type1_rank{rank}.csv"
    ports = antenna.num_ports
    header = ["entry", "i11", "i12", "i13", "i2"]
    for port in range(ports):
        for layer in range(rank):
            header += [f"w{port}_{layer}_re", f"w{port}_{layer}_im"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for idx, entry in enumerate(cb):
            w = entry.w_per_subband[0]
            pmi = entry.pmi
            row = [str(idx), str(pmi.i11), str(pmi.i12), str(pmi.i13), str(pmi.i2_per_subband[0])]
            for port in range(ports):
                for layer in range(rank):
                    row += [repr(float(w[port, layer].real)), repr(float(w[port, layer].imag))]
            fh.write(",".join(row) + "\n")
    _write_manifest(out, "codebook dump", cfg, 0, [path])
    print(f"wrote {path} ({len(cb)} entries, {ports} ports, rank {rank})")
    return 0


def _cmd_channel_probe(args: argparse.Namespace) -> int:
    cfg = _resolve(args, {"rx": "channel.rx", "seed": "sweep.seed"})
    antenna = AntennaConfig(n1=_positive_int(cfg, "antenna.n1"), n2=_positive_int(cfg, "antenna.n2"))
    slots = args.slots if args.slots is not None else 2000
    if slots < 2:
        raise ValueError(f"slots must be >= 2 for the probe, got {slots}")
    seed = _as_int(cfg, "sweep.seed")
    rx = _positive_int(cfg, "channel.rx")
    slot_s = _as_float(cfg, "channel.slot_duration_s")
    base = dict(
        num_tx_ports=antenna.num_ports, num_rx_ports=rx,
        delay_spread_ns=_as_float(cfg, "channel.delay_spread_ns"),
        num_subbands=_positive_int(cfg, "channel.subbands"),
        subband_spacing_hz=_as_float(cfg, "channel.subband_spacing_hz"),
        slot_duration_s=slot_s, seed=seed,
    )
    ok = True

    # Power conservation, averaged over slots decorrelated by a Doppler at
    # the first J0 zero.
    doppler_zero = _J0_FIRST_ZERO / (2.0 * math.pi * slot_s)
    h = generate_channel(ChannelConfig(doppler_hz=doppler_zero, **base), slots).h
    mean_power = float(np.mean(np.abs(h) ** 2))
    power_ok = abs(mean_power - 1.0) <= 0.02
    ok &= power_ok
    print(f"mean per-entry power      {mean_power:8.4f}  (target 1.0 +/- 0.02)  "
          f"{'PASS' if power_ok else 'FAIL'}")

    # Slot-to-slot correlation against the Jakes value at a Doppler that
    # separates cleanly from 1.
    doppler_corr = 100.0
    rho_target = float(j0(2.0 * math.pi * doppler_corr * slot_s))
    h = generate_channel(ChannelConfig(doppler_hz=doppler_corr, **base), slots).h
    a = h[:-1].ravel()
    b = h[1:].ravel()
    rho_hat = float(np.real(np.vdot(a, b)) / math.sqrt((np.abs(a) ** 2).sum() * (np.abs(b) ** 2).sum()))
    rho_ok = abs(rho_hat - rho_target) <= 0.02
    ok &= rho_ok
    print(f"lag-1 correlation @100 Hz {rho_hat:8.4f}  (target {rho_target:.4f} +/- 0.02)  "
          f"{'PASS' if rho_ok else 'FAIL'}")
    print(f"overall: {'PASS' if ok else 'FAIL'}")
    if not ok:
        raise RuntimeError("channel probe statistics out of tolerance")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nrsim",
        description="Link-level downlink MIMO simulator with Type I / Type II precoding feedback.",
    )
    parser.add_argument("--version", action="version", version=f"nrsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run an SNR sweep and write CSV results")
    sweep.add_argument("--config", help="INI config file or a manifest.json from a previous run")
    sweep.add_argument("--snr", help="SNR grid in dB as min:step:max (or one value)")
    sweep.add_argument("--slots", type=int, help="slots per SNR point")
    sweep.add_argument("--codebook", choices=["type1", "type2", "svd"], help="feedback mode")
    sweep.add_argument("--rx", type=int, help="receive antenna count")
    sweep.add_argument("--seed", type=int, help="sweep seed")
    sweep.add_argument("--out", help="output directory (default nrsim_out)")

    overhead = sub.add_parser("overhead", help="print PMI report bit-widths")
    overhead.add_argument("--config", help="INI config file")
    overhead.add_argument("--codebook", choices=["type1", "type2"], help="report family")
    overhead.add_argument("--rank", type=int, help="rank (type1: 1-4, type2: 1-2)")
    overhead.add_argument("--subbands", type=int, help="subband count (default 1 = wideband)")
    overhead.add_argument("--beams", type=int, help="type2 combined beams")
    overhead.add_argument("--npsk", type=int, help="type2 co-phase alphabet size")
    overhead.add_argument("--out", help="also write overhead.csv under this directory")

    codebook = sub.add_parser("codebook", help="codebook tools")
    codebook_sub = codebook.add_subparsers(dest="action", required=True)
    dump = codebook_sub.add_parser("dump", help="write Type I entries to CSV")
    dump.add_argument("--config", help="INI config file")
    dump.add_argument("--codebook", choices=["type1", "type2"], help="family (type1 only)")
    dump.add_argument("--rank", type=int, help="rank (1-4)")
    dump.add_argument("--out", help="output directory (default nrsim_out)")

    channel = sub.add_parser("channel", help="channel tools")
    channel_sub = channel.add_subparsers(dest="action", required=True)
    probe = channel_sub.add_parser("probe", help="statistics self-test")
    probe.add_argument("--config", help="INI config file")
    probe.add_argument("--slots", type=int, help="slots per check (default 2000)")
    probe.add_argument("--rx", type=int, help="receive antenna count")
    probe.add_argument("--seed", type=int, help="probe seed")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "overhead":
            return _cmd_overhead(args)
        if args.command == "codebook":
            return _cmd_codebook_dump(args)
        return _cmd_channel_probe(args)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
