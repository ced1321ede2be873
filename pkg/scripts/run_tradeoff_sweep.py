#!/usr/bin/env python3
"""Run the throughput/overhead trade-off experiment across codebook modes.

Sweeps SNR for Type I, Type II, and ideal-SVD precoding on a paired channel
(same seed per SNR point), writes the per-point CSVs, and prints a table with
the winning codebook per point plus a summary of the three SNR regions.

Example:
    python3 scripts/run_tradeoff_sweep.py --out results/ --slots 1000 --seed 2026
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from nrsim import (
    AntennaConfig,
    ChannelConfig,
    CodebookMode,
    Scenario,
    SweepConfig,
    Type2Config,
    compare_modes,
    write_cqi_hist_csv,
    write_ri_hist_csv,
    write_sweep_csv,
)

MODES = {
    "type1": CodebookMode.TYPE1,
    "type2": CodebookMode.TYPE2,
    "svd": CodebookMode.SVD_IDEAL,
}


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--snr", default="-10:5:40", help="SNR grid min:step:max in dB")
    p.add_argument("--slots", type=int, default=1000, help="slots per SNR point")
    p.add_argument("--delay", type=int, default=1, help="feedback delay in slots")
    p.add_argument("--seed", type=int, default=2026)
    p.add_argument("--n1", type=int, default=4, help="horizontal ports per polarization")
    p.add_argument("--n2", type=int, default=1, help="vertical ports per polarization")
    p.add_argument("--rx", type=int, default=4, help="receive antennas")
    p.add_argument("--subbands", type=int, default=13)
    p.add_argument("--doppler", type=float, default=5.0, help="Doppler spread in Hz")
    p.add_argument("--delay-spread", type=float, default=100.0, help="RMS delay spread in ns")
    p.add_argument("--beams", type=int, default=4, help="Type II beams per polarization group")
    p.add_argument("--npsk", type=int, default=8, help="Type II co-phase alphabet size")
    p.add_argument("--modes", default="type1,type2,svd",
                   help="comma list from: " + ",".join(MODES))
    p.add_argument("--out", type=Path, default=Path("results"))
    return p.parse_args(argv)


def snr_grid(text):
    lo, step, hi = (float(v) for v in text.split(":"))
    if step <= 0 or hi < lo:
        raise SystemExit(f"bad SNR grid {text!r}")
    n = int(round((hi - lo) / step))
    return tuple(round(lo + i * step, 9) for i in range(n + 1))


def main(argv=None):
    args = parse_args(argv)
    modes = [MODES[m.strip()] for m in args.modes.split(",") if m.strip()]

    antenna = AntennaConfig(args.n1, args.n2)
    channel = ChannelConfig(
        num_tx_ports=antenna.num_ports,
        num_rx_ports=args.rx,
        doppler_hz=args.doppler,
        delay_spread_ns=args.delay_spread,
        num_subbands=args.subbands,
    )
    scenario = Scenario(antenna=antenna, channel=channel,
                        type2=Type2Config(num_beams=args.beams, n_psk=args.npsk))
    grid = snr_grid(args.snr)
    configs = [
        SweepConfig(scenario=scenario, snr_points_db=grid, num_slots=args.slots,
                    feedback_delay_slots=args.delay, codebook_mode=m, seed=args.seed)
        for m in modes
    ]

    print(f"{antenna.num_ports} tx ports, {args.rx} rx, {args.subbands} subbands, "
          f"{args.slots} slots/point, seed {args.seed}")
    comparison = compare_modes(configs)

    args.out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(comparison.results, args.out / "sweep.csv")
    write_ri_hist_csv(comparison.results, args.out / "ri_hist.csv")
    write_cqi_hist_csv(comparison.results, args.out / "cqi_hist.csv")

    names = [r.mode.value for r in comparison.results]
    header = "  snr_db  " + "".join(f"{n:>10}" for n in names) + "   winner"
    print(header)
    print("  " + "-" * (len(header) - 2))
    for row in comparison.rows:
        cells = "".join(f"{tp:10.3f}" for tp in row.mean_throughput)
        print(f"  {row.snr_db:6.1f}  {cells}   {row.winner}")

    if {"type1", "type2"} <= set(names):
        i1, i2 = names.index("type1"), names.index("type2")
        t1 = [pt.mean_throughput for pt in comparison.results[i1].points]
        t2 = [pt.mean_throughput for pt in comparison.results[i2].points]
        oh1 = [pt.mean_overhead_bits for pt in comparison.results[i1].points]
        oh2 = [pt.mean_overhead_bits for pt in comparison.results[i2].points]
        wins = [s for s, a, b in zip(grid, t1, t2) if b >= a]
        print()
        print(f"  type2 >= type1 at: {', '.join(f'{s:g}' for s in wins) or 'none'} dB")
        print(f"  mean overhead per report: type1 {sum(oh1) / len(oh1):.1f} bits, "
              f"type2 {sum(oh2) / len(oh2):.1f} bits")
    print(f"\n  wrote sweep.csv, ri_hist.csv, cqi_hist.csv to {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
