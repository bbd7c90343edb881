#!/usr/bin/env python3
"""Compare advanced-command latencies against plain read streams.

Sweeps cache-read depth and multi-plane width on a single-chip subsystem
and prints how much the pipelined/parallel commands save over issuing the
equivalent legacy reads, with command issue overhead on the channel bus so
the one-command-versus-many difference is visible.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from flashsim.commands import Command, CommandKind
from flashsim.engine import Policy, run
from flashsim.models import ModelSet, TimingParams
from flashsim.topology import FlashAddress, Geometry


def simulate(trace, geometry, models, policy):
    result = run(trace, geometry, frozenset(CommandKind), models, policy)
    return result.makespan_ns / 1000, sum(r.energy_uj for r in result.results)


def page(geometry, plane=0, page_index=0):
    return FlashAddress(0, 0, 0, plane, 0, page_index)


def cache_sweep(geometry, models, policy, max_pages):
    print("cache read pipelining")
    print(f"{'pages':>6}{'cache_read us':>16}{'queued reads us':>17}{'serial reads us':>17}")
    for n in range(1, max_pages + 1):
        cached, _ = simulate(
            [Command(0, CommandKind.CACHE_READ, (page(geometry),), n)],
            geometry, models, policy,
        )
        queued, _ = simulate(
            [
                Command(0, CommandKind.READ, (page(geometry, 0, i),), 1, i)
                for i in range(n)
            ],
            geometry, models, policy,
        )
        single, _ = simulate(
            [Command(0, CommandKind.READ, (page(geometry),))], geometry, models, policy
        )
        print(f"{n:>6}{cached:>16.1f}{queued:>17.1f}{n * single:>17.1f}")


def multi_plane_sweep(geometry, models, policy, max_planes):
    print()
    print("multi-plane reads vs one read per plane")
    print(f"{'planes':>6}{'multi_plane us':>16}{'separate us':>14}{'energy uJ':>12}")
    for k in range(1, max_planes + 1):
        operands = tuple(page(geometry, p) for p in range(k))
        fused, fused_energy = simulate(
            [Command(0, CommandKind.MULTI_PLANE_READ, operands)],
            geometry, models, policy,
        )
        separate, _ = simulate(
            [
                Command(0, CommandKind.READ, (page(geometry, p),), 1, p)
                for p in range(k)
            ],
            geometry, models, policy,
        )
        print(f"{k:>6}{fused:>16.1f}{separate:>14.1f}{fused_energy:>12.3f}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--planes", type=int, default=4, help="planes per die")
    parser.add_argument("--pages", type=int, default=8, help="max cache depth to sweep")
    parser.add_argument(
        "--cmd-overhead-us", type=float, default=5.0,
        help="per-command issue time charged on the channel bus",
    )
    args = parser.parse_args()

    geometry = Geometry(1, 1, 1, args.planes, 16, max(args.pages, 8), 4096, 128)
    models = ModelSet(timing=TimingParams(t_cmd=args.cmd_overhead_us))
    policy = Policy(cmd_overhead_on_bus=True)
    print(
        f"geometry: {args.planes} planes, page {geometry.page_size} B; "
        f"command issue {args.cmd_overhead_us} us on the bus\n"
    )
    cache_sweep(geometry, models, policy, args.pages)
    multi_plane_sweep(geometry, models, policy, args.planes)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
