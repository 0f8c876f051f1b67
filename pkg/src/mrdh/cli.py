"""Command-line front end.

    mrdh generate --cores 2 --records 20000 --private 256 --shared 64 --out t.trace
    mrdh profile t.trace --l1-size 4k --l1-assoc 2 --out prof/
    mrdh model prof/core0.profile prof/core1.profile --l2-size 64k --l2-assoc 8
    mrdh simulate t.trace --l1-size 4k --l1-assoc 2 --l2-size 64k --l2-assoc 8 --capture-l2 --out sim/
    mrdh compare t.trace --l1-size 4k --l1-assoc 2 --l2-size 64k --l2-assoc 8
    mrdh sweep t.trace --out sweep.csv
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .geometry import CacheGeometry, GeometryError, parse_size
from .histogram import DEFAULT_CAP
from .oracle import SimConfig, profile_merged_l2, simulate
from .pipeline import (InvalidGrid, SweepSpec, compare, config_label, default_grid,
                       run_model, run_sweep, sweep_csv)
from .profiler import GeometryMismatch, profile_trace, read_profile, write_profile
from .trace import InvalidSpec, SyntheticSpec, TraceError, generate, read_trace, write_trace


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _l1(args) -> CacheGeometry:
    return CacheGeometry(parse_size(args.l1_size), args.l1_assoc, args.line)


def _l2(args) -> CacheGeometry:
    return CacheGeometry(parse_size(args.l2_size), args.l2_assoc, args.line)


def cmd_generate(args) -> None:
    spec = SyntheticSpec(core_count=args.cores, records_per_core=args.records,
                         private_footprint=args.private, shared_footprint=args.shared,
                         sharing_fraction=args.sharing, write_fraction=args.writes,
                         interleave=args.interleave, pattern=args.pattern,
                         seed=args.seed, line_size=args.line)
    trace = generate(spec)
    if args.out:
        write_trace(trace, args.out)
    else:
        from .trace import format_trace
        sys.stdout.write(format_trace(trace))


def cmd_profile(args) -> None:
    l1 = _l1(args)
    trace = read_trace(args.trace)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    for p in profile_trace(trace, l1, args.cap):
        path = out / f"core{p.core}.profile"
        write_profile(p, path)
        print(path)


def cmd_model(args) -> None:
    profiles = [read_profile(p) for p in args.profiles]
    if args.l1_size is not None:
        want = _l1(args)
        for path, p in zip(args.profiles, profiles):
            if p.geometry != want:
                raise GeometryMismatch(f"{path} was profiled for a different L1 geometry")
    report = run_model(profiles, _l2(args), args.merged_cap, args.scope, args.epoch)
    _emit(report.text(), args.out)


def cmd_simulate(args) -> None:
    cfg = SimConfig(_l1(args), _l2(args))
    trace = read_trace(args.trace)
    stats = simulate(trace, cfg, capture_l2=args.capture_l2)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "stats.csv").write_text(stats.to_csv())
    print(out / "stats.csv")
    if args.capture_l2:
        merged_cap = args.merged_cap or 8 * args.cap
        hist = profile_merged_l2(stats, merged_cap)
        (out / "l2_mrdh.hist").write_text("\n".join(hist.to_lines()) + "\n")
        print(out / "l2_mrdh.hist")


def cmd_compare(args) -> None:
    trace = read_trace(args.trace)
    cmp = compare(trace, _l1(args), _l2(args), args.cap, args.merged_cap, args.scope,
                  args.epoch)
    _emit(f"# compare {cmp.label}\n" + cmp.table(), args.out)


def _read_grid(path: str) -> list[tuple[int, int, int, int]]:
    grid = []
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 4:
            raise InvalidGrid(f"{path}:{n}: expected 'l1_size l1_assoc l2_size l2_assoc'")
        try:
            grid.append((parse_size(parts[0]), int(parts[1]), parse_size(parts[2]), int(parts[3])))
        except (ValueError, GeometryError) as e:
            raise InvalidGrid(f"{path}:{n}: {e}") from None
    return grid


def cmd_sweep(args) -> None:
    grid = _read_grid(args.grid) if args.grid else default_grid()
    spec = SweepSpec(grid, args.line, args.cap, args.scope)
    rows = run_sweep(read_trace(args.trace), spec, workers=args.workers)
    _emit(sweep_csv(rows), args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mrdh", description="Multi-level cache miss-rate model.")
    sub = ap.add_subparsers(dest="command", required=True)

    def geom(p, l1=True, l2=True, l1_required=True):
        if l1:
            p.add_argument("--l1-size", required=l1_required, help="e.g. 16k")
            p.add_argument("--l1-assoc", type=int, default=2)
        if l2:
            p.add_argument("--l2-size", required=True, help="e.g. 4M")
            p.add_argument("--l2-assoc", type=int, default=8)
        p.add_argument("--line", type=int, default=64)

    g = sub.add_parser("generate", help="write a synthetic trace")
    g.add_argument("--cores", type=int, default=2)
    g.add_argument("--records", type=int, default=10_000, help="records per core")
    g.add_argument("--private", type=int, default=256, help="private footprint in lines")
    g.add_argument("--shared", type=int, default=0, help="shared footprint in lines")
    g.add_argument("--sharing", type=float, default=0.0)
    g.add_argument("--writes", type=float, default=0.0)
    g.add_argument("--interleave", choices=("round_robin", "random"), default="random")
    g.add_argument("--pattern", choices=("random", "loop"), default="random")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--line", type=int, default=64)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("profile", help="profile a trace into per-core L1 tables")
    p.add_argument("trace")
    geom(p, l2=False)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_profile)

    m = sub.add_parser("model", help="run the model on profile files")
    m.add_argument("profiles", nargs="+")
    geom(m, l1_required=False)
    m.add_argument("--merged-cap", type=int)
    m.add_argument("--scope", choices=("cache", "set"), default="cache")
    m.add_argument("--epoch", choices=("gaps", "literal"), default="gaps",
                   help="coherence exposure: (r + 1) or r other-core gaps per epoch")
    m.add_argument("--out")
    m.set_defaults(func=cmd_model)

    s = sub.add_parser("simulate", help="run the reference simulator")
    s.add_argument("trace")
    geom(s)
    s.add_argument("--capture-l2", action="store_true")
    s.add_argument("--cap", type=int, default=DEFAULT_CAP)
    s.add_argument("--merged-cap", type=int)
    s.add_argument("--out", help="output directory")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="model vs simulator on one trace")
    c.add_argument("trace")
    geom(c)
    c.add_argument("--cap", type=int, default=DEFAULT_CAP)
    c.add_argument("--merged-cap", type=int)
    c.add_argument("--scope", choices=("cache", "set"), default="cache")
    c.add_argument("--epoch", choices=("gaps", "literal"), default="gaps",
                   help="coherence exposure: (r + 1) or r other-core gaps per epoch")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    w = sub.add_parser("sweep", help="modeled L2 misses over a grid of configurations")
    w.add_argument("trace")
    w.add_argument("--grid", help="file of 'l1_size l1_assoc l2_size l2_assoc' lines")
    w.add_argument("--line", type=int, default=64)
    w.add_argument("--cap", type=int, default=DEFAULT_CAP)
    w.add_argument("--scope", choices=("cache", "set"), default="cache")
    w.add_argument("--workers", type=int, default=4)
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (GeometryError, TraceError, InvalidSpec, InvalidGrid, GeometryMismatch,
            ValueError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
