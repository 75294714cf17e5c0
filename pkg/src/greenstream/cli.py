"""Command-line interface.

Subcommands: generate, run, sweep, export-mps, verify.

Exit codes: 0 success, 1 validation error (bad config, bad input file, or a
dump that fails verification), 2 PGS infeasible in a single run, 3 internal
error.
"""
import argparse
import logging
import sys
from pathlib import Path

from . import experiment as ex
from .config import OUTPUT_ENV, ConfigError, load, parse_assignment

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("greenstream")


def _csv_list(conv):
    def parse(text):
        try:
            return [conv(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    return parse


def _number(text):
    v = float(text)
    return int(v) if v == int(v) and "." not in text else v


def _common(p):
    p.add_argument("-c", "--config", help="JSON config file (see config_schema.json)")
    p.add_argument("-o", "--output-dir", help=f"output directory (overrides ${OUTPUT_ENV} and the file)")
    p.add_argument("--seed", type=int)
    p.add_argument("-N", "--n-vehicles", type=int)
    p.add_argument("--allocator", choices=("pgs", "es", "rp"))
    p.add_argument("--l-req", help='minimum average level, or "match"')
    p.add_argument("--solver-mode", choices=("auto", "exact", "heuristic"))
    p.add_argument("--time-limit", type=float, help="branch-and-bound time limit in seconds")
    p.add_argument("--sleep", action="store_true", default=None,
                   help="sleep-mode accounting for the written power trace")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key by dotted path, e.g. radio.bandwidth_hz=1e7")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="greenstream", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write vehicle traces and the predicted rate table")
    _common(p)

    p = sub.add_parser("run", help="one allocator on one scenario")
    _common(p)

    p = sub.add_parser("sweep", help="summary rows over a parameter grid")
    _common(p)
    p.add_argument("--vary", action="append", required=True, metavar="KEY=V1,V2,...",
                   help="grid axis: n_vehicles, l_req or any dotted config key (repeatable)")
    p.add_argument("--seeds", type=_csv_list(int), default=None, help="comma-separated seeds")
    p.add_argument("--allocators", type=_csv_list(str), default=None)
    p.add_argument("-j", "--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--summary", default="sweep_summary.csv", help="file name inside the output dir")

    p = sub.add_parser("export-mps", help="write the PGS model in MPS format")
    _common(p)
    p.add_argument("--file", default="pgs.mps", help="file name inside the output dir")

    p = sub.add_parser("verify", help="re-check a solution dump against the configured scenario")
    _common(p)
    p.add_argument("--x", required=True, help="user_id,slot,x CSV")
    p.add_argument("--levels", required=True, help="user_id,segment,level CSV")
    return ap


def _overrides(args) -> dict:
    out = {}
    for text in args.set:
        k, v = parse_assignment(text)
        out[k] = v
    flags = {
        "output_dir": args.output_dir, "seed": args.seed, "scenario.n_vehicles": args.n_vehicles,
        "allocator": args.allocator, "solver.mode": args.solver_mode,
        "solver.time_limit_s": args.time_limit, "power.sleep_enabled": args.sleep,
    }
    if args.l_req is not None:
        flags["l_req"] = args.l_req if args.l_req == "match" else float(args.l_req)
    out.update({k: v for k, v in flags.items() if v is not None})
    return out


def _print_row(row):
    for f in ex.SUMMARY_FIELDS + ("wall_time_s",):
        print(f"{f:>22}: {ex.fmt(row.get(f))}")


def cmd_generate(cfg, args) -> int:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    world = ex.build_world(cfg)
    if world.scenario is not None:
        from .scenario import write_traces
        write_traces(world.scenario, out / "traces.csv")
    world.rates.write_csv(out / "rates.csv", world.assoc)
    print(f"wrote {world.n_users} users x {world.rates.shape[1]} slots to {out}")
    return EXIT_OK


def cmd_run(cfg, args) -> int:
    row = ex.run(cfg, write=True)
    out = Path(cfg["output_dir"])
    ex.write_rows([row], out / "summary.csv")
    ex.write_rows([row], out / "timing.csv", ex.TIMING_FIELDS)
    _print_row(row)
    return EXIT_INFEASIBLE if row["solve_status"] == "infeasible" else EXIT_OK


def cmd_sweep(cfg, args) -> int:
    vary = {}
    for text in args.vary:
        if "=" not in text:
            raise ConfigError(f"--vary expects KEY=V1,V2,..., got {text!r}")
        k, vals = text.split("=", 1)
        vary[k.strip()] = [v if v == "match" else _number(v) for v in vals.split(",") if v.strip()]
    seeds = args.seeds if args.seeds is not None else [cfg["seed"]]
    allocs = args.allocators if args.allocators is not None else [cfg["allocator"]]
    rows = ex.sweep(cfg, vary, seeds, allocs, jobs=args.jobs)
    out = Path(cfg["output_dir"])
    path = ex.write_rows(rows, out / args.summary)
    ex.write_rows(rows, path.with_name(path.stem + "_timing.csv"), ex.TIMING_FIELDS)
    print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK


def cmd_export_mps(cfg, args) -> int:
    from .pgs import PgsInstance, build_model, export_mps
    world = ex.build_world(cfg)
    if cfg["l_req"] == "match":
        l_req, _ = ex.matched_l_req(world, cfg)
    else:
        l_req = float(cfg["l_req"])
    inst = PgsInstance(world.rates, world.assoc, world.ladder, world.schedule, l_req, cfg["b_max_bits"])
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    path = export_mps(build_model(inst), out / args.file)
    print(f"wrote {path} (l_req={l_req:g})")
    return EXIT_OK


def cmd_verify(cfg, args) -> int:
    world = ex.build_world(cfg)
    x, plan = ex.read_solution(world, args.x, args.levels)
    l_req = None if cfg["l_req"] == "match" else float(cfg["l_req"])
    report = ex.verify_solution(world, x, plan, l_req)
    for fam, (ok, detail) in report.items():
        print(f"{fam:>6}: {'PASS' if ok else 'FAIL'}  {detail}")
    return EXIT_OK if all(ok for ok, _ in report.values()) else EXIT_INVALID


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep,
            "export-mps": cmd_export_mps, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load(args.config, _overrides(args))
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
