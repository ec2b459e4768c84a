"""Command-line front end.

    qamgame tables [--coded]
    qamgame sweep-delay [--coded] [--points N]
    qamgame tradeoff
    qamgame nash --scene scene.json
    qamgame validate-queue [--rho 0.5] [--seed 0]
    qamgame fit-gain samples.csv --b 4

Output goes to stdout unless ``--out`` is given. Exit status is 0 on
success, 2 for bad input, 3 for an infeasible scene and 4 when a solver
fails to converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from .errors import ConfigError, DomainError, InfeasibleError, SolverError
from .game import load_scene, nash_equilibrium, report_to_dict, verify_equilibrium
from .optimizer import gamma_star
from .phy import (ModScheme, PacketConfig, default_tcm_config, efficiency, fit_coding_gain,
                  from_db, gain_params_to_records, load_tcm_config)
from .queueing import LinkRate, TrafficQos, simulate_queue

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 2, 3, 4


def _tcm(args):
    return load_tcm_config(args.gain_file) if args.gain_file else default_tcm_config()


def _pkt(args):
    try:
        return PacketConfig(args.packet_bits)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_tables(args) -> str:
    tcm = _tcm(args) if args.coded else None
    rows = ex.table_rows(_pkt(args), tcm)
    cols = ex.TABLE_COLUMNS + (ex.TABLE_CODED_COLUMNS if tcm else [])
    if args.format == "csv":
        rows = [ex.round_table_row(r) for r in rows]
    return ex.format_rows(rows, cols, args.format)


def cmd_sweep_delay(args) -> str:
    try:
        sweep = ex.SweepSpec(args.min, args.max, args.points, not args.linear)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    tcm = _tcm(args) if args.coded else None
    rows = ex.delay_sweep(sweep, _pkt(args), args.source_frac, tcm, args.coded_only)
    return ex.format_rows(rows, ex.sweep_columns(tcm, args.coded_only), args.format)


def cmd_tradeoff(args) -> str:
    rows = ex.tradeoff_rows(_pkt(args), _tcm(args), args.rate_frac)
    return ex.format_rows(rows, ex.TRADEOFF_COLUMNS, args.format)


def cmd_nash(args) -> str:
    if not args.scene:
        raise ConfigError("nash needs --scene")
    scene = load_scene(args.scene, args.gain_file)
    if args.coded and scene.tcm is None:
        scene = replace(scene, tcm=_tcm(args))
    report = nash_equilibrium(scene, args.selection)
    if not report.feasible:
        raise InfeasibleError(
            f"scene exceeds capacity: total user size {report.total_size:.6g} >= 1")
    doc = report_to_dict(scene, report)
    if args.verify:
        chk = verify_equilibrium(scene, report, args.verify, seed=args.seed)
        doc["deviation_check"] = {"samples_per_user": args.verify, "max_gain": chk.max_gain,
                                  "passed": chk.passed}
    if args.format == "json":
        return json.dumps(doc, indent=2) + "\n"
    cols = list(doc["users"][0])
    return ex.format_rows(doc["users"], cols, "csv")


def cmd_validate_queue(args) -> str:
    pkt = _pkt(args)
    if not 0.0 <= args.rho < 1.0:
        raise ConfigError(f"--rho must lie in [0, 1), got {args.rho}")
    scheme = ModScheme(args.b)
    gamma = from_db(args.sir_db) if args.sir_db is not None else gamma_star(scheme, pkt).gamma_star
    link = LinkRate(args.symbol_rate, scheme)
    tau = pkt.L / link.bit_rate
    f = efficiency(scheme, pkt, gamma)
    # the delay bound plays no part in the simulation
    traffic = TrafficQos(args.rho * f / tau, math.inf, pkt)
    res = simulate_queue(link, traffic, gamma, args.packets, args.seed, args.trace)
    doc = {
        "rho": res.rho,
        "analytic_delay": res.analytic_delay,
        "empirical_delay": res.mean_delay,
        "std_error": res.std_error,
        "z_score": res.z_score,
        "analytic_service": res.analytic_service,
        "empirical_service": res.mean_service,
        "n_packets": res.n_packets,
        "seed": args.seed,
        "pass": res.within(3.0),
    }
    if args.format == "json":
        return json.dumps(doc, indent=2) + "\n"
    return ex.format_rows([doc], list(doc), "csv")


def _read_gain_samples(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return [(float(from_db(float(r["sir_db"]))), float(from_db(float(r["gain_db"]))))
                for r in rows]
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot read gain samples from {path}: {exc}") from exc


def cmd_fit_gain(args) -> str:
    if args.b is None or args.b < 2 or args.b % 2:
        raise ConfigError("fit-gain needs an even --b >= 2")
    fit = fit_coding_gain(_read_gain_samples(args.samples), args.b)
    rec = gain_params_to_records({args.b: fit.params})[0]
    rec["rms"] = fit.rms
    rec["n_samples"] = fit.n_samples
    if args.format == "json":
        return json.dumps([rec], indent=2) + "\n"
    return ex.format_rows([rec], list(rec), "csv")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--packet-bits", type=int, default=100, help="packet length L in bits")
    common.add_argument("--coded", action="store_true", help="include the TCM-coded system")
    common.add_argument("--gain-file", help="JSON gain constants (default: shipped 8-state fit)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="write to this path instead of stdout")

    ap = argparse.ArgumentParser(prog="qamgame", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tables", parents=[common], help="optimum SIR and efficiency per constellation")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("sweep-delay", parents=[common], help="single-user best response versus D*B")
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--min", type=float, default=13.0, help="smallest normalized delay")
    p.add_argument("--max", type=float, default=1000.0, help="largest normalized delay")
    p.add_argument("--linear", action="store_true", help="linear instead of log spacing")
    p.add_argument("--source-frac", type=float, default=0.01, help="source rate over B")
    p.add_argument("--coded-only", action="store_true", help="report only the coded system")
    p.set_defaults(func=cmd_sweep_delay)

    p = sub.add_parser("tradeoff", parents=[common], help="energy factor versus spectral efficiency")
    p.add_argument("--rate-frac", type=float, default=0.01, help="symbol rate over B")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("nash", parents=[common], help="equilibrium of a scene file")
    p.add_argument("--scene", help="scene JSON file")
    p.add_argument("--selection", choices=("pareto", "max-rate"), default="pareto")
    p.add_argument("--verify", type=int, default=0, metavar="N",
                   help="also sample N unilateral deviations per user")
    p.set_defaults(func=cmd_nash)

    p = sub.add_parser("validate-queue", parents=[common], help="simulate the ARQ queue")
    p.add_argument("--b", type=int, default=2)
    p.add_argument("--rho", type=float, default=0.5, help="server utilization")
    p.add_argument("--sir-db", type=float, help="operating SIR (default: optimum)")
    p.add_argument("--symbol-rate", type=float, default=1e5)
    p.add_argument("--packets", type=int, default=100_000)
    p.add_argument("--trace", help="write a per-packet CSV trace here")
    p.set_defaults(func=cmd_validate_queue)

    p = sub.add_parser("fit-gain", parents=[common], help="fit arctan gain constants to samples")
    p.add_argument("samples", help="CSV with columns sir_db, gain_db")
    p.add_argument("--b", type=int)
    p.set_defaults(func=cmd_fit_gain)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"qamgame {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"qamgame {args.command}: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverError as exc:
        print(f"qamgame {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
