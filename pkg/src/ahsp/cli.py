"""Command line: ``ahsp gen | run | verify | bench``."""

from __future__ import annotations

import argparse
import csv
import glob
import io
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .centralized import run_exact_trials, run_standard_trials
from .classical import brute_force_solve, run_edck
from .distributed import run_dk_probabilistic_trials, run_edk_trials
from .groups import GroupError, GroupSpec, Subgroup, chain_length, span, sylow_decompose
from .oracle import instance_to_json, load_instance
from .seeds import derive_seed, node_seeds, trial_seed

ALGORITHMS = ("standard", "exact", "dk", "edk", "edck", "brute")
PROBABILISTIC = ("standard", "dk")
CSV_COLUMNS = (
    "algorithm",
    "|G|",
    "len_G",
    "len_K",
    "m",
    "iterations",
    "queries_max_node",
    "queries_total",
    "classical_bytes",
    "quantum_msgs",
    "success",
)


def parse_moduli(text: str) -> GroupSpec:
    try:
        moduli = tuple(int(v) for v in text.replace(" ", "").split(",") if v)
    except ValueError as exc:
        raise GroupError(f"bad moduli {text!r}") from exc
    return GroupSpec(moduli)


def random_subgroup(group: GroupSpec, seed: int) -> Subgroup:
    """Direct sum of one random span per Sylow component."""
    rng = np.random.default_rng(seed)
    gens = []
    for comp in sylow_decompose(group):
        for _ in range(int(rng.integers(0, comp.group.k + 1))):
            x = tuple(int(rng.integers(n)) for n in comp.group.moduli)
            gens.append(comp.embed(x))
    return span(group, gens)


def parse_subgroup(group: GroupSpec, text: str | None, seed: int) -> Subgroup:
    if text is None or text == "":
        return span(group, [])
    if text == "random":
        return random_subgroup(group, seed)
    rows = []
    for chunk in text.split(";"):
        if chunk.strip():
            row = tuple(int(v) for v in chunk.split(","))
            if len(row) != group.k:
                raise GroupError(f"generator {row} has {len(row)} coordinates, expected {group.k}")
            rows.append(row)
    return span(group, rows)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(round(v, 6))
    return str(v)


def _row(algorithm, group, len_k, m, iterations, qmax, qtotal, cbytes, qmsgs, success) -> dict:
    return {
        "algorithm": algorithm,
        "|G|": group.order,
        "len_G": chain_length(group),
        "len_K": len_k,
        "m": m,
        "iterations": iterations,
        "queries_max_node": qmax,
        "queries_total": qtotal,
        "classical_bytes": cbytes,
        "quantum_msgs": qmsgs,
        "success": success,
    }


def run_trials(
    algorithm: str,
    group: GroupSpec,
    hidden: Subgroup,
    oracle,
    trials: int,
    master_seed: int,
    epsilon: float | None = None,
) -> tuple[list[dict], list[dict]]:
    """Rows (one per trial) and full JSON reports for ``algorithm``."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if algorithm in PROBABILISTIC and epsilon is None:
        raise ValueError(f"algorithm {algorithm!r} needs --epsilon")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seeds = [trial_seed(master_seed, t) for t in range(trials)]
    m = len(sylow_decompose(group))
    len_k = chain_length(hidden)
    rows: list[dict] = []
    reports: list[dict] = []
    if algorithm in ("standard", "exact"):
        oracles = [oracle.fork() for _ in seeds]
        rngs = [np.random.default_rng(s) for s in seeds]
        if algorithm == "standard":
            runs = run_standard_trials(group, oracles, epsilon, rngs)
        else:
            runs = run_exact_trials(group, oracles, hidden.order, rngs)
        for r in runs:
            rows.append(_row(algorithm, group, len_k, 1, r.iterations, r.oracle_queries, r.oracle_queries, 0, 0, r.success))
            reports.append(r.to_json())
    elif algorithm in ("dk", "edk"):
        per_node = [node_seeds(s, m) for s in seeds]
        if algorithm == "dk":
            runs = run_dk_probabilistic_trials(group, oracle, epsilon, per_node)
        else:
            runs = run_edk_trials(group, oracle, hidden.order, per_node)
        for r in runs:
            rows.append(
                _row(
                    algorithm, group, len_k, m, r.iterations, r.max_node_queries, r.total_queries,
                    r.classical_bytes, r.quantum_messages, r.success,
                )
            )
            reports.append(r.to_json())
    elif algorithm == "edck":
        for _ in seeds:
            r = run_edck(group, oracle.fork())
            rows.append(
                _row(algorithm, group, len_k, m, group.k, r.max_node_queries, r.total_queries, r.classical_bytes, 0, r.success)
            )
            reports.append(r.to_json())
    else:
        for _ in seeds:
            o = oracle.fork()
            rec = brute_force_solve(group, o)
            ok = rec == hidden
            rows.append(_row(algorithm, group, len_k, 1, group.order, o.query_count, o.query_count, 0, 0, ok))
            reports.append({"recovered": rec.to_json(), "oracle_queries": o.query_count, "success": ok})
    return rows, reports


def summary_row(rows: Sequence[dict]) -> dict:
    """Means of the numeric columns (success as a rate); ``algorithm`` is tagged ``:summary``."""
    out = dict(rows[0])
    out["algorithm"] = f"{rows[0]['algorithm']}:summary"
    for col in ("iterations", "queries_max_node", "queries_total", "classical_bytes"):
        vals = [r[col] for r in rows]
        out[col] = float(np.mean(vals))
    out["quantum_msgs"] = int(sum(r["quantum_msgs"] for r in rows))
    out["success"] = float(np.mean([1.0 if r["success"] else 0.0 for r in rows]))
    return out


def write_csv(rows: Sequence[dict], fh, with_success: bool = True) -> None:
    cols = [c for c in CSV_COLUMNS if with_success or c != "success"]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in cols])


def _instance_from_args(args) -> tuple[GroupSpec, Subgroup, object]:
    if args.instance:
        return load_instance(args.instance)
    if not args.moduli:
        raise GroupError("give --instance or --moduli")
    group = parse_moduli(args.moduli)
    hidden = parse_subgroup(group, args.subgroup, args.seed)
    return load_instance(instance_to_json(group, hidden, args.shift_seed))


def cmd_gen(args) -> int:
    group = parse_moduli(args.moduli)
    hidden = parse_subgroup(group, args.subgroup, args.seed)
    data = instance_to_json(group, hidden, args.shift_seed if args.shift_seed is not None else args.seed)
    text = json.dumps(data, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_run(args) -> int:
    group, hidden, oracle = _instance_from_args(args)
    rows, reports = run_trials(args.algorithm, group, hidden, oracle, args.trials, args.seed, args.epsilon)
    rows = rows + [summary_row(rows)]
    buf = io.StringIO()
    if args.format == "csv":
        write_csv(rows, buf, with_success=not args.no_truth)
    else:
        json.dump({"rows": rows, "reports": reports}, buf, sort_keys=True, indent=1)
        buf.write("\n")
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_verify(args) -> int:
    from .verify import run_scope

    results = run_scope(args.scope, args.max_order)
    for r in results:
        print(r.line())
        for ex in r.examples:
            print(f"    e.g. {ex}")
    return 0 if all(r.ok for r in results) else 1


def cmd_bench(args) -> int:
    paths = []
    for pattern in args.instances:
        paths.extend(sorted(glob.glob(pattern)) or [pattern])
    rows = []
    for i, path in enumerate(paths):
        group, hidden, oracle = load_instance(path)
        for algorithm in args.algorithms.split(","):
            eps = args.epsilon if algorithm in PROBABILISTIC else None
            trial_rows, _ = run_trials(algorithm, group, hidden, oracle, args.trials, derive_seed(args.seed, i), eps)
            rows.append(summary_row(trial_rows))
    buf = io.StringIO()
    write_csv(rows, buf)
    _emit(buf.getvalue(), args.out)
    return 0


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ahsp", description="Finite Abelian hidden subgroup simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write an instance file")
    g.add_argument("--moduli", required=True, help="comma separated prime powers, e.g. 4,3")
    g.add_argument("--subgroup", default="", help='generators "a,b;c,d", or "random"')
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--shift-seed", type=int, default=None)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run an algorithm on an instance")
    r.add_argument("--instance")
    r.add_argument("--moduli")
    r.add_argument("--subgroup", default="")
    r.add_argument("--shift-seed", type=int, default=0)
    r.add_argument("--algorithm", choices=ALGORITHMS, required=True)
    r.add_argument("--epsilon", type=float)
    r.add_argument("--trials", type=int, default=1)
    r.add_argument("--seed", type=int, default=0, help="master seed")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--no-truth", action="store_true", help="omit the success column")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run invariant suites")
    v.add_argument("--scope", choices=("group", "sim", "all"), required=True)
    v.add_argument("--max-order", type=int, default=64)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="summary rows over many instance files")
    b.add_argument("--instances", nargs="+", required=True)
    b.add_argument("--algorithms", default="exact,edk,edck")
    b.add_argument("--epsilon", type=float, default=0.1)
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GroupError, ValueError) as exc:
        parser.exit(2, f"ahsp: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
