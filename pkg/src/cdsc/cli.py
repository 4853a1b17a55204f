"""Command-line entry point: plan, discover, simulate, oracle, compare.

Node labels on the command line and in files are 1-based.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .budget import (
    ExpertiseSet,
    bound_known_edges,
    bound_sparsity,
    bound_uniform,
    budget_ic,
    budget_with_expertise,
)
from .citest import TesterConfig
from .discovery import FiniteSample, Hybrid, recovery_success, run_ic, run_pc
from .errors import CdscError, EmptyFamily, InsufficientData, InvalidParameter, RecoveryFailed
from .harness import (
    ExperimentSpec,
    budget_comparison,
    calibrate_c_prime,
    comparison_csv,
    error_rate_experiment,
    theoretical_curve,
    worker_cap,
)
from .io import (
    dumps,
    dumps_line,
    load_dataset,
    load_edges,
    load_expertise,
    load_model,
    pattern_to_json,
    write_csv,
)
from .model import exact_ci, joint_from_net, or_gate_model, tv_to_ci_surrogate, weakest_dependence

EXIT_OK, EXIT_USAGE, EXIT_EMPTY, EXIT_DATA, EXIT_RECOVERY = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    text = text.strip()
    return [int(x) for x in text.split(",") if x.strip()] if text else []


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _or_gate(text: str):
    try:
        n, p0 = text.split(",")
        return or_gate_model(int(n), float(p0))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected N,p0 (e.g. 3,0.6), got {text!r}") from exc


def _eps(text: str):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--eps takes a number or 'auto', got {text!r}") from exc


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cprime", type=float, default=1.0, help="tester calibration constant C'")
    p.add_argument("--eps", type=_eps, default=0.1, help="minimum dependence (or 'auto' with a model)")
    p.add_argument("--alpha", type=float, default=0.05, help="total failure budget")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="cdsc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", parents=[common], help="expected samples for a target confidence")
    plan.add_argument("--nodes", type=int, required=True)
    plan.add_argument("--card", type=int, default=2)
    plan.add_argument("--cards", type=_int_list, default=None, help="per-variable cardinalities")
    extra = plan.add_mutually_exclusive_group()
    extra.add_argument("--sparsity", type=int, default=None)
    extra.add_argument("--known-edges", type=Path, default=None)
    extra.add_argument("--expertise", type=Path, default=None)

    disc = sub.add_parser("discover", parents=[common], help="run IC/PC on a dataset")
    disc.add_argument("--data", type=Path, required=True)
    disc.add_argument("--mode", choices=("ic", "pc"), default="ic")
    disc.add_argument("--sparsity", type=int, default=None)
    disc.add_argument("--m", type=float, default=None, help="expected samples per test (default: planned)")
    disc.add_argument("--model", type=Path, default=None, help="true model for comparison")
    disc.add_argument("--expertise", type=Path, default=None)
    disc.add_argument("--strict", action="store_true")

    sim = sub.add_parser("simulate", parents=[common], help="Monte-Carlo error-rate curve")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", type=Path)
    src.add_argument("--or-gate", type=_or_gate)
    sim.add_argument("--samples", type=_float_list, required=True)
    sim.add_argument("--trials", type=int, default=200)
    sim.add_argument("--algo", choices=("ic", "pc"), default="ic")
    sim.add_argument("--sparsity", type=int, default=None)
    sim.add_argument("--source", choices=("tester", "oracle"), default="tester")
    sim.add_argument("--sharing", choices=("shared", "fresh"), default="shared")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--calibrate", action="store_true", help="fit C' to the empirical curve")

    ora = sub.add_parser("oracle", parents=[common], help="exact CI query against a model")
    osrc = ora.add_mutually_exclusive_group(required=True)
    osrc.add_argument("--model", type=Path)
    osrc.add_argument("--or-gate", type=_or_gate)
    ora.add_argument("--i", type=int, required=True)
    ora.add_argument("--j", type=int, required=True)
    ora.add_argument("--cond", type=_int_list, default=[])

    cmp_ = sub.add_parser("compare", parents=[common], help="IC vs PC budget table")
    cmp_.add_argument("--nmin", type=int, default=3)
    cmp_.add_argument("--nmax", type=int, required=True)
    cmp_.add_argument("--sparsity", type=int, default=1)
    cmp_.add_argument("--card", type=int, default=2)
    return parser


def _emit(text: str, out: Path | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _float_eps(args) -> float:
    if args.eps == "auto":
        raise UsageError("--eps auto needs a model (simulate/oracle)")
    return args.eps


def _config(args, epsilon: float) -> TesterConfig:
    return TesterConfig(epsilon=epsilon, c_prime=args.cprime, rng_seed=args.seed)


def _report_text(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(doc)
    flat = {}
    for k, v in doc.items():
        if isinstance(v, dict):
            flat.update({f"{k}.{kk}": vv for kk, vv in v.items()})
        else:
            flat[k] = v
    return write_csv(list(flat), [list(flat.values())])


def cmd_plan(args) -> int:
    eps = _float_eps(args)
    config = _config(args, eps)
    n = args.nodes
    cards = args.cards if args.cards else args.card
    uniform = isinstance(cards, int) or len(set(cards)) == 1
    ell = cards if isinstance(cards, int) else cards[0]
    bound = None
    if args.sparsity is not None:
        mode = "sparsity"
        report = budget_with_expertise(n, cards, args.alpha, eps, ExpertiseSet(max_cond=args.sparsity), config)
        if uniform:
            bound = bound_sparsity(n, ell, args.alpha, eps, min(args.sparsity, n - 2), config)
    elif args.known_edges is not None:
        mode = "known_edges"
        edges = load_edges(args.known_edges)
        pairs = frozenset((min(a, b), max(a, b)) for a, b in edges)
        report = budget_with_expertise(n, cards, args.alpha, eps, ExpertiseSet(known_pairs=pairs), config)
        if uniform:
            bound = bound_known_edges(n, ell, args.alpha, eps, len(pairs), config)
    elif args.expertise is not None:
        mode = "expertise"
        s, _ = load_expertise(args.expertise)
        report = budget_with_expertise(n, cards, args.alpha, eps, s, config)
    else:
        mode = "ic"
        report = budget_ic(n, cards, args.alpha, eps, config)
        if uniform:
            bound = bound_uniform(n, ell, args.alpha, eps, config)
    report.m_bound = bound
    doc = {"mode": mode, "nodes": n, **report.to_dict()}
    _emit(_report_text(doc, args.format), args.out)
    return EXIT_OK


def cmd_discover(args) -> int:
    eps = _float_eps(args)
    config = _config(args, eps)
    truth = load_model(args.model) if args.model else None
    data = load_dataset(args.data, truth.variables if truth else None)
    n = len(data.variables)
    cards = [v.card for v in data.variables]
    r = args.sparsity if args.mode == "pc" else None
    if args.mode == "pc" and r is None:
        raise UsageError("--mode pc needs --sparsity")

    m = args.m
    if m is None:
        s = ExpertiseSet(max_cond=r) if r is not None else ExpertiseSet()
        m = budget_with_expertise(n, cards, args.alpha, eps, s, config).m_expected

    ci = FiniteSample(data, config, m)
    if args.expertise is not None:
        s, answers = load_expertise(args.expertise)
        ci = Hybrid(s, answers, ci, oracle=joint_from_net(truth) if truth else None)

    try:
        pattern, trace = run_ic(n, ci) if r is None else run_pc(n, ci, r)
    except InsufficientData as exc:
        print(f"error: insufficient data: the test drew K={exc.required} rows but the "
              f"dataset has {exc.available}", file=sys.stderr)
        return EXIT_DATA
    except RecoveryFailed as exc:
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
            _write_trace(args.out / "trace.jsonl", exc.trace or [])
        print(f"recovery failed: {exc}", file=sys.stderr)
        return EXIT_RECOVERY if args.strict else EXIT_OK

    doc = {"pattern": pattern_to_json(pattern), "m": m, "tests": len(trace)}
    if truth is not None:
        doc["recovery_success"] = recovery_success(pattern, truth.dag)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "pattern.json").write_text(dumps(pattern_to_json(pattern)) + "\n")
        _write_trace(args.out / "trace.jsonl", trace)
    sys.stdout.write(dumps(doc) + "\n")
    if args.strict and truth is not None and not doc["recovery_success"]:
        return EXIT_RECOVERY
    return EXIT_OK


def _write_trace(path: Path, trace) -> None:
    path.write_text("".join(dumps_line(e.to_json()) + "\n" for e in trace))


def _net(args):
    return load_model(args.model) if args.model else args.or_gate


def cmd_simulate(args) -> int:
    net = _net(args)
    eps = weakest_dependence(joint_from_net(net)) if args.eps == "auto" else args.eps
    if args.algo == "pc" and args.sparsity is None:
        raise UsageError("--algo pc needs --sparsity")
    spec = ExperimentSpec(
        model=net,
        sample_sizes=args.samples,
        trials=args.trials,
        algorithm=args.algo,
        r=args.sparsity,
        base_seed=args.seed,
        config=_config(args, eps),
        source=args.source,
        sharing=args.sharing,
        workers=worker_cap(args.workers),
    )
    curve = error_rate_experiment(spec)
    meta = {"epsilon": eps, "c_prime": args.cprime}
    cards = set(net.dag.cards)
    if args.calibrate and len(cards) == 1:
        ell = cards.pop()
        c_cal, m_cross, level = calibrate_c_prime(curve, net.n, ell, eps, args.algo, args.sparsity, level=None)
        theory = theoretical_curve(net.n, ell, eps, c_cal, spec.sample_sizes, args.algo, args.sparsity)
        curve = type(curve)(tuple(
            type(p)(p.m, p.trials, p.failures, th) for p, th in zip(curve.points, theory)
        ))
        meta.update(c_prime=c_cal, calibration_m=m_cross, calibration_level=level)
    if args.format == "csv":
        _emit(curve.to_csv(), args.out)
    else:
        _emit(dumps({**meta, "curve": curve.to_records()}), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    net = _net(args)
    joint = joint_from_net(net)
    i, j = args.i - 1, args.j - 1
    cond = [c - 1 for c in args.cond]
    indep = exact_ci(joint, i, j, cond)
    tv = tv_to_ci_surrogate(joint, i, j, cond)
    doc = {"i": args.i, "j": args.j, "cond": list(args.cond), "independent": indep, "tv_surrogate": tv}
    if args.format == "json":
        _emit(dumps(doc), args.out)
    else:
        row = [args.i, args.j, " ".join(str(c) for c in args.cond), indep, tv]
        _emit(write_csv(list(doc), [row]), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    eps = _float_eps(args)
    if args.nmax < args.nmin:
        raise UsageError("--nmax must be at least --nmin")
    rows = budget_comparison(range(args.nmin, args.nmax + 1), args.card, args.alpha, eps,
                             args.sparsity, args.cprime)
    if args.format == "csv":
        _emit(comparison_csv(rows), args.out)
    else:
        recs = [{"N": r.N, "m_ic": r.m_ic, "m_pc": r.m_pc, "ratio": r.ratio} for r in rows]
        _emit(dumps(recs), args.out)
    return EXIT_OK


COMMANDS = {
    "plan": cmd_plan,
    "discover": cmd_discover,
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except EmptyFamily as exc:
        print(f"error: {exc} (every test is covered by expertise; 0 samples needed)", file=sys.stderr)
        return EXIT_EMPTY
    except InsufficientData as exc:
        print(f"error: insufficient data: K={exc.required} rows needed, {exc.available} available",
              file=sys.stderr)
        return EXIT_DATA
    except (UsageError, InvalidParameter, CdscError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
