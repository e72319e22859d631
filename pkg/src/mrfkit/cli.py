"""Command line interface.

Subcommands: gen, solve, preprocess, oracle, bench, verify. All file
exchange uses the JSON instance format; failures exit non-zero with a
machine-readable error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds, oracle
from .energy import (
    PartialLabeling,
    condition,
    evaluate,
    instance_to_dict,
    load_instance,
    save_instance,
)
from .errors import MrfError, TooLargeError
from .generators import GENERATOR_KINDS, generate
from .harness import run_method, run_suite, summarize
from .inference import SolveOptions, alpha_expansion, direct_multilabel_preprocess_solve
from .preprocess import PreprocessConfig, run_preprocess

__all__ = ["main"]


def _parse_params(pairs: list[str]) -> dict:
    out: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"expected key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _parse_eps(raw: str) -> float:
    return math.inf if raw in ("inf", "infinity") else float(raw)


def _pre_config(args: argparse.Namespace) -> PreprocessConfig:
    return PreprocessConfig(
        kappa=args.kappa,
        tau=args.tau,
        epsilon=_parse_eps(args.eps),
        q_mode=args.q,
        check_mode=args.check,
    )


def _add_pre_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kappa", type=float, default=0.8, help="acceptance threshold in [0,1]")
    p.add_argument("--tau", type=int, default=3, help="number of sweeps")
    p.add_argument("--eps", default="inf", help="worst-case loss cap per fix, or 'inf'")
    p.add_argument("--q", default="unary", help="marginal mode: uniform | unary | lbp:K")
    p.add_argument("--check", choices=("approx", "exact"), default="approx")


def _cmd_gen(args: argparse.Namespace) -> int:
    energy = generate(args.kind, _parse_params(args.param), args.seed)
    if args.output:
        save_instance(energy, args.output)
    else:
        json.dump(instance_to_dict(energy), sys.stdout)
        print()
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    energy = load_instance(args.instance)
    spec = {
        "method": args.method,
        "kappa": args.kappa,
        "tau": args.tau,
        "eps": args.eps,
        "q": args.q,
        "check": args.check,
        "max_epochs": args.max_epochs,
        "reject_uphill": args.reject_uphill,
        "keep_label_only_after_epoch1": args.keep_label_only_after_epoch1,
        "collect_precision": args.collect_precision,
    }
    report = run_method(energy, spec)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("time_seconds,energy\n")
            for t, e in report.trace:
                fh.write(f"{t:.9f},{e!r}\n")
    payload = report.to_dict()
    if args.report:
        Path(args.report).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    else:
        json.dump(payload, sys.stdout, indent=2)
        print()
    return 0


def _cmd_preprocess(args: argparse.Namespace) -> int:
    energy = load_instance(args.instance)
    result = run_preprocess(energy, _pre_config(args))
    payload = result.to_dict()
    if args.output:
        Path(args.output).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    else:
        json.dump(payload, sys.stdout, indent=2)
        print()
    return 0


def _parse_assign(raw: str) -> PartialLabeling:
    out = {}
    if raw:
        for part in raw.split(","):
            node, label = part.split("=")
            out[int(node)] = int(label)
    return PartialLabeling(out)


def _cmd_oracle(args: argparse.Namespace) -> int:
    energy = load_instance(args.instance)
    if args.query == "minimize":
        found = oracle.brute_force_minimize(energy, cap=args.cap)
        payload = {
            "min_energy": found.min_energy,
            "num_minimizers": len(found.minimizers),
            "minimizers": [[int(v) for v in m] for m in found.minimizers[: args.max_list]],
        }
    elif args.query in ("persistent", "autarky"):
        partial = _parse_assign(args.assign)
        fn = oracle.is_persistent if args.query == "persistent" else oracle.is_autarky
        payload = {"assign": dict(partial.items()), args.query: bool(fn(energy, partial, cap=args.cap))}
    elif args.query == "win-mass":
        from .marginals import marginals_for

        q = marginals_for(energy, args.q)
        mass = oracle.exact_criterion_mass(energy, args.node, args.label, q, cap=args.cap)
        payload = {"node": args.node, "label": args.label, "q": args.q, "mass": mass}
    elif args.query == "worst-loss":
        loss = oracle.exact_worst_loss(energy, args.node, args.label, cap=args.cap)
        payload = {"node": args.node, "label": args.label, "worst_loss": loss}
    else:  # pragma: no cover - argparse restricts choices
        raise MrfError(f"unknown oracle query {args.query}")
    json.dump(payload, sys.stdout, indent=2)
    print()
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    records = run_suite(manifest, args.output, base_dir=Path(args.manifest).parent)
    failed = [r for r in records if r.error]
    if args.baseline:
        for mode in ("per-instance", "per-dataset"):
            summary = summarize(records, args.baseline, mode)
            print(f"# {mode}")
            for method, stats in summary.items():
                print(
                    f"{method}: speedup {stats['speedup']:.3f}x, "
                    f"energy change {stats['energy_change']:+.4%} over {int(stats['cells'])} cells"
                )
    print(f"{len(records)} records written to {args.output} ({len(failed)} failed)")
    return 1 if failed else 0


def _cmd_verify(args: argparse.Namespace) -> int:
    energy = load_instance(args.instance)
    config = _pre_config(args)
    checks: list[tuple[str, bool, str]] = []

    result = run_preprocess(energy, config)
    checks.append(
        (
            "loss-bounds-nonnegative",
            all(v >= -1e-12 for v in result.loss_bounds.values()),
            f"{len(result.fixed)} fixed",
        )
    )

    try:
        space = 1
        for c in energy.label_counts:
            space *= int(c)
        feasible = space <= args.cap
        if feasible:
            found = oracle.brute_force_minimize(energy, cap=args.cap)
            slack = result.loss_total
            # additive chain with an exact remainder solver
            cond = condition(energy, result.fixed)
            rem = oracle.brute_force_minimize(cond.energy, cap=args.cap) if cond.energy.num_nodes else None
            if rem is not None:
                best = cond.full_labeling(rem.minimizers[0])
            else:
                best = cond.full_labeling(np.zeros(0, dtype=np.int64))
            achieved = evaluate(energy, best)
            checks.append(
                (
                    "additive-bound",
                    achieved <= found.min_energy + slack + 1e-9,
                    f"E={achieved:.6f} <= opt {found.min_energy:.6f} + slack {slack:.6f}",
                )
            )
            if math.isinf(config.epsilon):
                sound = all(
                    oracle.is_persistent(energy, PartialLabeling({i: result.fixed[i]}), cap=args.cap)
                    for i in result.fix_order
                ) if config.kappa >= 1.0 and config.check_mode == "exact" else True
                checks.append(("exact-mode-soundness", sound, "per-variable persistency"))
    except TooLargeError:
        checks.append(("oracle", True, "skipped (instance above cap)"))

    try:
        factor = bounds.expansion_factor(energy)
        checks.append(("expansion-factor", factor >= 1.0, f"factor {factor:.3f}"))
    except MrfError:
        pass

    ok = True
    for name, passed, detail in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok = ok and passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrfkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an instance")
    p.add_argument("--kind", choices=GENERATOR_KINDS, required=True)
    p.add_argument("--param", action="append", default=[], help="key=value, repeatable")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("solve", help="run inference on an instance")
    p.add_argument("instance")
    p.add_argument(
        "--method",
        choices=("expansion", "expansion-pre", "multilabel-pre", "bruteforce"),
        default="expansion",
    )
    _add_pre_flags(p)
    p.add_argument("--max-epochs", type=int, default=5, dest="max_epochs")
    p.add_argument("--reject-uphill", action="store_true", dest="reject_uphill")
    p.add_argument(
        "--keep-label-only-after-epoch1",
        action="store_true",
        dest="keep_label_only_after_epoch1",
        help="restrict later epochs to the keep-current candidate",
    )
    p.add_argument("--collect-precision", action="store_true", dest="collect_precision")
    p.add_argument("--trace", help="write time,energy trace CSV here")
    p.add_argument("--report", help="write the JSON report here (default stdout)")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("preprocess", help="run pre-processing only")
    p.add_argument("instance")
    _add_pre_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(fn=_cmd_preprocess)

    p = sub.add_parser("oracle", help="exhaustive ground-truth queries")
    p.add_argument("instance")
    p.add_argument("query", choices=("minimize", "persistent", "autarky", "win-mass", "worst-loss"))
    p.add_argument("--assign", default="", help="partial labeling, e.g. 0=1,3=0")
    p.add_argument("--node", type=int, default=0)
    p.add_argument("--label", type=int, default=0)
    p.add_argument("--q", default="uniform")
    p.add_argument("--cap", type=int, default=oracle.DEFAULT_CAP)
    p.add_argument("--max-list", type=int, default=32, dest="max_list")
    p.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("bench", help="run a manifest of instances x methods")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--baseline", help="method id to compare against")
    p.set_defaults(fn=_cmd_bench)

    p = sub.add_parser("verify", help="self-check a run against the oracle")
    p.add_argument("instance")
    _add_pre_flags(p)
    p.add_argument("--cap", type=int, default=1 << 20)
    p.set_defaults(fn=_cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (MrfError, ValueError, OSError, KeyError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
