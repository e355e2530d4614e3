"""Command-line front door.

Every command is a thin dispatcher over the library: deterministic given
inputs, config, and seed. Exit codes: 0 success (an invalid candidate is a
scored outcome, not an error), 1 input/usage error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .agreement import AgreementError, evaluate_agreement
from .model import BundleError, TaskBundle
from .records import (
    BreakdownRecord,
    breakdown_record,
    dumps_canonical,
    fmt6,
    load_bundles,
    read_breakdown_records,
    read_candidate_sets,
    read_pairwise_records,
    write_breakdown_records,
    write_candidate_sets,
    write_ndjson,
    write_sft_records,
)
from .reward import (
    COMPONENT_GROUPS,
    COMPONENT_KEYS,
    ConfigError,
    DEFAULT_CONFIG,
    RewardConfig,
    load_config,
    report as build_report,
    score_candidate,
    score_many,
)
from .selection import CandidateSet, best_of_n, build_sft_dataset, group_advantages, rejection_filter
from .synth import (
    GeneratorSpec,
    PERTURBATION_KINDS,
    chunk_passage,
    generate,
    make_bundle,
)

CONFIG_ENV_VAR = "STAGESCORE_CONFIG"


class InputError(ValueError):
    pass


def _resolve_config(args) -> RewardConfig:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV_VAR)
    config = load_config(path) if path else DEFAULT_CONFIG
    disabled = getattr(args, "disable_component", None) or []
    if disabled:
        unknown = set(disabled) - set(COMPONENT_GROUPS)
        if unknown:
            raise InputError(
                f"unknown component(s) {sorted(unknown)}; choose from {sorted(COMPONENT_GROUPS)}"
            )
        config = config.disable(*disabled)
    return config


def _load_bundles(args) -> dict[str, TaskBundle]:
    if not getattr(args, "bundles", None):
        raise InputError("--bundles is required")
    return load_bundles(args.bundles)


def _single_bundle(args) -> TaskBundle:
    bundles = _load_bundles(args)
    bundle_id = getattr(args, "bundle_id", None)
    if bundle_id:
        if bundle_id not in bundles:
            raise InputError(f"bundle {bundle_id!r} not found in {args.bundles}")
        return bundles[bundle_id]
    if len(bundles) != 1:
        raise InputError(
            f"{args.bundles} holds {len(bundles)} bundles; pick one with --bundle-id"
        )
    return next(iter(bundles.values()))


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _candidate_sets_for(args, bundles: dict[str, TaskBundle]) -> list[CandidateSet]:
    if not getattr(args, "candidates", None):
        raise InputError("--candidates is required")
    sets = read_candidate_sets(args.candidates)
    for candidate_set in sets:
        if candidate_set.bundle_id not in bundles:
            raise InputError(
                f"candidate set references unknown bundle {candidate_set.bundle_id!r}"
            )
    return sets


def _breakdown_text(bundle_id: str, breakdown) -> str:
    lines = [
        f"engine stagescore {__version__}",
        f"bundle {bundle_id}",
        f"valid {'true' if breakdown.valid else 'false'}",
    ]
    if breakdown.failure is not None:
        lines.append(f"failure {breakdown.failure.kind.value}: {breakdown.failure.detail}")
    for key in COMPONENT_KEYS:
        lines.append(f"{key} {breakdown.normalized[key]:.6f}")
    lines.append(f"macro_avg {breakdown.macro_avg:.6f}")
    lines.append(f"r {breakdown.r:.6f}")
    lines.append(f"config_id {breakdown.config_id}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands


def cmd_score(args) -> int:
    config = _resolve_config(args)
    bundle = _single_bundle(args)
    raw = _read_text(args.candidates)
    breakdown = score_candidate(raw, bundle, config)
    if args.format == "records":
        record = breakdown_record(bundle.bundle_id, 0, breakdown, system=args.system)
        _emit(args, dumps_canonical(record.to_mapping()) + "\n")
    else:
        _emit(args, _breakdown_text(bundle.bundle_id, breakdown))
    return 0


def cmd_batch_score(args) -> int:
    config = _resolve_config(args)
    bundles = _load_bundles(args)
    sets = _candidate_sets_for(args, bundles)
    records: list[BreakdownRecord] = []
    for candidate_set in sets:
        bundle = bundles[candidate_set.bundle_id]
        breakdowns = score_many(list(candidate_set.candidates), bundle, config,
                                workers=args.workers)
        for i, breakdown in enumerate(breakdowns):
            records.append(breakdown_record(candidate_set.bundle_id, i, breakdown, system=args.system))
    if args.out:
        write_breakdown_records(args.out, records)
    else:
        for record in records:
            sys.stdout.write(dumps_canonical(record.to_mapping()) + "\n")
    return 0


def cmd_rank(args) -> int:
    config = _resolve_config(args)
    bundles = _load_bundles(args)
    sets = _candidate_sets_for(args, bundles)
    records = []
    for candidate_set in sets:
        pool = candidate_set
        if args.n is not None:
            pool = CandidateSet(candidate_set.bundle_id, candidate_set.candidates[: args.n])
        index, breakdown = best_of_n(pool, bundles[candidate_set.bundle_id], config)
        records.append(breakdown_record(candidate_set.bundle_id, index, breakdown, system=args.system))
    if args.out:
        write_breakdown_records(args.out, records)
    else:
        for record in records:
            sys.stdout.write(dumps_canonical(record.to_mapping()) + "\n")
    return 0


def cmd_filter(args) -> int:
    config = _resolve_config(args)
    bundles = _load_bundles(args)
    sets = _candidate_sets_for(args, bundles)
    threshold = args.threshold if args.threshold is not None else config.reject_threshold
    records = []
    for candidate_set in sets:
        survivors = rejection_filter(candidate_set, bundles[candidate_set.bundle_id], threshold, config)
        for index, breakdown in survivors:
            records.append(breakdown_record(candidate_set.bundle_id, index, breakdown, system=args.system))
    if args.out:
        write_breakdown_records(args.out, records)
    else:
        for record in records:
            sys.stdout.write(dumps_canonical(record.to_mapping()) + "\n")
    return 0


def cmd_build_sft(args) -> int:
    config = _resolve_config(args)
    bundles = _load_bundles(args)
    sets = _candidate_sets_for(args, bundles)
    threshold = args.threshold if args.threshold is not None else config.reject_threshold
    records, summary = build_sft_dataset(bundles, sets, config, n_use=args.n, threshold=threshold)
    if not args.out:
        raise InputError("--out is required for build-sft")
    write_sft_records(args.out, records)
    sys.stdout.write(dumps_canonical(summary) + "\n")
    return 0


def cmd_advantages(args) -> int:
    config = _resolve_config(args)
    bundles = _load_bundles(args)
    sets = _candidate_sets_for(args, bundles)
    rows = []
    for candidate_set in sets:
        bundle = bundles[candidate_set.bundle_id]
        rewards = [score_candidate(raw, bundle, config).r for raw in candidate_set.candidates]
        vector = group_advantages(rewards)
        rows.append(
            {
                "bundle_id": candidate_set.bundle_id,
                "rewards": [fmt6(r) for r in vector.rewards],
                "advantages": [fmt6(a) for a in vector.advantages],
                "epsilon": vector.epsilon,
                "config_id": config.config_id,
            }
        )
    if args.out:
        write_ndjson(args.out, rows)
    else:
        for row in rows:
            sys.stdout.write(dumps_canonical(row) + "\n")
    return 0


def cmd_report(args) -> int:
    entries = []
    for path in args.records:
        default_system = os.path.splitext(os.path.basename(path))[0]
        for record in read_breakdown_records(path):
            entries.append((record.system or default_system, record.components, record.valid))
    if not entries:
        raise InputError("no breakdown records found")
    table = build_report(entries)
    if args.format == "records":
        payload = {"engine_version": __version__, "rows": table.to_records()}
        _emit(args, dumps_canonical(payload) + "\n")
    else:
        _emit(args, table.render_text())
    return 0


def cmd_agree(args) -> int:
    records = read_pairwise_records(args.pairs)
    try:
        result = evaluate_agreement(records)
    except AgreementError as exc:
        raise InputError(str(exc)) from None
    payload = {"engine_version": __version__}
    payload.update(result.to_mapping())
    if args.format == "text":
        lines = [f"engine stagescore {__version__}"]
        for row in payload["systems"]:
            lines.append(
                f"{row['system']:>20}  strength {row['strength']:.6f}  elo {row['elo']:.6f}  "
                f"score {row['evaluator_score']:.6f}  winrate {row['human_winrate']:.6f}"
            )
        for key in ("spearman_rho", "pearson_r", "rank_accuracy", "cohens_kappa"):
            value = payload[key]
            lines.append(f"{key} {value:.6f}" if value is not None else f"{key} n/a")
        calibration = payload["calibration"]
        if calibration is not None:
            lines.append(
                "calibration intercept {intercept:.6f} slope {slope:.6f} "
                "auc {auc:.6f} brier {brier:.6f}".format(**calibration)
            )
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, dumps_canonical(payload) + "\n")
    return 0


def cmd_synth(args) -> int:
    config = _resolve_config(args)
    bundles: dict[str, TaskBundle] = {}
    if args.make_bundles:
        if not args.bundles_out:
            raise InputError("--bundles-out is required with --make-bundles")
        os.makedirs(args.bundles_out, exist_ok=True)
        from .model import bundle_to_mapping

        for i in range(args.make_bundles):
            bundle = make_bundle(args.seed + i)
            bundles[bundle.bundle_id] = bundle
            path = os.path.join(args.bundles_out, f"{bundle.bundle_id}.json")
            with open(path, "w", encoding="utf-8") as handle:
                json.dump(bundle_to_mapping(bundle), handle, ensure_ascii=False, indent=2)
                handle.write("\n")
    else:
        bundles = _load_bundles(args)

    if args.out:
        sets = []
        for offset, bundle in enumerate(bundles.values()):
            candidates = []
            for i in range(args.n or 1):
                spec = GeneratorSpec(
                    kind=args.kind,
                    seed=args.seed + offset * 100_003 + i,
                    p_correct=args.p_correct,
                    perturbation_kinds=tuple(args.perturbation or PERTURBATION_KINDS),
                )
                candidates.append(generate(bundle, spec, config))
            sets.append(CandidateSet(bundle_id=bundle.bundle_id, candidates=tuple(candidates)))
        write_candidate_sets(args.out, sets)
    elif not args.make_bundles:
        raise InputError("nothing to do: pass --out and/or --make-bundles")
    return 0


def cmd_chunk(args) -> int:
    text = _read_text(args.passage)
    try:
        windows = chunk_passage(text, args.n or 4096)
    except BundleError as exc:
        raise InputError(str(exc)) from None
    rows = [
        {"index": i, "units": len(window.split()), "text": window}
        for i, window in enumerate(windows)
    ]
    if args.out:
        write_ndjson(args.out, rows)
    else:
        for row in rows:
            sys.stdout.write(dumps_canonical(row) + "\n")
    return 0


def cmd_serve(args) -> int:
    config = _resolve_config(args)
    from .service.app import run_server

    run_server(
        bundle_dir=args.bundles,
        config=config,
        host=args.host,
        port=args.port,
        max_candidates=args.max_candidates,
    )
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_common(parser: argparse.ArgumentParser, *, bundles=False, candidates=False, out=True):
    parser.add_argument("--config", help=f"engine config JSON (default ${CONFIG_ENV_VAR})")
    parser.add_argument(
        "--disable-component",
        action="append",
        metavar="NAME",
        help=f"disable a reward component (repeatable): {', '.join(sorted(COMPONENT_GROUPS))}",
    )
    if bundles:
        parser.add_argument("--bundles", required=False, help="bundle file or directory")
    if candidates:
        parser.add_argument("--candidates", required=True, help="input candidate file")
    if out:
        parser.add_argument("--out", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stagescore",
        description="Deterministic stage-layout scoring engine and tooling.",
    )
    parser.add_argument("--version", action="version", version=f"stagescore {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score one candidate against one bundle")
    _add_common(p, bundles=True, candidates=True)
    p.add_argument("--bundle-id", help="select a bundle when --bundles holds several")
    p.add_argument("--system", help="system label stamped on record output")
    p.add_argument("--format", choices=("text", "records"), default="text")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("batch-score", help="score candidate sets to breakdown records")
    _add_common(p, bundles=True, candidates=True)
    p.add_argument("--system", help="system label stamped on records")
    p.add_argument("--workers", type=int, default=1,
                   help="scoring processes per candidate set (output order is input order)")
    p.set_defaults(func=cmd_batch_score)

    p = sub.add_parser("rank", help="emit the Best-of-N winner per bundle")
    _add_common(p, bundles=True, candidates=True)
    p.add_argument("--n", type=int, help="use only the first N candidates per bundle")
    p.add_argument("--system", help="system label stamped on records")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("filter", help="keep candidates at or above the threshold")
    _add_common(p, bundles=True, candidates=True)
    p.add_argument("--threshold", type=float, help="reward threshold (default from config)")
    p.add_argument("--system", help="system label stamped on records")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("build-sft", help="best surviving candidate per bundle as SFT records")
    _add_common(p, bundles=True, candidates=True)
    p.add_argument("--n", type=int, help="use only the first N candidates per bundle")
    p.add_argument("--threshold", type=float, help="reward threshold (default from config)")
    p.set_defaults(func=cmd_build_sft)

    p = sub.add_parser("advantages", help="group-normalized advantages per candidate set")
    _add_common(p, bundles=True, candidates=True)
    p.set_defaults(func=cmd_advantages)

    p = sub.add_parser("report", help="leaderboard-style table from breakdown records")
    p.add_argument("records", nargs="+", help="breakdown record files (one system per file "
                   "unless records carry a system field)")
    p.add_argument("--format", choices=("text", "records"), default="text")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("agree", help="evaluator-validation statistics from pairwise records")
    p.add_argument("pairs", help="pairwise preference record file")
    p.add_argument("--format", choices=("text", "records"), default="text")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("synth", help="generate synthetic bundles and candidate sets")
    _add_common(p, bundles=True, candidates=False)
    p.add_argument("--make-bundles", type=int, metavar="COUNT", help="generate COUNT bundles")
    p.add_argument("--bundles-out", help="directory for generated bundle files")
    p.add_argument("--kind", choices=("random", "greedy_oracle", "perturbed"), default="random")
    p.add_argument("--n", type=int, help="candidates per bundle")
    p.add_argument("--p-correct", type=float, default=0.7, dest="p_correct")
    p.add_argument("--perturbation", action="append", choices=PERTURBATION_KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("chunk", help="split a marked passage into unit-capped windows")
    p.add_argument("passage", help="passage text file")
    p.add_argument("--n", type=int, default=4096, help="max units per window")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_chunk)

    p = sub.add_parser("serve", help="run the batch reward service")
    p.add_argument("--bundles", required=True, help="bundle file or directory")
    p.add_argument("--config", help=f"engine config JSON (default ${CONFIG_ENV_VAR})")
    p.add_argument("--disable-component", action="append", metavar="NAME")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8970)
    p.add_argument("--max-candidates", type=int, default=1024)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, BundleError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc.filename or exc} not found", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # internal error
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
