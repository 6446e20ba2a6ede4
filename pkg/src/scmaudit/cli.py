"""Command-line front end.

Exit codes: 0 success or the checked property holds, 1 audit violation or
property failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from .errors import ScmError
from .graph import (
    ancestrally_closed,
    ci_deviation,
    d_separated,
    dag_from_scm,
    latent_pairs,
    parse_graph_text,
)
from .scm import (
    bundled_path,
    counterfactual_distribution,
    format_value,
    joint_distribution,
    load_model,
    parse_value,
)
from .selection import (
    PRESETS,
    CovariateTable,
    audit_dataset,
    deterministic_rule_witness,
    parse_audit_input,
)
from .verify import ALL_SUITES, SUITES, run_suite

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class InputError(Exception):
    pass


def _read(ref: str, suffixes: Sequence[str] = ("",)) -> str:
    """Read a file, falling back to a bundled fixture of that name."""
    path = Path(ref)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    for suffix in suffixes:
        bundled = bundled_path(ref + suffix)
        if bundled.is_file():
            return bundled.read_text(encoding="utf-8")
    raise InputError(f"no such file: {ref}")


def _is_model(ref: str) -> bool:
    return ref.endswith(".json") or (not Path(ref).exists() and bundled_path(ref + ".json").is_file())


def _emit(args, doc: dict, text_lines: list[str]):
    if args.format == "structured":
        doc = {"schema_version": SCHEMA_VERSION, "command": args.command, **doc}
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False, default=_jsonable) + "\n")
    else:
        for line in text_lines:
            sys.stdout.write(line + "\n")


def _jsonable(value: Any):
    if isinstance(value, (set, frozenset, tuple)):
        return sorted(value) if isinstance(value, (set, frozenset)) else list(value)
    return format_value(value)


def _prob(p: float) -> str:
    return repr(float(round(p, 12)))


def _parse_assignment(text: str | None, scm) -> dict:
    out: dict = {}
    if not text:
        return out
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise InputError(f"expected name=value, got {part!r}")
        name, value = (s.strip() for s in part.split("=", 1))
        if name in out:
            raise InputError(f"{name} assigned twice")
        out[name] = parse_value(value, scm.domain(name))
    return out


def _names(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


# -- subcommands ----------------------------------------------------------------------------


def cmd_validate(args) -> int:
    scm = load_model(args.model)
    doc = {
        "valid": True,
        "observed": list(scm.observed),
        "noise": list(scm.noise_names),
        "independent_noise": scm.independent_noise,
        "noise_assignments": scm.noise_assignment_count(),
        "order": [v for v in scm.order if not scm.is_noise(v)],
    }
    kind = "independent noise" if scm.independent_noise else "joint noise table"
    lines = [
        f"valid: {len(scm.observed)} observed, {len(scm.noise_names)} noise variables ({kind})",
        f"noise assignments: {scm.noise_assignment_count()}",
        f"order: {', '.join(doc['order'])}",
    ]
    _emit(args, doc, lines)
    return EXIT_OK


def cmd_query(args) -> int:
    scm = load_model(args.model)
    evidence = _parse_assignment(args.evidence, scm)
    do = _parse_assignment(args.do, scm)
    targets = _names(args.target)
    if not targets:
        raise InputError("--target needs at least one variable")
    dist = counterfactual_distribution(scm, evidence, do, targets)
    if not do:
        label = "{}"
    elif len(do) == 1:
        label = "{}(" + format_value(next(iter(do.values()))) + ")"
    else:
        label = "{}(" + ",".join(f"{k}={format_value(v)}" for k, v in do.items()) + ")"
    rows, lines = [], []
    for cell, p in dist.support():
        lhs = ",".join(f"{label.format(t)}={format_value(cell[t])}" for t in targets)
        lines.append(f"P({lhs})={_prob(p)}")
        rows.append({"cell": {t: cell[t] for t in targets}, "probability": p})
    doc = {
        "evidence": evidence,
        "do": do,
        "targets": targets,
        "distribution": rows,
    }
    _emit(args, doc, lines)
    return EXIT_OK


def _load_graph(ref: str):
    if _is_model(ref):
        scm = load_model(ref)
        return scm, dag_from_scm(scm, include_noise=True)
    g, _ = parse_graph_text(_read(ref, (".txt",)))
    return None, g


def cmd_graph(args) -> int:
    scm, g = _load_graph(args.dag)
    if args.check == "dsep":
        groups = [_names(s) for s in args.sets.split(";")]
        if len(groups) not in (2, 3):
            raise InputError("--sets for dsep is 'X;Y' or 'X;Y;Z' with comma-separated names")
        xs, ys = groups[0], groups[1]
        zs = groups[2] if len(groups) == 3 else []
        sep = d_separated(g, xs, ys, zs)
        doc = {"x": xs, "y": ys, "z": zs, "d_separated": sep}
        stmt = f"{', '.join(xs)} ⊥ {', '.join(ys)} | {{{', '.join(zs)}}}"
        lines = [f"{stmt}: {'d-separated' if sep else 'd-connected'}"]
        if scm is not None and not scm.independent_noise:
            lines.append("note: joint noise table; d-separation need not imply independence")
        elif scm is not None and all(not scm.is_noise(v) for v in xs + ys + zs):
            joint = joint_distribution(scm, list(dict.fromkeys(xs + ys + zs)))
            if len(xs) == 1 and len(ys) == 1:
                dev = ci_deviation(joint, xs[0], ys[0], zs)
                doc["ci_deviation"] = dev
                doc["ci_holds"] = dev < args.tol
                lines.append(f"exact CI deviation {dev:.6g} ({'holds' if dev < args.tol else 'fails'} at tol {args.tol:g})")
        _emit(args, doc, lines)
        return EXIT_OK if sep else EXIT_FAIL
    sensitive = _names(args.sets)
    if not sensitive:
        raise InputError("--sets for closure lists the sensitive variables")
    if scm is not None:
        g_obs = dag_from_scm(scm, include_noise=False)
        latent = latent_pairs(scm)
    else:
        g_obs = g
        latent = parse_graph_text(_read(args.dag, (".txt",)))[1]
    closed = ancestrally_closed(g_obs, sensitive, latent)
    outside = sorted({p for v in sensitive for p in g_obs.parents(v) if p not in sensitive})
    confounded = sorted(sorted(pair) for pair in latent if set(pair) & set(sensitive))
    doc = {
        "sensitive": sensitive,
        "ancestrally_closed": closed,
        "external_parents": outside,
        "latent_confounders": confounded,
    }
    lines = [f"{{{', '.join(sensitive)}}}: {'ancestrally closed' if closed else 'not ancestrally closed'}"]
    if outside:
        lines.append(f"parents outside the set: {', '.join(outside)}")
    for pair in confounded:
        lines.append(f"latent confounder: {' <-> '.join(pair)}")
    _emit(args, doc, lines)
    return EXIT_OK if closed else EXIT_FAIL


def _audit_lines(report) -> list[str]:
    lines = []
    if report.dataset:
        lines.append(f"dataset: {report.dataset}")
    for (a, b), v in report.bounds.items():
        lines.append(f"bound P(S=1|X=x,A={format_value(a)}) <= {v:.3f}  (a'={format_value(b)}; exact {v:.6g})")
    for wv in report.witnesses:
        w = wv.witness
        pattern = ", ".join(f"{k}={format_value(v)}" for k, v in w.pattern.items())
        lines.append(
            f"witness [{pattern}] A={format_value(w.sensitive_value)}: "
            f"P(S=1|x,a)={w.probability:g} vs bound {wv.bound:.3f} -> {wv.status}"
        )
    lines.append(f"verdict: {report.verdict}")
    for cond in report.to_dict()["conditions"]:
        state = {True: "asserted", False: "denied", None: "not asserted"}[cond["asserted"]]
        lines.append(f"condition {cond['id']} ({state}): {cond['description']}")
    lines.extend(f"note: {n}" for n in report.notes)
    return lines


def cmd_audit(args) -> int:
    audit = parse_audit_input(_read(args.input, (".json",)), args.preset)
    report = audit_dataset(audit, args.tol)
    _emit(args, report.to_dict(), _audit_lines(report))
    return EXIT_FAIL if report.violated else EXIT_OK


def cmd_witness(args) -> int:
    table = CovariateTable.from_csv(_read(args.csv, (".csv",)))
    witnesses = deterministic_rule_witness(table, args.rule, args.sensitive)
    doc: dict = {"rule": args.rule, "sensitive": args.sensitive, "witnesses": [w.to_dict() for w in witnesses]}
    lines = [f"{len(witnesses)} witness row(s) for rule {args.rule!r}"]
    for w in witnesses:
        pattern = ", ".join(f"{k}={v}" for k, v in w.pattern.items())
        lines.append(f"  [{pattern}] {args.sensitive}={w.sensitive_value}: P(S=1|x,a)=1")
    code = EXIT_OK
    if args.audit:
        text = _read(args.audit, (".json",))
        doc_in = json.loads(text)
        doc_in["witnesses"] = list(doc_in.get("witnesses", [])) + [w.to_dict() for w in witnesses]
        report = audit_dataset(parse_audit_input(json.dumps(doc_in), args.preset), args.tol)
        doc["audit"] = report.to_dict()
        lines += _audit_lines(report)
        code = EXIT_FAIL if report.violated else EXIT_OK
    _emit(args, doc, lines)
    return code


def cmd_verify(args) -> int:
    if args.trials < 1:
        raise InputError("--trials must be positive")
    results = run_suite(args.suite, args.trials, args.seed)
    doc = {
        "suite": args.suite,
        "trials": args.trials,
        "seed": args.seed,
        "passed": all(r.passed for r in results),
        "results": [r.to_dict() for r in results],
    }
    lines = []
    for r in results:
        stats = " ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in r.stats.items())
        lines.append(f"{r.name}: {'PASS' if r.passed else 'FAIL'} ({r.trials} trials) {stats}".rstrip())
        lines.extend(f"  {f}" for f in r.failures[:20])
        if len(r.failures) > 20:
            lines.append(f"  ... {len(r.failures) - 20} more")
    _emit(args, doc, lines)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--tol", type=float, default=1e-9, help="tie/independence tolerance (default 1e-9)")

    parser = argparse.ArgumentParser(prog="scmaudit", description="Exact discrete SCM queries and selection audits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a model file")
    p.add_argument("model", help="model file or bundled name (xor_sel, or_sel, xor_sel_dependent)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("query", parents=[common], help="counterfactual query")
    p.add_argument("--model", required=True)
    p.add_argument("--evidence", default="", help="comma-separated name=value")
    p.add_argument("--do", default="", help="comma-separated name=value")
    p.add_argument("--target", required=True, help="comma-separated variable names")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("graph", parents=[common], help="d-separation and ancestral-closure checks")
    p.add_argument("check", choices=("dsep", "closure"))
    p.add_argument("--dag", required=True, help="edge-list file (a b / a <-> b) or model file")
    p.add_argument("--sets", required=True, help="dsep: 'X;Y[;Z]'; closure: 'A[,B]'")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("audit", parents=[common], help="dataset-level selection audit")
    p.add_argument("--input", required=True, help="audit JSON or bundled name (adult_audit, german_audit, law_audit)")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("witness", parents=[common], help="probability-one witnesses from a deterministic rule")
    p.add_argument("--csv", required=True)
    p.add_argument("--rule", required=True, help="e.g. 'hours>0 and income>=100'")
    p.add_argument("--sensitive", default="sex", help="sensitive column (default: sex)")
    p.add_argument("--audit", help="also audit these witnesses against this audit input")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("verify", parents=[common], help="randomized verification suites")
    p.add_argument("--suite", choices=(*SUITES, "all"), default="all", help=f"'all' runs {', '.join(ALL_SUITES)}")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScmError, InputError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
