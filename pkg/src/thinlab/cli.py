"""Command-line front end.

Exit status: 0 for a decided verdict, 2 for an undecided one, 1 for errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import (
    FORMAT_VERSION,
    DEFAULT_GAMMA_GRID,
    ClassRelation,
    IndexSetPlan,
    classify_sequence,
    compare_weight_classes,
    infer_rho,
    weight_regime,
)
from .constructions import (
    ConstructionError,
    build_index_set_and_counts,
    example_profile,
    full_circle_profile,
    full_circle_sequence,
    point_budget,
    small_rho_counterexample,
    spaced_circle_sequence,
)
from .geometry import CountProfile, DomainError, blaschke_sum, build_profile, separation_constant
from .io import (
    FormatError,
    load_sequence,
    parse_weight,
    parse_witness,
    profile_from_csv,
    profile_rows,
    profile_to_csv,
    sequence_to_json,
    write_json,
)
from .series import DEFAULT_HORIZON, Scale, criterion_exponential_sum
from .weights import WeightError
from .witnesses import blaschke_filter_transform, summatory

EXIT_DECIDED, EXIT_ERROR, EXIT_UNDECIDED = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def _level_range(text: str) -> list[int]:
    """``a..b`` inclusive, or a comma list."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--levels: expected 'a..b' or a comma list of integers, got {text!r}") from None


def _gamma_grid(text: str) -> tuple[float, ...]:
    try:
        g = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"--gamma: expected comma-separated numbers, got {text!r}") from None
    if not g or any(not x > 0 for x in g):
        raise UsageError("--gamma: values must be positive")
    return g


def _positive_int(name):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be at least 1")
        return v

    return conv


# ---------------------------------------------------------------------------
# output


def _plotdata(blocks) -> str:
    """Two-column ``x y`` blocks separated by blank lines, titled by comments."""
    out = []
    for title, xs, ys in blocks:
        out.append(f"# {title}")
        out.extend(f"{x!r} {float(y)!r}" for x, y in zip(xs, ys))
        out.append("")
    return "\n".join(out) + "\n"


def _emit(args, payload: dict, csv_text: str | None = None, plot_blocks=None) -> None:
    fmt = args.format
    path = args.output
    if fmt == "json":
        payload = {"format_version": FORMAT_VERSION, **payload}
        write_json(path, payload)
    elif fmt == "csv":
        if csv_text is None:
            raise UsageError("this command has no CSV form; use --format json")
        _write_text(path, csv_text)
    else:
        if plot_blocks is None:
            raise UsageError("this command has no plot data; use --format json")
        _write_text(path, f"# format_version {FORMAT_VERSION}\n" + _plotdata(plot_blocks))
    if path not in (None, "-"):
        _write_sidecar(path)


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write {path}: {exc.strerror}") from exc


def _write_sidecar(path):
    Path(str(path) + ".version").write_text(f"thinlab {__version__}\nformat_version {FORMAT_VERSION}\n")


def _trajectory_block(title, verdict):
    tr = verdict.trajectory
    if tr is None or len(tr.index) == 0:
        return (title, [], [])
    return (title, [int(i) for i in tr.index], list(tr.sums))


# ---------------------------------------------------------------------------
# commands


def cmd_weights_classify(args):
    theta = parse_weight(args.theta)
    v = weight_regime(theta, infer_rho(theta), args.horizon)
    blocks = []
    if v.thin is not None:
        blocks.append(_trajectory_block("partial sums of 1/theta(2^-m)", v.thin))
    if v.thick is not None:
        blocks.append(_trajectory_block("partial sums of 2^m rho(2^-m)", v.thick))
    _emit(args, v.to_json(), plot_blocks=blocks)
    return EXIT_DECIDED if v.decided else EXIT_UNDECIDED


def cmd_weights_compare(args):
    t1, t2 = parse_weight(args.theta1), parse_weight(args.theta2)
    r = compare_weight_classes(t1, t2, args.horizon)
    _emit(args, r.to_json())
    return EXIT_DECIDED if r.relation is not ClassRelation.UNDECIDED else EXIT_UNDECIDED


def _emit_sequence(args, seq, profile, extra=None):
    if args.profile_csv:
        _write_text(args.profile_csv, profile_to_csv(profile))
    if args.format == "json":
        payload = sequence_to_json(seq)
        if extra:
            payload = {**payload, "construction": extra}
        write_json(args.output, payload)
        if args.output not in (None, "-"):
            _write_sidecar(args.output)
    else:
        _emit(args, {}, csv_text=profile_to_csv(profile), plot_blocks=[_profile_block(profile)])


def _profile_block(profile):
    rows = profile_rows(profile)
    return ("per-annulus density l_m", [r[0] for r in rows], [float(r[3]) for r in rows])


def cmd_generate(args):
    budget = point_budget()
    kind = args.kind
    if kind == "full-circles":
        if not args.levels:
            raise UsageError("full-circles needs --levels")
        levels = _level_range(args.levels)
        c = full_circle_sequence(levels, args.materialize, budget)
        _emit_sequence(args, c.sequence, c.profile, {"kind": kind, "levels": levels, "profile_only": c.profile_only_levels})
    elif kind == "spaced-circles":
        if args.theta2:
            theta1 = parse_weight(args.theta1) if args.theta1 else parse_weight("logpow:1,1,0")
            plan = IndexSetPlan(theta1, parse_weight(args.theta2), None, args.m_max)
            triples = plan.level_triples(args.materialize)
        elif args.level:
            triples = []
            for t in args.level:
                try:
                    m, n, d = t.split(",")
                    triples.append((int(m), int(n), float(d)))
                except ValueError:
                    raise UsageError(f"--level: expected 'm,N,d', got {t!r}") from None
        else:
            raise UsageError("spaced-circles needs --level m,N,d (repeatable) or --theta2")
        seq = spaced_circle_sequence(triples, args.cor52, budget)
        _emit_sequence(args, seq, build_profile(seq).to_counts(), {"kind": kind, "levels": [list(t) for t in triples]})
    elif kind == "example-profile":
        if not args.theta:
            raise UsageError("example-profile needs --theta")
        theta = parse_weight(args.theta)
        p = args.p if args.p == "log" else float(args.p)
        rng = _level_range(args.levels) if args.levels else [1, args.horizon]
        prof = example_profile(theta, p, (rng[0], rng[-1]))
        if args.format == "json":
            _emit(args, {"kind": kind, "theta": str(theta), "p": args.p, "rows": [list(r) for r in profile_rows(prof)]})
        else:
            _emit(args, {}, csv_text=profile_to_csv(prof), plot_blocks=[_profile_block(prof)])
    elif kind == "counterexample":
        if not args.theta:
            raise UsageError("counterexample needs --theta")
        rho = infer_rho(parse_weight(args.theta))
        ce = small_rho_counterexample(rho, args.j_max, args.horizon, args.materialize, budget)
        extra = {
            "kind": kind,
            "levels": [list(x) for x in ce.levels],
            "rho_over_t_sum": ce.rho_over_t_sum,
            "rho_over_t_tail_bound": ce.rho_over_t_tail_bound,
            "blaschke_sum": ce.blaschke_sum,
        }
        _emit_sequence(args, ce.sequence, ce.profile, extra)
    elif kind == "index-set":
        if not args.theta2:
            raise UsageError("index-set needs --theta2")
        iset = build_index_set_and_counts(parse_weight(args.theta2), args.m_max)
        _emit(args, {**iset.to_json(), "report": iset.report}, plot_blocks=[
            ("N_m 2^-m on L", list(iset.L), [iset.density(m) for m in iset.L])
        ])
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown generator {kind!r}")
    return EXIT_DECIDED


def cmd_analyze(args):
    seq = load_sequence(args.file)
    prof = build_profile(seq).to_counts()
    sep = separation_constant(seq)
    bs = blaschke_sum(seq)
    payload = {
        "points": len(seq),
        "profile": [
            {"m": r[0], "N_m": int(r[1]), "dbar_m": None if r[2] == "" else float(r[2]), "l_m": float(r[3])}
            for r in profile_rows(prof)
        ],
        "separation": {
            "value": sep.value,
            "pair": None if sep.pair is None else list(sep.pair),
            "claimed": sep.claimed,
            "claim_holds": sep.claim_holds,
        },
        "blaschke_sum": bs.total,
        "blaschke_per_level": {str(m): v for m, v in sorted(bs.per_level.items())},
    }
    _emit(args, payload, csv_text=profile_to_csv(prof), plot_blocks=[_profile_block(prof)])
    return EXIT_DECIDED


def _sequence_source(args):
    given = [x for x in (args.file, args.profile, args.generator) if x]
    if len(given) != 1:
        raise UsageError("give exactly one of FILE, --profile CSV or --generator")
    if args.file:
        return load_sequence(args.file)
    if args.profile:
        return profile_from_csv(Path(args.profile).read_text())
    kind, _, rng = args.generator.partition(":")
    if kind == "full-circles":
        levels = _level_range(rng or f"1..{args.horizon}")
        return full_circle_profile(levels[0], levels[-1])
    raise UsageError(f"--generator: unknown kind {kind!r} (full-circles:a..b)")


def cmd_classify(args):
    theta = parse_weight(args.theta)
    src = _sequence_source(args)
    witnesses = [parse_witness(w) for w in args.witness or ()]
    complete = {"yes": True, "no": False, "auto": None}[args.complete]
    v = classify_sequence(src, theta, None, _gamma_grid(args.gamma), witnesses, args.horizon, complete)
    rows = v.evidence.get("exponential_sums", {}).get("prop2.3a", {}).get("per_gamma", [])
    csv_text = "gamma,decision,tier,partial_sum\n" + "".join(
        f"{r['gamma']!r},{r['decision']},{r['tier']},{r['partial_sum']!r}\n" for r in rows
    )
    _emit(args, v.to_json(), csv_text=csv_text)
    return EXIT_DECIDED if v.decided else EXIT_UNDECIDED


def cmd_witness_verify(args):
    seq = load_sequence(args.seq)
    f = parse_witness(args.witness)
    theta = parse_weight(args.theta)
    rho = infer_rho(theta)
    rep = summatory(f, rho, seq)
    f1, cert = blaschke_filter_transform(f, theta, seq)
    payload = {
        "witness": args.witness,
        "theta": str(theta),
        "summatory": rep.as_dict(),
        "filter": {
            "remainder": cert.remainder.tolist(),
            "remainder_blaschke_sum": cert.remainder_blaschke_sum,
            "all_ok": cert.all_ok,
            "certificate": cert.to_json(),
        },
    }
    k = np.arange(1, len(rep.running) + 1)
    _emit(args, payload, plot_blocks=[("running summatory sum", k.tolist(), rep.running.tolist())])
    return EXIT_DECIDED if cert.all_ok else EXIT_UNDECIDED


def cmd_demo(args):
    theta1, theta2 = parse_weight(args.theta1), parse_weight(args.theta2)
    cmp = compare_weight_classes(theta1, theta2, args.horizon, preview_levels=args.m_max)
    payload = {"comparison": cmp.to_json()}
    blocks = []
    if not isinstance(cmp.plan, IndexSetPlan):
        payload["note"] = "no index-set witness plan for this pair"
        _emit(args, payload)
        return EXIT_UNDECIDED
    plan = cmp.plan
    iset = plan.index_set(args.m_max)
    seq = plan.materialize(args.materialize, point_budget())
    iset_profile = CountProfile.from_counts({m: iset.counts[m] for m in iset.L})
    prof_full = build_profile(seq)
    rho1, rho2 = infer_rho(plan.larger), infer_rho(plan.smaller)
    s2 = summatory(parse_witness("const:1,0"), rho2, seq)
    crit = {}
    for name, rho in (("larger", rho1), ("smaller", rho2)):
        per = []
        for g in DEFAULT_GAMMA_GRID:
            v = criterion_exponential_sum(iset_profile, rho, g, Scale.DYADIC, args.m_max)
            per.append({"gamma": g, "decision": v.decision.value, "tier": v.tier.value, "partial_sum": v.partial_sum})
            if g == DEFAULT_GAMMA_GRID[0]:
                blocks.append(_trajectory_block(f"exponential sum on L, {name} weight, gamma={g:g}", v))
        crit[name] = per
    payload.update(
        index_set={"L": iset.L, "blocks": len(iset.blocks), "report": iset.report},
        sequence={"points": len(seq), "levels": sorted(prof_full.counts())},
        summatory_smaller_weight=s2.as_dict(),
        exponential_sums=crit,
    )
    _emit(args, payload, plot_blocks=blocks)
    return EXIT_DECIDED


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", default=None, help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv", "plotdata"), default="json")
    common.add_argument("--horizon", type=_positive_int("--horizon"), default=DEFAULT_HORIZON)

    p = argparse.ArgumentParser(prog="thinlab", description="Thin and thick sequences in the unit disk.")
    p.add_argument("--version", action="version", version=f"thinlab {__version__}")
    sub = p.add_subparsers(dest="group", required=True)

    w = sub.add_parser("weights", help="weight regimes and class comparisons").add_subparsers(dest="cmd", required=True)
    c = w.add_parser("classify", parents=[common], help="which sequences exist for a weight")
    c.add_argument("--theta", required=True)
    c.set_defaults(func=cmd_weights_classify)
    c = w.add_parser("compare", parents=[common], help="compare the classes of two weights")
    c.add_argument("--theta1", required=True)
    c.add_argument("--theta2", required=True)
    c.set_defaults(func=cmd_weights_compare)

    s = sub.add_parser("seq", help="sequences").add_subparsers(dest="cmd", required=True)
    g = s.add_parser("generate", parents=[common], help="build a sequence or profile")
    g.add_argument("kind", choices=("full-circles", "spaced-circles", "example-profile", "counterexample", "index-set"))
    g.add_argument("--levels", help="a..b or a comma list")
    g.add_argument("--level", action="append", help="m,N,d for spaced circles (repeatable)")
    g.add_argument("--theta")
    g.add_argument("--theta1")
    g.add_argument("--theta2")
    g.add_argument("--p", default="log", help="example profile numerator: 'log' or a positive number")
    g.add_argument("--j-max", type=_positive_int("--j-max"), default=8)
    g.add_argument("--m-max", type=_positive_int("--m-max"), default=256)
    g.add_argument("--materialize", type=int, default=20, help="highest level whose points are written")
    g.add_argument("--cor52", action="store_true", help="require 2^-m <= d_m <= 1")
    g.add_argument("--profile-csv", help="also write the profile CSV here")
    g.set_defaults(func=cmd_generate)
    a = s.add_parser("analyze", parents=[common], help="profile, separation and Blaschke sum of a sequence file")
    a.add_argument("file")
    a.set_defaults(func=cmd_analyze)
    k = s.add_parser("classify", parents=[common], help="thin witness or thick indication")
    k.add_argument("file", nargs="?")
    k.add_argument("--profile", help="profile CSV instead of a sequence file")
    k.add_argument("--generator", help="full-circles:a..b")
    k.add_argument("--theta", required=True)
    k.add_argument("--gamma", default=",".join(f"{g:g}" for g in DEFAULT_GAMMA_GRID))
    k.add_argument("--witness", action="append", help="witness spec (repeatable)")
    k.add_argument("--complete", choices=("auto", "yes", "no"), default="auto")
    k.set_defaults(func=cmd_classify)

    wi = sub.add_parser("witness", help="witness checks").add_subparsers(dest="cmd", required=True)
    v = wi.add_parser("verify", parents=[common], help="summatory sum and filter certificate")
    v.add_argument("--seq", required=True)
    v.add_argument("--witness", required=True)
    v.add_argument("--theta", required=True)
    v.set_defaults(func=cmd_witness_verify)

    d = sub.add_parser("demo", help="end-to-end pipelines").add_subparsers(dest="cmd", required=True)
    t = d.add_parser("thm-equiv", parents=[common], help="index set, spaced circles and both criteria")
    t.add_argument("--theta1", default="logpow:1,1,0")
    t.add_argument("--theta2", default="const:1")
    t.add_argument("--m-max", type=_positive_int("--m-max"), default=256)
    t.add_argument("--materialize", type=int, default=16)
    t.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_DECIDED
    try:
        return args.func(args)
    except (UsageError, FormatError, WeightError, ConstructionError, DomainError, ValueError, OSError) as exc:
        print(f"thinlab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
