"""Command line scenario runner.

Exit codes: 0 certified / all checks pass, 2 inconclusive or a failed
check, 1 error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import constructions as C
from .derivation_calculus import BadParams, OreParams
from .field_tower import QT, QTY, T, Y, TowerElem
from .freeness_certifier import FreenessReport, certify_freeness
from .ncexpr import (
    InvolutionSpec,
    ParseError,
    Scalar,
    X,
    expr_equal,
    has_x,
    parse,
    to_string,
)
from .skew_series import ContextError, Derivation, Endo, SkewContext

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


class ConfigError(ValueError):
    pass


def _default_jobs() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


# -- reports -----------------------------------------------------------------


def report_text(doc: dict) -> str:
    lines = [f"scenario: {doc['scenario']}"]
    for i, g in enumerate(doc["generators"], 1):
        lines.append(f"generator g{i}: {g}")
    sym = doc["symmetricHolds"]
    lines.append(f"symmetry checked: {str(doc['symmetricChecked']).lower()}"
                 f" holds: {'null' if sym is None else str(sym).lower()}")
    for c in doc["hypothesisChecks"]:
        bound = "" if c["bound"] is None else f" bound={c['bound']}"
        lines.append(f"check [{c['mode']}{bound}] {c['name']}: {'pass' if c['pass'] else 'FAIL'}")
    lines.append(f"max word length: {doc['maxWordLength']}")
    lines.append(f"truncation order: {doc['truncationOrder']}")
    lines.append(f"words: {doc['wordCount']}  rank: {doc['rank']}")
    lines.append(f"matrix: {doc['matrixDims'][0]} x {doc['matrixDims'][1]}")
    lines.append(f"status: {doc['status']}")
    for key in ("dependentWords", "mismatches"):
        if doc.get(key):
            lines.append(f"{key}: {', '.join(map(str, doc[key]))}")
    lines.append(f"elapsed ms: {doc['elapsedMs']}")
    return "\n".join(lines)


def emit(doc: dict, fmt: str) -> None:
    if fmt == "text":
        print(report_text(doc))
    else:
        print(json.dumps(doc, indent=2))


def _status_code(doc: dict) -> int:
    """0 only for a certified run whose symmetry and hypothesis checks all pass."""
    ok = doc["status"] == "certified"
    ok = ok and doc["symmetricHolds"] is not False
    ok = ok and all(c["pass"] for c in doc["hypothesisChecks"])
    return EXIT_OK if ok else EXIT_INCONCLUSIVE


def _cert_doc(rep: FreenessReport) -> dict:
    doc = rep.to_json()
    if rep.dependent_words:
        doc["dependentWords"] = rep.dependent_words
    return doc


# -- config --------------------------------------------------------------------


def _scalar_expr(text: str, what: str) -> TowerElem:
    try:
        u = parse(str(text))
    except ParseError as exc:
        raise ConfigError(f"{what}: {exc}") from None
    if not isinstance(u, Scalar):
        raise ConfigError(f"{what} must not involve X")
    return u.value


def scenario_from_config(cfg: dict) -> C.Scenario:
    """Build and validate a custom scenario; raises ConfigError."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    level = cfg.get("level", QT)
    if level not in (QT, QTY):
        raise ConfigError(f"level must be {QT!r} or {QTY!r}")
    sig = cfg.get("sigma", {})
    sig_inv = cfg.get("sigmaInverse", {})
    dl = cfg.get("delta", {})
    try:
        ctx = SkewContext(
            level,
            sigma=Endo(_scalar_expr(sig.get("t", "t"), "sigma(t)"), _scalar_expr(sig.get("Y", "Y"), "sigma(Y)")),
            sigma_inv=Endo(_scalar_expr(sig_inv.get("t", "t"), "sigmaInverse(t)"),
                           _scalar_expr(sig_inv.get("Y", "Y"), "sigmaInverse(Y)")),
            delta=Derivation(_scalar_expr(dl.get("t", "0"), "delta(t)"), _scalar_expr(dl.get("Y", "0"), "delta(Y)")),
            order=int(cfg.get("order", 16)),
        )
        ctx.check()
    except ContextError as exc:
        raise ConfigError(str(exc)) from None
    params = cfg.get("params", [0, 1, 1, 0])
    try:
        params = OreParams(*(Fraction(str(p)) for p in params))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from None
    gens_text = cfg.get("generators")
    if not gens_text:
        raise ConfigError("generators must be a nonempty list of expressions")
    gens = []
    for i, g in enumerate(gens_text):
        try:
            gens.append(parse(str(g)))
        except ParseError as exc:
            raise ConfigError(f"generator {i + 1}: {exc}") from None
    for g in gens:
        if level == QT and "Y" in to_string(g):
            raise ConfigError("generators use Y but the level is Qt")
    inv = None
    if cfg.get("involution"):
        spec = cfg["involution"]
        try:
            x_img = parse(str(spec["X"]))
            y_img = parse(str(spec["Y"])) if spec.get("Y") is not None else None
        except (KeyError, ParseError) as exc:
            raise ConfigError(f"involution: {exc}") from None
        t_img = str(spec.get("t", "t")).replace(" ", "")
        if t_img not in ("t", "t^-1", "1/t"):
            raise ConfigError("involution t image must be t or t^-1")
        inv = InvolutionSpec("custom", x_img, y_img, t_img != "t")
        if not inv.validate(ctx.with_order(min(ctx.order, 8))):
            raise ConfigError("involution is not of order 2 on the generators")
    plan = []
    for h in cfg.get("hypotheses", []):
        try:
            alphas = tuple(_scalar_expr(a, "hypothesis alpha") for a in h["alphas"])
            plan.append(C.PlanItem(h.get("label", "alphas"), h.get("kind", "theorem"), alphas,
                                   h.get("form", "family"), h.get("kernel", "Q" if level == QT else "Qt")))
        except KeyError as exc:
            raise ConfigError(f"hypothesis entry lacks {exc}") from None
    return C.Scenario(cfg.get("name", "custom"), ctx, params, gens, inv, inv is not None, plan,
                      default_len=int(cfg.get("maxLen", 3)), default_order=ctx.order)


# -- commands ------------------------------------------------------------------


def _build_named(name: str, args) -> C.Scenario:
    name = name.lower()
    if name == "weyl-ml":
        return C.scenario_weyl_ml()
    if name == "weyl-symmetric":
        return C.scenario_weyl_symmetric()
    if name.startswith("heisenberg"):
        kind = name.split("-", 1)[1] if "-" in name else getattr(args, "type", "I")
        return C.scenario_heisenberg(kind.upper(), getattr(args, "p", 1), getattr(args, "q", 1))
    if name.startswith("prop51"):
        case = name.split("-", 1)[1] if "-" in name else getattr(args, "case", "ii")
        return _prop51(case, args)
    raise ConfigError(f"unknown scenario {name!r}")


def _prop51(case, args) -> C.Scenario:
    alpha = None
    if getattr(args, "alpha", None):
        alpha = _scalar_expr(args.alpha, "alpha")
    m = getattr(args, "m", None)
    if m is None:
        m = 3 if case == "ii" else 2
    return C.scenario_prop51(case, m=m, lam=Fraction(str(getattr(args, "lam", "2") or "2")),
                             b=Fraction(str(getattr(args, "b", "1") or "1")), alpha=alpha)


def _certify(sc: C.Scenario, args) -> dict:
    rep = certify_freeness(sc, args.max_len, args.order, jobs=args.jobs, height_bound=args.height_bound,
                           strategy=args.strategy)
    return _cert_doc(rep)


def cmd_scenario(args) -> dict:
    if args.command == "weyl-ml":
        sc = C.scenario_weyl_ml()
    elif args.command == "weyl-symmetric":
        sc = C.scenario_weyl_symmetric()
    elif args.command == "heisenberg":
        sc = C.scenario_heisenberg(args.type, args.p, args.q)
    else:
        sc = _prop51(args.case, args)
    return _certify(sc, args)


def cmd_custom(args) -> dict:
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    sc = scenario_from_config(cfg)
    if args.max_len is None:
        args.max_len = sc.default_len
    if args.order is None:
        args.order = sc.default_order
    if args.height_bound is None:
        args.height_bound = int(cfg.get("heightBound", 6))
    if args.format is None:
        args.format = cfg.get("format", "json")
    return _certify(sc, args)


def cmd_identities(args) -> dict:
    t0 = time.perf_counter()
    params, ctx, alpha = C.identity_template(args.template, args.order)
    L = 3 if args.max_len is None else args.max_len
    rep = C.verify_proof_identities(params, ctx, alpha, L)
    names: dict = {}
    for _, name, *_ in C.identity_pairs(params, ctx, alpha, 0 if L == 0 else 1):
        names.setdefault(name, True)
    bad = {name for _, name in rep.mismatches}
    checks = [{"name": n, "mode": "bounded", "bound": ctx.order, "pass": n not in bad} for n in names]
    return {
        "scenario": f"identities-{args.template}",
        "generators": [to_string(C.build_xi(params))],
        "symmetricChecked": False,
        "symmetricHolds": None,
        "hypothesisChecks": checks,
        "maxWordLength": L,
        "truncationOrder": ctx.order,
        "wordCount": rep.checked,
        "rank": rep.checked - len(rep.mismatches),
        "status": "certified" if rep.passed else "inconclusive",
        "matrixDims": [0, 0],
        "elapsedMs": int((time.perf_counter() - t0) * 1000),
        "params": [str(p) for p in params.as_tuple()],
        "mismatches": [f"{tag} {name}" for tag, name in rep.mismatches],
    }


def cmd_check(args) -> dict:
    t0 = time.perf_counter()
    sc = _build_named(args.scenario, args)
    if args.order is not None:
        sc = sc.with_order(args.order)
    checks = sc.run_hypotheses(args.height_bound)
    sym = sc.check_symmetry() if sc.involution is not None else None
    ok = all(c.passed for c in checks) and sym is not False
    return {
        "scenario": sc.name,
        "generators": sc.generator_texts(),
        "symmetricChecked": sc.involution is not None,
        "symmetricHolds": sym,
        "hypothesisChecks": [c.as_dict() for c in checks],
        "maxWordLength": 0,
        "truncationOrder": sc.context.order,
        "wordCount": 0,
        "rank": 0,
        "status": "certified" if ok else "inconclusive",
        "matrixDims": [0, 0],
        "elapsedMs": int((time.perf_counter() - t0) * 1000),
    }


def cmd_parse(args) -> int:
    tree = parse(args.expr)
    if args.format == "text":
        print(to_string(tree))
        print(repr(tree))
    else:
        print(json.dumps({"input": args.expr, "canonical": to_string(tree), "tree": repr(tree)}, indent=2))
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-len", type=int, default=None, help="maximal word length L")
    common.add_argument("--order", type=int, default=None, help="truncation order N")
    common.add_argument("--height-bound", type=int, default=None, help="bound for bounded hypothesis checks")
    common.add_argument("--format", choices=("json", "text"), default=None)
    common.add_argument("--jobs", type=int, default=None, help="parallel word evaluations")
    common.add_argument("--strategy", choices=("adaptive", "full"), default="adaptive",
                        help="adaptive stops at the first truncation order <= N giving full rank")

    p = argparse.ArgumentParser(prog="skewfree", description="Free subalgebra certificates in skew fields of fractions.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("weyl-ml", parents=[common], help="pair (1/t)X^-1, (1/(t(1-t)))X^-1 in the Weyl field")
    sub.add_parser("weyl-symmetric", parents=[common], help="symmetric pair alpha^2, alpha*beta in the Weyl field")
    h = sub.add_parser("heisenberg", parents=[common], help="symmetric pairs for involution types I-IV")
    h.add_argument("--type", required=True, type=str.upper, choices=("I", "II", "III", "IV"))
    h.add_argument("--p", type=int, default=1, help="zeta = t^p")
    h.add_argument("--q", type=int, default=1, help="eta = t^q")
    pr = sub.add_parser("prop51", parents=[common], help="families alpha_j X(1-X)^-1 over Q(t)")
    pr.add_argument("--case", required=True, choices=("i", "ii"))
    pr.add_argument("--lambda", dest="lam", default="2", help="sigma(t) = lambda t (case ii)")
    pr.add_argument("--b", default="1", help="shift b in (t - b)^-j (case ii)")
    pr.add_argument("--m", type=int, default=None, help="family size")
    pr.add_argument("--alpha", default=None, help="alpha for case i (default 1/t^2)")
    i = sub.add_parser("identities", parents=[common], help="proof identities for the V_I words")
    i.add_argument("--template", required=True, choices=("i", "ii"))
    c = sub.add_parser("custom", parents=[common], help="scenario from a JSON config")
    c.add_argument("--config", required=True)
    k = sub.add_parser("check", parents=[common], help="hypothesis and symmetry checks only")
    k.add_argument("--scenario", required=True,
                   help="weyl-ml, weyl-symmetric, heisenberg-{I,III,IV}, prop51-{i,ii}")
    k.add_argument("--p", type=int, default=1)
    k.add_argument("--q", type=int, default=1)
    k.add_argument("--lambda", dest="lam", default="2")
    k.add_argument("--b", default="1")
    k.add_argument("--m", type=int, default=None)
    k.add_argument("--alpha", default=None)
    ps = sub.add_parser("parse", parents=[common], help="print the canonical tree of an expression")
    ps.add_argument("expr")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "custom":
            if args.jobs is None:
                args.jobs = _default_jobs()
            doc = cmd_custom(args)
            emit(doc, args.format)
            return _status_code(doc)
        if args.format is None:
            args.format = "json"
        if args.height_bound is None:
            args.height_bound = 6
        if args.jobs is None:
            args.jobs = _default_jobs()
        if args.command == "parse":
            return cmd_parse(args)
        if args.command == "identities":
            doc = cmd_identities(args)
        elif args.command == "check":
            doc = cmd_check(args)
        else:
            doc = cmd_scenario(args)
        emit(doc, args.format)
        return _status_code(doc)
    except C.NotProvidedByPaper as exc:
        print(f"error: type II is not constructed here. {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ConfigError, ParseError, BadParams, C.DegenerateXi, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
