"""Batch front-end: read a JSON instance file, run one computation, print a report.

Exit codes: 0 ok, 2 schema error, 3 mathematical invariant violation,
4 unstable truncation window.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
from fractions import Fraction
from typing import Any, Sequence

from .algebroid import CheckReport, Connection, FlatnessError, LieAlgebroidSpec, check_algebroid, standard_complex
from .algebroid import abelian, aff1, gl2, heisenberg, sl2
from .atiyah import AtiyahProblem, atiyah_class_pair, reduced_atiyah
from .deform import (
    ArtinRing,
    Lift,
    annihilation_check,
    dgla_complex,
    exploratory_class,
    first_order_classes,
    lift_obstruction,
    mc_residual,
    module_dgla,
    tower_step,
)
from .dgcore import cohomology
from .exactcore import rat
from .liepair import LiePairSpec, leray_E1, leray_filtration, bott_connection
from .twtot import LineBundleProblem, cech_cohomology, line_bundle, line_bundle_atiyah, whitney_checks, widen_window

SCHEMA_VERSION = 1
EXIT_OK, EXIT_SCHEMA, EXIT_INVARIANT, EXIT_WINDOW = 0, 2, 3, 4

BUILTINS = {"sl2": sl2, "gl2": gl2, "aff1": aff1, "heisenberg": heisenberg}


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **details):
        super().__init__(message)
        self.code = code
        self.reason = {"kind": kind, "message": message, **{k.replace("_", "-"): v for k, v in details.items()}}


def schema_error(message: str, **details) -> CliError:
    return CliError(EXIT_SCHEMA, "schema", message, **details)


def invariant_error(report: CheckReport | None, message: str, **details) -> CliError:
    extra = report.as_dict() if report is not None else {}
    return CliError(EXIT_INVARIANT, "invariant", message, **extra, **details)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def q(value) -> Fraction:
    if not isinstance(value, str):
        raise schema_error("numbers must be written as strings", value=repr(value))
    try:
        return rat(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise schema_error(f"not a rational number: {value!r}") from exc


def parse_algebroid(doc: dict) -> LieAlgebroidSpec:
    if "builtin" in doc:
        name = doc["builtin"]
        if isinstance(name, str) and name.startswith("abelian:"):
            return abelian(int(name.split(":", 1)[1]))
        if name not in BUILTINS:
            raise schema_error(f"unknown builtin algebroid {name!r}")
        return BUILTINS[name]()
    names = doc.get("names")
    if not isinstance(names, list) or not names or len(set(names)) != len(names):
        raise schema_error("algebroid.names must be a list of distinct names")
    idx = {n: i for i, n in enumerate(names)}
    table: dict = {}
    given = set()
    for entry in doc.get("brackets", []):
        pair, value = entry.get("pair"), entry.get("value", {})
        if not isinstance(pair, list) or len(pair) != 2 or any(p not in idx for p in pair):
            raise schema_error("bracket pair refers to an undefined basis element", pair=pair)
        if any(k not in idx for k in value):
            raise schema_error("bracket value refers to an undefined basis element", pair=pair)
        i, j = idx[pair[0]], idx[pair[1]]
        table[(i, j)] = {idx[k]: q(v) for k, v in value.items() if q(v) != 0}
        given.add((i, j))
    for (i, j) in list(given):
        if (j, i) not in given:
            table[(j, i)] = {k: -v for k, v in table[(i, j)].items()}
    return LieAlgebroidSpec(tuple(names), table)


def parse_matrices(doc: dict, spec: LieAlgebroidSpec) -> Connection:
    dim = doc.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise schema_error("module.dim must be a positive integer")
    mats = doc.get("matrices", {})
    unknown = [n for n in mats if n not in spec.names]
    if unknown:
        raise schema_error("module matrices refer to undefined basis elements", names=unknown)
    out = []
    for n in spec.names:
        M = mats.get(n)
        if M is None:
            out.append(tuple(tuple(Fraction(0) for _ in range(dim)) for _ in range(dim)))
            continue
        if len(M) != dim or any(len(r) != dim for r in M):
            raise schema_error(f"matrix for {n} must be {dim}x{dim}")
        out.append(tuple(tuple(q(x) for x in r) for r in M))
    return Connection(spec, dim, tuple(out))


def load_instance(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise schema_error(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise schema_error("instance must be a JSON object")
    if doc.get("schema-version") != SCHEMA_VERSION:
        raise schema_error(f"schema-version must be {SCHEMA_VERSION}")
    if doc.get("rationals-as-strings") is not True:
        raise schema_error('"rationals-as-strings": true is mandatory')
    return doc


def require(doc: dict, key: str) -> Any:
    if key not in doc:
        raise schema_error(f"missing section {key!r}")
    return doc[key]


def checked_algebroid(doc: dict) -> LieAlgebroidSpec:
    spec = parse_algebroid(require(doc, "algebroid"))
    report = check_algebroid(spec)
    if not report:
        raise invariant_error(report, f"algebroid fails {report.identity}")
    return spec


def checked_pair(doc: dict) -> LiePairSpec:
    spec = checked_algebroid(doc)
    sub = require(doc, "pair").get("sub", [])
    if any(n not in spec.names for n in sub):
        raise schema_error("pair.sub refers to undefined basis elements")
    pair = LiePairSpec.by_names(spec, sub)
    report = pair.validate()
    if not report:
        raise invariant_error(report, "subalgebroid is not closed under the bracket")
    return pair


def checked_problem(doc: dict) -> AtiyahProblem:
    pair = checked_pair(doc)
    module = parse_matrices(require(doc, "module"), pair.sub_spec())
    try:
        return AtiyahProblem(pair, module)
    except FlatnessError as exc:
        raise invariant_error(CheckReport(False, "flatness", (), str(exc)), "module over the subalgebroid is not flat")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {(k if isinstance(k, str) else json.dumps(jsonable(k))): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return x


def element_json(x: dict) -> list:
    """Sparse algebra element {(forms, row, col): coeff} as a sorted list of records."""
    return [{"form": list(k[0]), "row": k[1], "col": k[2], "value": str(v)} for k, v in sorted(x.items())]


def cohomology_table(C) -> dict:
    H = cohomology(C)
    return {str(n): {"dim": h.dim, "representatives": jsonable(h.representatives)} for n, h in sorted(H.items())}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_cohomology(doc: dict, args) -> dict:
    spec = checked_algebroid(doc)
    module = parse_matrices(doc["module"], spec) if "module" in doc else Connection.trivial(spec, 1)
    if not module.is_flat():
        raise invariant_error(CheckReport(False, "flatness", (), "connection is not flat"), "module is not flat")
    table = cohomology_table(standard_complex(spec, module))
    dims = [table.get(str(n), {"dim": 0})["dim"] for n in range(spec.rank + 1)]
    return {"dims": dims, "cohomology": table}


def cmd_pair(doc: dict, args) -> dict:
    pair = checked_pair(doc)
    F = leray_filtration(pair)
    E1 = leray_E1(pair)
    if not E1.agree:
        raise invariant_error(None, "E1 routes disagree", spectral=jsonable(E1.spectral), graded=jsonable(E1.graded))
    page = [{"p": p, "q": qq, "dim": E1.spectral.get((p, qq), 0)}
            for p in range(pair.corank + 1) for qq in range(pair.rank_A + 1)]
    bott = bott_connection(pair)
    return {
        "filtration": {str(p): {str(k): F.dim(p, k) for k in range(pair.rank_L + 1)} for p in range(F.length + 1)},
        "bott-matrices": jsonable(bott.quotient.matrices),
        "E1": page,
        "columns": pair.corank + 1,
        "total": {str(k): v for k, v in sorted(E1.total.items())},
        "degenerates-at-E1": E1.degenerates_at_E1,
    }


def cmd_atiyah(doc: dict, args) -> dict:
    if "pair" not in doc and "two-chart" in doc:
        prob = line_bundle_problem(doc, args)
        value = line_bundle_atiyah(prob)
        if not value.cech.stable:
            raise window_error(prob.window)
        return {"model": "two-chart", "degree": prob.degree, "class": jsonable(value.coordinates),
                "residue": str(value.residue), "oracle-residue": str(value.oracle_residue),
                "extension-residue": str(value.extension_residue), "is-zero": value.is_zero,
                "representative": [{"key": jsonable(k), "value": str(v)} for k, v in sorted(value.cocycle.items(), key=repr)]}
    prob = checked_problem(doc)
    value = atiyah_class_pair(prob, seed=args.seed)
    if not value.routes_agree:
        raise invariant_error(None, "curved-pair and Bott-complex routes disagree")
    report = {
        "model": "pair",
        "is-zero": value.is_zero,
        "class": jsonable(value.curved.coordinates),
        "representative": jsonable(list(value.curved.representative)),
        "bott-class": jsonable(value.bott_class),
        "independent-of-extension": value.independent_of_extension,
        "reduced-class": jsonable(reduced_atiyah(prob).coordinates),
    }
    if value.witness is not None:
        from .atiyah import pair_curvature

        curv = pair_curvature(prob, value.witness)
        if not curv.in_G2():
            raise invariant_error(None, "witness curvature is not in G2")
        report["witness"] = {"complement-matrices": jsonable(value.witness.complement_matrices),
                             "curvature-in-G2": True}
    else:
        report["nonvanishing-certificate"] = {"class-coordinates": jsonable(value.curved.coordinates)}
    return report


def _explicit_element(records: list, L) -> dict:
    out: dict = {}
    for r in records:
        try:
            key = (tuple(sorted(r["form"])), int(r["row"]), int(r["col"]))
        except (KeyError, TypeError) as exc:
            raise schema_error("element records need form, row, col and value") from exc
        if len(set(r["form"])) != len(r["form"]):
            raise schema_error("form indices must be distinct")
        out[key] = out.get(key, 0) + q(r["value"])
    out = {k: v for k, v in out.items() if v}
    bad = [k for k in out if k not in L.index.get(1, {})]
    if bad:
        raise schema_error("element refers to keys outside degree 1 of the algebra", keys=jsonable(bad))
    return out


def _first_order(directive: dict, L) -> dict:
    if "element" in directive:
        return _explicit_element(directive["element"], L)
    coeffs = [q(c) for c in directive.get("coefficients", [])]
    H = cohomology(dgla_complex(L)).get(1)
    reps = H.representatives if H is not None else []
    if len(coeffs) != len(reps):
        raise schema_error(f"coefficients must have length dim H^1 = {len(reps)}")
    v = [sum((c * r[i] for c, r in zip(coeffs, reps)), Fraction(0)) for i in range(L.dim(1))]
    return L.from_vector(tuple(v), 1)


def _annihilation_record(prob, ob, k, exploratory=False) -> dict:
    res = annihilation_check(prob, ob, k, exploratory=exploratory)
    rec = {"k": k, "pass": res.passed, "primitive": element_json_forms(res.primitive),
           "tau": jsonable(res.tau.coordinates), "tau-zero": res.tau_zero,
           "leray-degenerate": res.degenerate, "asserted": res.asserted}
    if res.asserted and (not res.passed or (res.degenerate and not res.tau_zero)):
        raise invariant_error(None, "obstruction is not annihilated", k=k, record=rec)
    return rec


def element_json_forms(x) -> list | None:
    if x is None:
        return None
    return [{"form": list(k), "value": str(v)} for k, v in sorted(x.items())]


def cmd_deform(doc: dict, args) -> dict:
    prob = checked_problem(doc)
    L = module_dgla(prob)
    directive = require(doc, "deformation")
    order = directive.get("order", 3)
    ks = directive.get("k", [0, 1])
    if not isinstance(order, int) or order < 2 or any(not isinstance(k, int) or k < 0 for k in ks):
        raise schema_error("deformation.order must be >= 2 and k values non-negative integers")
    fo = first_order_classes(L, seed=args.seed)
    if not fo.bijection:
        raise invariant_error(None, "first-order identification failed")
    report: dict = {"H1": {"dim": fo.dim, "representatives": jsonable(fo.h1.representatives)},
                    "first-order-bijection": True}
    first = directive.get("first-order", {"coefficients": ["0"] * fo.dim})
    if not isinstance(first, dict):
        raise schema_error("deformation.first-order must be an object")
    x1 = _first_order(first, L)
    x = {(1,): x1} if x1 else {}
    if mc_residual(L, ArtinRing.truncated(2), x):
        raise invariant_error(None, "first-order element is not a cocycle")
    steps = []
    rng = random.Random(args.seed)
    outcome = {"lifts-to-order": order}
    for m in range(2, order):
        result = lift_obstruction(L, tower_step(m), x, rng)
        if isinstance(result, Lift):
            x = result.element
            steps.append({"to": f"u^{m + 1}", "lifted": True, "corrected": result.corrected})
            continue
        steps.append({"to": f"u^{m + 1}", "lifted": False,
                      "obstruction": {"class": jsonable(result.coordinates),
                                      "representative": element_json(result.representative)}})
        outcome = {"obstructed-at": f"u^{m + 1}",
                   "semiregularity": [_annihilation_record(prob, result, k) for k in ks]}
        break
    else:
        outcome["message"] = "lifts to full order"
    report["tower"] = steps
    report.update(outcome)
    if "exploratory" in directive:
        vec = [q(v) for v in directive["exploratory"]]
        if len(vec) != L.dim(2):
            raise schema_error(f"exploratory vector must have length {L.dim(2)}")
        ob = exploratory_class(L, vec)
        report["exploratory"] = [_annihilation_record(prob, ob, k, exploratory=True) for k in ks]
    return report


def window_error(window) -> CliError:
    return CliError(EXIT_WINDOW, "unstable-window", "cohomology changes when the window is widened",
                    window=list(window), suggested_window=list(widen_window(widen_window(window))))


def parse_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(p) for p in text.split(":"))
    except ValueError as exc:
        raise schema_error("--window must look like LO:HI") from exc
    if lo > hi:
        raise schema_error("--window needs LO <= HI")
    return lo, hi


def line_bundle_problem(doc: dict, args) -> LineBundleProblem:
    chart = require(doc, "two-chart")
    degree = chart.get("degree")
    if not isinstance(degree, int):
        raise schema_error("two-chart.degree must be an integer")
    window = parse_window(args.window) if args.window else tuple(chart.get("window", (-6, 6)))
    return LineBundleProblem(degree, window, args.nmax)


def cmd_tot(doc: dict, args) -> dict:
    prob = line_bundle_problem(doc, args)
    V = line_bundle(prob.degree, prob.window)
    res = cech_cohomology(V)
    if not res.stable:
        raise window_error(prob.window)
    trials = doc["two-chart"].get("trials", 5)
    whitney = whitney_checks(line_bundle(prob.degree, prob.window), trials, random.Random(args.seed), prob.n_max)
    if not whitney.ok:
        raise invariant_error(None, "Whitney integration checks failed", failures=jsonable(vars(whitney)))
    return {
        "degree": prob.degree,
        "window": list(prob.window),
        "cech": {str(n): d for n, d in sorted(res.dims.items())},
        "stable": res.stable,
        "widened": {str(n): d for n, d in sorted(res.widened_dims.items())},
        "whitney": {"trials": trials, "I-after-E-identity": True, "chain-map": True, "iota-restriction": True},
    }


COMMANDS = {"cohomology": cmd_cohomology, "pair": cmd_pair, "atiyah": cmd_atiyah, "deform": cmd_deform, "tot": cmd_tot}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def render_text(report: dict, indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for key, value in report.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(render_text(value, indent + 1))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{pad}{key}:")
            for item in value:
                lines.append(f"{pad}  - " + ", ".join(f"{k}={json.dumps(v)}" for k, v in item.items()))
        else:
            lines.append(f"{pad}{key}: {json.dumps(value)}")
    return "\n".join(line for line in lines if line)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semireg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", required=True, help="instance file (JSON), or - for stdin")
        p.add_argument("--output", default="-", help="report file, or - for stdout")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--window", help="Laurent window LO:HI for two-chart models")
        p.add_argument("--nmax", type=int, default=3, help="highest simplex level of the totalization")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    return parser


def run(argv: Sequence[str] | None = None) -> tuple[int, dict]:
    args = build_parser().parse_args(argv)
    try:
        text = sys.stdin.read() if args.input == "-" else open(args.input, encoding="utf-8").read()
    except OSError as exc:
        return EXIT_SCHEMA, {"command": args.command, "status": "error",
                             "reason": {"kind": "schema", "message": f"cannot read input: {exc.strerror}"}}
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    head = {"command": args.command, "schema-version": SCHEMA_VERSION, "rationals-as-strings": True,
            "input-sha256": digest}
    try:
        doc = load_instance(text)
        result = COMMANDS[args.command](doc, args)
    except CliError as err:
        return err.code, {**head, "status": "error", "exit-code": err.code, "reason": jsonable(err.reason)}
    return EXIT_OK, {**head, "status": "ok", "result": jsonable(result)}


def main(argv: Sequence[str] | None = None) -> int:
    code, report = run(argv)
    args = build_parser().parse_args(argv)
    body = json.dumps(report, indent=2, sort_keys=True) if args.format == "json" else render_text(report)
    if args.output == "-":
        sys.stdout.write(body + "\n")
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(body + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
