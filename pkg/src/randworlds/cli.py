"""``rw``: command-line front end.

Every command prints one JSON report on stdout.  Exit codes: 0 success,
2 input error, 3 undefined verdict, 4 corpus failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from .canonical import AtomicDescription, CanonicalFormTooLarge, UnsupportedFormula, atom_label, canonicalize
from .finite import UNDEFINED as FINITE_UNDEFINED, MissingToleranceError, practical_max_n, pr_finite
from .inference import POINT, TIE_INTERVAL, UNDEFINED, ZERO_ONE, compute01, compute_pr_inf
from .maxent import DEFAULT_GRID, InfeasibleRegion, limit_maxent
from .syntax import ParseError, Vocabulary, parse, tolerance_indices, validate

EXIT_OK, EXIT_INPUT, EXIT_UNDEFINED, EXIT_CORPUS = 0, 2, 3, 4
BUNDLED_CORPUS = Path(__file__).with_name("corpus")


class InputError(Exception):
    pass


def num(x: float) -> str:
    return format(float(x), ".12g")


def exact(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


# --- input -----------------------------------------------------------------

def read_kb(path):
    """Parse a KB file: ``predicates:`` / ``constants:`` header lines, then one formula."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}")
    header = {"predicates": [], "constants": []}
    body = []
    started = False
    for line in text.splitlines():
        stripped = line.split("#", 1)[0].strip()
        key, sep, rest = stripped.partition(":")
        if sep and key.strip() in header and not started:
            header[key.strip()] = [n.strip() for n in rest.split(",") if n.strip()]
            body.append("")   # keep line numbers aligned
            continue
        started = started or bool(stripped)
        body.append(line.split("#", 1)[0])
    try:
        vocab = Vocabulary(header["predicates"], header["constants"])
    except ValueError as e:
        raise InputError(f"{path}: {e}")
    kb = parse_checked("\n".join(body), vocab, str(path))
    return vocab, kb


def parse_checked(text, vocab, what="formula"):
    try:
        f = parse(text, vocab)
    except ParseError as e:
        raise InputError(f"{what}: {e}")
    problems = validate(f, vocab)
    if problems:
        raise InputError(f"{what}: " + "; ".join(problems))
    return f


def parse_tau(specs) -> dict:
    tau = {}
    for spec in specs or []:
        idx, sep, val = spec.partition("=")
        try:
            tau[int(idx)] = Fraction(val.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"bad tolerance {spec!r}; expected INDEX=VALUE")
        if not 0 < tau[int(idx)] < 1:
            raise InputError(f"tolerance {spec!r} must lie in (0, 1)")
    return tau


def parse_grid(text) -> tuple:
    if not text:
        return DEFAULT_GRID
    try:
        grid = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise InputError(f"bad tolerance grid {text!r}")
    if not grid or any(not 0 < t < 1 for t in grid):
        raise InputError("grid tolerances must lie in (0, 1)")
    return grid


def parse_ns(text) -> list:
    try:
        ns = [int(t) for t in str(text).split(",")]
    except ValueError:
        raise InputError(f"bad domain sizes {text!r}")
    if any(n < 1 for n in ns):
        raise InputError("domain sizes must be positive")
    return sorted(ns)


# --- reports ---------------------------------------------------------------

def belief_report(b) -> dict:
    out = {"kind": b.kind}
    if b.kind in (POINT, ZERO_ONE):
        out["value"] = num(b.value)
        if b.rational is not None:
            out["exact"] = exact(b.rational)
    elif b.kind == TIE_INTERVAL:
        out["lo"], out["hi"] = num(b.lo), num(b.hi)
    else:
        out["reason"] = b.reason
    return out


def diagnostics_report(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if k == "winners":
            out[k] = [{**w, "entropy": num(w["entropy"]), "point": [num(x) for x in w["point"]]}
                      for w in v]
        elif k in ("group_probabilities", "tau_grid"):
            out[k] = [num(x) for x in v]
        elif k == "best_entropy":
            out[k] = None if v is None else num(v)
        else:
            out[k] = v
    return out


def emit(report: dict, out=None):
    out = out or sys.stdout
    out.write(json.dumps(report, indent=2, sort_keys=True) + "\n")


# --- commands --------------------------------------------------------------

def cmd_infer(args):
    vocab, kb = read_kb(args.kb)
    query = parse_checked(args.query, vocab, "query")
    grid = parse_grid(args.tau_grid)
    try:
        b = compute_pr_inf(query, kb, vocab, grid)
    except (UnsupportedFormula, CanonicalFormTooLarge) as e:
        raise InputError(str(e))
    report = {"command": "infer", "kb": str(args.kb), "query": args.query,
              "verdict": belief_report(b), "diagnostics": diagnostics_report(b.diagnostics),
              "tau_grid": [num(t) for t in grid]}
    return report, EXIT_UNDEFINED if b.kind == UNDEFINED else EXIT_OK


def finite_rows(query, kb, vocab, ns, tau):
    rows = []
    for n in ns:
        p = pr_finite(query, kb, vocab, n, tau)
        row = {"n": n, "numerator": str(p.numerator), "denominator": str(p.denominator)}
        if p.defined:
            row["value"], row["float"] = exact(p.value), num(float(p))
        else:
            row["value"], row["float"] = "UNDEFINED", None
        rows.append(row)
    return rows


def cmd_finite(args):
    vocab, kb = read_kb(args.kb)
    query = parse_checked(args.query, vocab, "query")
    ns = parse_ns(args.n)
    tau = parse_tau(args.tau)
    bound = practical_max_n(vocab)
    if ns[-1] > bound:
        raise InputError(f"N = {ns[-1]} exceeds the bound {bound} for {vocab.K} atoms "
                         f"and {len(vocab.constants)} constants")
    missing = (tolerance_indices(kb) | tolerance_indices(query)) - set(tau)
    if missing:
        raise InputError(f"no --tau given for indices {sorted(missing)}")
    rows = finite_rows(query, kb, vocab, ns, tau)
    report = {"command": "finite", "kb": str(args.kb), "query": args.query,
              "tau": {str(i): exact(t) for i, t in sorted(tau.items())}, "rows": rows}
    return report, EXIT_OK


def cmd_maxent(args):
    vocab, kb = read_kb(args.kb)
    grid = parse_grid(args.tau_grid)
    try:
        cf = canonicalize(kb, vocab)
    except (UnsupportedFormula, CanonicalFormTooLarge) as e:
        raise InputError(str(e))
    disjuncts = []
    for i, d in enumerate(cf.disjuncts):
        entry = {
            "index": i,
            "description": d.description.describe(vocab),
            "forced_empty": [atom_label(vocab, a) for a in sorted(d.forced_empty)],
            "forced_nonempty": [atom_label(vocab, a) for a in sorted(d.forced_nonempty)],
            "constraints": [c.render(vocab) for c in d.region.constraints],
        }
        try:
            lim = limit_maxent(d.region, grid)
        except InfeasibleRegion:
            entry["feasible"] = False
        else:
            entry.update({
                "feasible": True,
                "entropy": num(lim.value),
                "point": {atom_label(vocab, a): num(x) for a, x in enumerate(lim.point)},
                "agreement": lim.agreement,
                "extrapolated": None if lim.extrapolated is None else num(lim.extrapolated),
                "grid_entropy": [None if r is None else num(r.value) for r in lim.grid_results],
                "boundary": lim.closure.boundary,
            })
        disjuncts.append(entry)
    report = {"command": "maxent", "kb": str(args.kb), "atoms": [atom_label(vocab, a) for a in range(vocab.K)],
              "tau_grid": [num(t) for t in sorted(grid, reverse=True)], "disjuncts": disjuncts}
    return report, EXIT_OK


def cmd_check01(args):
    preds = [p.strip() for p in args.predicates.split(",") if p.strip()]
    consts = [c.strip() for c in (args.constants or "").split(",") if c.strip()]
    try:
        vocab = Vocabulary(preds, consts)
    except ValueError as e:
        raise InputError(str(e))
    phi = parse_checked(args.formula, vocab)
    try:
        mask = int(args.active, 0) if args.active else (1 << vocab.K) - 1
    except ValueError:
        raise InputError(f"bad atom mask {args.active!r}")
    active = [a for a in range(vocab.K) if (mask >> a) & 1]
    placement = {}
    for spec in args.place or []:
        c, _, a = spec.partition("=")
        try:
            placement[c.strip()] = int(a, 0)
        except ValueError:
            raise InputError(f"bad placement {spec!r}; expected CONSTANT=ATOM")
    named = AtomicDescription(tuple((c,) for c in placement), tuple(placement.values()))
    try:
        b = compute01(phi, active, named, vocab)
    except ValueError as e:
        raise InputError(str(e))
    report = {"command": "check01", "formula": args.formula,
              "active": [atom_label(vocab, a) for a in active], "value": b}
    return report, EXIT_OK


# --- corpus ----------------------------------------------------------------

def _oracle_ok(expected, rows, tau_max):
    last = rows[-1]
    if expected["kind"] == UNDEFINED:
        return all(r["value"] == "UNDEFINED" for r in rows)
    if last["value"] == "UNDEFINED":
        return False
    v = Fraction(last["value"])
    slack = Fraction(tau_max) + Fraction(2, last["n"])
    if expected["kind"] == TIE_INTERVAL:
        return Fraction(expected["lo"]) - slack <= v <= Fraction(expected["hi"]) + slack
    return abs(v - Fraction(expected["value"])) <= slack


def _verdict_ok(expected, b) -> bool:
    tol = float(expected.get("tolerance", 1e-9))
    if b.kind != expected["kind"]:
        return False
    if b.kind in (POINT, ZERO_ONE):
        return abs(b.value - float(Fraction(expected["value"]))) <= tol
    if b.kind == TIE_INTERVAL:
        return (abs(b.lo - float(Fraction(expected["lo"]))) <= tol
                and abs(b.hi - float(Fraction(expected["hi"]))) <= tol)
    return b.reason == expected.get("reason", b.reason)


def run_case(path: Path) -> dict:
    entry = {"file": path.name, "name": path.stem}
    try:
        spec = json.loads(path.read_text(encoding="utf-8"))
        entry["name"] = spec["name"]
        expected = spec["expected"]
        if expected["kind"] == POINT and not float(expected.get("tolerance", 0)) > 0:
            raise InputError("POINT expectations need a positive tolerance")
        vocab, kb = read_kb(path.parent / spec["kb"])
        query = parse_checked(spec["query"], vocab, "query")
        b = compute_pr_inf(query, kb, vocab)
        entry["verdict"] = belief_report(b)
        entry["expected"] = expected
        verdict_ok = _verdict_ok(expected, b)
        oracle = spec.get("oracle")
        oracle_ok = True
        if oracle:
            tau = {int(i): Fraction(v) for i, v in oracle.get("tau", {}).items()}
            rows = finite_rows(query, kb, vocab, sorted(oracle["n"]), tau)
            entry["oracle"] = rows
            oracle_ok = _oracle_ok(expected, rows, max(tau.values(), default=0))
        entry["verdict_ok"], entry["oracle_ok"] = verdict_ok, oracle_ok
        entry["status"] = "pass" if verdict_ok and oracle_ok else "fail"
    except Exception as e:  # a malformed case is a failed case
        entry["status"] = "fail"
        entry["error"] = f"{type(e).__name__}: {e}"
    return entry


def threads() -> int:
    try:
        return max(0, int(os.environ.get("RW_THREADS", "0")))
    except ValueError:
        return 0


def cmd_corpus(args):
    root = Path(args.dir) if args.dir else BUNDLED_CORPUS
    if not root.is_dir():
        raise InputError(f"{root} is not a directory")
    files = sorted(root.glob("*.json"))
    n = threads()
    if n:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(run_case, files))
    else:
        results = [run_case(f) for f in files]
    results.sort(key=lambda r: (r["name"], r["file"]))
    failed = [r["name"] for r in results if r["status"] != "pass"]
    report = {"command": "corpus", "cases": results, "total": len(results),
              "passed": len(results) - len(failed), "failed": failed,
              "warnings": [] if results else ["corpus contains no cases"]}
    return report, EXIT_CORPUS if failed else EXIT_OK


# --- entry point -------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="rw", description="Random-worlds degrees of belief.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("infer", help="asymptotic degree of belief")
    s.add_argument("--kb", required=True)
    s.add_argument("--query", required=True)
    s.add_argument("--tau-grid")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("finite", help="exact probability at finite domain sizes")
    s.add_argument("--kb", required=True)
    s.add_argument("--query", required=True)
    s.add_argument("--n", required=True, help="domain size or comma list")
    s.add_argument("--tau", action="append", help="INDEX=VALUE, repeatable")
    s.set_defaults(func=cmd_finite)

    s = sub.add_parser("maxent", help="per-disjunct maximum-entropy analysis")
    s.add_argument("--kb", required=True)
    s.add_argument("--tau-grid")
    s.set_defaults(func=cmd_maxent)

    s = sub.add_parser("check01", help="0-1 law verdict for a first-order sentence")
    s.add_argument("--formula", required=True)
    s.add_argument("--predicates", required=True)
    s.add_argument("--constants")
    s.add_argument("--active", help="bitmask over atoms (default: all)")
    s.add_argument("--place", action="append", help="CONSTANT=ATOM, repeatable")
    s.set_defaults(func=cmd_check01)

    s = sub.add_parser("corpus", help="run a regression corpus")
    s.add_argument("dir", nargs="?")
    s.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, code = args.func(args)
    except (InputError, MissingToleranceError) as e:
        emit({"command": args.command, "error": str(e)})
        print(f"rw: {e}", file=sys.stderr)
        return EXIT_INPUT
    emit(report)
    return code


if __name__ == "__main__":
    sys.exit(main())
