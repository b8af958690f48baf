"""Command-line front end.

Exit codes: 0 identified / verified / rule holds, 1 usage or input error,
2 not identified (witness printed), 3 verification deviation above tolerance.
For ``check-rule`` a failing precondition also exits 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import EdgeInconsistent, NotIdentified, PocalcError
from .graph import MixedGraph, loads
from .identify import Functional, identify_query, rule_applies
from .oracle import eval_functional, observed_joint, path_specific, random_scm
from .query import parse_query, value_states
from .transforms import latent_project

EXIT_OK, EXIT_USAGE, EXIT_NOT_ID, EXIT_DEVIATION = 0, 1, 2, 3


class _Usage(Exception):
    pass


def _load_graph(path: str) -> MixedGraph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise _Usage(f"cannot read graph file: {e}") from e
    return loads(text)


def _sets(s: str | None) -> list[str]:
    return [v.strip() for v in (s or "").split(",") if v.strip()]


def _emit(out, fmt: str, payload: dict, text: str):
    if fmt == "json":
        out.write(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n")
    else:
        out.write(text + "\n")


def _identify(args, out) -> int:
    g = _load_graph(args.graph)
    q = parse_query(args.query, g)
    base = {"query": args.query, "certificates": []}
    try:
        f = identify_query(g, q)
    except EdgeInconsistent as e:
        payload = {
            **base,
            "status": "not-identified",
            "witness": {
                "kind": "recanting-witness",
                "vertex": e.witness,
                "treatment": e.treatment,
                "narrative": str(e),
            },
        }
        _emit(out, args.format, payload, f"NOT IDENTIFIED: {e}")
        return EXIT_NOT_ID
    except NotIdentified as e:
        payload = {**base, "status": "not-identified", "witness": e.witness.to_dict()}
        _emit(out, args.format, payload, f"NOT IDENTIFIED: {e.witness.narrative}")
        return EXIT_NOT_ID
    payload = {**base, "status": "identified", "functional": f.to_dict()}
    payload["certificates"] = [c.to_dict() for c in f.certificates]
    body = f.latex() if args.format == "latex" else f.text()
    if args.certify:
        body += "".join(f"\n  {c}" for c in f.certificates)
    _emit(out, args.format, payload, body)
    return EXIT_OK


def _verify(args, out) -> int:
    g = _load_graph(args.graph)
    q = parse_query(args.query, g)
    try:
        f: Functional = identify_query(g, q)
    except (EdgeInconsistent, NotIdentified) as e:
        msg = e.witness.narrative if isinstance(e, NotIdentified) else str(e)
        out.write(f"NOT IDENTIFIED: {msg}\n")
        return EXIT_NOT_ID
    states = value_states(q)
    a = {t: states[q.a[t]] for t in q.treatments}
    a_prime = {t: states[q.a_prime[t]] for t in q.treatments}
    for t in q.treatments:
        if max(a[t], a_prime[t]) >= args.cards:
            raise _Usage(f"value of {t} exceeds cardinality {args.cards}")
    worst = 0.0
    for seed in range(args.seeds):
        scm = random_scm(g, args.cards, seed=seed)
        est = eval_functional(f, observed_joint(scm), states)
        truth = path_specific(scm, q.pi, a, a_prime, q.outcomes, given=q.conditioners or None)
        dev = est.max_abs_diff(truth)
        worst = max(worst, dev)
        if args.verbose:
            out.write(f"seed {seed}: {dev:.3e}\n")
    ok = worst <= args.tol
    out.write(f"{f.text()}\nmax deviation over {args.seeds} seeds: {worst:.3e} ({'ok' if ok else 'FAIL'})\n")
    return EXIT_OK if ok else EXIT_DEVIATION


def _check_rule(args, out) -> int:
    g = latent_project(_load_graph(args.graph))
    rc = rule_applies(g, args.rule, _sets(args.y), _sets(args.z), _sets(args.x), _sets(args.w))
    lines = [f"rule {rc.rule}: {'applies' if rc.verdict else 'does not apply'}"]
    lines += [f"  {c}" for c in rc.certificates]
    _emit(out, args.format, rc.to_dict(), "\n".join(lines))
    return EXIT_OK if rc.verdict else EXIT_NOT_ID


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pocalc", description="Identification of path-specific counterfactuals.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("identify", help="identify a query from the observed joint")
    s.add_argument("--graph", required=True)
    s.add_argument("--query", required=True)
    s.add_argument("--format", choices=("text", "latex", "json"), default="text")
    s.add_argument("--certify", action="store_true", help="list the separation checks used")
    s.set_defaults(run=_identify)

    s = sub.add_parser("verify", help="compare the identified functional with simulated ground truth")
    s.add_argument("--graph", required=True)
    s.add_argument("--query", required=True)
    s.add_argument("--seeds", type=int, default=20)
    s.add_argument("--cards", type=int, default=2)
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(run=_verify)

    s = sub.add_parser("check-rule", help="check a rule precondition")
    s.add_argument("--rule", required=True, choices=("1", "2", "3", "3star"))
    s.add_argument("--graph", required=True)
    s.add_argument("--y", required=True, help="comma-separated outcomes")
    s.add_argument("--z", default="")
    s.add_argument("--x", default="")
    s.add_argument("--w", default="")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(run=_check_rule)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    if getattr(args, "seeds", 1) < 1 or getattr(args, "cards", 2) < 2:
        sys.stderr.write("error: --seeds must be positive and --cards at least 2\n")
        return EXIT_USAGE
    try:
        return args.run(args, out)
    except (_Usage, PocalcError, KeyError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
