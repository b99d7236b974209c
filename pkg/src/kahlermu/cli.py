"""Command-line interface: invariant computation, verification, listings.

Exit codes: 0 success / all checks passed, 1 a verification check failed,
2 usage or spec-parse problem, 3 a field was rejected on its residuals.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import __version__
from .errors import InvalidFieldError, KahlermuError, SpecParseError
from .fields import (
    FIELD_REGISTRY,
    compute_invariant_report,
    field_from_document,
    registry_field,
)
from .manifolds import MANIFOLDS, RECOMMENDED_NODES, builtin_manifold, load_manifold
from .quadrature import QuadratureAtlas
from .verify import SUITES, default_nodes, prepared_manifold, run_suite

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_RESIDUAL = 3


@dataclasses.dataclass
class RunConfig:
    """Echo of a resolved command configuration (embedded in reports)."""

    command: str
    manifold: str
    fields: list
    jet_order: int = 6
    nodes_per_axis: int | None = None
    tol: float = 1e-6
    out: str | None = None

    def __post_init__(self):
        if self.jet_order < 6:
            raise SpecParseError("jet order must be >= 6 for moment-map computations")
        if self.tol <= 0:
            raise SpecParseError("tolerances must be positive")


def _json_default(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _dump(payload: dict, out_path: str | None, as_json: bool):
    text = json.dumps(payload, sort_keys=True, indent=2, default=_json_default)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    if as_json or not out_path:
        print(text)


def _resolve_manifold(args):
    if args.spec:
        return load_manifold(args.spec)
    if not args.manifold:
        raise SpecParseError("specify --manifold or --spec")
    return prepared_manifold(args.manifold)


def _resolve_fields(args, spec):
    base = (args.manifold or spec.name).removesuffix("_bump")
    if args.spec and args.field_file:
        with open(args.field_file) as fh:
            docs = json.load(fh)
        docs = docs if isinstance(docs, list) else [docs]
        return [field_from_document(d, spec.complex_dim) for d in docs]
    names = args.field or ["all"]
    if names == ["all"]:
        return list(FIELD_REGISTRY.get(base, {}).values())
    return [registry_field(base, n) for n in names]


def cmd_compute(args) -> int:
    spec = _resolve_manifold(args)
    fields = _resolve_fields(args, spec)
    if not fields:
        raise SpecParseError(f"no fields known for manifold {spec.name!r}")
    nodes = args.nodes or default_nodes(spec.name)
    config = RunConfig(command="compute", manifold=spec.name,
                       fields=[f.name for f in fields], jet_order=args.jet_order,
                       nodes_per_axis=nodes, tol=args.tol, out=args.out)
    atlas = QuadratureAtlas(spec, nodes)
    reports = []
    for field in fields:
        rep = compute_invariant_report(spec, field, atlas, order=args.jet_order)
        if max(rep.residuals.values()) > args.tol:
            raise InvalidFieldError(
                f"field {field.name} residuals {rep.residuals} exceed --tol {args.tol}")
        reports.append(dataclasses.asdict(rep))
    payload = {
        "version": __version__,
        "command": "compute",
        "config": dataclasses.asdict(config),
        "reports": reports,
    }
    _dump(payload, args.out, args.json)
    return EXIT_OK


def cmd_verify(args) -> int:
    result = run_suite(args.suite, manifold=args.manifold, field=args.field[0] if args.field else None,
                       nodes=args.nodes, tol=args.tol if args.tol_set else None)
    for check in result["checks"]:
        status = "pass" if check["passed"] else "FAIL"
        print(f"[{status}] {check['name']}: value {check['value']:.3e} "
              f"vs bound {check['bound']:.3e}")
    payload = {"version": __version__, "command": "verify", "suite": args.suite,
               "result": result}
    if args.out:
        _dump(payload, args.out, False)
    return EXIT_OK if result["passed"] else EXIT_VERIFY_FAIL


def cmd_list(args) -> int:
    what = args.what
    if what in ("manifolds", "all"):
        print("manifolds:", ", ".join(MANIFOLDS),
              "(+ '<name>_bump' deformed variants; default nodes/axis:",
              json.dumps(RECOMMENDED_NODES, sort_keys=True) + ")")
    if what in ("fields", "all"):
        for mname, fields in sorted(FIELD_REGISTRY.items()):
            print(f"fields[{mname}]:", ", ".join(sorted(fields)))
    if what in ("suites", "all"):
        print("suites:", ", ".join(SUITES))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kahlermu",
                                description="Moment-map and Futaki-type invariants "
                                            "of Kahler manifolds")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--manifold", help="builtin manifold name (see 'list')")
        sp.add_argument("--spec", help="JSON manifold document path")
        sp.add_argument("--field", action="append",
                        help="field name ('all' for every registry field); repeatable")
        sp.add_argument("--field-file", help="JSON field document path (with --spec)")
        sp.add_argument("--jet-order", type=int, default=6,
                        help="potential jet order (>= 6 for moment densities)")
        sp.add_argument("--nodes", type=int, default=None,
                        help="quadrature nodes per axis (default per manifold)")
        sp.add_argument("--tol", type=float, default=1e-6,
                        help="field residual tolerance")
        sp.add_argument("--out", help="write the JSON report to this path")
        sp.add_argument("--json", action="store_true", help="print JSON to stdout")

    pc = sub.add_parser("compute", help="compute invariants for fields on a manifold")
    common(pc)
    pc.set_defaults(func=cmd_compute)

    pv = sub.add_parser("verify", help="run a verification suite")
    common(pv)
    pv.add_argument("--suite", required=True, choices=SUITES)
    pv.set_defaults(func=cmd_verify)

    pl = sub.add_parser("list", help="list registries")
    pl.add_argument("what", nargs="?", default="all",
                    choices=("all", "manifolds", "fields", "suites"))
    pl.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else EXIT_USAGE
    raw_args = list(argv) if argv is not None else sys.argv[1:]
    args.tol_set = "--tol" in raw_args
    if args.command in ("compute", "verify") and getattr(args, "jet_order", 6) < 6:
        print("error: --jet-order must be >= 6 for moment-map computations",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except InvalidFieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESIDUAL
    except SpecParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KahlermuError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAIL


if __name__ == "__main__":
    sys.exit(main())
