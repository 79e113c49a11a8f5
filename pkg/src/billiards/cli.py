"""Command line entry point: ``billiards {search,bounds,verify,export-complex}``.

Exit codes: 0 when every requested count >= bound check passes, 1 when one
fails, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import catalog, homology
from .experiment import (
    BOUND_KINDS,
    FORMATS,
    ExperimentSpec,
    ResultRecord,
    UsageError,
    default_out_dir,
    load_spec,
    run,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _csv_list(value: str) -> List[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="billiards", description="Periodic billiard trajectories and their topological lower bounds.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, need_config):
        p.add_argument("--config", required=need_config, help="INI experiment file")
        p.add_argument("--seed", type=int)
        p.add_argument("--starts", type=int)
        p.add_argument("--out", help="output directory (default $BILLIARDS_OUT or ./results)")
        p.add_argument("--bounds", type=_csv_list, help=f"comma list from {','.join(BOUND_KINDS)}")
        p.add_argument("--format", type=_csv_list, help=f"comma list from {','.join(FORMATS)}")

    common(sub.add_parser("search", help="run the trajectory search"), True)
    b = sub.add_parser("bounds", help="evaluate lower bounds without searching")
    common(b, False)
    b.add_argument("--p", type=int, default=3)
    b.add_argument("--betti", type=_csv_list, help="Betti numbers of the manifold, e.g. 1,2,1")
    b.add_argument("--complex", dest="complex_path", help="chain complex file for the morse bound")
    common(sub.add_parser("verify", help="search, evaluate bounds and compare"), True)
    e = sub.add_parser("export-complex", help="write the relative (S^2)^3/D_3 complex")
    e.add_argument("--out", help="file to write (default stdout)")
    return parser


def _spec_from_args(args) -> ExperimentSpec:
    betti = None
    if getattr(args, "betti", None):
        try:
            betti = tuple(int(v) for v in args.betti)
        except ValueError:
            raise UsageError("--betti expects integers") from None
    if args.config:
        spec = load_spec(args.config)
    else:
        spec = ExperimentSpec(search=dataclasses.replace(ExperimentSpec().search, p=args.p),
                              bounds=tuple(args.bounds or ()), betti=betti,
                              complex_path=getattr(args, "complex_path", None))
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.starts is not None:
        changes["starts"] = args.starts
    try:
        search = dataclasses.replace(spec.search, **changes)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return ExperimentSpec(
        manifold=spec.manifold, search=search,
        bounds=tuple(args.bounds) if args.bounds is not None else spec.bounds,
        betti=betti if betti is not None else spec.betti,
        complex_path=getattr(args, "complex_path", None) or spec.complex_path,
        out_dir=args.out or spec.out_dir or default_out_dir(),
        formats=tuple(args.format) if args.format else spec.formats,
    )


def _summary(record: ResultRecord) -> str:
    lines = []
    if record.trajectory_count is not None:
        lines.append(f"isolated orbits: {record.trajectory_count}  families: {record.family_count}")
        for o in record.orbits:
            lines.append(f"  length {o.length:.10f}  index {o.morse_index}  rotation {o.rotation_number}  residual {o.residual:.1e}")
        for f in record.families:
            lines.append(f"  family length {f.length:.10f}  null {f.null_dim}  members {f.members}")
    for b in record.bounds:
        status = "-" if b.passed is None else ("PASS" if b.passed else "FAIL")
        count = "" if b.count is None else f" count {b.count} >="
        lines.append(f"bound {b.name}:{count} {b.value} [{status}] ({b.note})")
    return "\n".join(lines)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.command is None:
            raise UsageError("missing command; choose search, bounds, verify or export-complex")
        if args.command == "export-complex":
            text = homology.dumps_complex(catalog.build_s2_triple_complex())
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        spec = _spec_from_args(args)
        if args.command == "search":
            spec = dataclasses.replace(spec, bounds=())
        if args.command in ("search", "verify") and spec.manifold is None:
            raise UsageError("config has no [manifold] section", args.config)
        record = run(spec, search=args.command != "bounds")
    except UsageError as exc:
        print(f"billiards: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(_summary(record))
    return record.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
