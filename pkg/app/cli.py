"""Command-line entry point: ``python -m app.cli <command> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO, Tuple

from pydantic import ValidationError

from app.complex_core import euler_characteristic, validate
from app.config import settings
from app.errors import SchemaError, SystolicError
from app.generators import generate
from app.metric_geometry import (
    BallGraph,
    ball_profile,
    length_of_class,
    length_series,
    subdivide_to_level,
    z2_systole,
)
from app.models.documents import GeneratorSpec
from app.models.reports import VerificationReport
from app.optimizer import OptimizerConfig, optimize_metric
from app.serialization import ParsedDocument, complex_document, dumps, metric_document, parse_text
from app.surface_realization import realize_cycle, witness_component
from app.util.ids import new_report_id, new_trace_id
from app.verification import verify
from app.z2_algebra import Z2Vector, betti_numbers, cohomology_basis, cup_length_witness, homology_basis

logger = logging.getLogger("systolic.cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2

# Positional parameters of ``generate FAMILY ...`` per family.
GENERATOR_PARAMS: Dict[str, Tuple[Tuple[str, type], ...]] = {
    "torus_grid": (("m", int), ("n", int), ("lx", float), ("ly", float)),
    "klein_grid": (("m", int), ("n", int), ("lx", float), ("ly", float)),
    "hex_torus": (("m", int), ("n", int), ("side", float)),
    "rp2_minimal": (("side", float),),
    "genus_g_polygon": (("genus", int), ("side", float)),
    "sphere": (("kind", str), ("side", float)),
    "cycle": (("n", int), ("side", float)),
}


def _read_input(path: Optional[str], stdin: TextIO) -> ParsedDocument:
    text = Path(path).read_text(encoding="utf-8") if path and path != "-" else stdin.read()
    return parse_text(text)


def _named_cochain(doc: ParsedDocument, name: Optional[str], degree: int) -> Optional[Z2Vector]:
    if name is None:
        return None
    if name not in doc.cochains:
        raise SchemaError("unknown cochain", details={"pointer": f"/cochains/{name}"})
    vec = doc.cochains[name]
    if vec.degree != degree:
        raise SchemaError(
            "cochain has the wrong degree",
            details={"pointer": f"/cochains/{name}/degree", "expected": degree, "value": vec.degree},
        )
    return vec


def _class_cocycle(doc: ParsedDocument, args: argparse.Namespace) -> Tuple[Z2Vector, Optional[int]]:
    named = _named_cochain(doc, args.cocycle, 1)
    if named is not None:
        return named, None
    basis = cohomology_basis(doc.complex, 1)
    index = args.class_index
    if not 0 <= index < basis.rank:
        raise SystolicError(
            "class index out of range",
            code="INVALID_PARAMETERS",
            details={"class_index": index, "rank": basis.rank},
        )
    return basis.representatives[index], index


def _render_text(payload: Any, indent: int = 0) -> List[str]:
    pad = "  " * indent
    if isinstance(payload, dict):
        lines: List[str] = []
        for key, value in payload.items():
            if isinstance(value, (dict, list)) and value and not _is_flat(value):
                lines.append(f"{pad}{key}:")
                lines.extend(_render_text(value, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_scalar(value)}")
        return lines
    if isinstance(payload, list):
        lines = []
        for item in payload:
            sub = _render_text(item, indent + 1)
            lines.append(f"{pad}- " + sub[0].strip() if sub else f"{pad}-")
            lines.extend(sub[1:])
        return lines
    return [f"{pad}{_scalar(payload)}"]


def _is_flat(value: Any) -> bool:
    items = value.values() if isinstance(value, dict) else value
    return all(not isinstance(v, (dict, list)) for v in items)


def _scalar(value: Any) -> str:
    if isinstance(value, float):
        return format(value, ".6g")
    if isinstance(value, list):
        return "[" + ", ".join(_scalar(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}: {_scalar(v)}" for k, v in value.items()) + "}"
    return str(value)


def render_report_text(report: VerificationReport) -> str:
    head = [
        f"inequality: {report.inequality}",
        f"verdict: {report.verdict}",
        f"level: {report.level}",
        f"area: {report.area:.6g}",
    ]
    if report.margin is not None:
        head.append(f"margin: {report.margin:.6g}")
    if report.l_hat is not None:
        head.append(f"l_hat: {report.l_hat:.6g}")
    if report.lower_ratio is not None:
        head.append(f"ball lower ratio: {report.lower_ratio:.6g}")
    for ball in report.balls:
        head.append(
            f"  r={ball.radius:.4g} lower={ball.lower:.6g} upper={ball.upper:.6g} target={ball.target:.6g}"
        )
    head.extend(f"note: {note}" for note in report.notes)
    return "\n".join(head)


def _emit(payload: Any, args: argparse.Namespace, stdout: TextIO) -> None:
    if isinstance(payload, VerificationReport):
        text = dumps(payload.model_dump(), indent=2) if args.output == "json" else render_report_text(payload)
    elif args.output == "json":
        text = dumps(payload, indent=2)
    else:
        text = "\n".join(_render_text(payload))
    stdout.write(text + "\n")


def _verdict_exit(verdict: str) -> int:
    return EXIT_INCONCLUSIVE if verdict == "inconclusive" else EXIT_OK


# --------------------------------------------------------------------------- commands


def cmd_validate(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> int:
    doc = _read_input(args.input, stdin)
    result = validate(doc.complex)
    payload: Dict[str, Any] = {
        "valid": result.valid,
        "vertices": doc.complex.vertex_count,
        "edges": doc.complex.edge_count,
        "triangles": doc.complex.triangle_count,
        "euler_characteristic": euler_characteristic(doc.complex),
        "connected": result.connected,
    }
    if not result.valid:
        payload.update({"code": result.code, "message": result.message, "details": result.details})
    _emit(payload, args, stdout)
    return EXIT_OK if result.valid else EXIT_ERROR


def cmd_homology(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> int:
    doc = _read_input(args.input, stdin)
    b0, b1, b2 = betti_numbers(doc.complex)
    payload = {
        "betti": [b0, b1, b2],
        "cohomology_1": [v.support for v in cohomology_basis(doc.complex, 1).representatives],
        "homology_2": [v.support for v in homology_basis(doc.complex, 2).representatives],
    }
    _emit(payload, args, stdout)
    return EXIT_OK


def cmd_cup_witness(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> int:
    doc = _read_input(args.input, stdin)
    witness = cup_length_witness(doc.complex)
    if witness is None:
        _emit({"witness": None}, args, stdout)
        return EXIT_INCONCLUSIVE
    payload = {
        "indices": list(witness.indices),
        "alpha": witness.alpha.support,
        "beta": witness.beta.support,
        "cycle": witness.cycle.support,
    }
    _emit({"witness": payload}, args, stdout)
    return EXIT_OK


def cmd_realize(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> int:
    doc = _read_input(args.input, stdin)
    cycle = _named_cochain(doc, args.cycle, 2)
    witness = cup_length_witness(doc.complex)
    if cycle is None:
        if witness is None:
            basis = homology_basis(doc.complex, 2)
            if basis.rank == 0:
                raise SystolicError("no non-trivial 2-cycle to realize", code="TRIVIAL_CLASS")
            cycle = basis.representatives[0]
        else:
            cycle = witness.cycle
    realization = realize_cycle(doc.complex, cycle, pairing=args.pairing, seed=args.seed)
    payload: Dict[str, Any] = {
        "surface": complex_document(realization.surface),
        "vertex_map": realization.vertex_map.tolist(),
        "triangle_map": realization.triangle_map.tolist(),
        "components": [c.as_dict() for c in realization.components],
        "attempts": realization.attempts,
        "subdivided": realization.subdivided,
    }
    if witness is not None and args.cycle is None:
        payload["witness_component"] = witness_component(realization, witness.alpha, witness.beta)
    _emit(payload, args, stdout)
    return EXIT_OK


def cmd_length(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> int:
    doc = _read_input(args.input, stdin)
    mc = doc.metric_complex
    alpha, index = _class_cocycle(doc, args)
    if args.series:
        series = length_series(mc, alpha, args.level)
        payload: Dict[str, Any] = {
            "values": series.values,
            "stable": series.stable,
            "kind": series.final.kind,
            "cycle": list(series.final.cycle),
            "class_index": index,
        }
    else:
        est = length_of_class(mc, alpha, level=args.level)
        payload = {"value": est.value, "kind": est.kind, "level": est.level, "cycle": list(est.cycle), "class_index": index}
    _emit(payload, args, stdout)
    return EXIT_OK


def cmd_systole(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> int:
    doc = _read_input(args.input, stdin)
    est = z2_systole(doc.metric_complex, level=args.level)
    payload = {
        "value": est.value,
        "kind": est.kind,
        "level": est.level,
        "cycle": list(est.cycle),
        "class_index": est.class_index,
    }
    _emit(payload, args, stdout)
    return EXIT_OK


def cmd_ball(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> int:
    doc = _read_input(args.input, stdin)
    mc = doc.metric_complex
    if not 0 <= args.center < mc.complex.vertex_count:
        raise SystolicError(
            "center is not a vertex", code="INVALID_PARAMETERS", details={"center": args.center}
        )
    refined = subdivide_to_level(mc, args.level).mc if args.level else mc
    graph = BallGraph(refined, args.steiner_points)
    brackets = ball_profile(graph, args.center, args.radii)
    payload = {
        "center": args.center,
        "level": args.level,
        "balls": [{"radius": b.radius, "lower": b.lower, "upper": b.upper, "target": 2 * b.radius**2} for b in brackets],
    }
    _emit(payload, args, stdout)
    return EXIT_OK


def _verify_document(
    doc: ParsedDocument, inequality: str, level: int, radii: Optional[Sequence[float]], cocycle: Optional[str]
) -> VerificationReport:
    alpha = _named_cochain(doc, cocycle, 1)
    report = verify(doc.metric_complex, inequality, level=level, radii=radii, alpha=alpha)
    return report.model_copy(update={"report_id": new_report_id(), "trace_id": new_trace_id()})


def _verify_file(job: Tuple[str, str, int, Optional[List[float]], Optional[str]]) -> Dict[str, Any]:
    path, inequality, level, radii, cocycle = job
    try:
        doc = parse_text(Path(path).read_text(encoding="utf-8"))
        report = _verify_document(doc, inequality, level, radii, cocycle)
    except SystolicError as exc:
        return {"file": path, "error": exc.to_payload()}
    return {"file": path, "verdict": report.verdict, "margin": report.margin, "report": report.model_dump()}


def cmd_verify(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> int:
    if args.all:
        files = sorted(str(p) for p in Path(args.all).glob("*.json"))
        jobs = [(path, args.inequality, args.level, args.radii, args.cocycle) for path in files]
        logger.info("batch_verify_started files=%s workers=%s", len(files), args.workers)
        if args.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                results = list(pool.map(_verify_file, jobs))
        else:
            results = [_verify_file(job) for job in jobs]
        _emit({"results": results}, args, stdout)
        if any("error" in r for r in results):
            return EXIT_ERROR
        if any(r["verdict"] == "inconclusive" for r in results):
            return EXIT_INCONCLUSIVE
        return EXIT_OK
    doc = _read_input(args.input, stdin)
    report = _verify_document(doc, args.inequality, args.level, args.radii, args.cocycle)
    _emit(report, args, stdout)
    return _verdict_exit(report.verdict)


def cmd_optimize(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> int:
    doc = _read_input(args.input, stdin)
    mc = doc.metric_complex
    config = OptimizerConfig.from_settings(
        budget=args.budget,
        seed=args.seed,
        level=args.level,
        scale=args.scale,
        epsilon=args.epsilon,
        temperature=args.temperature,
        strict_floors=args.strict_floors,
    )
    trace = optimize_metric(mc, config)
    if args.csv:
        Path(args.csv).write_text(trace.to_csv(), encoding="utf-8")
    summary = trace.to_summary().model_dump(exclude={"records"})
    summary["metric"] = metric_document(trace.best_metric(mc))
    _emit(summary, args, stdout)
    return EXIT_OK


def _generator_spec(args: argparse.Namespace) -> GeneratorSpec:
    try:
        return _parse_generator_spec(args)
    except ValidationError as exc:
        first = exc.errors()[0]
        pointer = "/" + "/".join(str(part) for part in first.get("loc", ()))
        raise SchemaError(first.get("msg", "invalid generator spec"), details={"pointer": pointer}) from exc


def _parse_generator_spec(args: argparse.Namespace) -> GeneratorSpec:
    if args.spec:
        return GeneratorSpec.model_validate_json(args.spec)
    params = GENERATOR_PARAMS.get(args.family)
    if params is None:
        raise SystolicError(
            "family needs --spec with operands", code="INVALID_PARAMETERS", details={"family": args.family}
        )
    if len(args.params) > len(params):
        raise SystolicError(
            "too many generator parameters",
            code="INVALID_PARAMETERS",
            details={"family": args.family, "expected": [name for name, _ in params]},
        )
    values: Dict[str, Any] = {"family": args.family}
    for (name, kind), raw in zip(params, args.params):
        try:
            values[name] = kind(raw)
        except ValueError as exc:
            raise SystolicError(
                "invalid generator parameter", code="INVALID_PARAMETERS", details={"parameter": name, "value": raw}
            ) from exc
    return GeneratorSpec(**values)


def cmd_generate(args: argparse.Namespace, stdin: TextIO, stdout: TextIO) -> int:
    mc = generate(_generator_spec(args))
    stdout.write(dumps(metric_document(mc), indent=None if args.compact else 2) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def _add_common(parser: argparse.ArgumentParser, *, level: bool = True) -> None:
    parser.add_argument("-i", "--input", default=None, help="complex document (default: stdin)")
    fmt = parser.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="output", action="store_const", const="json", help="JSON output (default)")
    fmt.add_argument("--text", dest="output", action="store_const", const="text", help="plain-text output")
    parser.set_defaults(output="json")
    if level:
        parser.add_argument("--level", type=int, default=settings.default_level, help="midpoint subdivision level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="systolic", description="Systolic geometry of simplicial 2-complexes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check simplicial structure")
    _add_common(p, level=False)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("homology", help="Z2 Betti numbers and bases")
    _add_common(p, level=False)
    p.set_defaults(handler=cmd_homology)

    p = sub.add_parser("cup-witness", help="find a,b with a∪b non-zero")
    _add_common(p, level=False)
    p.set_defaults(handler=cmd_cup_witness)

    p = sub.add_parser("realize", help="realize a 2-cycle by a closed surface")
    _add_common(p, level=False)
    p.add_argument("--cycle", default=None, help="name of a degree-2 cochain in the document")
    p.add_argument("--pairing", choices=("ordered", "random"), default="ordered")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_realize)

    for name, handler, help_text in (
        ("length", cmd_length, "length of a cohomology class"),
        ("systole", cmd_systole, "Z2-systole estimate"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(handler=handler)
        if name == "length":
            p.add_argument("--cocycle", default=None, help="name of a degree-1 cochain in the document")
            p.add_argument("--class-index", type=int, default=0, help="basis class when no cocycle is named")
            p.add_argument("--series", action="store_true", help="report every level up to --level")

    p = sub.add_parser("ball", help="area brackets of metric balls")
    _add_common(p)
    p.add_argument("--center", type=int, default=0)
    p.add_argument("--radii", type=float, nargs="+", required=True)
    p.add_argument("--steiner-points", type=int, default=settings.steiner_points)
    p.set_defaults(handler=cmd_ball)

    p = sub.add_parser("verify", help="check an inequality and report a verdict")
    p.add_argument("inequality", choices=("main", "ball-growth", "cover"))
    _add_common(p)
    p.add_argument("--radii", type=float, nargs="+", default=None)
    p.add_argument("--cocycle", default=None, help="degree-1 cochain defining the double cover")
    p.add_argument("--all", metavar="DIR", default=None, help="verify every *.json document in DIR")
    p.add_argument("--workers", type=int, default=settings.batch_workers)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("optimize", help="search for a small systolic ratio")
    _add_common(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--scale", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--strict-floors", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--csv", default=None, help="write the per-iteration trace as CSV")
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("generate", help="emit a standard complex")
    p.add_argument("family")
    p.add_argument("params", nargs="*")
    p.add_argument("--spec", default=None, help="full generator spec as JSON (wedge, disjoint_union, cone)")
    p.add_argument("--compact", action="store_true")
    p.set_defaults(handler=cmd_generate)
    return parser


def main(
    argv: Optional[Sequence[str]] = None,
    *,
    stdin: Optional[TextIO] = None,
    stdout: Optional[TextIO] = None,
    stderr: Optional[TextIO] = None,
) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    logging.basicConfig(level=settings.log_level.upper(), stream=stderr, format="%(levelname)s %(name)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for inconclusive verdicts.
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        return args.handler(args, stdin, stdout)
    except SystolicError as exc:
        logger.info("command_failed command=%s code=%s", args.command, exc.code)
        stderr.write(dumps({"error": exc.to_payload()}) + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
