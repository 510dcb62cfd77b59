"""JSON documents for complexes, metrics, cochains, reports and optimizer traces."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Mapping, Optional

from pydantic import ValidationError

from app.complex_core import Complex2, MetricComplex, PLMetric, check_metric, validate
from app.errors import SchemaError
from app.models.documents import ComplexDocument
from app.util.hashing import digest
from app.z2_algebra import Z2Vector


def _pointer(loc: Iterable[Any]) -> str:
    return "/" + "/".join(str(part) for part in loc)


def format_length(value: float) -> str:
    # 17 significant digits round-trip every double exactly.
    return format(float(value), ".17g")


@dataclass(frozen=True)
class ParsedDocument:
    complex: Complex2
    metric: Optional[PLMetric] = None
    cochains: Dict[str, Z2Vector] = field(default_factory=dict)

    @property
    def metric_complex(self) -> MetricComplex:
        if self.metric is None:
            raise SchemaError("document has no lengths", details={"pointer": "/lengths"})
        return MetricComplex(self.complex, self.metric)


def loads(text: str) -> Dict[str, Any]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(
            "malformed JSON", details={"pointer": "", "line": exc.lineno, "column": exc.colno, "reason": exc.msg}
        ) from exc
    if not isinstance(data, dict):
        raise SchemaError("document must be a JSON object", details={"pointer": ""})
    return data


def parse_document(data: Mapping[str, Any]) -> ParsedDocument:
    """Validate a complex document and build its complex, metric and named cochains."""
    try:
        doc = ComplexDocument.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise SchemaError(
            first.get("msg", "invalid document"),
            details={"pointer": _pointer(first.get("loc", ())), "type": first.get("type")},
        ) from exc

    complex_ = Complex2(doc.vertices, tuple(doc.edges), tuple(doc.triangles))
    validate(complex_, check_connectivity=False).raise_for_error()

    metric = None
    if doc.lengths is not None:
        values = []
        for idx, raw in enumerate(doc.lengths):
            try:
                value = float(raw)
            except ValueError as exc:
                raise SchemaError(
                    "length is not a decimal number", details={"pointer": f"/lengths/{idx}", "value": raw}
                ) from exc
            if not math.isfinite(value):
                raise SchemaError("length must be finite", details={"pointer": f"/lengths/{idx}", "value": raw})
            values.append(value)
        metric = PLMetric(tuple(values))
        check_metric(complex_, metric)

    cochains: Dict[str, Z2Vector] = {}
    for name, cochain in doc.cochains.items():
        size = complex_.simplex_count(cochain.degree)
        for pos, idx in enumerate(cochain.support):
            if not 0 <= idx < size:
                raise SchemaError(
                    "cochain support index out of range",
                    details={"pointer": f"/cochains/{name}/support/{pos}", "value": idx, "size": size},
                )
        cochains[name] = Z2Vector.from_support(complex_, cochain.degree, cochain.support)
    return ParsedDocument(complex_, metric, cochains)


def parse_text(text: str) -> ParsedDocument:
    return parse_document(loads(text))


def complex_document(
    complex_: Complex2,
    metric: Optional[PLMetric] = None,
    cochains: Optional[Mapping[str, Z2Vector]] = None,
) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "vertices": complex_.vertex_count,
        "edges": [list(e) for e in complex_.edges],
        "triangles": [list(t) for t in complex_.triangles],
    }
    if metric is not None:
        doc["lengths"] = [format_length(x) for x in metric.lengths]
    if cochains:
        doc["cochains"] = {
            name: {"degree": vec.degree, "support": vec.support} for name, vec in sorted(cochains.items())
        }
    return doc


def metric_document(mc: MetricComplex, cochains: Optional[Mapping[str, Z2Vector]] = None) -> Dict[str, Any]:
    return complex_document(mc.complex, mc.metric, cochains)


def dumps(doc: Mapping[str, Any], *, indent: Optional[int] = None) -> str:
    return json.dumps(doc, indent=indent, sort_keys=True, ensure_ascii=False)


def complex_hash(complex_: Complex2) -> str:
    return digest(complex_document(complex_))


def metric_hash(metric: PLMetric) -> str:
    return digest([format_length(x) for x in metric.lengths])


def trace_csv(records: Iterable[Mapping[str, Any]]) -> str:
    """CSV with columns iteration, ratio, accepted; infeasible candidates have an empty ratio."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["iteration", "ratio", "accepted"])
    for record in records:
        ratio = record.get("ratio")
        writer.writerow(
            [record["iteration"], "" if ratio is None else format_length(ratio), int(bool(record["accepted"]))]
        )
    return buffer.getvalue()
