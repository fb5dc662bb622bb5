"""Model, sample, graph and matrix files.

Model files are JSON::

    {"p": 3, "terms": [{"set": [1, 2], "theta": 0.5}, ...]}

Omitted sets are zero; a missing empty-set record is filled in by
normalization.  Probability files use ``"prob"`` instead of ``"theta"`` and
must list every outcome.  Graph files are JSON with ``p`` and a list of
``{"i", "j", "weight"}`` edges.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .lattice import mask_of, nodes_of
from .model import GraphEstimate, ProbabilityVector, ThetaVector, normalize_theta, pairwise_graph
from .sampler import as_samples


def _load_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    return doc


def model_to_dict(model: ThetaVector | ProbabilityVector) -> dict:
    key = "theta" if isinstance(model, ThetaVector) else "prob"
    terms = []
    for m in range(model.values.size):
        value = float(model.values[m])
        if value != 0 or m == 0:
            terms.append({"set": list(nodes_of(m)), key: value})
    return {"p": model.p, "terms": terms}


def model_from_dict(doc: dict) -> ThetaVector | ProbabilityVector:
    try:
        p = int(doc["p"])
        terms = doc["terms"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("model documents need integer 'p' and a 'terms' list") from exc
    if p < 1:
        raise ValidationError("p must be at least 1")
    if not terms:
        raise ValidationError("model has no terms")
    is_theta = "theta" in terms[0]
    if any(("theta" in t) == ("prob" in t) or ("theta" in t) != is_theta for t in terms):
        raise ValidationError("each term needs exactly one of 'theta' or 'prob', used consistently")
    values = np.zeros(1 << p)
    seen = set()
    for t in terms:
        nodes = t.get("set")
        if not isinstance(nodes, list) or any(not isinstance(i, int) or not 1 <= i <= p for i in nodes):
            raise ValidationError(f"bad set {nodes!r} for p={p}")
        m = mask_of(nodes)
        if m in seen:
            raise ValidationError(f"set {sorted(nodes)} listed twice")
        seen.add(m)
        values[m] = float(t["theta" if is_theta else "prob"])
    if not is_theta:
        return ProbabilityVector(values)
    th = ThetaVector(values)
    return th if 0 in seen else normalize_theta(th)[0]


def write_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def read_model(path) -> ThetaVector | ProbabilityVector:
    return model_from_dict(_load_json(path))


def write_samples(data, path) -> None:
    x = as_samples(data)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i}" for i in range(1, x.shape[1] + 1)])
        writer.writerows(x.tolist())


def read_samples(path) -> np.ndarray:
    """Read a 0/1 CSV; a first row that is not all integers is taken as a header."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if rows and not all(c.strip().lstrip("-").isdigit() for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise ValidationError(f"{path}: no observations")
    if len({len(r) for r in rows}) != 1:
        raise ValidationError(f"{path}: rows have different lengths")
    try:
        x = np.array([[int(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValidationError(f"{path}: non-integer entry ({exc})") from exc
    return as_samples(x)


def graph_to_dict(g: GraphEstimate, labels: Sequence[str] | None = None) -> dict:
    doc = {"p": g.p, "edges": [{"i": i, "j": j, "weight": w} for (i, j), w in g.weights.items()]}
    if labels:
        doc["labels"] = list(labels)
    return doc


def graph_from_dict(doc: dict) -> GraphEstimate:
    try:
        return GraphEstimate(int(doc["p"]), {(int(e["i"]), int(e["j"])): float(e["weight"]) for e in doc["edges"]})
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("graph documents need 'p' and 'edges' with i, j, weight") from exc


def write_graph_json(g: GraphEstimate, path, labels=None) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g, labels), indent=2) + "\n")


def read_graph(path) -> GraphEstimate:
    """Load a graph JSON file, or the pairwise graph of a theta model file."""
    doc = _load_json(path)
    if "edges" in doc:
        return graph_from_dict(doc)
    model = model_from_dict(doc)
    if not isinstance(model, ThetaVector):
        raise ValidationError(f"{path}: a probability file does not define a graph directly")
    return pairwise_graph(model, tol=0.0)


def _check_labels(p: int, labels: Sequence[str] | None) -> list[str]:
    if labels is None:
        return [str(i) for i in range(1, p + 1)]
    labels = list(labels)
    if len(labels) != p or len(set(labels)) != p:
        raise ValidationError(f"need {p} distinct labels, got {labels}")
    return labels


def export_graph(g: GraphEstimate, fmt: str = "dot", labels: Sequence[str] | None = None) -> str:
    """Render as Graphviz ``dot`` or as ``edge-csv`` (``i,j,weight``, one row per edge)."""
    if fmt == "edge-csv":
        lines = ["i,j,weight"] + [f"{i},{j},{w!r}" for (i, j), w in g.weights.items()]
        return "\n".join(lines) + "\n"
    if fmt != "dot":
        raise ValidationError(f"unknown graph format {fmt!r}")
    names = _check_labels(g.p, labels)
    out = ["graph G {"]
    out += [f'  "{name}";' for name in names]
    out += [f'  "{names[i - 1]}" -- "{names[j - 1]}" [label="{w!r}"];' for (i, j), w in g.weights.items()]
    out.append("}")
    return "\n".join(out) + "\n"


def parse_edge_csv(text: str, p: int) -> GraphEstimate:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["i", "j", "weight"]:
        raise ValidationError("edge CSV needs the header i,j,weight")
    try:
        return GraphEstimate(p, {(int(r["i"]), int(r["j"])): float(r["weight"]) for r in reader})
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad edge row: {exc}") from exc


def write_matrix_csv(matrix, path) -> None:
    m = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows([[repr(float(v)) for v in row] for row in m])
