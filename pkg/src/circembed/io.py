"""File formats: edge lists, draw files (JSON lines), embeddings, manifests.

Draw files are line-delimited so interrupted runs stay usable up to the last
complete line. Floats survive a round trip exactly (shortest-repr JSON
encoding).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import warnings

import numpy as np

from .draws import DrawSet
from .errors import DataFormatError
from .model import Embedding, Graph

DRAWS_FORMAT = "circembed-draws"
EMBEDDING_FORMAT = "circembed-embedding"
FORMAT_VERSION = 1


def read_edge_list(path, *, largest_component: bool = False) -> Graph:
    """Parse a `<label> <label>` per line edge list.

    Blank lines and lines starting with '#' are ignored; duplicate edges are
    merged and self-loops dropped with a warning. Vertex indices follow first
    appearance. ``largest_component`` restricts the graph to its largest
    connected component.
    """
    index: dict[str, int] = {}
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split()
            if len(tokens) != 2:
                raise DataFormatError(
                    f"{path}:{lineno}: expected two vertex labels, got {len(tokens)}")
            u, v = tokens
            if u == v:
                warnings.warn(f"{path}:{lineno}: dropping self-loop on {u!r}")
                if u not in index:
                    index[u] = len(index)
                continue
            for lab in (u, v):
                if lab not in index:
                    index[lab] = len(index)
            edges.append((index[u], index[v]))
    if not index:
        raise DataFormatError(f"{path}: no vertices found")
    labels = [lab for lab, _ in sorted(index.items(), key=lambda kv: kv[1])]
    graph = Graph(len(index), edges, labels=labels)
    if largest_component:
        graph = graph.subgraph(graph.connected_components()[0])
    return graph


def write_edge_list(graph: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in graph.edge_array:
            fh.write(f"{graph.labels[u]} {graph.labels[v]}\n")


def write_draws(draws: DrawSet, path) -> None:
    """One JSON record per draw after a one-line header."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {"format": DRAWS_FORMAT, "version": FORMAT_VERSION,
                  "n_vertices": draws.n_vertices,
                  "labels": list(draws.labels) if draws.labels else None}
        fh.write(json.dumps(header) + "\n")
        for i in range(len(draws)):
            rec = {"chain": int(draws.chain[i]), "iteration": int(draws.iteration[i]),
                   "warmup": bool(draws.warmup[i]), "beta": float(draws.beta[i]),
                   "theta": draws.theta[i].tolist(), "kappa": draws.kappa[i].tolist(),
                   "log_posterior": float(draws.log_posterior[i])}
            fh.write(json.dumps(rec) + "\n")


def read_draws(path, *, allow_partial: bool = False) -> DrawSet:
    """Read a draw file; raises DataFormatError on version mismatch or truncation.

    ``allow_partial`` salvages complete records from an interrupted file.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
        complete_tail = True
    else:
        complete_tail = False  # file did not end with a newline
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: unreadable header: {exc}") from exc
    if not isinstance(header, dict) or header.get("format") != DRAWS_FORMAT:
        raise DataFormatError(f"{path}: not a draws file")
    if header.get("version") != FORMAT_VERSION:
        raise DataFormatError(
            f"{path}: unsupported format version {header.get('version')!r}")
    n = int(header["n_vertices"])
    labels = tuple(header["labels"]) if header.get("labels") else None

    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            is_last = lineno == len(lines)
            if is_last and not complete_tail and allow_partial:
                break
            raise DataFormatError(f"{path}:{lineno}: truncated or corrupt record") from exc
        records.append(rec)
    if records and not complete_tail and not allow_partial:
        raise DataFormatError(f"{path}: truncated file (missing final newline)")

    if not records:
        return DrawSet.empty(n, labels=labels)
    try:
        return DrawSet(
            theta=np.array([r["theta"] for r in records]),
            kappa=np.array([r["kappa"] for r in records]),
            beta=np.array([r["beta"] for r in records]),
            log_posterior=np.array([r["log_posterior"] for r in records]),
            chain=np.array([r["chain"] for r in records]),
            iteration=np.array([r["iteration"] for r in records]),
            warmup=np.array([r["warmup"] for r in records]),
            labels=labels)
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"{path}: malformed record: {exc}") from exc


def write_embedding(emb: Embedding, path, *, labels=None) -> None:
    payload = {"format": EMBEDDING_FORMAT, "version": FORMAT_VERSION,
               "labels": list(labels) if labels else None,
               "theta": emb.theta.tolist(), "kappa": emb.kappa.tolist(),
               "beta": emb.beta}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def read_embedding(path) -> Embedding:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: unreadable embedding file: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != EMBEDDING_FORMAT:
        raise DataFormatError(f"{path}: not an embedding file")
    if payload.get("version") != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported format version")
    try:
        return Embedding(np.array(payload["theta"]), np.array(payload["kappa"]),
                         float(payload["beta"]))
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"{path}: malformed embedding: {exc}") from exc


def sha256_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(manifest: dict, path) -> None:
    """Atomic JSON write (temp file + rename)."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: list[str], rows) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
