"""File ingestion and artifact output.

Readers accept UTF-8 TSV with LF or CRLF endings.  Score tables carry a
header row naming the id column and score columns; networks are plain
two-column edge lists with '#' comments.  Writers emit deterministic
CSV: fixed headers, repr-based float formatting, no timestamps, so a
rerun with the same manifest produces byte-identical artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from typing import Iterable, Optional, Sequence

import numpy as np

from .types import (
    AlignmentReport,
    DataError,
    GeneTable,
    NetworkSet,
    make_gene_table,
)


def _open_text(path: str):
    return open(path, "r", encoding="utf-8", newline=None)


def read_scores(path: str) -> GeneTable:
    """Read a score table: header `id<TAB>col1<TAB>...`, one item per row."""
    ids: list[str] = []
    rows: list[list[float]] = []
    with _open_text(path) as fh:
        header = fh.readline()
        if not header:
            raise DataError(f"{path}: empty file")
        cols = header.rstrip("\r\n").split("\t")
        if len(cols) < 2:
            raise DataError(f"{path}:1: header must name an id column and at least one score")
        columns = tuple(cols[1:])
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != len(cols):
                raise DataError(
                    f"{path}:{lineno}: expected {len(cols)} fields, got {len(parts)}"
                )
            ids.append(parts[0])
            try:
                rows.append([float(v) for v in parts[1:]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric score: {exc}") from None
    if not ids:
        raise DataError(f"{path}: no data rows")
    try:
        return make_gene_table(ids, columns, np.array(rows, dtype=float))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def read_network_edges(path: str) -> list[tuple[str, str]]:
    """Read an edge list of `id1<TAB>id2` lines; '#' starts a comment."""
    edges: list[tuple[str, str]] = []
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].rstrip("\r\n").strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise DataError(f"{path}:{lineno}: expected `id1<TAB>id2`")
            edges.append((parts[0], parts[1]))
    return edges


def read_networks(
    paths: Sequence[str], table: GeneTable, names: Optional[Sequence[str]] = None
) -> tuple[NetworkSet, AlignmentReport]:
    """Ingest edge lists and project them onto the score-table universe.

    Node ids absent from the table are dropped (their edges with them)
    and counted in the returned AlignmentReport rather than failing:
    scores are mandatory for the likelihood, network info is optional
    per item.
    """
    if names is None:
        names = [os.path.splitext(os.path.basename(p))[0] for p in paths]
    index = {gid: i for i, gid in enumerate(table.ids)}
    adjacency = []
    connected, singleton, dropped_nodes, dropped_edges = [], [], [], []
    for path in paths:
        raw = read_network_edges(path)
        nbrs: list[set[int]] = [set() for _ in range(table.G)]
        missing: set[str] = set()
        n_dropped = 0
        for a, b in raw:
            ia, ib = index.get(a), index.get(b)
            if ia is None or ib is None:
                if ia is None:
                    missing.add(a)
                if ib is None:
                    missing.add(b)
                n_dropped += 1
                continue
            if ia == ib:
                continue
            nbrs[ia].add(ib)
            nbrs[ib].add(ia)
        adjacency.append(tuple(tuple(sorted(s)) for s in nbrs))
        c = sum(1 for s in nbrs if s)
        connected.append(c)
        singleton.append(table.G - c)
        dropped_nodes.append(len(missing))
        dropped_edges.append(n_dropped)
    nets = NetworkSet(tuple(names), tuple(adjacency))
    report = AlignmentReport(
        nets.names,
        tuple(connected),
        tuple(singleton),
        tuple(dropped_nodes),
        tuple(dropped_edges),
    )
    return nets, report


def read_labels(path: str, table: GeneTable) -> np.ndarray:
    """Read truth labels: `id<TAB>label` rows (header optional), labels 0/1."""
    values: dict[str, int] = {}
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected `id<TAB>label`")
            if lineno == 1 and parts[1] not in ("0", "1"):
                continue  # header row
            if parts[1] not in ("0", "1"):
                raise DataError(f"{path}:{lineno}: label must be 0 or 1, got {parts[1]!r}")
            values[parts[0]] = int(parts[1])
    out = np.zeros(table.G, dtype=np.int8)
    for i, gid in enumerate(table.ids):
        if gid not in values:
            raise DataError(f"{path}: no label for id {gid!r}")
        out[i] = values[gid]
    return out


def write_scores(path: str, table: GeneTable) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id\t" + "\t".join(table.columns) + "\n")
        for i, gid in enumerate(table.ids):
            fh.write(gid + "\t" + "\t".join(repr(float(v)) for v in table.scores[i]) + "\n")


def write_labels(path: str, ids: Sequence[str], labels: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id\tlabel\n")
        for gid, t in zip(ids, labels):
            fh.write(f"{gid}\t{int(t)}\n")


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Deterministic CSV: floats via repr (shortest round-trip form)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row]
            )


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(path: str, config: dict, inputs: Sequence[str], outputs: Sequence[str]) -> None:
    """Reproducibility manifest: resolved config, seed, input digests.

    Deliberately carries no timestamps or host info; identical runs must
    produce identical manifests.
    """
    payload = {
        "config": config,
        "inputs": {os.path.basename(p): sha256_file(p) for p in sorted(inputs)},
        "outputs": sorted(os.path.basename(p) for p in outputs),
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
