"""Listening-history ingestion and instance serialization.

Input is the minimal triple shape `user, artist, count` (tab or comma
separated, optional header). Aggregation keys stay sparse until the final
densification, which refuses to materialize matrices above a cell budget.
Instances round-trip through a small versioned JSON document that carries
the id tables alongside the weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import Instance, validate

DOCUMENT_VERSION = 1
DEFAULT_CELL_BUDGET = 50_000_000


class ParseError(ValueError):
    def __init__(self, line_no: int, text: str, reason: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {reason} in {text!r}")


class SchemaError(ValueError):
    """An instance document is malformed or carries non-finite weights."""


class EmptyAfterFilterError(ValueError):
    """Filtering removed every user or every artist."""


class CellBudgetError(ValueError):
    """Densifying would allocate more matrix cells than allowed."""


@dataclass(frozen=True)
class TripleRecord:
    user_id: str
    artist_id: str
    count: float


@dataclass(frozen=True)
class IngestResult:
    instance: Instance
    user_ids: tuple
    artist_ids: tuple


def _split(line: str):
    sep = "\t" if "\t" in line else ","
    return [part.strip() for part in line.split(sep)]


def read_triples(lines):
    """Yield TripleRecords from an iterable of text lines.

    The first non-blank line may be a header; it is skipped when its third
    field does not parse as a number. Blank lines are ignored everywhere.
    """
    first_data_seen = False
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        parts = _split(line)
        if len(parts) != 3:
            raise ParseError(line_no, line, f"expected 3 fields, got {len(parts)}")
        user, artist, count_text = parts
        try:
            count = float(count_text)
        except ValueError:
            if not first_data_seen:
                first_data_seen = True  # header row
                continue
            raise ParseError(line_no, line, f"bad count {count_text!r}")
        first_data_seen = True
        if not user or not artist:
            raise ParseError(line_no, line, "empty id")
        if not math.isfinite(count) or count < 0:
            raise ParseError(line_no, line, f"count must be finite and >= 0")
        yield TripleRecord(user, artist, count)


def ingest_triples(
    records,
    alpha: float = 1.0,
    min_user_total: float = 0.0,
    top_artists: int | None = None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> IngestResult:
    """Aggregate triples into a validated instance plus id tables.

    Duplicate (user, artist) pairs sum. Ordering of both tables follows
    first appearance in the stream. With top_artists set, only the
    highest-total columns survive (ties keep the earlier artist), and user
    totals are re-derived over the surviving columns before the
    min_user_total cut. Users must end with positive total.
    """
    by_user: dict = {}
    artist_order: dict = {}
    for rec in records:
        row = by_user.setdefault(rec.user_id, {})
        row[rec.artist_id] = row.get(rec.artist_id, 0.0) + rec.count
        if rec.artist_id not in artist_order:
            artist_order[rec.artist_id] = len(artist_order)

    artists = list(artist_order)
    if top_artists is not None and top_artists < len(artists):
        totals = {a: 0.0 for a in artists}
        for row in by_user.values():
            for a, c in row.items():
                totals[a] += c
        ranked = sorted(artists, key=lambda a: (-totals[a], artist_order[a]))
        keep = set(ranked[:top_artists])
        artists = [a for a in artists if a in keep]

    kept_artists = set(artists)
    users = []
    for u, row in by_user.items():
        total = sum(c for a, c in row.items() if a in kept_artists)
        if total > 0 and total >= min_user_total:
            users.append(u)

    if not users or not artists:
        raise EmptyAfterFilterError(
            f"{len(users)} users x {len(artists)} artists left after filtering"
        )
    if len(users) * len(artists) > cell_budget:
        raise CellBudgetError(
            f"{len(users)} x {len(artists)} cells exceed the budget {cell_budget}"
        )

    col = {a: j for j, a in enumerate(artists)}
    w = np.zeros((len(users), len(artists)))
    for i, u in enumerate(users):
        for a, c in by_user[u].items():
            if a in kept_artists:
                w[i, col[a]] = c
    instance = Instance(w, alpha)
    validate(instance)
    return IngestResult(instance, tuple(users), tuple(artists))


def default_ids(instance: Instance):
    users = tuple(f"u{i}" for i in range(instance.n_users))
    artists = tuple(f"a{j}" for j in range(instance.n_artists))
    return users, artists


def save_document(path, instance: Instance, user_ids=None, artist_ids=None) -> None:
    """Write the versioned JSON document for an instance."""
    if user_ids is None or artist_ids is None:
        gen_users, gen_artists = default_ids(instance)
        user_ids = user_ids or gen_users
        artist_ids = artist_ids or gen_artists
    if len(user_ids) != instance.n_users or len(artist_ids) != instance.n_artists:
        raise SchemaError("id table lengths do not match the weight matrix")
    doc = {
        "version": DOCUMENT_VERSION,
        "alpha": instance.alpha,
        "user_ids": list(user_ids),
        "artist_ids": list(artist_ids),
        "weights": instance.weights.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_document(path) -> IngestResult:
    """Read a JSON instance document back; inverse of save_document."""
    with open(path) as fh:
        try:
            doc = json.load(fh, parse_constant=_reject_constant)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("document root must be an object")
    if doc.get("version") != DOCUMENT_VERSION:
        raise SchemaError(f"unsupported document version {doc.get('version')!r}")
    for key in ("alpha", "user_ids", "artist_ids", "weights"):
        if key not in doc:
            raise SchemaError(f"missing field {key!r}")
    try:
        w = np.array(doc["weights"], dtype=float)
        alpha = float(doc["alpha"])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad numeric payload: {exc}") from exc
    if w.ndim != 2:
        raise SchemaError(f"weights must be a matrix, got ndim {w.ndim}")
    if not np.all(np.isfinite(w)):
        raise SchemaError("weights must be finite")
    users = tuple(str(u) for u in doc["user_ids"])
    artists = tuple(str(a) for a in doc["artist_ids"])
    if len(users) != w.shape[0] or len(artists) != w.shape[1]:
        raise SchemaError("id table lengths do not match the weight matrix")
    instance = Instance(w, alpha)
    validate(instance)
    return IngestResult(instance, users, artists)


def _reject_constant(name: str):
    raise SchemaError(f"non-finite literal {name} is not allowed")
