"""Dataset files, splits, and configuration.

The wire format is a UTF-8 CSV with header ``id,y,y_hat,a,a_hat,score``.
Binary columns hold 0 or 1 (1 = positive class / group 1); ``a``, ``a_hat``
and ``score`` may be blank when unknown. Malformed rows are rejected with
their line number. Writing then reading reproduces records field for field.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import PredictionRecord
from .errors import InfeasibleSplit, InvalidParams, ParseError, SchemaError

COLUMNS = ("id", "y", "y_hat", "a", "a_hat", "score")
_REQUIRED = ("id", "y", "y_hat")


def _parse_binary(raw: str, column: str, line: int, required: bool) -> bool | None:
    raw = raw.strip() if raw is not None else ""
    if raw == "":
        if required:
            raise ParseError(line, f"column {column!r} must not be blank")
        return None
    if raw == "0":
        return False
    if raw == "1":
        return True
    raise ParseError(line, f"column {column!r} must be 0 or 1, got {raw!r}")


def read_dataset(path: str | Path) -> list[PredictionRecord]:
    """Parse a dataset CSV into prediction records."""
    path = Path(path)
    records: list[PredictionRecord] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, expected header {','.join(COLUMNS)}")
        missing = [c for c in _REQUIRED + ("a", "a_hat") if c not in reader.fieldnames]
        if set(_REQUIRED) - set(reader.fieldnames):
            raise SchemaError(
                f"{path}: missing required column(s) {sorted(set(_REQUIRED) - set(reader.fieldnames))}"
            )
        if "a" not in reader.fieldnames and "a_hat" not in reader.fieldnames:
            raise SchemaError(f"{path}: need at least one of columns 'a', 'a_hat'")
        for line, row in enumerate(reader, start=2):
            rid = (row.get("id") or "").strip()
            if not rid:
                raise ParseError(line, "column 'id' must not be blank")
            if rid in seen:
                raise ParseError(line, f"duplicate id {rid!r}")
            seen.add(rid)
            y = _parse_binary(row.get("y", ""), "y", line, required=True)
            y_hat = _parse_binary(row.get("y_hat", ""), "y_hat", line, required=True)
            a = _parse_binary(row.get("a", ""), "a", line, required=False)
            a_hat = _parse_binary(row.get("a_hat", ""), "a_hat", line, required=False)
            score_raw = (row.get("score") or "").strip()
            score: float | None = None
            if score_raw:
                try:
                    score = float(score_raw)
                except ValueError:
                    raise ParseError(line, f"column 'score' must be a decimal, got {score_raw!r}")
                if not np.isfinite(score) or score < 0.0 or score > 1.0:
                    raise ParseError(line, f"column 'score' must lie in [0, 1], got {score_raw!r}")
            if a is None and a_hat is None:
                raise ParseError(line, "record carries neither 'a' nor 'a_hat'")
            try:
                records.append(
                    PredictionRecord(id=rid, y=y, y_hat=y_hat, a=a, a_hat=a_hat, score=score)
                )
            except InvalidParams as exc:
                raise ParseError(line, str(exc))
    return records


def write_dataset(path: str | Path, records: list[PredictionRecord]) -> None:
    """Write records in the wire format; blank cells for absent fields."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.id,
                    int(r.y),
                    int(r.y_hat),
                    "" if r.a is None else int(r.a),
                    "" if r.a_hat is None else int(r.a_hat),
                    "" if r.score is None else repr(float(r.score)),
                ]
            )


@dataclass(frozen=True)
class SplitSpec:
    """Three-way partition request, by exact counts or by fractions.

    Counts must sum to the input size; fractions are apportioned by largest
    remainder so the parts are disjoint and exhaust the input.
    """

    counts: tuple[int, int, int] | None = None
    fractions: tuple[float, float, float] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if (self.counts is None) == (self.fractions is None):
            raise InvalidParams("give exactly one of counts or fractions")
        if self.counts is not None and any(c < 0 for c in self.counts):
            raise InvalidParams(f"counts must be nonnegative, got {self.counts}")
        if self.fractions is not None:
            f = self.fractions
            if any(x < 0 for x in f) or not np.isfinite(sum(f)):
                raise InvalidParams(f"fractions must be nonnegative, got {f}")
            if abs(sum(f) - 1.0) > 1e-9:
                raise InvalidParams(f"fractions must sum to 1, got {sum(f)}")

    def resolve(self, n: int) -> tuple[int, int, int]:
        if self.counts is not None:
            if sum(self.counts) != n:
                raise InfeasibleSplit(
                    f"counts {self.counts} sum to {sum(self.counts)}, input has {n} records"
                )
            return self.counts
        exact = [f * n for f in self.fractions]
        base = [int(np.floor(x)) for x in exact]
        leftover = n - sum(base)
        order = sorted(range(3), key=lambda i: (-(exact[i] - base[i]), i))
        for i in order[:leftover]:
            base[i] += 1
        return tuple(base)  # type: ignore[return-value]


def split_dataset(
    records: list[PredictionRecord], spec: SplitSpec
) -> tuple[list[PredictionRecord], list[PredictionRecord], list[PredictionRecord]]:
    """Seeded shuffle, then contiguous slices of the resolved sizes."""
    n = len(records)
    c1, c2, c3 = spec.resolve(n)
    perm = np.random.default_rng(spec.seed).permutation(n)
    shuffled = [records[i] for i in perm]
    return shuffled[:c1], shuffled[c1 : c1 + c2], shuffled[c1 + c2 :]


def load_config(path: str | Path) -> dict:
    """Read a JSON config mirroring CLI flags (flat mapping of flag names)."""
    with open(path, encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParams(f"config {path} is not valid JSON: {exc}")
    if not isinstance(config, dict):
        raise InvalidParams(f"config {path} must hold a JSON object")
    return config
