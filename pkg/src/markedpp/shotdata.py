"""Shot-chart CSV ingestion and serialization.

Schema (header row required):

    x,y,made,shot_type,distance,period,seconds_left,opp_playoff

with x,y in feet on the 50 x 35 court frame, made in {0,1}, shot_type
in {2,3}, period in {1..5}, opp_playoff in {0,1}. The distance column
may be blank or absent, in which case it is recomputed from the
coordinates. Rows outside the court window are dropped and counted;
malformed rows fail with their line number.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .court import COURT_DOMAIN, distance_to_basket
from .grid import atomic_writer
from .mark import MarkedPattern

REQUIRED_COLUMNS = ("x", "y", "made", "shot_type", "period",
                    "seconds_left", "opp_playoff")
ALL_COLUMNS = ("x", "y", "made", "shot_type", "distance", "period",
               "seconds_left", "opp_playoff")


class ShotCsvError(ValueError):
    """Malformed shot CSV content, carrying the offending line number."""


@dataclass
class LoadResult:
    pattern: MarkedPattern
    n_dropped: int


def _parse(value: str, kind, name: str, line: int, allowed=None):
    try:
        v = kind(value)
    except (TypeError, ValueError):
        raise ShotCsvError(
            f"line {line}: column {name!r} has invalid value {value!r}"
        ) from None
    if allowed is not None and v not in allowed:
        raise ShotCsvError(
            f"line {line}: column {name!r} must be one of {sorted(allowed)}, "
            f"got {value!r}")
    return v


def load_shot_csv(path) -> LoadResult:
    """Read and validate a shot chart; see the module docstring."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ShotCsvError("empty shot CSV")
        have = {c.strip() for c in reader.fieldnames}
        missing = [c for c in REQUIRED_COLUMNS if c not in have]
        if missing:
            raise ShotCsvError(f"shot CSV missing columns {missing}")
        has_distance = "distance" in have
        for line, raw in enumerate(reader, start=2):
            x = _parse(raw["x"], float, "x", line)
            y = _parse(raw["y"], float, "y", line)
            made = _parse(raw["made"], int, "made", line, {0, 1})
            st = _parse(raw["shot_type"], int, "shot_type", line, {2, 3})
            period = _parse(raw["period"], int, "period", line,
                            {1, 2, 3, 4, 5})
            secs = _parse(raw["seconds_left"], float, "seconds_left", line)
            opp = _parse(raw["opp_playoff"], int, "opp_playoff", line, {0, 1})
            dist = None
            if has_distance and raw.get("distance", "").strip() != "":
                dist = _parse(raw["distance"], float, "distance", line)
            rows.append((x, y, made, st, dist, period, secs, opp))
    if not rows:
        raise ShotCsvError("shot CSV has a header but no data rows")

    arr = np.array([(r[0], r[1]) for r in rows])
    inside = COURT_DOMAIN.contains(arr)
    n_dropped = int((~inside).sum())
    kept = [r for r, ok in zip(rows, inside) if ok]

    locs = np.array([(r[0], r[1]) for r in kept]).reshape(-1, 2)
    made = np.array([r[2] for r in kept], dtype=float)
    dist = np.array([
        r[4] if r[4] is not None else float(distance_to_basket([(r[0], r[1])])[0])
        for r in kept])
    meta = {
        "shot_type": np.array([r[3] for r in kept], dtype=float),
        "distance": dist,
        "period": np.array([r[5] for r in kept], dtype=float),
        "seconds_left": np.array([r[6] for r in kept], dtype=float),
        "opp_playoff": np.array([r[7] for r in kept], dtype=float),
    }
    pattern = MarkedPattern(locs, made, meta=meta)
    return LoadResult(pattern=pattern, n_dropped=n_dropped)


def write_shot_csv(pattern: MarkedPattern, path) -> None:
    """Serialize a pattern (with full meta) back to the schema."""
    meta = pattern.meta or {}
    needed = ("shot_type", "distance", "period", "seconds_left", "opp_playoff")
    missing = [k for k in needed if k not in meta]
    if missing:
        raise ValueError(f"pattern lacks meta fields {missing}")
    with atomic_writer(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(ALL_COLUMNS)
        for i in range(pattern.n):
            writer.writerow([
                repr(float(pattern.locations[i, 0])),
                repr(float(pattern.locations[i, 1])),
                int(pattern.marks[i]),
                int(meta["shot_type"][i]),
                repr(float(meta["distance"][i])),
                int(meta["period"][i]),
                repr(float(meta["seconds_left"][i])),
                int(meta["opp_playoff"][i]),
            ])
