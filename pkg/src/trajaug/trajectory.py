"""Trajectory data model and CSV ingestion.

A trajectory is a time-stamped sequence of (latitude, longitude,
altitude) states for a single flight.  CSV files use the header
``flight_id,t,lat,lon,alt`` with ``t`` as float seconds; lines starting
with ``#`` are treated as comments.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

CSV_FIELDS = ("flight_id", "t", "lat", "lon", "alt")

MIN_ALT_FT = -1500.0


@dataclass(frozen=True)
class TrajectoryPoint:
    """One aircraft state: time (s), latitude (deg), longitude (deg), altitude (ft)."""

    t: float
    lat: float
    lon: float
    alt: float

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise DataError(f"timestamp must be finite, got {self.t}")
        if not -90.0 <= self.lat <= 90.0:
            raise DataError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise DataError(f"longitude {self.lon} outside [-180, 180]")
        if not (math.isfinite(self.alt) and self.alt >= MIN_ALT_FT):
            raise DataError(f"altitude {self.alt} ft below {MIN_ALT_FT} or non-finite")


@dataclass(frozen=True)
class Trajectory:
    """An ordered flight track with strictly increasing timestamps."""

    flight_id: str
    points: tuple[TrajectoryPoint, ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise DataError(
                f"trajectory {self.flight_id!r} needs >= 2 points, got {len(self.points)}"
            )
        times = [p.t for p in self.points]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DataError(f"trajectory {self.flight_id!r} timestamps not strictly increasing")

    def __len__(self):
        return len(self.points)

    @property
    def duration(self) -> float:
        return self.points[-1].t - self.points[0].t

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (t, features) with features shaped (3, n) as lat/lon/alt rows."""
        t = np.array([p.t for p in self.points], dtype=np.float64)
        feats = np.array(
            [[p.lat for p in self.points],
             [p.lon for p in self.points],
             [p.alt for p in self.points]],
            dtype=np.float64,
        )
        return t, feats

    @classmethod
    def from_arrays(cls, flight_id: str, t, lat, lon, alt) -> "Trajectory":
        pts = tuple(
            TrajectoryPoint(float(ti), float(la), float(lo), float(al))
            for ti, la, lo, al in zip(t, lat, lon, alt)
        )
        return cls(flight_id, pts)


def read_csv(path) -> list[Trajectory]:
    """Parse a trajectory CSV into one Trajectory per distinct flight_id.

    Points are sorted by time; duplicate timestamps within a flight keep
    the first record.  Malformed rows raise a DataError naming the line.
    """
    by_flight: dict[str, list[TrajectoryPoint]] = {}
    order: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        header = None
        n_rows = 0
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            row = next(csv.reader([line]))
            if header is None:
                header = [c.strip() for c in row]
                missing = [c for c in CSV_FIELDS if c not in header]
                if missing:
                    raise DataError(f"{path}: header missing columns {missing}")
                idx = {c: header.index(c) for c in CSV_FIELDS}
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                fid = row[idx["flight_id"]]
                point = TrajectoryPoint(
                    t=float(row[idx["t"]]),
                    lat=float(row[idx["lat"]]),
                    lon=float(row[idx["lon"]]),
                    alt=float(row[idx["alt"]]),
                )
            except (ValueError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if fid not in by_flight:
                by_flight[fid] = []
                order.append(fid)
            by_flight[fid].append(point)
            n_rows += 1
    if n_rows == 0:
        raise DataError(f"{path}: no trajectory rows")

    trajs = []
    for fid in order:
        pts = sorted(by_flight[fid], key=lambda p: p.t)
        deduped = [pts[0]]
        for p in pts[1:]:
            if p.t != deduped[-1].t:  # duplicate timestamps: keep first
                deduped.append(p)
        trajs.append(Trajectory(fid, tuple(deduped)))
    return trajs


def write_csv(trajs, path, comments=()):
    """Write trajectories in the standard CSV schema.

    Values use shortest round-trip float formatting so read_csv recovers
    them exactly.  ``comments`` become leading ``#`` lines.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(CSV_FIELDS) + "\n")
        for traj in trajs:
            for p in traj.points:
                fh.write(
                    f"{traj.flight_id},{p.t!r},{p.lat!r},{p.lon!r},{p.alt!r}\n"
                )
