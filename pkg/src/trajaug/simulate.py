"""Toy terminal-airspace simulator.

Generates arrival trajectories with a known structure: aircraft enter at
one of a few published entry points on the airspace boundary, fly to a
merge fix, pass the Final Approach Fix (FAF), and land at the airport in
the center.  Optional radar-vectoring doglegs and additive Gaussian noise
provide within-pattern variability.  Everything is deterministic under
the configured seed, with one independent random stream per trajectory.

Geometry uses a flat-earth approximation around the airspace center
(east-west degrees scaled by cos(latitude)), adequate for a toy region a
few tens of nautical miles across.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .trajectory import Trajectory

KT_TO_NM_PER_S = 1.0 / 3600.0


def latlon_to_xy_nm(lat, lon, center):
    """Project degrees to local NM east/north coordinates about center."""
    clat, clon = center
    x = (np.asarray(lon) - clon) * 60.0 * math.cos(math.radians(clat))
    y = (np.asarray(lat) - clat) * 60.0
    return x, y


def xy_nm_to_latlon(x, y, center):
    clat, clon = center
    lat = clat + np.asarray(y) / 60.0
    lon = clon + np.asarray(x) / (60.0 * math.cos(math.radians(clat)))
    return lat, lon


def horizontal_nm(lat1, lon1, lat2, lon2, center):
    x1, y1 = latlon_to_xy_nm(lat1, lon1, center)
    x2, y2 = latlon_to_xy_nm(lat2, lon2, center)
    return np.hypot(x1 - x2, y1 - y2)


@dataclass(frozen=True)
class AirspaceSpec:
    """Fixed geometry of the toy terminal area.

    Entry points sit on (or near) the boundary circle; the FAF lies on
    the extended runway centerline inside the circle; the airport is at
    the center.  pattern_weights gives the arrival probability of each
    entry point.
    """

    center: tuple[float, float]
    radius_nm: float
    entry_points: tuple[tuple[float, float, float], ...]
    faf: tuple[float, float, float]
    runway_heading_deg: float
    pattern_weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.entry_points) != len(self.pattern_weights):
            raise DataError("one pattern weight per entry point required")
        if abs(sum(self.pattern_weights) - 1.0) > 1e-9:
            raise DataError(f"pattern_weights sum to {sum(self.pattern_weights)}, expected 1")
        if any(w < 0 for w in self.pattern_weights):
            raise DataError("pattern_weights must be non-negative")
        faf_dist = float(horizontal_nm(self.faf[0], self.faf[1], *self.center, self.center))
        if faf_dist >= self.radius_nm:
            raise DataError("FAF must lie inside the boundary circle")
        for i, (lat, lon, _alt) in enumerate(self.entry_points):
            d = float(horizontal_nm(lat, lon, *self.center, self.center))
            if not 0.5 * self.radius_nm <= d <= 1.5 * self.radius_nm:
                raise DataError(f"entry point {i} is {d:.1f} NM out, not near the boundary")

    def entry_xy(self):
        pts = np.asarray(self.entry_points)
        x, y = latlon_to_xy_nm(pts[:, 0], pts[:, 1], self.center)
        return np.stack([x, y], axis=1)

    def faf_xy(self):
        x, y = latlon_to_xy_nm(self.faf[0], self.faf[1], self.center)
        return float(x), float(y)


@dataclass(frozen=True)
class SimConfig:
    """Knobs for one simulation run."""

    n_trajectories: int = 500
    dt: float = 4.0
    noise_std: tuple[float, float, float] = (0.0015, 0.0015, 40.0)
    seed: int = 0
    vector_prob: float = 0.3

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise DataError("n_trajectories must be >= 1")
        if any(s < 0 for s in self.noise_std):
            raise DataError("noise_std must be non-negative")
        if not 0.0 <= self.vector_prob <= 1.0:
            raise DataError("vector_prob must be a probability")


def default_airspace() -> AirspaceSpec:
    """Three-entry toy terminal area, ~8.5 NM radius, southern approach.

    Entry bearings are chosen so every route (including doglegs) fits a
    64-frame sequence at the standard 6 s resampling rate.
    """
    center = (37.0, 127.0)

    def on_circle(bearing_deg, dist_nm, alt):
        b = math.radians(bearing_deg)
        lat, lon = xy_nm_to_latlon(dist_nm * math.sin(b), dist_nm * math.cos(b), center)
        return (float(lat), float(lon), alt)

    radius = 8.5
    return AirspaceSpec(
        center=center,
        radius_nm=radius,
        entry_points=(
            on_circle(40.0, radius, 7000.0),
            on_circle(245.0, radius, 6000.0),
            on_circle(280.0, radius, 7000.0),
        ),
        faf=on_circle(160.0, 3.5, 1600.0),
        runway_heading_deg=340.0,
        pattern_weights=(0.5, 0.3, 0.2),
    )


# -- smoothed-path construction ------------------------------------------

def _blend_corners(waypoints, blend_nm):
    """Replace interior corners with tangent circular arcs.

    Returns a list of path segments (straights and arcs) plus the
    path-length coordinate assigned to each input waypoint, used to
    anchor the altitude profile.
    """
    wp = [np.asarray(p, dtype=np.float64) for p in waypoints]
    segments = []  # ("line", p0, p1) | ("arc", center, r, a0, sweep)
    chainage = [0.0]
    s = 0.0
    cursor = wp[0]
    for j in range(1, len(wp) - 1):
        v_in = wp[j] - wp[j - 1]
        v_out = wp[j + 1] - wp[j]
        len_in = np.linalg.norm(wp[j] - cursor)
        len_out = np.linalg.norm(v_out)
        u_in = v_in / np.linalg.norm(v_in)
        u_out = v_out / len_out
        cross = u_in[0] * u_out[1] - u_in[1] * u_out[0]
        dot = float(np.clip(u_in @ u_out, -1.0, 1.0))
        theta = math.acos(dot)
        cut = min(blend_nm[j], 0.45 * len_in, 0.45 * len_out)
        if theta < 1e-6 or cut < 1e-6:
            seg_end = wp[j]
            segments.append(("line", cursor, seg_end))
            s += np.linalg.norm(seg_end - cursor)
            chainage.append(s)
            cursor = seg_end
            continue
        r = cut / math.tan(theta / 2.0)
        arc_start = wp[j] - u_in * cut
        arc_end = wp[j] + u_out * cut
        # arc center is offset perpendicular to the incoming leg
        n_in = np.array([-u_in[1], u_in[0]]) * (1.0 if cross > 0 else -1.0)
        arc_center = arc_start + n_in * r
        a0 = math.atan2(arc_start[1] - arc_center[1], arc_start[0] - arc_center[0])
        sweep = theta * (1.0 if cross > 0 else -1.0)
        segments.append(("line", cursor, arc_start))
        s += np.linalg.norm(arc_start - cursor)
        segments.append(("arc", arc_center, r, a0, sweep))
        chainage.append(s + r * theta / 2.0)  # waypoint anchored mid-arc
        s += r * theta
        cursor = arc_end
    segments.append(("line", cursor, wp[-1]))
    s += np.linalg.norm(wp[-1] - cursor)
    chainage.append(s)
    return segments, np.array(chainage)


def _path_position(segments, s_query):
    """Point on the segment chain at path-length s (vectorized)."""
    lengths = []
    for seg in segments:
        if seg[0] == "line":
            lengths.append(float(np.linalg.norm(seg[2] - seg[1])))
        else:
            _, _c, r, _a0, sweep = seg
            lengths.append(abs(sweep) * r)
    bounds = np.concatenate([[0.0], np.cumsum(lengths)])
    total = bounds[-1]
    s_query = np.clip(s_query, 0.0, total)
    idx = np.clip(np.searchsorted(bounds, s_query, side="right") - 1, 0, len(segments) - 1)
    out = np.empty((s_query.size, 2))
    for i, (si, k) in enumerate(zip(np.atleast_1d(s_query), np.atleast_1d(idx))):
        seg = segments[k]
        local = si - bounds[k]
        if seg[0] == "line":
            p0, p1 = seg[1], seg[2]
            seg_len = max(lengths[k], 1e-12)
            out[i] = p0 + (p1 - p0) * (local / seg_len)
        else:
            _, c, r, a0, sweep = seg
            ang = a0 + math.copysign(local / r, sweep)
            out[i] = c + r * np.array([math.cos(ang), math.sin(ang)])
    return out


_ENROUTE_SPEED_KT = 210.0
_APPROACH_SPEED_KT = 170.0
_FINAL_SPEED_KT = 140.0
_MERGE_DIST_NM = 5.5
_MERGE_ALT_FT = 3000.0
_RUNWAY_ALT_FT = 150.0
_CORNER_BLEND_NM = 1.5
_FAF_BLEND_NM = 0.25


def _build_route(spec: AirspaceSpec, entry_idx: int, dogleg):
    """Waypoints (xy NM), altitudes, per-leg speeds, and blend radii."""
    entry = spec.entry_xy()[entry_idx]
    entry_alt = spec.entry_points[entry_idx][2]
    fx, fy = spec.faf_xy()
    faf = np.array([fx, fy])
    faf_alt = spec.faf[2]
    # merge fix on the extended final approach course
    merge = faf * (_MERGE_DIST_NM / np.linalg.norm(faf))
    runway = np.zeros(2)

    waypoints = [entry, merge, faf, runway]
    alts = [entry_alt, _MERGE_ALT_FT, faf_alt, _RUNWAY_ALT_FT]
    speeds = [_ENROUTE_SPEED_KT, _APPROACH_SPEED_KT, _FINAL_SPEED_KT]
    blends = [0.0, _CORNER_BLEND_NM, _FAF_BLEND_NM, 0.0]

    if dogleg is not None:
        frac, offset = dogleg
        base = entry + (merge - entry) * frac
        leg = merge - entry
        perp = np.array([-leg[1], leg[0]]) / np.linalg.norm(leg)
        waypoints.insert(1, base + perp * offset)
        alts.insert(1, entry_alt + (_MERGE_ALT_FT - entry_alt) * frac)
        speeds.insert(0, _ENROUTE_SPEED_KT)
        blends.insert(1, _CORNER_BLEND_NM)
    return waypoints, alts, speeds, blends


def _simulate_one(spec: AirspaceSpec, cfg: SimConfig, rng: np.random.Generator, fid: str):
    weights = np.asarray(spec.pattern_weights)
    entry_idx = int(np.searchsorted(np.cumsum(weights), rng.random(), side="right"))
    entry_idx = min(entry_idx, len(weights) - 1)

    dogleg = None
    if rng.random() < cfg.vector_prob:
        dogleg = (rng.uniform(0.4, 0.6), rng.uniform(2.0, 3.5) * (1 if rng.random() < 0.5 else -1))

    waypoints, alts, speeds, blends = _build_route(spec, entry_idx, dogleg)
    segments, chainage = _blend_corners(waypoints, blends)
    total_len = chainage[-1]

    # time parameterization: constant speed on each inter-waypoint stretch
    leg_s = np.diff(chainage)
    leg_v = np.asarray(speeds) * KT_TO_NM_PER_S
    leg_t = leg_s / leg_v
    t_bounds = np.concatenate([[0.0], np.cumsum(leg_t)])
    total_t = t_bounds[-1]

    t = np.arange(0.0, total_t, cfg.dt)
    if total_t - t[-1] > 1e-9:
        t = np.append(t, total_t)
    leg_idx = np.clip(np.searchsorted(t_bounds, t, side="right") - 1, 0, len(leg_t) - 1)
    s = chainage[leg_idx] + leg_v[leg_idx] * (t - t_bounds[leg_idx])
    s = np.minimum(s, total_len)

    xy = _path_position(segments, s)
    alt = np.interp(s, chainage, alts)

    lat, lon = xy_nm_to_latlon(xy[:, 0], xy[:, 1], spec.center)
    if any(sd > 0 for sd in cfg.noise_std):
        lat = lat + rng.normal(0.0, cfg.noise_std[0], lat.shape)
        lon = lon + rng.normal(0.0, cfg.noise_std[1], lon.shape)
        alt = alt + rng.normal(0.0, cfg.noise_std[2], alt.shape)
        alt = np.maximum(alt, 0.0)
    return Trajectory.from_arrays(fid, t, lat, lon, alt), entry_idx


def simulate(spec: AirspaceSpec, cfg: SimConfig) -> list[Trajectory]:
    """Simulate cfg.n_trajectories arrivals; deterministic under cfg.seed."""
    entry_xy = spec.entry_xy()
    fx, fy = spec.faf_xy()
    for i, (ex, ey) in enumerate(entry_xy):
        if math.hypot(ex - fx, ey - fy) < 0.1:
            raise DataError(f"degenerate spec: entry point {i} coincides with the FAF")
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trajectories)
    trajs = []
    for i, ss in enumerate(streams):
        traj, _ = _simulate_one(spec, cfg, np.random.default_rng(ss), f"SIM{i:05d}")
        trajs.append(traj)
    return trajs


def label_patterns(trajs: list[Trajectory], spec: AirspaceSpec) -> np.ndarray:
    """Index of the entry point nearest each trajectory's first fix.

    Equidistant ties resolve to the lowest index.  A first fix farther
    than the airspace radius from every entry point is an error.
    """
    entry_xy = spec.entry_xy()
    labels = np.empty(len(trajs), dtype=np.int64)
    for i, traj in enumerate(trajs):
        p = traj.points[0]
        x, y = latlon_to_xy_nm(p.lat, p.lon, spec.center)
        dists = np.hypot(entry_xy[:, 0] - x, entry_xy[:, 1] - y)
        if dists.min() > spec.radius_nm:
            raise DataError(
                f"trajectory {traj.flight_id!r} starts {dists.min():.1f} NM from the "
                f"nearest entry point, beyond the {spec.radius_nm:.0f} NM radius"
            )
        labels[i] = int(np.argmin(dists))
    return labels


# -- spec file io ----------------------------------------------------------

def write_airspace_spec(spec: AirspaceSpec, path) -> None:
    lines = [
        f"center_lat = {spec.center[0]!r}",
        f"center_lon = {spec.center[1]!r}",
        f"radius_nm = {spec.radius_nm!r}",
        f"runway_heading_deg = {spec.runway_heading_deg!r}",
        f"faf = {spec.faf[0]!r} {spec.faf[1]!r} {spec.faf[2]!r}",
    ]
    for i, ((lat, lon, alt), w) in enumerate(zip(spec.entry_points, spec.pattern_weights)):
        lines.append(f"entry_{i} = {lat!r} {lon!r} {alt!r}")
        lines.append(f"weight_{i} = {w!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_airspace_spec(path) -> AirspaceSpec:
    kv = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            kv[key.strip()] = val.strip()
    try:
        entries, weights = [], []
        for i in range(len([k for k in kv if k.startswith("entry_")])):
            entries.append(tuple(float(v) for v in kv[f"entry_{i}"].split()))
            weights.append(float(kv[f"weight_{i}"]))
        faf = tuple(float(v) for v in kv["faf"].split())
        return AirspaceSpec(
            center=(float(kv["center_lat"]), float(kv["center_lon"])),
            radius_nm=float(kv["radius_nm"]),
            entry_points=tuple(entries),
            faf=faf,
            runway_heading_deg=float(kv["runway_heading_deg"]),
            pattern_weights=tuple(weights),
        )
    except KeyError as exc:
        raise DataError(f"{path}: missing key {exc}") from exc
