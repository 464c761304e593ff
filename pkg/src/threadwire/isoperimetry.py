"""Weighted strip isoperimetry.

Regions live in the half-strip T_Y = {(x, y) : x >= 0, 0 <= y < Y} and carry
the linear weight 1 - m*y with 0 <= m*Y < 1.  The module evaluates the
weighted perimeter, the two area bounds

    (1)  A(K) <= P^2 / (pi * (1 - mY)^2)
    (2)  A(K) <= (P - pi*Y/(1-mY)) * Y + pi*Y^2/2      (when P > pi*Y*(1-mY))

and the one-dimensional interval inequality

    sum_i (b_i - a_i) <= Y * sum_{endpoints p} (1 - m*p),

together with fast randomized generators used to fuzz all three.

Boundary-counting convention: edges lying on the left wall x = 0 (and on the
right wall x = x_max, when one is declared) are excluded from the perimeter;
the bottom edge y = 0 is included with weight 1; y = Y is unreachable because
vertices satisfy y < Y strictly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "IsoperimetryError",
    "StripRegion",
    "IntervalUnion",
    "weighted_perimeter",
    "region_area",
    "iso_bound_1",
    "iso_bound_2",
    "interval_iso",
    "random_staircase",
    "random_interval_union",
    "fuzz_strip",
    "fuzz_intervals",
    "load_polygons_csv",
]

_WALL_TOL = 1e-12
_TOL_ABS = 1e-9
_TOL_REL = 1e-9


class IsoperimetryError(ValueError):
    """Invalid strip region or interval union."""


def _as_loop(vertices) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise IsoperimetryError("polygon needs an (n, 2) array with n >= 3")
    # drop an explicitly repeated closing vertex and consecutive duplicates
    if np.allclose(v[0], v[-1]):
        v = v[:-1]
    keep = np.concatenate([[True], np.any(np.abs(np.diff(v, axis=0)) > 0, axis=1)])
    v = v[keep]
    if len(v) < 3:
        raise IsoperimetryError("degenerate polygon")
    return v


def _shoelace(v: np.ndarray) -> float:
    w = np.roll(v, -1, axis=0)
    return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))


@dataclass(frozen=True)
class StripRegion:
    """A finite union of simple polygons in the weighted half-strip T_Y."""

    Y: float
    m: float
    polygons: Tuple[np.ndarray, ...]
    x_max: Optional[float] = None
    validate: bool = True

    def __post_init__(self):
        if not (self.Y > 0):
            raise IsoperimetryError("strip height Y must be positive")
        if self.m < 0 or self.m * self.Y >= 1.0:
            raise IsoperimetryError("weight slope must satisfy 0 <= m*Y < 1")
        loops = tuple(_as_loop(p) for p in self.polygons)
        object.__setattr__(self, "polygons", loops)
        for v in loops:
            if np.any(v[:, 0] < -_WALL_TOL) or np.any(v[:, 1] < -_WALL_TOL):
                raise IsoperimetryError("vertices must satisfy x >= 0, y >= 0")
            if np.any(v[:, 1] >= self.Y):
                raise IsoperimetryError("vertices must satisfy y < Y")
            if self.x_max is not None and np.any(v[:, 0] > self.x_max + _WALL_TOL):
                raise IsoperimetryError("vertices must satisfy x <= x_max")
        if self.validate:
            self._check_simple_disjoint(loops)

    @staticmethod
    def _check_simple_disjoint(loops):
        from shapely.geometry import Polygon

        shapes = []
        for v in loops:
            poly = Polygon(v)
            if not poly.is_valid:
                raise IsoperimetryError("polygon is self-intersecting")
            shapes.append(poly)
        for i in range(len(shapes)):
            for j in range(i + 1, len(shapes)):
                inter = shapes[i].intersection(shapes[j])
                if inter.area > 1e-14:
                    raise IsoperimetryError("polygons must be interior-disjoint")

    @property
    def is_empty(self) -> bool:
        return len(self.polygons) == 0


def region_area(K: StripRegion) -> float:
    """Total (unweighted) area of the region."""
    return float(sum(abs(_shoelace(v)) for v in K.polygons))


def weighted_perimeter(K: StripRegion) -> float:
    """(1 - m*y)-weighted length of the counted part of the boundary.

    The weight is linear, so each straight edge contributes exactly
    length * (1 - m * y_mid).  Edges on the left wall (and the right wall,
    if declared) are excluded.
    """
    total = 0.0
    for v in K.polygons:
        w = np.roll(v, -1, axis=0)
        seg = np.hypot(w[:, 0] - v[:, 0], w[:, 1] - v[:, 1])
        weight = 1.0 - K.m * 0.5 * (v[:, 1] + w[:, 1])
        skip = (np.abs(v[:, 0]) <= _WALL_TOL) & (np.abs(w[:, 0]) <= _WALL_TOL)
        if K.x_max is not None:
            skip |= (np.abs(v[:, 0] - K.x_max) <= _WALL_TOL) & (
                np.abs(w[:, 0] - K.x_max) <= _WALL_TOL
            )
        total += float(np.sum(seg[~skip] * weight[~skip]))
    return total


def _holds(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + _TOL_ABS + _TOL_REL * max(abs(lhs), abs(rhs))


def iso_bound_1(K: StripRegion) -> Tuple[float, float, bool]:
    """Bound (1): area against P^2 / (pi * (1 - mY)^2)."""
    lhs = region_area(K)
    P = weighted_perimeter(K)
    rhs = P * P / (math.pi * (1.0 - K.m * K.Y) ** 2)
    return lhs, rhs, _holds(lhs, rhs)


def iso_bound_2(K: StripRegion) -> Tuple[float, float, bool, bool]:
    """Bound (2): gated on P > pi*Y*(1-mY); returns (lhs, rhs, applicable, holds).

    The subtracted term uses the factor (1-mY) (multiplying, not dividing):
    splitting the boundary at the largest x* with perimeter at most
    pi*Y*(1-mY) to the right gives a half-disc-type piece of area at most
    pi*Y^2/2, and the remaining perimeter P - pi*Y*(1-mY) controls the rest
    through the sliced 1-D inequality.  The two factors agree when m = 0,
    which is the sharp case (half rounded-rectangle).
    """
    lhs = region_area(K)
    P = weighted_perimeter(K)
    gate = math.pi * K.Y * (1.0 - K.m * K.Y)
    applicable = P > gate
    rhs = (P - gate) * K.Y + 0.5 * math.pi * K.Y**2
    holds = True if not applicable else _holds(lhs, rhs)
    return lhs, rhs, applicable, holds


@dataclass(frozen=True)
class IntervalUnion:
    """Finitely many disjoint closed intervals inside [0, Y)."""

    intervals: Tuple[Tuple[float, float], ...]
    Y: float

    def __post_init__(self):
        iv = tuple((float(a), float(b)) for a, b in self.intervals)
        iv = tuple(sorted(iv))
        for a, b in iv:
            if not (0.0 <= a <= b < self.Y):
                raise IsoperimetryError("intervals must lie in [0, Y)")
        for (a1, b1), (a2, b2) in zip(iv, iv[1:]):
            if a2 <= b1:
                raise IsoperimetryError("intervals must be disjoint")
        object.__setattr__(self, "intervals", iv)

    @property
    def total_length(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    @property
    def endpoints(self) -> np.ndarray:
        return np.asarray([p for ab in self.intervals for p in ab], dtype=float)


def interval_iso(J: IntervalUnion, m: float, Y: Optional[float] = None):
    """1-D claim: total length <= Y * sum over endpoints of (1 - m*p).

    Every endpoint counts, including one at 0; the open end Y cannot occur
    because intervals are contained in [0, Y).
    """
    Y = J.Y if Y is None else float(Y)
    if m < 0 or m * Y >= 1.0:
        raise IsoperimetryError("weight slope must satisfy 0 <= m*Y < 1")
    lhs = J.total_length
    rhs = Y * float(np.sum(1.0 - m * J.endpoints))
    return lhs, rhs, _holds(lhs, rhs)


# ---------------------------------------------------------------------------
# randomized generators


def random_staircase(rng: np.random.Generator, Y: float, *,
                     max_cols: int = 6, x_max: Optional[float] = None) -> np.ndarray:
    """Random simple rectilinear "ribbon" polygon inside T_Y.

    Over k columns [x_i, x_{i+1}] the polygon is the region between a lower
    step profile lo and an upper profile hi.  Requiring
    hi_i > max(lo_{i-1}, lo_i, lo_{i+1}) keeps the two profiles from
    touching across column boundaries, so the loop is simple by construction.
    """
    k = int(rng.integers(1, max_cols + 1))
    x0 = 0.0 if rng.random() < 0.3 else float(rng.uniform(0.01, 0.5))
    widths = rng.uniform(0.05, 1.0, size=k)
    xs = x0 + np.concatenate([[0.0], np.cumsum(widths)])
    if x_max is not None:
        xs = x0 + (xs - x0) * min(1.0, (x_max - x0) / (xs[-1] - x0))
    lo = rng.uniform(0.0, 0.6 * Y, size=k)
    if rng.random() < 0.3:
        lo[int(rng.integers(k))] = 0.0
    lo_pad = np.concatenate([[lo[0]], lo, [lo[-1]]])
    floor = np.maximum(np.maximum(lo_pad[:-2], lo_pad[1:-1]), lo_pad[2:])
    hi = floor + rng.uniform(0.02, 1.0, size=k) * (0.999 * Y - floor)
    bottom = np.empty((2 * k, 2))
    bottom[0::2, 0] = xs[:-1]
    bottom[1::2, 0] = xs[1:]
    bottom[0::2, 1] = lo
    bottom[1::2, 1] = lo
    top = np.empty((2 * k, 2))
    top[0::2, 0] = xs[1:][::-1]
    top[1::2, 0] = xs[:-1][::-1]
    top[0::2, 1] = hi[::-1]
    top[1::2, 1] = hi[::-1]
    return np.vstack([bottom, top])


def random_interval_union(rng: np.random.Generator, Y: float,
                          max_intervals: int = 8) -> IntervalUnion:
    n = int(rng.integers(1, max_intervals + 1))
    cuts = np.sort(rng.uniform(0.0, Y, size=2 * n))
    cuts[-1] = min(cuts[-1], Y * (1.0 - 1e-12))
    if rng.random() < 0.2:
        cuts[0] = 0.0
    iv = [(cuts[2 * i], cuts[2 * i + 1]) for i in range(n)]
    iv = [(a, b) for a, b in iv if b > a]
    if not iv:
        iv = [(0.0, 0.5 * Y)]
    return IntervalUnion(tuple(iv), Y)


def fuzz_strip(m: float, Y: float, count: int, seed: int) -> dict:
    """Fuzz both strip bounds; returns violation counts and worst margins.

    Staircase polygons are simple by construction, so per-polygon validation
    is skipped for speed.
    """
    rng = np.random.default_rng(seed)
    viol1 = viol2 = applicable = 0
    worst1 = worst2 = -math.inf
    for _ in range(count):
        v = random_staircase(rng, Y)
        K = StripRegion(Y=Y, m=m, polygons=(v,), validate=False)
        lhs, rhs, ok = iso_bound_1(K)
        worst1 = max(worst1, lhs - rhs)
        if not ok:
            viol1 += 1
        lhs, rhs, app, ok = iso_bound_2(K)
        if app:
            applicable += 1
            worst2 = max(worst2, lhs - rhs)
            if not ok:
                viol2 += 1
    return {
        "count": count,
        "violations_1": viol1,
        "violations_2": viol2,
        "applicable_2": applicable,
        "worst_margin_1": worst1,
        "worst_margin_2": worst2,
    }


def fuzz_intervals(m: float, Y: float, count: int, seed: int) -> dict:
    """Vectorized fuzz of the 1-D interval inequality."""
    rng = np.random.default_rng(seed)
    viol = 0
    worst = -math.inf
    batch = 4096
    done = 0
    while done < count:
        nb = min(batch, count - done)
        n = rng.integers(1, 9, size=nb)
        cuts = np.sort(rng.uniform(0.0, Y * (1.0 - 1e-12), size=(nb, 16)), axis=1)
        for i in range(nb):
            k = int(n[i])
            pts = cuts[i, :2 * k]
            lhs = float(np.sum(pts[1::2] - pts[0::2]))
            rhs = Y * float(np.sum(1.0 - m * pts))
            worst = max(worst, lhs - rhs)
            if not _holds(lhs, rhs):
                viol += 1
        done += nb
    return {"count": count, "violations": viol, "worst_margin": worst}


def load_polygons_csv(path) -> List[np.ndarray]:
    """Read vertex loops from CSV rows ``loop_id,x,y`` (header optional)."""
    loops: dict = {}
    order: List[str] = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() in ("loop", "loop_id", "id"):
                continue
            key = row[0].strip()
            if key not in loops:
                loops[key] = []
                order.append(key)
            loops[key].append((float(row[1]), float(row[2])))
    if not order:
        raise IsoperimetryError(f"no vertex loops found in {path}")
    return [np.asarray(loops[k], dtype=float) for k in order]
