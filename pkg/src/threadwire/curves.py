"""Wire-curve differential geometry.

Arclength-parametrized space curves with derivative data up to fourth
order, parallel orthonormal frames, tubular (normal-disc) coordinates,
piecewise-linear pipe approximations and the genericity predicate.
"""

from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import sympy as sp
from scipy.integrate import cumulative_simpson, cumulative_trapezoid, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.spatial import ConvexHull, QhullError


class CurveError(ValueError):
    pass


class ChartError(ValueError):
    pass


# ---------------------------------------------------------------------------
# WireCurve


class WireCurve:
    """Embedded space curve parametrized by arclength.

    Carries samples (s, position, d1..d4) on a uniform arclength grid
    covering [0, total_length] (endpoint included; for closed curves the
    endpoint sample repeats the start).
    """

    def __init__(self, s, points, d1, d2, d3, d4, total_length, closed,
                 name="", check=True):
        self.s = np.asarray(s, dtype=float)
        self.points = np.asarray(points, dtype=float)
        self.d1 = np.asarray(d1, dtype=float)
        self.d2 = np.asarray(d2, dtype=float)
        self.d3 = np.asarray(d3, dtype=float)
        self.d4 = np.asarray(d4, dtype=float)
        self.total_length = float(total_length)
        self.closed = bool(closed)
        self.name = name
        bc = "periodic" if self.closed else "not-a-knot"
        self._sp_point = CubicSpline(self.s, self._wrap(self.points), bc_type=bc)
        self._sp_d1 = CubicSpline(self.s, self._wrap(self.d1), bc_type=bc)
        self._sp_d2 = CubicSpline(self.s, self._wrap(self.d2), bc_type=bc)
        self._sp_d3 = CubicSpline(self.s, self._wrap(self.d3), bc_type=bc)
        if check:
            self.validate()

    def _wrap(self, arr):
        if not self.closed:
            return arr
        # force exact periodicity for the spline
        out = arr.copy()
        out[-1] = out[0]
        return out

    # -- sampling helpers ---------------------------------------------------

    def _s_mod(self, s):
        if self.closed:
            return np.mod(s, self.total_length)
        return np.clip(s, 0.0, self.total_length)

    def point(self, s):
        return self._sp_point(self._s_mod(s))

    def tangent(self, s):
        return self._sp_d1(self._s_mod(s))

    def second(self, s):
        return self._sp_d2(self._s_mod(s))

    def third(self, s):
        return self._sp_d3(self._s_mod(s))

    # -- scalar invariants --------------------------------------------------

    @property
    def n_samples(self):
        return len(self.s)

    def curvature(self):
        return np.linalg.norm(self.d2, axis=1)

    @property
    def kappa_max(self):
        return float(np.max(self.curvature()))

    def curvature_prime(self):
        kappa = self.curvature()
        with np.errstate(invalid="ignore", divide="ignore"):
            kp = np.einsum("ij,ij->i", self.d2, self.d3) / kappa
        return np.nan_to_num(kp)

    def curvature_second(self):
        kappa = self.curvature()
        kp = self.curvature_prime()
        with np.errstate(invalid="ignore", divide="ignore"):
            ks = (np.einsum("ij,ij->i", self.d3, self.d3)
                  + np.einsum("ij,ij->i", self.d2, self.d4) - kp ** 2) / kappa
        return np.nan_to_num(ks)

    def torsion(self):
        kappa2 = self.curvature() ** 2
        det = np.einsum("ij,ij->i", self.d1, np.cross(self.d2, self.d3))
        with np.errstate(invalid="ignore", divide="ignore"):
            tor = det / kappa2
        return np.nan_to_num(tor)

    def torsion_prime(self):
        kappa = self.curvature()
        det4 = np.einsum("ij,ij->i", self.d1, np.cross(self.d2, self.d4))
        with np.errstate(invalid="ignore", divide="ignore"):
            tp = det4 / kappa ** 2 - 2.0 * self.torsion() * self.curvature_prime() / kappa
        return np.nan_to_num(tp)

    def reversed(self):
        """Same geometric curve traversed backwards."""
        L = self.total_length
        return WireCurve(
            s=L - self.s[::-1],
            points=self.points[::-1],
            d1=-self.d1[::-1],
            d2=self.d2[::-1],
            d3=-self.d3[::-1],
            d4=self.d4[::-1],
            total_length=L,
            closed=self.closed,
            name=self.name + "_reversed",
            check=False,
        )

    # -- invariants ---------------------------------------------------------

    def validate(self, tol=1e-6):
        if self.points.shape != (len(self.s), 3):
            raise CurveError("sample shape mismatch")
        if np.any(np.diff(self.s) <= 0):
            raise CurveError("arclength samples must be strictly increasing")
        if abs(self.s[0]) > tol or abs(self.s[-1] - self.total_length) > tol:
            raise CurveError("samples must cover [0, total_length]")
        speed = np.linalg.norm(self.d1, axis=1)
        if np.max(np.abs(speed - 1.0)) > tol:
            raise CurveError("curve is not arclength parametrized: "
                             f"max ||d1|-1| = {np.max(np.abs(speed - 1.0)):.3e}")
        if self.min_self_distance() <= 0:
            raise CurveError("curve samples self-intersect")

    def min_self_distance(self):
        """Minimum distance between non-adjacent samples (embeddedness)."""
        pts = self.points[:-1] if self.closed else self.points
        n = len(pts)
        if n < 8:
            return np.inf
        h = self.s[1] - self.s[0]
        # exclude pairs closer than a few samples in (wrapped) index distance
        guard = 4
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
        idx = np.arange(n)
        gap = np.abs(idx[:, None] - idx[None, :])
        if self.closed:
            gap = np.minimum(gap, n - gap)
        d2[gap <= guard] = np.inf
        del h
        return float(np.sqrt(np.min(d2)))


def _arclength_funcs(cexpr: sp.Matrix, t: sp.Symbol):
    """Return numpy callables for c(t) and its arclength derivatives 1..4."""
    c1 = cexpr.diff(t)
    sigma = sp.sqrt(c1.dot(c1))
    funcs = []
    f = cexpr
    for _ in range(5):
        funcs.append(sp.lambdify(t, sp.flatten(f), modules="numpy"))
        f = f.diff(t) / sigma
    sigma_f = sp.lambdify(t, sigma, modules="numpy")
    return funcs, sigma_f


def _eval_vec(fn, tgrid):
    out = fn(tgrid)
    # lambdify may return scalars for constant components
    res = np.empty((len(tgrid), 3))
    for i in range(3):
        res[:, i] = np.broadcast_to(np.asarray(out[i], dtype=float), tgrid.shape)
    return res


def from_parametric(cexpr, t, t0, t1, closed, n_samples=2048, name="",
                    fine=40001, check=True):
    """Build a WireCurve from a sympy parametric expression.

    The curve is reparametrized to arclength numerically: cumulative
    speed integral on a fine t-grid, inverted per sample with Newton
    correction steps.
    """
    funcs, sigma_f = _arclength_funcs(sp.Matrix(cexpr), t)
    tgrid = np.linspace(t0, t1, fine)
    sigma = np.broadcast_to(np.asarray(sigma_f(tgrid), dtype=float), tgrid.shape)
    S = cumulative_simpson(sigma, x=tgrid, initial=0.0)
    Sspl = CubicSpline(tgrid, S)
    total = float(S[-1])
    s_samples = np.linspace(0.0, total, n_samples + 1)
    ts = np.interp(s_samples, S, tgrid)
    for _ in range(4):
        resid = Sspl(ts) - s_samples
        ts = ts - resid / np.broadcast_to(np.asarray(sigma_f(ts), dtype=float), ts.shape)
        ts = np.clip(ts, t0, t1)
    data = [_eval_vec(fn, ts) for fn in funcs]
    return WireCurve(s_samples, data[0], data[1], data[2], data[3], data[4],
                     total, closed, name=name, check=check)


def from_samples(points, closed, n_samples=2048, name="", check=True):
    """Build a WireCurve from dense position samples.

    The samples are resampled to uniform arclength via chordal-length
    spline fitting; derivatives come from 5-point central differences.
    """
    pts = np.asarray(points, dtype=float)
    if closed and np.linalg.norm(pts[0] - pts[-1]) > 1e-12:
        pts = np.vstack([pts, pts[0]])
    chord = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    u = np.concatenate([[0.0], np.cumsum(chord)])
    bc = "periodic" if closed else "not-a-knot"
    spl = CubicSpline(u, pts, bc_type=bc)
    # refine arclength estimate using the spline speed
    ufine = np.linspace(0.0, u[-1], 20 * len(pts))
    speed = np.linalg.norm(spl(ufine, 1), axis=1)
    S = np.concatenate([[0.0], cumulative_trapezoid(speed, ufine)])
    total = float(S[-1])
    s_samples = np.linspace(0.0, total, n_samples + 1)
    us = np.interp(s_samples, S, ufine)
    pos = spl(us)
    h = s_samples[1] - s_samples[0]
    derivs = [pos]
    cur = pos
    for _ in range(4):
        cur = _fd5(cur, h, closed)
        derivs.append(cur)
    return WireCurve(s_samples, derivs[0], derivs[1], derivs[2], derivs[3],
                     derivs[4], total, closed, name=name, check=check)


def _fd5(arr, h, closed):
    """5-point central first derivative on a uniform grid."""
    n = len(arr)
    out = np.empty_like(arr)
    if closed:
        a = arr[:-1]
        m = len(a)
        idx = np.arange(m)
        d = (-a[(idx + 2) % m] + 8 * a[(idx + 1) % m]
             - 8 * a[(idx - 1) % m] + a[(idx - 2) % m]) / (12 * h)
        out[:-1] = d
        out[-1] = d[0]
    else:
        d = np.gradient(arr, h, axis=0, edge_order=2)
        # interior 5-point stencil where available
        d[2:-2] = (-arr[4:] + 8 * arr[3:-1] - 8 * arr[1:-3] + arr[:-4]) / (12 * h)
        out = d
    return out


# ---------------------------------------------------------------------------
# built-in families

_T = sp.symbols("t")


def _family_circle(radius=1.0):
    r = float(radius)
    return sp.Matrix([r * sp.cos(_T), r * sp.sin(_T), 0]), 0.0, 2 * np.pi, True


def _family_ellipse(a=2.0, b=1.0):
    return sp.Matrix([float(a) * sp.cos(_T), float(b) * sp.sin(_T), 0]), \
        0.0, 2 * np.pi, True


def _family_helix(radius=1.0, pitch=1.0, turns=2.0):
    return sp.Matrix([float(radius) * sp.cos(_T), float(radius) * sp.sin(_T),
                      float(pitch) * _T]), 0.0, 2 * np.pi * float(turns), False


def _family_segment(length=1.0):
    return sp.Matrix([_T, 0, 0]), 0.0, float(length), False


def _family_wobble(a=2.0, b=1.0, amp=0.3):
    return sp.Matrix([float(a) * sp.cos(_T), float(b) * sp.sin(_T),
                      float(amp) * sp.sin(2 * _T)]), 0.0, 2 * np.pi, True


FAMILIES: dict[str, Callable] = {
    "circle": _family_circle,
    "ellipse": _family_ellipse,
    "helix": _family_helix,
    "segment": _family_segment,
    "wobble": _family_wobble,
}

_CURVE_CACHE: dict = {}


def make_wire(family, n_samples=2048, check=True, **params):
    if family not in FAMILIES:
        raise CurveError(f"unknown curve family {family!r}")
    key = (family, n_samples, tuple(sorted(params.items())))
    if key not in _CURVE_CACHE:
        cexpr, t0, t1, closed = FAMILIES[family](**params)
        _CURVE_CACHE[key] = from_parametric(
            cexpr, _T, t0, t1, closed, n_samples=n_samples,
            name=family, check=check)
    return _CURVE_CACHE[key]


# ---------------------------------------------------------------------------
# parallel frames


@dataclass
class ParallelFrame:
    curve: WireCurve
    e1: np.ndarray
    e2: np.ndarray

    def __post_init__(self):
        bc = "not-a-knot"
        self._sp_e1 = CubicSpline(self.curve.s, self.e1, bc_type=bc)
        self._sp_e2 = CubicSpline(self.curve.s, self.e2, bc_type=bc)

    def frame_at(self, s):
        """Interpolated (E1, E2), re-orthonormalized against the tangent."""
        s = self.curve._s_mod(s)
        t = self.curve.tangent(s)
        e1 = self._sp_e1(s)
        e2 = self._sp_e2(s)
        e1 = e1 - (np.sum(e1 * t, axis=-1, keepdims=True)) * t
        e1 = e1 / np.linalg.norm(e1, axis=-1, keepdims=True)
        e2 = e2 - (np.sum(e2 * t, axis=-1, keepdims=True)) * t
        e2 = e2 - (np.sum(e2 * e1, axis=-1, keepdims=True)) * e1
        e2 = e2 / np.linalg.norm(e2, axis=-1, keepdims=True)
        return e1, e2


def default_frame_seed(curve: WireCurve):
    t0 = curve.d1[0]
    k0 = curve.d2[0]
    e1 = k0 - np.dot(k0, t0) * t0
    if np.linalg.norm(e1) < 1e-10:
        # straight start: any normal direction
        a = np.array([1.0, 0.0, 0.0])
        if abs(np.dot(a, t0)) > 0.9:
            a = np.array([0.0, 1.0, 0.0])
        e1 = a - np.dot(a, t0) * t0
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(t0, e1)
    return e1, e2


def parallel_frame(curve: WireCurve, seed=None) -> ParallelFrame:
    """Integrate the parallel-transport frame ODE along the curve."""
    if seed is None:
        e1_0, e2_0 = default_frame_seed(curve)
    else:
        e1_0, e2_0 = (np.asarray(v, dtype=float) for v in seed)
        t0 = curve.d1[0]
        if (abs(np.dot(e1_0, e1_0) - 1) > 1e-8 or abs(np.dot(e2_0, e2_0) - 1) > 1e-8
                or abs(np.dot(e1_0, e2_0)) > 1e-8 or abs(np.dot(e1_0, t0)) > 1e-8
                or abs(np.dot(e2_0, t0)) > 1e-8):
            raise CurveError("frame seed must be orthonormal and normal to the tangent")

    def rhs(s, y):
        e = y.reshape(2, 3)
        t = curve.tangent(s)
        k = curve.second(s)
        return (-(e @ k)[:, None] * t[None, :]).ravel()

    sol = solve_ivp(rhs, (0.0, curve.total_length),
                    np.concatenate([e1_0, e2_0]),
                    t_eval=curve.s, method="DOP853",
                    rtol=1e-12, atol=1e-12)
    if not sol.success:
        raise CurveError(f"frame integration failed: {sol.message}")
    y = sol.y.T.reshape(-1, 2, 3)
    e1, e2 = y[:, 0, :], y[:, 1, :]
    # remove tiny orthonormality drift
    t = curve.d1
    e1 = e1 - np.sum(e1 * t, axis=1, keepdims=True) * t
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = e2 - np.sum(e2 * t, axis=1, keepdims=True) * t
    e2 -= np.sum(e2 * e1, axis=1, keepdims=True) * e1
    e2 /= np.linalg.norm(e2, axis=1, keepdims=True)
    return ParallelFrame(curve, e1, e2)


def frame_ode_residual(frame: ParallelFrame):
    """Max residual ||E_i' + <E_i, d2> d1|| using a 5-point stencil."""
    curve = frame.curve
    h = curve.s[1] - curve.s[0]
    res = 0.0
    for e in (frame.e1, frame.e2):
        # A parallel frame on a closed curve generally has holonomy, so the
        # samples are not periodic; always use the interior stencil.
        de = _fd5(e, h, closed=False)
        target = -np.einsum("ij,ij->i", e, curve.d2)[:, None] * curve.d1
        lo, hi = (2, len(e) - 2)
        res = max(res, float(np.max(np.linalg.norm(de[lo:hi] - target[lo:hi], axis=1))))
    return res


# ---------------------------------------------------------------------------
# tubular chart


@dataclass
class PsiResult:
    s: float
    r: float
    x: float
    y: float
    inside: bool


class TubularChart:
    """Normal-disc coordinates (s, x, y) around a wire via a parallel frame."""

    def __init__(self, curve: WireCurve, frame: Optional[ParallelFrame] = None,
                 radius: Optional[float] = None, simple_radius: Optional[float] = None):
        self.curve = curve
        self.frame = frame if frame is not None else parallel_frame(curve)
        self.simple_radius = (simple_radius if simple_radius is not None
                              else compute_simple_radius(curve))
        self.radius = radius if radius is not None else 0.9 * self.simple_radius
        if not self.radius < self.simple_radius:
            raise ChartError("chart radius must stay below the simple radius")

    def exp_map(self, s, x, y):
        """exp(s,x,y) and the exact stretch factor of d(exp) along s."""
        r = np.hypot(x, y)
        if np.any(r >= self.radius):
            raise ChartError("normal offset exceeds chart radius")
        e1, e2 = self.frame.frame_at(np.atleast_1d(np.asarray(s, dtype=float)))
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        base = self.curve.point(s_arr)
        x_arr = np.broadcast_to(np.atleast_1d(x), s_arr.shape)[:, None]
        y_arr = np.broadcast_to(np.atleast_1d(y), s_arr.shape)[:, None]
        v = x_arr * e1 + y_arr * e2
        pt = base + v
        jac = 1.0 - np.einsum("ij,ij->i", v, self.curve.second(s_arr))
        if np.isscalar(s):
            return pt[0], float(jac[0])
        return pt, jac

    def project(self, p, max_iter=60, tol=1e-12):
        """Invert exp: find (s, r, x, y) with exp(s,x,y) = p.

        Points outside the chart radius are reported with inside=False
        rather than raised (callers clip on it).
        """
        p = np.asarray(p, dtype=float)
        d2 = np.sum((self.curve.points - p) ** 2, axis=1)
        s = float(self.curve.s[np.argmin(d2)])
        L = self.curve.total_length
        for _ in range(max_iter):
            g = float(np.dot(p - self.curve.point(s), self.curve.tangent(s)))
            gp = -1.0 + float(np.dot(p - self.curve.point(s), self.curve.second(s)))
            if abs(gp) < 1e-14:
                break
            step = -g / gp
            step = np.clip(step, -0.1 * L, 0.1 * L)
            s = s + step
            if self.curve.closed:
                s = s % L
            else:
                s = float(np.clip(s, 0.0, L))
            if abs(step) < tol:
                break
        v = p - self.curve.point(s)
        e1, e2 = self.frame.frame_at(s)
        x = float(np.dot(v, e1))
        y = float(np.dot(v, e2))
        r = float(np.linalg.norm(v - np.dot(v, self.curve.tangent(s)) * self.curve.tangent(s)))
        return PsiResult(s=s, r=r, x=x, y=y, inside=r < self.radius)

    def radii_of(self, points):
        """Vector of Psi-radii for an array of points."""
        return np.array([self.project(p).r for p in np.asarray(points, dtype=float)])


def _project_to_discs(p, centers, normals, r):
    """Project points p onto the discs (centers, normals, radius r)."""
    v = p - centers
    v = v - np.sum(v * normals, axis=1, keepdims=True) * normals
    norm = np.linalg.norm(v, axis=1, keepdims=True)
    scale = np.minimum(1.0, r / np.maximum(norm, 1e-300))
    return centers + v * scale


_R0_CACHE: dict = {}


def compute_simple_radius(curve: WireCurve, n_grid=256, iters=48, bisect_steps=40):
    """Largest radius with pairwise-disjoint normal discs (bisection).

    Disc pairs at arclength distance >= 2r are tested for intersection by
    alternating projection (both discs are convex). Pairs closer along the
    curve are governed by the curvature cap 1/kappa_max.
    """
    key = id(curve)
    if key in _R0_CACHE:
        return _R0_CACHE[key]
    kmax = curve.kappa_max
    cap = 0.999 / kmax if kmax > 1e-12 else np.inf
    sgrid = np.linspace(0.0, curve.total_length, n_grid, endpoint=not curve.closed)
    centers = curve.point(sgrid)
    normals = curve.tangent(sgrid)
    normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    ii, jj = np.triu_indices(len(sgrid), k=1)
    arc = sgrid[jj] - sgrid[ii]
    if curve.closed:
        arc = np.minimum(arc, curve.total_length - arc)
    scale = curve.total_length

    def disjoint_all(r):
        mask = arc >= 2.0 * r
        if not np.any(mask):
            return True
        c1, n1 = centers[ii[mask]], normals[ii[mask]]
        c2, n2 = centers[jj[mask]], normals[jj[mask]]
        a = c1.copy()
        for _ in range(iters):
            b = _project_to_discs(a, c2, n2, r)
            a = _project_to_discs(b, c1, n1, r)
        dist = np.linalg.norm(a - b, axis=1)
        return bool(np.all(dist > 1e-7 * scale))

    hi = min(cap, 0.5 * scale)
    lo = 0.0
    if disjoint_all(hi):
        lo = hi
    else:
        for _ in range(bisect_steps):
            mid = 0.5 * (lo + hi)
            if disjoint_all(mid):
                lo = mid
            else:
                hi = mid
    r0 = min(lo, cap)
    if r0 <= 0:
        raise ChartError("curve admits no simple normal neighborhood on this grid")
    _R0_CACHE[key] = r0
    return r0


# ---------------------------------------------------------------------------
# polyline approximation and pipe surfaces


@dataclass
class PolylineApprox:
    curve: WireCurve
    epsilon: float
    s_vertices: np.ndarray
    vertices: np.ndarray

    def distance_to(self, p):
        """Distance from point(s) p to the polyline (pipe level-set query)."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        a = self.vertices[:-1]
        b = self.vertices[1:]
        ab = b - a
        ab2 = np.sum(ab * ab, axis=1)
        ap = p[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("pij,ij->pi", ap, ab) / np.maximum(ab2, 1e-300), 0.0, 1.0)
        closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        d = np.min(np.linalg.norm(p[:, None, :] - closest, axis=2), axis=1)
        return d if d.size > 1 else float(d[0])


def polyline_and_pipe(curve: WireCurve, epsilon: float, dense_per_segment=32):
    """Jointed-pipe polyline with vertices at s = k*epsilon and measured deviation."""
    if not 0 < epsilon < curve.total_length:
        raise CurveError("segment length must lie in (0, total length)")
    sv = np.arange(0.0, curve.total_length, epsilon)
    if curve.total_length - sv[-1] > 1e-12:
        sv = np.append(sv, curve.total_length)
    else:
        sv[-1] = curve.total_length
    poly = PolylineApprox(curve, epsilon, sv, curve.point(sv))
    n_dense = max(1024, dense_per_segment * len(sv))
    sd = np.linspace(0.0, curve.total_length, n_dense)
    deviation = float(np.max(poly.distance_to(curve.point(sd))))
    return poly, deviation


# ---------------------------------------------------------------------------
# genericity predicate


@dataclass
class GenericityReport:
    c4_data: bool
    curvature_positive: bool
    curvature_morse: bool
    torsion_transverse: bool
    torsion_nonzero_at_curvature_critical: bool
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return (self.c4_data and self.curvature_positive and self.curvature_morse
                and self.torsion_transverse
                and self.torsion_nonzero_at_curvature_critical)


def genericity_check(curve: WireCurve, rel_tol=1e-6) -> GenericityReport:
    """Evaluate the five generic-wire conditions on the sample grid."""
    if not all(np.all(np.isfinite(a)) for a in
               (curve.d1, curve.d2, curve.d3, curve.d4)):
        raise CurveError("derivative data up to order 4 required")
    kappa = curve.curvature()
    kp = curve.curvature_prime()
    ks = curve.curvature_second()
    tor = curve.torsion()
    tp = curve.torsion_prime()

    def tol_for(arr):
        return rel_tol * max(np.max(np.abs(arr)), 1e-12)

    c4 = True
    kappa_pos = bool(np.min(kappa) > tol_for(kappa))
    crit = np.abs(kp) < tol_for(kp)
    morse = bool(np.all(np.abs(ks[crit]) > tol_for(ks))) if np.any(crit) else True
    if np.max(np.abs(kp)) <= tol_for(np.abs(kappa)):
        morse = False  # constant curvature: every point critical, none Morse
        crit = np.ones_like(crit)
    tor_zero = np.abs(tor) < tol_for(np.abs(tor)) if np.max(np.abs(tor)) > 1e-12 \
        else np.ones(len(tor), dtype=bool)
    if np.max(np.abs(tor)) <= 1e-12:
        transverse = False  # identically-zero torsion never crosses transversely
    else:
        transverse = bool(np.all(np.abs(tp[tor_zero]) > tol_for(tp))) \
            if np.any(tor_zero) else True
    tor_at_crit = bool(np.all(np.abs(tor[crit]) > tol_for(np.abs(tor) + 1e-12))) \
        if np.any(crit) else True
    if np.max(np.abs(tor)) <= 1e-12:
        tor_at_crit = False
    return GenericityReport(
        c4_data=c4,
        curvature_positive=kappa_pos,
        curvature_morse=morse,
        torsion_transverse=transverse,
        torsion_nonzero_at_curvature_critical=tor_at_crit,
        details={
            "kappa_min": float(np.min(kappa)),
            "kappa_max": float(np.max(kappa)),
            "torsion_max_abs": float(np.max(np.abs(tor))),
            "n_curvature_critical": int(np.sum(crit)),
        },
    )


# ---------------------------------------------------------------------------
# convex hull margin


def hull_margin(chart: TubularChart, loop_points, face_samples=None):
    """Smallest s with ConvexHull(loop) inside the s normal neighborhood.

    Maximizes the Psi-radius over hull vertices and barycentric samples of
    hull faces; degenerate (affinely dependent) loops fall back to sampling
    convex combinations directly.
    """
    pts = np.atleast_2d(np.asarray(loop_points, dtype=float))
    if len(pts) == 1:
        return float(chart.project(pts[0]).r)
    span = float(np.max(np.linalg.norm(pts - pts.mean(axis=0), axis=1)))
    if face_samples is None:
        face_samples = max(4, int(np.ceil(20.0 * span / max(chart.radius, 1e-9))))
        face_samples = min(face_samples, 12)
    candidates = [pts]
    try:
        hull = ConvexHull(pts)
        verts = pts[hull.vertices]
        candidates = [verts]
        bary = _barycentric_grid(face_samples)
        for simplex in hull.simplices:
            tri = pts[simplex]
            candidates.append(bary @ tri)
    except QhullError:
        # degenerate hull: sample pairwise and triple convex combinations
        t = np.linspace(0.0, 1.0, face_samples + 1)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                candidates.append(np.outer(1 - t, pts[i]) + np.outer(t, pts[j]))
    allpts = np.vstack(candidates)
    return float(np.max(chart.radii_of(allpts)))


def _barycentric_grid(n):
    coords = []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            k = n - i - j
            coords.append((i / n, j / n, k / n))
    return np.array(coords)


# ---------------------------------------------------------------------------
# config loading and CSV export


def wire_from_config(section) -> WireCurve:
    """Build a wire from a config section (mapping of key=value strings)."""
    params = {k: v for k, v in section.items()}
    family = params.pop("family", None)
    if family is None:
        raise CurveError("wire config requires a 'family' key")
    n_samples = int(params.pop("samples", 2048))
    sample_file = params.pop("sample_file", None)
    if family == "samples":
        if sample_file is None:
            raise CurveError("family=samples requires sample_file")
        pts = np.loadtxt(sample_file, delimiter=",")
        closed = params.pop("closed", "true").lower() in ("1", "true", "yes")
        return from_samples(pts, closed=closed, n_samples=n_samples)
    kwargs = {k: float(v) for k, v in params.items()}
    return make_wire(family, n_samples=n_samples, **kwargs)


def load_wire_file(path) -> WireCurve:
    cfg = configparser.ConfigParser()
    read = cfg.read(path)
    if not read or "wire" not in cfg:
        raise CurveError(f"no [wire] section found in {path}")
    return wire_from_config(cfg["wire"])


def export_curve_csv(curve: WireCurve, path):
    """Write one row per sample: s, x, y, z, kappa, torsion."""
    kappa = curve.curvature()
    tor = curve.torsion()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "x", "y", "z", "kappa", "torsion"])
        for i in range(curve.n_samples):
            writer.writerow([f"{curve.s[i]:.12g}",
                             f"{curve.points[i, 0]:.12g}",
                             f"{curve.points[i, 1]:.12g}",
                             f"{curve.points[i, 2]:.12g}",
                             f"{kappa[i]:.12g}",
                             f"{tor[i]:.12g}"])
