"""Discrete thread problem: competitor construction, constrained Dirichlet
minimization, multiplier extraction, and theorem-style verifications.

A crescent is a map X from a 2-D reference triangulation into 3-space whose
lower boundary is attached monotonically to the wire and whose upper boundary
is the free thread.  The reference domain is a "lens": the near-isometric
unrolling of a thin surface hugging the wire, with coordinates
(arclength offset x, normal offset eta).  Using a near-isometric reference
keeps the Dirichlet energy within a few percent of the area, which a round
disc reference (wrong conformal modulus for thin crescents) would not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.linalg import splu
from scipy.spatial import cKDTree

from .curves import TubularChart, WireCurve
from .discmesh import stiffness_matrix

__all__ = [
    "SolverError",
    "LensMesh",
    "CrescentMesh",
    "ThreadProblem",
    "SolveReport",
    "SolverSettings",
    "build_lens_mesh",
    "build_competitor_P0",
    "evaluate",
    "minimize",
    "extract_kappa",
    "verify_convex_hull",
    "verify_near_wire",
    "verify_slicewise",
    "enclosure_probe",
    "dido_kappa",
    "dump_mesh",
]


class SolverError(RuntimeError):
    """Infeasible problem, degenerate mesh, or failed construction."""


# ---------------------------------------------------------------------------
# lens reference mesh


class LensMesh:
    """Triangulated lens region {(x, eta): 0 <= eta <= H(x)}.

    Duck-typed like DiscMesh (vertices, triangles, boundary, lower, upper,
    interior, cell_size, interpolate) so the level-set machinery applies.
    The two tips (H = 0) are single corner vertices shared by the lower and
    upper boundary arcs.
    """

    def __init__(self, vertices, triangles, boundary, lower, upper,
                 columns, rows):
        self.vertices = vertices
        self.triangles = triangles
        self.boundary = boundary
        self.lower = lower
        self.upper = upper
        self.columns = columns        # list of vertex-id arrays per x column
        self.rows = rows
        dx = np.diff(vertices[lower, 0])
        self.cell_size = float(np.max(np.abs(dx))) if len(dx) else 1.0
        self._tree: Optional[cKDTree] = None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary] = False
        return np.nonzero(mask)[0]

    def locate(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self._tree is None:
            cent = self.vertices[self.triangles].mean(axis=1)
            self._tree = cKDTree(cent)
        k = min(24, len(self.triangles))
        _, cand = self._tree.query(pts, k=k)
        cand = np.atleast_2d(cand)
        v = self.vertices
        t = self.triangles[cand]
        a, b, c = v[t[..., 0]], v[t[..., 1]], v[t[..., 2]]
        det = ((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
               - (c[..., 0] - a[..., 0]) * (b[..., 1] - a[..., 1]))
        px, py = pts[:, None, 0], pts[:, None, 1]
        w1 = ((px - a[..., 0]) * (c[..., 1] - a[..., 1])
              - (c[..., 0] - a[..., 0]) * (py - a[..., 1])) / det
        w2 = ((b[..., 0] - a[..., 0]) * (py - a[..., 1])
              - (px - a[..., 0]) * (b[..., 1] - a[..., 1])) / det
        bary = np.stack([1.0 - w1 - w2, w1, w2], axis=-1)
        best = np.argmax(bary.min(axis=-1), axis=1)
        rows = np.arange(len(pts))
        return cand[rows, best], np.clip(bary[rows, best], 0.0, 1.0)

    def interpolate(self, values, points):
        tri_idx, bary = self.locate(points)
        vals = np.asarray(values)[self.triangles[tri_idx]]
        return np.einsum("ij,ij->i", bary, vals)


def build_lens_mesh(xs: np.ndarray, heights: np.ndarray, rows: int) -> LensMesh:
    """Mesh the lens with ``rows`` vertical subdivisions per interior column."""
    xs = np.asarray(xs, dtype=float)
    H = np.asarray(heights, dtype=float)
    nc = len(xs)
    if nc < 3 or len(H) != nc:
        raise SolverError("need at least three columns with matching heights")
    if H[0] != 0.0 or H[-1] != 0.0 or np.any(H[1:-1] <= 0):
        raise SolverError("tip heights must vanish and interior heights be positive")
    verts: List[np.ndarray] = []
    columns: List[np.ndarray] = []
    for i in range(nc):
        if i == 0 or i == nc - 1:
            ids = np.array([len(verts)])
            verts.append(np.array([xs[i], 0.0]))
        else:
            ids = len(verts) + np.arange(rows + 1)
            for j in range(rows + 1):
                verts.append(np.array([xs[i], H[i] * j / rows]))
        columns.append(ids)
    vertices = np.vstack(verts)
    tris: List[Tuple[int, int, int]] = []
    for i in range(nc - 1):
        ca, cb = columns[i], columns[i + 1]
        if len(ca) == 1:           # left tip fan
            for j in range(rows):
                tris.append((ca[0], cb[j], cb[j + 1]))
        elif len(cb) == 1:         # right tip fan
            for j in range(rows):
                tris.append((ca[j], cb[0], ca[j + 1]))
        else:
            for j in range(rows):
                tris.append((ca[j], cb[j], cb[j + 1]))
                tris.append((ca[j], cb[j + 1], ca[j + 1]))
    triangles = np.asarray(tris, dtype=int)
    lower = np.array([columns[i][0] for i in range(nc)], dtype=int)
    upper_mid = [columns[i][-1] for i in range(nc - 2, 0, -1)]
    upper = np.array([columns[-1][0]] + upper_mid + [columns[0][0]], dtype=int)
    boundary = np.concatenate([lower[:-1], upper[:-1]])
    return LensMesh(vertices, triangles, boundary, lower, upper,
                    columns, rows)


# ---------------------------------------------------------------------------
# crescent


@dataclass
class CrescentMesh:
    """Reference mesh + 3-D positions + monotone wire attachment."""

    mesh: LensMesh
    X: np.ndarray                  # (nv, 3)
    t_lower: np.ndarray            # attachment arclengths, one per lower vertex
    wire: WireCurve

    def __post_init__(self):
        if not np.all(np.isfinite(self.X)):
            raise SolverError("non-finite vertex position")
        if np.any(np.diff(self.t_lower) < -1e-12):
            raise SolverError("attachment parameters must be weakly monotone")
        attach = self.wire.point(np.mod(self.t_lower, self.wire.total_length))
        err = np.max(np.linalg.norm(self.X[self.mesh.lower] - attach, axis=1))
        if err > 1e-8 * max(1.0, self.wire.total_length):
            raise SolverError(f"attachment exactness violated ({err:g})")

    @property
    def thread_points(self) -> np.ndarray:
        return self.X[self.mesh.upper]

    def thread_length(self) -> float:
        return _polyline_length(self.thread_points)

    def wire_span(self) -> float:
        return float(self.t_lower[-1] - self.t_lower[0])


def _polyline_length(P: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.diff(P, axis=0), axis=1)))


def _polyline_length_grad(P: np.ndarray) -> np.ndarray:
    d = np.diff(P, axis=0)
    n = np.linalg.norm(d, axis=1, keepdims=True)
    u = d / np.maximum(n, 1e-300)
    g = np.zeros_like(P)
    g[:-1] -= u
    g[1:] += u
    return g


# ---------------------------------------------------------------------------
# problem & report


@dataclass(frozen=True)
class SolverSettings:
    max_outer: int = 40
    max_inner: int = 300          # L-BFGS iterations per multiplier update
    tol_energy: float = 1e-12
    tol_constraint: float = 1e-6
    rho0: Optional[float] = None
    step0: float = 0.1
    seed: int = 0
    iteration_cap: int = 100_000


@dataclass(frozen=True)
class ThreadProblem:
    wire: WireCurve
    lam: float                     # deficit: L = ell(Gamma) - lam
    settings: SolverSettings = SolverSettings()

    def __post_init__(self):
        ell = self.wire.total_length
        L = ell - self.lam
        chord = float(np.linalg.norm(self.wire.point(ell) - self.wire.point(0.0)))
        if not (chord < L < ell):
            raise SolverError("thread budget violates admissibility chord < L < ell")

    @property
    def L(self) -> float:
        return self.wire.total_length - self.lam


@dataclass
class SolveReport:
    D: float
    area: float
    thread_len: float
    wire_seg_len: float
    ell_M: float
    kappa: float
    kappa_residual: float
    conformality: float
    r_max: float
    constraint_gap: float
    converged: bool
    iterations: int = 0
    mu: float = 0.0
    flags: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# competitor construction


def _kappa_at(wire: WireCurve, s) -> np.ndarray:
    """Pointwise curvature |Gamma''(s)| (arclength parametrization)."""
    d2 = np.atleast_2d(wire.second(np.mod(s, wire.total_length)))
    return np.linalg.norm(d2, axis=1)


def _curvature_peak(wire: WireCurve) -> Tuple[float, float, float]:
    """(s0, kappa_max, gamma) with kappa(s0 + u) ~ kappa_max - gamma u^2."""
    kap = wire.curvature()
    i = int(np.argmax(kap))
    s0 = float(wire.s[i])
    # refine by local quadratic fit
    h = wire.total_length / 2000.0
    ss = s0 + h * np.arange(-3, 4)
    kk = _kappa_at(wire, ss)
    c = np.polyfit(ss - s0, kk, 2)
    if abs(c[0]) > 1e-12 and abs(c[1] / (2 * c[0])) < 5 * h:
        s0 = s0 - c[1] / (2 * c[0])
        ss = s0 + h * np.arange(-3, 4)
        kk = _kappa_at(wire, ss)
    k0 = float(_kappa_at(wire, s0)[0])
    gamma = max(0.0, -float(np.polyfit(ss - s0, kk, 2)[0]))
    return s0, k0, gamma


def _embed_profile(wire: WireCurve, s0: float, xs: np.ndarray,
                   heights: np.ndarray, rows: int) -> CrescentMesh:
    """Embed the lens: X(x, eta) = Gamma(s0+x) + eta * N(s0+x)."""
    mesh = build_lens_mesh(xs, heights, rows)
    ell = wire.total_length
    X = np.empty((mesh.n_vertices, 3))
    for i, ids in enumerate(mesh.columns):
        s = (s0 + xs[i]) % ell
        base = wire.point(s)
        d2 = wire.second(s)
        kap = np.linalg.norm(d2)
        if kap < 1e-12:
            raise SolverError("vanishing curvature along the attachment segment")
        N = d2 / kap
        etas = mesh.vertices[ids, 1]
        X[ids] = base[None, :] + etas[:, None] * N[None, :]
    t_lower = s0 + xs
    return CrescentMesh(mesh=mesh, X=X, t_lower=t_lower, wire=wire)


def _profile_deficit(wire: WireCurve, s0: float, xs: np.ndarray,
                     heights: np.ndarray) -> float:
    """span - thread length for the embedded top curve at the given heights."""
    ell = wire.total_length
    pts = []
    for x, h in zip(xs, heights):
        s = (s0 + x) % ell
        d2 = wire.second(s)
        kap = np.linalg.norm(d2)
        pts.append(wire.point(s) + h * d2 / kap)
    span = xs[-1] - xs[0]
    return float(span - _polyline_length(np.asarray(pts)))


def build_competitor_P0(wire: WireCurve, lam: float, *, profile: str = "taylor",
                        nx: int = 96, rows: int = 10) -> CrescentMesh:
    """Explicit near-wire competitor at the curvature maximum.

    profile="taylor": parabolic-offset construction with half-width
    w = (2 kappa^2 / 3)^(-1/3) lam^(1/3) and height (kappa/2)(w^2 - x^2);
    its Dirichlet energy is kappa^(-1) lam to a few percent, but its
    thread-length deficit evaluates to lam/2, not lam (the two published
    identities are mutually inconsistent; see the energy/deficit integrals
    in the tests).

    profile="hugging": quartic wire-hugging profile with the amplitude
    calibrated so the measured deficit equals lam exactly; costs an extra
    O(lam^(2/5)) fraction of energy.
    """
    if wire.kappa_max <= 1e-12:
        raise SolverError("straight wire: the construction is impossible")
    if lam <= 0:
        raise SolverError("deficit must be positive")
    s0, k0, gamma = _curvature_peak(wire)

    def clamp_window(s0, half_width):
        # open wires: the attachment window must stay inside [0, ell]
        if wire.closed:
            return s0
        ell = wire.total_length
        if 2.0 * half_width >= 0.9 * ell:
            raise SolverError("attachment window exceeds the wire length")
        return float(np.clip(s0, 1.05 * half_width, ell - 1.05 * half_width))

    if profile == "taylor":
        w = (2.0 * k0 * k0 / 3.0) ** (-1.0 / 3.0) * lam ** (1.0 / 3.0)
        s0 = clamp_window(s0, w)
        xs = w * np.sin(np.linspace(-np.pi / 2, np.pi / 2, nx + 1))
        H = 0.5 * k0 * (w * w - xs * xs)
        H[0] = H[-1] = 0.0
        return _embed_profile(wire, s0, xs, H, rows)
    if profile != "hugging":
        raise SolverError(f"unknown profile {profile!r}")
    if gamma > 1e-8:
        x0 = (45.0 * lam / (4.0 * gamma * k0)) ** 0.2
        x0 = min(x0, 0.2 * wire.total_length)
    else:
        x0 = 0.2 * wire.total_length
    s0 = clamp_window(s0, x0)
    xs = x0 * np.sin(np.linspace(-np.pi / 2, np.pi / 2, nx + 1))
    base = (x0 * x0 - xs * xs) ** 2          # quartic hugging shape
    base[0] = base[-1] = 0.0

    def deficit_of(c):
        return _profile_deficit(wire, s0, xs, c * base)

    # scan amplitudes up to a height cap below the curvature radius;
    # deficit(c) is concave (linear gain minus quadratic slope cost), so the
    # first bracket crossing lam is the calibration root
    c_cap = 0.45 / (k0 * float(np.max(base)))
    cs = np.geomspace(1e-6 * c_cap, c_cap, 60)
    c_lo, c_hi = 0.0, None
    for c in cs:
        if deficit_of(c) >= lam:
            c_hi = c
            break
        c_lo = c
    if c_hi is None:
        raise SolverError("cannot calibrate hugging profile to the deficit")
    c = brentq(lambda c: deficit_of(c) - lam, c_lo, c_hi, xtol=1e-15, rtol=1e-14)
    H = c * base
    H[0] = H[-1] = 0.0
    return _embed_profile(wire, s0, xs, H, rows)


# ---------------------------------------------------------------------------
# evaluation


def _triangle_quantities(crescent: CrescentMesh):
    mesh, X = crescent.mesh, crescent.X
    t = mesh.triangles
    p = mesh.vertices
    a2 = ((p[t[:, 1], 0] - p[t[:, 0], 0]) * (p[t[:, 2], 1] - p[t[:, 0], 1])
          - (p[t[:, 2], 0] - p[t[:, 0], 0]) * (p[t[:, 1], 1] - p[t[:, 0], 1]))
    if np.any(a2 <= 0):
        raise SolverError("degenerate or inverted reference triangle")
    # reference-coordinate derivatives of X per triangle
    e1 = p[t[:, 1]] - p[t[:, 0]]
    e2 = p[t[:, 2]] - p[t[:, 0]]
    E1 = X[t[:, 1]] - X[t[:, 0]]
    E2 = X[t[:, 2]] - X[t[:, 0]]
    inv = 1.0 / a2
    # d(u,v)/d(x,y) inverse of [[e1],[e2]]
    Xu = (E1 * e2[:, 1:2] - E2 * e1[:, 1:2]) * inv[:, None]
    Xv = (E2 * e1[:, 0:1] - E1 * e2[:, 0:1]) * inv[:, None]
    area_ref = 0.5 * a2
    return Xu, Xv, area_ref, E1, E2


def evaluate(crescent: CrescentMesh, chart: Optional[TubularChart] = None,
             lam: Optional[float] = None) -> SolveReport:
    """Energies, lengths, conformality, and geometry measurements."""
    Xu, Xv, area_ref, E1, E2 = _triangle_quantities(crescent)
    gu = np.einsum("ij,ij->i", Xu, Xu)
    gv = np.einsum("ij,ij->i", Xv, Xv)
    guv = np.einsum("ij,ij->i", Xu, Xv)
    D = float(np.sum(0.5 * (gu + gv) * area_ref))
    area = float(np.sum(0.5 * np.linalg.norm(np.cross(E1, E2), axis=1)))
    dens = gu + gv
    conf = float(np.sum(((gu - gv) ** 2 + 4 * guv ** 2) / np.maximum(dens, 1e-300) ** 2
                        * area_ref) / np.sum(area_ref))
    thread_len = crescent.thread_length()
    span = crescent.wire_span()
    ell = crescent.wire.total_length
    ell_M = ell - span + thread_len
    kap, kres, _ = extract_kappa(crescent)
    r_max = float("nan")
    if chart is not None:
        r_max = max_tube_radius(crescent, chart)
    gap = float("nan") if lam is None else ell_M - (ell - lam)
    return SolveReport(D=D, area=area, thread_len=thread_len,
                       wire_seg_len=span, ell_M=ell_M, kappa=kap,
                       kappa_residual=kres, conformality=conf, r_max=r_max,
                       constraint_gap=gap, converged=False)


def max_tube_radius(crescent: CrescentMesh, chart: TubularChart) -> float:
    rmax = 0.0
    for p in crescent.X:
        res = chart.project(p)
        if not res.inside:
            raise SolverError("surface exits the tubular chart")
        rmax = max(rmax, res.r)
    return float(rmax)


# ---------------------------------------------------------------------------
# kappa extraction


def _discrete_curvature(P: np.ndarray):
    """(magnitude, curvature vector) at interior polyline vertices via the
    circumscribed circle of each consecutive triple."""
    a, b, c = P[:-2], P[1:-1], P[2:]
    ab, bc, ca = b - a, c - b, a - c
    la = np.linalg.norm(ab, axis=1)
    lb = np.linalg.norm(bc, axis=1)
    lc = np.linalg.norm(ca, axis=1)
    cross = np.cross(ab, bc)
    area2 = np.linalg.norm(cross, axis=1)
    kappa = 2.0 * area2 / np.maximum(la * lb * lc, 1e-300)
    # curvature vector direction: second difference w.r.t. arclength
    d1 = ab / np.maximum(la, 1e-300)[:, None]
    d2 = bc / np.maximum(lb, 1e-300)[:, None]
    vec = d2 - d1
    nv = np.linalg.norm(vec, axis=1, keepdims=True)
    vec = np.where(nv > 1e-14, vec / np.maximum(nv, 1e-300), 0.0)
    return kappa, vec


def _thread_inward_directions(crescent: CrescentMesh) -> np.ndarray:
    """Unit directions from each interior thread vertex into the surface."""
    mesh = crescent.mesh
    upper = mesh.upper
    below = []
    for vid in upper[1:-1]:
        # the vertex one row down in the same column
        col = next(ids for ids in mesh.columns if ids[-1] == vid and len(ids) > 1)
        below.append(col[-2])
    d = crescent.X[below] - crescent.X[upper[1:-1]]
    n = np.linalg.norm(d, axis=1, keepdims=True)
    return d / np.maximum(n, 1e-300)


def thread_offsets(crescent: CrescentMesh) -> np.ndarray:
    """Distance from each thread vertex to the wire (nearest dense sample)."""
    tree = cKDTree(crescent.wire.points)
    d, _ = tree.query(crescent.thread_points)
    return d


def detached_mask(crescent: CrescentMesh, rel: float = 0.25) -> np.ndarray:
    """Thread vertices that have genuinely left the wire.

    The minimizer's thread typically coincides with the wire near the
    attachment corners and detaches only in the middle; curvature statistics
    are meaningful on the detached part."""
    d = thread_offsets(crescent)
    return d > rel * float(np.max(d))


def extract_kappa(crescent: CrescentMesh) -> Tuple[float, float, float]:
    """(kappa, constancy residual, alignment residual) of the free thread,
    measured on its detached portion.

    Sign convention: kappa > 0 when the thread's curvature vector points away
    from the surface (outer side-normal), which is the equilibrium direction
    of a length-constrained free boundary."""
    P = crescent.thread_points
    if len(P) < 8:
        raise SolverError("thread polyline too short for curvature extraction")
    mag, vec = _discrete_curvature(P)
    inward = _thread_inward_directions(crescent)
    sign = -np.sign(np.einsum("ij,ij->i", vec, inward))
    sign[sign == 0] = 1.0
    signed = mag * sign
    free = detached_mask(crescent)[1:-1]
    if np.count_nonzero(free) < 5:
        free = np.ones(len(signed), dtype=bool)
    med = float(np.median(signed[free]))
    q75, q25 = np.percentile(signed[free], [75, 25])
    residual = float((q75 - q25) / max(abs(med), 1e-12))
    # alignment: curvature vector should lie in the plane spanned by the
    # thread tangent and the inward surface direction
    t_dir = P[2:] - P[:-2]
    t_dir /= np.maximum(np.linalg.norm(t_dir, axis=1, keepdims=True), 1e-300)
    normal = np.cross(t_dir, inward)
    nn = np.linalg.norm(normal, axis=1, keepdims=True)
    normal = np.where(nn > 1e-14, normal / np.maximum(nn, 1e-300), 0.0)
    mask = (mag > 1e-10) & free
    if np.any(mask):
        align = float(np.mean(np.abs(
            np.einsum("ij,ij->i", vec[mask], normal[mask]))))
    else:
        align = 0.0
        med, residual = 0.0, 0.0
    return med, residual, align


def dido_kappa(chord: float, length: float) -> float:
    """Curvature of the planar circular arc of given chord and length."""
    if not (0 < chord < length):
        raise SolverError("need chord < arc length")
    if length >= math.pi * chord / 2 * 1.9999:
        raise SolverError("arc longer than a near-full circle is ambiguous")

    def f(kappa):
        # chord(kappa) = (2/kappa) sin(kappa * length / 2)
        return 2.0 / kappa * math.sin(kappa * length / 2.0) - chord

    hi = 2.0 * math.pi / length * 0.999
    return float(brentq(f, 1e-9, hi, xtol=1e-14))


# ---------------------------------------------------------------------------
# minimization


def minimize(problem: ThreadProblem,
             init: Optional[CrescentMesh] = None) -> Tuple[CrescentMesh, SolveReport]:
    """Augmented-Lagrangian minimization of the Dirichlet energy under the
    thread-length constraint g = ell(M) - L = 0.

    Interior vertices are eliminated exactly by a discrete-harmonic re-solve
    (envelope theorem: their gradient contribution vanishes), the remaining
    variables - attachment parameters t_i (kept monotone via a squared-
    spacing parametrization) and free thread vertices - are descended with
    L-BFGS-B per multiplier update."""
    from scipy.optimize import minimize as scipy_minimize

    wire = problem.wire
    lam = problem.lam
    st = problem.settings
    cres = init if init is not None else build_competitor_P0(
        wire, lam, profile="hugging")
    mesh = cres.mesh
    ell = wire.total_length

    K = stiffness_matrix(mesh.vertices, mesh.triangles).tocsr()
    int_idx = mesh.interior
    bnd_idx = mesh.boundary
    lu = splu(K[int_idx][:, int_idx].tocsc())
    A_ib = K[int_idx][:, bnd_idx].tocsr()

    lower = mesh.lower
    upper = mesh.upper
    upper_int = upper[1:-1]
    n_low = len(lower)

    # variables: z = [t_first, spacing roots d_2..d_n, thread xyz...]
    def unpack(z):
        t = z[0] + np.concatenate([[0.0], np.cumsum(z[1:n_low] ** 2)])
        P = z[n_low:].reshape(-1, 3)
        return t, P

    def pack(t, P):
        d = np.sqrt(np.maximum(np.diff(t), 0.0))
        return np.concatenate([[t[0]], d, P.ravel()])

    def positions(t, Pthr):
        X = cres.X.copy()
        X[lower] = wire.point(np.mod(t, ell))
        X[upper_int] = Pthr
        X[int_idx] = lu.solve(-A_ib @ X[bnd_idx])
        return X

    state = {"iters": 0}

    def merit_and_grad(z, mu, rho):
        state["iters"] += 1
        t, Pthr = unpack(z)
        X = positions(t, Pthr)
        KX = K @ X
        D = 0.5 * float(np.einsum("ij,ij->", X, KX))
        thr = _polyline_length(X[upper])
        g = thr - (t[-1] - t[0]) + lam            # = ell(M) - L
        merit = D + mu * g + 0.5 * rho * g * g
        lam_eff = mu + rho * g
        gthr_len = _polyline_length_grad(X[upper])
        grad_P = KX[upper_int] + lam_eff * gthr_len[1:-1]
        tang = wire.tangent(np.mod(t, ell))
        grad_t = np.einsum("ij,ij->i", KX[lower], tang)
        # corners are thread endpoints: chain rule through Gamma(t).
        # the upper arc runs right-to-left, so upper[0] pairs with t[-1]
        grad_t[-1] += lam_eff * float(gthr_len[0] @ tang[-1])
        grad_t[0] += lam_eff * float(gthr_len[-1] @ tang[0])
        # span term of g: dg/dt_first = +1, dg/dt_last = -1
        grad_t[0] += lam_eff
        grad_t[-1] -= lam_eff
        # chain rule into (t_first, spacing roots)
        rev = np.cumsum(grad_t[::-1])[::-1]
        grad_z = np.concatenate([[rev[0]], 2.0 * z[1:n_low] * rev[1:],
                                 grad_P.ravel()])
        return merit, grad_z, D, g

    z = pack(cres.t_lower, cres.X[upper_int])
    mu = 0.0
    rho = st.rho0 if st.rho0 is not None else 10.0 * wire.kappa_max / max(lam, 1e-6)
    _, _, D, g = merit_and_grad(z, mu, rho)
    converged = False
    for outer in range(st.max_outer):
        prev_gap = abs(g)
        res = scipy_minimize(
            lambda zz: merit_and_grad(zz, mu, rho)[:2], z,
            jac=True, method="L-BFGS-B",
            options={"maxiter": st.max_inner, "ftol": st.tol_energy,
                     "gtol": 1e-12})
        z = res.x
        _, _, D, g = merit_and_grad(z, mu, rho)
        mu += rho * g
        if abs(g) <= st.tol_constraint * ell and res.nit <= 2:
            converged = True
            break
        if abs(g) > 0.5 * prev_gap and abs(g) > st.tol_constraint * ell:
            rho *= 2.0
        if state["iters"] > st.iteration_cap:
            break

    t, Pthr = unpack(z)
    X = positions(t, Pthr)
    out = CrescentMesh(mesh=mesh, X=X, t_lower=t, wire=wire)
    rep = evaluate(out, lam=lam)
    rep.converged = converged and abs(rep.constraint_gap) <= 10 * st.tol_constraint * ell
    rep.iterations = state["iters"]
    rep.mu = mu
    return out, rep


# ---------------------------------------------------------------------------
# verifications


def verify_convex_hull(crescent: CrescentMesh, tol: Optional[float] = None
                       ) -> Tuple[float, bool]:
    """Max signed distance of surface vertices outside the hull of the
    attached wire samples; degenerate (planar/collinear) hulls fall back to
    lower-dimensional tests."""
    from scipy.spatial import ConvexHull, QhullError

    t0, t1 = crescent.t_lower[0], crescent.t_lower[-1]
    ss = np.linspace(t0, t1, 4 * len(crescent.t_lower))
    W = crescent.wire.point(np.mod(ss, crescent.wire.total_length))
    P = crescent.X
    if tol is None:
        tol = 5.0 * crescent.mesh.cell_size ** 2 * max(crescent.wire.kappa_max, 1.0)
    try:
        hull = ConvexHull(W)
        A, b = hull.equations[:, :3], hull.equations[:, 3]
        margin = float(np.max(A @ P.T + b[:, None]))
    except QhullError:
        # planar or collinear wire segment: split into in-plane hull distance
        # and out-of-plane deviation
        c = W.mean(axis=0)
        U, S, Vt = np.linalg.svd(W - c, full_matrices=False)
        if S[1] < 1e-10 * max(S[0], 1.0):      # collinear
            d = Vt[0]
            proj = (P - c) @ d
            perp = P - c - proj[:, None] * d[None, :]
            margin = float(np.max(np.linalg.norm(perp, axis=1)))
        else:                                   # planar
            n = Vt[2]
            out_plane = np.abs((P - c) @ n)
            uv_w = (W - c) @ Vt[:2].T
            uv_p = (P - c) @ Vt[:2].T
            hull2 = ConvexHull(uv_w)
            A2, b2 = hull2.equations[:, :2], hull2.equations[:, 2]
            in_plane = np.max(A2 @ uv_p.T + b2[:, None], axis=0)
            margin = float(max(np.max(out_plane), np.max(in_plane)))
    return margin, margin <= tol


def verify_near_wire(crescent: CrescentMesh, chart: TubularChart, lam: float,
                     slack: float = 0.5) -> dict:
    k0 = crescent.wire.kappa_max
    r_max = max_tube_radius(crescent, chart)
    area = evaluate(crescent).area
    r_bound = math.sqrt(2.0 * lam / (math.pi * k0)) * (1.0 + slack)
    a_bound = lam / k0 * (1.0 + slack)
    return {
        "r_max": r_max,
        "r_bound": r_bound,
        "r_ok": r_max <= r_bound,
        "area": area,
        "area_bound": a_bound,
        "area_ok": area <= a_bound,
        "holds": (r_max <= r_bound) and (area <= a_bound),
    }


def verify_slicewise(crescent: CrescentMesh, chart: TubularChart,
                     n_slices: int = 50) -> dict:
    """Level sets of the pulled-back arclength must be single curves from the
    lower to the upper boundary."""
    from .harmonic import DiscField, extract_level_graph

    mesh = crescent.mesh
    ell = crescent.wire.total_length
    s_hat = np.empty(mesh.n_vertices)
    s_mid = 0.5 * (crescent.t_lower[0] + crescent.t_lower[-1])
    for i, p in enumerate(crescent.X):
        res = chart.project(p)
        if not res.inside:
            return {"holds": False, "reason": f"vertex {i} exits the chart"}
        s = res.s
        # unwrap near the attachment window
        while s - s_mid > ell / 2:
            s -= ell
        while s - s_mid < -ell / 2:
            s += ell
        s_hat[i] = s
    s_hat[mesh.lower] = crescent.t_lower
    fld = DiscField(mesh=mesh, h=s_hat, boundary_label="s-hat")
    s0, s1 = crescent.t_lower[0], crescent.t_lower[-1]
    samples = np.linspace(s0, s1, n_slices + 2)[1:-1]
    bad = []
    for s in samples:
        g = extract_level_graph(fld, float(s))
        n_low = sum(1 for n in g.nodes if n.kind == "lower-boundary")
        n_up = sum(1 for n in g.nodes if n.kind == "upper-boundary")
        ok = (g.n_components == 1 and g.cycles == 0
              and n_low >= 1 and n_up == 1)
        if not ok:
            bad.append((float(s), g.n_components, n_low, n_up, g.cycles))
    # outside the attachment window the level set must be empty
    for s in (s0 - 0.05 * (s1 - s0), s1 + 0.05 * (s1 - s0)):
        g = extract_level_graph(fld, float(s))
        if g.n_components != 0:
            bad.append((float(s), g.n_components, -1, -1, g.cycles))
    return {"holds": not bad, "bad_slices": bad, "n_checked": len(samples)}


def enclosure_probe(crescent: CrescentMesh, chart: TubularChart
                    ) -> Tuple[float, float, float]:
    """(boundary max radius r1, Dirichlet energy alpha, interior max radius r2)."""
    bnd = crescent.mesh.boundary
    r1 = 0.0
    for p in crescent.X[bnd]:
        res = chart.project(p)
        if not res.inside:
            raise SolverError("boundary exits the chart")
        r1 = max(r1, res.r)
    alpha = evaluate(crescent).D
    r2 = max_tube_radius(crescent, chart)
    return float(r1), float(alpha), float(r2)


# ---------------------------------------------------------------------------
# export


def dump_mesh(crescent: CrescentMesh, path) -> None:
    """ASCII dump: `v x y z` vertices, `f i j k` faces, `b role id` boundary."""
    with open(path, "w") as fh:
        for p in crescent.X:
            fh.write(f"v {p[0]:.12g} {p[1]:.12g} {p[2]:.12g}\n")
        for tri in crescent.mesh.triangles:
            fh.write(f"f {tri[0]} {tri[1]} {tri[2]}\n")
        for v in crescent.mesh.lower:
            fh.write(f"b lower {v}\n")
        for v in crescent.mesh.upper:
            fh.write(f"b upper {v}\n")
