"""Structured triangulation of the unit disc and P1 Laplace assembly.

The mesh is a polar grid of ``rings`` concentric circles with ``sectors``
vertices each (sectors must be even so the corner points (+1, 0) and (-1, 0)
are mesh-exact).  The outer ring is the boundary circle; vertices there with
y <= 0 form the lower boundary arc and vertices with y >= 0 the upper arc,
with the two corner points shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu


class MeshError(ValueError):
    """Degenerate or invalid mesh."""


@dataclass(frozen=True)
class DiscMesh:
    rings: int
    sectors: int
    vertices: np.ndarray          # (nv, 2)
    triangles: np.ndarray         # (nt, 3) int
    boundary: np.ndarray          # outer-ring vertex indices in cyclic order,
                                  # starting at (+1, 0), counterclockwise
    lower: np.ndarray             # boundary indices with y <= 0 (cyclic order)
    upper: np.ndarray             # boundary indices with y >= 0 (cyclic order)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary] = False
        return np.nonzero(mask)[0]

    @property
    def cell_size(self) -> float:
        return 1.0 / self.rings

    # -- structured point location -------------------------------------------

    def locate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Containing triangle index and barycentric coords per query point.

        Uses the polar structure: radius picks the ring annulus, angle picks
        the sector, and the two candidate triangles of the quad (or the fan
        triangle near the center) are tested directly.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.minimum(np.hypot(pts[:, 0], pts[:, 1]), 1.0 - 1e-15)
        th = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
        j = np.minimum((r * self.rings).astype(int), self.rings - 1)
        k = np.minimum((th / (2 * np.pi) * self.sectors).astype(int),
                       self.sectors - 1)
        ns, nr = self.sectors, self.rings
        # polar cells have straight edges, so points near a chord can sit in a
        # neighboring cell; test the 3x3 cell neighborhood and keep the best
        cand = []
        for dj in (0, -1, 1):
            jj = np.clip(j + dj, 0, nr - 1)
            for dk in (0, -1, 1):
                kk = (k + dk) % ns
                base = ns + 2 * ((jj - 1) * ns + kk)
                cand.append(np.where(jj == 0, kk, base))
                cand.append(np.where(jj == 0, kk, base + 1))
        cand = np.stack(cand, axis=1)                    # (n, 18)
        v = self.vertices
        t = self.triangles[cand]                         # (n, 18, 3)
        a, b, c = v[t[..., 0]], v[t[..., 1]], v[t[..., 2]]
        det = ((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
               - (c[..., 0] - a[..., 0]) * (b[..., 1] - a[..., 1]))
        px = pts[:, None, 0]
        py = pts[:, None, 1]
        w1 = ((px - a[..., 0]) * (c[..., 1] - a[..., 1])
              - (c[..., 0] - a[..., 0]) * (py - a[..., 1])) / det
        w2 = ((b[..., 0] - a[..., 0]) * (py - a[..., 1])
              - (px - a[..., 0]) * (b[..., 1] - a[..., 1])) / det
        w0 = 1.0 - w1 - w2
        bary = np.stack([w0, w1, w2], axis=-1)           # (n, 18, 3)
        best = np.argmax(bary.min(axis=-1), axis=1)
        rows = np.arange(len(pts))
        tri_idx = cand[rows, best]
        bary = bary[rows, best]
        return tri_idx, np.clip(bary, 0.0, 1.0)

    def interpolate(self, values: np.ndarray, points: np.ndarray) -> np.ndarray:
        tri_idx, bary = self.locate(points)
        vals = np.asarray(values)[self.triangles[tri_idx]]
        return np.einsum("ij,ij->i", bary, vals)


def build_disc_mesh(rings: int = 32, sectors: int = 64) -> DiscMesh:
    if rings < 2 or sectors < 8 or sectors % 2:
        raise MeshError("need rings >= 2 and even sectors >= 8")
    nr, ns = rings, sectors
    verts = [np.zeros((1, 2))]
    for j in range(1, nr + 1):
        th = 2 * np.pi * np.arange(ns) / ns
        rr = j / nr
        verts.append(np.column_stack([rr * np.cos(th), rr * np.sin(th)]))
    vertices = np.vstack(verts)

    def vid(j, k):
        if j == 0:
            return 0
        return 1 + (j - 1) * ns + (k % ns)

    tris = []
    for k in range(ns):           # center fan
        tris.append((0, vid(1, k), vid(1, k + 1)))
    for j in range(1, nr):        # annulus quads, split consistently
        for k in range(ns):
            a, b = vid(j, k), vid(j, k + 1)
            c, d = vid(j + 1, k), vid(j + 1, k + 1)
            tris.append((a, c, d))
            tris.append((a, d, b))
    triangles = np.asarray(tris, dtype=int)
    boundary = np.array([vid(nr, k) for k in range(ns)], dtype=int)
    y = vertices[boundary, 1]
    lower_mask = y <= 1e-15
    upper_mask = y >= -1e-15
    lower = boundary[lower_mask]
    # reorder lower to run from (+1,0) clockwise through the bottom:
    # boundary is CCW from angle 0; lower arc is angles in [pi, 2pi] plus 0
    ang = np.mod(np.arctan2(vertices[lower, 1], vertices[lower, 0]), 2 * np.pi)
    lower = lower[np.argsort(np.where(ang == 0.0, 2 * np.pi, ang))]
    upper = boundary[upper_mask]
    ang = np.arctan2(vertices[upper, 1], vertices[upper, 0])
    upper = upper[np.argsort(ang)]
    return DiscMesh(rings=nr, sectors=ns, vertices=vertices, triangles=triangles,
                    boundary=boundary, lower=lower, upper=upper)


def stiffness_matrix(vertices: np.ndarray, triangles: np.ndarray) -> sp.csr_matrix:
    """P1 cotangent stiffness matrix (vectorized assembly)."""
    t = triangles
    p = vertices[:, :2] if vertices.shape[1] > 2 else vertices
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    area2 = ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
             - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))
    if np.any(area2 <= 0):
        raise MeshError("degenerate or inverted triangle in mesh")
    # gradients of the barycentric hat functions
    g0 = np.column_stack([b[:, 1] - c[:, 1], c[:, 0] - b[:, 0]]) / area2[:, None]
    g1 = np.column_stack([c[:, 1] - a[:, 1], a[:, 0] - c[:, 0]]) / area2[:, None]
    g2 = np.column_stack([a[:, 1] - b[:, 1], b[:, 0] - a[:, 0]]) / area2[:, None]
    grads = np.stack([g0, g1, g2], axis=1)           # (nt, 3, 2)
    area = 0.5 * area2
    rows, cols, vals = [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(t[:, i])
            cols.append(t[:, j])
            vals.append(area * np.einsum("ij,ij->i", grads[:, i], grads[:, j]))
    K = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(len(p), len(p)))
    return K.tocsr()


class DiscPoisson:
    """Dirichlet solver on a DiscMesh with a cached interior factorization."""

    def __init__(self, mesh: DiscMesh):
        self.mesh = mesh
        self.K = stiffness_matrix(mesh.vertices, mesh.triangles)
        self.int_idx = mesh.interior
        self.bnd_idx = mesh.boundary
        A = self.K[self.int_idx][:, self.int_idx].tocsc()
        self.A_ib = self.K[self.int_idx][:, self.bnd_idx].tocsr()
        self._lu = splu(A)

    def solve(self, boundary_values: np.ndarray) -> np.ndarray:
        """Discrete harmonic extension of boundary vertex data."""
        g = np.asarray(boundary_values, dtype=float)
        if g.shape[0] != len(self.bnd_idx):
            raise MeshError("boundary data length mismatch")
        h = np.empty(self.mesh.n_vertices)
        h[self.bnd_idx] = g
        h[self.int_idx] = self._lu.solve(-self.A_ib @ g)
        return h

    def residual(self, h: np.ndarray) -> float:
        """Max interior residual of the discrete Laplace equation."""
        r = self.K @ h
        return float(np.max(np.abs(r[self.int_idx]))) if len(self.int_idx) else 0.0

    def dirichlet_energy(self, h: np.ndarray) -> float:
        return 0.5 * float(h @ (self.K @ h))


@lru_cache(maxsize=8)
def _cached_mesh(rings: int, sectors: int) -> DiscMesh:
    return build_disc_mesh(rings, sectors)


@lru_cache(maxsize=8)
def cached_poisson(rings: int, sectors: int) -> DiscPoisson:
    return DiscPoisson(_cached_mesh(rings, sectors))
