"""Discrete harmonic fields on the unit disc and their level-set graphs.

Provides the harmonic Dirichlet solve, boundary sign-change counting, the
vanishing order of a field at an interior point, extraction of a level set as
a planar graph (marching triangles with critical-point merging), the
tree/point/boundary classification of level components, and the
plane-crescent classification built on the same machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .discmesh import DiscMesh, DiscPoisson, build_disc_mesh, cached_poisson

__all__ = [
    "HarmonicError",
    "DiscField",
    "LevelGraph",
    "GraphNode",
    "GraphEdge",
    "ComponentVerdict",
    "solve_harmonic",
    "sign_changes",
    "vanishing_order",
    "extract_level_graph",
    "hls_classify",
    "flood_fill_counts",
    "plane_crescent_classify",
]

_GRAD_TOL = 1e-4      # critical-vertex threshold, relative to field scale
_ZERO_TOL = 1e-9      # on-level vertex threshold, relative to field scale


class HarmonicError(ValueError):
    """Invalid field, plateau, or ambiguous numeric verdict."""


@dataclass(frozen=True)
class DiscField:
    """Scalar vertex field on a DiscMesh (harmonic when built by solve)."""

    mesh: DiscMesh
    h: np.ndarray
    boundary_label: str = "custom"
    laplace_residual: Optional[float] = None

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.h - np.mean(self.h)))) or 1.0

    def at(self, points) -> np.ndarray:
        return self.mesh.interpolate(self.h, points)


def solve_harmonic(boundary_data: Union[Callable[[np.ndarray], np.ndarray], np.ndarray],
                   rings: int = 64, sectors: Optional[int] = None,
                   label: str = "custom") -> DiscField:
    """Discrete harmonic extension of boundary data given as a function of
    the boundary angle theta (or as per-boundary-vertex values)."""
    sectors = 2 * rings if sectors is None else sectors
    poisson = cached_poisson(rings, sectors)
    mesh = poisson.mesh
    vb = mesh.vertices[mesh.boundary]
    if callable(boundary_data):
        theta = np.arctan2(vb[:, 1], vb[:, 0])
        g = np.asarray(boundary_data(theta), dtype=float)
        g = np.broadcast_to(g, (len(vb),)).astype(float)
    else:
        g = np.asarray(boundary_data, dtype=float)
    h = poisson.solve(g)
    resid = poisson.residual(h)
    scale = max(float(np.max(np.abs(g - np.mean(g)))), 1e-30)
    if resid > 1e-10 * max(scale, 1.0):
        raise HarmonicError(f"harmonic solve residual {resid:g} too large")
    if h[mesh.interior].size:
        lo, hi = float(np.min(g)), float(np.max(g))
        pad = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.min(h) < lo - pad or np.max(h) > hi + pad:
            raise HarmonicError("discrete maximum principle violated")
    return DiscField(mesh=mesh, h=h, boundary_label=label, laplace_residual=resid)


def harmonic_polynomial(k: int, part: str = "re") -> Callable[[np.ndarray], np.ndarray]:
    """Boundary trace of Re/Im z^k on the unit circle as a function of theta."""
    if part == "re":
        return lambda th: np.cos(k * th)
    return lambda th: np.sin(k * th)


# ---------------------------------------------------------------------------
# boundary sign changes (Rado)


def sign_changes(field: DiscField, a: float) -> int:
    """Cyclic count of sign alternations of h - a around the boundary ring.

    Tolerance-isolated zeros are dropped; two consecutive boundary zeros are
    a plateau and raise."""
    b = field.h[field.mesh.boundary] - a
    scale = max(float(np.max(np.abs(b))), 1e-30)
    zero = np.abs(b) <= _ZERO_TOL * scale
    if np.all(zero):
        raise HarmonicError("boundary plateau at the requested level")
    if np.any(zero & np.roll(zero, 1)):
        raise HarmonicError("boundary plateau at the requested level")
    s = np.sign(b[~zero])
    return int(np.sum(s != np.roll(s, 1)))


# ---------------------------------------------------------------------------
# vanishing order via ring Fourier fit


def vanishing_order(field: DiscField, p: Sequence[float], *,
                    n_angles: int = 256, rel_threshold: float = 0.05) -> int:
    """Leading-degree estimate of h - h(p) at interior point p.

    Samples h on a circle around p and reads the lowest Fourier mode carrying
    a significant fraction of the oscillation; returns m = k - 1 (the order
    through which derivatives vanish).  The local level-set valence is
    2k = 2(m + 1)."""
    p = np.asarray(p, dtype=float)
    rp = float(np.hypot(p[0], p[1]))
    if rp >= 1.0 - 2 * field.mesh.cell_size:
        raise HarmonicError("vanishing_order needs an interior point")
    rho = min(0.5, 0.8 * (1.0 - rp))
    th = 2 * np.pi * np.arange(n_angles) / n_angles
    ring = p[None, :] + rho * np.column_stack([np.cos(th), np.sin(th)])
    g = field.at(ring)
    g = g - float(field.at(p[None, :])[0])
    c = np.abs(np.fft.rfft(g)) / n_angles
    c[0] = 0.0
    cmax = float(np.max(c))
    if cmax <= 1e-12 * max(field.scale, float(np.max(np.abs(field.h))), 1e-30):
        raise HarmonicError("field is locally constant; order undefined")
    ks = np.nonzero(c >= rel_threshold * cmax)[0]
    k = int(ks[0])
    return k - 1


# ---------------------------------------------------------------------------
# level graph extraction


@dataclass
class GraphNode:
    position: np.ndarray
    kind: str                 # interior | lower-boundary | upper-boundary
    valence: int
    component: int


@dataclass
class GraphEdge:
    node_a: int
    node_b: int
    polyline: np.ndarray
    component: int


@dataclass
class LevelGraph:
    nodes: List[GraphNode]
    edges: List[GraphEdge]
    n_components: int
    cycles: int
    degenerate: bool = False
    plateau_triangles: int = 0
    isolated_points: int = 0

    def component_nodes(self, cid: int) -> List[int]:
        return [i for i, n in enumerate(self.nodes) if n.component == cid]

    def component_edges(self, cid: int) -> List[int]:
        return [i for i, e in enumerate(self.edges) if e.component == cid]


class _UnionFind:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, i):
        while self.p[i] != i:
            self.p[i] = self.p[self.p[i]]
            i = self.p[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.p[ri] = rj


def _vertex_gradients(mesh: DiscMesh, h: np.ndarray) -> np.ndarray:
    """Per-vertex gradient magnitude (area-weighted average over triangles)."""
    t = mesh.triangles
    p = mesh.vertices
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    area2 = ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
             - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))
    ha, hb, hc = h[t[:, 0]], h[t[:, 1]], h[t[:, 2]]
    gx = (ha * (b[:, 1] - c[:, 1]) + hb * (c[:, 1] - a[:, 1])
          + hc * (a[:, 1] - b[:, 1])) / area2
    gy = (ha * (c[:, 0] - b[:, 0]) + hb * (a[:, 0] - c[:, 0])
          + hc * (b[:, 0] - a[:, 0])) / area2
    gmag_tri = np.hypot(gx, gy)
    w = np.abs(area2)
    num = np.zeros(len(p))
    den = np.zeros(len(p))
    for i in range(3):
        np.add.at(num, t[:, i], gmag_tri * w)
        np.add.at(den, t[:, i], w)
    return num / np.maximum(den, 1e-300)


def extract_level_graph(field: DiscField, a: float) -> LevelGraph:
    """Trace the level set {h = a} as a graph on the triangulation.

    Entities are on-level vertices and sign-change edge crossings; per
    triangle they are linked by the local sign pattern.  Entities of degree
    other than 2, boundary entities, and entities near small-gradient
    (critical) vertices become graph nodes; nodes closer than two mesh cells
    are merged, so a critical point of local degree k collects its 2k rays
    into a single node of valence 2k."""
    mesh = field.mesh
    h = field.h
    scale = max(float(np.max(np.abs(h - a))), 1e-30)
    state = np.sign(h - a)
    state[np.abs(h - a) <= _ZERO_TOL * scale] = 0.0

    if np.all(state == 0):
        return LevelGraph([], [], 0, 0, degenerate=True,
                          plateau_triangles=len(mesh.triangles))

    boundary_set = set(int(v) for v in mesh.boundary)
    lower_set = set(int(v) for v in mesh.lower)
    upper_set = set(int(v) for v in mesh.upper)

    # entity registry
    ent_pos: List[np.ndarray] = []
    ent_vertex: List[int] = []            # mesh vertex id or -1 for crossings
    vert_ent: Dict[int, int] = {}
    edge_ent: Dict[Tuple[int, int], int] = {}

    def vertex_entity(v: int) -> int:
        if v not in vert_ent:
            vert_ent[v] = len(ent_pos)
            ent_pos.append(mesh.vertices[v].copy())
            ent_vertex.append(v)
        return vert_ent[v]

    def crossing_entity(u: int, v: int) -> int:
        key = (u, v) if u < v else (v, u)
        if key not in edge_ent:
            hu, hv = h[u] - a, h[v] - a
            t = hu / (hu - hv)
            edge_ent[key] = len(ent_pos)
            ent_pos.append((1 - t) * mesh.vertices[u] + t * mesh.vertices[v])
            ent_vertex.append(-1)
        return edge_ent[key]

    adj: Dict[int, set] = {}

    def connect(e1: int, e2: int):
        adj.setdefault(e1, set()).add(e2)
        adj.setdefault(e2, set()).add(e1)

    plateau_triangles = 0
    for tri in mesh.triangles:
        sv = state[tri]
        zeros = [int(v) for v, s in zip(tri, sv) if s == 0]
        pos = [int(v) for v, s in zip(tri, sv) if s > 0]
        neg = [int(v) for v, s in zip(tri, sv) if s < 0]
        if len(zeros) == 3:
            plateau_triangles += 1
            e = [vertex_entity(v) for v in zeros]
            connect(e[0], e[1]); connect(e[1], e[2]); connect(e[0], e[2])
            continue
        if len(zeros) == 2:
            connect(vertex_entity(zeros[0]), vertex_entity(zeros[1]))
            continue
        if len(zeros) == 1:
            ev = vertex_entity(zeros[0])
            if pos and neg:
                connect(ev, crossing_entity(pos[0], neg[0]))
            continue
        if pos and neg:
            if len(pos) == 1:
                u = pos[0]
                connect(crossing_entity(u, neg[0]), crossing_entity(u, neg[1]))
            else:
                u = neg[0]
                connect(crossing_entity(pos[0], u), crossing_entity(pos[1], u))

    n_ent = len(ent_pos)
    if n_ent == 0:
        return LevelGraph([], [], 0, 0)
    for e in range(n_ent):
        adj.setdefault(e, set())

    # connected components over entities
    uf = _UnionFind(n_ent)
    for e1, nbrs in adj.items():
        for e2 in nbrs:
            uf.union(e1, e2)
    comp_root: Dict[int, int] = {}
    comp_of = np.empty(n_ent, dtype=int)
    for e in range(n_ent):
        r = uf.find(e)
        comp_of[e] = comp_root.setdefault(r, len(comp_root))
    n_components = len(comp_root)

    # node selection
    gmag = _vertex_gradients(mesh, h)
    crit_vertex = gmag < _GRAD_TOL * scale
    is_node = np.zeros(n_ent, dtype=bool)
    is_bnd_hit = np.zeros(n_ent, dtype=bool)
    for e in range(n_ent):
        deg = len(adj[e])
        v = ent_vertex[e]
        on_bnd = v in boundary_set if v >= 0 else False
        near_crit = crit_vertex[v] if v >= 0 else False
        if deg != 2 or on_bnd or near_crit:
            is_node[e] = True
        if on_bnd:
            is_bnd_hit[e] = True
    # crossing entities on boundary edges are boundary hits too
    bnd_ring = mesh.boundary
    bnd_edges = set()
    for i in range(len(bnd_ring)):
        u, v = int(bnd_ring[i]), int(bnd_ring[(i + 1) % len(bnd_ring)])
        bnd_edges.add((u, v) if u < v else (v, u))
    for key, e in edge_ent.items():
        if key in bnd_edges:
            is_node[e] = True
            is_bnd_hit[e] = True
    if not np.any(is_node):
        # pure closed loops: promote one entity per component
        seen = set()
        for e in range(n_ent):
            if comp_of[e] not in seen:
                seen.add(comp_of[e])
                is_node[e] = True

    # make sure every component with entities but no node gets one
    comps_with_nodes = set(comp_of[np.nonzero(is_node)[0]])
    for e in range(n_ent):
        c = comp_of[e]
        if c not in comps_with_nodes:
            is_node[e] = True
            comps_with_nodes.add(c)

    # merge nearby node entities (within 2 mesh cells, same component)
    node_ids = np.nonzero(is_node)[0]
    merge_r = 2.0 * mesh.cell_size
    nuf = _UnionFind(len(node_ids))
    npos = np.array([ent_pos[e] for e in node_ids])
    for i in range(len(node_ids)):
        d = np.hypot(*(npos - npos[i]).T)
        for j in np.nonzero(d <= merge_r)[0]:
            # merging exists to collect the rays of an interior critical
            # point; two distinct boundary hits are never the same node
            if (comp_of[node_ids[i]] == comp_of[node_ids[j]]
                    and not (is_bnd_hit[node_ids[i]] and is_bnd_hit[node_ids[j]])):
                nuf.union(i, j)
    cluster_of_ent: Dict[int, int] = {}
    cluster_members: Dict[int, List[int]] = {}
    for i, e in enumerate(node_ids):
        r = nuf.find(i)
        cluster_of_ent[e] = r
        cluster_members.setdefault(r, []).append(e)

    cluster_index: Dict[int, int] = {}
    nodes: List[GraphNode] = []
    for r, members in cluster_members.items():
        pos = np.mean([ent_pos[e] for e in members], axis=0)
        kinds = set()
        for e in members:
            v = ent_vertex[e]
            if v >= 0 and v in boundary_set:
                kinds.add("lower-boundary" if v in lower_set else "upper-boundary")
            elif v < 0:
                for key, ee in edge_ent.items():
                    if ee == e and key in bnd_edges:
                        u, w = key
                        y = 0.5 * (mesh.vertices[u, 1] + mesh.vertices[w, 1])
                        kinds.add("lower-boundary" if y <= 0 else "upper-boundary")
                        break
        if "lower-boundary" in kinds:
            kind = "lower-boundary"
        elif "upper-boundary" in kinds:
            kind = "upper-boundary"
        else:
            kind = "interior"
        cluster_index[r] = len(nodes)
        nodes.append(GraphNode(position=pos, kind=kind, valence=0,
                               component=int(comp_of[members[0]])))

    def node_of(e: int) -> Optional[int]:
        r = cluster_of_ent.get(e)
        return None if r is None else cluster_index[r]

    # walk chains between node clusters
    isolated_points = sum(1 for e in node_ids if len(adj[e]) == 0)
    edges = _collect_edges(adj, ent_pos, node_of, cluster_of_ent, comp_of, merge_r)
    for ed in edges:
        nodes[ed.node_a].valence += 1
        nodes[ed.node_b].valence += 1

    n_nodes_per_comp: Dict[int, int] = {}
    n_edges_per_comp: Dict[int, int] = {}
    for n in nodes:
        n_nodes_per_comp[n.component] = n_nodes_per_comp.get(n.component, 0) + 1
    for ed in edges:
        n_edges_per_comp[ed.component] = n_edges_per_comp.get(ed.component, 0) + 1
    cycles = 0
    for c in range(n_components):
        v = n_nodes_per_comp.get(c, 0)
        ee = n_edges_per_comp.get(c, 0)
        cycles += max(0, ee - v + 1) if v else 0

    return LevelGraph(nodes=nodes, edges=edges, n_components=n_components,
                      cycles=cycles, degenerate=plateau_triangles > 0,
                      plateau_triangles=plateau_triangles,
                      isolated_points=isolated_points)


def _collect_edges(adj, ent_pos, node_of, cluster_of_ent, comp_of,
                   merge_r) -> List[GraphEdge]:
    edges: List[GraphEdge] = []
    visited = set()
    for e in list(cluster_of_ent.keys()):
        na = node_of(e)
        for nb_ent in adj[e]:
            if (e, nb_ent) in visited:
                continue
            poly = [ent_pos[e]]
            prev, cur = e, nb_ent
            visited.add((e, nb_ent))
            while True:
                poly.append(ent_pos[cur])
                if node_of(cur) is not None:
                    visited.add((cur, prev))
                    nb = node_of(cur)
                    arr = np.asarray(poly)
                    length = float(np.sum(np.hypot(*np.diff(arr, axis=0).T)))
                    # chains that never leave the merged cluster are
                    # bookkeeping, not geometry
                    if not (cluster_of_ent[cur] == cluster_of_ent[e]
                            and length <= 1.001 * merge_r):
                        edges.append(GraphEdge(node_a=na, node_b=nb,
                                               polyline=arr,
                                               component=int(comp_of[e])))
                    break
                nxt = [x for x in adj[cur] if x != prev]
                if not nxt:
                    edges.append(GraphEdge(node_a=na, node_b=na,
                                           polyline=np.asarray(poly),
                                           component=int(comp_of[e])))
                    break
                prev, cur = cur, nxt[0]
                visited.add((prev, cur))
    # each undirected chain was discovered from both ends; dedupe
    out: List[GraphEdge] = []
    seen_keys = set()
    for ed in edges:
        key = tuple(sorted((ed.node_a, ed.node_b))) + (len(ed.polyline),
                    round(float(np.sum(ed.polyline)), 9))
        if key in seen_keys:
            continue
        seen_keys.add(key)
        out.append(ed)
    return out


# ---------------------------------------------------------------------------
# flood-fill oracle


def flood_fill_counts(field: DiscField, a: float) -> Tuple[int, int]:
    """Connected components of {h > a} and {h < a} over mesh vertices.

    On a disc, a level set made of non-crossing curves has
    C_level = C_sub + C_super - 1 components; used to cross-check the graph
    extraction."""
    mesh = field.mesh
    h = field.h
    scale = max(float(np.max(np.abs(h - a))), 1e-30)
    edges = np.vstack([mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]],
                       mesh.triangles[:, [2, 0]]])

    def count(mask):
        idx = np.nonzero(mask)[0]
        if len(idx) == 0:
            return 0
        remap = -np.ones(mesh.n_vertices, dtype=int)
        remap[idx] = np.arange(len(idx))
        keep = mask[edges[:, 0]] & mask[edges[:, 1]]
        ee = remap[edges[keep]]
        g = sp.coo_matrix((np.ones(len(ee)), (ee[:, 0], ee[:, 1])),
                          shape=(len(idx), len(idx)))
        n, _ = connected_components(g, directed=False)
        return n

    tol = _ZERO_TOL * scale
    return count(h > a + tol), count(h < a - tol)


# ---------------------------------------------------------------------------
# HLS classification


@dataclass
class ComponentVerdict:
    component: int
    kind: str                      # lower-boundary-point | tree | contains-upper | degenerate
    n_lower_nodes: int
    n_upper_nodes: int
    acyclic: bool


@dataclass
class HLSReport:
    verdicts: List[ComponentVerdict]
    hypothesis_a: bool             # no strict local extremum on the open upper arc
    hypothesis_b: bool             # finitely many (isolated) level points on the lower arc
    m_lower_hits: int
    component_bound_ok: bool
    degenerate: bool = False


def _upper_no_local_extrema(field: DiscField) -> bool:
    mesh = field.mesh
    h = field.h
    edges = np.vstack([mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]],
                       mesh.triangles[:, [2, 0]]])
    nbrs: Dict[int, set] = {}
    for u, v in edges:
        nbrs.setdefault(int(u), set()).add(int(v))
        nbrs.setdefault(int(v), set()).add(int(u))
    upper_open = [int(v) for v in mesh.upper
                  if abs(mesh.vertices[v, 1]) > 1e-14]
    for v in upper_open:
        vals = np.array([h[u] for u in nbrs[v]])
        if np.all(h[v] > vals) or np.all(h[v] < vals):
            return False
    return True


def _lower_hits(field: DiscField, a: float) -> Tuple[int, bool]:
    """Count isolated level-a points on the closed lower arc."""
    b = field.h[field.mesh.lower] - a
    scale = max(float(np.max(np.abs(field.h - a))), 1e-30)
    zero = np.abs(b) <= _ZERO_TOL * scale
    if np.any(zero & np.roll(zero, 1)) and len(b) > 1:
        # adjacent zeros along the arc (non-cyclic): plateau
        adjacent = zero[:-1] & zero[1:]
        if np.any(adjacent):
            return int(np.sum(zero)), False
    hits = int(np.sum(zero))
    s = np.sign(b)
    crossings = int(np.sum((s[:-1] * s[1:]) < 0))
    return hits + crossings, True


def hls_classify(field: DiscField, a: float,
                 graph: Optional[LevelGraph] = None) -> HLSReport:
    """Classify each component of the a-level set per the tree lemma."""
    if graph is None:
        graph = extract_level_graph(field, a)
    hyp_a = _upper_no_local_extrema(field)
    m, hyp_b = _lower_hits(field, a)
    if graph.degenerate:
        return HLSReport(verdicts=[ComponentVerdict(-1, "degenerate", 0, 0, False)],
                         hypothesis_a=hyp_a, hypothesis_b=hyp_b,
                         m_lower_hits=m, component_bound_ok=False, degenerate=True)

    # components touching the lower arc (the lemma bounds only those)
    upper_arc_len = len(field.mesh.upper)
    verdicts = []
    lower_touching = 0
    for c in range(graph.n_components):
        nidx = graph.component_nodes(c)
        eidx = graph.component_edges(c)
        n_lower = sum(1 for i in nidx if graph.nodes[i].kind == "lower-boundary")
        n_upper = sum(1 for i in nidx if graph.nodes[i].kind == "upper-boundary")
        v = len(nidx)
        e = len(eidx)
        acyclic = (e - v + 1) <= 0 if v else True
        if v == 1 and e == 0 and n_lower == 1:
            kind = "lower-boundary-point"
        elif n_upper > upper_arc_len // 2:
            kind = "contains-upper"
        else:
            kind = "tree"
        if n_lower > 0:
            lower_touching += 1
        verdicts.append(ComponentVerdict(component=c, kind=kind,
                                         n_lower_nodes=n_lower,
                                         n_upper_nodes=n_upper,
                                         acyclic=acyclic))
    bound_ok = (lower_touching <= m) if (hyp_a and hyp_b) else True
    return HLSReport(verdicts=verdicts, hypothesis_a=hyp_a, hypothesis_b=hyp_b,
                     m_lower_hits=m, component_bound_ok=bound_ok)


# ---------------------------------------------------------------------------
# plane-crescent classification


@dataclass
class PlaneCrescentVerdict:
    n_components: int
    m_wire_crossings: int
    count_ok: bool
    kinds: List[str]
    degenerate: bool = False


def plane_crescent_classify(crescent, plane: Tuple[np.ndarray, float],
                            window=None, tol: float = 1e-9) -> PlaneCrescentVerdict:
    """Classify components of the preimage of a plane through a crescent.

    ``crescent`` provides a DiscMesh as .mesh and 3-D vertex positions .X;
    the field h = <F, X> - a is traced on the disc.  ``window`` optionally
    restricts to a compact polygon W in plane coordinates; the image must
    stay clear of the window's relative boundary."""
    F, a = np.asarray(plane[0], dtype=float), float(plane[1])
    F = F / np.linalg.norm(F)
    mesh = crescent.mesh
    h = crescent.X @ F - a
    scale = float(np.max(np.abs(h)))
    if scale <= tol * max(1.0, float(np.max(np.abs(crescent.X)))):
        return PlaneCrescentVerdict(n_components=0, m_wire_crossings=0,
                                    count_ok=False, kinds=["degenerate-plateau"],
                                    degenerate=True)
    field = DiscField(mesh=mesh, h=h, boundary_label="plane-pullback")
    graph = extract_level_graph(field, 0.0)
    if graph.degenerate:
        return PlaneCrescentVerdict(n_components=graph.n_components,
                                    m_wire_crossings=0, count_ok=False,
                                    kinds=["degenerate-plateau"], degenerate=True)

    # basis of the plane for window coordinates
    tmp = np.array([1.0, 0.0, 0.0])
    if abs(F @ tmp) > 0.9:
        tmp = np.array([0.0, 1.0, 0.0])
    u = np.cross(F, tmp); u /= np.linalg.norm(u)
    v = np.cross(F, u)

    win_poly = None
    if window is not None:
        from shapely.geometry import Point, Polygon
        win_poly = Polygon(np.asarray(window, dtype=float))

    def in_window(pos2d_disc: np.ndarray) -> bool:
        if win_poly is None:
            return True
        from shapely.geometry import Point
        X3 = _map_to_surface(crescent, pos2d_disc)
        q = Point(float(X3 @ u), float(X3 @ v))
        if win_poly.exterior.distance(q) <= tol:
            raise HarmonicError("crescent image touches the window boundary")
        return bool(win_poly.contains(q))

    # wire crossings with the plane (restricted to the window)
    wire = getattr(crescent, "wire", None)
    m_cross = 0
    if wire is not None:
        gw = wire.points @ F - a
        s = np.sign(gw)
        for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
            t = gw[i] / (gw[i] - gw[i + 1])
            pt = (1 - t) * wire.points[i] + t * wire.points[i + 1]
            if win_poly is None:
                m_cross += 1
            else:
                from shapely.geometry import Point
                if win_poly.contains(Point(float(pt @ u), float(pt @ v))):
                    m_cross += 1

    kinds = []
    kept = 0
    for c in range(graph.n_components):
        nidx = graph.component_nodes(c)
        if not nidx:
            continue
        rep = graph.nodes[nidx[0]].position
        try:
            inside = in_window(rep)
        except HarmonicError:
            raise
        if not inside:
            continue
        kept += 1
        n_lower = sum(1 for i in nidx if graph.nodes[i].kind == "lower-boundary")
        n_upper = sum(1 for i in nidx if graph.nodes[i].kind == "upper-boundary")
        eidx = graph.component_edges(c)
        if len(nidx) == 1 and not eidx and n_lower == 1:
            kinds.append("lower-boundary-point")
        elif n_upper > len(mesh.upper) // 2:
            kinds.append("contains-upper")
        else:
            kinds.append("tree" if n_upper <= 1 else f"tree-{n_upper}-upper")
    count_ok = kept <= m_cross if m_cross > 0 else kept == 0 or wire is None
    return PlaneCrescentVerdict(n_components=kept, m_wire_crossings=m_cross,
                                count_ok=count_ok, kinds=kinds)


def _map_to_surface(crescent, p2d: np.ndarray) -> np.ndarray:
    tri_idx, bary = crescent.mesh.locate(np.atleast_2d(p2d))
    verts = crescent.X[crescent.mesh.triangles[tri_idx[0]]]
    return bary[0] @ verts
