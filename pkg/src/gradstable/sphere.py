"""Certified sign maps of polynomials on small spheres and their topology.

The circle (n = 2) is cut into equal arcs, the 2-sphere (n = 3) into a
subdivided icosahedron.  Each cell is labelled NEG/POS when interval
arithmetic proves a strict sign on it, otherwise UNCERTIFIED; uncertified
cells are split adaptively.  Components, Euler characteristic and the first
Betti number are then read off the closed union of the cells on one side.

Sides follow the open/closed convention of the regions they stand for: the
NEG side (f < 0) uses certified cells only, the POS side (f >= 0) takes the
uncertified cells as well, since those are where the zero set may live.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .intervals import IntervalEvaluator
from .poly import NumericPolynomial, Polynomial

NEG_CERTIFIED = -1
UNCERTIFIED = 0
POS_CERTIFIED = 1

DEFAULT_RADII = (1 / 4, 1 / 8, 1 / 16, 1 / 32)
DEFAULT_LEVEL = 5
DEFAULT_EXTRA_LEVELS = 6
DEFAULT_CRITICAL_LEVELS = 24
CRITICAL_BUDGET = 50000
GRADING = 4.0
CERTIFIED_FRACTION_THRESHOLD = 0.99

_SNAP = 1e-15


class Side(str, enum.Enum):
    NEG = "NEG"
    POS = "POS"


class MeshError(ValueError):
    pass


def _snap(v: np.ndarray) -> np.ndarray:
    v = np.where(np.abs(v) < _SNAP, 0.0, v)
    return np.where(np.abs(np.abs(v) - 1.0) < _SNAP, np.sign(v), v)


def _normalize(v: np.ndarray) -> np.ndarray:
    return _snap(v / np.linalg.norm(v, axis=-1, keepdims=True))


# -- meshes ----------------------------------------------------------------


@dataclass
class SphericalMesh:
    """Cells covering the sphere of the given radius.

    ``vertices`` are unit vectors; ``points`` scales them by ``radius``.
    ``cells`` holds vertex indices: pairs (arcs) for n = 2, outward-oriented
    triples for n = 3.  ``depth`` counts adaptive splits below ``level``.
    """

    n: int
    radius: float
    vertices: np.ndarray
    cells: np.ndarray
    refinement_level: int
    depth: np.ndarray = None
    midpoints: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.depth is None:
            self.depth = np.zeros(len(self.cells), dtype=np.int64)

    @property
    def points(self) -> np.ndarray:
        return self.vertices * self.radius

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def scaled(self, radius: float) -> "SphericalMesh":
        return SphericalMesh(self.n, float(radius), self.vertices, self.cells, self.refinement_level,
                             self.depth.copy(), dict(self.midpoints))

    # facet structure (segments for n = 3, vertices for n = 2) ------------

    def _registry_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.midpoints:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        keys = np.fromiter(self.midpoints.keys(), dtype=np.int64, count=len(self.midpoints))
        vals = np.fromiter(self.midpoints.values(), dtype=np.int64, count=len(self.midpoints))
        order = np.argsort(keys)
        return keys[order], vals[order]

    def segments(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(cell, a, b) for every finest boundary segment of every cell.

        A cell edge is split wherever a neighbour was refined across it, so the
        pieces returned are shared by exactly two cells.
        """
        if self.n != 3:
            raise MeshError("segments are defined for n = 3 meshes")
        cache = getattr(self, "_seg_cache", None)
        if cache is not None and cache[0] is self.cells:
            return cache[1]
        m = len(self.cells)
        cell = np.tile(np.arange(m, dtype=np.int64), 3)
        a = self.cells[:, [0, 1, 2]].T.reshape(-1).copy()
        b = self.cells[:, [1, 2, 0]].T.reshape(-1).copy()
        keys, vals = self._registry_arrays()
        done_c, done_a, done_b = [], [], []
        while len(cell):
            code = edge_code(a, b)
            if len(keys):
                pos = np.minimum(np.searchsorted(keys, code), len(keys) - 1)
                hit = keys[pos] == code
            else:
                pos = np.zeros(len(code), dtype=np.int64)
                hit = np.zeros(len(code), dtype=bool)
            done_c.append(cell[~hit])
            done_a.append(a[~hit])
            done_b.append(b[~hit])
            mid = vals[pos[hit]]
            cell = np.concatenate([cell[hit], cell[hit]])
            a, b = np.concatenate([a[hit], mid]), np.concatenate([mid, b[hit]])
        out = (np.concatenate(done_c), np.concatenate(done_a), np.concatenate(done_b))
        self._seg_cache = (self.cells, out)
        return out

    def cell_vertex_incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """(cell, vertex) pairs including hanging vertices on cell edges."""
        if self.n == 2:
            cells = np.repeat(np.arange(len(self.cells)), 2)
            return cells, self.cells.reshape(-1)
        c, a, _ = self.segments()
        return c, a

    def facets(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer facet codes and the cell each belongs to (one row per cell-facet pair)."""
        if self.n == 2:
            cells = np.repeat(np.arange(len(self.cells)), 2)
            return self.cells.reshape(-1).astype(np.int64), cells
        c, a, b = self.segments()
        return edge_code(a, b), c

    def adjacency(self) -> list[set[int]]:
        """Cell-to-cell shared-facet relation."""
        codes, cells = self.facets()
        order = np.argsort(codes, kind="stable")
        codes, cells = codes[order], cells[order]
        adj = [set() for _ in range(len(self.cells))]
        bounds = np.flatnonzero(np.diff(codes)) + 1
        for group in np.split(cells, bounds):
            g = group.tolist()
            for i in g:
                for j in g:
                    if i != j:
                        adj[i].add(j)
        return adj

    def facet_owner_counts(self) -> np.ndarray:
        codes, _ = self.facets()
        _, counts = np.unique(codes, return_counts=True)
        return counts

    def cell_measures(self) -> np.ndarray:
        """Angle (n = 2) or solid angle (n = 3) subtended by each cell."""
        V = self.vertices
        if self.n == 2:
            a, b = V[self.cells[:, 0]], V[self.cells[:, 1]]
            cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
            dot = np.einsum("ij,ij->i", a, b)
            return np.abs(np.arctan2(cross, dot))
        a, b, c = (V[self.cells[:, k]] for k in range(3))
        return np.abs(solid_angle(a, b, c))

    def euler_characteristic(self) -> int:
        """V - E + F of the whole mesh."""
        return _closed_euler(self, np.ones(len(self.cells), dtype=bool))

    # refinement ------------------------------------------------------------

    def split(self, cells: np.ndarray) -> np.ndarray:
        """Children of the given cells (vertex-index rows); extends vertices."""
        cells = np.asarray(cells, dtype=np.int64)
        if self.n == 2:
            ends = [(cells[:, 0], cells[:, 1])]
        else:
            ends = [(cells[:, 0], cells[:, 1]), (cells[:, 1], cells[:, 2]), (cells[:, 2], cells[:, 0])]
        codes = np.concatenate([edge_code(p, q) for p, q in ends])
        uniq, inv = np.unique(codes, return_inverse=True)
        reg = self.midpoints
        mids = np.array([reg.get(k, -1) for k in uniq.tolist()], dtype=np.int64)
        missing = mids < 0
        if missing.any():
            lo, hi = np.divmod(uniq[missing], _CODE_BASE)
            start = len(self.vertices)
            new_ids = start + np.arange(int(missing.sum()), dtype=np.int64)
            mids[missing] = new_ids
            reg.update(zip(uniq[missing].tolist(), new_ids.tolist()))
            self.vertices = np.vstack([self.vertices, _normalize(self.vertices[lo] + self.vertices[hi])])
        m = mids[inv.reshape(-1)].reshape(len(ends), -1)
        if self.n == 2:
            a, b = cells[:, 0], cells[:, 1]
            out = np.stack([np.stack([a, m[0]], 1), np.stack([m[0], b], 1)], 1)
            return out.reshape(-1, 2)
        a, b, c = cells[:, 0], cells[:, 1], cells[:, 2]
        ab, bc, ca = m
        out = np.stack([np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1),
                        np.stack([ca, bc, c], 1), np.stack([ab, bc, ca], 1)], 1)
        return out.reshape(-1, 3)


_CODE_BASE = np.int64(1) << 31


def edge_code(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Order-independent integer key of the vertex pair (a, b)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    return np.minimum(a, b) * _CODE_BASE + np.maximum(a, b)


def solid_angle(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Signed solid angle of geodesic triangles with unit-vector corners."""
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


@lru_cache(maxsize=16)
def _icosphere(level: int):
    phi = (1 + 5 ** 0.5) / 2
    verts = [(-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
             (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
             (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    mesh = SphericalMesh(3, 1.0, _normalize(np.array(verts, dtype=float)), np.array(faces, dtype=np.int64), 0)
    for _ in range(level):
        mesh.cells = mesh.split(mesh.cells)
        mesh.depth = np.zeros(len(mesh.cells), dtype=np.int64)
    mesh.refinement_level = level
    mesh.midpoints = {}  # uniform levels are conforming; only adaptive splits need the registry
    V, F = mesh.vertices, mesh.cells
    det = np.einsum("ij,ij->i", V[F[:, 0]], np.cross(V[F[:, 1]], V[F[:, 2]]))
    assert (det > 0).all()
    V.setflags(write=False)
    F.setflags(write=False)
    return V, F


def build_mesh(n: int, radius: float, level: int) -> SphericalMesh:
    if n not in (2, 3):
        raise MeshError(f"sphere meshes exist for n = 2 or 3, not {n}")
    if level < 0:
        raise MeshError("level must be non-negative")
    if radius <= 0:
        raise MeshError("radius must be positive")
    if n == 2:
        N = 2 ** (level + 4)
        t = 2 * np.pi * np.arange(N) / N
        V = _snap(np.stack([np.cos(t), np.sin(t)], axis=1))
        k = np.arange(N)
        F = np.stack([k, (k + 1) % N], axis=1)
        return SphericalMesh(2, float(radius), V, F, level)
    V, F = _icosphere(level)
    return SphericalMesh(3, float(radius), V.copy(), F.copy(), level)


# -- classification --------------------------------------------------------


@dataclass
class RegionComplex:
    mesh: SphericalMesh
    labels: np.ndarray
    certified_fraction: float
    polynomial: Polynomial = field(repr=False, default=None)

    def counts(self) -> dict[str, int]:
        return {
            "NEG_CERTIFIED": int((self.labels == NEG_CERTIFIED).sum()),
            "POS_CERTIFIED": int((self.labels == POS_CERTIFIED).sum()),
            "UNCERTIFIED": int((self.labels == UNCERTIFIED).sum()),
        }

    def side_mask(self, side: Side | str) -> np.ndarray:
        side = Side(side)
        if side is Side.NEG:
            return self.labels == NEG_CERTIFIED
        return self.labels != NEG_CERTIFIED


def cell_boxes(mesh: SphericalMesh, cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned boxes enclosing the spherical cells.

    A point of the cell is r u/|u| with u in the flat simplex of the unit
    vertices, and |u|^2 >= m = min_ij v_i.v_j, so each coordinate moves
    by at most r (1/sqrt(m) - 1) away from the vertex bounding box.
    """
    V = mesh.vertices[cells]  # (m, k, n)
    k = V.shape[1]
    m = np.ones(len(cells))
    for i in range(k):
        for j in range(i + 1, k):
            m = np.minimum(m, np.einsum("ij,ij->i", V[:, i], V[:, j]))
    m = np.clip(m - 1e-14, 1e-3, 1.0)
    pad = mesh.radius * (1.0 / np.sqrt(m) - 1.0 + 1e-13)
    pad = np.nextafter(pad, np.inf)[:, None]
    lo = np.nextafter(V.min(axis=1) * mesh.radius - pad, -np.inf)
    hi = np.nextafter(V.max(axis=1) * mesh.radius + pad, np.inf)
    return lo, hi


def label_cells(evaluator: IntervalEvaluator, mesh: SphericalMesh, cells: np.ndarray) -> np.ndarray:
    lo, hi = cell_boxes(mesh, cells)
    vlo, vhi = evaluator(lo, hi)
    labels = np.zeros(len(cells), dtype=np.int8)
    labels[vhi < 0] = NEG_CERTIFIED
    labels[vlo > 0] = POS_CERTIFIED
    return labels


def tangential_gradient(p: Polynomial) -> list[Polynomial]:
    """Polynomials whose common zeros on a sphere are the critical points of p there."""
    g = [p.diff(i) for i in range(p.n_vars)]
    X = [Polynomial.variable(p.n_vars, i) for i in range(p.n_vars)]
    if p.n_vars == 2:
        return [X[0] * g[1] - X[1] * g[0]]
    return [X[1] * g[2] - X[2] * g[1], X[2] * g[0] - X[0] * g[2], X[0] * g[1] - X[1] * g[0]]


class _CriticalTest:
    """Interval test: can a cell contain a critical point of p on the sphere?"""

    def __init__(self, p: Polynomial):
        self.evaluators = [IntervalEvaluator(q, centered=True) for q in tangential_gradient(p)]

    def __call__(self, mesh: SphericalMesh, cells: np.ndarray) -> np.ndarray:
        out = np.ones(len(cells), dtype=bool)
        if not len(cells):
            return out
        lo, hi = cell_boxes(mesh, cells)
        for ev in self.evaluators:
            vlo, vhi = ev(lo, hi)
            out &= (vlo <= 0) & (vhi >= 0)
        return out


def classify_region(p: Polynomial, mesh: SphericalMesh, max_extra_levels: int = DEFAULT_EXTRA_LEVELS,
                    critical_levels: int = DEFAULT_CRITICAL_LEVELS) -> RegionComplex:
    """Label every cell, splitting uncertified ones up to ``max_extra_levels``.

    The topology of {p < 0} on the sphere can only change at critical points
    of p restricted to the sphere.  Uncertified cells that may contain one are
    split up to ``critical_levels`` further times, which resolves thin necks
    near saddles.  Finally an uncertified cluster enclosed by certified cells
    of one sign and free of possible critical points takes that sign: p would
    otherwise attain an interior extremum of the other sign there.
    """
    if p.n_vars != mesh.n:
        raise MeshError(f"polynomial has {p.n_vars} variables, mesh is for n = {mesh.n}")
    work = SphericalMesh(mesh.n, mesh.radius, mesh.vertices.copy(), mesh.cells.copy(), mesh.refinement_level,
                         mesh.depth.copy(), dict(mesh.midpoints))
    ev = IntervalEvaluator(p, centered=True)
    per = 2 if work.n == 2 else 4
    done_cells, done_labels, done_depth = [], [], []
    pending, pending_depth = work.cells, work.depth
    while len(pending):
        labels = label_cells(ev, work, pending)
        split = (labels == UNCERTIFIED) & (pending_depth < max_extra_levels)
        keep = ~split
        done_cells.append(pending[keep])
        done_labels.append(labels[keep])
        done_depth.append(pending_depth[keep])
        if not split.any():
            break
        pending = work.split(pending[split])
        pending_depth = np.repeat(pending_depth[split] + 1, per)
    work.cells = np.concatenate(done_cells)
    work.depth = np.concatenate(done_depth)
    labels = np.concatenate(done_labels)

    crit_test = _CriticalTest(p)
    unc = labels == UNCERTIFIED
    critical = np.zeros(len(labels), dtype=bool)
    critical[unc] = crit_test(work, work.cells[unc])
    cap = max_extra_levels + critical_levels
    while True:
        unc = (labels == UNCERTIFIED) & (work.depth < cap)
        targets = unc & critical
        if critical.any() and unc.any():
            centres = work.vertices[work.cells[critical]].mean(axis=1)
            own = work.vertices[work.cells[unc]]
            dist, _ = cKDTree(centres).query(own.mean(axis=1))
            size = np.linalg.norm(own - own.mean(axis=1, keepdims=True), axis=2).max(axis=1)
            targets[unc] |= size * GRADING > dist
        if not targets.any() or targets.sum() > CRITICAL_BUDGET:
            break
        children = work.split(work.cells[targets])
        child_labels = label_cells(ev, work, children)
        work.cells = np.concatenate([work.cells[~targets], children])
        work.depth = np.concatenate([work.depth[~targets], np.repeat(work.depth[targets] + 1, per)])
        labels = np.concatenate([labels[~targets], child_labels])
        critical = np.concatenate([critical[~targets], crit_test(work, children)])
    labels = _enclosed_sign(work, labels, critical)

    order = np.lexsort(work.cells.T[::-1])  # deterministic leaf order
    work.cells, work.depth, labels = work.cells[order], work.depth[order], labels[order]
    measures = work.cell_measures()
    frac = float(measures[labels != UNCERTIFIED].sum() / measures.sum())
    return RegionComplex(work, labels, frac, p)


def _enclosed_sign(mesh: SphericalMesh, labels: np.ndarray, critical: np.ndarray) -> np.ndarray:
    """Give enclosed, critical-point-free uncertified clusters the sign around them."""
    labels = labels.copy()
    for sign in (NEG_CERTIFIED, POS_CERTIFIED):
        other = labels == sign
        if not other.any() or other.all():
            continue
        # pieces of the complement of the closed union of `sign` cells
        cx = _side_complex(mesh, ~other, other)
        _, comp = _components(mesh.n_cells, ~other, cx.pairs, cx.n_nodes)
        bad = np.zeros(comp.max() + 1, dtype=bool)
        bad[comp[((labels == -sign) | critical) & ~other]] = True
        flip = (~other) & ~bad[np.maximum(comp, 0)]
        labels[flip] = sign
    return labels


# -- topology --------------------------------------------------------------


@dataclass
class TopologySummary:
    region: str
    side: str
    b0: int
    euler: int | None = None
    b1: int | None = None
    certified: bool = False
    empty: bool = False
    full: bool = False
    certified_fraction: float = 1.0
    notes: list[str] = field(default_factory=list)
    stabilized: bool | None = None

    def key(self) -> tuple:
        return (self.b0, self.euler, self.b1)

    def to_dict(self) -> dict:
        return {
            "region": self.region, "side": self.side, "b0": self.b0, "euler": self.euler, "b1": self.b1,
            "certified": self.certified, "empty": self.empty, "full": self.full,
            "certified_fraction": round(self.certified_fraction, 12), "notes": list(self.notes),
            "stabilized": self.stabilized,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TopologySummary":
        return cls(**d)


def _components(n_cells: int, mask: np.ndarray, pairs: tuple[np.ndarray, np.ndarray], n_nodes: int) -> tuple[int, np.ndarray]:
    """Components among masked cells; ``pairs`` are cell-to-node incidences."""
    c, v = pairs
    sel = mask[c]
    c, v = c[sel], v[sel]
    total = n_cells + n_nodes
    g = coo_matrix((np.ones(len(c)), (c, n_cells + v)), shape=(total, total))
    _, labels = connected_components(g, directed=False)
    cell_labels = labels[:n_cells][mask]
    uniq, inv = np.unique(cell_labels, return_inverse=True)
    out = np.full(n_cells, -1)
    out[np.flatnonzero(mask)] = inv.reshape(-1)
    return len(uniq), out


@dataclass
class _Complex:
    pairs: tuple[np.ndarray, np.ndarray]
    n_nodes: int
    euler: int


def _side_complex(mesh: SphericalMesh, mask: np.ndarray, forbidden: np.ndarray | None) -> _Complex:
    """Cell complex of the masked cells.

    With ``forbidden`` unset this is the closed union of the cells.  Otherwise
    it is that union with the closure of the ``forbidden`` cells removed; the
    Euler characteristic is then the compactly supported one, which equals
    the homotopy one for open surfaces and its negative for open arcs.
    """
    nv = len(mesh.vertices)
    if mesh.n == 2:
        c = np.repeat(np.arange(mesh.n_cells), 2)
        v = mesh.cells.reshape(-1)
        sel = mask[c]
        if forbidden is not None:
            bad = np.zeros(nv, dtype=bool)
            bad[v[forbidden[c]]] = True
            sel &= ~bad[v]
        V = len(np.unique(v[sel]))
        E = int(mask.sum())
        chi = V - E
        if forbidden is not None:
            chi = -chi
        return _Complex((c[sel], v[sel]), nv, chi)
    c, a, b = mesh.segments()
    codes = edge_code(a, b)
    useg, sid = np.unique(codes, return_inverse=True)
    sid = sid.reshape(-1)
    sel = mask[c]
    vsel = sel.copy()
    ssel = sel.copy()
    if forbidden is not None:
        fb = forbidden[c]
        badv = np.zeros(nv, dtype=bool)
        badv[a[fb]] = True
        bads = np.zeros(len(useg), dtype=bool)
        bads[sid[fb]] = True
        vsel &= ~badv[a]
        ssel &= ~bads[sid]
    V = len(np.unique(a[vsel]))
    E = len(np.unique(sid[ssel]))
    chi = V - E + int(mask.sum())
    pairs = (np.concatenate([c[vsel], c[ssel]]), np.concatenate([a[vsel], nv + sid[ssel]]))
    return _Complex(pairs, nv + len(useg), chi)


def _closed_euler(mesh: SphericalMesh, mask: np.ndarray) -> int:
    if not mask.any():
        return 0
    return _side_complex(mesh, mask, None).euler


def _region_complex(rc: RegionComplex, side: Side, mask: np.ndarray | None = None) -> tuple[np.ndarray, _Complex]:
    """NEG: closed union of certified cells.  POS: complement of that union."""
    neg = rc.labels == NEG_CERTIFIED
    if side is Side.NEG:
        mask = neg if mask is None else mask
        return mask, _side_complex(rc.mesh, mask, None)
    mask = ~neg if mask is None else mask
    return mask, _side_complex(rc.mesh, mask, neg)


def count_components(rc: RegionComplex, side: Side | str) -> TopologySummary:
    side = Side(side)
    mask, cx = _region_complex(rc, side)
    b0, _ = _components(rc.mesh.n_cells, mask, cx.pairs, cx.n_nodes)
    return TopologySummary(region="", side=side.value, b0=b0, empty=not mask.any(), full=bool(mask.all()),
                           certified_fraction=rc.certified_fraction)


def euler_characteristic(rc: RegionComplex, side: Side | str) -> int:
    side = Side(side)
    mask, cx = _region_complex(rc, side)
    return cx.euler if mask.any() else 0


def _cell_centres(mesh: SphericalMesh, sel: np.ndarray | None = None) -> np.ndarray:
    cells = mesh.cells if sel is None else mesh.cells[sel]
    return _normalize(mesh.vertices[cells].mean(axis=1)) * mesh.radius


def _nonnegative_sample(mesh: SphericalMesh, sel: np.ndarray, f: NumericPolynomial) -> np.ndarray:
    vals = [f(_cell_centres(mesh, sel))]
    for k in range(mesh.cells.shape[1]):
        vals.append(f(mesh.points[mesh.cells[sel, k]]))
    return np.any(np.stack(vals) >= 0, axis=0)


def _ambiguity_free(rc: RegionComplex, side: Side, b0: int) -> tuple[bool, str]:
    """Cross-check the count against point samples of the uncertified cells.

    NEG: add uncertified cells whose centre is negative, joining cells across
    facets whose sample is negative; the count must not change and no new
    component may appear.  POS: keep only uncertified cells with a sample
    >= 0; the count must not change.
    """
    mesh = rc.mesh
    unc = rc.labels == UNCERTIFIED
    if not unc.any():
        return True, ""
    f = NumericPolynomial.from_polynomial(rc.polynomial)
    neg = rc.labels == NEG_CERTIFIED
    if side is Side.NEG:
        centre_val = np.full(mesh.n_cells, np.inf)
        centre_val[unc] = f(_cell_centres(mesh, unc))
        grown = neg | (unc & (centre_val < 0))
        codes, owners = mesh.facets()
        if mesh.n == 2:
            sample = f(mesh.points[codes])
        else:
            _, a, b = mesh.segments()
            sample = f(_normalize(mesh.vertices[a] + mesh.vertices[b]) * mesh.radius)
        ok = (sample < 0) & grown[owners]
        _, fid = np.unique(codes, return_inverse=True)
        fid = fid.reshape(-1)
        cv_c, cv_v = mesh.cell_vertex_incidence()
        base_sel = neg[cv_c]
        nv = len(mesh.vertices)
        pairs = (np.concatenate([cv_c[base_sel], owners[ok]]),
                 np.concatenate([cv_v[base_sel], nv + fid[ok]]))
        count, comp = _components(mesh.n_cells, grown, pairs, nv + int(fid.max()) + 1)
        anchored = np.unique(comp[neg])
        if count != len(anchored):
            return False, "uncertified cells with negative samples form components of their own"
        if len(anchored) != b0:
            return False, "uncertified cells with negative samples merge certified components"
        return True, ""
    witnessed = np.zeros(mesh.n_cells, dtype=bool)
    witnessed[unc] = _nonnegative_sample(mesh, unc, f)
    mask, cx = _region_complex(rc, side, (rc.labels == POS_CERTIFIED) | witnessed)
    count, _ = _components(mesh.n_cells, mask, cx.pairs, cx.n_nodes)
    if count != b0:
        return False, "uncertified cells without a non-negative sample change the component count"
    return True, ""


def betti_summary(rc: RegionComplex, side: Side | str, region: str = "",
                  threshold: float = CERTIFIED_FRACTION_THRESHOLD) -> TopologySummary:
    side = Side(side)
    mask, cx = _region_complex(rc, side)
    empty = not mask.any()
    full = bool(mask.all())
    if empty:
        return TopologySummary(region=region, side=side.value, b0=0, euler=0, b1=0,
                               certified=rc.certified_fraction >= threshold, empty=True,
                               certified_fraction=rc.certified_fraction)
    b0, _ = _components(rc.mesh.n_cells, mask, cx.pairs, cx.n_nodes)
    chi = cx.euler
    b1 = b0 + (1 if full and rc.mesh.n == 3 else 0) - chi
    notes = []
    certified = rc.certified_fraction >= threshold
    if not certified:
        notes.append(f"certified fraction {rc.certified_fraction:.4f} below {threshold}")
    ok, why = _ambiguity_free(rc, side, b0)
    if not ok:
        certified = False
        notes.append(why)
    if side is Side.POS and (rc.labels == UNCERTIFIED).any():
        notes.append("closed side represented by certified-positive plus uncertified cells")
    if b1 < 0:
        certified = False
        notes.append("negative first Betti number: complex is not a surface representative")
    return TopologySummary(region=region, side=side.value, b0=b0, euler=chi, b1=b1, certified=certified,
                           empty=False, full=full, certified_fraction=rc.certified_fraction, notes=notes)


@dataclass
class SweepResult:
    radii: list[float]
    neg: list[TopologySummary]
    pos: list[TopologySummary]
    stabilized: bool
    level: int

    @property
    def s_r(self) -> TopologySummary:
        return self.neg[-1]

    @property
    def s_prime_r(self) -> TopologySummary:
        return self.pos[-1]

    def to_dict(self) -> dict:
        return {
            "radii": self.radii, "level": self.level, "stabilized": self.stabilized,
            "neg": [s.to_dict() for s in self.neg], "pos": [s.to_dict() for s in self.pos],
        }


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GRADSTABLE_THREADS", "1")))
    except ValueError:
        return 1


def radius_sweep(p: Polynomial, radii: Sequence[float] = DEFAULT_RADII, level: int = DEFAULT_LEVEL,
                 max_extra_levels: int = DEFAULT_EXTRA_LEVELS,
                 threshold: float = CERTIFIED_FRACTION_THRESHOLD) -> SweepResult:
    radii = [float(r) for r in radii]
    if len(radii) < 3:
        raise MeshError("radius sweep needs at least three radii")
    if any(r <= 0 for r in radii) or any(a <= b for a, b in zip(radii, radii[1:])):
        raise MeshError("radii must be positive and strictly decreasing")
    base = build_mesh(p.n_vars, 1.0, level)

    def one(r):
        rc = classify_region(p, base.scaled(r), max_extra_levels)
        return (betti_summary(rc, Side.NEG, "S_r", threshold), betti_summary(rc, Side.POS, "S'_r", threshold))

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, radii))
    else:
        results = [one(r) for r in radii]
    neg = [a for a, _ in results]
    pos = [b for _, b in results]
    tail_n, tail_p = neg[-3:], pos[-3:]
    stabilized = len({s.key() for s in tail_n}) == 1 and len({s.key() for s in tail_p}) == 1
    for s in neg + pos:
        s.stabilized = stabilized
    return SweepResult(radii, neg, pos, stabilized, level)


def unit_sphere_summaries(omega: Polynomial, level: int = DEFAULT_LEVEL, max_extra_levels: int = DEFAULT_EXTRA_LEVELS,
                          threshold: float = CERTIFIED_FRACTION_THRESHOLD) -> tuple[TopologySummary, TopologySummary, RegionComplex]:
    """Summaries of Omega = {omega < 0} and Omega' = {omega >= 0} on the unit sphere."""
    rc = classify_region(omega, build_mesh(omega.n_vars, 1.0, level), max_extra_levels)
    return betti_summary(rc, Side.NEG, "Omega", threshold), betti_summary(rc, Side.POS, "Omega'", threshold), rc
