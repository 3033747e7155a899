"""Graph-based over-segmentation of the mesh into supervertices.

Runs Felzenszwalb-Huttenlocher union-find over mesh edges weighted by
normal disagreement, after an optional 1-ring normal smoothing pre-pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .scene_model import SegmentationHierarchy


@dataclass
class SegParams:
    smoothing: float = 0.5
    threshold_k: float = 500.0
    min_size: int = 20

    def __post_init__(self):
        if self.min_size < 1:
            raise ValidationError("min_size must be >= 1")
        if self.threshold_k <= 0:
            raise ValidationError("threshold_k must be > 0")


def edge_weight(n_i, n_j):
    """Normal-disagreement weight 1 - n_i . n_j (0 equal, 2 opposite)."""
    return float(1.0 - np.dot(n_i, n_j))


def build_mesh_graph(mesh, normals=None):
    """Unique undirected edges (e,2) plus weights in [0,2]."""
    if normals is None:
        normals = mesh.normals
    edges = mesh.edges()
    w = 1.0 - np.einsum("ij,ij->i", normals[edges[:, 0]], normals[edges[:, 1]])
    return edges, np.clip(w, 0.0, 2.0)


def smooth_normals(mesh, smoothing):
    """Blend each normal toward its 1-ring mean with the given weight."""
    if smoothing <= 0 or not mesh.faces.size:
        return mesh.normals.copy()
    n = mesh.n_vertices
    edges = mesh.edges()
    acc = np.zeros((n, 3))
    deg = np.zeros(n)
    for a, b in ((edges[:, 0], edges[:, 1]), (edges[:, 1], edges[:, 0])):
        np.add.at(acc, a, mesh.normals[b])
        np.add.at(deg, a, 1.0)
    ring = np.where(deg[:, None] > 0, acc / np.maximum(deg, 1.0)[:, None], mesh.normals)
    blended = (1.0 - smoothing) * mesh.normals + smoothing * ring
    lens = np.linalg.norm(blended, axis=1)
    bad = lens <= 1e-30
    blended[bad] = mesh.normals[bad]
    lens = np.where(bad, 1.0, lens)
    return blended / lens[:, None]


class _UnionFind:
    def __init__(self, n):
        self.parent = np.arange(n, dtype=np.int64)
        self.rank = np.zeros(n, dtype=np.int32)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        if self.rank[a] < self.rank[b]:
            a, b = b, a
        self.parent[b] = a
        self.size[a] += self.size[b]
        if self.rank[a] == self.rank[b]:
            self.rank[a] += 1
        return a


def segment_graph(mesh, params=None):
    """Cluster mesh vertices into supervertices.

    Returns a hierarchy whose region level mirrors the supervertex level
    1:1. Supervertex ids are dense, ordered by first vertex occurrence.
    Edges are processed ascending by (weight, min index, max index) so the
    result is deterministic; disconnected components segment independently.
    """
    if params is None:
        params = SegParams()
    if mesh.normals is None:
        raise ValidationError("mesh has no normals; run compute_normals first")

    n = mesh.n_vertices
    normals = smooth_normals(mesh, params.smoothing)
    edges, weights = build_mesh_graph(mesh, normals)

    order = np.lexsort((edges[:, 1], edges[:, 0], weights))
    uf = _UnionFind(n)
    threshold = np.full(n, params.threshold_k, dtype=np.float64)
    for ei in order:
        a = uf.find(edges[ei, 0])
        b = uf.find(edges[ei, 1])
        if a == b:
            continue
        w = weights[ei]
        if w <= threshold[a] and w <= threshold[b]:
            root = uf.union(a, b)
            threshold[root] = w + params.threshold_k / uf.size[root]

    # merge undersized components across their lowest-weight boundary edge
    if params.min_size > 1:
        for ei in order:
            a = uf.find(edges[ei, 0])
            b = uf.find(edges[ei, 1])
            if a != b and (uf.size[a] < params.min_size or uf.size[b] < params.min_size):
                uf.union(a, b)

    roots = np.array([uf.find(i) for i in range(n)], dtype=np.int64)
    dense = {}
    labels = np.empty(n, dtype=np.int32)
    for i, r in enumerate(roots):
        if r not in dense:
            dense[r] = len(dense)
        labels[i] = dense[r]
    region_of = {i: i for i in range(len(dense))}
    return SegmentationHierarchy(labels, region_of)
