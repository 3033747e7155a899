"""MRF clustering of supervertices into regions.

Each supervertex is an MRF node carrying mean color and mean normal;
labels carry a Gaussian over each. The energy is the sum of per-node
negative Gaussian log densities plus a Potts pairwise term over adjacent
supervertices. Minimization is neighbor-constrained ICM with per-sweep
re-estimation of the label Gaussians; labels start out one per node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, ValidationError
from .scene_model import SegmentationHierarchy

COV_EPS = 1e-4
SPLIT_OVERRIDE_COST = 1e9
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class MrfParams:
    gamma: float = 0.5
    split_penalty: float = 0.05
    max_sweeps: int = 50

    def __post_init__(self):
        if self.gamma < 0:
            raise ValidationError("gamma must be >= 0")


@dataclass
class SupervertexStats:
    """Mean color/normal, vertex count, and adjacency per supervertex."""

    mean_color: np.ndarray        # (s,3) in [0,1]
    mean_normal: np.ndarray       # (s,3) unit
    sizes: np.ndarray             # (s,) vertex counts
    neighbors: list               # list[set[int]] symmetric adjacency
    pairs: np.ndarray             # (p,2) unique adjacent pairs, i<j

    @property
    def n(self):
        return len(self.sizes)


def compute_stats(mesh, hierarchy):
    """Aggregate per-supervertex means and the adjacency structure."""
    sv = hierarchy.supervertex_of
    n_sv = int(sv.max()) + 1 if sv.size else 0
    sizes = np.bincount(sv, minlength=n_sv)
    if (sizes == 0).any():
        raise ValidationError("supervertex ids are not dense")

    mean_color = np.zeros((n_sv, 3))
    np.add.at(mean_color, sv, mesh.colors)
    mean_color /= sizes[:, None]

    mean_normal = np.zeros((n_sv, 3))
    np.add.at(mean_normal, sv, mesh.normals)
    lens = np.linalg.norm(mean_normal, axis=1)
    degenerate = lens <= 1e-12
    mean_normal[degenerate] = (0.0, 0.0, 1.0)
    lens = np.where(degenerate, 1.0, lens)
    mean_normal /= lens[:, None]

    edges = mesh.edges()
    esv = sv[edges]
    cross = esv[:, 0] != esv[:, 1]
    pairs = np.sort(esv[cross], axis=1)
    pairs = np.unique(pairs, axis=0) if pairs.size else pairs.reshape(0, 2)
    neighbors = [set() for _ in range(n_sv)]
    for a, b in pairs:
        neighbors[int(a)].add(int(b))
        neighbors[int(b)].add(int(a))
    return SupervertexStats(mean_color, mean_normal, sizes, neighbors, pairs)


class LabelModel:
    """Independent 3D Gaussians over color and normal for one label."""

    __slots__ = ("mu_c", "mu_n", "_inv_c", "_inv_n", "_log_norm")

    def __init__(self, mu_c, cov_c, mu_n, cov_n):
        self.mu_c = mu_c
        self.mu_n = mu_n
        self._inv_c = np.linalg.inv(cov_c)
        self._inv_n = np.linalg.inv(cov_n)
        sign_c, logdet_c = np.linalg.slogdet(cov_c)
        sign_n, logdet_n = np.linalg.slogdet(cov_n)
        if sign_c <= 0 or sign_n <= 0:
            raise ValidationError("label covariance is not positive definite")
        self._log_norm = 0.5 * (6.0 * _LOG_2PI + logdet_c + logdet_n)

    def neg_log_density(self, color, normal):
        dc = color - self.mu_c
        dn = normal - self.mu_n
        quad = dc @ self._inv_c @ dc + dn @ self._inv_n @ dn
        return self._log_norm + 0.5 * quad


def fit_label_model(colors, normals, eps=COV_EPS):
    """Sample-mean/covariance fit with +eps*I regularization."""
    colors = np.atleast_2d(colors)
    normals = np.atleast_2d(normals)
    mu_c = colors.mean(axis=0)
    mu_n = normals.mean(axis=0)
    if len(colors) > 1:
        cov_c = np.cov(colors, rowvar=False, bias=True) + eps * np.eye(3)
        cov_n = np.cov(normals, rowvar=False, bias=True) + eps * np.eye(3)
    else:
        cov_c = eps * np.eye(3)
        cov_n = eps * np.eye(3)
    return LabelModel(mu_c, cov_c, mu_n, cov_n)


def fit_label_models(assignment, stats, eps=COV_EPS):
    models = {}
    for lab in sorted(set(assignment.values())):
        members = [i for i, l in assignment.items() if l == lab]
        models[lab] = fit_label_model(
            stats.mean_color[members], stats.mean_normal[members], eps
        )
    return models


def unary(stats, i, model):
    """Negative log density of supervertex i under a label's Gaussians."""
    return model.neg_log_density(stats.mean_color[i], stats.mean_normal[i])


def pairwise(l_i, l_j):
    """Potts potential: -1 for equal labels, +1 otherwise."""
    return -1.0 if l_i == l_j else 1.0


def _override_cost(l_i, l_j):
    return SPLIT_OVERRIDE_COST if l_i == l_j else -1.0


def energy(assignment, models, stats, gamma, overrides=None, nodes=None, pairs=None):
    """Total MRF energy: sum of unaries + gamma * sum over unordered pairs.

    `overrides` maps an unordered supervertex pair to the biased Potts
    used by split; the pair contributes the override instead of (or in
    addition to, when not adjacent) the plain term.
    """
    if nodes is None:
        nodes = sorted(assignment)
    if pairs is None:
        pairs = stats.pairs
    overrides = overrides or {}
    total = 0.0
    for i in nodes:
        lab = assignment[i]
        if lab not in models:
            raise PreconditionError(f"label {lab} has no fitted model")
        total += unary(stats, i, models[lab])
    for a, b in pairs:
        a, b = int(a), int(b)
        if a not in assignment or b not in assignment:
            continue
        key = (min(a, b), max(a, b))
        if key in overrides:
            total += gamma * _override_cost(assignment[a], assignment[b])
        else:
            total += gamma * pairwise(assignment[a], assignment[b])
    for (a, b) in overrides:
        if a in assignment and b in assignment and not _adjacent(stats, a, b):
            total += gamma * _override_cost(assignment[a], assignment[b])
    return total


def _adjacent(stats, a, b):
    return b in stats.neighbors[a]


def icm_minimize(assignment, stats, gamma, models=None, max_sweeps=50,
                 reestimate=True, overrides=None, nodes=None, energy_trace=None):
    """Neighbor-constrained ICM with optional per-sweep model re-estimation.

    Moves are restricted to labels of adjacent supervertices. Re-estimated
    models are only adopted when they do not increase the energy, so the
    per-sweep energy trace is non-increasing by construction.
    """
    overrides = overrides or {}
    assignment = dict(assignment)
    if nodes is None:
        nodes = sorted(assignment)
    node_set = set(nodes)
    if models is None:
        models = fit_label_models(assignment, stats)

    override_partner = {}
    for (a, b) in overrides:
        override_partner.setdefault(a, []).append(b)
        override_partner.setdefault(b, []).append(a)

    def local_cost(i, lab):
        cost = unary(stats, i, models[lab])
        for j in stats.neighbors[i]:
            if j in node_set:
                key = (min(i, j), max(i, j))
                if key in overrides:
                    continue  # handled below
                cost += gamma * pairwise(lab, assignment[j])
        for j in override_partner.get(i, ()):
            if j in node_set:
                cost += gamma * _override_cost(lab, assignment[j])
        return cost

    current_energy = energy(assignment, models, stats, gamma, overrides, nodes)
    trace = [] if energy_trace is None else energy_trace

    for _ in range(max_sweeps):
        moved = False
        for i in nodes:
            here = assignment[i]
            candidates = {here}
            for j in stats.neighbors[i]:
                if j in node_set:
                    candidates.add(assignment[j])
            base = local_cost(i, here)
            best_lab, best_cost = here, base
            for lab in sorted(candidates):
                if lab == here:
                    continue
                c = local_cost(i, lab)
                if c < best_cost - 1e-12:
                    best_lab, best_cost = lab, c
            if best_lab != here:
                assignment[i] = best_lab
                current_energy += best_cost - base
                moved = True

        refit = False
        if reestimate:
            new_models = fit_label_models(assignment, stats)
            new_energy = energy(assignment, new_models, stats, gamma, overrides, nodes)
            if new_energy <= current_energy + 1e-9:
                refit = new_energy < current_energy - 1e-12
                models = new_models
                current_energy = new_energy
        trace.append(current_energy)
        if not moved and not refit:
            break
    return assignment, models, trace


def _labels_to_regions(assignment, id_of_cluster):
    """Map final label clusters to region ids via the given naming rule."""
    clusters = {}
    for sv, lab in assignment.items():
        clusters.setdefault(lab, []).append(sv)
    out = {}
    for lab, members in clusters.items():
        rid = id_of_cluster(sorted(members))
        for sv in members:
            out[sv] = rid
    return out


def optimize(hierarchy, stats, params=None):
    """Cluster supervertices into regions by energy minimization.

    Starts with one label per supervertex. Returns the new hierarchy and
    the per-sweep energy trace (non-increasing).
    """
    if params is None:
        params = MrfParams()
    n_sv = stats.n
    if n_sv <= 1:
        return hierarchy.copy(), []
    assignment = {i: i for i in range(n_sv)}
    assignment, _, trace = icm_minimize(
        assignment, stats, params.gamma, max_sweeps=params.max_sweeps
    )
    # dense region ids ordered by each cluster's smallest supervertex
    cluster_mins = sorted({min(m for m, l in assignment.items() if l == lab)
                           for lab in set(assignment.values())})
    rank = {m: i for i, m in enumerate(cluster_mins)}
    region_of = _labels_to_regions(assignment, lambda members: rank[members[0]])
    out = SegmentationHierarchy(hierarchy.supervertex_of.copy(), region_of, {})
    return out, trace


def optimize_split(hierarchy, stats, region, stroke_start_sv, stroke_end_sv,
                   params=None):
    """Re-run the MRF on one region with the stroke-endpoint bias.

    The pairwise term between the two endpoint supervertices is overridden
    to a large cost when their labels agree, forcing them into different
    regions. Other regions are untouched. The largest resulting cluster
    keeps the original region id (and its label); the rest get fresh ids.
    """
    if params is None:
        params = MrfParams()
    a, b = int(stroke_start_sv), int(stroke_end_sv)
    if a == b:
        raise PreconditionError("stroke endpoints resolve to the same supervertex")
    for sv in (a, b):
        if hierarchy.region_of.get(sv) != region:
            raise PreconditionError(
                f"stroke endpoint supervertex {sv} is not in region {region}"
            )
    members = hierarchy.region_members(region)
    assignment = {sv: sv for sv in members}
    overrides = {(min(a, b), max(a, b)): True}
    assignment, _, trace = icm_minimize(
        assignment, stats, params.split_penalty,
        max_sweeps=params.max_sweeps, overrides=overrides, nodes=members,
    )
    if assignment[a] == assignment[b]:
        raise PreconditionError("split failed to separate the stroke endpoints")

    clusters = {}
    for sv, lab in assignment.items():
        clusters.setdefault(lab, []).append(sv)
    # largest cluster (by vertex mass) keeps the region id; ties by member id
    sizes = {lab: int(stats.sizes[ms].sum()) for lab, ms in clusters.items()}
    ordered = sorted(clusters, key=lambda lab: (-sizes[lab], min(clusters[lab])))

    out = hierarchy.copy()
    next_id = out.next_region_id()
    new_region_ids = []
    for k, lab in enumerate(ordered):
        rid = region if k == 0 else next_id
        if k > 0:
            next_id += 1
        new_region_ids.append(rid)
        for sv in clusters[lab]:
            out.region_of[sv] = rid
    return out, new_region_ids, trace
