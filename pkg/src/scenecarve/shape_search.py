"""Repetitive-object search: 3D shape context, matching, grow-shrink.

An object is a set of sampled surface points. Each point carries a
180-bin histogram (5 log-radial x 6 polar x 6 azimuth) of the relative
positions of the other points, expressed in a local frame built from the
point normal and the direction to the shape centroid, which makes the
descriptor rotation invariant; normalizing distances by the mean pairwise
length makes it scale invariant. Matching solves a min-cost assignment
between the two descriptor sets (dummy-padded to equal size), then
verifies the correspondence geometrically with a RANSAC rigid fit and an
alignment error that charges unmatched points a fixed penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import PreconditionError, ValidationError

RADIAL_BINS = 5
POLAR_BINS = 6
AZIMUTH_BINS = 6
N_BINS = RADIAL_BINS * POLAR_BINS * AZIMUTH_BINS
_RADIAL_EDGES = np.geomspace(0.125, 2.0, RADIAL_BINS + 1)


@dataclass
class SearchParams:
    tau_s: float = 0.7               # deformation-cost threshold
    tau_a: float = 0.4               # alignment-error threshold (meters)
    delta: float = 2.0               # unmatched-point penalty (meters)
    iterations: int = 10             # grow-shrink iterations
    dummy_cost: float = 0.35         # assignment cost of a real<->dummy pair
    ransac_iters: int = 256
    ransac_inlier_frac: float = 0.05  # of the target AABB diagonal
    max_match_points: int = 200
    sample_count: int = 20000
    seed: int = 0


@dataclass
class SampledPoints:
    """Scene-level surface samples with provenance."""

    points: np.ndarray       # (n,3)
    normals: np.ndarray      # (n,3) unit
    vertex_ids: np.ndarray   # (n,) nearest mesh vertex
    region_ids: np.ndarray   # (n,) region of that vertex, -1 if unknown

    def subset(self, mask):
        return SampledPoints(
            self.points[mask], self.normals[mask],
            self.vertex_ids[mask], self.region_ids[mask],
        )


@dataclass
class SampledShape:
    """Point sample of one object (a union of regions)."""

    points: np.ndarray
    normals: np.ndarray
    regions: tuple = ()

    @property
    def centroid(self):
        return self.points.mean(axis=0)

    @property
    def n(self):
        return len(self.points)


@dataclass
class MatchResult:
    pairs: np.ndarray        # (k,2) real-real correspondences (i in V, j in Y)
    cost: float              # deformation cost C
    transform: np.ndarray    # (4,4) rigid V -> Y
    align_error: float       # alignment error E


def _face_seed(seed, lengths):
    # quantized edge lengths: identical for congruent faces
    q = np.rint(np.sort(lengths) * 1e9).astype(np.int64)
    return np.random.SeedSequence([int(seed)] + [int(x) & 0x7FFFFFFFFFFFFFFF for x in q])


def sample_scene(mesh, count=20000, seed=0, region_of_vertex=None):
    """Area-weighted uniform sampling over the mesh triangles.

    Deterministic given the seed; barycentric draws are keyed on the
    triangle's edge lengths so rigidly translated duplicate geometry
    produces exactly translated samples.
    """
    if count <= 0 or not mesh.faces.size:
        empty = np.zeros((0, 3))
        ids = np.zeros(0, dtype=np.int64)
        return SampledPoints(empty, empty.copy(), ids, ids.copy())
    v = mesh.vertices
    f = mesh.faces
    e1 = v[f[:, 1]] - v[f[:, 0]]
    e2 = v[f[:, 2]] - v[f[:, 0]]
    e3 = v[f[:, 2]] - v[f[:, 1]]
    areas = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
    total = areas.sum()
    if total <= 0:
        empty = np.zeros((0, 3))
        ids = np.zeros(0, dtype=np.int64)
        return SampledPoints(empty, empty.copy(), ids, ids.copy())
    # expected count per face; the fractional part is resolved by a
    # Bernoulli draw from the face's own stream, so congruent faces (and
    # hence translated copies) always receive identical counts
    expected = areas * (count / total)
    base = np.floor(expected).astype(np.int64)
    frac = expected - base

    pts, nrm, vid = [], [], []
    lengths = np.stack(
        [np.linalg.norm(e1, axis=1), np.linalg.norm(e2, axis=1),
         np.linalg.norm(e3, axis=1)], axis=1,
    )
    for fi in range(len(f)):
        rng = np.random.default_rng(_face_seed(seed, lengths[fi]))
        c = int(base[fi]) + int(rng.random() < frac[fi])
        if c == 0:
            continue
        r1 = rng.random(c)
        r2 = rng.random(c)
        s = np.sqrt(r1)
        w0 = 1.0 - s
        w1 = s * (1.0 - r2)
        w2 = s * r2
        bary = np.stack([w0, w1, w2], axis=1)
        corners = f[fi]
        pts.append(bary @ v[corners])
        n = bary @ mesh.normals[corners]
        ln = np.linalg.norm(n, axis=1, keepdims=True)
        nrm.append(n / np.where(ln > 1e-30, ln, 1.0))
        vid.append(corners[np.argmax(bary, axis=1)])
    points = np.concatenate(pts) if pts else np.zeros((0, 3))
    normals = np.concatenate(nrm) if nrm else np.zeros((0, 3))
    vertex_ids = np.concatenate(vid).astype(np.int64) if vid else np.zeros(0, np.int64)
    if region_of_vertex is not None:
        region_ids = np.asarray(region_of_vertex)[vertex_ids].astype(np.int64)
    else:
        region_ids = np.full(len(points), -1, dtype=np.int64)
    return SampledPoints(points, normals, vertex_ids, region_ids)


def local_frame(point, normal, centroid):
    """Orthonormal basis: z = normal, x = centroid-tangent projected off z."""
    z = np.asarray(normal, dtype=np.float64)
    t = np.asarray(centroid, dtype=np.float64) - np.asarray(point, dtype=np.float64)
    x = t - (t @ z) * z
    ln = np.linalg.norm(x)
    if ln <= 1e-6 * max(np.linalg.norm(t), 1.0) or ln <= 1e-12:
        axis = np.zeros(3)
        axis[int(np.argmin(np.abs(z)))] = 1.0
        x = axis - (axis @ z) * z
        ln = np.linalg.norm(x)
    x = x / ln
    y = np.cross(z, x)
    return np.stack([x, y, z])


def _local_frames(points, normals, centroid):
    z = normals
    t = centroid[None, :] - points
    proj = t - np.einsum("ij,ij->i", t, z)[:, None] * z
    ln = np.linalg.norm(proj, axis=1)
    scale = np.maximum(np.linalg.norm(t, axis=1), 1.0)
    degenerate = (ln <= 1e-6 * scale) | (ln <= 1e-12)
    if degenerate.any():
        for i in np.nonzero(degenerate)[0]:
            axis = np.zeros(3)
            axis[int(np.argmin(np.abs(z[i])))] = 1.0
            p = axis - (axis @ z[i]) * z[i]
            proj[i] = p
            ln[i] = np.linalg.norm(p)
    x = proj / ln[:, None]
    y = np.cross(z, x)
    return np.stack([x, y, z], axis=1)    # (n,3,3) rows are x,y,z


def shape_descriptors(shape):
    """Per-point 180-bin shape-context histograms, rows summing to 1."""
    n = shape.n
    if n < 2:
        raise PreconditionError("shape context needs at least 2 points")
    pts = shape.points
    centroid = shape.centroid
    frames = _local_frames(pts, shape.normals, centroid)

    diff = pts[:, None, :] - pts[None, :, :]       # u_ij = p_i - p_j
    dist = np.linalg.norm(diff, axis=2)
    off = ~np.eye(n, dtype=bool)
    mean_len = dist[off].mean()
    if mean_len <= 0:
        raise PreconditionError("shape is a single repeated point")

    local = np.einsum("iab,ijb->ija", frames, diff)  # coords in frame of i
    r = dist / mean_len
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_theta = np.clip(local[:, :, 2] / np.where(dist > 0, dist, 1.0), -1, 1)
    theta = np.arccos(cos_theta)
    phi = np.mod(np.arctan2(local[:, :, 1], local[:, :, 0]), 2.0 * math.pi)

    r_bin = np.clip(
        np.searchsorted(_RADIAL_EDGES, r, side="right") - 1, 0, RADIAL_BINS - 1
    )
    t_bin = np.clip(
        (theta / (math.pi / POLAR_BINS)).astype(np.int64), 0, POLAR_BINS - 1
    )
    p_bin = np.clip(
        (phi / (2.0 * math.pi / AZIMUTH_BINS)).astype(np.int64), 0, AZIMUTH_BINS - 1
    )
    flat = (r_bin * POLAR_BINS + t_bin) * AZIMUTH_BINS + p_bin

    rows = np.repeat(np.arange(n), n - 1)
    combined = rows * N_BINS + flat[off]
    hists = np.bincount(combined, minlength=n * N_BINS).astype(np.float64)
    hists = hists.reshape(n, N_BINS)
    hists /= hists.sum(axis=1, keepdims=True)
    return hists


def chi2(s, t):
    """Half chi-squared histogram distance; zero-denominator bins count 0."""
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if s.shape != t.shape:
        raise ValidationError("histogram dimensions differ")
    denom = s + t
    num = (s - t) ** 2
    mask = denom > 0
    return float(0.5 * (num[mask] / denom[mask]).sum())


def chi2_matrix(S, T, chunk=24):
    """Pairwise chi2 between rows of S (n,b) and T (m,b).

    Float32 with cache-sized chunks; costs are accurate to ~1e-7, plenty
    for threshold comparisons. The tiny denominator offset leaves
    zero-denominator bins contributing exactly 0 without branching.
    """
    S32 = np.asarray(S, dtype=np.float32)
    T32 = np.asarray(T, dtype=np.float32)
    out = np.empty((len(S32), len(T32)), dtype=np.float64)
    eps = np.float32(1e-35)
    for lo in range(0, len(S32), chunk):
        hi = min(lo + chunk, len(S32))
        s = S32[lo:hi, None, :]
        d = s - T32[None, :, :]
        np.multiply(d, d, out=d)
        den = s + T32[None, :, :]
        den += eps
        d /= den
        out[lo:hi] = d.sum(axis=2, dtype=np.float64) * 0.5
    return out


def horn_align(P, Q):
    """Closed-form rigid fit mapping P onto Q (rotation via the unit
    quaternion maximizing the correlation; Horn's absolute orientation)."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    cp = P.mean(axis=0)
    cq = Q.mean(axis=0)
    M = (P - cp).T @ (Q - cq)
    N = _quaternion_profile(M)
    w, v = np.linalg.eigh(N)
    q = v[:, -1]
    R = _quat_to_rot(q)
    t = cq - R @ cp
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = t
    return T


def _quaternion_profile(M):
    Sxx, Sxy, Sxz = M[0]
    Syx, Syy, Syz = M[1]
    Szx, Szy, Szz = M[2]
    return np.array([
        [Sxx + Syy + Szz, Syz - Szy, Szx - Sxz, Sxy - Syx],
        [Syz - Szy, Sxx - Syy - Szz, Sxy + Syx, Szx + Sxz],
        [Szx - Sxz, Sxy + Syx, -Sxx + Syy - Szz, Syz + Szy],
        [Sxy - Syx, Szx + Sxz, Syz + Szy, -Sxx - Syy + Szz],
    ])


def _quat_to_rot(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def _batched_horn(P, Q):
    """Horn fits for a batch of 3-point correspondence sets.

    P, Q: (b,3,3). Returns (b,3,3) rotations and (b,3) translations.
    """
    cp = P.mean(axis=1, keepdims=True)
    cq = Q.mean(axis=1, keepdims=True)
    M = np.einsum("bki,bkj->bij", P - cp, Q - cq)
    b = len(M)
    N = np.zeros((b, 4, 4))
    Sxx, Sxy, Sxz = M[:, 0, 0], M[:, 0, 1], M[:, 0, 2]
    Syx, Syy, Syz = M[:, 1, 0], M[:, 1, 1], M[:, 1, 2]
    Szx, Szy, Szz = M[:, 2, 0], M[:, 2, 1], M[:, 2, 2]
    N[:, 0, 0] = Sxx + Syy + Szz
    N[:, 0, 1] = N[:, 1, 0] = Syz - Szy
    N[:, 0, 2] = N[:, 2, 0] = Szx - Sxz
    N[:, 0, 3] = N[:, 3, 0] = Sxy - Syx
    N[:, 1, 1] = Sxx - Syy - Szz
    N[:, 1, 2] = N[:, 2, 1] = Sxy + Syx
    N[:, 1, 3] = N[:, 3, 1] = Szx + Sxz
    N[:, 2, 2] = -Sxx + Syy - Szz
    N[:, 2, 3] = N[:, 3, 2] = Syz + Szy
    N[:, 3, 3] = -Sxx - Syy + Szz
    _, vecs = np.linalg.eigh(N)
    q = vecs[:, :, -1]
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    R = np.empty((b, 3, 3))
    R[:, 0, 0] = 1 - 2 * (y * y + z * z)
    R[:, 0, 1] = 2 * (x * y - w * z)
    R[:, 0, 2] = 2 * (x * z + w * y)
    R[:, 1, 0] = 2 * (x * y + w * z)
    R[:, 1, 1] = 1 - 2 * (x * x + z * z)
    R[:, 1, 2] = 2 * (y * z - w * x)
    R[:, 2, 0] = 2 * (x * z - w * y)
    R[:, 2, 1] = 2 * (y * z + w * x)
    R[:, 2, 2] = 1 - 2 * (x * x + y * y)
    t = cq[:, 0, :] - np.einsum("bij,bj->bi", R, cp[:, 0, :])
    return R, t


def _aabb_diag(points):
    if not len(points):
        return 0.0
    ext = points.max(axis=0) - points.min(axis=0)
    return float(np.linalg.norm(ext))


def ransac_rigid(src, dst, params, rng_seed=12345):
    """RANSAC over 3-correspondence minimal sets with Horn refit on inliers."""
    n = len(src)
    if n < 3:
        return None
    rng = np.random.default_rng(rng_seed)
    keys = rng.random((params.ransac_iters, n))
    triplets = np.argsort(keys, axis=1)[:, :3]
    P = src[triplets]
    Q = dst[triplets]
    R, t = _batched_horn(P, Q)
    moved = np.einsum("bij,nj->bni", R, src) + t[:, None, :]
    dist = np.linalg.norm(moved - dst[None, :, :], axis=2)
    thresh = params.ransac_inlier_frac * _aabb_diag(dst)
    if thresh <= 0:
        thresh = params.ransac_inlier_frac * max(_aabb_diag(src), 1e-6)
    inliers = dist <= thresh
    counts = inliers.sum(axis=1)
    best = int(np.argmax(counts))
    if counts[best] < 3:
        # fall back to fitting on everything
        return horn_align(src, dst)
    return horn_align(src[inliers[best]], dst[inliers[best]])


def _assignment_stage(V, Y, params, y_descriptors=None):
    """Dummy-padded min-cost assignment; returns (pairs, C)."""
    dv = shape_descriptors(V)
    dy = shape_descriptors(Y) if y_descriptors is None else y_descriptors
    nv, ny = V.n, Y.n
    n = max(nv, ny)
    cost = np.full((n, n), params.dummy_cost)
    cost[:nv, :ny] = chi2_matrix(dv, dy)
    rows, cols = linear_sum_assignment(cost)
    real = (rows < nv) & (cols < ny)
    pairs = np.stack([rows[real], cols[real]], axis=1)
    C = float(cost[pairs[:, 0], pairs[:, 1]].mean()) if len(pairs) else float("inf")
    return pairs, C


def _alignment_stage(V, Y, pairs, params):
    """RANSAC + Horn rigid fit and the penalized RMS alignment error."""
    if len(pairs) < 3:
        return np.eye(4), params.delta
    src = V.points[pairs[:, 0]]
    dst = Y.points[pairs[:, 1]]
    T = ransac_rigid(src, dst, params)
    moved = src @ T[:3, :3].T + T[:3, 3]
    res2 = ((moved - dst) ** 2).sum(axis=1)
    d2 = params.delta ** 2
    e_v = math.sqrt((res2.sum() + d2 * (V.n - len(pairs))) / V.n)
    e_y = math.sqrt((res2.sum() + d2 * (Y.n - len(pairs))) / Y.n)
    return T, min(e_v, e_y)


def match_shapes(V, Y, params=None, y_descriptors=None):
    """Match shape V against shape Y.

    Pads the smaller side with dummy nodes, solves the min-cost perfect
    assignment over chi2 descriptor costs, reports the mean chi2 over
    real-real matches as the deformation cost C, then verifies the match
    geometrically: RANSAC + Horn estimate a rigid transform from the
    correspondences, and the alignment error E is the smaller of the two
    per-shape RMS residuals where unmatched points are charged delta^2.
    With fewer than 3 real correspondences, E = delta.
    """
    if params is None:
        params = SearchParams()
    if V.n < 2 or Y.n < 2:
        raise PreconditionError("shape matching needs at least 2 points per shape")
    pairs, C = _assignment_stage(V, Y, params, y_descriptors)
    T, E = _alignment_stage(V, Y, pairs, params)
    return MatchResult(pairs, C, T, E)


def accept_match(result, params=None):
    """Both thresholds must pass strictly."""
    if params is None:
        params = SearchParams()
    return result.cost < params.tau_s and result.align_error < params.tau_a


def _resample_indices(n, cap):
    if n <= cap:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, cap).round().astype(int))


class RegionShapeIndex:
    """Caches sample-point indices per region and memoizes match results."""

    def __init__(self, samples, template_shape, params):
        self.samples = samples
        self.template = template_shape
        self.template_descriptors = shape_descriptors(template_shape)
        self.params = params
        self.by_region = {}
        order = np.arange(len(samples.points))
        for rid in np.unique(samples.region_ids):
            self.by_region[int(rid)] = order[samples.region_ids == rid]
        self._memo = {}
        self.eval_count = 0

    def regions_in_box(self, lo, hi):
        p = self.samples.points
        inside = np.all((p >= lo) & (p <= hi), axis=1)
        return sorted(
            int(r) for r in np.unique(self.samples.region_ids[inside]) if r >= 0
        )

    def shape_for(self, regions):
        chunks = [self.by_region[r] for r in sorted(regions) if r in self.by_region]
        idx = np.concatenate(chunks) if chunks else np.zeros(0, dtype=int)
        idx = np.sort(idx)
        take = idx[_resample_indices(len(idx), self.params.max_match_points)]
        return SampledShape(
            self.samples.points[take], self.samples.normals[take],
            regions=tuple(sorted(regions)),
        )

    def cost_only(self, regions):
        """Deformation cost C without the alignment stage (lazy E)."""
        return self._entry(frozenset(regions))["C"]

    def evaluate(self, regions):
        """(C, E, MatchResult|None) for a candidate region set vs template."""
        ent = self._entry(frozenset(regions))
        if ent["res"] is not None and not ent["aligned"]:
            shape, pairs = ent["shape"], ent["res"].pairs
            T, E = _alignment_stage(shape, self.template, pairs, self.params)
            ent["res"] = MatchResult(pairs, ent["C"], T, E)
            ent["E"] = E
            ent["aligned"] = True
        return ent["C"], ent["E"], ent["res"]

    def _entry(self, key):
        ent = self._memo.get(key)
        if ent is None:
            shape = self.shape_for(key)
            if shape.n < 2:
                ent = {"C": float("inf"), "E": float("inf"), "res": None,
                       "shape": shape, "aligned": True}
            else:
                self.eval_count += 1
                pairs, C = _assignment_stage(
                    shape, self.template, self.params, self.template_descriptors
                )
                ent = {"C": C, "E": None,
                       "res": MatchResult(pairs, C, np.eye(4), float("nan")),
                       "shape": shape, "aligned": False}
            self._memo[key] = ent
        return ent


def grow_shrink(seed_regions, window, template_shape, index, params=None,
                exclude=frozenset()):
    """Greedy region-set refinement against the template.

    Alternates a grow pass (add any window region that lowers C while
    keeping E under tau_a) and a shrink pass (same test for removals) for
    a fixed number of iterations, with an early exit when a full iteration
    changes nothing. Regions in `exclude` are never grown in. Returns
    (best_set, best_match_or_None).
    """
    if params is None:
        params = index.params
    A = frozenset(int(r) for r in seed_regions)
    if not A:
        return set(), None
    lo, hi = window
    w_regions = set(index.regions_in_box(lo, hi)) - set(exclude)

    c_a = index.cost_only(A)

    def improves(cand):
        # C test first; the alignment stage only runs when it passes
        if index.cost_only(cand) >= c_a:
            return False
        _, e, _ = index.evaluate(cand)
        return e < params.tau_a

    for _ in range(params.iterations):
        before = A
        M = A
        for r in sorted(w_regions - M):
            cand = M | {r}
            if improves(cand):
                A, c_a = cand, index.cost_only(cand)
        M = A
        for r in sorted(M):
            cand = M - {r}
            if not cand:
                continue
            if improves(cand):
                A, c_a = cand, index.cost_only(cand)
        if A == before:
            break
    _, _, result = index.evaluate(A)
    return set(A), result


def template_shape_from_regions(samples, regions, params):
    regions = sorted(set(int(r) for r in regions))
    mask = np.isin(samples.region_ids, regions)
    pts = samples.points[mask]
    if len(pts) < 2:
        raise ValidationError("template has too few sampled points")
    take = _resample_indices(len(pts), params.max_match_points)
    return SampledShape(
        pts[take], samples.normals[mask][take], regions=tuple(regions)
    )


def _template_window_extent(template_shape):
    ext = template_shape.points.max(axis=0) - template_shape.points.min(axis=0)
    if (ext <= 1e-9).any():
        raise ValidationError("template bounding box has zero volume")
    return ext


@dataclass
class Candidate:
    regions: tuple
    match: MatchResult


def search_scene(session, template_regions, params=None, samples=None,
                 use_alignment_filter=True, index=None):
    """Slide the template's bounding box over the scene and collect matches.

    The window strides by its own extent on each axis (z-major order).
    Regions of an accepted candidate are claimed and skipped afterwards;
    the template's own regions are claimed up front. Candidates are
    returned for user verification, not applied to the hierarchy.
    """
    if params is None:
        params = SearchParams()
    template_regions = sorted(set(int(r) for r in template_regions))
    live = set(session.hierarchy.region_of.values())
    for r in template_regions:
        if r not in live:
            raise ValidationError(f"unknown template region {r}")
    if samples is None:
        samples = sample_scene(
            session.mesh, params.sample_count, params.seed,
            region_of_vertex=session.hierarchy.region_of_vertices(),
        )
    template = template_shape_from_regions(samples, template_regions, params)
    extent = _template_window_extent(template)

    if index is None:
        index = RegionShapeIndex(samples, template, params)
    scene_lo = samples.points.min(axis=0)
    scene_hi = samples.points.max(axis=0)
    steps = np.maximum(np.ceil((scene_hi - scene_lo) / extent).astype(int), 1)

    claimed = set(template_regions)
    candidates = []
    for iz in range(steps[2]):
        for iy in range(steps[1]):
            for ix in range(steps[0]):
                lo = scene_lo + extent * np.array([ix, iy, iz])
                hi = lo + extent
                seed = [
                    r for r in index.regions_in_box(lo, hi) if r not in claimed
                ]
                if not seed:
                    continue
                found, result = grow_shrink(
                    seed, (lo, hi), template, index, params, exclude=claimed
                )
                if not found or result is None:
                    continue
                ok = result.cost < params.tau_s and (
                    not use_alignment_filter or result.align_error < params.tau_a
                )
                if ok:
                    claimed |= found
                    candidates.append(Candidate(tuple(sorted(found)), result))
    return candidates, index


def guided_merge(session, seed_region, template_regions, params=None, samples=None):
    """Grow-shrink seeded from one user-picked region of a missed object.

    The window is the template's bounding box centered on the seed
    region's sample centroid. The candidate is returned unverified.
    """
    if params is None:
        params = SearchParams()
    seed_region = int(seed_region)
    live = set(session.hierarchy.region_of.values())
    if seed_region not in live:
        raise ValidationError(f"unknown region {seed_region}")
    if samples is None:
        samples = sample_scene(
            session.mesh, params.sample_count, params.seed,
            region_of_vertex=session.hierarchy.region_of_vertices(),
        )
    template = template_shape_from_regions(samples, template_regions, params)
    extent = _template_window_extent(template)
    index = RegionShapeIndex(samples, template, params)
    seed_pts = samples.points[samples.region_ids == seed_region]
    if not len(seed_pts):
        raise ValidationError(f"region {seed_region} has no sampled points")
    center = seed_pts.mean(axis=0)
    lo = center - extent / 2.0
    hi = center + extent / 2.0
    found, result = grow_shrink([seed_region], (lo, hi), template, index, params)
    return Candidate(tuple(sorted(found)), result), index
