"""2D segmentation: region masks by projection, contour snapping to edges.

A region's mask is the set of pixels where it is front-most under a
global depth buffer. Its Moore-ordered contour is then aligned to the
frame's edge map by a second-order dynamic program that trades local
shape similarity against contour continuity and smoothness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import PreconditionError
from . import raster

HIST_BINS = 16
BASE_WINDOW = 21          # at 640x480; scaled by max image dimension
BASE_DIM = 640


@dataclass
class RegionMask:
    frame_id: int
    region: int
    mask: np.ndarray                  # (H,W) bool
    contour: np.ndarray               # (k,2) ordered (x,y) pixels
    empty: bool = False


@dataclass
class EdgeMap:
    frame_id: int
    points: np.ndarray                # (e,2) (x,y) edge pixels
    shape: tuple                      # (H,W)
    _tree: cKDTree = field(default=None, repr=False)

    def tree(self):
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self._tree


# Moore neighborhood in clockwise order starting from west, (dx,dy)
_MOORE = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)]


def moore_trace(mask):
    """Ordered boundary of the largest foreground component (Jacob's rule).

    Returns (k,2) (x,y) pixel coordinates forming a closed 8-connected
    sequence; a single-pixel mask yields that one pixel.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.zeros((0, 2), dtype=np.int64)
    lab, n = ndimage.label(mask)
    if n > 1:
        sizes = ndimage.sum_labels(mask, lab, index=np.arange(1, n + 1))
        mask = lab == (int(np.argmax(sizes)) + 1)
    ys, xs = np.nonzero(mask)
    start = (xs[np.lexsort((xs, ys))[0]], ys[np.lexsort((xs, ys))[0]])
    H, W = mask.shape

    def fg(p):
        x, y = p
        return 0 <= x < W and 0 <= y < H and mask[y, x]

    contour = [start]
    # entered the start heading east after scanning from the west
    backtrack_dir = _MOORE.index((-1, 0))
    current = start
    first_move = None
    while True:
        found = False
        for k in range(1, 9):
            d = (backtrack_dir + k) % 8
            nxt = (current[0] + _MOORE[d][0], current[1] + _MOORE[d][1])
            if fg(nxt):
                if current == start and first_move is not None and d == first_move:
                    if len(contour) > 1:
                        return np.asarray(contour[:-1], dtype=np.int64)
                if current == start and first_move is None:
                    first_move = d
                contour.append(nxt)
                current = nxt
                backtrack_dir = (d + 5) % 8  # direction back to previous pixel
                found = True
                break
        if not found:
            return np.asarray(contour, dtype=np.int64)  # isolated pixel
        if current == start:
            # re-entered the start; loop again to apply Jacob's criterion
            if len(contour) > mask.sum() * 4 + 8:
                return np.asarray(contour[:-1], dtype=np.int64)


def project_region(session, region, frame):
    """Render a region's visibility mask and its ordered contour.

    Only the largest connected component of the mask is kept, so the
    contour always bounds the returned mask.
    """
    vertex_region = session.hierarchy.region_of_vertices()
    _, vid = raster.render_vertex_ids(session.mesh, frame)
    covered = vid >= 0
    mask = np.zeros(vid.shape, dtype=bool)
    mask[covered] = vertex_region[vid[covered]] == region
    if not mask.any():
        return RegionMask(frame.id, region, mask, np.zeros((0, 2), np.int64), True)
    lab, n = ndimage.label(mask)
    if n > 1:
        sizes = ndimage.sum_labels(mask, lab, index=np.arange(1, n + 1))
        mask = lab == (int(np.argmax(sizes)) + 1)
    contour = moore_trace(mask)
    return RegionMask(frame.id, region, mask, contour)


def detect_edges(image, frame_id=0, precomputed=None):
    """Canny edge map: Gaussian blur, Sobel, non-max suppression, hysteresis.

    High threshold = 90th percentile of the gradient magnitude, low = 0.1
    of high. A precomputed binary edge map bypasses the detector entirely.
    """
    if precomputed is not None:
        pts = np.argwhere(np.asarray(precomputed, dtype=bool))[:, ::-1]
        return EdgeMap(frame_id, pts.astype(np.int64), tuple(precomputed.shape[:2]))
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 3:
        img = img @ np.array([0.299, 0.587, 0.114])
    H, W = img.shape
    smooth = ndimage.gaussian_filter(img, sigma=1.4)
    gx = ndimage.sobel(smooth, axis=1)
    gy = ndimage.sobel(smooth, axis=0)
    mag = np.hypot(gx, gy)
    ang = np.arctan2(gy, gx)

    # non-max suppression along the quantized gradient direction
    sector = np.mod(np.round(ang / (math.pi / 4.0)), 4).astype(int)
    offs = {0: (0, 1), 1: (-1, 1), 2: (-1, 0), 3: (-1, -1)}
    nms = np.zeros_like(mag)
    padded = np.pad(mag, 1)
    for s, (dy, dx) in offs.items():
        sel = sector == s
        a = padded[1 + dy : H + 1 + dy, 1 + dx : W + 1 + dx]
        b = padded[1 - dy : H + 1 - dy, 1 - dx : W + 1 - dx]
        keep = sel & (mag >= a) & (mag >= b)
        nms[keep] = mag[keep]

    high = np.percentile(mag, 90.0)
    low = 0.1 * high
    strong = nms > high
    weak = nms > low
    lab, n = ndimage.label(weak, structure=np.ones((3, 3)))
    if n:
        keep_ids = np.unique(lab[strong])
        keep_ids = keep_ids[keep_ids > 0]
        edges = np.isin(lab, keep_ids)
    else:
        edges = strong
    pts = np.argwhere(edges)[:, ::-1]
    return EdgeMap(frame_id, pts.astype(np.int64), (H, W))


def window_size(shape):
    """Local-shape window side, scaled from 21 px at 640-wide images."""
    w = int(round(BASE_WINDOW * max(shape) / BASE_DIM))
    w = max(w, 3)
    return w if w % 2 == 1 else w + 1


def local_hist(points, center, window):
    """16-bin orientation histogram of vectors center->point in the window."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    c = np.asarray(center, dtype=np.float64)
    half = window // 2
    d = pts - c
    inside = (np.abs(d[:, 0]) <= half) & (np.abs(d[:, 1]) <= half)
    d = d[inside]
    d = d[(d[:, 0] != 0) | (d[:, 1] != 0)]
    hist = np.zeros(HIST_BINS)
    if not len(d):
        return hist
    ang = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2.0 * math.pi)
    bins = np.clip((ang / (2.0 * math.pi / HIST_BINS)).astype(int), 0, HIST_BINS - 1)
    np.add.at(hist, bins, 1.0)
    return hist / hist.sum()


def _chi2_hist(a, b):
    # all-zero vs non-zero is maximal dissimilarity by convention
    sa, sb = a.sum(), b.sum()
    if (sa == 0) != (sb == 0):
        return 1.0
    denom = a + b
    mask = denom > 0
    if not mask.any():
        return 0.0
    return float(0.5 * (((a - b) ** 2)[mask] / denom[mask]).sum())


def _hists_for(points_tree_pts, queries, window):
    """Histograms of the point set around each query position."""
    tree = cKDTree(points_tree_pts) if len(points_tree_pts) else None
    half = window // 2
    out = np.zeros((len(queries), HIST_BINS))
    if tree is None:
        return out
    neighbor_lists = tree.query_ball_point(queries, r=half, p=np.inf)
    for i, (q, idx) in enumerate(zip(queries, neighbor_lists)):
        if not idx:
            continue
        d = points_tree_pts[idx] - q
        d = d[(d[:, 0] != 0) | (d[:, 1] != 0)]
        if not len(d):
            continue
        ang = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2.0 * math.pi)
        bins = np.clip(
            (ang / (2.0 * math.pi / HIST_BINS)).astype(int), 0, HIST_BINS - 1
        )
        h = np.zeros(HIST_BINS)
        np.add.at(h, bins, 1.0)
        out[i] = h / h.sum()
    return out


@dataclass
class AlignmentResult:
    mapped: np.ndarray          # (k,2) mapped contour positions
    cost: float                 # DP objective value
    used_edges: bool = True
    notice: str = ""


def alignment_cost(mapped, match_costs, kappa1, kappa2):
    """Objective recomputed directly from a mapping (the DP must agree)."""
    total = float(np.sum(match_costs))
    f = np.asarray(mapped, dtype=np.float64)
    if len(f) >= 2:
        steps = f[1:] - f[:-1]
        total += kappa1 * float(np.linalg.norm(steps, axis=1).sum())
    if len(f) >= 3:
        v1 = f[2:] - f[1:-1]
        v2 = f[:-2] - f[1:-1]
        n1 = np.linalg.norm(v1, axis=1)
        n2 = np.linalg.norm(v2, axis=1)
        ok = (n1 > 0) & (n2 > 0)
        cosv = np.zeros(len(v1))
        cosv[ok] = np.einsum("ij,ij->i", v1[ok], v2[ok]) / (n1[ok] * n2[ok])
        total += kappa2 * float(cosv.sum())
    return total


def align_contour(contour, edge_map, kappa1=0.1, kappa2=3.0, k=30, delta=None):
    """Snap an ordered contour onto the edge map.

    Each contour point considers its k nearest edge points within delta
    (falling back to staying put when none qualify). The exact
    second-order DP minimizes local-shape chi2 plus kappa1 * step length
    plus kappa2 * cos of the turn angle; the contour is treated as open
    at the trace start.
    """
    U = np.asarray(contour, dtype=np.float64).reshape(-1, 2)
    if len(U) < 3:
        raise PreconditionError("contour needs at least 3 points")
    H, W = edge_map.shape
    if delta is None:
        delta = 0.1 * max(H, W)
    if not len(edge_map.points):
        return AlignmentResult(U.copy(), 0.0, False, "edge map is empty")

    window = window_size(edge_map.shape)
    hist_u = _hists_for(U, U, window)

    tree = edge_map.tree()
    kq = min(k, len(edge_map.points))
    dist, idx = tree.query(U, k=kq, distance_upper_bound=delta)
    if kq == 1:
        dist = dist[:, None]
        idx = idx[:, None]

    cand_pos = []
    cand_hist_keys = []
    need_positions = {}
    for i in range(len(U)):
        valid = np.isfinite(dist[i])
        pts = edge_map.points[idx[i][valid]].astype(np.float64)
        if not len(pts):
            pts = U[i : i + 1]
        cand_pos.append(pts)
        keys = [tuple(p) for p in pts]
        cand_hist_keys.append(keys)
        for p, key in zip(pts, keys):
            need_positions.setdefault(key, p)

    uniq_keys = list(need_positions)
    uniq_pos = np.array([need_positions[key] for key in uniq_keys])
    uniq_h = _hists_for(
        edge_map.points.astype(np.float64), uniq_pos, window
    )
    hist_row = {key: i for i, key in enumerate(uniq_keys)}

    # vectorized chi2 over all (contour point, candidate) pairs
    counts = [len(keys) for keys in cand_hist_keys]
    rows_u = np.repeat(np.arange(len(U)), counts)
    rows_c = np.array([hist_row[key] for keys in cand_hist_keys for key in keys])
    A = hist_u[rows_u]
    B = uniq_h[rows_c]
    denom = A + B
    num = (A - B) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(denom > 0, num / denom, 0.0)
    flat_cost = 0.5 * frac.sum(axis=1)
    zero_mismatch = (A.sum(axis=1) == 0) != (B.sum(axis=1) == 0)
    flat_cost[zero_mismatch] = 1.0
    match_cost = np.split(flat_cost, np.cumsum(counts)[:-1])

    # second-order DP; F[a,b] = best cost with choice[i] = a, choice[i-1] = b.
    # The turn cosine between steps i and i-1 reuses the unit step vectors
    # of the previous transition: cos(a-b, c-b) = -(u1_i[a,b] . u1_{i-1}[b,c]).
    def unit_steps(pa, pb):
        v = pa[:, None, :] - pb[None, :, :]
        ln = np.linalg.norm(v, axis=2)
        u = v / np.where(ln > 0, ln, 1.0)[:, :, None]
        return u, ln

    n = len(U)
    u_prev, d01 = unit_steps(cand_pos[1], cand_pos[0])
    F = match_cost[0][None, :] + match_cost[1][:, None] + kappa1 * d01
    back = [None, None]
    for i in range(2, n):
        u1, n1 = unit_steps(cand_pos[i], cand_pos[i - 1])
        cosv = -np.einsum("abk,bck->abc", u1, u_prev)
        trans = F[None, :, :] + kappa2 * cosv            # (a,b,c)
        best_c = np.argmin(trans, axis=2)
        best_val = np.take_along_axis(trans, best_c[:, :, None], axis=2)[:, :, 0]
        F = match_cost[i][:, None] + kappa1 * n1 + best_val
        back.append(best_c)
        u_prev = u1

    flat = int(np.argmin(F))
    a, b = divmod(flat, F.shape[1])
    choice = [0] * n
    choice[n - 1], choice[n - 2] = a, b
    for i in range(n - 1, 1, -1):
        choice[i - 2] = int(back[i][choice[i], choice[i - 1]])
    mapped = np.array([cand_pos[i][choice[i]] for i in range(n)])
    mc = np.array([match_cost[i][choice[i]] for i in range(n)])
    total = alignment_cost(mapped, mc, kappa1, kappa2)
    return AlignmentResult(mapped, total)


def mask_from_contour(contour, shape):
    """Close the mapped contour with Bresenham segments and fill by scanline."""
    H, W = shape
    canvas = np.zeros((H, W), dtype=bool)
    pts = np.asarray(np.rint(contour), dtype=np.int64).reshape(-1, 2)
    if not len(pts):
        return canvas
    closed = np.vstack([pts, pts[:1]])
    for (x0, y0), (x1, y1) in zip(closed[:-1], closed[1:]):
        for x, y in _bresenham(x0, y0, x1, y1):
            if 0 <= x < W and 0 <= y < H:
                canvas[y, x] = True
    filled = ndimage.binary_fill_holes(canvas)
    return filled


def _bresenham(x0, y0, x1, y1):
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        yield x, y
        if x == x1 and y == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy


ABLATION_MODES = ("projection", "local", "+continuity", "+smoothness", "full")


def ablate_alignment(contour, edge_map, mode, gt_mask, kappa1=0.1, kappa2=3.0,
                     k=30, delta=None):
    """Run alignment with selected cue terms zeroed and score OCE vs truth.

    Modes: projection (no alignment), local (kappa1 = kappa2 = 0),
    +continuity (kappa2 = 0), +smoothness (kappa1 = 0), full.
    """
    from .eval_metrics import oce

    if mode not in ABLATION_MODES:
        raise PreconditionError(f"unknown ablation mode {mode!r}")
    if mode == "projection":
        mapped = np.asarray(contour, dtype=np.float64)
        result = AlignmentResult(mapped, 0.0, False, "projection only")
    else:
        k1 = kappa1 if mode in ("+continuity", "full") else 0.0
        k2 = kappa2 if mode in ("+smoothness", "full") else 0.0
        result = align_contour(contour, edge_map, k1, k2, k, delta)
    mask = mask_from_contour(result.mapped, edge_map.shape)
    gt = np.asarray(gt_mask, dtype=bool)
    score = oce(mask.astype(int).ravel(), gt.astype(int).ravel())
    return result, score
