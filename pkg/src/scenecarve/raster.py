"""Software rasterization and ray casting against the scene mesh.

Used for occlusion-aware color gathering, region mask rendering, and
stroke resolution. Triangles with any vertex behind the camera are
skipped rather than clipped; annotation cameras always stand off the
geometry so near-plane clipping is not needed.
"""

from __future__ import annotations

import numpy as np


def _project_all(mesh, frame):
    w2c = frame.world_to_camera()
    cam = mesh.vertices @ w2c[:3, :3].T + w2c[:3, 3]
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = frame.fx * cam[:, 0] / z + frame.cx
        v = frame.fy * cam[:, 1] / z + frame.cy
    return u, v, z


def _rasterize(mesh, frame, per_pixel_vertex=False):
    """Z-buffer rasterization at integer pixel centers.

    Returns (depth, face_id, corner_id) where corner_id holds, per pixel,
    the index of the covering triangle's vertex with the largest
    barycentric weight (only when per_pixel_vertex is set).
    """
    H, W = frame.height, frame.width
    depth = np.full((H, W), np.inf, dtype=np.float64)
    face_id = np.full((H, W), -1, dtype=np.int32)
    corner = np.full((H, W), -1, dtype=np.int32) if per_pixel_vertex else None

    u, v, z = _project_all(mesh, frame)
    faces = mesh.faces
    if not faces.size:
        return depth, face_id, corner

    fu, fv, fz = u[faces], v[faces], z[faces]
    ok = (fz > 1e-9).all(axis=1)
    # cheap screen-bounds reject
    ok &= (fu.max(axis=1) >= 0) & (fu.min(axis=1) < W)
    ok &= (fv.max(axis=1) >= 0) & (fv.min(axis=1) < H)

    inv_z = 1.0 / np.where(fz > 1e-9, fz, 1.0)
    for fi in np.nonzero(ok)[0]:
        x0, x1, x2 = fu[fi]
        y0, y1, y2 = fv[fi]
        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if abs(area) < 1e-12:
            continue
        xmin = max(int(np.ceil(min(x0, x1, x2))), 0)
        xmax = min(int(np.floor(max(x0, x1, x2))), W - 1)
        ymin = max(int(np.ceil(min(y0, y1, y2))), 0)
        ymax = min(int(np.floor(max(y0, y1, y2))), H - 1)
        if xmin > xmax or ymin > ymax:
            continue
        xs = np.arange(xmin, xmax + 1)
        ys = np.arange(ymin, ymax + 1)
        gx, gy = np.meshgrid(xs, ys)
        w0 = ((x1 - gx) * (y2 - gy) - (x2 - gx) * (y1 - gy)) / area
        w1 = ((x2 - gx) * (y0 - gy) - (x0 - gx) * (y2 - gy)) / area
        w2 = 1.0 - w0 - w1
        inside = (w0 >= -1e-9) & (w1 >= -1e-9) & (w2 >= -1e-9)
        if not inside.any():
            continue
        zi = 1.0 / (
            w0 * inv_z[fi, 0] + w1 * inv_z[fi, 1] + w2 * inv_z[fi, 2]
        )
        tile = depth[ymin : ymax + 1, xmin : xmax + 1]
        closer = inside & (zi < tile)
        if not closer.any():
            continue
        tile[closer] = zi[closer]
        face_id[ymin : ymax + 1, xmin : xmax + 1][closer] = fi
        if per_pixel_vertex:
            dominant = np.argmax(np.stack([w0, w1, w2]), axis=0)
            vid = mesh.faces[fi][dominant]
            corner[ymin : ymax + 1, xmin : xmax + 1][closer] = vid[closer]
    return depth, face_id, corner


def render_depth(mesh, frame):
    """Depth buffer (camera-space z) for the whole mesh; inf where empty."""
    depth, _, _ = _rasterize(mesh, frame)
    return depth


def render_vertex_ids(mesh, frame):
    """(depth, vertex_id) buffers; vertex_id is the barycentric-dominant
    vertex of the front-most triangle, -1 where nothing renders."""
    depth, _, corner = _rasterize(mesh, frame, per_pixel_vertex=True)
    return depth, corner


def pixel_rays(pixels, camera):
    """World-space ray origins and unit directions for pixel coordinates."""
    pix = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    d_cam = np.stack(
        [
            (pix[:, 0] - camera.cx) / camera.fx,
            (pix[:, 1] - camera.cy) / camera.fy,
            np.ones(len(pix)),
        ],
        axis=1,
    )
    d_world = d_cam @ camera.pose[:3, :3].T
    d_world /= np.linalg.norm(d_world, axis=1, keepdims=True)
    origin = camera.pose[:3, 3]
    return origin, d_world


def ray_mesh_intersections(mesh, origin, directions):
    """Nearest front-facing-or-back-facing hit per ray (Moller-Trumbore).

    Returns (t, face_index, hit_point) arrays; t = inf and face = -1 for
    misses. Vectorized over faces per ray; fine at annotation-scene scale.
    """
    v0 = mesh.vertices[mesh.faces[:, 0]]
    e1 = mesh.vertices[mesh.faces[:, 1]] - v0
    e2 = mesh.vertices[mesh.faces[:, 2]] - v0
    directions = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    n_rays = len(directions)
    t_out = np.full(n_rays, np.inf)
    f_out = np.full(n_rays, -1, dtype=np.int64)
    p_out = np.full((n_rays, 3), np.nan)
    if not mesh.faces.size:
        return t_out, f_out, p_out
    for ri, d in enumerate(directions):
        pvec = np.cross(d, e2)
        det = np.einsum("ij,ij->i", e1, pvec)
        valid = np.abs(det) > 1e-14
        inv_det = np.where(valid, 1.0 / np.where(valid, det, 1.0), 0.0)
        tvec = origin - v0
        uu = np.einsum("ij,ij->i", tvec, pvec) * inv_det
        qvec = np.cross(tvec, e1)
        vv = qvec @ d * inv_det
        tt = np.einsum("ij,ij->i", e2, qvec) * inv_det
        hit = valid & (uu >= -1e-12) & (vv >= -1e-12) & (uu + vv <= 1 + 1e-12) & (
            tt > 1e-9
        )
        if hit.any():
            cand = np.nonzero(hit)[0]
            best = cand[np.argmin(tt[cand])]
            t_out[ri] = tt[best]
            f_out[ri] = best
            p_out[ri] = origin + tt[best] * d
    return t_out, f_out, p_out
