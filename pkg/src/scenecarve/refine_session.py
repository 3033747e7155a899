"""Interactive refinement: merge, extract, split, annotate, undo.

Every edit records the inverse payload needed to restore the prior
hierarchy exactly; undo replays that payload. The vertex->supervertex
level is never touched by edits, so the cached graph-based result stays
valid for extract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyStrokeError, PreconditionError, ValidationError
from . import mrf_seg, raster


@dataclass
class Stroke:
    """A 2D polyline in a camera plus its resolved mesh-vertex path."""

    polyline: np.ndarray                  # (k,2) pixel coordinates
    camera: object = None                 # Frame or compatible camera
    frame_id: int | None = None
    resolved_vertices: list = field(default_factory=list)


@dataclass
class Edit:
    """Reversible hierarchy change: prior values for whatever it touched."""

    kind: str
    sv_regions: dict = field(default_factory=dict)   # sv -> prior region id
    labels: dict = field(default_factory=dict)       # region -> prior label or None


def _record_label(edit, hierarchy, region):
    if region not in edit.labels:
        edit.labels[region] = hierarchy.label_of.get(region)


def _apply_undo(session, edit):
    h = session.hierarchy
    for sv, rid in edit.sv_regions.items():
        h.region_of[sv] = rid
    for region, label in edit.labels.items():
        if label is None:
            h.label_of.pop(region, None)
        else:
            h.label_of[region] = label
    # labels may have been restored onto regions that no longer exist in
    # the rolled-back state only if payloads were inconsistent; validate.
    live = set(h.region_of.values())
    for region in list(h.label_of):
        if region not in live:
            del h.label_of[region]


def sample_polyline(polyline, step=4.0):
    """Densify a pixel polyline so every ~step px gets a ray sample."""
    pts = np.asarray(polyline, dtype=np.float64).reshape(-1, 2)
    if len(pts) <= 1:
        return pts
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        dist = float(np.linalg.norm(b - a))
        n = max(int(np.ceil(dist / step)), 1)
        for t in range(1, n + 1):
            out.append(a + (b - a) * (t / n))
    return np.asarray(out)


def resolve_stroke(polyline, camera, mesh, step=4.0):
    """Ray-cast stroke samples onto the mesh.

    Returns the ordered vertex path (nearest vertex of each front-most
    hit triangle), with consecutive duplicates removed and misses skipped.
    """
    samples = sample_polyline(polyline, step)
    if not len(samples):
        raise EmptyStrokeError("stroke has no sample points")
    origin, dirs = raster.pixel_rays(samples, camera)
    t, faces, points = raster.ray_mesh_intersections(mesh, origin, dirs)
    path = []
    for fi, p in zip(faces, points):
        if fi < 0:
            continue
        corners = mesh.faces[fi]
        d = np.linalg.norm(mesh.vertices[corners] - p, axis=1)
        v = int(corners[int(np.argmin(d))])
        if not path or path[-1] != v:
            path.append(v)
    if not path:
        raise EmptyStrokeError("stroke does not intersect the mesh")
    return path


def stroke_endpoint_supervertices(session, vertex_path):
    sv = session.hierarchy.supervertex_of
    return int(sv[vertex_path[0]]), int(sv[vertex_path[-1]])


def _check_regions_exist(session, regions):
    live = set(session.hierarchy.region_of.values())
    for r in regions:
        if r not in live:
            raise ValidationError(f"unknown region {r}")


def merge(session, regions):
    """Merge regions into the one with the smallest id; returns that id.

    The survivor takes the label of the largest labeled member (by vertex
    count); other labels are dropped into the undo payload.
    """
    regions = sorted(set(int(r) for r in regions))
    if len(regions) < 2:
        raise PreconditionError("merge needs at least 2 distinct regions")
    _check_regions_exist(session, regions)
    h = session.hierarchy
    survivor = regions[0]

    sv_sizes = h.supervertex_sizes()
    vertex_count = {
        r: int(sum(sv_sizes[s] for s in h.region_members(r))) for r in regions
    }
    labeled = [r for r in regions if r in h.label_of]
    winner_label = None
    if labeled:
        labeled.sort(key=lambda r: (-vertex_count[r], r))
        winner_label = h.label_of[labeled[0]]

    edit = Edit(kind="merge")
    for r in regions:
        _record_label(edit, h, r)
    for sv, r in h.region_of.items():
        if r in regions and r != survivor:
            edit.sv_regions[sv] = r
            h.region_of[sv] = survivor
    for r in regions:
        h.label_of.pop(r, None)
    if winner_label is not None:
        h.label_of[survivor] = winner_label
    session.undo_log.append(edit)
    h.validate(session.mesh.n_vertices)
    return survivor


def extract(session, region):
    """Dissolve a region into one region per member supervertex.

    Membership comes from the cached graph-based segmentation (the
    supervertex level is immutable, so no recomputation happens). Returns
    the member supervertex ids for user regrouping.
    """
    region = int(region)
    _check_regions_exist(session, [region])
    h = session.hierarchy
    if not np.array_equal(session.cached_supervertices, h.supervertex_of):
        raise ValidationError("supervertex cache diverged from hierarchy")
    members = h.region_members(region)
    edit = Edit(kind="extract")
    _record_label(edit, h, region)
    next_id = h.next_region_id()
    for sv in members:
        edit.sv_regions[sv] = region
        h.region_of[sv] = next_id
        next_id += 1
    h.label_of.pop(region, None)
    session.undo_log.append(edit)
    h.validate(session.mesh.n_vertices)
    return members


def split_by_supervertices(session, region, start_sv, end_sv, params=None):
    """MRF split of one region with explicit endpoint supervertices."""
    region = int(region)
    _check_regions_exist(session, [region])
    h = session.hierarchy
    stats = mrf_seg.compute_stats(session.mesh, h)
    new_h, new_regions, _ = mrf_seg.optimize_split(
        h, stats, region, start_sv, end_sv, params
    )
    edit = Edit(kind="split")
    _record_label(edit, h, region)
    for sv, rid in new_h.region_of.items():
        if h.region_of[sv] != rid:
            edit.sv_regions[sv] = h.region_of[sv]
    session.hierarchy = new_h
    session.undo_log.append(edit)
    new_h.validate(session.mesh.n_vertices)
    return new_regions


def split(session, region, stroke, params=None):
    """MRF split of one region guided by a stroke; see mrf_seg.optimize_split."""
    if not stroke.resolved_vertices:
        stroke.resolved_vertices = resolve_stroke(
            stroke.polyline, stroke.camera, session.mesh
        )
    a, b = stroke_endpoint_supervertices(session, stroke.resolved_vertices)
    return split_by_supervertices(session, region, a, b, params)


def annotate(session, region, label):
    """Attach a semantic label to a region; re-annotation overwrites."""
    region = int(region)
    _check_regions_exist(session, [region])
    if not isinstance(label, str) or not label.strip():
        raise ValidationError("label must be a non-empty string")
    h = session.hierarchy
    edit = Edit(kind="annotate")
    _record_label(edit, h, region)
    h.label_of[region] = label
    session.undo_log.append(edit)
    h.validate(session.mesh.n_vertices)


def accept_object(session, regions, label=None):
    """Accept a search candidate: merge its regions and optionally label.

    Recorded as a single edit so one undo reverts the whole acceptance.
    """
    regions = sorted(set(int(r) for r in regions))
    _check_regions_exist(session, regions)
    h = session.hierarchy
    edit = Edit(kind="object-accept")
    for r in regions:
        _record_label(edit, h, r)
    survivor = regions[0]
    if len(regions) > 1:
        sv_sizes = h.supervertex_sizes()
        vertex_count = {
            r: int(sum(sv_sizes[s] for s in h.region_members(r))) for r in regions
        }
        labeled = [r for r in regions if r in h.label_of]
        winner_label = None
        if labeled:
            labeled.sort(key=lambda r: (-vertex_count[r], r))
            winner_label = h.label_of[labeled[0]]
        for sv, r in h.region_of.items():
            if r in regions and r != survivor:
                edit.sv_regions[sv] = r
                h.region_of[sv] = survivor
        for r in regions:
            h.label_of.pop(r, None)
        if winner_label is not None:
            h.label_of[survivor] = winner_label
    if label:
        h.label_of[survivor] = label
    session.undo_log.append(edit)
    h.validate(session.mesh.n_vertices)
    return survivor


def undo(session):
    """Reverse the last edit exactly. Returns False on an empty log."""
    if not session.undo_log:
        return False
    edit = session.undo_log.pop()
    _apply_undo(session, edit)
    session.hierarchy.validate(session.mesh.n_vertices)
    return True
