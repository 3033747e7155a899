"""Core scene data types: mesh, frames, segmentation hierarchy, session.

The hierarchy is a three-level partition (vertices -> supervertices ->
regions) plus optional semantic labels per region. All interactive edits
operate on the supervertex->region map; the vertex->supervertex map is
fixed once automatic segmentation has run.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import UnsupportedVersionError, ValidationError
from . import ply_io

log = logging.getLogger(__name__)

ANNOTATION_SCHEMA_VERSION = 1


@dataclass
class SceneMesh:
    """Indexed triangle mesh with per-vertex unit normals and RGB colors."""

    vertices: np.ndarray            # (n,3) float64, meters
    faces: np.ndarray               # (m,3) int32
    normals: np.ndarray | None = None   # (n,3) float64, unit
    colors: np.ndarray | None = None    # (n,3) float64 in [0,1]

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int32).reshape(-1, 3)
        n = len(self.vertices)
        if self.faces.size:
            if self.faces.min() < 0 or self.faces.max() >= n:
                raise ValidationError(
                    f"face index out of bounds (mesh has {n} vertices)"
                )
            degen = (
                (self.faces[:, 0] == self.faces[:, 1])
                | (self.faces[:, 1] == self.faces[:, 2])
                | (self.faces[:, 0] == self.faces[:, 2])
            )
            if degen.any():
                raise ValidationError(
                    f"face {int(np.argwhere(degen)[0][0])} is degenerate"
                )

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def edges(self):
        """Unique undirected mesh edges as an (e,2) int array with e0 < e1."""
        f = self.faces
        pairs = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [0, 2]]], axis=0)
        pairs = np.sort(pairs, axis=1)
        return np.unique(pairs, axis=0)


@dataclass
class Frame:
    """RGB frame with pinhole intrinsics and a rigid camera-to-world pose."""

    image: np.ndarray       # (H,W,3) float32 in [0,1]
    fx: float
    fy: float
    cx: float
    cy: float
    pose: np.ndarray        # (4,4) camera-to-world
    id: int = 0

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=np.float32)
        self.pose = np.asarray(self.pose, dtype=np.float64).reshape(4, 4)
        if self.fx <= 0 or self.fy <= 0:
            raise ValidationError(f"frame {self.id}: focal lengths must be positive")
        R = self.pose[:3, :3]
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-6) or not np.isclose(
            np.linalg.det(R), 1.0, atol=1e-6
        ):
            raise ValidationError(
                f"frame {self.id}: pose upper-left 3x3 is not a rotation"
            )

    @property
    def height(self):
        return self.image.shape[0]

    @property
    def width(self):
        return self.image.shape[1]

    def world_to_camera(self):
        R = self.pose[:3, :3]
        t = self.pose[:3, 3]
        inv = np.eye(4)
        inv[:3, :3] = R.T
        inv[:3, 3] = -R.T @ t
        return inv


class SegmentationHierarchy:
    """vertex -> supervertex -> region maps plus region labels."""

    def __init__(self, supervertex_of, region_of, label_of=None):
        self.supervertex_of = np.asarray(supervertex_of, dtype=np.int32)
        self.region_of = dict(region_of)
        self.label_of = dict(label_of or {})

    @classmethod
    def identity(cls, n_vertices):
        """One supervertex per vertex, one region per supervertex."""
        sv = np.arange(n_vertices, dtype=np.int32)
        return cls(sv, {i: i for i in range(n_vertices)})

    @property
    def n_supervertices(self):
        return len(self.region_of)

    def regions(self):
        return sorted(set(self.region_of.values()))

    def region_members(self, region):
        return sorted(s for s, r in self.region_of.items() if r == region)

    def next_region_id(self):
        return max(self.region_of.values(), default=-1) + 1

    def region_of_vertices(self):
        """Per-vertex region id as an int32 array."""
        n_sv = int(self.supervertex_of.max()) + 1 if self.supervertex_of.size else 0
        lut = np.empty(n_sv, dtype=np.int32)
        for s, r in self.region_of.items():
            lut[s] = r
        return lut[self.supervertex_of]

    def supervertex_sizes(self):
        return np.bincount(self.supervertex_of, minlength=self.n_supervertices)

    def validate(self, n_vertices):
        """Partition totality: every vertex resolves through both maps."""
        if len(self.supervertex_of) != n_vertices:
            raise ValidationError("supervertex map does not cover all vertices")
        svs = set(np.unique(self.supervertex_of).tolist())
        missing = svs - set(self.region_of)
        if missing:
            raise ValidationError(f"supervertices without region: {sorted(missing)}")
        live = set(self.region_of.values())
        orphan = set(self.label_of) - live
        if orphan:
            raise ValidationError(f"labels on nonexistent regions: {sorted(orphan)}")
        if int(self.supervertex_sizes().sum()) != n_vertices:
            raise ValidationError("supervertex sizes do not sum to vertex count")

    def compact(self):
        """Renumber supervertex and region ids densely, preserving order."""
        sv_ids = np.unique(self.supervertex_of)
        sv_map = {int(s): i for i, s in enumerate(sv_ids)}
        region_ids = sorted(set(self.region_of.values()))
        r_map = {r: i for i, r in enumerate(region_ids)}
        sv = np.array([sv_map[int(s)] for s in self.supervertex_of], dtype=np.int32)
        region_of = {sv_map[s]: r_map[r] for s, r in self.region_of.items()}
        label_of = {r_map[r]: l for r, l in self.label_of.items() if r in r_map}
        return SegmentationHierarchy(sv, region_of, label_of)

    def copy(self):
        return SegmentationHierarchy(
            self.supervertex_of.copy(), dict(self.region_of), dict(self.label_of)
        )

    def to_json_dict(self):
        runs = []
        sv = self.supervertex_of
        i = 0
        while i < len(sv):
            j = i
            while j + 1 < len(sv) and sv[j + 1] == sv[i]:
                j += 1
            runs.append([int(sv[i]), j - i + 1])
            i = j + 1
        return {
            "schema_version": ANNOTATION_SCHEMA_VERSION,
            "vertex_supervertex_rle": runs,
            "supervertex_region": {str(s): int(r) for s, r in self.region_of.items()},
            "region_labels": {str(r): l for r, l in self.label_of.items()},
        }

    @classmethod
    def from_json_dict(cls, doc):
        version = doc.get("schema_version")
        if version != ANNOTATION_SCHEMA_VERSION:
            raise UnsupportedVersionError(
                f"annotation schema version {version!r} is not supported "
                f"(expected {ANNOTATION_SCHEMA_VERSION})"
            )
        sv = np.concatenate(
            [np.full(run, val, dtype=np.int32) for val, run in doc["vertex_supervertex_rle"]]
        ) if doc["vertex_supervertex_rle"] else np.zeros(0, dtype=np.int32)
        region_of = {int(s): int(r) for s, r in doc["supervertex_region"].items()}
        label_of = {int(r): l for r, l in doc["region_labels"].items()}
        live = set(region_of.values())
        for r in label_of:
            if r not in live:
                raise ValidationError(
                    f"annotation file labels region {r} which no supervertex maps to"
                )
        for s in np.unique(sv):
            if int(s) not in region_of:
                raise ValidationError(
                    f"annotation file lacks a region for supervertex {int(s)}"
                )
        return cls(sv, region_of, label_of)

    def __eq__(self, other):
        if not isinstance(other, SegmentationHierarchy):
            return NotImplemented
        return (
            np.array_equal(self.supervertex_of, other.supervertex_of)
            and self.region_of == other.region_of
            and self.label_of == other.label_of
        )


@dataclass
class AnnotationSession:
    """Mutable annotation state for one scene."""

    mesh: SceneMesh
    frames: list = field(default_factory=list)
    hierarchy: SegmentationHierarchy = None
    cached_supervertices: np.ndarray = None   # immutable graph-based result
    undo_log: list = field(default_factory=list)
    templates: list = field(default_factory=list)

    def __post_init__(self):
        if self.hierarchy is None:
            self.hierarchy = SegmentationHierarchy.identity(self.mesh.n_vertices)
        if self.cached_supervertices is None:
            self.cached_supervertices = self.hierarchy.supervertex_of.copy()
        self.cached_supervertices.setflags(write=False)

    def set_supervertices(self, hierarchy):
        """Install a fresh automatic segmentation result and re-cache it."""
        self.hierarchy = hierarchy
        self.cached_supervertices = hierarchy.supervertex_of.copy()
        self.cached_supervertices.setflags(write=False)
        self.undo_log.clear()


def canonical_json_bytes(obj):
    """Stable JSON encoding used for all persisted artifacts."""
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")


def compute_face_normals_areas(mesh):
    v = mesh.vertices
    f = mesh.faces
    a = v[f[:, 1]] - v[f[:, 0]]
    b = v[f[:, 2]] - v[f[:, 0]]
    cross = np.cross(a, b)
    double_area = np.linalg.norm(cross, axis=1)
    safe = np.where(double_area > 1e-30, double_area, 1.0)
    normals = cross / safe[:, None]
    return normals, 0.5 * double_area


def isolated_vertices(mesh):
    """Indices of vertices with no incident face."""
    used = np.zeros(mesh.n_vertices, dtype=bool)
    if mesh.faces.size:
        used[mesh.faces.ravel()] = True
    return np.nonzero(~used)[0].tolist()


def compute_normals(mesh, range_sigma=0.35):
    """Area-weighted vertex normals followed by one bilateral smoothing pass.

    The smoothing pass runs over 1-ring neighbors with spatial sigma equal
    to the mean edge length and range sigma in normal-angle radians.
    Isolated vertices get +Z and are reported via a warning log.
    """
    n = mesh.n_vertices
    face_n, face_area = compute_face_normals_areas(mesh)
    acc = np.zeros((n, 3))
    weighted = face_n * face_area[:, None]
    for k in range(3):
        np.add.at(acc, mesh.faces[:, k], weighted)
    norms = np.linalg.norm(acc, axis=1)
    iso = isolated_vertices(mesh)
    flat = norms <= 1e-30
    acc[flat] = (0.0, 0.0, 1.0)
    norms = np.where(flat, 1.0, norms)
    normals = acc / norms[:, None]

    if mesh.faces.size:
        edges = mesh.edges()
        edge_len = np.linalg.norm(
            mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1
        )
        sigma_s = float(edge_len.mean()) if len(edge_len) else 1.0
        smoothed = normals.copy()
        # accumulate bilateral-weighted neighbor normals over both edge ends
        wsum = np.ones(n)
        nsum = normals.copy()
        for a_idx, b_idx in ((edges[:, 0], edges[:, 1]), (edges[:, 1], edges[:, 0])):
            d = np.linalg.norm(mesh.vertices[a_idx] - mesh.vertices[b_idx], axis=1)
            cosang = np.clip(
                np.einsum("ij,ij->i", normals[a_idx], normals[b_idx]), -1.0, 1.0
            )
            ang = np.arccos(cosang)
            w = np.exp(-0.5 * (d / sigma_s) ** 2) * np.exp(
                -0.5 * (ang / range_sigma) ** 2
            )
            np.add.at(wsum, a_idx, w)
            np.add.at(nsum, a_idx, normals[b_idx] * w[:, None])
        smoothed = nsum / wsum[:, None]
        lens = np.linalg.norm(smoothed, axis=1)
        bad = lens <= 1e-30
        smoothed[bad] = normals[bad]
        lens = np.where(bad, 1.0, lens)
        normals = smoothed / lens[:, None]

    if iso:
        normals[iso] = (0.0, 0.0, 1.0)
        log.warning("isolated vertices assigned +Z normal: %s", iso)
    return SceneMesh(mesh.vertices, mesh.faces, normals=normals, colors=mesh.colors)


def project_vertex(point, frame):
    """Pinhole-project a world point into a frame.

    Returns (u, v, depth) with continuous pixel coordinates, or None when
    the point is behind the camera or outside the image bounds.
    """
    p = np.asarray(point, dtype=np.float64)
    w2c = frame.world_to_camera()
    cam = w2c[:3, :3] @ p + w2c[:3, 3]
    z = cam[2]
    if z <= 1e-12:
        return None
    u = frame.fx * cam[0] / z + frame.cx
    v = frame.fy * cam[1] / z + frame.cy
    if not (0.0 <= u < frame.width and 0.0 <= v < frame.height):
        return None
    return float(u), float(v), float(z)


def unproject_pixel(u, v, depth, frame):
    """Inverse of project_vertex for an in-frustum pixel."""
    x = (u - frame.cx) / frame.fx * depth
    y = (v - frame.cy) / frame.fy * depth
    cam = np.array([x, y, depth])
    return frame.pose[:3, :3] @ cam + frame.pose[:3, 3]


def _median_colors_from_frames(mesh, frames, depth_tolerance=0.02):
    from .raster import render_depth

    n = mesh.n_vertices
    gathered = [[] for _ in range(n)]
    for frame in frames:
        depth_buf = render_depth(mesh, frame)
        w2c = frame.world_to_camera()
        cam = mesh.vertices @ w2c[:3, :3].T + w2c[:3, 3]
        z = cam[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = frame.fx * cam[:, 0] / z + frame.cx
            v = frame.fy * cam[:, 1] / z + frame.cy
        ok = (
            (z > 1e-12)
            & (u >= 0) & (u < frame.width)
            & (v >= 0) & (v < frame.height)
        )
        ui = np.clip(np.round(u[ok]).astype(int), 0, frame.width - 1)
        vi = np.clip(np.round(v[ok]).astype(int), 0, frame.height - 1)
        visible = z[ok] <= depth_buf[vi, ui] + depth_tolerance
        idx = np.nonzero(ok)[0][visible]
        pix = frame.image[vi[visible], ui[visible]]
        for vid, color in zip(idx, pix):
            gathered[vid].append(color)
    colors = np.full((n, 3), 0.5)
    for i, samples in enumerate(gathered):
        if samples:
            colors[i] = np.median(np.asarray(samples, dtype=np.float64), axis=0)
    return colors


def load_frames_manifest(path):
    """Load a frames manifest: JSON array of image/intrinsics/pose records."""
    from PIL import Image

    path = Path(path)
    with open(path) as fh:
        entries = json.load(fh)
    frames = []
    for i, entry in enumerate(entries):
        img_path = Path(entry["image_path"])
        if not img_path.is_absolute():
            img_path = path.parent / img_path
        img = np.asarray(Image.open(img_path).convert("RGB"), dtype=np.float32) / 255.0
        intr = entry["intrinsics"]
        pose = np.array(entry["pose"], dtype=np.float64).reshape(4, 4)
        frames.append(
            Frame(
                image=img,
                fx=float(intr["fx"]), fy=float(intr["fy"]),
                cx=float(intr["cx"]), cy=float(intr["cy"]),
                pose=pose,
                id=int(entry.get("id", i)),
            )
        )
    return frames


def load_scene(mesh_file, frames_manifest=None):
    """Load a PLY mesh (plus optional frames) into a fresh session.

    Normals are always recomputed. Colors come from the PLY when present,
    else from median back-projection over the frames, else constant 0.5.
    """
    vertices, faces, colors, _ = ply_io.read_ply(mesh_file)
    mesh = SceneMesh(vertices, faces, colors=colors)
    mesh = compute_normals(mesh)
    frames = load_frames_manifest(frames_manifest) if frames_manifest else []
    if mesh.colors is None:
        if frames:
            mesh = SceneMesh(
                mesh.vertices, mesh.faces, normals=mesh.normals,
                colors=_median_colors_from_frames(mesh, frames),
            )
        else:
            mesh = SceneMesh(
                mesh.vertices, mesh.faces, normals=mesh.normals,
                colors=np.full((mesh.n_vertices, 3), 0.5),
            )
    return AnnotationSession(mesh=mesh, frames=frames)


def save_annotations(session_or_hierarchy, path):
    """Write the hierarchy as canonical JSON. Round-trips byte-identically."""
    h = getattr(session_or_hierarchy, "hierarchy", session_or_hierarchy)
    Path(path).write_bytes(canonical_json_bytes(h.to_json_dict()))


def load_annotations(path, session=None):
    """Read an annotation file; optionally install it into a session."""
    with open(path) as fh:
        doc = json.load(fh)
    h = SegmentationHierarchy.from_json_dict(doc)
    if session is not None:
        if len(h.supervertex_of) != session.mesh.n_vertices:
            raise ValidationError(
                "annotation file covers a different number of vertices"
            )
        session.hierarchy = h
        return session
    return h
