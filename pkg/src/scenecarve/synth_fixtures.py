"""Deterministic synthetic scenes with exact ground truth.

Four fixture kinds cover the test surface: a two-plane crease for the
graph segmentation, colored boxes on a jittered floor for the MRF stage,
a room with duplicated template objects for the search, and a
shifted-square image pair for 2D contour alignment. Generation is a pure
function of the spec: same spec, bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .scene_model import SceneMesh, SegmentationHierarchy, compute_normals

FIXTURE_KINDS = (
    "two_plane_crease", "colored_boxes", "duplicated_room", "shifted_square"
)

# saturated, well-separated object colors
_PALETTE = np.array([
    [0.85, 0.10, 0.10],
    [0.10, 0.15, 0.85],
    [0.10, 0.75, 0.15],
    [0.90, 0.80, 0.10],
    [0.80, 0.15, 0.80],
    [0.10, 0.80, 0.80],
    [0.95, 0.55, 0.10],
    [0.45, 0.25, 0.75],
])


@dataclass
class FixtureSpec:
    kind: str
    seed: int = 0
    jitter_sigma: float = 0.0
    drop_fraction: float = 0.0
    grid_n: int = 20            # two_plane: columns per plane
    grid_m: int = 20            # two_plane: rows along the crease
    spacing: float = 0.05
    n_boxes: int = 4            # colored_boxes
    n_copies: int = 4           # duplicated_room: copies besides the template
    n_drop_copies: int = 0
    n_clutter: int = 4
    image_shape: tuple = (480, 640)
    square_size: int = 200
    shift: tuple = (4, 3)       # 5 px offset


@dataclass
class GroundTruthObject:
    regions: tuple
    vertices: np.ndarray
    translation: np.ndarray
    dropped: bool = False


@dataclass
class FixtureResult:
    kind: str
    mesh: SceneMesh = None
    gt_vertex_regions: np.ndarray = None
    crease_vertices: np.ndarray = None
    hierarchy: SegmentationHierarchy = None
    template_regions: tuple = ()
    objects: list = field(default_factory=list)   # GroundTruthObject per copy
    clutter_regions: tuple = ()
    floor_region: int = -1
    image: np.ndarray = None
    gt_mask: np.ndarray = None
    contour: np.ndarray = None
    shifted_contour: np.ndarray = None


def _grid_plane(origin, du, dv, nu, nv):
    """(nu x nv)-vertex planar grid; returns (vertices, faces)."""
    origin = np.asarray(origin, dtype=np.float64)
    du = np.asarray(du, dtype=np.float64)
    dv = np.asarray(dv, dtype=np.float64)
    ii, jj = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    verts = origin + ii[..., None] * du + jj[..., None] * dv
    verts = verts.reshape(-1, 3)
    faces = []
    for i in range(nu - 1):
        for j in range(nv - 1):
            a = i * nv + j
            b = (i + 1) * nv + j
            faces.append((a, b, a + 1))
            faces.append((a + 1, b, b + 1))
    return verts, np.asarray(faces, dtype=np.int64)


def _merge_parts(parts):
    """Concatenate (vertices, faces) pairs; returns verts, faces, part index."""
    verts, faces, owner = [], [], []
    offset = 0
    for pi, (v, f) in enumerate(parts):
        verts.append(v)
        faces.append(f + offset)
        owner.append(np.full(len(v), pi, dtype=np.int64))
        offset += len(v)
    return (
        np.concatenate(verts),
        np.concatenate(faces).astype(np.int64),
        np.concatenate(owner),
    )


def _box_faces(center, size, subdiv=3, include_bottom=False):
    """Open axis-aligned box as a list of (vertices, faces) per face."""
    cx, cy, cz = center
    sx, sy, sz = size
    hx, hy, hz = sx / 2.0, sy / 2.0, sz / 2.0
    g = subdiv + 1
    faces = []
    # top (+y)
    faces.append(_grid_plane(
        (cx - hx, cy + hy, cz - hz), (sx / subdiv, 0, 0), (0, 0, sz / subdiv), g, g
    ))
    # sides +-x
    faces.append(_grid_plane(
        (cx + hx, cy - hy, cz - hz), (0, sy / subdiv, 0), (0, 0, sz / subdiv), g, g
    ))
    faces.append(_grid_plane(
        (cx - hx, cy - hy, cz - hz), (0, sy / subdiv, 0), (0, 0, sz / subdiv), g, g
    ))
    # sides +-z
    faces.append(_grid_plane(
        (cx - hx, cy - hy, cz + hz), (sx / subdiv, 0, 0), (0, sy / subdiv, 0), g, g
    ))
    faces.append(_grid_plane(
        (cx - hx, cy - hy, cz - hz), (sx / subdiv, 0, 0), (0, sy / subdiv, 0), g, g
    ))
    if include_bottom:
        faces.append(_grid_plane(
            (cx - hx, cy - hy, cz - hz), (sx / subdiv, 0, 0), (0, 0, sz / subdiv), g, g
        ))
    return faces


def _two_plane_crease(spec):
    """Horizontal and vertical grid planes meeting at a 90-degree crease.

    Each plane keeps its own row of crease vertices (coincident positions)
    and a strip of zero-area faces stitches the rows together, so the mesh
    is connected, crease edges carry the full 90-degree normal
    disagreement, and interior edges stay near zero.
    """
    n, m, h = spec.grid_n, spec.grid_m, spec.spacing
    v1, f1 = _grid_plane((0, 0, 0), (h, 0, 0), (0, 0, h), n, m)
    v2, f2 = _grid_plane(((n - 1) * h, 0, 0), (0, h, 0), (0, 0, h), n, m)
    verts = np.concatenate([v1, v2])
    faces = [f1, f2 + len(v1)]
    # stitch the coincident crease rows (u = n-1 of plane 1, u = 0 of plane 2)
    row_a = np.arange(m) + (n - 1) * m
    row_b = np.arange(m) + len(v1)
    stitch = []
    for w in range(m - 1):
        stitch.append((row_a[w], row_b[w], row_a[w + 1]))
        stitch.append((row_a[w + 1], row_b[w], row_b[w + 1]))
    faces.append(np.asarray(stitch, dtype=np.int64))
    faces = np.concatenate(faces)

    if spec.jitter_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        verts = verts + rng.normal(0.0, spec.jitter_sigma, verts.shape)

    mesh = compute_normals(SceneMesh(verts, faces))
    mesh = SceneMesh(
        mesh.vertices, mesh.faces, normals=mesh.normals,
        colors=np.full((len(verts), 3), 0.6),
    )
    gt = np.zeros(len(verts), dtype=np.int64)
    gt[len(v1):] = 1
    crease = np.concatenate([row_a, row_b])
    return FixtureResult(
        kind=spec.kind, mesh=mesh, gt_vertex_regions=gt,
        crease_vertices=crease,
    )


def _colored_boxes(spec):
    rng = np.random.default_rng(spec.seed)
    parts = []
    gt_ids = []

    floor_n = 41
    floor_span = (floor_n - 1) * spec.spacing
    parts.append(_grid_plane(
        (0, 0, 0), (spec.spacing, 0, 0), (0, 0, spec.spacing), floor_n, floor_n
    ))
    gt_ids.append(0)

    margin = 0.3
    positions = []
    for bi in range(spec.n_boxes):
        size = rng.uniform(0.25, 0.45, 3)
        for _ in range(100):
            pos = rng.uniform(margin, floor_span - margin, 2)
            if all(np.linalg.norm(pos - p) > 0.8 for p in positions):
                break
        positions.append(pos)
        center = (pos[0], size[1] / 2.0 + 0.001, pos[1])
        for face in _box_faces(center, size, subdiv=5):
            parts.append(face)
            gt_ids.append(bi + 1)

    verts, faces, owner = _merge_parts(parts)
    gt = np.asarray(gt_ids, dtype=np.int64)[owner]
    if spec.jitter_sigma > 0:
        verts = verts + rng.normal(0.0, spec.jitter_sigma, verts.shape)

    mesh = compute_normals(SceneMesh(verts, faces))
    colors = np.empty((len(verts), 3))
    colors[gt == 0] = (0.6, 0.6, 0.6)
    for bi in range(spec.n_boxes):
        colors[gt == bi + 1] = _PALETTE[bi % len(_PALETTE)]
    mesh = SceneMesh(mesh.vertices, mesh.faces, normals=mesh.normals, colors=colors)
    return FixtureResult(kind=spec.kind, mesh=mesh, gt_vertex_regions=gt)


# chair proportions (meters); coordinates are multiples of 1/32 so that
# grid-aligned copy translations preserve edge vectors exactly. Two parts
# (seat block + back panel) keep any part one grow step from the whole
# object, which is what the grow-shrink alignment guard expects; their
# subdivisions differ so no part is exactly half the object's vertices.
_CHAIR_PARTS = (
    # (center, size, subdiv) relative to the chair origin on the floor
    ((0.0, 0.34375, 0.0), (1.0, 0.6875, 1.0), 4),              # seat block
    ((0.0, 1.15625, -0.4375), (1.0, 0.9375, 0.125), 3),        # back panel
)


def _chair(origin):
    """Chair part meshes at a floor position; returns list of face lists."""
    ox, oz = origin
    part_meshes = []
    for center, size, subdiv in _CHAIR_PARTS:
        cx, cy, cz = center
        part_meshes.append(
            _box_faces((ox + cx, cy, oz + cz), size, subdiv=subdiv)
        )
    return part_meshes


def _duplicated_room(spec):
    rng = np.random.default_rng(spec.seed)
    room = 6.0
    parts = []
    part_region = []       # region id per part
    region_info = {}       # region id -> ("floor"|"chair"|"clutter", object idx)

    next_region = 0

    def add_part(vf, kind, obj):
        nonlocal next_region
        parts.append(vf)
        part_region.append(next_region)
        region_info[next_region] = (kind, obj)
        next_region += 1

    floor_n = 41
    sp = room / (floor_n - 1)
    add_part(
        _grid_plane((0, 0, 0), (sp, 0, 0), (0, 0, sp), floor_n, floor_n),
        "floor", -1,
    )
    floor_region = 0

    # chair slots on a 0.75 m grid (translations stay exactly representable);
    # the template takes the first chosen slot
    slot_coords = np.arange(0.75, room - 0.75 + 1e-9, 0.75)
    slots = [(x, z) for x in slot_coords for z in slot_coords]
    order = rng.permutation(len(slots))
    n_chairs = 1 + spec.n_copies
    min_gap = 1.5
    chosen = []
    for si in order:
        p = np.array(slots[si])
        if all(np.abs(p - q).max() >= min_gap for q in chosen):
            chosen.append(p)
        if len(chosen) == n_chairs:
            break
    if len(chosen) < n_chairs:
        raise ValidationError("room too small for the requested object count")

    chair_regions = []
    translations = []
    base = chosen[0]
    for ci in range(n_chairs):
        pos = chosen[ci]
        regions = []
        for part_faces in _chair(pos):
            # each chair part (pedestal/seat/back) is one region; its box
            # faces share that region
            rid = next_region
            for vf in part_faces:
                parts.append(vf)
                part_region.append(rid)
            region_info[rid] = ("chair", ci)
            next_region += 1
            regions.append(rid)
        chair_regions.append(tuple(regions))
        translations.append(np.array([pos[0] - base[0], 0.0, pos[1] - base[1]]))

    clutter_regions = []
    placed = [np.asarray(p) for p in chosen]
    for ki in range(spec.n_clutter):
        pos = None
        for _ in range(200):
            trial = rng.uniform(0.7, room - 0.7, 2)
            if all(np.linalg.norm(trial - q) >= 1.5 for q in placed):
                pos = trial
                break
        if pos is None:
            continue
        placed.append(pos)
        dims = rng.uniform(0.4, 1.3, 3)
        rid = next_region
        for vf in _box_faces((pos[0], dims[1] / 2.0, pos[1]), dims, subdiv=3):
            parts.append(vf)
            part_region.append(rid)
        region_info[rid] = ("clutter", ki)
        next_region += 1
        clutter_regions.append(rid)

    verts, faces, owner = _merge_parts(parts)
    region_of_vertex = np.asarray(
        [part_region[o] for o in owner], dtype=np.int64
    )
    mesh = compute_normals(SceneMesh(verts, faces))
    colors = np.full((len(verts), 3), 0.55)
    for rid, (kind, obj) in region_info.items():
        if kind == "chair":
            colors[region_of_vertex == rid] = _PALETTE[1]
        elif kind == "clutter":
            colors[region_of_vertex == rid] = _PALETTE[(obj + 2) % len(_PALETTE)]
    mesh = SceneMesh(mesh.vertices, mesh.faces, normals=mesh.normals, colors=colors)

    # hierarchy: one supervertex per region, regions as generated
    sv_ids = {}
    sv_of = np.empty(len(verts), dtype=np.int32)
    for i, rid in enumerate(sorted(set(region_of_vertex.tolist()))):
        sv_ids[rid] = i
    for vi in range(len(verts)):
        sv_of[vi] = sv_ids[region_of_vertex[vi]]
    region_of = {sv_ids[rid]: rid for rid in sv_ids}
    hierarchy = SegmentationHierarchy(sv_of, region_of)

    drop_copies = sorted(
        rng.choice(np.arange(1, n_chairs), size=min(spec.n_drop_copies, n_chairs - 1),
                   replace=False).tolist()
    ) if spec.n_drop_copies and n_chairs > 1 else []

    objects = []
    for ci in range(1, n_chairs):
        vmask = np.isin(region_of_vertex, chair_regions[ci])
        objects.append(GroundTruthObject(
            regions=chair_regions[ci],
            vertices=np.nonzero(vmask)[0],
            translation=translations[ci],
            dropped=ci in drop_copies,
        ))
    return FixtureResult(
        kind=spec.kind, mesh=mesh,
        gt_vertex_regions=region_of_vertex,
        hierarchy=hierarchy,
        template_regions=chair_regions[0],
        objects=objects,
        clutter_regions=tuple(clutter_regions),
        floor_region=floor_region,
    )


def _shifted_square(spec):
    from .proj2d import moore_trace

    H, W = spec.image_shape
    s = spec.square_size
    y0 = (H - s) // 2
    x0 = (W - s) // 2
    mask = np.zeros((H, W), dtype=bool)
    mask[y0 : y0 + s, x0 : x0 + s] = True
    image = np.where(mask, 1.0, 0.0)
    contour = moore_trace(mask)
    dx, dy = spec.shift
    shifted = contour + np.array([dx, dy])
    return FixtureResult(
        kind=spec.kind, image=image, gt_mask=mask,
        contour=contour, shifted_contour=shifted,
    )


def apply_point_drop(samples, regions_to_drop, fraction, seed):
    """Delete a random fraction of the sample points of the given regions."""
    rng = np.random.default_rng(seed)
    mask = np.ones(len(samples.points), dtype=bool)
    target = np.isin(samples.region_ids, list(regions_to_drop))
    idx = np.nonzero(target)[0]
    n_drop = int(round(fraction * len(idx)))
    if n_drop:
        drop = rng.choice(idx, size=n_drop, replace=False)
        mask[drop] = False
    return samples.subset(mask)


def generate(spec):
    """Build the fixture for a spec. Pure function: same spec, same bits."""
    builders = {
        "two_plane_crease": _two_plane_crease,
        "colored_boxes": _colored_boxes,
        "duplicated_room": _duplicated_room,
        "shifted_square": _shifted_square,
    }
    if spec.kind not in builders:
        raise ValidationError(
            f"unknown fixture kind {spec.kind!r}; expected one of {FIXTURE_KINDS}"
        )
    return builders[spec.kind](spec)
