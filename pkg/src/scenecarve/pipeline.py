"""Batch pipeline: stage orchestration and on-disk artifacts.

Each stage reads the previous stage's files from the artifacts directory
and writes its own, so the CLI, the service, and the tests share one
format. All JSON is canonically serialized; rerunning a stage with the
same inputs and config reproduces identical bytes. Wall-clock timings go
to a separate timings.json that is excluded from the byte-stability
contract.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, asdict, replace
from pathlib import Path

import numpy as np

from .errors import PrerequisiteError, ValidationError
from . import eval_metrics, geom_seg, mrf_seg, ply_io, proj2d, shape_search, synth_fixtures
from .scene_model import (
    SegmentationHierarchy, canonical_json_bytes,
    load_scene, save_annotations, load_annotations,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

STAGES = ("ingest", "seg", "mrf", "search", "project", "align2d", "eval")


@dataclass
class PipelineConfig:
    """All tunables, defaulting to the published settings."""

    seg_smoothing: float = 0.5
    seg_threshold: float = 500.0
    seg_min_size: int = 20
    mrf_gamma: float = 0.5
    mrf_max_sweeps: int = 50
    split_gamma: float = 0.05
    tau_s: float = 0.7
    tau_a: float = 0.4
    delta: float = 2.0
    search_iterations: int = 10
    dummy_cost: float = 0.35
    kappa1: float = 0.1
    kappa2: float = 3.0
    knn: int = 30
    delta2d_frac: float = 0.1
    samples: int = 20000
    seed: int = 0

    @classmethod
    def from_toml(cls, path):
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return replace(cls(), **doc)

    def search_params(self):
        return shape_search.SearchParams(
            tau_s=self.tau_s, tau_a=self.tau_a, delta=self.delta,
            iterations=self.search_iterations, dummy_cost=self.dummy_cost,
            sample_count=self.samples, seed=self.seed,
        )

    def seg_params(self):
        return geom_seg.SegParams(
            self.seg_smoothing, self.seg_threshold, self.seg_min_size
        )

    def mrf_params(self):
        return mrf_seg.MrfParams(
            self.mrf_gamma, self.split_gamma, self.mrf_max_sweeps
        )


def _region_palette(n):
    # stable hash palette: same region id, same color, any session
    ids = np.arange(n, dtype=np.uint64)
    h = (ids * np.uint64(2654435761)) % np.uint64(2 ** 24)
    r = (h >> np.uint64(16)) & np.uint64(255)
    g = (h >> np.uint64(8)) & np.uint64(255)
    b = h & np.uint64(255)
    pal = np.stack([r, g, b], axis=1).astype(np.float64) / 255.0
    return 0.2 + 0.8 * pal


def _write_json(path, obj):
    Path(path).write_bytes(canonical_json_bytes(obj))


def _manifest_path(out_dir):
    return Path(out_dir) / "manifest.json"


def _load_manifest(out_dir):
    p = _manifest_path(out_dir)
    if p.exists():
        return json.loads(p.read_text())
    return {"stages": {}}


def _store_manifest(out_dir, manifest):
    _write_json(_manifest_path(out_dir), manifest)


def _store_timing(out_dir, stage, seconds):
    p = Path(out_dir) / "timings.json"
    doc = json.loads(p.read_text()) if p.exists() else {}
    doc[stage] = seconds
    p.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _require(out_dir, stage, filename):
    p = Path(out_dir) / filename
    if not p.exists():
        raise PrerequisiteError(
            f"stage {stage!r} requires {filename} from an earlier stage; "
            f"run its prerequisite first"
        )
    return p


def _load_session(out_dir, hierarchy_file):
    mesh_path = _require(out_dir, "current", "mesh.ply")
    session = load_scene(mesh_path)
    h = load_annotations(Path(out_dir) / hierarchy_file)
    session.set_supervertices(h)
    return session


def stage_ingest(scene_path, out_dir, config, frames_manifest=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    session = load_scene(scene_path, frames_manifest)
    mesh = session.mesh
    ply_io.write_ply(
        out_dir / "mesh.ply", mesh.vertices, mesh.faces,
        colors=mesh.colors, normals=mesh.normals,
    )
    save_annotations(session.hierarchy, out_dir / "hierarchy.ingest.json")
    manifest = _load_manifest(out_dir)
    manifest["config"] = asdict(config)
    manifest["stages"]["ingest"] = {
        "vertices": mesh.n_vertices,
        "faces": mesh.n_faces,
        "frames": len(session.frames),
    }
    _store_manifest(out_dir, manifest)
    _store_timing(out_dir, "ingest", time.perf_counter() - t0)
    return session


def stage_seg(out_dir, config):
    out_dir = Path(out_dir)
    _require(out_dir, "seg", "hierarchy.ingest.json")
    t0 = time.perf_counter()
    session = _load_session(out_dir, "hierarchy.ingest.json")
    h = geom_seg.segment_graph(session.mesh, config.seg_params())
    session.set_supervertices(h)
    save_annotations(h, out_dir / "hierarchy.seg.json")
    pal = _region_palette(h.n_supervertices)
    ply_io.write_ply(
        out_dir / "seg.ply", session.mesh.vertices, session.mesh.faces,
        colors=pal[h.supervertex_of],
    )
    manifest = _load_manifest(out_dir)
    manifest["stages"]["seg"] = {"supervertices": h.n_supervertices,
                                 "regions": len(set(h.region_of.values()))}
    _store_manifest(out_dir, manifest)
    _store_timing(out_dir, "seg", time.perf_counter() - t0)
    return session


def stage_mrf(out_dir, config):
    out_dir = Path(out_dir)
    _require(out_dir, "mrf", "hierarchy.seg.json")
    t0 = time.perf_counter()
    session = _load_session(out_dir, "hierarchy.seg.json")
    stats = mrf_seg.compute_stats(session.mesh, session.hierarchy)
    h, trace = mrf_seg.optimize(session.hierarchy, stats, config.mrf_params())
    session.hierarchy = h
    save_annotations(h, out_dir / "hierarchy.mrf.json")
    regions = sorted(set(h.region_of.values()))
    pal = _region_palette(max(regions) + 1 if regions else 1)
    ply_io.write_ply(
        out_dir / "mrf.ply", session.mesh.vertices, session.mesh.faces,
        colors=pal[h.region_of_vertices()],
    )
    manifest = _load_manifest(out_dir)
    manifest["stages"]["mrf"] = {
        "supervertices": h.n_supervertices,
        "regions": len(regions),
        "energy_trace": [round(e, 9) for e in trace],
    }
    _store_manifest(out_dir, manifest)
    _store_timing(out_dir, "mrf", time.perf_counter() - t0)
    return session


def _best_hierarchy_file(out_dir):
    for name in ("hierarchy.mrf.json", "hierarchy.seg.json", "hierarchy.ingest.json"):
        if (Path(out_dir) / name).exists():
            return name
    raise PrerequisiteError("no hierarchy artifact found; run ingest first")


def stage_search(out_dir, config, template_regions, use_alignment_filter=True):
    out_dir = Path(out_dir)
    t0 = time.perf_counter()
    session = _load_session(out_dir, _best_hierarchy_file(out_dir))
    params = config.search_params()
    candidates, index = shape_search.search_scene(
        session, template_regions, params,
        use_alignment_filter=use_alignment_filter,
    )
    doc = {
        "template": sorted(int(r) for r in template_regions),
        "candidates": [
            {
                "regions": [int(r) for r in c.regions],
                "C": round(float(c.match.cost), 9),
                "E": round(float(c.match.align_error), 9),
                "T": [round(float(x), 9) for x in c.match.transform.ravel()],
            }
            for c in candidates
        ],
    }
    _write_json(out_dir / "candidates.json", doc)
    manifest = _load_manifest(out_dir)
    manifest["stages"]["search"] = {"candidates": len(candidates)}
    _store_manifest(out_dir, manifest)
    _store_timing(out_dir, "search", time.perf_counter() - t0)
    return candidates


def _frame_from_manifest(out_dir, frames_manifest, frame_id):
    from .scene_model import load_frames_manifest

    if frames_manifest is None:
        raise PrerequisiteError("a frames manifest is required for 2D stages")
    frames = load_frames_manifest(frames_manifest)
    for fr in frames:
        if fr.id == frame_id:
            return fr
    raise ValidationError(f"frame {frame_id} not found in manifest")


def stage_project(out_dir, config, frames_manifest, frame_id, align=False):
    from PIL import Image

    out_dir = Path(out_dir)
    t0 = time.perf_counter()
    session = _load_session(out_dir, _best_hierarchy_file(out_dir))
    frame = _frame_from_manifest(out_dir, frames_manifest, frame_id)
    mask_dir = out_dir / "masks"
    mask_dir.mkdir(exist_ok=True)
    edge_map = proj2d.detect_edges(frame.image, frame.id) if align else None
    contours = {}
    regions = sorted(set(session.hierarchy.region_of.values()))
    rendered = 0
    for region in regions:
        rm = proj2d.project_region(session, region, frame)
        if rm.empty:
            continue
        rendered += 1
        img = Image.fromarray((rm.mask * 255).astype(np.uint8))
        img.save(mask_dir / f"frame{frame_id}_region{region}.png")
        entry = {"pre": [[int(x), int(y)] for x, y in rm.contour]}
        if align and len(rm.contour) >= 3:
            result = proj2d.align_contour(
                rm.contour, edge_map, config.kappa1, config.kappa2, config.knn,
                config.delta2d_frac * max(frame.height, frame.width),
            )
            entry["post"] = [[float(x), float(y)] for x, y in result.mapped]
            aligned_mask = proj2d.mask_from_contour(result.mapped, edge_map.shape)
            Image.fromarray((aligned_mask * 255).astype(np.uint8)).save(
                mask_dir / f"frame{frame_id}_region{region}_aligned.png"
            )
        contours[str(region)] = entry
    _write_json(out_dir / f"contours_frame{frame_id}.json", contours)
    manifest = _load_manifest(out_dir)
    stage = "align2d" if align else "project"
    manifest["stages"][stage] = {"frame": frame_id, "regions_rendered": rendered}
    _store_manifest(out_dir, manifest)
    _store_timing(out_dir, stage, time.perf_counter() - t0)
    return contours


def stage_eval(pred_path, gt_path, out_path=None):
    with open(pred_path) as fh:
        pred = SegmentationHierarchy.from_json_dict(json.load(fh))
    with open(gt_path) as fh:
        gt = SegmentationHierarchy.from_json_dict(json.load(fh))
    score = eval_metrics.oce(pred.region_of_vertices(), gt.region_of_vertices())
    doc = {
        "oce": round(float(score), 9),
        "pred_regions": len(set(pred.region_of.values())),
        "gt_regions": len(set(gt.region_of.values())),
    }
    if out_path:
        _write_json(out_path, doc)
    return doc


def stage_fixture(kind, seed, out_dir, **kwargs):
    from PIL import Image

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = synth_fixtures.FixtureSpec(kind=kind, seed=seed, **kwargs)
    fx = synth_fixtures.generate(spec)
    written = []
    if fx.mesh is not None:
        ply_io.write_ply(
            out_dir / "scene.ply", fx.mesh.vertices, fx.mesh.faces,
            colors=fx.mesh.colors,
        )
        written.append("scene.ply")
        gt = {
            "kind": kind,
            "seed": seed,
            "vertex_regions": [int(r) for r in fx.gt_vertex_regions],
        }
        if fx.objects:
            gt["objects"] = [
                {
                    "regions": [int(r) for r in o.regions],
                    "vertices": [int(v) for v in o.vertices],
                    "translation": [float(t) for t in o.translation],
                    "dropped": bool(o.dropped),
                }
                for o in fx.objects
            ]
            gt["template_regions"] = [int(r) for r in fx.template_regions]
        if fx.hierarchy is not None:
            save_annotations(fx.hierarchy, out_dir / "hierarchy.gt.json")
            written.append("hierarchy.gt.json")
        _write_json(out_dir / "ground_truth.json", gt)
        written.append("ground_truth.json")
    if fx.image is not None:
        Image.fromarray((fx.image * 255).astype(np.uint8)).save(out_dir / "image.png")
        Image.fromarray((fx.gt_mask * 255).astype(np.uint8)).save(
            out_dir / "gt_mask.png"
        )
        _write_json(out_dir / "contours.json", {
            "contour": [[int(x), int(y)] for x, y in fx.contour],
            "shifted": [[int(x), int(y)] for x, y in fx.shifted_contour],
        })
        written += ["image.png", "gt_mask.png", "contours.json"]
    return written


def run_pipeline(scene_path, config, stages, out_dir, frames_manifest=None,
                 template_regions=None, frame_id=0):
    """Run the requested stages in order against one artifacts directory."""
    order = [s for s in STAGES if s in stages]
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise ValidationError(f"unknown stages: {sorted(unknown)}")
    for stage in order:
        if stage == "ingest":
            stage_ingest(scene_path, out_dir, config, frames_manifest)
        elif stage == "seg":
            stage_seg(out_dir, config)
        elif stage == "mrf":
            stage_mrf(out_dir, config)
        elif stage == "search":
            if not template_regions:
                raise ValidationError("search stage needs template regions")
            stage_search(out_dir, config, template_regions)
        elif stage == "project":
            stage_project(out_dir, config, frames_manifest, frame_id, align=False)
        elif stage == "align2d":
            stage_project(out_dir, config, frames_manifest, frame_id, align=True)
    return Path(out_dir)
