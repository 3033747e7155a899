"""HTTP session service for the interactive annotation UI.

One writer task owns each session: every mutating request takes the
session lock, checks the client's revision against the current one
(optimistic concurrency, 409 on mismatch), applies the edit, and bumps
the revision. Reads serve the latest committed state without locking.
The mesh goes over the wire once as a compact little-endian binary
frame; afterwards clients refresh only the region assignment.
"""

from __future__ import annotations

import struct
import threading
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from pydantic import BaseModel

from .errors import SceneCarveError
from . import proj2d, refine_session, shape_search
from .pipeline import PipelineConfig
from .scene_model import Frame


@dataclass
class ManagedSession:
    session: object
    config: PipelineConfig
    revision: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)
    jobs: dict = field(default_factory=dict)


class CameraSpec(BaseModel):
    fx: float
    fy: float
    cx: float
    cy: float
    pose: list[float]
    width: int
    height: int


class StrokeBody(BaseModel):
    polyline: list[list[float]]
    camera: CameraSpec | None = None
    frame_id: int | None = None


class MergeBody(BaseModel):
    regions: list[int]
    revision: int


class ExtractBody(BaseModel):
    region: int
    revision: int


class SplitBody(BaseModel):
    region: int
    revision: int
    polyline: list[list[float]] | None = None
    camera: CameraSpec | None = None
    frame_id: int | None = None
    start_supervertex: int | None = None
    end_supervertex: int | None = None


class AnnotateBody(BaseModel):
    region: int
    label: str
    revision: int


class UndoBody(BaseModel):
    revision: int


class AcceptBody(BaseModel):
    regions: list[int]
    label: str | None = None
    revision: int


class TemplateBody(BaseModel):
    regions: list[int]


class SearchBody(BaseModel):
    template_id: int | None = None
    regions: list[int] | None = None
    sample_count: int | None = None
    use_alignment_filter: bool = True


def _camera_from_spec(spec):
    pose = np.array(spec.pose, dtype=np.float64).reshape(4, 4)
    image = np.zeros((spec.height, spec.width, 3), dtype=np.float32)
    return Frame(image=image, fx=spec.fx, fy=spec.fy, cx=spec.cx, cy=spec.cy,
                 pose=pose, id=-1)


def _resolve_camera(managed, body):
    if body.camera is not None:
        return _camera_from_spec(body.camera)
    if body.frame_id is not None:
        for fr in managed.session.frames:
            if fr.id == body.frame_id:
                return fr
        raise HTTPException(404, f"frame {body.frame_id} not found")
    raise HTTPException(422, "stroke needs either a camera or a frame_id")


def _hierarchy_doc(managed):
    h = managed.session.hierarchy
    return {
        "revision": managed.revision,
        "supervertex_region": {str(s): int(r) for s, r in h.region_of.items()},
        "region_labels": {str(r): l for r, l in h.label_of.items()},
    }


def create_app(session, config=None, ui_dir=None):
    config = config or PipelineConfig()
    app = FastAPI(title="scenecarve annotation service")
    sessions = {"main": ManagedSession(session=session, config=config)}

    def get_managed(name):
        managed = sessions.get(name)
        if managed is None:
            raise HTTPException(404, f"unknown session {name!r}")
        return managed

    def mutate(managed, revision, fn):
        with managed.lock:
            if revision != managed.revision:
                raise HTTPException(
                    409,
                    f"stale revision {revision}; current is {managed.revision}",
                )
            try:
                result = fn()
            except SceneCarveError as exc:
                raise HTTPException(422, str(exc))
            managed.revision += 1
            return result

    @app.get("/mesh")
    def get_mesh(session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)
        mesh = managed.session.mesh
        h = managed.session.hierarchy
        region_of_vertex = h.region_of_vertices().astype("<u4")
        colors = mesh.colors if mesh.colors is not None else np.full(
            (mesh.n_vertices, 3), 0.5
        )
        payload = b"".join([
            struct.pack("<I", mesh.n_vertices),
            mesh.vertices.astype("<f4").tobytes(),
            struct.pack("<I", mesh.n_faces),
            mesh.faces.astype("<u4").tobytes(),
            region_of_vertex.tobytes(),
            np.clip(colors * 255.0 + 0.5, 0, 255).astype("<u1").tobytes(),
        ])
        return Response(
            content=payload,
            media_type="application/octet-stream",
            headers={"X-Revision": str(managed.revision)},
        )

    @app.get("/hierarchy")
    def get_hierarchy(rev: int | None = None,
                      session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)
        if rev is not None and rev == managed.revision:
            return {"revision": managed.revision, "unchanged": True}
        return _hierarchy_doc(managed)

    @app.post("/stroke")
    def post_stroke(body: StrokeBody,
                    session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)
        camera = _resolve_camera(managed, body)
        try:
            path = refine_session.resolve_stroke(
                np.asarray(body.polyline, dtype=np.float64), camera,
                managed.session.mesh,
            )
        except SceneCarveError as exc:
            raise HTTPException(422, str(exc))
        h = managed.session.hierarchy
        svs = [int(h.supervertex_of[v]) for v in path]
        regions = sorted({int(h.region_of[s]) for s in svs})
        return {
            "revision": managed.revision,
            "vertices": path,
            "supervertices": svs,
            "regions": regions,
        }

    @app.post("/merge")
    def post_merge(body: MergeBody,
                   session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)
        survivor = mutate(
            managed, body.revision,
            lambda: refine_session.merge(managed.session, body.regions),
        )
        return {"revision": managed.revision, "region": survivor}

    @app.post("/extract")
    def post_extract(body: ExtractBody,
                     session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)
        members = mutate(
            managed, body.revision,
            lambda: refine_session.extract(managed.session, body.region),
        )
        return {"revision": managed.revision, "supervertices": members}

    @app.post("/split")
    def post_split(body: SplitBody,
                   session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)

        def do_split():
            if body.start_supervertex is not None and body.end_supervertex is not None:
                return refine_session.split_by_supervertices(
                    managed.session, body.region,
                    body.start_supervertex, body.end_supervertex,
                    managed.config.mrf_params(),
                )
            if not body.polyline:
                raise HTTPException(
                    422, "split needs a stroke polyline or endpoint supervertices"
                )
            camera = _resolve_camera(managed, body)
            stroke = refine_session.Stroke(
                polyline=np.asarray(body.polyline, dtype=np.float64),
                camera=camera,
            )
            return refine_session.split(
                managed.session, body.region, stroke,
                managed.config.mrf_params(),
            )

        new_regions = mutate(managed, body.revision, do_split)
        return {"revision": managed.revision, "regions": new_regions}

    @app.post("/annotate")
    def post_annotate(body: AnnotateBody,
                      session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)
        mutate(
            managed, body.revision,
            lambda: refine_session.annotate(managed.session, body.region, body.label),
        )
        return {"revision": managed.revision, "region": body.region,
                "label": body.label}

    @app.post("/undo")
    def post_undo(body: UndoBody,
                  session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)
        with managed.lock:
            if body.revision != managed.revision:
                raise HTTPException(
                    409,
                    f"stale revision {body.revision}; current is {managed.revision}",
                )
            undone = refine_session.undo(managed.session)
            if undone:
                managed.revision += 1
        return {"revision": managed.revision, "undone": undone}

    @app.post("/accept_object")
    def post_accept(body: AcceptBody,
                    session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)
        survivor = mutate(
            managed, body.revision,
            lambda: refine_session.accept_object(
                managed.session, body.regions, body.label
            ),
        )
        return {"revision": managed.revision, "region": survivor}

    @app.post("/template")
    def post_template(body: TemplateBody,
                      session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)
        live = set(managed.session.hierarchy.region_of.values())
        missing = [r for r in body.regions if r not in live]
        if missing:
            raise HTTPException(422, f"unknown regions {missing}")
        managed.session.templates.append(sorted(body.regions))
        return {
            "revision": managed.revision,
            "template_id": len(managed.session.templates) - 1,
        }

    @app.post("/search")
    def post_search(body: SearchBody,
                    session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)
        if body.regions:
            regions = body.regions
        elif body.template_id is not None:
            try:
                regions = managed.session.templates[body.template_id]
            except IndexError:
                raise HTTPException(404, f"unknown template {body.template_id}")
        else:
            raise HTTPException(422, "search needs template_id or regions")
        params = managed.config.search_params()
        if body.sample_count:
            params.sample_count = body.sample_count
        job_id = uuid.uuid4().hex[:12]
        job = {"status": "running", "candidates": None, "error": None}
        managed.jobs[job_id] = job

        def run():
            try:
                candidates, _ = shape_search.search_scene(
                    managed.session, regions, params,
                    use_alignment_filter=body.use_alignment_filter,
                )
                job["candidates"] = [
                    {
                        "regions": [int(r) for r in c.regions],
                        "C": round(float(c.match.cost), 9),
                        "E": round(float(c.match.align_error), 9),
                        "T": [round(float(x), 9) for x in c.match.transform.ravel()],
                    }
                    for c in candidates
                ]
                job["status"] = "done"
            except Exception as exc:   # job errors surface through polling
                job["error"] = str(exc)
                job["status"] = "error"

        threading.Thread(target=run, daemon=True).start()
        return {"revision": managed.revision, "job_id": job_id}

    @app.get("/search/{job_id}")
    def get_search(job_id: str,
                   session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)
        job = managed.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"unknown job {job_id}")
        return {
            "status": job["status"],
            "candidates": job["candidates"],
            "error": job["error"],
        }

    @app.get("/frames/{frame_id}/image")
    def get_frame_image(frame_id: int,
                        session_name: str = Query("main", alias="session")):
        from io import BytesIO
        from PIL import Image

        managed = get_managed(session_name)
        for fr in managed.session.frames:
            if fr.id == frame_id:
                buf = BytesIO()
                Image.fromarray(
                    (np.asarray(fr.image) * 255).astype(np.uint8)
                ).save(buf, format="PNG")
                return Response(buf.getvalue(), media_type="image/png")
        raise HTTPException(404, f"frame {frame_id} not found")

    @app.get("/frames/{frame_id}/masks")
    def get_frame_masks(frame_id: int, align: bool = False,
                        session_name: str = Query("main", alias="session")):
        managed = get_managed(session_name)
        frame = None
        for fr in managed.session.frames:
            if fr.id == frame_id:
                frame = fr
                break
        if frame is None:
            raise HTTPException(404, f"frame {frame_id} not found")
        sess = managed.session
        cfg = managed.config
        edge_map = proj2d.detect_edges(frame.image, frame.id) if align else None
        out = {}
        for region in sorted(set(sess.hierarchy.region_of.values())):
            rm = proj2d.project_region(sess, region, frame)
            if rm.empty:
                continue
            entry = {"contour": [[int(x), int(y)] for x, y in rm.contour]}
            if align and len(rm.contour) >= 3:
                result = proj2d.align_contour(
                    rm.contour, edge_map, cfg.kappa1, cfg.kappa2, cfg.knn,
                    cfg.delta2d_frac * max(frame.height, frame.width),
                )
                entry["aligned"] = [[float(x), float(y)] for x, y in result.mapped]
            out[str(region)] = entry
        return {"revision": managed.revision, "frame": frame_id, "masks": out}

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
