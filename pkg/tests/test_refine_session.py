import numpy as np
import pytest

from scenecarve import geom_seg, refine_session, synth_fixtures
from scenecarve.errors import EmptyStrokeError, PreconditionError, ValidationError
from scenecarve.refine_session import (
    Stroke, annotate, extract, merge, resolve_stroke, split, undo,
    accept_object,
)
from scenecarve.scene_model import AnnotationSession, canonical_json_bytes
from conftest import grid_mesh, make_frame


def hierarchy_bytes(session):
    return canonical_json_bytes(session.hierarchy.to_json_dict())


def wall_session():
    """A flat wall facing an identity camera looking down +z."""
    mesh = grid_mesh(10, 10, spacing=0.05)
    # move the wall in front of the camera: x,z plane -> x,y plane at z=2
    verts = mesh.vertices.copy()
    verts = np.stack([verts[:, 0] - 0.2, verts[:, 2] - 0.2,
                      np.full(len(verts), 2.0)], axis=1)
    from scenecarve.scene_model import SceneMesh, compute_normals
    mesh = compute_normals(SceneMesh(verts, mesh.faces,
                                     colors=mesh.colors))
    return AnnotationSession(mesh=mesh)


def segmented_session(n_regions=4):
    session = AnnotationSession(mesh=grid_mesh(8, 8))
    h = session.hierarchy
    for sv in h.region_of:
        h.region_of[sv] = sv % n_regions
    h.validate(session.mesh.n_vertices)
    return session


class TestResolveStroke:
    def test_single_click_hits_nearest_vertex(self):
        session = wall_session()
        frame = make_frame(640, 480, fx=500, fy=500)
        path = resolve_stroke(np.array([[320.0, 240.0]]), frame, session.mesh)
        assert len(path) == 1
        hit = session.mesh.vertices[path[0]]
        # the ray through the center hits near world (0, 0, 2)
        assert np.linalg.norm(hit - (0, 0, 2.0)) < 0.06

    def test_off_mesh_stroke_raises(self):
        session = wall_session()
        frame = make_frame(640, 480, fx=500, fy=500)
        with pytest.raises(EmptyStrokeError):
            resolve_stroke(np.array([[5.0, 5.0], [10.0, 10.0]]), frame,
                           session.mesh)

    def test_stroke_across_two_regions(self):
        from scenecarve.scene_model import project_vertex
        from conftest import look_at

        spec = synth_fixtures.FixtureSpec(kind="two_plane_crease", grid_n=10,
                                          grid_m=10, spacing=0.05)
        fx = synth_fixtures.generate(spec)
        session = AnnotationSession(mesh=fx.mesh)
        h = geom_seg.segment_graph(fx.mesh, geom_seg.SegParams(0.5, 15.0, 5))
        session.set_supervertices(h)
        # camera looking down at the crease corner so both planes are visible
        pose = look_at(eye=(1.2, 2.5, 0.225), target=(0.3, 0.1, 0.225))
        frame = make_frame(640, 480, fx=500, fy=500, pose=pose)
        p_on_plane1 = (0.2, 0.0, 0.2)
        p_on_plane2 = (0.45, 0.25, 0.2)
        u1, v1, _ = project_vertex(p_on_plane1, frame)
        u2, v2, _ = project_vertex(p_on_plane2, frame)
        stroke = np.array([[u1, v1], [u2, v2]])
        path = resolve_stroke(stroke, frame, session.mesh)
        regions = [session.hierarchy.region_of[int(session.hierarchy.supervertex_of[v])]
                   for v in path]
        assert regions[0] != regions[-1]


class TestMerge:
    def test_merge_remaps_to_survivor(self):
        session = segmented_session()
        merge(session, {3, 1})
        values = set(session.hierarchy.region_of.values())
        assert 3 not in values
        assert 1 in values

    def test_merge_needs_two_regions(self):
        session = segmented_session()
        with pytest.raises(PreconditionError):
            merge(session, {2})

    def test_merge_unknown_region(self):
        session = segmented_session()
        with pytest.raises(ValidationError, match="99"):
            merge(session, {1, 99})

    def test_totality_preserved(self):
        session = segmented_session()
        merge(session, {0, 2})
        session.hierarchy.validate(session.mesh.n_vertices)

    def test_label_of_largest_member_survives(self):
        session = segmented_session(3)
        h = session.hierarchy
        annotate(session, 1, "small")
        annotate(session, 2, "large")
        # enlarge region 2 by moving most supervertices into it
        for sv in list(h.region_of)[:40]:
            h.region_of[sv] = 2
        survivor = merge(session, {1, 2})
        assert h.label_of[survivor] == "large"


class TestExtract:
    def test_extract_dissolves_into_singletons(self):
        session = segmented_session()
        members = extract(session, 2)
        h = session.hierarchy
        new_regions = {h.region_of[sv] for sv in members}
        assert len(new_regions) == len(members)
        assert 2 not in set(h.region_of.values())

    def test_extract_then_merge_restores(self):
        session = segmented_session()
        before = {sv for sv, r in session.hierarchy.region_of.items() if r == 2}
        members = extract(session, 2)
        new_ids = {session.hierarchy.region_of[sv] for sv in members}
        survivor = merge(session, new_ids)
        after = {sv for sv, r in session.hierarchy.region_of.items()
                 if r == survivor}
        assert after == before

    def test_extract_never_recomputes_segmentation(self, monkeypatch):
        calls = {"n": 0}
        original = geom_seg.segment_graph

        def counting(*args, **kwargs):
            calls["n"] += 1
            return original(*args, **kwargs)

        monkeypatch.setattr(geom_seg, "segment_graph", counting)
        session = segmented_session()
        extract(session, 1)
        merge(session, set(session.hierarchy.region_of.values()))
        undo(session)
        assert calls["n"] == 0

    def test_cache_immutable(self):
        session = segmented_session()
        cached_before = session.cached_supervertices.copy()
        extract(session, 0)
        merge(session, set(session.hierarchy.region_of.values()))
        assert np.array_equal(session.cached_supervertices, cached_before)
        with pytest.raises(ValueError):
            session.cached_supervertices[0] = 99


class TestAnnotate:
    def test_label_persists_through_save_load(self, tmp_path):
        from scenecarve.scene_model import load_annotations, save_annotations
        session = segmented_session()
        annotate(session, 2, "chair")
        p = tmp_path / "a.json"
        save_annotations(session, p)
        restored = load_annotations(p)
        assert restored.label_of[2] == "chair"

    def test_reannotation_overwrites_and_undo_restores(self):
        session = segmented_session()
        annotate(session, 2, "chair")
        annotate(session, 2, "sofa")
        assert session.hierarchy.label_of[2] == "sofa"
        undo(session)
        assert session.hierarchy.label_of[2] == "chair"

    def test_empty_label_rejected(self):
        session = segmented_session()
        with pytest.raises(ValidationError):
            annotate(session, 2, "   ")

    def test_unknown_region(self):
        session = segmented_session()
        with pytest.raises(ValidationError):
            annotate(session, 42, "x")


class TestUndo:
    def test_merge_undo_identity(self):
        session = segmented_session()
        before = hierarchy_bytes(session)
        merge(session, {0, 1})
        undo(session)
        assert hierarchy_bytes(session) == before

    def test_extract_undo_identity(self):
        session = segmented_session()
        annotate(session, 1, "table")
        before = hierarchy_bytes(session)
        extract(session, 1)
        undo(session)
        assert hierarchy_bytes(session) == before

    def test_undo_empty_log_is_noop(self):
        session = segmented_session()
        before = hierarchy_bytes(session)
        assert undo(session) is False
        assert hierarchy_bytes(session) == before

    def test_accept_object_single_undo(self):
        session = segmented_session()
        before = hierarchy_bytes(session)
        survivor = accept_object(session, [0, 1, 2], label="chair")
        assert session.hierarchy.label_of[survivor] == "chair"
        undo(session)
        assert hierarchy_bytes(session) == before

    def test_random_edit_sequences_fully_reversible(self):
        rng = np.random.default_rng(42)
        for trial in range(20):
            session = segmented_session(5)
            baseline = hierarchy_bytes(session)
            n_edits = 0
            for _ in range(rng.integers(1, 12)):
                h = session.hierarchy
                regions = sorted(set(h.region_of.values()))
                op = rng.choice(["merge", "extract", "annotate"])
                try:
                    if op == "merge" and len(regions) >= 2:
                        k = min(len(regions), int(rng.integers(2, 4)))
                        chosen = rng.choice(regions, size=k, replace=False)
                        merge(session, set(int(r) for r in chosen))
                        n_edits += 1
                    elif op == "extract":
                        extract(session, int(rng.choice(regions)))
                        n_edits += 1
                    elif op == "annotate":
                        annotate(session, int(rng.choice(regions)),
                                 str(rng.integers(0, 100)))
                        n_edits += 1
                except PreconditionError:
                    pass
                session.hierarchy.validate(session.mesh.n_vertices)
            for _ in range(n_edits):
                undo(session)
            assert hierarchy_bytes(session) == baseline, trial


class TestSplitViaStroke:
    def make_split_scene(self):
        spec = synth_fixtures.FixtureSpec(kind="two_plane_crease", grid_n=8,
                                          grid_m=8, spacing=0.05)
        fx = synth_fixtures.generate(spec)
        session = AnnotationSession(mesh=fx.mesh)
        h = geom_seg.segment_graph(fx.mesh, geom_seg.SegParams(0.5, 15.0, 5))
        # merge everything into one region so the split has work to do
        for sv in h.region_of:
            h.region_of[sv] = 0
        session.set_supervertices(h)
        return fx, session

    def test_split_separates_endpoint_supervertices(self):
        fx, session = self.make_split_scene()
        h = session.hierarchy
        svs = sorted(set(h.supervertex_of.tolist()))
        assert len(svs) == 2
        stroke = Stroke(polyline=np.zeros((2, 2)))
        stroke.resolved_vertices = [
            int(np.nonzero(h.supervertex_of == svs[0])[0][0]),
            int(np.nonzero(h.supervertex_of == svs[1])[0][0]),
        ]
        before = hierarchy_bytes(session)
        new_regions = split(session, 0, stroke)
        assert len(new_regions) >= 2
        a = h.supervertex_of[stroke.resolved_vertices[0]]
        b = h.supervertex_of[stroke.resolved_vertices[-1]]
        assert session.hierarchy.region_of[int(a)] != session.hierarchy.region_of[int(b)]
        undo(session)
        assert hierarchy_bytes(session) == before

    def test_split_leaves_other_regions_untouched(self):
        from scenecarve.scene_model import SegmentationHierarchy
        mesh = grid_mesh(8, 8)
        # one supervertex per grid column; region 5 holds the last column
        sv_of = (np.arange(64) // 8).astype(np.int32)
        region_of = {sv: (5 if sv == 7 else 0) for sv in range(8)}
        session = AnnotationSession(mesh=mesh)
        session.set_supervertices(SegmentationHierarchy(sv_of, region_of))
        h = session.hierarchy
        stroke = Stroke(polyline=np.zeros((2, 2)))
        stroke.resolved_vertices = [0, 6 * 8]     # columns 0 and 6
        split(session, 0, stroke)
        assert session.hierarchy.region_of[7] == 5
        a = session.hierarchy.region_of[0]
        b = session.hierarchy.region_of[6]
        assert a != b
