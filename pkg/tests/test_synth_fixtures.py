import numpy as np
import pytest

from scenecarve import synth_fixtures
from scenecarve.errors import ValidationError
from scenecarve.synth_fixtures import FixtureSpec, generate


class TestDeterminism:
    @pytest.mark.parametrize("kind,kwargs", [
        ("two_plane_crease", {"grid_n": 8, "grid_m": 8, "jitter_sigma": 0.002}),
        ("colored_boxes", {"jitter_sigma": 0.003, "n_boxes": 3}),
        ("duplicated_room", {"n_copies": 2, "n_clutter": 2}),
        ("shifted_square", {"image_shape": (60, 80), "square_size": 20}),
    ])
    def test_same_spec_same_bits(self, kind, kwargs):
        a = generate(FixtureSpec(kind=kind, seed=7, **kwargs))
        b = generate(FixtureSpec(kind=kind, seed=7, **kwargs))
        if a.mesh is not None:
            assert a.mesh.vertices.tobytes() == b.mesh.vertices.tobytes()
            assert a.mesh.faces.tobytes() == b.mesh.faces.tobytes()
            assert np.array_equal(a.gt_vertex_regions, b.gt_vertex_regions)
        if a.image is not None:
            assert a.image.tobytes() == b.image.tobytes()

    def test_different_seed_differs(self):
        a = generate(FixtureSpec(kind="colored_boxes", seed=1,
                                 jitter_sigma=0.003))
        b = generate(FixtureSpec(kind="colored_boxes", seed=2,
                                 jitter_sigma=0.003))
        assert a.mesh.vertices.tobytes() != b.mesh.vertices.tobytes()


class TestTwoPlane:
    def test_two_regions_with_right_angle(self):
        fx = generate(FixtureSpec(kind="two_plane_crease", grid_n=8, grid_m=8))
        assert set(fx.gt_vertex_regions.tolist()) == {0, 1}
        n1 = fx.mesh.normals[fx.gt_vertex_regions == 0].mean(axis=0)
        n2 = fx.mesh.normals[fx.gt_vertex_regions == 1].mean(axis=0)
        n1 /= np.linalg.norm(n1)
        n2 /= np.linalg.norm(n2)
        assert abs(n1 @ n2) < 0.05      # 90-degree crease

    def test_crease_vertices_listed(self):
        fx = generate(FixtureSpec(kind="two_plane_crease", grid_n=8, grid_m=8))
        assert len(fx.crease_vertices) == 2 * 8


class TestDuplicatedRoom:
    def test_ground_truth_lists_every_copy(self):
        fx = generate(FixtureSpec(kind="duplicated_room", seed=0, n_copies=5,
                                  n_clutter=3, n_drop_copies=2))
        assert len(fx.objects) == 5
        assert sum(o.dropped for o in fx.objects) == 2
        for obj in fx.objects:
            assert len(obj.regions) == 2
            assert len(obj.vertices) > 0

    def test_translations_reproduce_copies(self):
        fx = generate(FixtureSpec(kind="duplicated_room", seed=1, n_copies=3,
                                  n_clutter=0))
        template_verts = fx.mesh.vertices[
            np.isin(fx.gt_vertex_regions, fx.template_regions)
        ]
        for obj in fx.objects:
            copy_verts = fx.mesh.vertices[obj.vertices]
            moved = template_verts + obj.translation
            assert np.allclose(np.sort(moved, axis=0),
                               np.sort(copy_verts, axis=0), atol=1e-9)

    def test_hierarchy_valid(self):
        fx = generate(FixtureSpec(kind="duplicated_room", seed=2, n_copies=2,
                                  n_clutter=2))
        fx.hierarchy.validate(fx.mesh.n_vertices)


class TestShiftedSquare:
    def test_contour_and_mask_consistent(self):
        fx = generate(FixtureSpec(kind="shifted_square",
                                  image_shape=(120, 160), square_size=40,
                                  shift=(4, 3)))
        xs, ys = fx.contour[:, 0], fx.contour[:, 1]
        assert fx.gt_mask[ys, xs].all()
        assert np.array_equal(fx.shifted_contour, fx.contour + (4, 3))
        assert fx.image.shape == (120, 160)


class TestPointDrop:
    def test_drop_fraction_applied(self):
        from scenecarve import shape_search as ss
        fx = generate(FixtureSpec(kind="duplicated_room", seed=3, n_copies=2,
                                  n_clutter=0))
        samples = ss.sample_scene(fx.mesh, 2000, 0,
                                  fx.hierarchy.region_of_vertices())
        target = fx.objects[0].regions
        before = int(np.isin(samples.region_ids, target).sum())
        dropped = synth_fixtures.apply_point_drop(samples, target, 0.2, seed=5)
        after = int(np.isin(dropped.region_ids, target).sum())
        assert after == before - round(0.2 * before)
        untouched = int((~np.isin(samples.region_ids, target)).sum())
        assert int((~np.isin(dropped.region_ids, target)).sum()) == untouched


def test_unknown_kind_rejected():
    with pytest.raises(ValidationError):
        generate(FixtureSpec(kind="klein_bottle"))
