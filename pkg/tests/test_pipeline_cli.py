import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from scenecarve import pipeline, ply_io, synth_fixtures
from scenecarve.cli import main
from scenecarve.errors import PrerequisiteError, ValidationError
from scenecarve.pipeline import PipelineConfig


@pytest.fixture
def two_plane_scene(tmp_path):
    spec = synth_fixtures.FixtureSpec(kind="two_plane_crease", grid_n=12,
                                      grid_m=12, jitter_sigma=0.001, seed=0)
    fx = synth_fixtures.generate(spec)
    scene = tmp_path / "scene.ply"
    ply_io.write_ply(scene, fx.mesh.vertices, fx.mesh.faces,
                     colors=fx.mesh.colors)
    return scene


def small_config():
    return PipelineConfig(seg_threshold=15.0, seg_min_size=5)


class TestPipelineStages:
    def test_two_plane_manifest_counts(self, two_plane_scene, tmp_path):
        out = tmp_path / "artifacts"
        cfg = small_config()
        pipeline.run_pipeline(two_plane_scene, cfg, ["ingest", "seg", "mrf"], out)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["stages"]["seg"]["supervertices"] == 2
        assert manifest["stages"]["mrf"]["regions"] == 2
        trace = manifest["stages"]["mrf"]["energy_trace"]
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))

    def test_missing_prerequisite(self, tmp_path):
        out = tmp_path / "artifacts"
        out.mkdir()
        with pytest.raises(PrerequisiteError):
            pipeline.stage_mrf(out, small_config())

    def test_rerun_is_byte_stable(self, two_plane_scene, tmp_path):
        cfg = small_config()
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            pipeline.run_pipeline(two_plane_scene, cfg, ["ingest", "seg", "mrf"],
                                  out)
            outs.append(out)
        for rel in ("manifest.json", "hierarchy.ingest.json",
                    "hierarchy.seg.json", "hierarchy.mrf.json", "mesh.ply",
                    "seg.ply", "mrf.ply"):
            assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes(), rel

    def test_unknown_stage_rejected(self, two_plane_scene, tmp_path):
        with pytest.raises(ValidationError):
            pipeline.run_pipeline(two_plane_scene, small_config(),
                                  ["ingest", "warp"], tmp_path / "x")

    def test_search_stage_writes_candidates(self, tmp_path):
        spec = synth_fixtures.FixtureSpec(kind="duplicated_room", seed=0,
                                          n_copies=2, n_clutter=1)
        fx = synth_fixtures.generate(spec)
        scene = tmp_path / "room.ply"
        ply_io.write_ply(scene, fx.mesh.vertices, fx.mesh.faces,
                         colors=fx.mesh.colors)
        out = tmp_path / "art"
        cfg = PipelineConfig(samples=2500)
        pipeline.stage_ingest(scene, out, cfg)
        # install the ground-truth hierarchy as the working one
        from scenecarve.scene_model import save_annotations
        save_annotations(fx.hierarchy, out / "hierarchy.seg.json")
        pipeline.stage_search(out, cfg, list(fx.template_regions))
        doc = json.loads((out / "candidates.json").read_text())
        assert doc["template"] == sorted(fx.template_regions)
        assert len(doc["candidates"]) >= 2
        for cand in doc["candidates"]:
            assert set(cand) == {"C", "E", "T", "regions"}
            assert len(cand["T"]) == 16

    def test_eval_stage(self, tmp_path):
        from scenecarve.scene_model import SegmentationHierarchy, save_annotations
        h1 = SegmentationHierarchy(np.array([0, 0, 1, 1], dtype=np.int32),
                                   {0: 0, 1: 1})
        h2 = SegmentationHierarchy(np.array([0, 0, 1, 1], dtype=np.int32),
                                   {0: 0, 1: 0})
        p1 = tmp_path / "pred.json"
        p2 = tmp_path / "gt.json"
        save_annotations(h1, p1)
        save_annotations(h2, p2)
        doc = pipeline.stage_eval(p1, p2, tmp_path / "m.json")
        assert doc["oce"] > 0
        same = pipeline.stage_eval(p1, p1)
        assert same["oce"] == 0


class TestProjectStages:
    def make_scene_with_frame(self, tmp_path):
        # a wall in front of an identity camera
        verts = np.array([
            (-2.0, -2.0, 3.0), (2.0, -2.0, 3.0), (2.0, 2.0, 3.0), (-2.0, 2.0, 3.0),
        ])
        faces = np.array([(0, 1, 2), (0, 2, 3)])
        scene = tmp_path / "wall.ply"
        ply_io.write_ply(scene, verts, faces)
        from PIL import Image
        img = np.zeros((120, 160, 3), dtype=np.uint8)
        img[:, 80:] = 255
        img_path = tmp_path / "frame0.png"
        Image.fromarray(img).save(img_path)
        manifest = tmp_path / "frames.json"
        manifest.write_text(json.dumps([{
            "image_path": "frame0.png",
            "intrinsics": {"fx": 100.0, "fy": 100.0, "cx": 80.0, "cy": 60.0},
            "pose": list(np.eye(4).ravel()),
            "id": 0,
        }]))
        return scene, manifest

    def test_project_emits_masks_and_contours(self, tmp_path):
        scene, frames = self.make_scene_with_frame(tmp_path)
        out = tmp_path / "art"
        cfg = small_config()
        pipeline.stage_ingest(scene, out, cfg, frames_manifest=frames)
        pipeline.stage_project(out, cfg, frames, 0, align=False)
        contours = json.loads((out / "contours_frame0.json").read_text())
        assert contours
        masks = list((out / "masks").glob("frame0_region*.png"))
        assert masks

    def test_align2d_adds_post_contours(self, tmp_path):
        scene, frames = self.make_scene_with_frame(tmp_path)
        out = tmp_path / "art"
        cfg = small_config()
        pipeline.stage_ingest(scene, out, cfg, frames_manifest=frames)
        pipeline.stage_project(out, cfg, frames, 0, align=True)
        contours = json.loads((out / "contours_frame0.json").read_text())
        entry = next(iter(contours.values()))
        assert "pre" in entry and "post" in entry


class TestCli:
    def test_full_flow_exit_codes(self, two_plane_scene, tmp_path):
        runner = CliRunner()
        out = str(tmp_path / "art")
        r = runner.invoke(main, ["ingest", str(two_plane_scene), "--out", out])
        assert r.exit_code == 0, r.output
        r = runner.invoke(main, ["seg", "--out", out, "--seg-threshold", "15",
                                 "--seg-min-size", "5"])
        assert r.exit_code == 0, r.output
        r = runner.invoke(main, ["mrf", "--out", out])
        assert r.exit_code == 0, r.output
        manifest = json.loads((Path(out) / "manifest.json").read_text())
        assert manifest["stages"]["seg"]["supervertices"] == 2

    def test_prerequisite_exit_code_3(self, tmp_path):
        runner = CliRunner()
        out = tmp_path / "empty"
        out.mkdir()
        r = runner.invoke(main, ["mrf", "--out", str(out)])
        assert r.exit_code == 3

    def test_validation_exit_code_2(self, two_plane_scene, tmp_path):
        runner = CliRunner()
        out = str(tmp_path / "art")
        runner.invoke(main, ["ingest", str(two_plane_scene), "--out", out])
        r = runner.invoke(main, ["search", "--out", out, "--template", "99999"])
        assert r.exit_code == 2

    def test_fixture_subcommand(self, tmp_path):
        runner = CliRunner()
        out = tmp_path / "fx"
        r = runner.invoke(main, ["fixture", "--kind", "shifted_square",
                                 "--out", str(out)])
        assert r.exit_code == 0, r.output
        assert (out / "image.png").exists()
        assert (out / "gt_mask.png").exists()

    def test_eval_subcommand(self, tmp_path):
        from scenecarve.scene_model import SegmentationHierarchy, save_annotations
        h = SegmentationHierarchy(np.array([0, 0, 1], dtype=np.int32),
                                  {0: 0, 1: 1})
        p = tmp_path / "h.json"
        save_annotations(h, p)
        runner = CliRunner()
        r = runner.invoke(main, ["eval", "--pred", str(p), "--gt", str(p)])
        assert r.exit_code == 0
        assert "oce 0" in r.output

    def test_config_toml_overrides(self, two_plane_scene, tmp_path):
        cfg_file = tmp_path / "cfg.toml"
        cfg_file.write_text("seg_threshold = 15.0\nseg_min_size = 5\n")
        runner = CliRunner()
        out = str(tmp_path / "art")
        runner.invoke(main, ["--config", str(cfg_file), "ingest",
                             str(two_plane_scene), "--out", out])
        r = runner.invoke(main, ["--config", str(cfg_file), "seg", "--out", out])
        assert r.exit_code == 0, r.output
        manifest = json.loads((Path(out) / "manifest.json").read_text())
        assert manifest["stages"]["seg"]["supervertices"] == 2

    def test_bad_config_key_rejected(self, tmp_path):
        cfg_file = tmp_path / "cfg.toml"
        cfg_file.write_text("bogus_knob = 1\n")
        runner = CliRunner()
        r = runner.invoke(main, ["--config", str(cfg_file), "mrf", "--out", "x"])
        assert r.exit_code == 2


class TestConfigDefaults:
    def test_paper_values(self):
        cfg = PipelineConfig()
        assert (cfg.seg_smoothing, cfg.seg_threshold, cfg.seg_min_size) == \
            (0.5, 500.0, 20)
        assert cfg.mrf_gamma == 0.5
        assert cfg.split_gamma == 0.05
        assert cfg.tau_s == 0.7
        assert cfg.tau_a == 0.4
        assert cfg.delta == 2.0
        assert cfg.search_iterations == 10
        assert cfg.kappa1 == 0.1
        assert cfg.kappa2 == 3.0
        assert cfg.knn == 30
        assert cfg.delta2d_frac == 0.1
        assert cfg.samples == 20000
