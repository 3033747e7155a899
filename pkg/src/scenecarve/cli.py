"""Command-line entry points.

Exit codes: 0 success, 2 validation error, 3 missing prerequisite stage.
"""

from __future__ import annotations

import sys

import click

from .errors import PrerequisiteError, SceneCarveError
from . import pipeline
from .pipeline import PipelineConfig
from .synth_fixtures import FIXTURE_KINDS


def _config_from(ctx):
    cfg = ctx.obj.get("config") or PipelineConfig()
    return cfg


def _run(fn):
    try:
        fn()
    except PrerequisiteError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    except SceneCarveError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="TOML file overriding pipeline defaults.")
@click.pass_context
def main(ctx, config_path):
    """3D-2D interactive scene segmentation and annotation toolkit."""
    ctx.ensure_object(dict)
    if config_path:
        try:
            ctx.obj["config"] = PipelineConfig.from_toml(config_path)
        except SceneCarveError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
    else:
        ctx.obj["config"] = PipelineConfig()


@main.command()
@click.argument("scene", type=click.Path(exists=True))
@click.option("--frames", type=click.Path(exists=True), default=None,
              help="Frames manifest JSON.")
@click.option("--out", required=True, type=click.Path())
@click.pass_context
def ingest(ctx, scene, frames, out):
    """Load a PLY scene (plus optional frames) into an artifacts directory."""
    cfg = _config_from(ctx)
    _run(lambda: pipeline.stage_ingest(scene, out, cfg, frames))


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--seg-smoothing", type=float, default=None)
@click.option("--seg-threshold", type=float, default=None)
@click.option("--seg-min-size", type=int, default=None)
@click.pass_context
def seg(ctx, out, seg_smoothing, seg_threshold, seg_min_size):
    """Graph-based over-segmentation into supervertices."""
    cfg = _config_from(ctx)
    if seg_smoothing is not None:
        cfg.seg_smoothing = seg_smoothing
    if seg_threshold is not None:
        cfg.seg_threshold = seg_threshold
    if seg_min_size is not None:
        cfg.seg_min_size = seg_min_size
    _run(lambda: pipeline.stage_seg(out, cfg))


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--mrf-gamma", type=float, default=None)
@click.option("--mrf-max-sweeps", type=int, default=None)
@click.option("--split-gamma", type=float, default=None)
@click.pass_context
def mrf(ctx, out, mrf_gamma, mrf_max_sweeps, split_gamma):
    """Cluster supervertices into regions by MRF energy minimization."""
    cfg = _config_from(ctx)
    if mrf_gamma is not None:
        cfg.mrf_gamma = mrf_gamma
    if mrf_max_sweeps is not None:
        cfg.mrf_max_sweeps = mrf_max_sweeps
    if split_gamma is not None:
        cfg.split_gamma = split_gamma
    _run(lambda: pipeline.stage_mrf(out, cfg))


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--template", required=True,
              help="Comma-separated region ids defining the template.")
@click.option("--no-alignment-filter", is_flag=True, default=False,
              help="Accept candidates on deformation cost alone.")
@click.pass_context
def search(ctx, out, template, no_alignment_filter):
    """Search the scene for repetitive objects matching a template."""
    cfg = _config_from(ctx)
    regions = [int(r) for r in template.split(",") if r.strip()]
    _run(lambda: pipeline.stage_search(
        out, cfg, regions, use_alignment_filter=not no_alignment_filter
    ))


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--frames", required=True, type=click.Path(exists=True))
@click.option("--frame", "frame_id", type=int, default=0)
@click.pass_context
def project(ctx, out, frames, frame_id):
    """Project regions into a frame: per-region PNG masks + contours."""
    cfg = _config_from(ctx)
    _run(lambda: pipeline.stage_project(out, cfg, frames, frame_id, align=False))


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--frames", required=True, type=click.Path(exists=True))
@click.option("--frame", "frame_id", type=int, default=0)
@click.pass_context
def align2d(ctx, out, frames, frame_id):
    """Project regions and snap their contours to image edges."""
    cfg = _config_from(ctx)
    _run(lambda: pipeline.stage_project(out, cfg, frames, frame_id, align=True))


@main.command("eval")
@click.option("--pred", required=True, type=click.Path(exists=True))
@click.option("--gt", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None)
def eval_cmd(pred, gt, out_path):
    """Compare two annotation files (OCE on the region level)."""
    def go():
        doc = pipeline.stage_eval(pred, gt, out_path)
        click.echo(f"oce {doc['oce']}")
    _run(go)


@main.command()
@click.option("--kind", required=True, type=click.Choice(list(FIXTURE_KINDS)))
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, type=click.Path())
@click.option("--jitter", type=float, default=0.0)
@click.option("--copies", type=int, default=4)
@click.option("--clutter", type=int, default=4)
def fixture(kind, seed, out, jitter, copies, clutter):
    """Generate a synthetic scene with exact ground truth."""
    def go():
        kwargs = {"jitter_sigma": jitter}
        if kind == "duplicated_room":
            kwargs.update(n_copies=copies, n_clutter=clutter)
        written = pipeline.stage_fixture(kind, seed, out, **kwargs)
        for name in written:
            click.echo(name)
    _run(go)


@main.command()
@click.argument("scene", type=click.Path(exists=True))
@click.option("--frames", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8008)
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="Static directory with the browser client.")
@click.pass_context
def serve(ctx, scene, frames, host, port, ui_dir):
    """Run the annotation session service for the browser UI."""
    import uvicorn
    from .annot_service import create_app
    from .scene_model import load_scene

    cfg = _config_from(ctx)

    def go():
        session = load_scene(scene, frames)
        app = create_app(session, cfg, ui_dir=ui_dir)
        uvicorn.run(app, host=host, port=port, log_level="info")
    _run(go)


if __name__ == "__main__":
    main()
