#!/usr/bin/env python3
"""Start a scenecarve service on a fixture scene and run the live UI test.

Builds a two-plane crease scene (exactly two regions after segmentation),
computes a stroke whose endpoints land on either plane, launches uvicorn,
and invokes the vitest file that drives the client stack end to end.
"""

import json
import os
import socket
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import uvicorn
import threading

from scenecarve import geom_seg, ply_io, synth_fixtures
from scenecarve.annot_service import create_app
from scenecarve.pipeline import PipelineConfig
from scenecarve.scene_model import AnnotationSession, Frame, project_vertex


def look_at(eye, target):
    eye = np.asarray(eye, dtype=np.float64)
    z = np.asarray(target, dtype=np.float64) - eye
    z /= np.linalg.norm(z)
    x = np.cross(z, (0.0, 1.0, 0.0))
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    pose = np.eye(4)
    pose[:3, 0], pose[:3, 1], pose[:3, 2], pose[:3, 3] = x, y, z, eye
    return pose


def main():
    spec = synth_fixtures.FixtureSpec(kind="two_plane_crease", grid_n=10,
                                      grid_m=10, spacing=0.05)
    fx = synth_fixtures.generate(spec)
    session = AnnotationSession(mesh=fx.mesh)
    session.set_supervertices(
        geom_seg.segment_graph(fx.mesh, geom_seg.SegParams(0.5, 15.0, 5))
    )

    pose = look_at((1.2, 2.5, 0.225), (0.3, 0.1, 0.225))
    frame = Frame(image=np.zeros((480, 640, 3), dtype=np.float32),
                  fx=500.0, fy=500.0, cx=320.0, cy=240.0, pose=pose)
    u1, v1, _ = project_vertex((0.2, 0.0, 0.2), frame)
    u2, v2, _ = project_vertex((0.45, 0.25, 0.2), frame)
    stroke = {
        "polyline": [[u1, v1], [u2, v2]],
        "camera": {
            "fx": 500.0, "fy": 500.0, "cx": 320.0, "cy": 240.0,
            "pose": [float(v) for v in pose.ravel()],
            "width": 640, "height": 480,
        },
    }
    stroke_file = Path(tempfile.mkdtemp()) / "stroke.json"
    stroke_file.write_text(json.dumps(stroke))

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]

    app = create_app(session, PipelineConfig())
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            print("server failed to start", file=sys.stderr)
            return 1
        time.sleep(0.05)

    env = dict(os.environ)
    env["SCENECARVE_URL"] = f"http://127.0.0.1:{port}"
    env["SCENECARVE_STROKE"] = str(stroke_file)
    frontend = Path(__file__).resolve().parents[1]
    result = subprocess.run(
        ["npx", "vitest", "run", "test/live_roundtrip.test.ts"],
        cwd=frontend, env=env,
    )
    server.should_exit = True
    thread.join(timeout=10)
    return result.returncode


if __name__ == "__main__":
    sys.exit(main())
