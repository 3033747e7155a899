import numpy as np
import pytest

from scenecarve.scene_model import AnnotationSession, Frame, SceneMesh, compute_normals


def make_frame(width=640, height=480, fx=500.0, fy=500.0, pose=None, frame_id=0,
               image=None):
    if pose is None:
        pose = np.eye(4)
    if image is None:
        image = np.zeros((height, width, 3), dtype=np.float32)
    return Frame(image=image, fx=fx, fy=fy, cx=width / 2.0, cy=height / 2.0,
                 pose=pose, id=frame_id)


def look_at(eye, target, up=(0.0, 1.0, 0.0)):
    """Camera-to-world pose with +z viewing from eye toward target."""
    eye = np.asarray(eye, dtype=np.float64)
    z = np.asarray(target, dtype=np.float64) - eye
    z = z / np.linalg.norm(z)
    up = np.asarray(up, dtype=np.float64)
    x = np.cross(z, up)
    if np.linalg.norm(x) < 1e-9:
        x = np.cross(z, (1.0, 0.0, 0.0))
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    pose = np.eye(4)
    pose[:3, 0] = x
    pose[:3, 1] = y
    pose[:3, 2] = z
    pose[:3, 3] = eye
    return pose


def grid_mesh(nx=10, nz=10, spacing=0.05, y=0.0, color=(0.5, 0.5, 0.5)):
    """Flat grid in the y = const plane."""
    xs, zs = np.meshgrid(np.arange(nx), np.arange(nz), indexing="ij")
    verts = np.stack(
        [xs.ravel() * spacing, np.full(nx * nz, y), zs.ravel() * spacing], axis=1
    )
    faces = []
    for i in range(nx - 1):
        for j in range(nz - 1):
            a = i * nz + j
            b = (i + 1) * nz + j
            faces.append((a, b, a + 1))
            faces.append((a + 1, b, b + 1))
    mesh = SceneMesh(verts, np.asarray(faces),
                     colors=np.tile(color, (nx * nz, 1)))
    return compute_normals(mesh)


def icosphere(subdivisions=2):
    """Unit icosphere; 2 subdivisions gives 162 vertices."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = np.asarray(verts[a]) + np.asarray(verts[b])
                m /= np.linalg.norm(m)
                verts.append(tuple(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    mesh = SceneMesh(np.asarray(verts), np.asarray(faces))
    return compute_normals(mesh)


@pytest.fixture
def flat_grid():
    return grid_mesh()


@pytest.fixture
def simple_session(flat_grid):
    return AnnotationSession(mesh=flat_grid)
