"""scenecarve: interactive 3D scene segmentation and annotation toolkit."""

from .errors import (
    EmptyStrokeError,
    PlyParseError,
    PreconditionError,
    PrerequisiteError,
    SceneCarveError,
    UnsupportedVersionError,
    ValidationError,
)
from .scene_model import (
    AnnotationSession,
    Frame,
    SceneMesh,
    SegmentationHierarchy,
    compute_normals,
    load_annotations,
    load_scene,
    project_vertex,
    save_annotations,
)

__version__ = "0.1.0"
