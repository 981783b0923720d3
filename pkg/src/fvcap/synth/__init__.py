"""Synthetic scene generation, sampling, rendering and dataset I/O."""

from .bundle import FrameBundle, render_bundle
from .primitives import (PRIMITIVES, box_mesh, chair_mesh, cylinder_mesh,
                         icosphere, load_obj_library, primitive_library)
from .sampling import SampleBatch, sample_points, split_counts, tag_visibility
from .scene import (SceneConfig, SceneObject, SyntheticScene,
                    augment_occluders, camera_ring, generate_scene)

__all__ = [
    "FrameBundle", "render_bundle",
    "SampleBatch", "sample_points", "tag_visibility", "split_counts",
    "SceneConfig", "SceneObject", "SyntheticScene",
    "generate_scene", "augment_occluders", "camera_ring",
    "PRIMITIVES", "primitive_library", "load_obj_library",
    "box_mesh", "icosphere", "cylinder_mesh", "chair_mesh",
]
