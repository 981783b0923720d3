"""Camera models, meshes, voxel grids, rasterization and depth warping."""

from .camera import (CameraView, in_image, load_cameras, look_at_camera,
                     project, save_cameras, unproject)
from .mesh import (TriangleMesh, load_obj, load_ply, loop_subdivide,
                   merge_meshes, sample_surface, save_obj, save_ply)
from .rasterize import DEPTH_SENTINEL, rasterize, render_color, render_depth
from .raycast import first_hit, segment_blocked
from .voxel import (OccupancyField, VoxelGrid, extract_surface,
                    points_inside_mesh, voxelize_mesh)
from .warp import DepthMap, depth_to_points, warp_depth

__all__ = [
    "CameraView", "DepthMap", "TriangleMesh", "VoxelGrid", "OccupancyField",
    "project", "unproject", "in_image", "look_at_camera",
    "save_cameras", "load_cameras",
    "render_depth", "render_color", "rasterize", "DEPTH_SENTINEL",
    "warp_depth", "depth_to_points",
    "voxelize_mesh", "points_inside_mesh", "extract_surface",
    "first_hit", "segment_blocked",
    "sample_surface", "merge_meshes", "loop_subdivide",
    "save_ply", "load_ply", "save_obj", "load_obj",
]
