"""fvcap: layered human-object capture and free-viewpoint rendering.

Reconstructs a human surface from sparse calibrated RGB views with a
prior-conditioned implicit occupancy network, tracks rigid props by
differentiable silhouette optimization, and synthesizes novel views by
learned two-source blending with occlusion-aware texture completion and
depth-composited layering.
"""

__version__ = "0.1.0"

RIG_RADIUS = 2.0   # meters; the camera ring circumscribes this circle
RIG_HEIGHT = 1.0   # meters; camera height above the ground plane
