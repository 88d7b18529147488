"""planloc: floor-plan based localization from radial wall/window descriptors.

Ray-cast five-channel descriptors from 2D plan rasters, build visual
descriptors from fisheye window detections, and recover planar pose via
circular cross-correlation plus roll/pitch from vanishing points.
"""

__version__ = "0.1.0"

from .floorplan import FloorPlanRaster, Pose2D, load_floorplan  # noqa: F401
from .raycast import (HitType, RadialDescriptor, RaycastConfig,  # noqa: F401
                      cast_ray, compute_descriptor, transition_signature)
