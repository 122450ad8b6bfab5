"""Ground-truth annotation maps: segmentation, depth, normals and forward flow."""

from .camera import Camera
from .raycast import FrameBuffers, analytic_flow, render_frame, set_state
