from .holders import HOLDER_KINDS, Cavity, Holder, HolderKind, HolderSpec, holder_from_config, make_holder
from .hull import POLYTOPE, SPHERE, ConvexPiece, polytope, sphere_piece
from .rng import Rng, mix
from .shapes import (
    OBJECT_CLASSES,
    Cone,
    Cube,
    Cylinder,
    FlippedCylinder,
    InvalidShapeError,
    InvertedCone,
    MassProps,
    ShapeClass,
    ShapeMesh,
    ShapeSpec,
    Sphere,
    Torus,
    bounding_radius,
    make_shape,
    mass_properties,
    rest_height,
    shape_from_config,
    support_point,
)
from .transforms import Pose, quat_from_axis_angle, quat_mul, quat_normalize, quat_to_matrix
