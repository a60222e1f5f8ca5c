"""Desk-scale simulation toolkit for deep direct visual servoing of a
single-section tendon-driven continuum robot."""

from ._core import (  # noqa: F401
    CameraIntrinsics,
    PlanarScene,
    Regressor,
    RigidPose,
    RobotGeometry,
    __version__,
    apply_lighting,
    apply_occlusion,
    config_schema,
    eval,
    footprint_width,
    forward_kinematics,
    gen_dataset,
    label_of,
    make_procedural_texture,
    normalize_for_sad,
    render,
    resize_bilinear,
    sad,
    servo,
    spiral_path,
    tendons_to_arc,
    train,
)
