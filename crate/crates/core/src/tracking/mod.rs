//! Marker templates, triangulation, rigid registration and the pose wire format.

mod camera;
mod pose;
mod registration;
mod template;
mod wire;

pub use camera::{triangulate_marker, CameraModel, Intrinsics, Triangulation, TriangulationError, PARALLEL_TOLERANCE};
pub use pose::{PoseFrame, Quat, RigidBodyPose};
pub use registration::{fit_rigid_body, kabsch, FitError, RigidBodyModel, RigidFit, AMBIGUITY_EPSILON, DISTANCE_TOLERANCE, MAX_RMS};
pub use template::{
    random_unit_quaternion, validate_template, MarkerTemplate, TemplateLoadError, TemplateViolation, MIN_MARKERS,
    MIN_SEPARATION, SYMMETRY_TOLERANCE,
};
pub use wire::{
    decode_pose_datagram, encode_pose_frame, encoded_len, EncodeError, MalformedDatagram, HEADER_LEN, MAGIC, MAX_POSES,
    POSE_LEN, QUAT_NORM_TOLERANCE, VERSION,
};
