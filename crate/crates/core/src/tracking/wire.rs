//! SPICE-TRK pose datagrams.
//!
//! Little-endian. Header (16 bytes): magic `SPTK`, version u8, reserved u8,
//! pose count u16, sequence u64. Each pose (68 bytes): body id u16,
//! reserved u16, timestamp f64, position 3×f64, quaternion 4×f64 (w, x, y, z).

use super::pose::{PoseFrame, Quat, RigidBodyPose};

pub const MAGIC: [u8; 4] = *b"SPTK";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 16;
pub const POSE_LEN: usize = 68;
/// Decoded quaternions must have unit norm within this tolerance.
pub const QUAT_NORM_TOLERANCE: f64 = 1e-3;
pub const MAX_POSES: usize = u16::MAX as usize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MalformedDatagram {
    #[error("datagram shorter than the {HEADER_LEN}-byte header ({0} bytes)")]
    TooShort(usize),
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("{poses} poses need {expected} bytes, datagram has {got}")]
    LengthMismatch { poses: usize, expected: usize, got: usize },
    #[error("pose {index} has a non-finite value")]
    NonFinite { index: usize },
    #[error("pose {index} quaternion norm {norm} is not unit")]
    NonUnitQuaternion { index: usize, norm: f64 },
    #[error("body {body_id} appears more than once")]
    DuplicateBody { body_id: u16 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("{0} poses exceed the per-datagram limit")]
    TooManyPoses(usize),
}

pub fn encoded_len(pose_count: usize) -> usize {
    HEADER_LEN + POSE_LEN * pose_count
}

pub fn encode_pose_frame(frame: &PoseFrame) -> Result<Vec<u8>, EncodeError> {
    let n = frame.poses.len();
    if n > MAX_POSES {
        return Err(EncodeError::TooManyPoses(n));
    }
    let mut out = Vec::with_capacity(encoded_len(n));
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(0);
    out.extend_from_slice(&(n as u16).to_le_bytes());
    out.extend_from_slice(&frame.sequence.to_le_bytes());
    for p in &frame.poses {
        out.extend_from_slice(&p.body_id.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        let q = p.orientation;
        for v in [
            p.timestamp,
            p.position[0],
            p.position[1],
            p.position[2],
            q.w,
            q.x,
            q.y,
            q.z,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    let mut b = [0u8; 8];
    b.copy_from_slice(&bytes[at..at + 8]);
    f64::from_le_bytes(b)
}

pub fn decode_pose_datagram(bytes: &[u8]) -> Result<PoseFrame, MalformedDatagram> {
    if bytes.len() < HEADER_LEN {
        return Err(MalformedDatagram::TooShort(bytes.len()));
    }
    let magic = [bytes[0], bytes[1], bytes[2], bytes[3]];
    if magic != MAGIC {
        return Err(MalformedDatagram::BadMagic(magic));
    }
    if bytes[4] != VERSION {
        return Err(MalformedDatagram::BadVersion(bytes[4]));
    }
    let n = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let mut seq = [0u8; 8];
    seq.copy_from_slice(&bytes[8..16]);
    let sequence = u64::from_le_bytes(seq);
    let expected = encoded_len(n);
    if bytes.len() != expected {
        return Err(MalformedDatagram::LengthMismatch {
            poses: n,
            expected,
            got: bytes.len(),
        });
    }

    let mut poses: Vec<RigidBodyPose> = Vec::with_capacity(n);
    for index in 0..n {
        let base = HEADER_LEN + index * POSE_LEN;
        let body_id = u16::from_le_bytes([bytes[base], bytes[base + 1]]);
        let v: Vec<f64> = (0..8).map(|k| f64_at(bytes, base + 4 + 8 * k)).collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(MalformedDatagram::NonFinite { index });
        }
        let orientation = Quat::new(v[4], v[5], v[6], v[7]);
        let norm = orientation.norm();
        if (norm - 1.0).abs() > QUAT_NORM_TOLERANCE {
            return Err(MalformedDatagram::NonUnitQuaternion { index, norm });
        }
        if poses.iter().any(|p| p.body_id == body_id) {
            return Err(MalformedDatagram::DuplicateBody { body_id });
        }
        poses.push(RigidBodyPose {
            body_id,
            timestamp: v[0],
            position: [v[1], v[2], v[3]],
            orientation,
        });
    }
    Ok(PoseFrame { sequence, poses })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_frame_is_header_only() {
        let f = PoseFrame {
            sequence: 7,
            poses: vec![],
        };
        let bytes = encode_pose_frame(&f).unwrap();
        assert_eq!(bytes.len(), 16);
        assert_eq!(&bytes[..4], b"SPTK");
        assert_eq!(decode_pose_datagram(&bytes).unwrap(), f);
    }

    #[test]
    fn identity_pose_round_trips() {
        let f = PoseFrame {
            sequence: 1,
            poses: vec![RigidBodyPose {
                body_id: 1,
                timestamp: 0.0,
                position: [0.0; 3],
                orientation: Quat::IDENTITY,
            }],
        };
        let bytes = encode_pose_frame(&f).unwrap();
        assert_eq!(bytes.len(), 16 + 68);
        assert_eq!(decode_pose_datagram(&bytes).unwrap(), f);
        assert_eq!(encode_pose_frame(&decode_pose_datagram(&bytes).unwrap()).unwrap(), bytes);
    }

    #[test]
    fn rejects_bad_header() {
        let good = encode_pose_frame(&PoseFrame::default()).unwrap();
        let mut b = good.clone();
        b[0] = b'X';
        assert!(matches!(decode_pose_datagram(&b), Err(MalformedDatagram::BadMagic(_))));
        let mut b = good.clone();
        b[4] = 2;
        assert_eq!(decode_pose_datagram(&b), Err(MalformedDatagram::BadVersion(2)));
        assert_eq!(decode_pose_datagram(&good[..15]), Err(MalformedDatagram::TooShort(15)));
        let mut b = good;
        b[6] = 1;
        assert!(matches!(
            decode_pose_datagram(&b),
            Err(MalformedDatagram::LengthMismatch { poses: 1, .. })
        ));
    }

    #[test]
    fn rejects_bad_values() {
        let pose = RigidBodyPose {
            body_id: 2,
            timestamp: 1.0,
            position: [0.1, 0.2, 0.3],
            orientation: Quat::IDENTITY,
        };
        let mut f = PoseFrame {
            sequence: 1,
            poses: vec![pose],
        };
        f.poses[0].position[1] = f64::NAN;
        let b = encode_pose_frame(&f).unwrap();
        assert_eq!(decode_pose_datagram(&b), Err(MalformedDatagram::NonFinite { index: 0 }));

        f.poses[0] = pose;
        f.poses[0].orientation = Quat::new(1.01, 0.0, 0.0, 0.0);
        let b = encode_pose_frame(&f).unwrap();
        assert!(matches!(
            decode_pose_datagram(&b),
            Err(MalformedDatagram::NonUnitQuaternion { index: 0, .. })
        ));

        f.poses = vec![pose, pose];
        let b = encode_pose_frame(&f).unwrap();
        assert_eq!(decode_pose_datagram(&b), Err(MalformedDatagram::DuplicateBody { body_id: 2 }));
    }
}
