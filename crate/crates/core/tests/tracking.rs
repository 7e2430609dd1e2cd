use nalgebra::{UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use spice_core::tracking::*;

fn intrinsics() -> Intrinsics {
    Intrinsics {
        focal_px: 900.0,
        principal_point: [640.0, 360.0],
        resolution: [1280, 720],
    }
}

#[test]
fn triangulation_recovers_projected_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let p = [
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(0.0..0.3),
        ];
        let mut obs = Vec::new();
        while obs.len() < 3 {
            let dir = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.2..1.0))
                .normalize();
            let pos = Vector3::from(p) + dir * rng.random_range(1.0..3.0);
            let cam = CameraModel::look_at([pos.x, pos.y, pos.z], p, [0.0, 0.0, 1.0], intrinsics());
            if let Some(px) = cam.project(p) {
                obs.push((cam, px));
            }
        }
        let t = triangulate_marker(&obs).unwrap();
        let err = (Vector3::from(t.point) - Vector3::from(p)).norm();
        assert!(err < 1e-6, "error {err}");
        assert!(t.rms_residual < 1e-9, "residual {}", t.rms_residual);
    }
}

#[test]
fn registration_recovers_random_transforms() {
    let template = MarkerTemplate::reference_rbi();
    let model = RigidBodyModel::new(template.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let q = random_unit_quaternion(&mut rng);
        let t = Vector3::new(rng.random_range(0.0..1.38), rng.random_range(0.0..0.69), rng.random_range(0.0..0.1));
        let mut obs: Vec<[f64; 3]> = template
            .markers
            .iter()
            .map(|m| {
                let v = q * Vector3::from(*m) + t;
                [v.x, v.y, v.z]
            })
            .collect();
        obs.shuffle(&mut rng);
        let fit = model.fit(&obs).unwrap();
        assert!((fit.translation - t).norm() < 1e-6);
        assert!(fit.rotation.angle_to(&q) < 1e-6);
        assert!(fit.rms < 1e-6);
    }
}

#[test]
fn registration_under_marker_noise() {
    let template = MarkerTemplate::reference_rbi();
    let model = RigidBodyModel::new(template.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let noise = Normal::new(0.0, 0.0005).unwrap();
    let (mut pos_err, mut ang_err) = (Vec::new(), Vec::new());
    for _ in 0..1000 {
        let q = random_unit_quaternion(&mut rng);
        let t = Vector3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..0.6), 0.05);
        let obs: Vec<[f64; 3]> = template
            .markers
            .iter()
            .map(|m| {
                let v = q * Vector3::from(*m) + t;
                [v.x + noise.sample(&mut rng), v.y + noise.sample(&mut rng), v.z + noise.sample(&mut rng)]
            })
            .collect();
        let fit = model.fit(&obs).unwrap();
        pos_err.push((fit.translation - t).norm());
        ang_err.push(fit.rotation.angle_to(&q).to_degrees());
    }
    let p95 = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[(v.len() * 95).div_ceil(100) - 1]
    };
    assert!(p95(&mut pos_err) < 0.002);
    assert!(p95(&mut ang_err) < 1.0);
}

#[test]
fn reference_template_file_loads() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/rbi_template.json");
    let t = MarkerTemplate::load(path.as_ref()).unwrap();
    assert_eq!(t, MarkerTemplate::reference_rbi());
    assert!(t.validate().is_ok());
}

#[test]
fn symmetric_layouts_are_rejected_in_any_pose() {
    // regular tetrahedron, rectangle, regular pentagon: all have a nontrivial symmetry
    let s = 0.04;
    let tetra = vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    let rect = vec![[0.0, 0.0, 0.0], [0.08, 0.0, 0.0], [0.08, 0.05, 0.0], [0.0, 0.05, 0.0]];
    let penta: Vec<[f64; 3]> = (0..5)
        .map(|k| {
            let a = k as f64 * std::f64::consts::TAU / 5.0;
            [0.05 * a.cos(), 0.05 * a.sin(), 0.0]
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for markers in [tetra, rect, penta] {
        for _ in 0..20 {
            let q: UnitQuaternion<f64> = random_unit_quaternion(&mut rng);
            let moved: Vec<[f64; 3]> = markers
                .iter()
                .map(|m| {
                    let v = q * Vector3::from(*m);
                    [v.x + 0.3, v.y, v.z]
                })
                .collect();
            let t = MarkerTemplate {
                body_id: 1,
                name: "sym".into(),
                markers: moved,
            };
            let v = validate_template(&t).unwrap_err();
            assert!(v.iter().any(|v| v.rule() == "asymmetric"), "{v:?}");
        }
    }
}

fn arb_pose() -> impl Strategy<Value = RigidBodyPose> {
    (
        any::<u16>(),
        -1e6f64..1e6,
        prop::array::uniform3(-10.0f64..10.0),
        prop::array::uniform4(-1.0f64..1.0),
    )
        .prop_filter_map("zero quaternion", |(id, ts, pos, q)| {
            let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
            (n > 1e-3).then(|| RigidBodyPose {
                body_id: id,
                timestamp: ts,
                position: pos,
                orientation: Quat::new(q[0] / n, q[1] / n, q[2] / n, q[3] / n),
            })
        })
}

fn arb_frame() -> impl Strategy<Value = PoseFrame> {
    (any::<u64>(), prop::collection::vec(arb_pose(), 0..8)).prop_map(|(sequence, mut poses)| {
        poses.sort_by_key(|p| p.body_id);
        poses.dedup_by_key(|p| p.body_id);
        PoseFrame { sequence, poses }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn pose_frames_round_trip(f in arb_frame()) {
        let bytes = encode_pose_frame(&f).unwrap();
        prop_assert_eq!(bytes.len(), encoded_len(f.poses.len()));
        let back = decode_pose_datagram(&bytes).unwrap();
        prop_assert_eq!(encode_pose_frame(&back).unwrap(), bytes);
        prop_assert_eq!(back, f);
    }

    #[test]
    fn random_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        let _ = decode_pose_datagram(&bytes);
    }

    #[test]
    fn corrupted_headers_never_panic(f in arb_frame(), at in 0usize..16, byte in any::<u8>(), cut in 0usize..64) {
        let mut bytes = encode_pose_frame(&f).unwrap();
        bytes[at] = byte;
        let keep = bytes.len().saturating_sub(cut);
        bytes.truncate(keep);
        let _ = decode_pose_datagram(&bytes);
    }
}
