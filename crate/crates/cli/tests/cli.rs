use proptest::prelude::*;
use serde_json::{json, Value};
use spice::config::RuntimeConfig;
use spice::live::start_live;
use spice::replay::{run_replay, ReplayOutcome};
use spice::simulate::{run_simulate, Script};
use spice::trace::{decode_trace, encode_trace, read_trace, TraceRecord};
use spice_core::bridge::{decode_event, encode_event, EventEnvelope, Topic, UiCommand};
use spice_core::tracking::{encode_pose_frame, PoseFrame, Quat, RigidBodyPose};
use std::net::UdpSocket;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};
use tungstenite::Message;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn spice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spice")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn replay_config() -> RuntimeConfig {
    RuntimeConfig::load(&fixtures().join("replay.json")).unwrap()
}

fn replay_script(script: Value) -> ReplayOutcome {
    let script = Script::from_json(&script.to_string()).unwrap();
    let records = run_simulate(&script, 3).unwrap();
    run_replay(&replay_config(), &records, &fixtures()).unwrap()
}

fn log_lines(log: &[u8]) -> Vec<EventEnvelope> {
    log.split(|b| *b == b'\n')
        .filter(|l| !l.is_empty())
        .map(|l| decode_event(l).unwrap())
        .collect()
}

fn navs(log: &[u8]) -> Vec<String> {
    log_lines(log)
        .into_iter()
        .filter(|e| e.topic == Topic::Nav)
        .map(|e| e.payload["direction"].as_str().unwrap().to_string())
        .collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn empty_trace_replays_to_empty_log() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("empty.spicetrace");
    std::fs::write(&trace, b"").unwrap();
    let golden = dir.path().join("out.log");
    let config = fixtures().join("replay.json");
    let o = spice(&["replay", "--config", p(&config), "--trace", p(&trace), "--golden", p(&golden), "--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read(&golden).unwrap().is_empty());
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["recipe"], Value::Null);
    assert_eq!(summary["final_step"], Value::Null);
    assert_eq!(summary["frames"], 0);
}

#[test]
fn rotation_outside_dial_zone_is_ignored() {
    let out = replay_script(json!({
        "start": {"position_mm": [690.0, 345.0]},
        "actions": [
            {"action": "place-ingredients", "at": 0.1, "image": "table.ppm"},
            {"action": "rotate-rbi-by", "at": 0.5, "degrees": 720.0, "over": 4.0},
            {"action": "rotate-rbi-by", "at": 5.0, "degrees": -400.0, "over": 2.0}
        ]
    }));
    assert_eq!(out.summary.recipe.as_deref(), Some("guacamole"));
    assert_eq!(out.summary.nav_events, 0);
    assert!(navs(&out.log).is_empty());
    assert_eq!(out.summary.final_step, Some(0));
}

#[test]
fn quarter_turn_in_zone_gives_three_steps() {
    for (degrees, dir) in [(90.0, "next"), (-90.0, "prev")] {
        let out = replay_script(json!({
            "start": {"position_mm": [1240.0, 140.0]},
            "actions": [{"action": "rotate-rbi-by", "at": 0.5, "degrees": degrees, "over": 2.0}]
        }));
        assert_eq!(navs(&out.log), vec![dir; 3], "{degrees}");
    }
}

#[test]
fn dial_events_need_a_session_only_for_step_changes() {
    // without ingredients the dial still reports, but no step moves
    let out = replay_script(json!({
        "start": {"position_mm": [1240.0, 140.0]},
        "actions": [{"action": "rotate-rbi-by", "at": 0.5, "degrees": 65.0, "over": 1.0}]
    }));
    let events = log_lines(&out.log);
    let nav: Vec<_> = events.iter().filter(|e| e.topic == Topic::Nav).collect();
    assert_eq!(nav.len(), 2);
    assert!(nav.iter().all(|e| e.payload["step"].is_null()));
}

#[test]
fn replay_is_deterministic() {
    let trace = fixtures().join("guacamole.spicetrace");
    let records = read_trace(&trace).unwrap();
    let a = run_replay(&replay_config(), &records, &fixtures()).unwrap();
    let b = run_replay(&replay_config(), &records, &fixtures()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn golden_check_passes_and_detects_tampering() {
    let config = fixtures().join("replay.json");
    let trace = fixtures().join("guacamole.spicetrace");
    let golden = fixtures().join("guacamole.log");
    let o = spice(&["replay", "--config", p(&config), "--trace", p(&trace), "--check", p(&golden)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("recipe:    guacamole"), "{stdout}");
    assert!(stdout.contains("step:      4"), "{stdout}");

    let dir = tempfile::tempdir().unwrap();
    let tampered = dir.path().join("tampered.log");
    let text = std::fs::read_to_string(&golden).unwrap().replacen("\"step\":3", "\"step\":2", 1);
    std::fs::write(&tampered, text).unwrap();
    let o = spice(&["replay", "--config", p(&config), "--trace", p(&trace), "--check", p(&tampered)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn commands_in_a_trace_are_acknowledged() {
    let out = replay_script(json!({
        "actions": [
            {"action": "place-ingredients", "at": 0.1, "image": "table.ppm"},
            {"action": "command", "at": 0.2, "command": {"kind": "set-step", "step": 2}},
            {"action": "command", "at": 0.3, "command": {"kind": "set-step", "step": 99}},
            {"action": "command", "at": 0.4, "command": {"kind": "reset-session"}},
            {"action": "command", "at": 0.5, "command": {"kind": "re-detect"}}
        ]
    }));
    let events = log_lines(&out.log);
    let acks: Vec<_> = events.iter().filter(|e| e.topic == Topic::Command).collect();
    assert_eq!(acks.len(), 4);
    assert!(acks.iter().all(|e| e.payload["status"].is_string()));
    let displays: Vec<_> = events.iter().filter(|e| e.topic == Topic::Display).collect();
    let steps: Vec<_> = displays.iter().map(|e| e.payload["current_step"].clone()).collect();
    assert!(steps.contains(&json!(2)), "{steps:?}");
    // re-detect runs the same image again
    assert_eq!(events.iter().filter(|e| e.topic == Topic::Detection).count(), 2);
    assert_eq!(out.summary.recipe.as_deref(), Some("guacamole"));
}

#[test]
fn detection_failure_is_reported_not_fatal() {
    let out = replay_script(json!({
        "actions": [
            {"action": "place-ingredients", "at": 0.1, "image": "refuse.ppm"},
            {"action": "place-ingredients", "at": 0.2, "image": "missing.ppm"}
        ]
    }));
    let errors: Vec<_> = log_lines(&out.log)
        .into_iter()
        .filter(|e| e.topic == Topic::Detection)
        .map(|e| e.payload["error"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(errors, ["refusal", "image"]);
    assert_eq!(out.summary.recipe, None);
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("noisy.json");
    std::fs::write(
        &script,
        json!({
            "noise": {"position_mm": 0.5, "yaw_deg": 0.2},
            "actions": [{"action": "rotate-rbi-by", "at": 0.2, "degrees": 45.0, "over": 0.5}]
        })
        .to_string(),
    )
    .unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = spice(&["simulate", "--script", p(&script), "--seed", seed, "--out", p(&out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run("42", "a.spicetrace");
    assert_eq!(a, run("42", "b.spicetrace"));
    assert_ne!(a, run("43", "c.spicetrace"));
}

#[test]
fn committed_trace_matches_its_script() {
    let script = Script::load(&fixtures().join("guacamole.json")).unwrap();
    let fresh = encode_trace(&run_simulate(&script, 7).unwrap()).unwrap();
    assert_eq!(fresh, std::fs::read(fixtures().join("guacamole.spicetrace")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = fixtures().join("replay.json");
    let trace = fixtures().join("guacamole.spicetrace");

    let missing = d.join("nope.json");
    assert_eq!(code(&spice(&["replay", "--config", p(&missing), "--trace", p(&trace)])), 2);

    let bad_config = d.join("bad.json");
    let mut cfg: Value = serde_json::from_str(&std::fs::read_to_string(&config).unwrap()).unwrap();
    cfg["colour"] = json!("teal");
    std::fs::write(&bad_config, cfg.to_string()).unwrap();
    assert_eq!(code(&spice(&["replay", "--config", p(&bad_config), "--trace", p(&trace)])), 2);

    let garbage = d.join("garbage.spicetrace");
    std::fs::write(&garbage, b"\x05\x00\x00\x00hello").unwrap();
    assert_eq!(code(&spice(&["replay", "--config", p(&config), "--trace", p(&garbage)])), 3);

    let bytes = std::fs::read(&trace).unwrap();
    let cut = d.join("cut.spicetrace");
    std::fs::write(&cut, &bytes[..bytes.len() - 10]).unwrap();
    let o = spice(&["replay", "--config", p(&config), "--trace", p(&cut)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("record"));

    let bad_script = d.join("script.json");
    std::fs::write(&bad_script, r#"{"actions": [{"action": "juggle", "at": 1.0}]}"#).unwrap();
    let out = d.join("x.spicetrace");
    assert_eq!(code(&spice(&["simulate", "--script", p(&bad_script), "--out", p(&out)])), 2);

    let good_script = fixtures().join("guacamole.json");
    let unwritable = d.join("no/such/dir/x.spicetrace");
    assert_eq!(code(&spice(&["simulate", "--script", p(&good_script), "--out", p(&unwritable)])), 3);

    assert_eq!(code(&spice(&["analyze", "--csv", p(&d.join("none.csv"))])), 2);
    assert_eq!(code(&spice(&["bogus"])), 2);
}

#[test]
fn analyze_prints_the_table() {
    let csv = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../analytics/fixtures/study_summary.csv");
    let o = spice(&["analyze", "--csv", p(&csv)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    // display rounds half away from zero, so 5.4168 shows as +5.42
    for cell in ["-17.44%", "+1.69%", "+5.42%", "-1.19%", "-15.78%", "-40%"] {
        assert!(text.contains(cell), "missing {cell} in\n{text}");
    }
}

fn live_config(dir: &Path) -> PathBuf {
    let f = fixtures();
    let cfg = json!({
        "workspace": f.join("workspace.json"),
        "recipes": f.join("../../core/fixtures/recipes.json"),
        "template": f.join("../../core/fixtures/rbi_template.json"),
        "adapter": {"mode": "mock", "script": f.join("mock_vlm.json")},
        "camera_image": f.join("table.ppm"),
        "event_log": dir.join("events.log"),
        "peers": {"tracker_listen": "127.0.0.1:0", "ui_listen": "127.0.0.1:0"}
    });
    let path = dir.join("live.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

type Socket = tungstenite::WebSocket<tungstenite::stream::MaybeTlsStream<std::net::TcpStream>>;

fn read_until(ws: &mut Socket, deadline: Instant, pred: impl Fn(&EventEnvelope) -> bool) -> EventEnvelope {
    if let tungstenite::stream::MaybeTlsStream::Plain(s) = ws.get_ref() {
        s.set_read_timeout(Some(Duration::from_millis(200))).unwrap();
    }
    loop {
        assert!(Instant::now() < deadline, "timed out waiting for event");
        match ws.read() {
            Ok(Message::Text(t)) => {
                let env = decode_event(t.as_bytes()).unwrap();
                if pred(&env) {
                    return env;
                }
            }
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn live_mode_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let config = RuntimeConfig::load(&live_config(dir.path())).unwrap();
    let handle = start_live(&config).unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);

    let (mut ws, _) = tungstenite::connect(format!("ws://{}", handle.ui_addr)).unwrap();
    let is_session = |e: &EventEnvelope| e.topic == Topic::Display && e.payload["recipe_id"] == json!("guacamole");
    // detection may finish before or after the client connects
    let snapshot = read_until(&mut ws, deadline, |_| true);
    assert_eq!(snapshot.topic, Topic::Display);
    if !is_session(&snapshot) {
        read_until(&mut ws, deadline, is_session);
    }

    let cmd = EventEnvelope::new(0, 0.0, Topic::Command, json!({"kind": "set-step", "step": 2}));
    let text = String::from_utf8(encode_event(&cmd).unwrap()).unwrap();
    ws.send(Message::Text(text.into())).unwrap();
    read_until(&mut ws, deadline, |e| e.topic == Topic::Command && e.payload["status"] == json!("applied"));
    read_until(&mut ws, deadline, |e| e.topic == Topic::Display && e.payload["current_step"] == json!(2));

    // one clockwise detent from the tracker moves to step 3
    let tracker = UdpSocket::bind("127.0.0.1:0").unwrap();
    for k in 0..60u64 {
        let yaw = (k as f64 * 0.75).to_radians();
        let frame = PoseFrame {
            sequence: k + 1,
            poses: vec![RigidBodyPose {
                body_id: 1,
                timestamp: k as f64 / 120.0,
                position: [1.24, 0.14, 0.02],
                orientation: Quat::from_yaw(yaw),
            }],
        };
        tracker.send_to(&encode_pose_frame(&frame).unwrap(), handle.tracker_addr).unwrap();
        std::thread::sleep(Duration::from_millis(2));
    }
    let nav = read_until(&mut ws, deadline, |e| e.topic == Topic::Nav);
    assert_eq!(nav.payload["direction"], json!("next"));
    read_until(&mut ws, deadline, |e| e.topic == Topic::Display && e.payload["current_step"] == json!(3));
    ws.close(None).unwrap();

    let outcome = handle.stop();
    assert_eq!(outcome.summary.recipe.as_deref(), Some("guacamole"));
    assert_eq!(outcome.summary.final_step, Some(3));
    assert_eq!(outcome.ingest.accepted, 60);
    assert_eq!(outcome.ingest.malformed, 0);
    assert_eq!(outcome.summary.nav_events, 1);
    assert_eq!(outcome.latencies.len(), 1);

    let log = std::fs::read(dir.path().join("events.log")).unwrap();
    assert!(log_lines(&log).iter().any(|e| e.topic == Topic::Nav));
}

#[test]
fn run_command_with_duration_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let config = live_config(dir.path());
    let o = spice(&["run", "--config", p(&config), "--duration", "0.3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ws://127.0.0.1:"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("ingest:"));
}

fn arb_record() -> impl Strategy<Value = (f64, TraceRecord)> {
    let pose = (any::<u64>(), any::<u16>(), prop::array::uniform3(-5.0f64..5.0), -7.0f64..7.0).prop_map(
        |(sequence, body_id, position, yaw)| {
            TraceRecord::pose(
                0.0,
                PoseFrame {
                    sequence,
                    poses: vec![RigidBodyPose {
                        body_id,
                        timestamp: 0.0,
                        position,
                        orientation: Quat::from_yaw(yaw),
                    }],
                },
            )
        },
    );
    let dt = 0.0f64..0.1;
    prop_oneof![
        (dt.clone(), pose),
        (dt.clone(), "[a-zñ🌶._-][a-zñ🌶 ./_-]{0,11}").prop_map(|(dt, name)| (dt, TraceRecord::image_ref(0.0, &name))),
        (dt, 0usize..20, 0u8..3).prop_map(|(dt, step, k)| {
            let c = match k {
                0 => UiCommand::ReDetect,
                1 => UiCommand::ResetSession,
                _ => UiCommand::SetStep { step },
            };
            (dt, TraceRecord::command(0.0, c))
        }),
    ]
}

fn retime(mut r: TraceRecord, t: f64) -> TraceRecord {
    r.timestamp = t;
    if let spice::trace::TraceItem::Pose(f) = &mut r.item {
        f.poses.iter_mut().for_each(|p| p.timestamp = t);
    }
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn traces_round_trip(items in prop::collection::vec(arb_record(), 0..40)) {
        let mut t = 0.0;
        let records: Vec<TraceRecord> = items
            .into_iter()
            .map(|(dt, r)| {
                t += dt;
                retime(r, t)
            })
            .collect();
        let bytes = encode_trace(&records).unwrap();
        prop_assert_eq!(decode_trace(&bytes).unwrap(), records);
    }

    #[test]
    fn truncation_is_rejected_except_at_record_boundaries(cut in 0usize..4000) {
        let all = read_trace(&fixtures().join("guacamole.spicetrace")).unwrap();
        let bytes = encode_trace(&all[..12]).unwrap();
        let cut = cut % bytes.len();
        // walk the u32 length prefixes to find where each record ends
        let mut ends = vec![0];
        while *ends.last().unwrap() < bytes.len() {
            let at = *ends.last().unwrap();
            let len = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
            ends.push(at + 4 + len);
        }
        match decode_trace(&bytes[..cut]) {
            Ok(prefix) => {
                let k = ends.iter().position(|e| *e == cut);
                prop_assert!(k.is_some(), "cut {} inside a record decoded", cut);
                prop_assert_eq!(&prefix[..], &all[..k.unwrap()]);
            }
            Err(_) => prop_assert!(!ends.contains(&cut)),
        }
    }
}
