//! The event loop body shared by live and replay modes.
//!
//! Everything here is a deterministic function of the inputs it is handed;
//! clocks, sockets and threads live in the callers.

use crate::config::{AdapterSettings, ConfigError, RuntimeConfig};
use serde::Serialize;
use serde_json::{json, Value};
use spice_analytics::{count_stops, AttentionEvent, AttentionKind};
use spice_core::bridge::{canonical_json, EventBus, EventEnvelope, Topic, UiCommand};
use spice_core::detection::{
    detect_ingredients, rectify_image, AdapterError, CameraImage, DetectedLabel, DetectionResult, DistortionModel,
    LiveAdapter, VisionAdapter,
};
use spice_core::dial::{DialConfig, DialState, StepNavEvent};
use spice_core::recipe::{
    idle_snapshot, match_recipe, session_snapshot, DisplayModel, MatchScore, RecipeLibrary, RecipeSession,
};
use spice_core::scene::{
    update_zone_membership, AgentKind, AgentRegistry, AgentState, Workspace, ZoneMembership, DIAL_ZONE,
};
use spice_core::tracking::{PoseFrame, RigidBodyPose};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

/// Where non-pose envelopes are recorded, one canonical JSON line each.
pub enum LogSink {
    Memory(Vec<u8>),
    Writer(Box<dyn Write + Send>),
    Discard,
}

impl LogSink {
    fn record(&mut self, env: &EventEnvelope) {
        let line = canonical_json(&env.to_value());
        match self {
            LogSink::Memory(buf) => {
                buf.extend_from_slice(line.as_bytes());
                buf.push(b'\n');
            }
            LogSink::Writer(w) => {
                // the log is best effort in live mode; the bus already delivered the event
                let _ = writeln!(w, "{line}");
            }
            LogSink::Discard => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub detected: Vec<String>,
    pub recipe: Option<String>,
    pub final_step: Option<usize>,
    pub duration_secs: f64,
    pub stops: usize,
    pub nav_events: usize,
    pub frames: u64,
    pub events_logged: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectionFailure {
    #[error("image {0}")]
    Image(String),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}

impl DetectionFailure {
    fn code(&self) -> &'static str {
        match self {
            DetectionFailure::Image(_) => "image",
            DetectionFailure::Adapter(AdapterError::Timeout) => "timeout",
            DetectionFailure::Adapter(AdapterError::Refusal(_)) => "refusal",
            DetectionFailure::Adapter(AdapterError::Unavailable(_)) => "unavailable",
        }
    }
}

/// Loads, rectifies and describes one camera frame.
pub fn run_detection(
    adapter: &mut dyn VisionAdapter,
    image_path: &Path,
    image_ref: &str,
    distortion: Option<&DistortionModel>,
    deadline: Duration,
) -> Result<DetectionResult, DetectionFailure> {
    let image = CameraImage::load_ppm(image_path).map_err(|e| DetectionFailure::Image(e.to_string()))?;
    let image = match distortion {
        Some(model) if !model.is_identity() => {
            rectify_image(&image, model).map_err(|e| DetectionFailure::Image(e.to_string()))?
        }
        _ => image,
    };
    Ok(detect_ingredients(&image, image_ref, adapter, deadline)?)
}

pub fn make_adapter(config: &RuntimeConfig) -> Result<Box<dyn VisionAdapter>, ConfigError> {
    match (&config.file.adapter, &config.mock) {
        (AdapterSettings::Mock { .. }, Some(mock)) => Ok(Box::new(mock.clone())),
        (AdapterSettings::Mock { .. }, None) => Err(ConfigError::Invalid("mock adapter without a script".into())),
        (AdapterSettings::Live, _) => LiveAdapter::from_env()
            .map(|a| Box::new(a) as Box<dyn VisionAdapter>)
            .map_err(|e| ConfigError::Invalid(e.to_string())),
    }
}

pub struct Pipeline {
    workspace: Workspace,
    library: RecipeLibrary,
    dial_config: DialConfig,
    template_body: u16,
    template_name: String,
    registry: AgentRegistry,
    membership: ZoneMembership,
    dials: BTreeMap<u16, DialState>,
    detected: Vec<DetectedLabel>,
    session: Option<RecipeSession>,
    last_image: Option<String>,
    default_image: Option<String>,
    last_display: Option<DisplayModel>,
    bus: EventBus,
    log: LogSink,
    first_ts: Option<f64>,
    last_ts: f64,
    nav_times: Vec<f64>,
    frames: u64,
    logged: u64,
}

impl Pipeline {
    pub fn new(config: &RuntimeConfig, bus: EventBus, log: LogSink) -> Self {
        let mut registry = AgentRegistry::new();
        for (name, zone) in &config.workspace.zones {
            let _ = registry.register(
                AgentKind::Zone,
                name,
                AgentState::Polygon {
                    points: zone.polygon.clone(),
                },
            );
        }
        Self {
            workspace: config.workspace.clone(),
            library: config.library.clone(),
            dial_config: config.file.dial,
            template_body: config.template.body_id,
            template_name: config.template.name.clone(),
            registry,
            membership: ZoneMembership::new(),
            dials: BTreeMap::new(),
            detected: Vec::new(),
            session: None,
            last_image: None,
            default_image: None,
            last_display: None,
            bus,
            log,
            first_ts: None,
            last_ts: 0.0,
            nav_times: Vec::new(),
            frames: 0,
            logged: 0,
        }
    }

    pub fn bus_mut(&mut self) -> &mut EventBus {
        &mut self.bus
    }

    pub fn registry(&self) -> &AgentRegistry {
        &self.registry
    }

    pub fn session(&self) -> Option<&RecipeSession> {
        self.session.as_ref()
    }

    /// Image used by re-detect when nothing has been detected yet.
    pub fn set_default_image(&mut self, image: Option<String>) {
        self.default_image = image;
    }

    pub fn last_image(&self) -> Option<&str> {
        self.last_image.as_deref()
    }

    fn touch(&mut self, t: f64) {
        self.first_ts.get_or_insert(t);
        self.last_ts = self.last_ts.max(t);
    }

    fn publish(&mut self, topic: Topic, t: f64, payload: Value) -> EventEnvelope {
        let env = self.bus.publish(topic, t, payload);
        if topic != Topic::Pose {
            self.log.record(&env);
            self.logged += 1;
        }
        env
    }

    fn display(&self) -> DisplayModel {
        let labels: Vec<String> = self.detected.iter().map(|l| l.label.clone()).collect();
        match self.session.as_ref().and_then(|s| self.library.get(&s.recipe_id).map(|r| (s, r))) {
            Some((s, recipe)) => session_snapshot(s, recipe, &self.workspace),
            None => idle_snapshot(&labels, &self.workspace),
        }
    }

    /// Publishes a full snapshot when it differs from the last one sent.
    pub fn publish_display_if_changed(&mut self, t: f64) -> bool {
        let model = self.display();
        if self.last_display.as_ref() == Some(&model) {
            return false;
        }
        let payload = serde_json::to_value(&model).expect("display model serializes");
        self.last_display = Some(model);
        self.publish(Topic::Display, t, payload);
        true
    }

    /// Unconditional snapshot, used when a UI connects before anything happened.
    pub fn publish_display(&mut self, t: f64) {
        self.last_display = None;
        self.publish_display_if_changed(t);
    }

    fn rbi_address(&mut self, pose: &RigidBodyPose) -> String {
        let address = format!("spice://rbi/{}", pose.body_id);
        if self.registry.get(&address).is_none() {
            let label = if pose.body_id == self.template_body {
                self.template_name.clone()
            } else {
                format!("body-{}", pose.body_id)
            };
            let _ = self.registry.register_at(&address, AgentKind::Rbi, &label, AgentState::Empty);
        }
        address
    }

    /// Returns whether a display snapshot went out.
    pub fn handle_frame(&mut self, frame: &PoseFrame) -> bool {
        self.frames += 1;
        let mut changed = false;
        for pose in &frame.poses {
            let t = pose.timestamp;
            self.touch(t);
            let address = self.rbi_address(pose);
            let _ = self.registry.set_state(&address, AgentState::Pose { pose: *pose });
            let p = pose.position;
            let mm = [p[0] * 1000.0, p[1] * 1000.0, p[2] * 1000.0];
            self.publish(
                Topic::Pose,
                t,
                json!({
                    "agent": address,
                    "body_id": pose.body_id,
                    "position_mm": mm,
                    "orientation": pose.orientation,
                }),
            );
            for ev in update_zone_membership(&self.workspace, &mut self.membership, &address, [mm[0], mm[1]], t) {
                self.publish(
                    Topic::Zone,
                    t,
                    json!({"agent": ev.agent, "zone": ev.zone, "transition": ev.transition}),
                );
            }
            let in_zone = self.membership.is_inside(&address, DIAL_ZONE);
            let config = self.dial_config;
            let navs = self
                .dials
                .entry(pose.body_id)
                .or_insert_with(|| DialState::new(&config))
                .update(pose, in_zone, &address);
            for nav in navs {
                changed |= self.apply_nav(&nav);
            }
        }
        changed
    }

    fn apply_nav(&mut self, nav: &StepNavEvent) -> bool {
        self.nav_times.push(nav.timestamp);
        let before = self.session.as_ref().map(|s| s.current_step);
        if let Some(s) = self.session.as_mut() {
            s.apply_nav(nav);
        }
        let after = self.session.as_ref().map(|s| s.current_step);
        self.publish(
            Topic::Nav,
            nav.timestamp,
            json!({
                "direction": nav.direction,
                "source": nav.source,
                "step": after,
                "saturated": before.is_some() && before == after,
            }),
        );
        self.publish_display_if_changed(nav.timestamp)
    }

    pub fn handle_detection(&mut self, t: f64, image_ref: &str, result: Result<DetectionResult, DetectionFailure>) {
        self.touch(t);
        self.last_image = Some(image_ref.to_string());
        let result = match result {
            Ok(r) => r,
            Err(e) => {
                self.publish(
                    Topic::Detection,
                    t,
                    json!({"image": image_ref, "error": e.code(), "message": e.to_string()}),
                );
                return;
            }
        };
        self.detected = result.labels.clone();
        self.registry.remove_kind(AgentKind::Ingredient);
        for (slot, l) in self.detected.iter().enumerate() {
            let _ = self.registry.register(
                AgentKind::Ingredient,
                &l.label,
                AgentState::Ingredient {
                    label: l.label.clone(),
                    slot,
                },
            );
        }
        let names = result.label_names();
        let matched: Option<MatchScore> = match_recipe(&names, &self.library);
        self.session = matched
            .as_ref()
            .and_then(|m| self.library.get(&m.recipe_id))
            .map(|r| RecipeSession::start(r, names.clone()));
        self.publish(
            Topic::Detection,
            t,
            json!({
                "image": image_ref,
                "labels": result.labels,
                "model_id": result.model_id,
                "raw_response": result.raw_response,
                "match": matched,
            }),
        );
        self.publish_display_if_changed(t);
    }

    /// Applies a command and acknowledges it. A re-detect hands back the
    /// image to describe again; the caller runs detection and reports through
    /// [`Pipeline::handle_detection`].
    pub fn handle_command(&mut self, t: f64, command: &UiCommand) -> Option<String> {
        self.touch(t);
        let mut redetect = None;
        let applied = match command {
            UiCommand::ReDetect => {
                redetect = self.last_image.clone().or_else(|| self.default_image.clone());
                redetect.is_some()
            }
            UiCommand::ResetSession => {
                self.session = None;
                self.detected.clear();
                self.registry.remove_kind(AgentKind::Ingredient);
                for d in self.dials.values_mut() {
                    d.reset();
                }
                true
            }
            UiCommand::SetStep { step } => match self.session.as_mut() {
                Some(s) => {
                    s.set_step(*step, t);
                    true
                }
                None => false,
            },
        };
        let mut ack = command.to_payload();
        ack["status"] = json!(if applied { "applied" } else { "ignored" });
        self.publish(Topic::Command, t, ack);
        self.publish_display_if_changed(t);
        redetect
    }

    pub fn summary(&self) -> Summary {
        let events: Vec<AttentionEvent> = self
            .nav_times
            .iter()
            .map(|&timestamp| AttentionEvent {
                timestamp,
                kind: AttentionKind::Nav,
            })
            .collect();
        Summary {
            detected: self.detected.iter().map(|l| l.label.clone()).collect(),
            recipe: self.session.as_ref().map(|s| s.recipe_id.clone()),
            final_step: self.session.as_ref().map(|s| s.current_step),
            duration_secs: self.first_ts.map_or(0.0, |f| self.last_ts - f),
            stops: count_stops(&events),
            nav_events: self.nav_times.len(),
            frames: self.frames,
            events_logged: self.logged,
        }
    }

    pub fn into_log(self) -> LogSink {
        let Pipeline { log, .. } = self;
        log
    }
}
