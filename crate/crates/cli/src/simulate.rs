//! Scripted session generator producing traces.

use crate::trace::TraceRecord;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use spice_core::bridge::UiCommand;
use spice_core::tracking::{PoseFrame, Quat, RigidBodyPose};
use std::path::Path;

pub const DEFAULT_RATE_HZ: f64 = 120.0;
/// RBI marker centroid height above the table.
pub const RBI_HEIGHT_M: f64 = 0.02;
/// Tail recorded after the last action ends.
pub const TAIL_SECS: f64 = 0.5;
/// Length of a script without actions.
pub const IDLE_SECS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Action {
    PlaceIngredients {
        at: f64,
        image: String,
    },
    MoveRbiTo {
        at: f64,
        position_mm: [f64; 2],
        #[serde(default)]
        over: f64,
    },
    RotateRbiBy {
        at: f64,
        degrees: f64,
        #[serde(default)]
        over: f64,
    },
    Command {
        at: f64,
        command: UiCommand,
    },
}

impl Action {
    pub fn at(&self) -> f64 {
        match self {
            Action::PlaceIngredients { at, .. }
            | Action::MoveRbiTo { at, .. }
            | Action::RotateRbiBy { at, .. }
            | Action::Command { at, .. } => *at,
        }
    }

    fn over(&self) -> f64 {
        match self {
            Action::MoveRbiTo { over, .. } | Action::RotateRbiBy { over, .. } => *over,
            _ => 0.0,
        }
    }

    pub fn end(&self) -> f64 {
        self.at() + self.over()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartPose {
    pub position_mm: [f64; 2],
    #[serde(default)]
    pub yaw_deg: f64,
}

impl Default for StartPose {
    fn default() -> Self {
        Self {
            position_mm: [690.0, 345.0],
            yaw_deg: 0.0,
        }
    }
}

/// Standard deviations of the Gaussian noise added to every frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Noise {
    pub position_mm: f64,
    pub yaw_deg: f64,
}

fn default_body() -> u16 {
    1
}

fn default_rate() -> f64 {
    DEFAULT_RATE_HZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    #[serde(default = "default_body")]
    pub body_id: u16,
    #[serde(default)]
    pub start: StartPose,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
    #[serde(default)]
    pub noise: Noise,
    /// Defaults to the end of the last action plus [`TAIL_SECS`].
    #[serde(default)]
    pub duration_secs: Option<f64>,
    #[serde(default)]
    pub actions: Vec<Action>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("reading script: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing script: {0}")]
    Json(#[from] serde_json::Error),
    #[error("action {index}: {reason}")]
    Action { index: usize, reason: String },
    #[error("{0}")]
    Invalid(String),
}

impl Script {
    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        let s: Script = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ScriptError> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0 && self.rate_hz <= 10_000.0) {
            return Err(ScriptError::Invalid("rate_hz must be in (0, 10000]".into()));
        }
        if !finite_nonneg(self.noise.position_mm) || !finite_nonneg(self.noise.yaw_deg) {
            return Err(ScriptError::Invalid("noise must be finite and non-negative".into()));
        }
        if self.start.position_mm.iter().any(|v| !v.is_finite()) || !self.start.yaw_deg.is_finite() {
            return Err(ScriptError::Invalid("start pose must be finite".into()));
        }
        if let Some(d) = self.duration_secs {
            if !finite_nonneg(d) || d > 86_400.0 {
                return Err(ScriptError::Invalid("duration_secs must be in [0, 86400]".into()));
            }
        }
        for (index, a) in self.actions.iter().enumerate() {
            let bad = |reason: &str| ScriptError::Action {
                index,
                reason: reason.to_string(),
            };
            if !finite_nonneg(a.at()) || !finite_nonneg(a.over()) || a.end() > 86_400.0 {
                return Err(bad("times must be finite, non-negative and within a day"));
            }
            match a {
                Action::MoveRbiTo { position_mm, .. } if position_mm.iter().any(|v| !v.is_finite()) => {
                    return Err(bad("position must be finite"))
                }
                Action::RotateRbiBy { degrees, .. } if !degrees.is_finite() => return Err(bad("degrees must be finite")),
                Action::PlaceIngredients { image, .. } if image.trim().is_empty() => {
                    return Err(bad("image must be named"))
                }
                _ => {}
            }
        }
        for (kind, list) in [("move", self.moves()), ("rotation", self.rotations())] {
            for w in list.windows(2) {
                if w[1].at() < w[0].end() {
                    return Err(ScriptError::Invalid(format!(
                        "{kind} at {}s starts before the previous one ends",
                        w[1].at()
                    )));
                }
            }
        }
        Ok(())
    }

    fn sorted(&self) -> Vec<&Action> {
        let mut v: Vec<&Action> = self.actions.iter().collect();
        v.sort_by(|a, b| a.at().total_cmp(&b.at()));
        v
    }

    fn moves(&self) -> Vec<&Action> {
        self.sorted()
            .into_iter()
            .filter(|a| matches!(a, Action::MoveRbiTo { .. }))
            .collect()
    }

    fn rotations(&self) -> Vec<&Action> {
        self.sorted()
            .into_iter()
            .filter(|a| matches!(a, Action::RotateRbiBy { .. }))
            .collect()
    }

    pub fn duration(&self) -> f64 {
        self.duration_secs.unwrap_or_else(|| {
            self.actions
                .iter()
                .map(|a| a.end() + TAIL_SECS)
                .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e))))
                .unwrap_or(IDLE_SECS)
        })
    }

    /// Noise-free position (mm) and yaw (degrees) at time `t`.
    pub fn state_at(&self, t: f64) -> ([f64; 2], f64) {
        let frac = |a: &Action| {
            if t < a.at() {
                None
            } else if a.over() == 0.0 {
                Some(1.0)
            } else {
                Some(((t - a.at()) / a.over()).min(1.0))
            }
        };
        let mut pos = self.start.position_mm;
        for a in self.moves() {
            let (Action::MoveRbiTo { position_mm, .. }, Some(f)) = (a, frac(a)) else {
                break;
            };
            pos = [
                pos[0] + (position_mm[0] - pos[0]) * f,
                pos[1] + (position_mm[1] - pos[1]) * f,
            ];
            if f < 1.0 {
                break;
            }
        }
        let mut yaw = self.start.yaw_deg;
        for a in self.rotations() {
            let (Action::RotateRbiBy { degrees, .. }, Some(f)) = (a, frac(a)) else {
                break;
            };
            yaw += degrees * f;
            if f < 1.0 {
                break;
            }
        }
        (pos, yaw)
    }

    /// Net scripted rotation in degrees.
    pub fn total_rotation_deg(&self) -> f64 {
        self.actions
            .iter()
            .map(|a| match a {
                Action::RotateRbiBy { degrees, .. } => *degrees,
                _ => 0.0,
            })
            .sum()
    }
}

/// Yaw quaternion through libm so traces are identical across platforms.
fn yaw_quat(yaw_deg: f64) -> Quat {
    let half = yaw_deg.to_radians() / 2.0;
    Quat::new(libm::cos(half), 0.0, 0.0, libm::sin(half))
}

/// Samples the script at its frame rate. Identical seeds give identical traces.
pub fn run_simulate(script: &Script, seed: u64) -> Result<Vec<TraceRecord>, ScriptError> {
    script.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos_noise = Normal::new(0.0, script.noise.position_mm).map_err(|e| ScriptError::Invalid(e.to_string()))?;
    let yaw_noise = Normal::new(0.0, script.noise.yaw_deg).map_err(|e| ScriptError::Invalid(e.to_string()))?;

    let mut events: Vec<TraceRecord> = script
        .sorted()
        .into_iter()
        .filter_map(|a| match a {
            Action::PlaceIngredients { at, image } => Some(TraceRecord::image_ref(*at, image)),
            Action::Command { at, command } => Some(TraceRecord::command(*at, command.clone())),
            _ => None,
        })
        .collect();
    events.reverse();

    let frames = (script.duration() * script.rate_hz).round() as u64;
    let mut out = Vec::with_capacity(frames as usize + 1 + events.len());
    for k in 0..=frames {
        let t = k as f64 / script.rate_hz;
        while events.last().is_some_and(|e| e.timestamp <= t) {
            out.push(events.pop().unwrap());
        }
        let (mut pos, mut yaw) = script.state_at(t);
        if script.noise.position_mm > 0.0 {
            pos[0] += pos_noise.sample(&mut rng);
            pos[1] += pos_noise.sample(&mut rng);
        }
        if script.noise.yaw_deg > 0.0 {
            yaw += yaw_noise.sample(&mut rng);
        }
        out.push(TraceRecord::pose(
            t,
            PoseFrame {
                sequence: k + 1,
                poses: vec![RigidBodyPose {
                    body_id: script.body_id,
                    timestamp: t,
                    position: [pos[0] / 1000.0, pos[1] / 1000.0, RBI_HEIGHT_M],
                    orientation: yaw_quat(yaw),
                }],
            },
        ));
    }
    while let Some(e) = events.pop() {
        out.push(e);
    }
    Ok(out)
}
