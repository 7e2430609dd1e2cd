//! Table geometry, named zones and zone membership tracking.
//!
//! Table coordinates are millimeters with the origin at the front-left
//! corner: x to the right, y away from the cook.

use super::homography::{Homography, HomographyError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const DEFAULT_TABLE_MM: [f64; 3] = [1380.0, 690.0, 750.0];
pub const DIAL_ZONE: &str = "dial";
pub const DIAL_ZONE_SIZE_MM: f64 = 200.0;
pub const DIAL_ZONE_INSET_MM: f64 = 40.0;
/// A member must be this far outside a zone before it exits (mm).
pub const EXIT_HYSTERESIS_MM: f64 = 10.0;
/// Default projector raster the table is mapped onto.
pub const DEFAULT_PROJECTOR_WIDTH_PX: f64 = 1920.0;
const EDGE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub name: String,
    /// Convex polygon vertices in table millimeters, either winding.
    pub polygon: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

impl Zone {
    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.polygon.len();
        (0..n).map(move |i| (self.polygon[i], self.polygon[(i + 1) % n]))
    }

    fn signed_area2(&self) -> f64 {
        self.edges().map(|(a, b)| a[0] * b[1] - b[0] * a[1]).sum()
    }

    pub fn is_convex(&self) -> bool {
        if self.polygon.len() < 3 || self.signed_area2().abs() <= EDGE_EPSILON {
            return false;
        }
        let n = self.polygon.len();
        let sign = self.signed_area2().signum();
        (0..n).all(|i| {
            let c = cross(self.polygon[i], self.polygon[(i + 1) % n], self.polygon[(i + 2) % n]);
            c * sign >= -EDGE_EPSILON
        })
    }

    /// Inside or on the boundary.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let sign = self.signed_area2().signum();
        self.edges().all(|(a, b)| cross(a, b, p) * sign >= -EDGE_EPSILON)
    }

    /// Distance to the boundary, 0 for points inside.
    pub fn distance_outside(&self, p: [f64; 2]) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.polygon.len() as f64;
        let sx: f64 = self.polygon.iter().map(|p| p[0]).sum();
        let sy: f64 = self.polygon.iter().map(|p| p[1]).sum();
        [sx / n, sy / n]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WorkspaceError {
    #[error("reading workspace: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing workspace: {0}")]
    Json(#[from] serde_json::Error),
    #[error("table dimensions must be positive and finite")]
    InvalidTable,
    #[error("zone {0} is not a convex polygon")]
    NonConvexZone(String),
    #[error("zone {0} extends beyond the table")]
    ZoneOutOfBounds(String),
    #[error(transparent)]
    Homography(#[from] HomographyError),
}

/// On-disk form: `table_mm`, `zones` (name → vertices) and a row-major homography.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceConfig {
    pub table_mm: [f64; 3],
    pub zones: BTreeMap<String, Vec<[f64; 2]>>,
    pub homography: [f64; 9],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    /// Width, depth and height in millimeters.
    pub table_mm: [f64; 3],
    pub zones: BTreeMap<String, Zone>,
    pub homography: Homography,
    inverse: Homography,
}

impl Workspace {
    pub fn new(table_mm: [f64; 3], zones: Vec<Zone>, homography: Homography) -> Result<Self, WorkspaceError> {
        if table_mm.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(WorkspaceError::InvalidTable);
        }
        let mut map = BTreeMap::new();
        for z in zones {
            if !z.is_convex() || z.polygon.iter().flatten().any(|v| !v.is_finite()) {
                return Err(WorkspaceError::NonConvexZone(z.name));
            }
            let inside = z
                .polygon
                .iter()
                .all(|p| (0.0..=table_mm[0]).contains(&p[0]) && (0.0..=table_mm[1]).contains(&p[1]));
            if !inside {
                return Err(WorkspaceError::ZoneOutOfBounds(z.name));
            }
            map.insert(z.name.clone(), z);
        }
        Ok(Self {
            table_mm,
            zones: map,
            inverse: homography.inverse(),
            homography,
        })
    }

    /// Default dial zone in the front-right corner and a projector mapping that
    /// fills a 1920 px wide raster with the far table edge at the top.
    pub fn default_layout() -> Self {
        let [w, d, _] = DEFAULT_TABLE_MM;
        let s = DEFAULT_PROJECTOR_WIDTH_PX / w;
        let h = Homography::from_row_major([s, 0.0, 0.0, 0.0, -s, s * d, 0.0, 0.0, 1.0]).expect("invertible");
        let (x1, x0) = (w - DIAL_ZONE_INSET_MM, w - DIAL_ZONE_INSET_MM - DIAL_ZONE_SIZE_MM);
        let (y0, y1) = (DIAL_ZONE_INSET_MM, DIAL_ZONE_INSET_MM + DIAL_ZONE_SIZE_MM);
        let dial = Zone {
            name: DIAL_ZONE.into(),
            polygon: vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
        };
        Self::new(DEFAULT_TABLE_MM, vec![dial], h).expect("default layout is valid")
    }

    pub fn from_config(cfg: WorkspaceConfig) -> Result<Self, WorkspaceError> {
        let h = Homography::from_row_major(cfg.homography)?;
        let zones = cfg
            .zones
            .into_iter()
            .map(|(name, polygon)| Zone { name, polygon })
            .collect();
        Self::new(cfg.table_mm, zones, h)
    }

    pub fn to_config(&self) -> WorkspaceConfig {
        WorkspaceConfig {
            table_mm: self.table_mm,
            zones: self.zones.iter().map(|(k, z)| (k.clone(), z.polygon.clone())).collect(),
            homography: self.homography.to_row_major(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, WorkspaceError> {
        Self::from_config(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, WorkspaceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn zone(&self, name: &str) -> Option<&Zone> {
        self.zones.get(name)
    }

    pub fn table_to_projector(&self, p: [f64; 2]) -> Result<[f64; 2], HomographyError> {
        self.homography.apply(p)
    }

    pub fn projector_to_table(&self, p: [f64; 2]) -> Result<[f64; 2], HomographyError> {
        self.inverse.apply(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    Enter,
    Exit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneEvent {
    pub agent: String,
    pub zone: String,
    pub transition: Transition,
    pub timestamp: f64,
}

/// Current membership of each (agent, zone) pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZoneMembership {
    inside: BTreeMap<(String, String), bool>,
}

impl ZoneMembership {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_inside(&self, agent: &str, zone: &str) -> bool {
        self.inside
            .get(&(agent.to_string(), zone.to_string()))
            .copied()
            .unwrap_or(false)
    }

    pub fn clear(&mut self) {
        self.inside.clear();
    }
}

/// Enters on touching a zone, exits only once more than
/// [`EXIT_HYSTERESIS_MM`] outside it. Events come in zone-name order.
pub fn update_zone_membership(
    workspace: &Workspace,
    membership: &mut ZoneMembership,
    agent: &str,
    position_mm: [f64; 2],
    timestamp: f64,
) -> Vec<ZoneEvent> {
    if position_mm.iter().any(|v| !v.is_finite()) {
        return Vec::new();
    }
    let mut events = Vec::new();
    for (name, zone) in &workspace.zones {
        let key = (agent.to_string(), name.clone());
        let was_inside = membership.inside.get(&key).copied().unwrap_or(false);
        let now_inside = if was_inside {
            zone.distance_outside(position_mm) <= EXIT_HYSTERESIS_MM
        } else {
            zone.contains(position_mm)
        };
        if now_inside != was_inside {
            events.push(ZoneEvent {
                agent: agent.to_string(),
                zone: name.clone(),
                transition: if now_inside { Transition::Enter } else { Transition::Exit },
                timestamp,
            });
        }
        membership.inside.insert(key, now_inside);
    }
    events
}
