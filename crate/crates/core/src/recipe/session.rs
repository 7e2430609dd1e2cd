//! Step state machine of a cooking session and its projected display model.

use super::library::Recipe;
use crate::dial::{NavDirection, StepNavEvent};
use crate::scene::Workspace;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Nav { direction: NavDirection, source: String },
    SetStep { requested: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub timestamp: f64,
    pub event: SessionEvent,
    /// Step index after the event.
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeSession {
    pub recipe_id: String,
    pub step_count: usize,
    pub current_step: usize,
    /// Canonical labels in detection order.
    pub detected: Vec<String>,
    pub log: Vec<LogEntry>,
}

impl RecipeSession {
    pub fn start(recipe: &Recipe, detected: Vec<String>) -> Self {
        Self {
            recipe_id: recipe.id.clone(),
            step_count: recipe.steps.len(),
            current_step: 0,
            detected,
            log: Vec::new(),
        }
    }

    fn push(&mut self, timestamp: f64, event: SessionEvent) {
        // keep the log non-decreasing even if a late event arrives
        let t = self
            .log
            .last()
            .map_or(timestamp, |last| if timestamp < last.timestamp { last.timestamp } else { timestamp });
        self.log.push(LogEntry {
            timestamp: t,
            event,
            step: self.current_step,
        });
    }

    /// Next/prev with saturation at the first and last step.
    pub fn apply_nav(&mut self, event: &StepNavEvent) {
        self.current_step = match event.direction {
            NavDirection::Next => (self.current_step + 1).min(self.step_count - 1),
            NavDirection::Prev => self.current_step.saturating_sub(1),
        };
        self.push(
            event.timestamp,
            SessionEvent::Nav {
                direction: event.direction,
                source: event.source.clone(),
            },
        );
    }

    /// Jumps to `step`, clamped to the recipe.
    pub fn set_step(&mut self, step: usize, timestamp: f64) {
        self.current_step = step.min(self.step_count - 1);
        self.push(timestamp, SessionEvent::SetStep { requested: step });
    }
}

/// Folds `apply_nav` over a sequence of directions starting from step 0.
pub fn replay_directions(step_count: usize, directions: &[NavDirection]) -> usize {
    let recipe_less = RecipeSession {
        recipe_id: String::new(),
        step_count,
        current_step: 0,
        detected: Vec::new(),
        log: Vec::new(),
    };
    directions
        .iter()
        .fold(recipe_less, |mut s, d| {
            s.apply_nav(&StepNavEvent {
                direction: *d,
                timestamp: 0.0,
                source: String::new(),
            });
            s
        })
        .current_step
}

pub const BOX_MARGIN_MM: f64 = 40.0;
pub const BOX_WIDTH_MM: f64 = 200.0;
pub const BOX_HEIGHT_MM: f64 = 90.0;
pub const BOX_GAP_MM: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngredientBox {
    pub label: String,
    pub slot: usize,
    /// Projector pixels, clockwise from the top-left corner as seen by the cook.
    pub corners_px: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepBubble {
    pub index: usize,
    pub text: String,
    pub highlighted: bool,
}

/// Everything the projected interface draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayModel {
    pub recipe_id: Option<String>,
    pub title: Option<String>,
    pub ingredients: Vec<IngredientBox>,
    pub steps: Vec<StepBubble>,
    pub current_step: Option<usize>,
    pub detail: Option<String>,
    pub dial_zone_px: Vec<[f64; 2]>,
}

fn to_px(workspace: &Workspace, p: [f64; 2]) -> [f64; 2] {
    workspace.table_to_projector(p).unwrap_or([f64::NAN; 2])
}

/// Left-column boxes, top to bottom in detection order, shrunk if they would not fit.
fn ingredient_boxes(labels: &[String], workspace: &Workspace) -> Vec<IngredientBox> {
    let n = labels.len();
    let depth = workspace.table_mm[1];
    let room = depth - 2.0 * BOX_MARGIN_MM - BOX_GAP_MM * n.saturating_sub(1) as f64;
    let height = if n == 0 { BOX_HEIGHT_MM } else { BOX_HEIGHT_MM.min(room / n as f64) };
    labels
        .iter()
        .enumerate()
        .map(|(slot, label)| {
            let top = depth - BOX_MARGIN_MM - slot as f64 * (height + BOX_GAP_MM);
            let (x0, x1, y0) = (BOX_MARGIN_MM, BOX_MARGIN_MM + BOX_WIDTH_MM, top - height);
            IngredientBox {
                label: label.clone(),
                slot,
                corners_px: [[x0, top], [x1, top], [x1, y0], [x0, y0]]
                    .iter()
                    .map(|p| to_px(workspace, *p))
                    .collect(),
            }
        })
        .collect()
}

fn dial_outline(workspace: &Workspace) -> Vec<[f64; 2]> {
    workspace
        .zone(crate::scene::DIAL_ZONE)
        .map(|z| z.polygon.iter().map(|p| to_px(workspace, *p)).collect())
        .unwrap_or_default()
}

/// Display before any recipe is matched: only the detected ingredients.
pub fn idle_snapshot(detected: &[String], workspace: &Workspace) -> DisplayModel {
    DisplayModel {
        recipe_id: None,
        title: None,
        ingredients: ingredient_boxes(detected, workspace),
        steps: Vec::new(),
        current_step: None,
        detail: None,
        dial_zone_px: dial_outline(workspace),
    }
}

pub fn session_snapshot(session: &RecipeSession, recipe: &Recipe, workspace: &Workspace) -> DisplayModel {
    let current = session.current_step.min(recipe.steps.len() - 1);
    DisplayModel {
        recipe_id: Some(recipe.id.clone()),
        title: Some(recipe.title.clone()),
        ingredients: ingredient_boxes(&session.detected, workspace),
        steps: recipe
            .steps
            .iter()
            .enumerate()
            .map(|(index, s)| StepBubble {
                index,
                text: s.summary.clone(),
                highlighted: index == current,
            })
            .collect(),
        current_step: Some(current),
        detail: Some(recipe.steps[current].detail.clone()),
        dial_zone_px: dial_outline(workspace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recipe::RecipeLibrary;
    use NavDirection::{Next, Prev};

    fn session() -> (RecipeSession, Recipe) {
        let lib = RecipeLibrary::bundled();
        let g = lib.get("guacamole").unwrap().clone();
        let detected = ["tomato", "avocado", "lemon", "onion"].map(String::from).to_vec();
        (RecipeSession::start(&g, detected), g)
    }

    fn nav(d: NavDirection, t: f64) -> StepNavEvent {
        StepNavEvent {
            direction: d,
            timestamp: t,
            source: "spice://rbi/1".into(),
        }
    }

    #[test]
    fn saturates_at_both_ends() {
        let (mut s, _) = session();
        s.apply_nav(&nav(Prev, 0.0));
        assert_eq!(s.current_step, 0);
        s.current_step = 4;
        s.apply_nav(&nav(Next, 1.0));
        assert_eq!(s.current_step, 4);
    }

    #[test]
    fn fold_example() {
        assert_eq!(replay_directions(5, &[Next, Next, Prev, Next]), 2);
    }

    #[test]
    fn log_is_non_decreasing() {
        let (mut s, _) = session();
        s.apply_nav(&nav(Next, 5.0));
        s.apply_nav(&nav(Next, 3.0));
        s.set_step(9, 4.0);
        let ts: Vec<f64> = s.log.iter().map(|e| e.timestamp).collect();
        assert_eq!(ts, [5.0, 5.0, 5.0]);
        assert_eq!(s.current_step, 4);
        assert_eq!(s.log[2].step, 4);
    }

    #[test]
    fn snapshot_layout() {
        let (mut s, g) = session();
        let ws = Workspace::default_layout();
        s.set_step(2, 0.0);
        let d = session_snapshot(&s, &g, &ws);
        assert_eq!(d.ingredients.len(), 4);
        let labels: Vec<&str> = d.ingredients.iter().map(|b| b.label.as_str()).collect();
        assert_eq!(labels, ["tomato", "avocado", "lemon", "onion"]);
        // top to bottom on the projected image
        for w in d.ingredients.windows(2) {
            assert!(w[0].corners_px[0][1] < w[1].corners_px[0][1]);
        }
        assert!(d.ingredients.iter().all(|b| b.corners_px[0][0] < 960.0));
        assert_eq!(d.steps.len(), 5);
        let lit: Vec<usize> = d.steps.iter().filter(|b| b.highlighted).map(|b| b.index).collect();
        assert_eq!(lit, [2]);
        assert_eq!(d.detail.as_deref(), Some(g.steps[2].detail.as_str()));
        assert_eq!(d.dial_zone_px.len(), 4);
        let again = session_snapshot(&s, &g, &ws);
        assert_eq!(serde_json::to_vec(&d).unwrap(), serde_json::to_vec(&again).unwrap());
    }

    #[test]
    fn many_ingredients_still_fit() {
        let ws = Workspace::default_layout();
        let labels: Vec<String> = (0..12).map(|i| format!("item{i}")).collect();
        let d = idle_snapshot(&labels, &ws);
        let bottom = d.ingredients.last().unwrap().corners_px[2][1];
        assert!(bottom <= 960.0 - 40.0 * 1920.0 / 1380.0 + 1e-9);
    }
}
