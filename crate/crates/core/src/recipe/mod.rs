//! Recipe library, matching and the cooking-session state machine.

mod library;
mod session;

pub use library::{match_recipe, MatchScore, Recipe, RecipeError, RecipeLibrary, Step, MATCH_THRESHOLD};
pub use session::{
    idle_snapshot, replay_directions, session_snapshot, DisplayModel, IngredientBox, LogEntry, RecipeSession,
    SessionEvent, StepBubble, BOX_GAP_MM, BOX_HEIGHT_MM, BOX_MARGIN_MM, BOX_WIDTH_MM,
};
