//! Image rectification and ingredient recognition through a vision-model adapter.

mod adapter;
mod image;
mod labels;
mod rectify;

pub use adapter::{
    detect_ingredients, interpret_response, AdapterError, DetectedLabel, DetectionResult, LiveAdapter, MockAdapter,
    MockFault, MockReply, MockScriptError, VisionAdapter, DEFAULT_DEADLINE, ENV_KEY, ENV_URL, PROMPT,
};
pub use image::{CameraImage, ImageError};
pub use labels::{normalize_label, parse_response, RawLabel, Unparseable};
pub use rectify::{rectify_image, DistortionModel, InvalidModel};
