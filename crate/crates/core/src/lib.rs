pub mod tracking;
pub mod scene;
pub mod dial;
pub mod detection;
pub mod recipe;
pub mod bridge;
