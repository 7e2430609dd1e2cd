//! Virtual-time replay of a trace through the pipeline.

use crate::config::{ConfigError, RuntimeConfig};
use crate::pipeline::{make_adapter, run_detection, LogSink, Pipeline, Summary};
use crate::trace::{TraceItem, TraceRecord};
use spice_core::bridge::EventBus;
use spice_core::detection::VisionAdapter;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    /// Canonical JSON lines, one per non-pose event.
    pub log: Vec<u8>,
    pub summary: Summary,
}

/// Directory used to resolve `image-ref` records.
pub fn images_dir(config: &RuntimeConfig, trace_path: Option<&Path>) -> PathBuf {
    match &config.file.images {
        Some(dir) => config.resolve(dir),
        None => trace_path
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_else(|| config.base_dir.clone()),
    }
}

pub fn run_replay(config: &RuntimeConfig, records: &[TraceRecord], images: &Path) -> Result<ReplayOutcome, ConfigError> {
    let mut adapter = make_adapter(config)?;
    Ok(replay_with(config, records, images, adapter.as_mut()))
}

/// Replay with an explicit adapter; single-threaded and clock-free.
pub fn replay_with(
    config: &RuntimeConfig,
    records: &[TraceRecord],
    images: &Path,
    adapter: &mut dyn VisionAdapter,
) -> ReplayOutcome {
    let mut pipeline = Pipeline::new(config, EventBus::new(), LogSink::Memory(Vec::new()));
    let detect = |pipeline: &mut Pipeline, adapter: &mut dyn VisionAdapter, t: f64, name: &str| {
        let result = run_detection(
            adapter,
            &images.join(name),
            name,
            config.file.distortion.as_ref(),
            config.detection_deadline(),
        );
        pipeline.handle_detection(t, name, result);
    };
    for r in records {
        match &r.item {
            TraceItem::Pose(frame) => {
                pipeline.handle_frame(frame);
            }
            TraceItem::ImageRef(name) => detect(&mut pipeline, adapter, r.timestamp, name),
            TraceItem::Command(c) => {
                if let Some(name) = pipeline.handle_command(r.timestamp, c) {
                    detect(&mut pipeline, adapter, r.timestamp, &name);
                }
            }
        }
    }
    let summary = pipeline.summary();
    let log = match pipeline.into_log() {
        LogSink::Memory(buf) => buf,
        _ => unreachable!("replay logs to memory"),
    };
    ReplayOutcome { log, summary }
}
