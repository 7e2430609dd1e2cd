//! Trace files: length-prefixed canonical-JSON records.
//!
//! Each record is `{"kind": ..., "payload": ..., "timestamp": ...}` behind a
//! u32 little-endian byte count. Pose payloads are base64 SPICE-TRK datagrams,
//! image references name an image file, commands carry a UI command.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use spice_core::bridge::{canonical_json, UiCommand, MAX_FRAME_LEN};
use spice_core::tracking::{decode_pose_datagram, encode_pose_frame, EncodeError, MalformedDatagram, PoseFrame};
use std::path::Path;

pub const TRACE_EXTENSION: &str = "spicetrace";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    Pose,
    ImageRef,
    Command,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceItem {
    Pose(PoseFrame),
    /// Image file name, resolved against the images directory.
    ImageRef(String),
    Command(UiCommand),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub timestamp: f64,
    pub item: TraceItem,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("reading trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("record {index} at byte {offset}: truncated")]
    Truncated { index: usize, offset: usize },
    #[error("record {index} at byte {offset}: length {len} out of range")]
    BadLength { index: usize, offset: usize, len: usize },
    #[error("record {index}: {reason}")]
    BadRecord { index: usize, reason: String },
    #[error("record {index}: pose payload: {source}")]
    BadPose { index: usize, source: MalformedDatagram },
    #[error("record {index}: timestamp {timestamp} precedes {previous}")]
    NotMonotonic { index: usize, timestamp: f64, previous: f64 },
    #[error("record {index}: {source}")]
    Encode { index: usize, source: EncodeError },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    kind: RecordKind,
    payload: Value,
    timestamp: f64,
}

impl TraceRecord {
    pub fn pose(timestamp: f64, frame: PoseFrame) -> Self {
        Self {
            timestamp,
            item: TraceItem::Pose(frame),
        }
    }

    pub fn image_ref(timestamp: f64, name: &str) -> Self {
        Self {
            timestamp,
            item: TraceItem::ImageRef(name.to_string()),
        }
    }

    pub fn command(timestamp: f64, command: UiCommand) -> Self {
        Self {
            timestamp,
            item: TraceItem::Command(command),
        }
    }

    pub fn kind(&self) -> RecordKind {
        match self.item {
            TraceItem::Pose(_) => RecordKind::Pose,
            TraceItem::ImageRef(_) => RecordKind::ImageRef,
            TraceItem::Command(_) => RecordKind::Command,
        }
    }
}

fn record_json(index: usize, r: &TraceRecord) -> Result<String, TraceError> {
    let payload = match &r.item {
        TraceItem::Pose(f) => json!(B64.encode(encode_pose_frame(f).map_err(|source| TraceError::Encode { index, source })?)),
        TraceItem::ImageRef(name) => json!({ "image": name }),
        TraceItem::Command(c) => c.to_payload(),
    };
    let raw = RawRecord {
        kind: r.kind(),
        payload,
        timestamp: r.timestamp,
    };
    Ok(canonical_json(&serde_json::to_value(raw).expect("record serializes")))
}

/// Validates ordering as it encodes.
pub fn encode_trace(records: &[TraceRecord]) -> Result<Vec<u8>, TraceError> {
    let mut out = Vec::new();
    let mut previous = f64::NEG_INFINITY;
    for (index, r) in records.iter().enumerate() {
        check_time(index, r.timestamp, &mut previous)?;
        let body = record_json(index, r)?;
        out.extend_from_slice(&(body.len() as u32).to_le_bytes());
        out.extend_from_slice(body.as_bytes());
    }
    Ok(out)
}

fn check_time(index: usize, timestamp: f64, previous: &mut f64) -> Result<(), TraceError> {
    if !timestamp.is_finite() {
        return Err(TraceError::BadRecord {
            index,
            reason: "non-finite timestamp".into(),
        });
    }
    if timestamp < *previous {
        return Err(TraceError::NotMonotonic {
            index,
            timestamp,
            previous: *previous,
        });
    }
    *previous = timestamp;
    Ok(())
}

fn parse_record(index: usize, body: &[u8]) -> Result<TraceRecord, TraceError> {
    let bad = |reason: String| TraceError::BadRecord { index, reason };
    let raw: RawRecord = serde_json::from_slice(body).map_err(|e| bad(e.to_string()))?;
    let item = match raw.kind {
        RecordKind::Pose => {
            let text = raw.payload.as_str().ok_or_else(|| bad("pose payload is not a string".into()))?;
            let bytes = B64.decode(text).map_err(|e| bad(format!("pose payload: {e}")))?;
            TraceItem::Pose(decode_pose_datagram(&bytes).map_err(|source| TraceError::BadPose { index, source })?)
        }
        RecordKind::ImageRef => {
            let name = raw
                .payload
                .get("image")
                .and_then(Value::as_str)
                .filter(|s| !s.trim().is_empty())
                .ok_or_else(|| bad("image-ref payload needs a non-empty \"image\"".into()))?;
            TraceItem::ImageRef(name.to_string())
        }
        RecordKind::Command => {
            TraceItem::Command(serde_json::from_value(raw.payload).map_err(|e| bad(format!("command: {e}")))?)
        }
    };
    Ok(TraceRecord {
        timestamp: raw.timestamp,
        item,
    })
}

pub fn decode_trace(bytes: &[u8]) -> Result<Vec<TraceRecord>, TraceError> {
    let mut records = Vec::new();
    let mut offset = 0;
    let mut previous = f64::NEG_INFINITY;
    while offset < bytes.len() {
        let index = records.len();
        let Some(header) = bytes.get(offset..offset + 4) else {
            return Err(TraceError::Truncated { index, offset });
        };
        let len = u32::from_le_bytes(header.try_into().unwrap()) as usize;
        if len == 0 || len > MAX_FRAME_LEN {
            return Err(TraceError::BadLength { index, offset, len });
        }
        let Some(body) = bytes.get(offset + 4..offset + 4 + len) else {
            return Err(TraceError::Truncated { index, offset });
        };
        let record = parse_record(index, body)?;
        check_time(index, record.timestamp, &mut previous)?;
        records.push(record);
        offset += 4 + len;
    }
    Ok(records)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>, TraceError> {
    decode_trace(&std::fs::read(path)?)
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<(), TraceError> {
    std::fs::write(path, encode_trace(records)?)?;
    Ok(())
}
