//! Event envelopes and their canonical JSON encoding.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topic {
    Pose,
    Zone,
    Nav,
    Detection,
    Display,
    Command,
}

impl Topic {
    pub const ALL: [Topic; 6] = [
        Topic::Pose,
        Topic::Zone,
        Topic::Nav,
        Topic::Detection,
        Topic::Display,
        Topic::Command,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Topic::Pose => "pose",
            Topic::Zone => "zone",
            Topic::Nav => "nav",
            Topic::Detection => "detection",
            Topic::Display => "display",
            Topic::Command => "command",
        }
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topic {
    type Err = MalformedEvent;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topic::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| MalformedEvent::UnknownTopic(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEnvelope {
    pub seq: u64,
    /// Seconds on the session clock.
    pub timestamp: f64,
    pub topic: Topic,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MalformedEvent {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("not an envelope: {0}")]
    Shape(String),
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error("timestamp is not finite")]
    NonFiniteTimestamp,
    #[error("frame length {0} outside the accepted range")]
    BadLength(u64),
    #[error("stream ended inside a frame ({missing} bytes missing)")]
    Truncated { missing: usize },
}

/// Largest accepted stream frame body.
pub const MAX_FRAME_LEN: usize = 1 << 20;

/// Compact JSON with every object's keys sorted.
pub fn canonical_json(value: &Value) -> String {
    // serde_json's map is ordered by key unless `preserve_order` is enabled
    value.to_string()
}

impl EventEnvelope {
    pub fn new(seq: u64, timestamp: f64, topic: Topic, payload: Value) -> Self {
        Self {
            seq,
            timestamp,
            topic,
            payload,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("envelope serializes")
    }
}

/// Bare canonical JSON, as sent in one UDP datagram or one WebSocket text frame.
pub fn encode_event(env: &EventEnvelope) -> Result<Vec<u8>, MalformedEvent> {
    if !env.timestamp.is_finite() {
        return Err(MalformedEvent::NonFiniteTimestamp);
    }
    Ok(canonical_json(&env.to_value()).into_bytes())
}

pub fn decode_event(bytes: &[u8]) -> Result<EventEnvelope, MalformedEvent> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| MalformedEvent::Json(e.to_string()))?;
    let Value::Object(map) = &value else {
        return Err(MalformedEvent::Shape("top level is not an object".into()));
    };
    let expected = ["payload", "seq", "timestamp", "topic"];
    if map.len() != expected.len() || !expected.iter().all(|k| map.contains_key(*k)) {
        return Err(MalformedEvent::Shape("expected exactly seq, timestamp, topic, payload".into()));
    }
    let topic = map["topic"]
        .as_str()
        .ok_or_else(|| MalformedEvent::Shape("topic is not a string".into()))?
        .parse::<Topic>()?;
    let seq = map["seq"]
        .as_u64()
        .ok_or_else(|| MalformedEvent::Shape("seq is not an unsigned integer".into()))?;
    let timestamp = map["timestamp"]
        .as_f64()
        .ok_or_else(|| MalformedEvent::Shape("timestamp is not a number".into()))?;
    Ok(EventEnvelope {
        seq,
        timestamp,
        topic,
        payload: map["payload"].clone(),
    })
}

/// u32 little-endian length prefix followed by the canonical JSON.
pub fn encode_frame(env: &EventEnvelope) -> Result<Vec<u8>, MalformedEvent> {
    let body = encode_event(env)?;
    if body.len() > MAX_FRAME_LEN {
        return Err(MalformedEvent::BadLength(body.len() as u64));
    }
    let mut out = Vec::with_capacity(4 + body.len());
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.extend_from_slice(&body);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_compact() {
        let env = EventEnvelope::new(3, 1.5, Topic::Nav, json!({"z": 1, "a": {"y": 2, "b": [1, 2]}}));
        let text = String::from_utf8(encode_event(&env).unwrap()).unwrap();
        assert_eq!(
            text,
            r#"{"payload":{"a":{"b":[1,2],"y":2},"z":1},"seq":3,"timestamp":1.5,"topic":"nav"}"#
        );
    }

    #[test]
    fn empty_payload_round_trips() {
        let env = EventEnvelope::new(0, 0.0, Topic::Display, json!({}));
        assert_eq!(decode_event(&encode_event(&env).unwrap()).unwrap(), env);
        let env = EventEnvelope::new(1, 2.0, Topic::Command, Value::Null);
        assert_eq!(decode_event(&encode_event(&env).unwrap()).unwrap(), env);
    }

    #[test]
    fn utf8_label_round_trips() {
        let env = EventEnvelope::new(9, 0.25, Topic::Detection, json!({"labels": ["jalapeño"]}));
        let bytes = encode_event(&env).unwrap();
        assert!(std::str::from_utf8(&bytes).unwrap().contains("jalapeño"));
        assert_eq!(decode_event(&bytes).unwrap(), env);
    }

    #[test]
    fn rejects_bad_envelopes() {
        assert!(matches!(decode_event(b"nope"), Err(MalformedEvent::Json(_))));
        assert!(matches!(decode_event(b"[1]"), Err(MalformedEvent::Shape(_))));
        assert!(matches!(
            decode_event(br#"{"payload":1,"seq":1,"timestamp":1,"topic":"weather"}"#),
            Err(MalformedEvent::UnknownTopic(_))
        ));
        assert!(matches!(
            decode_event(br#"{"payload":1,"seq":-1,"timestamp":1,"topic":"nav"}"#),
            Err(MalformedEvent::Shape(_))
        ));
        assert!(matches!(
            decode_event(br#"{"payload":1,"seq":1,"timestamp":1,"topic":"nav","x":0}"#),
            Err(MalformedEvent::Shape(_))
        ));
        let env = EventEnvelope::new(0, f64::NAN, Topic::Nav, Value::Null);
        assert_eq!(encode_event(&env), Err(MalformedEvent::NonFiniteTimestamp));
    }

    #[test]
    fn frame_prefix_is_length() {
        let env = EventEnvelope::new(1, 1.0, Topic::Zone, json!([]));
        let f = encode_frame(&env).unwrap();
        let n = u32::from_le_bytes([f[0], f[1], f[2], f[3]]) as usize;
        assert_eq!(n, f.len() - 4);
        assert_eq!(f[4], b'{');
    }
}
