//! Stop counting from a session's attention events.

/// Attention events closer together than this belong to the same stop.
pub const STOP_GAP_SECS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttentionKind {
    /// A step-navigation event from the dial.
    Nav,
    /// A manual "looked at the recipe" annotation.
    Look,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionEvent {
    pub timestamp: f64,
    pub kind: AttentionKind,
}

/// Counts maximal clusters of attention events whose consecutive gaps are at
/// most [`STOP_GAP_SECS`]. Timestamps must be non-decreasing.
pub fn count_stops(events: &[AttentionEvent]) -> usize {
    let mut stops = 0;
    let mut last: Option<f64> = None;
    for ev in events {
        match last {
            Some(prev) if ev.timestamp - prev <= STOP_GAP_SECS => {}
            _ => stops += 1,
        }
        last = Some(ev.timestamp);
    }
    stops
}
