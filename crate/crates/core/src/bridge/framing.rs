//! Incremental decoder for length-prefixed envelope streams.

use super::envelope::{decode_event, EventEnvelope, MalformedEvent, MAX_FRAME_LEN};

/// Smallest possible body is `{}`.
const MIN_FRAME_LEN: usize = 2;

/// Feeds on arbitrary byte chunks and yields envelopes in order.
///
/// After a malformed frame the decoder rewinds to one byte past the bad
/// frame's start and scans for the next plausible header (a length in range
/// followed by `{`), so a truncated frame costs only itself.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    pos: usize,
    eof: bool,
    malformed: u64,
}

fn header_len(bytes: &[u8]) -> usize {
    u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        if self.pos > 0 && self.pos * 2 >= self.buf.len() {
            self.buf.drain(..self.pos);
            self.pos = 0;
        }
        self.buf.extend_from_slice(bytes);
    }

    /// Marks the end of input; a dangling partial frame then reports as truncated.
    pub fn finish(&mut self) {
        self.eof = true;
    }

    pub fn malformed_count(&self) -> u64 {
        self.malformed
    }

    pub fn buffered(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn plausible_at(&self, at: usize) -> bool {
        let rest = &self.buf[at..];
        if rest.len() < 4 {
            return false;
        }
        let n = header_len(rest);
        (MIN_FRAME_LEN..=MAX_FRAME_LEN).contains(&n) && rest.get(4).is_none_or(|b| *b == b'{')
    }

    /// Skips forward from `from` to the next plausible header, or to the
    /// last three bytes if none is found yet.
    fn resync(&mut self, from: usize) {
        let mut at = from;
        while at + 4 <= self.buf.len() {
            if self.plausible_at(at) {
                self.pos = at;
                return;
            }
            at += 1;
        }
        self.pos = if self.eof { self.buf.len() } else { at.min(self.buf.len()) };
    }

    fn fail(&mut self, start: usize, err: MalformedEvent) -> Option<Result<EventEnvelope, MalformedEvent>> {
        self.malformed += 1;
        self.resync(start + 1);
        Some(Err(err))
    }

    /// `None` means more input is needed (or the stream is exhausted).
    pub fn next_event(&mut self) -> Option<Result<EventEnvelope, MalformedEvent>> {
        let start = self.pos;
        let avail = self.buf.len() - start;
        if avail == 0 {
            return None;
        }
        if avail < 4 {
            if self.eof {
                self.pos = self.buf.len();
                self.malformed += 1;
                return Some(Err(MalformedEvent::Truncated { missing: 4 - avail }));
            }
            return None;
        }
        let n = header_len(&self.buf[start..]);
        if !(MIN_FRAME_LEN..=MAX_FRAME_LEN).contains(&n) {
            return self.fail(start, MalformedEvent::BadLength(n as u64));
        }
        // fail fast instead of waiting for a bogus length to fill up
        if avail > 4 && self.buf[start + 4] != b'{' {
            return self.fail(start, MalformedEvent::Shape("frame body does not start with an object".into()));
        }
        if avail < 4 + n {
            if self.eof {
                return self.fail(start, MalformedEvent::Truncated { missing: 4 + n - avail });
            }
            return None;
        }
        match decode_event(&self.buf[start + 4..start + 4 + n]) {
            Ok(env) => {
                self.pos = start + 4 + n;
                Some(Ok(env))
            }
            Err(e) => self.fail(start, e),
        }
    }

    /// Drains everything currently decodable.
    pub fn drain(&mut self) -> Vec<Result<EventEnvelope, MalformedEvent>> {
        std::iter::from_fn(|| self.next_event()).collect()
    }
}

/// Decodes a complete byte stream.
pub fn decode_stream(bytes: &[u8]) -> Vec<Result<EventEnvelope, MalformedEvent>> {
    let mut d = FrameDecoder::new();
    d.push(bytes);
    d.finish();
    d.drain()
}
