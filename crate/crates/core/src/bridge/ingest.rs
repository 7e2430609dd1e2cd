//! Receiving SPICE-TRK datagrams from the tracker.

use crate::tracking::{decode_pose_datagram, MalformedDatagram, PoseFrame};
use std::io::ErrorKind;
use std::net::{SocketAddr, UdpSocket};
use std::time::{Duration, Instant};

/// Largest datagram read in one go.
pub const MAX_DATAGRAM: usize = 65_536;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SourceError {
    #[error("socket closed")]
    SocketClosed,
    #[error("socket error: {0}")]
    Io(String),
}

/// Anything that yields whole datagrams.
pub trait DatagramSource {
    /// `Ok(None)` when nothing arrived before the source's poll interval.
    fn recv(&mut self, buf: &mut [u8]) -> Result<Option<usize>, SourceError>;
}

/// A bound UDP socket polled with a read timeout.
#[derive(Debug)]
pub struct UdpSource {
    socket: UdpSocket,
}

impl UdpSource {
    pub fn bind(addr: SocketAddr, poll: Duration) -> std::io::Result<Self> {
        let socket = UdpSocket::bind(addr)?;
        socket.set_read_timeout(Some(poll))?;
        Ok(Self { socket })
    }

    pub fn from_socket(socket: UdpSocket, poll: Duration) -> std::io::Result<Self> {
        socket.set_read_timeout(Some(poll))?;
        Ok(Self { socket })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.socket.local_addr()
    }
}

impl DatagramSource for UdpSource {
    fn recv(&mut self, buf: &mut [u8]) -> Result<Option<usize>, SourceError> {
        match self.socket.recv(buf) {
            Ok(n) => Ok(Some(n)),
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => Ok(None),
            Err(e) if e.kind() == ErrorKind::ConnectionReset => Err(SourceError::SocketClosed),
            Err(e) => Err(SourceError::Io(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IngestOutcome {
    Frame(PoseFrame),
    /// Sequence at or below the last accepted one.
    Stale { sequence: u64, last: u64 },
    Malformed(MalformedDatagram),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub accepted: u64,
    pub stale: u64,
    pub malformed: u64,
}

/// Decodes datagrams and keeps only those newer than the last accepted frame.
#[derive(Debug, Clone, Default)]
pub struct TrackerIngest {
    last_sequence: Option<u64>,
    stats: IngestStats,
}

impl TrackerIngest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    pub fn last_sequence(&self) -> Option<u64> {
        self.last_sequence
    }

    pub fn ingest(&mut self, datagram: &[u8]) -> IngestOutcome {
        let frame = match decode_pose_datagram(datagram) {
            Ok(f) => f,
            Err(e) => {
                self.stats.malformed += 1;
                return IngestOutcome::Malformed(e);
            }
        };
        if let Some(last) = self.last_sequence {
            if frame.sequence <= last {
                self.stats.stale += 1;
                return IngestOutcome::Stale {
                    sequence: frame.sequence,
                    last,
                };
            }
        }
        self.last_sequence = Some(frame.sequence);
        self.stats.accepted += 1;
        IngestOutcome::Frame(frame)
    }
}

/// Reads `source` until it closes or `keep_going` returns false, handing each
/// fresh frame to `sink` with its arrival instant.
pub fn ingest_tracker_stream<S, F, K>(source: &mut S, mut sink: F, mut keep_going: K) -> Result<IngestStats, SourceError>
where
    S: DatagramSource + ?Sized,
    F: FnMut(PoseFrame, Instant),
    K: FnMut() -> bool,
{
    let mut ingest = TrackerIngest::new();
    let mut buf = vec![0u8; MAX_DATAGRAM];
    while keep_going() {
        match source.recv(&mut buf) {
            Ok(Some(n)) => {
                let arrived = Instant::now();
                if let IngestOutcome::Frame(f) = ingest.ingest(&buf[..n]) {
                    sink(f, arrived);
                }
            }
            Ok(None) => {}
            Err(SourceError::SocketClosed) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(ingest.stats())
}

/// In-memory source for tests and replays; closes after the last datagram.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSource {
    datagrams: std::collections::VecDeque<Vec<u8>>,
}

impl ScriptedSource {
    pub fn new<I: IntoIterator<Item = Vec<u8>>>(datagrams: I) -> Self {
        Self {
            datagrams: datagrams.into_iter().collect(),
        }
    }
}

impl DatagramSource for ScriptedSource {
    fn recv(&mut self, buf: &mut [u8]) -> Result<Option<usize>, SourceError> {
        let d = self.datagrams.pop_front().ok_or(SourceError::SocketClosed)?;
        let n = d.len().min(buf.len());
        buf[..n].copy_from_slice(&d[..n]);
        Ok(Some(n))
    }
}
